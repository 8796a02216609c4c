"""System-identification applications: observable-canonical plants, stable
measurement filters, and the algebraic representation that turns an LTI
identification problem into a linear regression.

A plant in observable canonical form

    dx/dt = F x + b u (+ g * coupling),   y = h1' x,

with F carrying the unknown vector f in its first column, admits the exact
rewriting

    z := y + h1' Pi_y w = phi' theta + h1' e^{Wt} x(0),
    phi' = h1' [Pi_u  Pi_y (Pi_c)],   theta = col(b, f (, g)),

where W is any stable matrix of the same canonical shape built from a design
vector w, and the Pi blocks are reconstructed from the low-order filter
states r_u, r_y (, r_c) through the observability matrix of (W, h1').  The
initial-condition term decays at the rate of W and plays the role of the
bounded measurement disturbance in the regression model.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .simkit import NoiseChannel, hurwitz_check
from .regression import SinusoidRegressor


class PlantDesignError(ValueError):
    """Construction-time failure: unstable filter matrix or singular
    observability matrix."""


def canonical_matrix(first_col) -> np.ndarray:
    """Observable-canonical companion matrix: given first column c, the
    remaining columns are the shifted identity."""
    c = np.asarray(first_col, dtype=float)
    n = c.shape[0]
    M = np.zeros((n, n))
    M[:, 0] = c
    M[: n - 1, 1:] = np.eye(n - 1)
    return M


@dataclass
class CanonicalPlant:
    """Observable-canonical LTI plant together with its filter design.

    f, b (and optionally g for coupled networks) are the unknowns the
    regression recovers; w shapes the stable filter matrix W.  H_W is the
    observability-style matrix col(h1', h1'W, ..., h1'W^{n_F-1}).
    """

    f: np.ndarray
    b: np.ndarray
    w: np.ndarray
    g: np.ndarray | None = None
    F: np.ndarray = field(init=False)
    W: np.ndarray = field(init=False)
    H_W: np.ndarray = field(init=False)

    def __post_init__(self):
        self.f = np.asarray(self.f, dtype=float)
        self.b = np.asarray(self.b, dtype=float)
        self.w = np.asarray(self.w, dtype=float)
        if self.g is not None:
            self.g = np.asarray(self.g, dtype=float)
        n = self.f.shape[0]
        if self.b.shape != (n,) or self.w.shape != (n,):
            raise PlantDesignError("f, b, w must share one dimension")
        if self.g is not None and self.g.shape != (n,):
            raise PlantDesignError("g must match the state dimension")
        self.F = canonical_matrix(self.f)
        self.W = canonical_matrix(self.w)
        rep = hurwitz_check(self.W)
        if not rep.is_hurwitz:
            bad = np.linalg.eigvals(self.W)
            raise PlantDesignError(
                f"filter matrix W is not Hurwitz (eigenvalues {bad})"
            )
        H = np.zeros((n, n))
        row = self.h1.copy()
        for j in range(n):
            H[j] = row
            row = row @ self.W
        self.H_W = H
        scale = max(1.0, np.abs(H).max() ** n)
        if abs(np.linalg.det(H)) <= 1e-12 * scale:
            raise PlantDesignError("observability matrix H_W is singular")

    @property
    def n_F(self) -> int:
        return self.f.shape[0]

    @property
    def n_params(self) -> int:
        return (3 if self.g is not None else 2) * self.n_F

    @property
    def h1(self) -> np.ndarray:
        e = np.zeros(self.n_F)
        e[0] = 1.0
        return e

    @property
    def theta(self) -> np.ndarray:
        """Ground-truth regression parameters col(b, f(, g))."""
        parts = [self.b, self.f] + ([self.g] if self.g is not None else [])
        return np.concatenate(parts)


def make_plant(f, b, w, g=None) -> CanonicalPlant:
    """Assemble and validate a canonical plant; raises PlantDesignError when
    W is unstable or H_W is singular."""
    return CanonicalPlant(f=f, b=b, w=w, g=g)


def plant_step(plant: CanonicalPlant, x, u: float, coupling_input: float, h: float):
    """One RK4 step of dx/dt = F x + b u (+ g * coupling); inputs held over
    the step.  Returns (x_next, y_next) with the noise-free output; any
    measurement noise is injected downstream, never into the state."""
    x = np.asarray(x, dtype=float)
    drive = plant.b * u
    if plant.g is not None:
        drive = drive + plant.g * coupling_input
    elif coupling_input != 0.0:
        raise ValueError("plant has no coupling vector g")
    F = plant.F

    def f(v):
        return F @ v + drive

    k1 = f(x)
    k2 = f(x + 0.5 * h * k1)
    k3 = f(x + 0.5 * h * k2)
    k4 = f(x + h * k3)
    x_next = x + (h / 6.0) * (k1 + 2 * k2 + 2 * k3 + k4)
    if not np.all(np.isfinite(x_next)):
        raise ValueError("plant state turned non-finite")
    return x_next, float(x_next[0])


@dataclass
class FilterBank:
    """States of the stable measurement filters (all start at zero):
    r_u driven by the input, r_y by the measured output, r_c by the
    measured coupling sum."""

    r_u: np.ndarray
    r_y: np.ndarray
    r_c: np.ndarray

    @classmethod
    def zeros(cls, n_F: int) -> "FilterBank":
        return cls(np.zeros(n_F), np.zeros(n_F), np.zeros(n_F))


def filter_step(
    bank: FilterBank, W, u: float, y: float, y_coupled: float, h: float
) -> FilterBank:
    """RK4 step of dr/dt = W' r + h1 * s for the three filter channels,
    inputs held over the step."""
    W = np.asarray(W, dtype=float)
    Wt = W.T
    n = W.shape[0]
    h1 = np.zeros(n)
    h1[0] = 1.0

    def advance(r, s):
        def f(v):
            return Wt @ v + h1 * s

        k1 = f(r)
        k2 = f(r + 0.5 * h * k1)
        k3 = f(r + 0.5 * h * k2)
        k4 = f(r + h * k3)
        return r + (h / 6.0) * (k1 + 2 * k2 + 2 * k3 + k4)

    return FilterBank(
        r_u=advance(bank.r_u, u),
        r_y=advance(bank.r_y, y),
        r_c=advance(bank.r_c, y_coupled),
    )


def pi_matrix(r: np.ndarray, plant: CanonicalPlant) -> np.ndarray:
    """Reconstruct a Pi block from its filter state:
    Pi = H_W^{-1} col(r', r'W, ..., r'W^{n_F-1})."""
    n = plant.n_F
    M = np.zeros((n, n))
    row = np.asarray(r, dtype=float).copy()
    for j in range(n):
        M[j] = row
        row = row @ plant.W
    return np.linalg.solve(plant.H_W, M)


def regressor_row(bank: FilterBank, plant: CanonicalPlant, y: float = 0.0):
    """Regression pair (phi, z) at the current filter states.

    phi' = h1' [Pi_u Pi_y] for a single plant, with a Pi_c block appended
    when the plant carries a coupling vector; z = y + h1' Pi_y w.
    """
    h1 = plant.h1
    Pi_u = pi_matrix(bank.r_u, plant)
    Pi_y = pi_matrix(bank.r_y, plant)
    parts = [Pi_u.T @ h1, Pi_y.T @ h1]
    if plant.g is not None:
        parts.append(pi_matrix(bank.r_c, plant).T @ h1)
    phi = np.concatenate(parts)
    z = y + float(h1 @ Pi_y @ plant.w)
    return phi, z


# ---------------------------------------------------------------------------
# Application wiring
# ---------------------------------------------------------------------------


@dataclass
class SysIdApp:
    """A ready-to-integrate identification experiment.

    For a single plant (``n_nodes == 1``) the coupling matrix is zero and the
    communication edge list empty.  ``input_amps/freqs/phases`` have one row
    per node (exploration inputs are sums of sinusoids).  ``noise`` carries
    the per-run measurement-noise template.
    """

    name: str
    plant: CanonicalPlant
    n_nodes: int
    input_amps: np.ndarray
    input_freqs: np.ndarray
    input_phases: np.ndarray
    coupling: np.ndarray
    comm_edges: tuple = ()
    noise: NoiseChannel = field(default_factory=NoiseChannel)
    # estimator gains, one entry per node
    alpha: np.ndarray = None
    beta: np.ndarray = None
    gamma: np.ndarray = None
    delta: np.ndarray = None
    kappa: np.ndarray = None
    eta_id: np.ndarray = None
    eta_iu: np.ndarray = None
    rank_tol: float = 1e-8
    cert_rank_tol: float = 1e-8
    theta0: np.ndarray = None  # (n_nodes, n) priors

    @property
    def theta(self) -> np.ndarray:
        return self.plant.theta

    @property
    def n(self) -> int:
        return self.plant.n_params

    def network_matrix(self) -> np.ndarray:
        """Stacked closed-loop plant matrix I (x) F + C (x) (g h1')."""
        F, h1 = self.plant.F, self.plant.h1
        g = self.plant.g if self.plant.g is not None else np.zeros(self.plant.n_F)
        return np.kron(np.eye(self.n_nodes), F) + np.kron(
            self.coupling, np.outer(g, h1)
        )

    def steady_regressors(self) -> list[SinusoidRegressor]:
        """Closed-form periodic steady-state regressor per node.

        Obtained in the frequency domain from the interconnected plant and
        filter responses; this is the settled regressor the excitation
        analysis certifies (the zero-initial-condition warm-up decays at the
        plant/filter rates and carries no steady excitation).
        """
        N, nF, n = self.n_nodes, self.plant.n_F, self.n
        Fnet = self.network_matrix()
        W, b, h1 = self.plant.W, self.plant.b, self.plant.h1
        omegas = sorted(set(self.input_freqs.ravel()) - {0.0})
        coeffs = np.zeros((N, n, len(omegas)), dtype=complex)
        for m, om in enumerate(omegas):
            forcing = np.zeros(N * nF, dtype=complex)
            ru_amp = np.zeros(N, dtype=complex)
            Gw = np.linalg.solve(1j * om * np.eye(nF) - W.T, h1)
            for i in range(N):
                for a, fr, ph in zip(
                    self.input_amps[i], self.input_freqs[i], self.input_phases[i]
                ):
                    if fr == om:
                        c = a * np.exp(1j * ph)
                        forcing[i * nF : (i + 1) * nF] += c * b
                        ru_amp[i] += c
            x_resp = np.linalg.solve(1j * om * np.eye(N * nF) - Fnet, forcing)
            y_resp = x_resp[0::nF]
            yc_resp = self.coupling @ y_resp
            for i in range(N):
                coeffs[i, :nF, m] = Gw * ru_amp[i]
                coeffs[i, nF : 2 * nF, m] = Gw * y_resp[i]
                if n == 3 * nF:
                    coeffs[i, 2 * nF :, m] = Gw * yc_resp[i]
        out = []
        for i in range(N):
            amps = np.abs(coeffs[i])
            phases = np.angle(coeffs[i])
            freqs = np.tile(np.asarray(omegas, dtype=float), (n, 1))
            out.append(
                SinusoidRegressor(amps, freqs, phases, name=f"{self.name}-node{i + 1}")
            )
        return out

    def certificates(self, T: float = 2 * np.pi, n_windows: int = 6):
        """Excitation certificates of the steady-state regressors, one per
        node, at the preset certificate tolerance."""
        from .regression import excitation_analysis

        return [
            excitation_analysis(
                reg, T, n_windows * T, rank_tol=self.cert_rank_tol
            )
            for reg in self.steady_regressors()
        ]


def build_application(preset, **overrides) -> SysIdApp:
    """Construct a preset experiment (``app1_k1``, ``app1_k3``, ``app2``) or
    a custom one by passing explicit parameters as overrides."""
    from . import presets

    if isinstance(preset, SysIdApp):
        return preset
    return presets.application(preset, **overrides)
