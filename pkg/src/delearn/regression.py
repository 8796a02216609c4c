"""Regression models, regressor signals, windowed Gram matrices, and the
ground-truth excitation analysis used by diagnostics and acceptance tests.

A regressor phi(t) is "persistently exciting" when its windowed Gram matrix
is uniformly positive definite, and "deficiently exciting of order q" when
that Gram is sandwiched between two positive-semidefinite matrices of rank
n - q.  The analysis here recovers q together with orthonormal bases of the
identifiable subspace (where parameters can be learned) and its orthogonal
complement (where the regressor carries no information).
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .simkit import NoiseChannel


class EvaluationError(RuntimeError):
    """A regressor or measurement produced a non-finite sample."""


class ExcitationAnalysisError(RuntimeError):
    """Windows disagree on numerical rank: the constant-rank premise of the
    deficiency definition does not hold on this horizon."""


class RegressorSignal:
    """Deterministic map t -> phi(t) in R^n, assumed smooth and bounded.

    ``func`` may be scalar (t -> (n,)) or vectorized ((m,) -> (m, n)); calls
    are normalized either way.
    """

    def __init__(self, dim: int, func, name: str = "", vectorized: bool = True):
        if dim < 1:
            raise ValueError("dimension must be a positive integer")
        self.dim = int(dim)
        self._func = func
        self.name = name
        self._vectorized = vectorized

    def __call__(self, t):
        t_arr = np.asarray(t, dtype=float)
        if t_arr.ndim == 0:
            out = np.asarray(
                self._func(np.atleast_1d(t_arr))[0] if self._vectorized
                else self._func(float(t_arr)),
                dtype=float,
            )
            return out.reshape(self.dim)
        if self._vectorized:
            return np.asarray(self._func(t_arr), dtype=float).reshape(-1, self.dim)
        return np.array([self._func(float(ti)) for ti in t_arr], dtype=float)

    def check_bounded(self, horizon: float, n_samples: int = 2000) -> float:
        """Sample on [0, horizon]; raise on non-finite values, return sup norm."""
        ts = np.linspace(0.0, horizon, n_samples)
        vals = self(ts)
        if not np.all(np.isfinite(vals)):
            bad = ts[~np.all(np.isfinite(vals), axis=1)][0]
            raise EvaluationError(f"regressor non-finite at t = {bad:.6f}")
        return float(np.linalg.norm(vals, axis=1).max())


class SinusoidRegressor(RegressorSignal):
    """Sum-of-sinusoids regressor, one term list per channel.

    phi_i(t) = sum_j amps[i, j] * sin(freqs[i, j] * t + phases[i, j])

    The (amps, freqs, phases) arrays double as the declarative description
    used by experiment configs and by the compiled steppers.
    """

    def __init__(self, amps, freqs, phases, name: str = ""):
        amps = np.atleast_2d(np.asarray(amps, dtype=float))
        freqs = np.atleast_2d(np.asarray(freqs, dtype=float))
        phases = np.atleast_2d(np.asarray(phases, dtype=float))
        if not (amps.shape == freqs.shape == phases.shape):
            raise ValueError("amps, freqs, phases must share shape (n, terms)")
        self.amps, self.freqs, self.phases = amps, freqs, phases

        def func(ts):
            # (m, n, terms) -> summed over terms
            arg = freqs[None, :, :] * ts[:, None, None] + phases[None, :, :]
            return np.sum(amps[None, :, :] * np.sin(arg), axis=2)

        super().__init__(amps.shape[0], func, name=name, vectorized=True)

    def to_config(self) -> dict:
        return {
            "type": "sinusoid",
            "amps": self.amps.tolist(),
            "freqs": self.freqs.tolist(),
            "phases": self.phases.tolist(),
        }

    @classmethod
    def from_config(cls, cfg: dict) -> "SinusoidRegressor":
        if cfg.get("type") != "sinusoid":
            raise ValueError(f"not a sinusoid regressor config: {cfg.get('type')!r}")
        return cls(cfg["amps"], cfg["freqs"], cfg["phases"], name=cfg.get("name", ""))


@dataclass
class RegressionModel:
    """Scalar measurement channel z(t) = phi(t)' theta + eps(t).

    ``theta_true`` is carried for diagnostics only; estimators never read it.
    """

    regressor: RegressorSignal
    theta_true: np.ndarray
    noise: NoiseChannel = field(default_factory=NoiseChannel)

    def __post_init__(self):
        self.theta_true = np.asarray(self.theta_true, dtype=float)
        if self.theta_true.shape != (self.regressor.dim,):
            raise ValueError("theta_true length must match regressor dimension")

    def measure(self, t, eps=0.0):
        """Noiseless-plus-offset measurement: phi(t)' theta + eps."""
        phi = self.regressor(t)
        return phi @ self.theta_true + eps


@dataclass
class ExcitationCertificate:
    """Numerical witness of deficiency of excitation of order q on a window T.

    ``N_d`` spans the identifiable subspace, ``N_u`` its orthogonal
    complement; ``Phi_a <= Gram <= Phi_b`` realize the two bounds, both of
    rank n - q under the declared rank tolerance.
    """

    T: float
    q: int
    Phi_a: np.ndarray
    Phi_b: np.ndarray
    N_d: np.ndarray
    N_u: np.ndarray
    rank_tol: float = 1e-8

    @property
    def n(self) -> int:
        return self.N_d.shape[0]

    @property
    def projector(self) -> np.ndarray:
        """Identifiable-subspace projector N_d N_d'."""
        return self.N_d @ self.N_d.T


def fix_signs(V: np.ndarray) -> np.ndarray:
    """Make the first nonzero entry of each column positive (reproducible
    bases across runs and platforms)."""
    V = np.array(V, copy=True)
    for j in range(V.shape[1]):
        col = V[:, j]
        nz = np.nonzero(np.abs(col) > 1e-12 * max(1.0, np.abs(col).max()))[0]
        if nz.size and col[nz[0]] < 0:
            V[:, j] = -col
    return V


def gram_window(regressor: RegressorSignal, t0: float, T: float, quad_step: float):
    """Composite-Simpson approximation of the windowed Gram matrix
    integral_{t0}^{t0+T} phi phi' dtau; symmetric PSD by construction.
    """
    if T <= 0:
        raise ValueError("window length T must be positive")
    if quad_step <= 0 or quad_step > T / 10:
        raise ValueError("quad_step must satisfy 0 < quad_step <= T/10")
    m = int(np.ceil(T / quad_step))
    m += m % 2  # Simpson needs an even interval count
    ts = t0 + np.linspace(0.0, T, m + 1)
    samples = regressor(ts)
    if not np.all(np.isfinite(samples)):
        bad = ts[~np.all(np.isfinite(samples), axis=1)][0]
        raise EvaluationError(f"regressor non-finite at t = {bad:.6f}")
    weights = np.ones(m + 1)
    weights[1:-1:2] = 4.0
    weights[2:-1:2] = 2.0
    G = np.einsum("k,ki,kj->ij", weights, samples, samples) * (T / m / 3.0)
    G = 0.5 * (G + G.T)
    lam_min = np.linalg.eigvalsh(G)[0]
    if lam_min < -1e-10 * max(1.0, np.linalg.norm(G, 2)):
        raise EvaluationError(f"windowed Gram not PSD (lambda_min = {lam_min:.3e})")
    return G


def _truncated(G: np.ndarray, rank: int) -> np.ndarray:
    """Closest PSD matrix of the given rank (top eigen-pairs retained)."""
    lam, V = np.linalg.eigh(G)
    order = np.argsort(lam)[::-1]
    lam, V = lam[order[:rank]], V[:, order[:rank]]
    lam = np.maximum(lam, 0.0)
    return (V * lam) @ V.T


def excitation_analysis(
    regressor: RegressorSignal,
    T: float,
    horizon: float,
    rank_tol: float = 1e-8,
    quad_step: float = 1e-3,
) -> ExcitationCertificate:
    """Ground-truth excitation oracle over contiguous windows [kT, (k+1)T].

    The order q is read off the spectrum of the window-averaged Gram; the
    identifiable/non-identifiable bases are its singular-vector blocks.  The
    lower bound is realized by the window whose (n-q)-th singular value is
    smallest, the upper bound by the window of largest trace, both truncated
    to rank n - q.  Windows that disagree on numerical rank abort the
    analysis, since the deficiency order is then not constant on the horizon.
    """
    if horizon < 5 * T:
        raise ValueError("horizon must cover at least five windows (horizon >= 5T)")
    n = regressor.dim
    n_windows = int(np.floor(horizon / T + 1e-12))
    grams = [gram_window(regressor, k * T, T, quad_step) for k in range(n_windows)]

    G_avg = np.mean(grams, axis=0)
    U, s, _ = np.linalg.svd(G_avg)
    s_max = max(s[0], 1e-300)
    rank = int(np.sum(s > rank_tol * s_max))
    q = n - rank

    window_ranks = []
    for G in grams:
        sw = np.linalg.svd(G, compute_uv=False)
        window_ranks.append(int(np.sum(sw > rank_tol * max(sw[0], 1e-300))))
    if any(r != rank for r in window_ranks):
        raise ExcitationAnalysisError(
            f"window ranks {window_ranks} are not constant (average-Gram rank {rank}); "
            "the regressor violates the constant-rank premise on this horizon"
        )

    N_d = fix_signs(U[:, :rank])
    N_u = fix_signs(U[:, rank:])

    if rank > 0:
        kth_sv = [np.linalg.svd(G, compute_uv=False)[rank - 1] for G in grams]
        i_lo = int(np.argmin(kth_sv))
    else:
        i_lo = 0
    i_hi = int(np.argmax([np.trace(G) for G in grams]))
    Phi_a = _truncated(grams[i_lo], rank)
    Phi_b = _truncated(grams[i_hi], rank)

    return ExcitationCertificate(
        T=T, q=q, Phi_a=Phi_a, Phi_b=Phi_b, N_d=N_d, N_u=N_u, rank_tol=rank_tol
    )


def certificate_window_check(
    cert: ExcitationCertificate,
    regressor: RegressorSignal,
    starts,
    quad_step: float = 1e-3,
    tol: float = 1e-8,
):
    """Verify Phi_a <= Gram(t, T) <= Phi_b at the given window starts.

    Returns the worst (most negative) eigenvalue margins (lower, upper).
    """
    worst_lo = np.inf
    worst_hi = np.inf
    for t0 in starts:
        G = gram_window(regressor, float(t0), cert.T, quad_step)
        worst_lo = min(worst_lo, float(np.linalg.eigvalsh(G - cert.Phi_a)[0]))
        worst_hi = min(worst_hi, float(np.linalg.eigvalsh(cert.Phi_b - G)[0]))
    return worst_lo, worst_hi, (worst_lo >= -tol and worst_hi >= -tol)
