"""Online estimation of the identifiable-subspace projector.

The estimator integrates a forgetting-factor information matrix Q alongside a
smoothed projector estimate P:

    dQ/dt = -beta Q + phi phi',                        Q(0) = 0
    dP/dt = -gamma P + gamma I - gamma^2 Pbar,         P(0) = 0
    dPbar/dt = -gamma Pbar + Nu_bar Nu_bar',           Pbar(0) = 0

where Nu_bar holds an orthonormal kernel basis of Q, refreshed only at
multiples of the hold period delta (eigenspaces of a continuously varying
matrix need not vary continuously, so the basis is sampled and held; the
smoothing stage then yields a continuously differentiable P).  P converges
exponentially to the projector onto the identifiable subspace, with spectrum
confined to [0, 1].

``Pbar`` is the exponentially weighted integral of the held projector
complement written as an auxiliary ODE state: O(1) memory instead of a
history convolution, and exactly equivalent (a tested invariant).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .regression import fix_signs


@dataclass(frozen=True)
class SubspaceHyperParams:
    """Gains of the subspace estimator.

    beta: forgetting factor shared with the learning cost.
    gamma: smoothing gain; the projector error decay rate grows with it.
    delta: sample-and-hold period for the kernel basis (must be an exact
        integer multiple of the integrator step).
    rank_tol: relative singular-value threshold for kernel extraction.
    """

    beta: float
    gamma: float
    delta: float
    rank_tol: float = 1e-8

    def __post_init__(self):
        for name in ("beta", "gamma", "delta", "rank_tol"):
            if getattr(self, name) <= 0:
                raise ValueError(f"{name} must be strictly positive")

    def steps_per_hold(self, h: float) -> int:
        ratio = self.delta / h
        if abs(ratio - round(ratio)) > 1e-9:
            raise ValueError(
                f"delta = {self.delta} is not an integer multiple of step {h}"
            )
        return round(ratio)


@dataclass
class SubspaceEstimatorState:
    """State of the projector estimator at time t.

    Nu_bar is the held kernel basis (refreshes at multiples of delta only);
    k is the hold index, with t in [k delta, (k+1) delta).
    """

    Q: np.ndarray
    P: np.ndarray
    Pbar: np.ndarray
    Nu_bar: np.ndarray
    t: float = 0.0
    k: int = 0

    @property
    def n(self) -> int:
        return self.Q.shape[0]

    @property
    def held_complement(self) -> np.ndarray:
        """Nu_bar Nu_bar', the held non-identifiable projector."""
        if self.Nu_bar.shape[1] == 0:
            return np.zeros((self.n, self.n))
        return self.Nu_bar @ self.Nu_bar.T

    def p_dot(self, hp: SubspaceHyperParams) -> np.ndarray:
        """Exact dP/dt from the right-hand side (never finite differences)."""
        g = hp.gamma
        return -g * self.P + g * np.eye(self.n) - g * g * self.Pbar


def subspace_init(
    n: int, hp: SubspaceHyperParams, h: float | None = None
) -> SubspaceEstimatorState:
    """Zero initial state; the held kernel basis starts as the full space
    (the kernel of Q(0) = 0 is all of R^n)."""
    if n < 1:
        raise ValueError("dimension must be >= 1")
    if h is not None:
        hp.steps_per_hold(h)  # raises if delta is off the step grid
    z = np.zeros((n, n))
    return SubspaceEstimatorState(
        Q=z.copy(), P=z.copy(), Pbar=z.copy(), Nu_bar=np.eye(n), t=0.0, k=0
    )


def kernel_basis(Q: np.ndarray, rank_tol: float) -> np.ndarray:
    """Orthonormal kernel basis of a symmetric PSD matrix.

    Right singular vectors whose singular values fall at or below
    rank_tol * max(sigma_max, 1); deterministic sign convention.  May be
    empty (n x 0).
    """
    Q = np.asarray(Q, dtype=float)
    scale = max(1.0, np.abs(Q).max())
    if np.abs(Q - Q.T).max() > 1e-10 * scale:
        raise ValueError("kernel_basis requires a symmetric matrix")
    Qs = 0.5 * (Q + Q.T)
    _, s, Vt = np.linalg.svd(Qs)
    s_max = max(float(s[0]) if s.size else 0.0, 1.0)
    keep = s <= rank_tol * s_max
    return fix_signs(Vt[keep].T)


def subspace_rhs(Q, Pbar, P, held_complement, phi, beta, gamma):
    """Derivatives of the (Q, Pbar, P) blocks for a given regressor sample."""
    n = Q.shape[0]
    dQ = -beta * Q + np.outer(phi, phi)
    dPbar = -gamma * Pbar + held_complement
    dP = -gamma * P + gamma * np.eye(n) - gamma * gamma * Pbar
    return dQ, dPbar, dP


def _symmetrize(M):
    return 0.5 * (M + M.T)


def subspace_step(
    state: SubspaceEstimatorState,
    phi_of_t,
    h: float,
    hp: SubspaceHyperParams,
) -> SubspaceEstimatorState:
    """Advance one RK4 step with a stage-exact regressor evaluator.

    The held basis refreshes from Q exactly when the clock sits on a
    multiple of delta (before the step that leaves it), so the hold
    breakpoints land on grid nodes.
    """
    per = hp.steps_per_hold(h)
    step_idx = round(state.t / h)
    if abs(state.t - step_idx * h) > 1e-9 * max(1.0, abs(state.t)):
        raise ValueError("state clock is off the step grid")

    Nu_bar, k = state.Nu_bar, state.k
    if step_idx >= (k + 1) * per:
        Nu_bar = kernel_basis(state.Q, hp.rank_tol)
        k = step_idx // per
    NN = (
        Nu_bar @ Nu_bar.T
        if Nu_bar.shape[1]
        else np.zeros((state.n, state.n))
    )

    def f(t, blocks):
        Q, Pbar, P = blocks
        phi = np.asarray(phi_of_t(t), dtype=float)
        if not np.all(np.isfinite(phi)):
            raise ValueError(f"regressor non-finite at t = {t:.6f}")
        return subspace_rhs(Q, Pbar, P, NN, phi, hp.beta, hp.gamma)

    t = state.t
    b0 = (state.Q, state.Pbar, state.P)
    k1 = f(t, b0)
    k2 = f(t + 0.5 * h, tuple(b + 0.5 * h * d for b, d in zip(b0, k1)))
    k3 = f(t + 0.5 * h, tuple(b + 0.5 * h * d for b, d in zip(b0, k2)))
    k4 = f(t + h, tuple(b + h * d for b, d in zip(b0, k3)))
    new = [
        _symmetrize(b + (h / 6.0) * (d1 + 2 * d2 + 2 * d3 + d4))
        for b, d1, d2, d3, d4 in zip(b0, k1, k2, k3, k4)
    ]
    return SubspaceEstimatorState(
        Q=new[0], Pbar=new[1], P=new[2], Nu_bar=Nu_bar, t=(step_idx + 1) * h, k=k
    )


def subspace_error(P: np.ndarray, N_d: np.ndarray) -> float:
    """Induced 2-norm of P - N_d N_d'."""
    return float(np.linalg.norm(P - N_d @ N_d.T, 2))


def identifiable_factor(P: np.ndarray, eig_threshold: float = 0.5) -> np.ndarray:
    """Full-rank factor P ~ P_d P_d' once P's spectrum has settled near {0, 1}.

    Columns are eigenvectors with eigenvalue above the threshold, scaled by
    the square root of the eigenvalue; may be empty.
    """
    if not 0.0 < eig_threshold < 1.0:
        raise ValueError("eig_threshold must lie in (0, 1)")
    lam, V = np.linalg.eigh(_symmetrize(np.asarray(P, dtype=float)))
    order = np.argsort(lam)[::-1]
    lam, V = lam[order], V[:, order]
    keep = lam > eig_threshold
    return fix_signs(V[:, keep] * np.sqrt(lam[keep]))
