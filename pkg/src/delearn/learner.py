"""Least-squares-optimal online parameter learning with forgetting.

The learner minimizes, at every instant, the exponentially discounted cost

    J(v) = 1/2 int_0^t e^{-beta (t-s)} (z(s) - v' phi(s))^2 ds
           + alpha/2 e^{-beta t} ||v - theta0||^2

but only within the identifiable subspace delivered by the companion
subspace estimator; outside it the estimate stays pinned to the prior.  The
gain matrix Omega is propagated by a Riccati-type flow and equals, in exact
arithmetic, the inverse of

    Psi_kappa = P Q P + alpha e^{-beta t} P + kappa (I - P),

which is the invariant the acceptance suite monitors.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .regression import ExcitationCertificate
from .subspace import SubspaceEstimatorState, SubspaceHyperParams, identifiable_factor


class LearnerNumericsError(RuntimeError):
    """Omega lost positive definiteness: the integrator step is too large
    for the current gains (in exact arithmetic Omega stays positive
    definite for all time)."""


@dataclass(frozen=True)
class LearnerHyperParams:
    """alpha: prior trust; beta: forgetting factor (shared with the subspace
    estimator); kappa: gain regularization off the identifiable subspace;
    theta0_hat: prior estimate."""

    alpha: float
    beta: float
    kappa: float
    theta0_hat: np.ndarray

    def __post_init__(self):
        for name in ("alpha", "beta", "kappa"):
            if getattr(self, name) <= 0:
                raise ValueError(f"{name} must be strictly positive")
        object.__setattr__(
            self, "theta0_hat", np.asarray(self.theta0_hat, dtype=float)
        )


@dataclass
class LearnerState:
    theta_d_hat: np.ndarray
    varphi: np.ndarray
    Omega: np.ndarray
    t: float = 0.0

    @property
    def n(self) -> int:
        return self.theta_d_hat.shape[0]


def learner_init(n: int, hp: LearnerHyperParams) -> LearnerState:
    """theta_d = 0, varphi = alpha * theta0, Omega = I / kappa."""
    if hp.theta0_hat.shape != (n,):
        raise ValueError("theta0_hat length must match the problem dimension")
    return LearnerState(
        theta_d_hat=np.zeros(n),
        varphi=hp.alpha * hp.theta0_hat.copy(),
        Omega=np.eye(n) / hp.kappa,
        t=0.0,
    )


def r_matrix(P, Pdot, Q, phi, t, hp: LearnerHyperParams) -> np.ndarray:
    """Gain-shaping matrix

    R = P phi phi' P + kappa beta (I - P) + Pdot Q P + P Q Pdot
        + (alpha e^{-beta t} - kappa) Pdot,

    symmetrized after assembly.
    """
    n = P.shape[0]
    Pphi = P @ phi
    PdQP = (Pdot @ Q) @ P
    R = (
        np.outer(Pphi, Pphi)
        + hp.kappa * hp.beta * (np.eye(n) - P)
        + PdQP
        + PdQP.T
        + (hp.alpha * np.exp(-hp.beta * t) - hp.kappa) * Pdot
    )
    return 0.5 * (R + R.T)


def learner_rhs(theta_d, varphi, Omega, P, Pdot, Q, z, phi, t, hp):
    """Derivatives of the learner blocks for given subspace/measurement values."""
    R = r_matrix(P, Pdot, Q, phi, t, hp)
    d_theta_d = -(Omega @ (R @ theta_d - z * (P @ phi) - Pdot @ varphi))
    d_varphi = -hp.beta * varphi + z * phi
    d_Omega = hp.beta * Omega - (Omega @ R) @ Omega
    return d_theta_d, d_varphi, d_Omega


def check_omega(Omega: np.ndarray) -> None:
    """Cholesky-based positive-definiteness monitor."""
    try:
        np.linalg.cholesky(0.5 * (Omega + Omega.T))
    except np.linalg.LinAlgError:
        raise LearnerNumericsError(
            "Omega lost positive definiteness; reduce the integrator step"
        ) from None


def learner_step(
    state: LearnerState,
    sub: SubspaceEstimatorState,
    z: float,
    phi: np.ndarray,
    h: float,
    hp: LearnerHyperParams,
    sub_hp: SubspaceHyperParams,
) -> LearnerState:
    """One fused RK4 step of the learner blocks.

    The measurement pair (z, phi) is held over the step.  The companion
    subspace state is NOT mutated here, but its (P, Pdot, Q) view is
    propagated through the same RK4 stage chain it would follow under the
    held regressor, so the learner stages see stage-consistent values (the
    joint discretization the gain identity Omega = Psi_kappa^{-1} relies
    on).  Advance the companion with ``subspace_step`` on the same clock.
    Omega is re-symmetrized after the step and monitored for positive
    definiteness.
    """
    phi = np.asarray(phi, dtype=float)
    n = state.n
    beta_s, gamma_s = sub_hp.beta, sub_hp.gamma
    NN = sub.held_complement
    eye = np.eye(n)

    def f_sub(blocks):
        Q, Pbar, P = blocks
        dQ = -beta_s * Q + np.outer(phi, phi)
        dPbar = -gamma_s * Pbar + NN
        dP = -gamma_s * P + gamma_s * eye - gamma_s**2 * Pbar
        return dQ, dPbar, dP

    # subspace RK4 stage chain under the held regressor
    s1 = (sub.Q, sub.Pbar, sub.P)
    d1 = f_sub(s1)
    s2 = tuple(b + 0.5 * h * d for b, d in zip(s1, d1))
    d2 = f_sub(s2)
    s3 = tuple(b + 0.5 * h * d for b, d in zip(s1, d2))
    d3 = f_sub(s3)
    s4 = tuple(b + h * d for b, d in zip(s1, d3))
    d4 = f_sub(s4)
    stages = ((s1, d1), (s2, d2), (s3, d3), (s4, d4))

    def f_learn(tau, blocks, sub_stage):
        theta_d, varphi, Omega = blocks
        (Q, _, P), (_, _, dP) = sub_stage
        return learner_rhs(theta_d, varphi, Omega, P, dP, Q, z, phi, tau, hp)

    t = state.t
    b0 = (state.theta_d_hat, state.varphi, state.Omega)
    k1 = f_learn(t, b0, stages[0])
    k2 = f_learn(
        t + 0.5 * h, tuple(b + 0.5 * h * d for b, d in zip(b0, k1)), stages[1]
    )
    k3 = f_learn(
        t + 0.5 * h, tuple(b + 0.5 * h * d for b, d in zip(b0, k2)), stages[2]
    )
    k4 = f_learn(t + h, tuple(b + h * d for b, d in zip(b0, k3)), stages[3])
    theta_d, varphi, Omega = (
        b + (h / 6.0) * (e1 + 2 * e2 + 2 * e3 + e4)
        for b, e1, e2, e3, e4 in zip(b0, k1, k2, k3, k4)
    )
    Omega = 0.5 * (Omega + Omega.T)
    check_omega(Omega)
    return LearnerState(theta_d_hat=theta_d, varphi=varphi, Omega=Omega, t=t + h)


def estimate(state: LearnerState, P: np.ndarray, hp: LearnerHyperParams) -> np.ndarray:
    """Combined estimate: learned part plus the prior held outside the
    identifiable subspace, theta_d + (I - P) theta0."""
    return state.theta_d_hat + hp.theta0_hat - P @ hp.theta0_hat


@dataclass
class LeastSquaresSolution:
    """Batch minimizer of the discounted cost at time t, with the reduced
    information matrix Psi kept for conditioning diagnostics."""

    theta_star: np.ndarray
    psi: np.ndarray
    t: float


def batch_lsq_oracle(
    filtered_gram: np.ndarray,
    filtered_moment: np.ndarray,
    cert: ExcitationCertificate,
    t: float,
    hp: LearnerHyperParams,
) -> LeastSquaresSolution:
    """Closed-form least-squares solution from filtered data.

    ``filtered_gram`` and ``filtered_moment`` are the exponentially
    discounted Gram and moment states (the same objects the online estimator
    integrates: dG/dt = -beta G + phi phi', dm/dt = -beta m + z phi with
    m(0) = alpha theta0).  The solution pins the non-identifiable components
    to the prior:

        theta* = N_d Psi^{-1} N_d' m + N_u N_u' theta0,
        Psi    = N_d' G N_d + alpha e^{-beta t} I.
    """
    N_d, N_u = cert.N_d, cert.N_u
    r = N_d.shape[1]
    Psi = N_d.T @ filtered_gram @ N_d + hp.alpha * np.exp(-hp.beta * t) * np.eye(r)
    Psi = 0.5 * (Psi + Psi.T)
    try:
        c = np.linalg.cholesky(Psi)
    except np.linalg.LinAlgError:
        raise ValueError(
            "reduced information matrix Psi is not positive definite; "
            "the certificate does not match the data"
        ) from None
    x = np.linalg.solve(c.T, np.linalg.solve(c, N_d.T @ filtered_moment))
    theta_star = N_d @ x + N_u @ (N_u.T @ hp.theta0_hat)
    return LeastSquaresSolution(theta_star=theta_star, psi=Psi, t=t)


def constraint_extract(
    P: np.ndarray, theta_hat: np.ndarray, eig_threshold: float = 0.5
):
    """Linear constraints satisfied by the true parameters once P has
    converged: rows spanning the identifiable subspace and their values at
    the current estimate, C theta = d (up to learning error).

    Returns (C, d) with unit-norm rows; r may be zero when nothing is
    identifiable.
    """
    Pd = identifiable_factor(P, eig_threshold)
    if Pd.shape[1] == 0:
        return np.zeros((0, P.shape[0])), np.zeros(0)
    C = (Pd / np.linalg.norm(Pd, axis=0)).T
    return C, C @ np.asarray(theta_hat, dtype=float)
