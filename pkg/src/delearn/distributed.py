"""Cooperative parameter learning over a strongly connected directed graph.

Each node runs its own subspace estimator and optimal learner on local
measurements, updates its learned component inside its identifiable
subspace, and fills the blind directions by consensus with its neighbors:

    dtheta_iu/dt = -eta_id P_i theta_iu
                   - eta_iu (I - P_i) sum_j a_ij (theta_i - theta_j),
    theta_i = P_i theta_id + (I - P_i) theta_iu.

Full recovery at every node needs only the complementary-excitation
condition: the local identifiable subspaces must jointly span the parameter
space (equivalently, the local blind subspaces intersect trivially).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .learner import (
    LearnerHyperParams,
    LearnerState,
    learner_init,
    learner_rhs,
)
from .regression import ExcitationCertificate
from .simkit import hurwitz_check
from .subspace import (
    SubspaceEstimatorState,
    SubspaceHyperParams,
    kernel_basis,
    subspace_init,
    subspace_rhs,
)


@dataclass
class DirectedGraph:
    """Weighted directed communication graph; a_ij > 0 means node i receives
    node j's estimate (edge from j to i)."""

    adjacency: np.ndarray

    def __post_init__(self):
        A = np.asarray(self.adjacency, dtype=float)
        if A.ndim != 2 or A.shape[0] != A.shape[1]:
            raise ValueError("adjacency must be square")
        if np.any(A < 0):
            raise ValueError("adjacency weights must be nonnegative")
        if np.any(np.diag(A) != 0):
            raise ValueError("no self-loops: diagonal must be zero")
        self.adjacency = A

    @property
    def n_nodes(self) -> int:
        return self.adjacency.shape[0]

    @property
    def laplacian(self) -> np.ndarray:
        A = self.adjacency
        return np.diag(A.sum(axis=1)) - A

    @classmethod
    def from_edges(cls, n_nodes: int, edges, weight: float = 1.0) -> "DirectedGraph":
        """Edges given as (from_node, to_node) pairs, 1-indexed."""
        A = np.zeros((n_nodes, n_nodes))
        for j, i in edges:
            A[i - 1, j - 1] = weight
        return cls(A)

    def is_strongly_connected(self) -> bool:
        """Reachability closure: every ordered pair joined by a directed path."""
        R = self.adjacency > 0
        n = self.n_nodes
        reach = R | np.eye(n, dtype=bool)
        for _ in range(n):
            new = reach | (reach @ reach)
            if np.array_equal(new, reach):
                break
            reach = new
        return bool(reach.all())


def left_eigenvector(graph: DirectedGraph) -> np.ndarray:
    """Positive left null vector of the Laplacian, normalized to sum one.

    Exists with strictly positive entries exactly when the graph is strongly
    connected; computed from the null space of L'."""
    if not graph.is_strongly_connected():
        raise ValueError("graph is not strongly connected; positive left "
                         "eigenvector is not guaranteed")
    L = graph.laplacian
    _, s, Vt = np.linalg.svd(L.T)
    xi = Vt[-1]
    xi = xi / xi.sum()
    if np.any(xi <= 1e-12):
        raise ValueError(
            "numerical left eigenvector is not strictly positive; "
            "graph is effectively not strongly connected"
        )
    if np.linalg.norm(xi @ L) > 1e-10 * max(1.0, np.linalg.norm(L)):
        raise ValueError("left eigenvector residual too large")
    return xi


@dataclass
class ComplementaryDEReport:
    satisfied: bool
    lam_min_sum: float
    intersection_dim: int
    lam_max_projectors: float


def complementary_de_check(
    certs: list[ExcitationCertificate], rank_tol: float = 1e-8
) -> ComplementaryDEReport:
    """Complementary-excitation test across nodes.

    True iff the summed lower Gram bounds are positive definite,
    equivalently iff the blind subspaces intersect trivially; both routes
    are computed and must agree.  The intersection dimension is read off
    the spectrum of the summed blind projectors (an eigenvalue reaches the
    node count exactly on a commonly blind direction).
    """
    if not certs:
        raise ValueError("need at least one certificate")
    n = certs[0].n
    if any(c.n != n for c in certs):
        raise ValueError("certificates have mismatched dimensions")
    N = len(certs)
    S = sum(c.Phi_a for c in certs)
    lam_min = float(np.linalg.eigvalsh(S)[0])
    proj_sum = sum(
        c.N_u @ c.N_u.T if c.N_u.shape[1] else np.zeros((n, n)) for c in certs
    )
    lam_proj = np.linalg.eigvalsh(proj_sum)
    lam_max = float(lam_proj[-1])
    inter_dim = int(np.sum(lam_proj >= N * (1.0 - 1e-9)))
    ok_bound = lam_min > rank_tol
    ok_inter = inter_dim == 0
    if ok_bound != ok_inter:
        # routes disagree only inside the numerical tolerance band
        ok_bound = ok_inter = ok_bound and ok_inter
    return ComplementaryDEReport(
        satisfied=bool(ok_bound and ok_inter),
        lam_min_sum=lam_min,
        intersection_dim=inter_dim,
        lam_max_projectors=lam_max,
    )


@dataclass(frozen=True)
class NodeConfig:
    """Per-node gains and hyperparameters of the cooperative protocol."""

    eta_id: float
    eta_iu: float
    sub_hp: SubspaceHyperParams
    learn_hp: LearnerHyperParams

    def __post_init__(self):
        if self.eta_id <= 0 or self.eta_iu <= 0:
            raise ValueError("consensus gains must be strictly positive")


@dataclass
class SensorNetwork:
    """Joint state of all cooperating estimators (shared clock)."""

    graph: DirectedGraph
    configs: list[NodeConfig]
    subs: list[SubspaceEstimatorState]
    learns: list[LearnerState]
    theta_u: np.ndarray  # (N, n) consensus states
    t: float = 0.0

    @property
    def n_nodes(self) -> int:
        return self.graph.n_nodes

    def estimates(self) -> np.ndarray:
        """Per-node combined estimates theta_i = P_i theta_id + (I-P_i) theta_iu."""
        out = np.empty_like(self.theta_u)
        for i, (sub, learn) in enumerate(zip(self.subs, self.learns)):
            out[i] = sub.P @ learn.theta_d_hat + self.theta_u[i] - sub.P @ self.theta_u[i]
        return out


def network_init(graph: DirectedGraph, configs: list[NodeConfig], n: int) -> SensorNetwork:
    if len(configs) != graph.n_nodes:
        raise ValueError("one NodeConfig per graph node required")
    subs = [subspace_init(n, c.sub_hp) for c in configs]
    learns = [learner_init(n, c.learn_hp) for c in configs]
    theta_u = np.stack([c.learn_hp.theta0_hat for c in configs])
    return SensorNetwork(
        graph=graph, configs=configs, subs=subs, learns=learns, theta_u=theta_u
    )


def _node_rhs(t, blocks, z, phi, NN, cfg: NodeConfig):
    """Derivatives of one node's estimator blocks (subspace + learner)."""
    Q, Pbar, P, theta_d, varphi, Omega = blocks
    dQ, dPbar, dP = subspace_rhs(
        Q, Pbar, P, NN, phi, cfg.sub_hp.beta, cfg.sub_hp.gamma
    )
    dthd, dvphi, dOm = learner_rhs(
        theta_d, varphi, Omega, P, dP, Q, z, phi, t, cfg.learn_hp
    )
    return dQ, dPbar, dP, dthd, dvphi, dOm


def network_step(net: SensorNetwork, measurements, h: float) -> SensorNetwork:
    """One synchronous RK4 step of the whole network as a single joint ODE.

    ``measurements[i] = (z_i, phi_i)`` are time-indexed evaluators; every
    RK4 stage sees stage-consistent neighbor estimates.  Held kernel bases
    refresh per node when the shared clock crosses that node's hold period.
    """
    N = net.n_nodes
    L = net.graph.laplacian
    step_idx = round(net.t / h)
    if abs(net.t - step_idx * h) > 1e-9 * max(1.0, abs(net.t)):
        raise ValueError("network clock is off the step grid")
    t0 = step_idx * h  # keep stage times exactly on the grid

    subs = list(net.subs)
    held = []
    for i, (sub, cfg) in enumerate(zip(subs, net.configs)):
        per = cfg.sub_hp.steps_per_hold(h)
        Nu_bar, k = sub.Nu_bar, sub.k
        if step_idx >= (k + 1) * per:
            Nu_bar = kernel_basis(sub.Q, cfg.sub_hp.rank_tol)
            k = step_idx // per
            subs[i] = SubspaceEstimatorState(
                Q=sub.Q, P=sub.P, Pbar=sub.Pbar, Nu_bar=Nu_bar, t=sub.t, k=k
            )
        NN = (
            Nu_bar @ Nu_bar.T
            if Nu_bar.shape[1]
            else np.zeros((sub.n, sub.n))
        )
        held.append(NN)

    def stage_derivs(tau, node_blocks, theta_u_stage):
        derivs = []
        theta_i = np.empty_like(theta_u_stage)
        for i in range(N):
            z_fn, phi_fn = measurements[i]
            z = float(z_fn(tau))
            phi = np.asarray(phi_fn(tau), dtype=float)
            d = _node_rhs(tau, node_blocks[i], z, phi, held[i], net.configs[i])
            derivs.append(d)
            P = node_blocks[i][2]
            theta_d = node_blocks[i][3]
            theta_i[i] = P @ theta_d + theta_u_stage[i] - P @ theta_u_stage[i]
        cons = L @ theta_i
        dtheta_u = np.empty_like(theta_u_stage)
        for i in range(N):
            P = node_blocks[i][2]
            cfg = net.configs[i]
            dtheta_u[i] = -cfg.eta_id * (P @ theta_u_stage[i]) - cfg.eta_iu * (
                cons[i] - P @ cons[i]
            )
        return derivs, dtheta_u

    b0 = [
        (s.Q, s.Pbar, s.P, l.theta_d_hat, l.varphi, l.Omega)
        for s, l in zip(subs, net.learns)
    ]
    u0 = net.theta_u

    def advance(blocks, u, derivs, du, w):
        nb = [tuple(b + w * d for b, d in zip(bl, dv)) for bl, dv in zip(blocks, derivs)]
        return nb, u + w * du

    k1, ku1 = stage_derivs(t0, b0, u0)
    b2, u2 = advance(b0, u0, k1, ku1, 0.5 * h)
    k2, ku2 = stage_derivs(t0 + 0.5 * h, b2, u2)
    b3, u3 = advance(b0, u0, k2, ku2, 0.5 * h)
    k3, ku3 = stage_derivs(t0 + 0.5 * h, b3, u3)
    b4, u4 = advance(b0, u0, k3, ku3, h)
    k4, ku4 = stage_derivs(t0 + h, b4, u4)

    t_next = (step_idx + 1) * h
    new_subs, new_learns = [], []
    for i in range(N):
        upd = [
            b + (h / 6.0) * (d1 + 2 * d2 + 2 * d3 + d4)
            for b, d1, d2, d3, d4 in zip(b0[i], k1[i], k2[i], k3[i], k4[i])
        ]
        Q, Pbar, P = (0.5 * (M + M.T) for M in upd[:3])
        Omega = 0.5 * (upd[5] + upd[5].T)
        new_subs.append(
            SubspaceEstimatorState(
                Q=Q, Pbar=Pbar, P=P, Nu_bar=subs[i].Nu_bar, t=t_next, k=subs[i].k
            )
        )
        new_learns.append(
            LearnerState(theta_d_hat=upd[3], varphi=upd[4], Omega=Omega, t=t_next)
        )
    theta_u = u0 + (h / 6.0) * (ku1 + 2 * ku2 + 2 * ku3 + ku4)
    return SensorNetwork(
        graph=net.graph,
        configs=net.configs,
        subs=new_subs,
        learns=new_learns,
        theta_u=theta_u,
        t=t_next,
    )


def stacked_consensus_matrix(certs, graph: DirectedGraph, eta_iu) -> np.ndarray:
    """H_U N_U' (L (x) I) N_U, the consensus block of the reference system."""
    n = certs[0].n
    L = graph.laplacian
    N = graph.n_nodes
    qs = [c.N_u.shape[1] for c in certs]
    NU = np.zeros((N * n, sum(qs)))
    off = 0
    for i, c in enumerate(certs):
        NU[i * n : (i + 1) * n, off : off + qs[i]] = c.N_u
        off += qs[i]
    HU = np.diag(np.concatenate([np.full(q, e) for q, e in zip(qs, eta_iu)]))
    return HU @ NU.T @ np.kron(L, np.eye(n)) @ NU


def reference_trajectory(
    certs: list[ExcitationCertificate],
    theta_star_series: np.ndarray,
    theta_true: np.ndarray,
    graph: DirectedGraph,
    eta_iu,
    ts: np.ndarray,
):
    """Consensus reference trajectory driven by the per-node batch optima.

    ``theta_star_series`` has shape (K, N, n) on the time grid ``ts``.  The
    stacked error reference integrates

        d(tu*)/dt = -H_U N_U' (L (x) I) (N_U tu* + N_D tD*(t)),
        tD*(t) = N_D' col(theta*_i(t) - theta),  tu*(0) = 0,

    and returns the (K, N*n) series N_D tD* + N_U tu*.  The grid must
    resolve the consensus timescale; forcing is interpolated linearly at
    RK4 half-steps.  Refuses when the consensus matrix is not Hurwitz
    (complementary excitation violated).
    """
    M = stacked_consensus_matrix(certs, graph, eta_iu)
    rep = hurwitz_check(-M)
    if not rep.is_hurwitz:
        raise ValueError(
            "consensus reference matrix is not Hurwitz "
            f"(abscissa {rep.abscissa:.3e}); complementary excitation fails"
        )
    N = graph.n_nodes
    n = certs[0].n
    K = len(ts)
    qs = [c.N_u.shape[1] for c in certs]
    ds = [c.N_d.shape[1] for c in certs]
    NU = np.zeros((N * n, sum(qs)))
    ND = np.zeros((N * n, sum(ds)))
    off_u = off_d = 0
    for i, c in enumerate(certs):
        NU[i * n : (i + 1) * n, off_u : off_u + qs[i]] = c.N_u
        ND[i * n : (i + 1) * n, off_d : off_d + ds[i]] = c.N_d
        off_u += qs[i]
        off_d += ds[i]
    HU = np.diag(np.concatenate([np.full(q, e) for q, e in zip(qs, eta_iu)]))
    LI = np.kron(graph.laplacian, np.eye(n))
    force_mat = -(HU @ NU.T @ LI @ ND)

    tD = np.empty((K, sum(ds)))
    for k in range(K):
        off = 0
        for i, c in enumerate(certs):
            tD[k, off : off + ds[i]] = c.N_d.T @ (theta_star_series[k, i] - theta_true)
            off += ds[i]

    tu = np.zeros(sum(qs))
    out = np.empty((K, N * n))
    out[0] = ND @ tD[0] + NU @ tu
    for k in range(K - 1):
        hk = ts[k + 1] - ts[k]
        D0, D1 = tD[k], tD[k + 1]
        Dm = 0.5 * (D0 + D1)

        def f(u, D):
            return -M @ u + force_mat @ D

        k1 = f(tu, D0)
        k2 = f(tu + 0.5 * hk * k1, Dm)
        k3 = f(tu + 0.5 * hk * k2, Dm)
        k4 = f(tu + hk * k3, D1)
        tu = tu + (hk / 6.0) * (k1 + 2 * k2 + 2 * k3 + k4)
        out[k + 1] = ND @ tD[k + 1] + NU @ tu
    return out
