import numpy as np
import pytest

from delearn.distributed import (
    DirectedGraph,
    NodeConfig,
    complementary_de_check,
    left_eigenvector,
    network_init,
    network_step,
    reference_trajectory,
    stacked_consensus_matrix,
)
from delearn.learner import LearnerHyperParams
from delearn.regression import (
    ExcitationCertificate,
    SinusoidRegressor,
    excitation_analysis,
)
from delearn.simkit import IntegratorConfig, decay_rate_fit, hurwitz_check
from delearn.subspace import SubspaceHyperParams

FIG7_EDGES = ((1, 2), (1, 5), (5, 4), (2, 3), (4, 3), (3, 1))


def axis_cert(n, blind_axes):
    """Certificate with axis-aligned identifiable/blind split."""
    keep = [i for i in range(n) if i not in blind_axes]
    N_d = np.eye(n)[:, keep]
    N_u = np.eye(n)[:, list(blind_axes)]
    Phi = N_d @ N_d.T
    return ExcitationCertificate(
        T=1.0, q=len(blind_axes), Phi_a=Phi, Phi_b=2 * Phi, N_d=N_d, N_u=N_u
    )


class TestDirectedGraph:
    def test_laplacian_row_sums(self):
        g = DirectedGraph.from_edges(5, FIG7_EDGES)
        assert np.abs(g.laplacian.sum(axis=1)).max() == 0.0

    def test_no_self_loops(self):
        with pytest.raises(ValueError, match="self-loops"):
            DirectedGraph(np.eye(2))

    def test_strong_connectivity(self):
        ring = DirectedGraph.from_edges(3, [(1, 2), (2, 3), (3, 1)])
        assert ring.is_strongly_connected()
        broken = DirectedGraph.from_edges(3, [(1, 2), (2, 3)])
        assert not broken.is_strongly_connected()
        assert DirectedGraph.from_edges(5, FIG7_EDGES).is_strongly_connected()


class TestLeftEigenvector:
    def test_balanced_ring_uniform(self):
        ring = DirectedGraph.from_edges(3, [(1, 2), (2, 3), (3, 1)])
        assert np.allclose(left_eigenvector(ring), np.full(3, 1 / 3), atol=1e-12)

    def test_experiment_graph(self):
        g = DirectedGraph.from_edges(5, FIG7_EDGES)
        xi = left_eigenvector(g)
        assert np.all(xi > 0)
        assert xi.sum() == pytest.approx(1.0)
        assert np.linalg.norm(xi @ g.laplacian) < 1e-10

    def test_disconnected_rejected(self):
        two = DirectedGraph(np.zeros((2, 2)))
        with pytest.raises(ValueError, match="strongly connected"):
            left_eigenvector(two)


class TestComplementaryDE:
    def test_complementary_axes(self):
        certs = [axis_cert(2, [0]), axis_cert(2, [1])]
        rep = complementary_de_check(certs)
        assert rep.satisfied and rep.intersection_dim == 0

    def test_shared_blind_direction(self):
        certs = [axis_cert(2, [0]), axis_cert(2, [0])]
        rep = complementary_de_check(certs)
        assert not rep.satisfied and rep.intersection_dim == 1

    def test_dimension_mismatch(self):
        with pytest.raises(ValueError, match="mismatch"):
            complementary_de_check([axis_cert(2, [0]), axis_cert(3, [0])])


class TestGraphPositivity:
    """Weighted-Laplacian positivity on the stacked blind bases holds exactly
    when the blind subspaces intersect trivially."""

    def _matrix(self, graph, bases):
        xi = left_eigenvector(graph)
        L = graph.laplacian
        Lhat = np.diag(xi) @ L + L.T @ np.diag(xi)
        n = bases[0].shape[0]
        qs = [X.shape[1] for X in bases]
        Xd = np.zeros((graph.n_nodes * n, sum(qs)))
        off = 0
        for i, X in enumerate(bases):
            Xd[i * n : (i + 1) * n, off : off + qs[i]] = X
            off += qs[i]
        return Xd.T @ np.kron(Lhat, np.eye(n)) @ Xd

    def test_both_directions(self):
        ring = DirectedGraph.from_edges(2, [(1, 2), (2, 1)])
        e1 = np.eye(2)[:, :1]
        e2 = np.eye(2)[:, 1:]
        assert np.linalg.eigvalsh(self._matrix(ring, [e1, e2]))[0] > 0
        assert np.linalg.eigvalsh(self._matrix(ring, [e1, e1]))[0] <= 1e-12


def two_node_problem():
    """Exactly complementary two-node setup: each node sees one axis."""
    theta = np.array([1.2, -0.7])
    regs = [
        SinusoidRegressor([[1.0], [0.0]], [[1.0], [1.0]], [[0.0], [0.0]]),
        SinusoidRegressor([[0.0], [1.0]], [[1.0], [1.0]], [[0.0], [0.0]]),
    ]
    graph = DirectedGraph.from_edges(2, [(1, 2), (2, 1)])
    configs = [
        NodeConfig(
            eta_id=1.0,
            eta_iu=1.0,
            sub_hp=SubspaceHyperParams(1.0, 2.0, 1.0, 1e-8),
            learn_hp=LearnerHyperParams(1.0, 1.0, 1.0, np.zeros(2)),
        )
        for _ in range(2)
    ]
    meas = [
        (lambda t, r=r: float(r(t) @ theta), (lambda t, r=r: r(t))) for r in regs
    ]
    return theta, regs, graph, configs, meas


class TestNetworkStep:
    def test_cooperation_recovers_full_vector(self):
        theta, regs, graph, configs, meas = two_node_problem()
        net = network_init(graph, configs, 2)
        h = 1e-2
        for _ in range(1000):
            net = network_step(net, meas, h)
        errs = np.linalg.norm(net.estimates() - theta, axis=1)
        assert errs.max() < 1e-2

    def test_single_node_reduction_bitwise(self):
        """A one-node, edgeless network must reproduce the standalone fused
        estimator exactly (identical arithmetic path)."""
        from delearn.experiments import run_estimator

        reg = SinusoidRegressor([[1.0], [-1.0]], [[1.0], [1.0]], [[0.0], [0.0]])
        theta = np.array([0.7, -0.3])
        sub_hp = SubspaceHyperParams(1.0, 1.0, 1.0, 1e-8)
        learn_hp = LearnerHyperParams(1.0, 1.0, 1.0, np.array([0.2, 0.1]))
        h = 1e-2
        cfg = IntegratorConfig(h, 2.0, 1)
        ref = run_estimator(reg, theta, sub_hp, learn_hp, cfg, backend="numpy")

        graph = DirectedGraph(np.zeros((1, 1)))
        net = network_init(graph, [NodeConfig(1.0, 1.0, sub_hp, learn_hp)], 2)
        meas = [(lambda t: float(reg(t) @ theta) + 0.0, lambda t: reg(t))]
        for k in range(cfg.n_steps):
            net = network_step(net, meas, h)
            rec = k + 1
            assert np.array_equal(net.learns[0].theta_d_hat, ref.theta_d[rec])
            assert np.array_equal(net.subs[0].Q, ref.Q[rec])
            assert np.array_equal(net.subs[0].P, ref.P[rec])
            assert np.array_equal(net.learns[0].Omega, ref.Omega[rec])
            assert np.array_equal(net.learns[0].varphi, ref.varphi[rec])


class TestReferenceTrajectory:
    def _certs(self):
        return [
            excitation_analysis(
                SinusoidRegressor([[1.0], [0.0]], [[1.0], [1.0]], [[0.0], [0.0]]),
                2 * np.pi, 12 * np.pi,
            ),
            excitation_analysis(
                SinusoidRegressor([[0.0], [1.0]], [[1.0], [1.0]], [[0.0], [0.0]]),
                2 * np.pi, 12 * np.pi,
            ),
        ]

    def test_zero_forcing_zero_trajectory(self):
        theta = np.array([1.2, -0.7])
        certs = self._certs()
        graph = DirectedGraph.from_edges(2, [(1, 2), (2, 1)])
        ts = np.linspace(0, 5, 101)
        series = np.tile(theta, (len(ts), 2, 1))  # theta*_i = theta throughout
        out = reference_trajectory(certs, series, theta, graph, [1.0, 1.0], ts)
        assert np.abs(out).max() < 1e-14

    def test_consensus_matrix_hurwitz(self):
        certs = self._certs()
        graph = DirectedGraph.from_edges(2, [(1, 2), (2, 1)])
        M = stacked_consensus_matrix(certs, graph, [1.0, 1.0])
        assert hurwitz_check(-M).is_hurwitz

    def test_non_complementary_refused(self):
        cert = self._certs()[0]
        graph = DirectedGraph.from_edges(2, [(1, 2), (2, 1)])
        ts = np.linspace(0, 1, 21)
        series = np.zeros((21, 2, 2))
        with pytest.raises(ValueError, match="Hurwitz"):
            reference_trajectory([cert, cert], series, np.zeros(2), graph, [1.0, 1.0], ts)

    def test_tracking_on_two_node_problem(self):
        theta, regs, graph, configs, meas = two_node_problem()
        certs = self._certs()
        net = network_init(graph, configs, 2)
        h = 1e-2
        ts = [0.0]
        estimates = [net.estimates()]
        stars = [np.stack([c.learn_hp.theta0_hat for c in configs])]
        from delearn.learner import batch_lsq_oracle

        for k in range(1200):
            net = network_step(net, meas, h)
            ts.append(net.t)
            estimates.append(net.estimates())
            stars.append(
                np.stack(
                    [
                        batch_lsq_oracle(
                            net.subs[i].Q, net.learns[i].varphi, certs[i],
                            net.t, configs[i].learn_hp,
                        ).theta_star
                        for i in range(2)
                    ]
                )
            )
        ts = np.array(ts)
        tilde_I = (np.array(estimates) - theta).reshape(len(ts), -1)
        star_ref = reference_trajectory(
            certs, np.array(stars), theta, graph, [1.0, 1.0], ts
        )
        gap = np.linalg.norm(tilde_I - star_ref, axis=1)
        fit = decay_rate_fit(ts, gap, (2.0, 12.0))
        assert fit.slope < -0.2
