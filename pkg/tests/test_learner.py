import numpy as np
import pytest

from delearn.learner import (
    LearnerHyperParams,
    LearnerNumericsError,
    LearnerState,
    batch_lsq_oracle,
    constraint_extract,
    estimate,
    learner_init,
    learner_step,
    r_matrix,
)
from delearn.regression import SinusoidRegressor, excitation_analysis
from delearn.subspace import SubspaceHyperParams, subspace_init, subspace_step

SUB_HP = SubspaceHyperParams(beta=1.0, gamma=1.0, delta=1.0, rank_tol=1e-8)


def sin_pair():
    return SinusoidRegressor([[1.0], [-1.0]], [[1.0], [1.0]], [[0.0], [0.0]])


class TestRMatrix:
    def test_identity_projector_all_terms_vanish(self):
        hp = LearnerHyperParams(1.0, 1.0, 1.0, np.zeros(2))
        R = r_matrix(np.eye(2), np.zeros((2, 2)), np.eye(2), np.zeros(2), 50.0, hp)
        assert np.abs(R).max() < 1e-20

    def test_zero_projector_keeps_regularization(self):
        hp = LearnerHyperParams(1.0, 2.0, 3.0, np.zeros(2))
        R = r_matrix(
            np.zeros((2, 2)), np.zeros((2, 2)), np.eye(2), np.array([5.0, -1.0]), 0.0, hp
        )
        assert np.allclose(R, 3.0 * 2.0 * np.eye(2))

    def test_hand_assembled_value(self):
        # P phi = (1, -1); term-by-term assembly as the independent oracle
        hp = LearnerHyperParams(1.0, 1.0, 1.0, np.zeros(2))
        P = np.array([[0.5, -0.5], [-0.5, 0.5]])
        phi = np.array([1.0, -1.0])
        Pphi = P @ phi
        assert np.array_equal(Pphi, np.array([1.0, -1.0]))
        expected = np.outer(Pphi, Pphi) + 1.0 * 1.0 * (np.eye(2) - P)
        R = r_matrix(P, np.zeros((2, 2)), np.zeros((2, 2)), phi, 0.0, hp)
        assert np.allclose(R, expected, atol=1e-14)
        assert np.allclose(expected, [[1.5, -0.5], [-0.5, 1.5]])


class TestLearnerStep:
    def test_unforced_estimator_returns_to_prior(self):
        # z = 0, phi = 0: varphi decays from alpha*theta0 exactly, the learned
        # component vanishes, and the combined estimate recovers the prior
        n = 2
        theta0 = np.array([1.5, -0.5])
        hp = LearnerHyperParams(1.0, 1.0, 1.0, theta0)
        learn = learner_init(n, hp)
        sub = subspace_init(n, SUB_HP, h=1e-2)
        h = 1e-2
        zero = np.zeros(n)
        for s in range(1000):
            learn = learner_step(learn, sub, 0.0, zero, h, hp, SUB_HP)
            sub = subspace_step(sub, lambda t: zero, h, SUB_HP)
            if s % 10 == 0:
                expected_vphi = np.exp(-hp.beta * learn.t) * hp.alpha * theta0
                assert np.allclose(learn.varphi, expected_vphi, atol=1e-9)
                # closed-form identity theta_d = Omega P varphi
                resid = np.linalg.norm(
                    learn.theta_d_hat - learn.Omega @ sub.P @ learn.varphi
                )
                assert resid <= 1e-6 * (1 + np.linalg.norm(learn.varphi))
        assert np.linalg.norm(learn.theta_d_hat) < 1e-3
        assert np.allclose(estimate(learn, sub.P, hp), theta0, atol=1e-2)

    def test_omega_loss_detected(self):
        # a step far too large for the gains destroys positive definiteness
        hp = LearnerHyperParams(1.0, 1.0, 1.0, np.zeros(2))
        learn = learner_init(2, hp)
        sub = subspace_init(2, SUB_HP, h=0.5)
        sub.P = 0.5 * np.eye(2)
        sub.Q = np.eye(2)
        phi = np.array([100.0, 3.0])
        with pytest.raises(LearnerNumericsError, match="step"):
            for _ in range(4):
                learn = learner_step(learn, sub, 1.0, phi, 0.5, hp, SUB_HP)


class TestEstimate:
    def test_zero_projector(self):
        hp = LearnerHyperParams(1.0, 1.0, 1.0, np.array([2.0, 3.0]))
        st = LearnerState(np.zeros(2), np.zeros(2), np.eye(2))
        assert np.allclose(estimate(st, np.zeros((2, 2)), hp), [2.0, 3.0])

    def test_full_projector(self):
        hp = LearnerHyperParams(1.0, 1.0, 1.0, np.array([2.0, 3.0]))
        st = LearnerState(np.zeros(2), np.zeros(2), np.eye(2))
        assert np.allclose(estimate(st, np.eye(2), hp), [0.0, 0.0])

    def test_rank_one_projector(self):
        hp = LearnerHyperParams(1.0, 1.0, 1.0, np.array([1.0, 1.0]))
        P = np.array([[0.5, -0.5], [-0.5, 0.5]])
        st = LearnerState(np.array([0.3, -0.3]), np.zeros(2), np.eye(2))
        assert np.allclose(estimate(st, P, hp), [1.3, 0.7])


class TestBatchOracle:
    def setup_method(self):
        self.cert = excitation_analysis(sin_pair(), np.pi, 6 * np.pi)
        self.hp = LearnerHyperParams(1.0, 1.0, 1.0, np.array([0.4, -0.2]))

    def test_no_data_returns_prior(self):
        sol = batch_lsq_oracle(
            np.zeros((2, 2)), self.hp.alpha * self.hp.theta0_hat, self.cert, 0.0, self.hp
        )
        assert np.allclose(sol.theta_star, self.hp.theta0_hat, atol=1e-12)

    def test_blind_components_pinned_to_prior(self):
        rng = np.random.default_rng(0)
        G = rng.standard_normal((2, 2))
        G = G @ G.T
        moment = rng.standard_normal(2)
        sol = batch_lsq_oracle(G, moment, self.cert, 3.0, self.hp)
        pin = self.cert.N_u.T @ sol.theta_star - self.cert.N_u.T @ self.hp.theta0_hat
        assert np.abs(pin).max() < 1e-8

    def test_psi_returned_positive_definite(self):
        sol = batch_lsq_oracle(np.eye(2), np.ones(2), self.cert, 1.0, self.hp)
        assert np.linalg.eigvalsh(sol.psi)[0] > 0

    def test_indefinite_information_rejected(self):
        with pytest.raises(ValueError, match="positive definite"):
            batch_lsq_oracle(-10.0 * np.eye(2), np.ones(2), self.cert, 5.0, self.hp)


class TestTrackingProperties:
    """Estimator-vs-optimum behavior on the deficient toy problem."""

    @pytest.mark.parametrize("sigma", [0.0, 0.2])
    def test_optimum_tracking_decays(self, sigma):
        from delearn.experiments import run_estimator
        from delearn.simkit import IntegratorConfig, NoiseChannel, decay_rate_fit

        reg = sin_pair()
        theta = np.array([0.7, -0.3])
        cert = excitation_analysis(reg, np.pi, 6 * np.pi)
        hp = LearnerHyperParams(1.0, 1.0, 1.0, np.array([0.2, 0.1]))
        cfg = IntegratorConfig(1e-3, 15.0, 10)
        noise = NoiseChannel("gaussian", sigma, 5) if sigma else None
        run = run_estimator(reg, theta, SUB_HP, hp, cfg, noise=noise)
        err = np.linalg.norm(run.theta_hat() - run.theta_star(cert), axis=1)
        fit = decay_rate_fit(run.ts, err, (2.0, 15.0))
        assert fit.slope < 0

    def test_noise_free_identifiable_rate(self):
        from delearn.experiments import run_estimator
        from delearn.simkit import IntegratorConfig, decay_rate_fit

        reg = sin_pair()
        theta = np.array([0.7, -0.3])
        cert = excitation_analysis(reg, np.pi, 6 * np.pi)
        hp = LearnerHyperParams(1.0, 1.0, 1.0, np.array([0.2, 0.1]))
        run = run_estimator(
            reg, theta, SUB_HP, hp, IntegratorConfig(1e-3, 15.0, 10)
        )
        v = np.linalg.norm((run.theta_hat() - theta) @ cert.N_d, axis=1)
        fit = decay_rate_fit(run.ts, v, (5.0, 15.0))
        assert fit.rate >= 0.9 * hp.beta / 2

    def test_gain_identity_along_trajectory(self):
        from delearn.experiments import run_estimator
        from delearn.simkit import IntegratorConfig

        reg = sin_pair()
        hp = LearnerHyperParams(1.0, 1.0, 1.0, np.array([0.2, 0.1]))
        run = run_estimator(
            reg, np.array([0.7, -0.3]), SUB_HP, hp, IntegratorConfig(1e-3, 8.0, 10)
        )
        eye = np.eye(2)
        for k in range(len(run.ts)):
            t = run.ts[k]
            P, Q, Om = run.P[k], run.Q[k], run.Omega[k]
            psik = P @ Q @ P + np.exp(-t) * P + (eye - P)
            assert np.linalg.norm(Om @ psik - eye, 2) <= 1e-6


class TestConstraintExtract:
    def test_full_projector_pins_everything(self):
        theta_hat = np.array([1.0, -2.0, 0.5])
        C, d = constraint_extract(np.eye(3), theta_hat)
        assert C.shape == (3, 3)
        assert np.allclose(C @ C.T, np.eye(3), atol=1e-12)
        assert np.allclose(np.linalg.solve(C, d), theta_hat)

    def test_zero_projector_no_constraints(self):
        C, d = constraint_extract(np.zeros((3, 3)), np.ones(3))
        assert C.shape == (0, 3) and d.shape == (0,)

    def test_rank_one(self):
        P = np.array([[0.5, -0.5], [-0.5, 0.5]])
        C, d = constraint_extract(P, np.array([2.0, 0.0]))
        assert C.shape == (1, 2)
        assert np.linalg.norm(C[0]) == pytest.approx(1.0)
        assert d[0] == pytest.approx(C[0] @ [2.0, 0.0])
