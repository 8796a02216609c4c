import numpy as np
import pytest
import scipy.linalg

from delearn import presets
from delearn.distributed import complementary_de_check
from delearn.experiments import run_network
from delearn.simkit import IntegratorConfig, decay_rate_fit
from delearn.sysid import (
    CanonicalPlant,
    FilterBank,
    PlantDesignError,
    build_application,
    filter_step,
    make_plant,
    pi_matrix,
    plant_step,
    regressor_row,
)

F_COL = np.array([-2.5, -11.0, -5.0])
B_VEC = np.array([1.0, -5.0, 9.0])
W_COL = np.array([-4.0, -9.25, -6.25])


class TestMakePlant:
    def test_reference_filter_design(self):
        plant = make_plant(F_COL, B_VEC, W_COL)
        # characteristic polynomial s^3 + 4 s^2 + 9.25 s + 6.25 factors as
        # (s + 1)(s^2 + 3 s + 6.25): eigenvalues -1 and -1.5 +- 2j
        eig = np.sort_complex(np.linalg.eigvals(plant.W))
        assert np.allclose(eig, [-1.5 - 2j, -1.5 + 2j, -1.0 + 0j])
        assert np.allclose(
            plant.H_W, [[1, 0, 0], [-4, 1, 0], [6.75, -4, 1]], atol=1e-12
        )
        assert np.linalg.det(plant.H_W) == pytest.approx(1.0)

    def test_plant_matrix_polynomial(self):
        plant = make_plant(F_COL, B_VEC, W_COL)
        # s^3 + 2.5 s^2 + 11 s + 5 = (s + 0.5)(s^2 + 2 s + 10)
        eig = np.sort_complex(np.linalg.eigvals(plant.F))
        assert np.allclose(eig, [-1.0 - 3j, -1.0 + 3j, -0.5 + 0j])

    def test_unstable_filter_rejected(self):
        with pytest.raises(PlantDesignError, match="Hurwitz"):
            make_plant(F_COL, B_VEC, np.array([1.0, 0.0, 0.0]))

    def test_scalar_plant(self):
        plant = make_plant([-2.0], [1.0], [-1.0])
        assert plant.W == pytest.approx(np.array([[-1.0]]))
        assert plant.H_W == pytest.approx(np.array([[1.0]]))

    def test_ground_truth_vector(self):
        plant = make_plant(F_COL, B_VEC, W_COL, g=[0.0, 0.0, 1.0])
        assert np.array_equal(
            plant.theta, np.concatenate([B_VEC, F_COL, [0.0, 0.0, 1.0]])
        )


class TestPlantStep:
    def test_rest_stays_at_rest(self):
        plant = make_plant(F_COL, B_VEC, W_COL)
        x, y = plant_step(plant, np.zeros(3), 0.0, 0.0, 1e-3)
        assert not x.any() and y == 0.0

    def test_unforced_decay(self):
        plant = make_plant(F_COL, B_VEC, W_COL)
        x = np.array([1.0, -0.5, 0.2])
        for _ in range(2000):
            x, _ = plant_step(plant, x, 0.0, 0.0, 1e-2)
        assert np.linalg.norm(x) < 1e-2  # slowest mode -0.5 over 20 s

    def test_superposition(self):
        plant = make_plant(F_COL, B_VEC, W_COL)
        u1 = lambda t: 3.0 * np.sin(2 * t)
        u2 = lambda t: -1.0 * np.cos(t)
        xs = {key: np.zeros(3) for key in ("a", "b", "ab")}
        h = 1e-3
        for s in range(2000):
            t = s * h
            xs["a"], _ = plant_step(plant, xs["a"], u1(t), 0.0, h)
            xs["b"], _ = plant_step(plant, xs["b"], u2(t), 0.0, h)
            xs["ab"], _ = plant_step(plant, xs["ab"], u1(t) + u2(t), 0.0, h)
        assert np.linalg.norm(xs["ab"] - xs["a"] - xs["b"]) < 1e-9

    def test_coupling_without_g_rejected(self):
        plant = make_plant(F_COL, B_VEC, W_COL)
        with pytest.raises(ValueError, match="coupling"):
            plant_step(plant, np.zeros(3), 0.0, 1.0, 1e-3)


class TestFilterStep:
    def test_zero_input(self):
        plant = make_plant(F_COL, B_VEC, W_COL)
        bank = FilterBank.zeros(3)
        bank = filter_step(bank, plant.W, 0.0, 0.0, 0.0, 1e-2)
        assert not bank.r_u.any() and not bank.r_y.any() and not bank.r_c.any()

    def test_step_response_steady_state(self):
        plant = make_plant(F_COL, B_VEC, W_COL)
        bank = FilterBank.zeros(3)
        for _ in range(3000):
            bank = filter_step(bank, plant.W, 1.0, 0.0, 0.0, 1e-2)
        expected = -np.linalg.solve(plant.W.T, plant.h1)
        assert np.allclose(bank.r_u, expected, atol=1e-9)

    def test_sinusoid_stays_bounded(self):
        plant = make_plant(F_COL, B_VEC, W_COL)
        bank = FilterBank.zeros(3)
        sup = 0.0
        for s in range(5000):
            bank = filter_step(bank, plant.W, 10.0 * np.sin(s * 1e-2 + 2), 0.0, 0.0, 1e-2)
            sup = max(sup, np.linalg.norm(bank.r_u))
        assert np.isfinite(sup) and sup < 50.0


class TestAlgebraicRepresentation:
    def test_pi_identity(self):
        # h1' W^{j-1} Pi = r' W^{j-1} for every power
        plant = make_plant(F_COL, B_VEC, W_COL)
        rng = np.random.default_rng(1)
        r = rng.standard_normal(3)
        Pi = pi_matrix(r, plant)
        row_h, row_r = plant.h1.copy(), r.copy()
        for _ in range(3):
            assert np.allclose(row_h @ Pi, row_r, atol=1e-8)
            row_h = row_h @ plant.W
            row_r = row_r @ plant.W

    def test_zero_bank(self):
        plant = make_plant(F_COL, B_VEC, W_COL)
        phi, z = regressor_row(FilterBank.zeros(3), plant, y=1.25)
        assert not phi.any()
        assert z == pytest.approx(1.25)

    def test_row_equals_filter_states(self):
        plant = make_plant(F_COL, B_VEC, W_COL, g=[0.0, 0.0, 1.0])
        rng = np.random.default_rng(2)
        bank = FilterBank(rng.standard_normal(3), rng.standard_normal(3), rng.standard_normal(3))
        phi, z = regressor_row(bank, plant, y=0.5)
        assert np.allclose(phi, np.concatenate([bank.r_u, bank.r_y, bank.r_c]), atol=1e-12)
        assert z == pytest.approx(0.5 + bank.r_y @ plant.w)

    def test_exact_regression_with_zero_initial_state(self):
        app = build_application("app1_k1")
        run = run_network(app, IntegratorConfig(1e-3, 5.0, 10))
        y = run.X[:, 0, 0]
        z = y + run._block("r_y", (1, 3))[:, 0] @ app.plant.w
        phi = np.concatenate(
            [run._block("r_u", (1, 3))[:, 0], run._block("r_y", (1, 3))[:, 0]], axis=1
        )
        resid = np.abs(z - phi @ app.theta)
        assert resid.max() < 1e-6

    def test_initial_state_residual_decays_at_filter_rate(self):
        # nonzero x(0): the regression defect equals h1' e^{Wt} x(0) and
        # decays at the slowest filter eigenvalue (-1)
        app = build_application("app1_k1")
        x0 = np.array([[1.0, 0.5, -0.2]])
        run = run_network(app, IntegratorConfig(1e-3, 12.0, 10), x0=x0)
        y = run.X[:, 0, 0]
        z = y + run._block("r_y", (1, 3))[:, 0] @ app.plant.w
        phi = np.concatenate(
            [run._block("r_u", (1, 3))[:, 0], run._block("r_y", (1, 3))[:, 0]], axis=1
        )
        resid = z - phi @ app.theta
        closed = np.array(
            [scipy.linalg.expm(app.plant.W * t)[0] @ x0[0] for t in run.ts]
        )
        assert np.abs(resid - closed).max() < 1e-6
        fit = decay_rate_fit(run.ts, np.abs(resid), (6.0, 12.0))
        assert -1.15 < fit.slope < -0.85


class TestApplications:
    def test_unknown_preset(self):
        with pytest.raises(KeyError):
            build_application("app3")

    def test_ground_truths(self):
        assert np.array_equal(
            build_application("app1_k3").theta, [1, -5, 9, -2.5, -11, -5]
        )
        app2 = build_application("app2")
        assert np.array_equal(app2.theta, [1, -5, 9, -2.5, -11, -5, 0, 0, 1])
        assert app2.n_nodes == 5
        # coupling exactly on the designated pairs
        C = np.zeros((5, 5))
        for i, j in presets.COUPLING_PAIRS:
            C[i - 1, j - 1] = 1.0
        assert np.array_equal(app2.coupling, C)

    def test_network_internally_stable(self):
        app2 = build_application("app2")
        eig = np.linalg.eigvals(app2.network_matrix())
        assert eig.real.max() < 0

    def test_app1_k1_steady_excitation_order(self):
        cert = build_application("app1_k1").certificates()[0]
        assert cert.q == 4  # two identifiable directions out of six

    def test_app1_k3_persistently_exciting(self):
        cert = build_application("app1_k3").certificates()[0]
        assert cert.q == 0

    def test_app2_complementary_excitation(self):
        certs = build_application("app2").certificates()
        rep = complementary_de_check(certs)
        assert rep.satisfied and rep.intersection_dim == 0
        # identical blind subspaces at every node cannot be complementary
        rep_bad = complementary_de_check([certs[0]] * 5)
        assert not rep_bad.satisfied and rep_bad.intersection_dim >= 1

    def test_preset_constants_fidelity(self):
        # the versioned preset constants, asserted value by value
        app1 = build_application("app1_k3")
        assert np.array_equal(app1.input_freqs, [[1.0, 3.0, 5.0]])
        assert np.array_equal(app1.input_phases, [[2.0, 4.0, 6.0]])
        assert np.array_equal(app1.input_amps, [[10.0, 10.0, 10.0]])
        assert np.array_equal(app1.theta0, np.ones((1, 6)))
        assert app1.alpha[0] == app1.beta[0] == app1.delta[0] == app1.kappa[0] == 1.0
        app2 = build_application("app2")
        idx = np.arange(1.0, 6.0)
        assert np.array_equal(app2.alpha, idx)
        assert np.array_equal(app2.gamma, idx)
        assert np.array_equal(app2.eta_id, idx)
        assert np.array_equal(app2.eta_iu, 6.0 - idx)
        assert np.array_equal(app2.beta, np.ones(5))
        assert np.array_equal(app2.delta, np.ones(5))
        assert np.array_equal(app2.kappa, np.ones(5))
        assert np.array_equal(app2.theta0, np.outer(6.0 - idx, np.ones(9)))
        assert np.array_equal(app2.input_freqs.ravel(), [1.0, 3.0, 5.0, 3.0, 2.0])
        assert np.array_equal(app2.input_phases.ravel(), [1.0, 3.0, 4.0, 3.0, 2.0])
        assert np.array_equal(np.asarray(app2.plant.w), [-4.0, -9.25, -6.25])
        assert app2.comm_edges == ((1, 2), (1, 5), (5, 4), (2, 3), (4, 3), (3, 1))

    def test_steady_regressor_matches_settled_simulation(self):
        app = build_application("app1_k1")
        reg = app.steady_regressors()[0]
        run = run_network(app, IntegratorConfig(1e-3, 20.0, 10))
        phi_run = np.concatenate(
            [run._block("r_u", (1, 3))[:, 0], run._block("r_y", (1, 3))[:, 0]], axis=1
        )
        late = run.ts >= 18.0
        diff = np.linalg.norm(phi_run[late] - reg(run.ts[late]), axis=1)
        sup = np.linalg.norm(reg(run.ts[late]), axis=1).max()
        assert diff.max() < 1e-3 * sup
