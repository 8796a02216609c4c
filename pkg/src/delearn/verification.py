"""Acceptance criteria and property suites, shared by the test suite and the
command-line ``verify`` runner.

Each criterion function returns a CriterionResult; expensive experiment runs
are cached on the context so the identity suite can re-examine every
recorded step of the runs made by the convergence criteria.  Runtime budgets
are measured on the integration calls after the compiled kernels have been
warmed (JIT latency is a one-time cost, not experiment work).
"""

from __future__ import annotations

import time
from dataclasses import dataclass

import numpy as np

from . import presets
from .distributed import (
    DirectedGraph,
    left_eigenvector,
    stacked_consensus_matrix,
)
from .experiments import run_estimator, run_network, warm_up_kernels
from .learner import LearnerHyperParams, batch_lsq_oracle, constraint_extract
from .regression import SinusoidRegressor
from .simkit import (
    IntegratorConfig,
    NoiseChannel,
    decay_rate_fit,
    hurwitz_check,
    integrate,
    ltv_convergence_harness,
)
from .subspace import SubspaceHyperParams
from .output import write_csv

SEED = presets.DEFAULT_SEED
H_STEP = 1e-3

# criterion-5 target: the reference 2 x 6 constraint matrix (times 1e-2)
CONSTRAINT_TARGET = 1e-2 * np.array(
    [
        [-59.0, -6.0, 59.0, 11.0, 53.0, -12.0],
        [0.0, -62.0, 0.0, -54.0, 17.0, 54.0],
    ]
)

THETA_APP1 = np.array([1.0, -5.0, 9.0, -2.5, -11.0, -5.0])
THETA_APP2 = np.array([1.0, -5.0, 9.0, -2.5, -11.0, -5.0, 0.0, 0.0, 1.0])


@dataclass
class CriterionResult:
    name: str
    passed: bool
    detail: str
    runtime: float | None = None

    def line(self) -> str:
        mark = "PASS" if self.passed else "FAIL"
        rt = f" [{self.runtime:.2f}s]" if self.runtime is not None else ""
        return f"{mark}  {self.name}: {self.detail}{rt}"


class VerificationContext:
    """Builds and caches the experiment runs the criteria share."""

    def __init__(self, backend: str = "numba"):
        self.backend = backend
        self._apps = {}
        self._certs = {}
        self._runs = {}
        self.runtimes = {}
        if backend == "numba":
            warm_up_kernels()

    def app(self, name: str):
        if name not in self._apps:
            self._apps[name] = presets.application(name)
        return self._apps[name]

    def certs(self, name: str):
        if name not in self._certs:
            self._certs[name] = self.app(name).certificates()
        return self._certs[name]

    def app1_run(self, k: int, noisy: bool):
        key = (f"app1_k{k}", noisy)
        if key not in self._runs:
            app = self.app(f"app1_k{k}")
            noise = NoiseChannel("gaussian", presets.NOISE_SIGMA, SEED) if noisy else None
            cfg = IntegratorConfig(H_STEP, 30.0, 10)
            t0 = time.perf_counter()
            run = run_network(app, cfg, noise=noise, backend=self.backend)
            self.runtimes[key] = time.perf_counter() - t0
            self._runs[key] = run
        return self._runs[key]

    def app2_run(self, noisy: bool, eta_scale: float = 1.0):
        key = ("app2", noisy, eta_scale)
        if key not in self._runs:
            base = self.app("app2")
            app = (
                base
                if eta_scale == 1.0
                else presets.application("app2", eta_iu=eta_scale * base.eta_iu)
            )
            noise = NoiseChannel("gaussian", presets.NOISE_SIGMA, SEED) if noisy else None
            cfg = IntegratorConfig(H_STEP, 60.0, 20)
            t0 = time.perf_counter()
            run = run_network(
                app, cfg, noise=noise, certs=self.certs("app2"), backend=self.backend
            )
            self.runtimes[key] = time.perf_counter() - t0
            self._runs[key] = run
        return self._runs[key]


def criterion_1(ctx: VerificationContext) -> CriterionResult:
    """Rank-1 sinusoid pair: projector convergence and gamma scaling."""
    reg = SinusoidRegressor([[1.0], [-1.0]], [[1.0], [1.0]], [[0.0], [0.0]])
    Pi = np.array([[0.5, -0.5], [-0.5, 0.5]])
    lrn = LearnerHyperParams(1.0, 1.0, 1.0, np.zeros(2))
    cfg = IntegratorConfig(H_STEP, 25.0, 10)
    slopes = {}
    err25 = None
    t0 = time.perf_counter()
    for gamma in (1.0, 2.0):
        sub = SubspaceHyperParams(beta=1.0, gamma=gamma, delta=1.0, rank_tol=1e-8)
        run = run_estimator(reg, np.zeros(2), sub, lrn, cfg, backend=ctx.backend)
        errs = np.array([np.linalg.norm(Pk - Pi, 2) for Pk in run.P])
        slopes[gamma] = decay_rate_fit(run.ts, errs, (5.0, 15.0)).slope
        if gamma == 1.0:
            err25 = errs[-1]
    elapsed = time.perf_counter() - t0
    ok = err25 < 1e-3 and slopes[2.0] < slopes[1.0] and elapsed < 2.0
    return CriterionResult(
        "C01 projector convergence",
        bool(ok),
        f"err(25)={err25:.2e} (<1e-3), slopes gamma1={slopes[1.0]:.3f} "
        f"gamma2={slopes[2.0]:.3f} (steeper)",
        elapsed,
    )


def criterion_2(ctx: VerificationContext) -> CriterionResult:
    """Tracking of the batch least-squares optimum on both inputs, with and
    without measurement noise."""
    details = []
    ok = True
    worst_rt = 0.0
    for k in (1, 3):
        cert = ctx.certs(f"app1_k{k}")[0]
        for noisy in (False, True):
            run = ctx.app1_run(k, noisy)
            th = run.theta_hat_single(0)
            ts_star = run.theta_star(cert, 0)
            err = np.linalg.norm(th - ts_star, axis=1)
            i15 = np.searchsorted(run.ts, 15.0)
            tail = float(err[i15:].max())
            slope = decay_rate_fit(run.ts, err, (5.0, 30.0)).slope
            rt = ctx.runtimes[(f"app1_k{k}", noisy)]
            worst_rt = max(worst_rt, rt)
            good = tail < 1e-2 and slope < 0 and rt < 5.0
            ok &= good
            details.append(f"k{k}{'n' if noisy else ''}:max={tail:.1e},sl={slope:.2f}")
    return CriterionResult(
        "C02 optimum tracking", bool(ok), " ".join(details), worst_rt
    )


def criterion_3(ctx: VerificationContext) -> CriterionResult:
    """Noise-free identifiable-subspace decay rate of at least beta/2 * 0.9."""
    run = ctx.app1_run(3, False)
    cert = ctx.certs("app1_k3")[0]
    diff = run.theta_hat_single(0) - THETA_APP1
    v = np.linalg.norm(diff @ cert.N_d, axis=1)
    fit = decay_rate_fit(run.ts, v, (10.0, 30.0))
    ok = fit.rate >= 0.45
    return CriterionResult(
        "C03 noise-free rate",
        bool(ok),
        f"fitted rate {fit.rate:.3f} >= 0.45 (r2={fit.r2:.3f})",
    )


def criterion_4(ctx: VerificationContext) -> CriterionResult:
    """Full parameter recovery on the three-frequency input."""
    errs = {}
    for noisy, tol in ((False, 0.05), (True, 0.15)):
        run = ctx.app1_run(3, noisy)
        errs[noisy] = float(np.abs(run.theta_hat_single(0)[-1] - THETA_APP1).max())
    ok = errs[False] < 0.05 and errs[True] < 0.15
    return CriterionResult(
        "C04 parameter recovery",
        bool(ok),
        f"max|err| noise-free {errs[False]:.4f} (<0.05), noisy {errs[True]:.4f} (<0.15)",
    )


def criterion_5(ctx: VerificationContext) -> CriterionResult:
    """Extracted constraints under the single-frequency input reproduce the
    reference pair within 5 degrees of principal angle."""
    run = ctx.app1_run(1, True)
    C, d = constraint_extract(run.P[-1, 0], run.theta_hat_single(0)[-1])
    if C.shape[0] != 2:
        return CriterionResult(
            "C05 constraint reproduction", False, f"expected 2 constraints, got {C.shape[0]}"
        )
    Q1, _ = np.linalg.qr(C.T)
    Q2, _ = np.linalg.qr(CONSTRAINT_TARGET.T)
    cos = np.linalg.svd(Q1.T @ Q2, compute_uv=False)
    angle = float(np.degrees(np.arccos(np.clip(cos.min(), -1.0, 1.0))))
    resid = float(np.linalg.norm(C @ THETA_APP1 - d))
    ok = angle < 5.0 and resid < 0.05
    return CriterionResult(
        "C05 constraint reproduction",
        bool(ok),
        f"2 constraints, principal angle {angle:.2f} deg (<5), residual {resid:.4f} (<0.05)",
    )


def criterion_6(ctx: VerificationContext) -> CriterionResult:
    """Distributed convergence of all five estimators."""
    run = ctx.app2_run(False)
    err_end = float(run.node_errors()[-1].max())
    rt = ctx.runtimes[("app2", False, 1.0)]
    runn = ctx.app2_run(True)
    errs_noisy = runn.node_errors().max(axis=1)
    i40 = np.searchsorted(runn.ts, 40.0)
    band = float(errs_noisy[i40:].mean())
    bounded = bool(np.all(np.isfinite(errs_noisy)))
    rt = max(rt, ctx.runtimes[("app2", True, 1.0)])
    ok = err_end < 0.1 and band < 1.0 and bounded and rt < 30.0
    return CriterionResult(
        "C06 distributed convergence",
        bool(ok),
        f"noise-free max_i err(60)={err_end:.4f} (<0.1); noisy mean band [40,60]={band:.3f} (<1.0)",
        rt,
    )


def criterion_7(ctx: VerificationContext) -> CriterionResult:
    """Reference-system tracking steepens when the consensus gains double.

    The fit window [5, 25] covers the genuine decay phase; at later times
    the gap settles onto the small offset between the certificate subspaces
    and the estimator's numerically converged kernels (the experiment is
    deficiently excited only up to finite precision).
    """
    run1 = ctx.app2_run(False)
    gap1 = np.linalg.norm(run1.tilde_I() - run1.tilde_I_star(), axis=1)
    fit1 = decay_rate_fit(run1.ts, gap1, (5.0, 25.0))
    run2 = ctx.app2_run(False, eta_scale=2.0)
    gap2 = np.linalg.norm(run2.tilde_I() - run2.tilde_I_star(), axis=1)
    fit2 = decay_rate_fit(run2.ts, gap2, (5.0, 25.0))
    ok = fit1.slope < 0 and fit2.slope < fit1.slope
    return CriterionResult(
        "C07 reference tracking",
        bool(ok),
        f"slope {fit1.slope:.3f} < 0; doubled gains {fit2.slope:.3f} (steeper)",
    )


def _identity_checks(run, certs, labels, errors):
    """Gain-identity and spectrum checks at every recorded step of a run."""
    K = len(run.ts)
    N = run.N
    eye = np.eye(run.n)
    for i in range(N):
        alpha, beta, kappa = run.app.alpha[i], run.app.beta[i], run.app.kappa[i]
        th0 = run.app.theta0[i]
        cert = certs[i]
        worst_omega = worst_thd = worst_eig_lo = worst_eig_hi = 0.0
        for k in range(K):
            t = run.ts[k]
            P = run.P[k, i]
            Q = run.Q[k, i]
            Om = run.Omega[k, i]
            psik = P @ Q @ P + alpha * np.exp(-beta * t) * P + kappa * (eye - P)
            worst_omega = max(worst_omega, np.linalg.norm(Om @ psik - eye, 2))
            vphi = run.varphi[k, i]
            thd_res = np.linalg.norm(
                run.theta_d[k, i] - Om @ (P @ vphi)
            ) / (1.0 + np.linalg.norm(vphi))
            worst_thd = max(worst_thd, thd_res)
            lam = np.linalg.eigvalsh(P)
            worst_eig_lo = min(worst_eig_lo, float(lam[0]))
            worst_eig_hi = max(worst_eig_hi, float(lam[-1]) - 1.0)
        star = run.theta_star(cert, i)
        pin_res = float(
            np.abs((star - th0) @ cert.N_u).max() if cert.N_u.shape[1] else 0.0
        )
        labels.append(
            f"node{i + 1}: omega {worst_omega:.1e}, thd {worst_thd:.1e}, "
            f"eig [{worst_eig_lo:.1e}, 1+{worst_eig_hi:.1e}], pin {pin_res:.1e}"
        )
        if worst_omega > 1e-6:
            errors.append(f"omega identity {worst_omega:.2e} > 1e-6")
        if worst_thd > 1e-6:
            errors.append(f"theta_d identity {worst_thd:.2e} > 1e-6")
        if worst_eig_lo < -1e-6 or worst_eig_hi > 1e-6:
            errors.append("P spectrum outside [-1e-6, 1+1e-6]")
        if pin_res > 1e-8:
            errors.append(f"prior pinning {pin_res:.2e} > 1e-8")


def criterion_8(ctx: VerificationContext) -> CriterionResult:
    """Identity suite over every recorded step of the runs above."""
    labels, errors = [], []
    for k in (1, 3):
        certs = ctx.certs(f"app1_k{k}")
        for noisy in (False, True):
            _identity_checks(ctx.app1_run(k, noisy), certs, labels, errors)
    for noisy in (False, True):
        _identity_checks(ctx.app2_run(noisy), ctx.certs("app2"), labels, errors)
    detail = f"{len(labels)} node-runs checked"
    if errors:
        detail += "; " + "; ".join(sorted(set(errors)))
    return CriterionResult("C08 identity suite", not errors, detail)


def _graph_positivity_matrix(graph: DirectedGraph, blind_bases):
    xi = left_eigenvector(graph)
    L = graph.laplacian
    Lhat = np.diag(xi) @ L + L.T @ np.diag(xi)
    n = blind_bases[0].shape[0]
    qs = [X.shape[1] for X in blind_bases]
    Xd = np.zeros((graph.n_nodes * n, sum(qs)))
    off = 0
    for i, X in enumerate(blind_bases):
        Xd[i * n : (i + 1) * n, off : off + qs[i]] = X
        off += qs[i]
    return Xd.T @ np.kron(Lhat, np.eye(n)) @ Xd


def criterion_9(ctx: VerificationContext) -> CriterionResult:
    """Graph-positivity equivalence, perturbed-LTV harness, network Hurwitz."""
    errors = []
    ring = DirectedGraph.from_edges(2, [(1, 2), (2, 1)])
    e1 = np.array([[1.0], [0.0]])
    e2 = np.array([[0.0], [1.0]])
    M_pos = _graph_positivity_matrix(ring, [e1, e2])  # trivial intersection
    M_neg = _graph_positivity_matrix(ring, [e1, e1])  # shared blind direction
    if np.linalg.eigvalsh(M_pos)[0] <= 0:
        errors.append("positive instance not positive definite")
    if np.linalg.eigvalsh(M_neg)[0] > 1e-10:
        errors.append("negative instance unexpectedly positive definite")

    fails = 0
    for seed in range(1, 21):
        srng = np.random.default_rng(seed)
        Qm, _ = np.linalg.qr(srng.standard_normal((4, 4)))
        nu = srng.uniform(1.0, 2.0)
        lam = -np.concatenate([[nu], srng.uniform(nu, 2.5, 3)])
        Ups = Qm @ np.diag(lam) @ Qm.T
        ph = srng.uniform(0, 2 * np.pi, 4)

        def u_star(t, ph=ph):
            return np.sin(t + ph)

        rep = ltv_convergence_harness(
            Ups, 1.0, nu + srng.uniform(0.3, 1.0), 1.0, nu + srng.uniform(0.3, 1.0),
            u_star, horizon=12.0, h=1e-3, seed=seed,
        )
        if not rep.passed:
            fails += 1
    if fails:
        errors.append(f"{fails}/20 harness instances failed")

    M = stacked_consensus_matrix(
        ctx.certs("app2"),
        DirectedGraph.from_edges(5, presets.COMM_EDGES),
        ctx.app("app2").eta_iu,
    )
    rep = hurwitz_check(-M, cross_validate=True)
    if not (rep.is_hurwitz and rep.lyapunov_ok):
        errors.append(f"consensus matrix not Hurwitz (abscissa {rep.abscissa:.3e})")
    detail = (
        "positivity equivalence ok; 20/20 harness instances; "
        f"consensus abscissa {rep.abscissa:.3f}"
    )
    if errors:
        detail = "; ".join(errors)
    return CriterionResult("C09 stability suite", not errors, detail)


def criterion_10(ctx: VerificationContext) -> CriterionResult:
    """Brute-force grid minimization of the discounted cost agrees with the
    closed-form batch optimum on a two-parameter model."""
    reg = SinusoidRegressor([[1.0], [-1.0]], [[1.0], [1.0]], [[0.0], [0.0]])
    theta = np.array([0.7, -0.3])
    sub = SubspaceHyperParams(1.0, 1.0, 1.0, 1e-8)
    lrn = LearnerHyperParams(1.0, 1.0, 1.0, np.array([0.2, 0.1]))
    t_end = 5.0
    cfg = IntegratorConfig(H_STEP, t_end, 10)
    run = run_estimator(reg, theta, sub, lrn, cfg, backend=ctx.backend)
    from .regression import excitation_analysis

    cert = excitation_analysis(reg, np.pi, 6 * np.pi, rank_tol=1e-8)
    sol = batch_lsq_oracle(run.Q[-1], run.varphi[-1], cert, t_end, lrn)

    # independent route: trapezoid quadrature of the cost on a 5 x 5 grid
    ts = np.arange(0, round(t_end / H_STEP) + 1) * H_STEP
    phis = reg(ts)
    zs = phis @ theta
    wts = np.full(len(ts), H_STEP)
    wts[0] = wts[-1] = H_STEP / 2
    disc = np.exp(-lrn.beta * (t_end - ts))
    spacing = 0.05
    offsets = spacing * (np.arange(5) - 2)
    best, best_J = None, np.inf
    for da in offsets:
        for db in offsets:
            v = sol.theta_star + np.array([da, db])
            resid = zs - phis @ v
            J = 0.5 * float(np.sum(wts * disc * resid**2))
            J += 0.5 * lrn.alpha * np.exp(-lrn.beta * t_end) * float(
                np.sum((v - lrn.theta0_hat) ** 2)
            )
            if J < best_J:
                best, best_J = (float(da), float(db)), J
    ok = best == (0.0, 0.0)
    return CriterionResult(
        "C10 oracle equivalence",
        bool(ok),
        f"grid argmin offset {best} at spacing {spacing}",
    )


def criterion_11(ctx: VerificationContext, tmp_dir=None) -> CriterionResult:
    """Integrator order and byte-identical reruns."""
    import pathlib
    import tempfile

    errs = {}
    for h in (0.1, 0.05):
        cfg = IntegratorConfig(h, 1.0, 1)
        ts, ys = integrate(lambda t, y: -y, np.array([1.0]), cfg)
        errs[h] = abs(ys[-1, 0] - np.exp(-1.0))
    ratio = errs[0.1] / errs[0.05]
    ok_order = 8.0 <= ratio <= 32.0

    app = ctx.app("app1_k1")
    cfg = IntegratorConfig(H_STEP, 2.0, 10)
    noise = NoiseChannel("gaussian", 1.0, SEED)
    out = []
    tmp = pathlib.Path(tmp_dir or tempfile.mkdtemp(prefix="delearn-verify-"))
    for rep in range(2):
        run = run_network(app, cfg, noise=noise, backend=ctx.backend)
        path = tmp / f"det_{rep}.csv"
        write_csv(path, {"t": run.ts, "err": run.node_errors()[:, 0]})
        out.append(path.read_bytes())
    ok_det = out[0] == out[1]
    ok = ok_order and ok_det
    return CriterionResult(
        "C11 infrastructure",
        bool(ok),
        f"halving ratio {ratio:.1f} in [8, 32]; seeded reruns byte-identical: {ok_det}",
    )


CRITERIA = [
    criterion_1,
    criterion_2,
    criterion_3,
    criterion_4,
    criterion_5,
    criterion_6,
    criterion_7,
    criterion_8,
    criterion_9,
    criterion_10,
    criterion_11,
]


def run_acceptance(backend: str = "numba", printer=print) -> list[CriterionResult]:
    """Execute every acceptance criterion, printing one line each."""
    ctx = VerificationContext(backend=backend)
    results = []
    for crit in CRITERIA:
        res = crit(ctx)
        results.append(res)
        if printer is not None:
            printer(res.line())
    return results
