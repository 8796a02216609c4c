"""Acceptance gate: every criterion at its stated tolerance, one printed
pass/fail line each.

Expensive experiment runs are shared through a session-scoped context, so
the identity suite inspects the very trajectories the convergence criteria
were judged on.  Run with ``pytest -s tests/test_acceptance.py`` to see the
per-criterion lines as they complete (they are also echoed by
``delearn --preset verify``).
"""

from delearn import verification


def _check(result):
    print(result.line())
    assert result.passed, result.detail


def test_c01_projector_convergence(ctx):
    _check(verification.criterion_1(ctx))


def test_c02_optimum_tracking(ctx):
    _check(verification.criterion_2(ctx))


def test_c03_noise_free_rate(ctx):
    _check(verification.criterion_3(ctx))


def test_c04_parameter_recovery(ctx):
    _check(verification.criterion_4(ctx))


def test_c05_constraint_reproduction(ctx):
    _check(verification.criterion_5(ctx))


def test_c06_distributed_convergence(ctx):
    _check(verification.criterion_6(ctx))


def test_c07_reference_tracking(ctx):
    _check(verification.criterion_7(ctx))


def test_c08_identity_suite(ctx):
    _check(verification.criterion_8(ctx))


def test_c09_stability_suite(ctx):
    _check(verification.criterion_9(ctx))


def test_c10_oracle_equivalence(ctx):
    _check(verification.criterion_10(ctx))


def test_c11_infrastructure(ctx, tmp_path):
    _check(verification.criterion_11(ctx, tmp_dir=tmp_path))
