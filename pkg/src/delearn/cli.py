"""Command-line entry point: preset experiments, custom configs, and the
verification suite.

    delearn --preset fig1 --out-dir out/
    delearn --config my_experiment.json --seed 3 --no-svg
    delearn --preset verify

Configs are single JSON files (round-trip stable); presets ship in-repo.
Exit codes: 0 success, 2 configuration error, 3 numerical failure,
4 verification failure.
"""

from __future__ import annotations

import argparse
import json
import pathlib
import sys

import numpy as np

from . import presets
from .experiments import run_estimator, run_network
from .learner import LearnerHyperParams, LearnerNumericsError
from .regression import SinusoidRegressor
from .simkit import FitError, IntegrationError, IntegratorConfig, NoiseChannel, decay_rate_fit
from .subspace import SubspaceHyperParams
from .output import write_csv, write_svg

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_NUMERICS = 3
EXIT_VERIFY = 4


class ConfigError(ValueError):
    pass


DEFAULT_CONFIGS = {
    # subspace/learn demo preset: the rank-1 sinusoid pair
    "sinpair": {
        "experiment": "subspace",
        "regressor": {
            "type": "sinusoid",
            "amps": [[1.0], [-1.0]],
            "freqs": [[1.0], [1.0]],
            "phases": [[0.0], [0.0]],
        },
        "theta_true": [0.0, 0.0],
        "hyper": {"alpha": 1.0, "beta": 1.0, "gamma": 1.0, "delta": 1.0,
                  "kappa": 1.0, "rank_tol": 1e-8},
        "noise": {"kind": "none", "sigma": 0.0, "seed": 0},
        "integrator": {"step": 1e-3, "horizon": 25.0, "record_stride": 10},
    },
}


def _preset_config(name: str) -> dict:
    if name in DEFAULT_CONFIGS:
        return json.loads(json.dumps(DEFAULT_CONFIGS[name]))
    if name in presets.RUN_PRESETS:
        app_name, noisy = presets.RUN_PRESETS[name]
    elif name in presets.PRESET_NAMES:
        app_name, noisy = name, False
    else:
        raise ConfigError(
            f"unknown preset {name!r}; have "
            f"{sorted(list(presets.RUN_PRESETS) + list(presets.PRESET_NAMES) + list(DEFAULT_CONFIGS))}"
        )
    horizon = 60.0 if app_name == "app2" else 30.0
    stride = 20 if app_name == "app2" else 10
    return {
        "experiment": "sysid-network" if app_name == "app2" else "sysid-single",
        "preset": app_name,
        "noise": {
            "kind": "gaussian" if noisy else "none",
            "sigma": presets.NOISE_SIGMA if noisy else 0.0,
            "seed": presets.DEFAULT_SEED,
        },
        "integrator": {"step": 1e-3, "horizon": horizon, "record_stride": stride},
    }


def load_config(path) -> dict:
    try:
        with open(path) as fh:
            cfg = json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    round_trip = json.loads(json.dumps(cfg))
    if round_trip != cfg:
        raise ConfigError("config does not round-trip through JSON")
    return cfg


def _integrator(cfg: dict) -> IntegratorConfig:
    integ = cfg.get("integrator", {})
    try:
        return IntegratorConfig(
            step=float(integ.get("step", 1e-3)),
            horizon=float(integ.get("horizon", 30.0)),
            record_stride=int(integ.get("record_stride", 10)),
        )
    except ValueError as exc:
        raise ConfigError(f"integrator: {exc}") from exc


def _noise(cfg: dict) -> NoiseChannel:
    nz = cfg.get("noise", {})
    try:
        return NoiseChannel(
            kind=nz.get("kind", "none"),
            sigma=float(nz.get("sigma", 0.0)),
            seed=int(nz.get("seed", 0)),
        )
    except ValueError as exc:
        raise ConfigError(f"noise: {exc}") from exc


def _emit(columns: dict, name: str, out_dir: pathlib.Path, no_svg: bool, summary_cols):
    out_dir.mkdir(parents=True, exist_ok=True)
    csv_path = out_dir / f"{name}.csv"
    write_csv(csv_path, columns)
    wrote = [str(csv_path)]
    if not no_svg:
        svg_path = out_dir / f"{name}.svg"
        series = {k: columns[k] for k in summary_cols if k in columns}
        write_svg(svg_path, columns["t"], series, title=name, log_y=True)
        wrote.append(str(svg_path))
    return wrote


def _summary_table(columns: dict, names) -> str:
    rows = []
    t = np.asarray(columns["t"])
    for name in names:
        if name not in columns:
            continue
        v = np.asarray(columns[name], dtype=float)
        try:
            fit = decay_rate_fit(t, np.abs(v), (t[-1] * 0.25, t[-1]))
            slope = f"{fit.slope:+.3f}"
        except (FitError, FloatingPointError):
            slope = "   n/a"
        rows.append(f"  {name:<14s} final {v[-1]: .6e}   log-slope {slope}")
    return "\n".join(rows)


def run(cfg: dict, out_dir: pathlib.Path, no_svg: bool, name: str) -> int:
    kind = cfg.get("experiment")
    integ = _integrator(cfg)
    noise = _noise(cfg)

    if kind in ("sysid-single", "sysid-network"):
        app = presets.application(cfg["preset"])
        certs = app.certificates()
        run_ = run_network(
            app, integ, noise=noise, certs=certs if kind == "sysid-network" else None
        )
        columns = run_.columns()
        if kind == "sysid-single":
            cert = certs[0]
            th = run_.theta_hat_single(0)
            diff = th - app.theta
            columns["track_err"] = np.linalg.norm(th - run_.theta_star(cert, 0), axis=1)
            columns["ident_err"] = np.linalg.norm(diff @ cert.N_d, axis=1)
            columns["proj_err"] = np.linalg.norm(
                np.einsum("kab,kb->ka", run_.P[:, 0], diff), axis=1
            )
        err_cols = [k for k in columns if k != "t"]
    elif kind in ("subspace", "learn"):
        reg = SinusoidRegressor.from_config(cfg["regressor"])
        hyper = cfg.get("hyper", {})
        sub_hp = SubspaceHyperParams(
            beta=float(hyper.get("beta", 1.0)),
            gamma=float(hyper.get("gamma", 1.0)),
            delta=float(hyper.get("delta", 1.0)),
            rank_tol=float(hyper.get("rank_tol", 1e-8)),
        )
        learn_hp = LearnerHyperParams(
            alpha=float(hyper.get("alpha", 1.0)),
            beta=sub_hp.beta,
            kappa=float(hyper.get("kappa", 1.0)),
            theta0_hat=np.asarray(
                cfg.get("theta0_hat", np.zeros(reg.dim)), dtype=float
            ),
        )
        theta_true = np.asarray(cfg.get("theta_true", np.zeros(reg.dim)), dtype=float)
        run_ = run_estimator(reg, theta_true, sub_hp, learn_hp, integ, noise=noise)
        from .regression import excitation_analysis

        T = float(cfg.get("window", 2 * np.pi))
        cert = excitation_analysis(reg, T, 6 * T, rank_tol=sub_hp.rank_tol)
        columns = run_.columns(cert)
        err_cols = ["p_err", "track_err", "ident_err", "proj_err"]
    elif kind == "distributed":
        app = presets.application(cfg.get("preset", "app2"))
        run_ = run_network(app, integ, noise=noise, certs=app.certificates())
        columns = run_.columns()
        err_cols = [k for k in columns if k != "t"]
    else:
        raise ConfigError(f"unknown experiment kind {kind!r}")

    wrote = _emit(columns, name, out_dir, no_svg, err_cols)
    print(f"experiment {name}: {integ.n_steps} steps, recorded {len(columns['t'])} samples")
    print(_summary_table(columns, err_cols))
    for w in wrote:
        print(f"wrote {w}")
    return EXIT_OK


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="delearn",
        description="Parameter-learning experiments under deficient excitation",
    )
    parser.add_argument("--config", type=pathlib.Path, help="JSON experiment config")
    parser.add_argument("--preset", help="named preset (fig1..fig4, fig8, fig9, "
                                         "app1_k1, app1_k3, app2, sinpair, verify)")
    parser.add_argument("--seed", type=int, help="override noise seed")
    parser.add_argument("--horizon", type=float, help="override horizon [s]")
    parser.add_argument("--step", type=float, help="override integrator step [s]")
    parser.add_argument("--out-dir", type=pathlib.Path, default=pathlib.Path("out"))
    parser.add_argument("--no-svg", action="store_true", help="skip SVG emission")
    args = parser.parse_args(argv)

    try:
        if args.preset == "verify" or (args.config is None and args.preset is None):
            if args.config is None and args.preset is None:
                parser.print_usage()
                return EXIT_CONFIG
            from .verification import run_acceptance

            results = run_acceptance()
            return EXIT_OK if all(r.passed for r in results) else EXIT_VERIFY

        if args.config is not None:
            cfg = load_config(args.config)
            name = args.config.stem
        else:
            cfg = _preset_config(args.preset)
            name = args.preset
        if args.seed is not None:
            cfg.setdefault("noise", {})["seed"] = args.seed
        if args.horizon is not None:
            cfg.setdefault("integrator", {})["horizon"] = args.horizon
        if args.step is not None:
            cfg.setdefault("integrator", {})["step"] = args.step
        return run(cfg, args.out_dir, args.no_svg, name)
    except ConfigError as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (LearnerNumericsError, IntegrationError, FloatingPointError) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICS
    except (KeyError, ValueError) as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
