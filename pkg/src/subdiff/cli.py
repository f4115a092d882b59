"""Command-line interface: one executable exposing simulation, the
semi-analytic oracles, and the diagnostics suite.

Subcommands: exponent, density, kernel, simulate, oracle, fk, diagnose.
Exit codes: 0 success/pass, 1 test failure, 2 usage or config error,
3 inconclusive, 4 numeric error.  Reports are JSON (one object per
file, schema_version field, no volatile fields, byte-identical for
equal seeds); tabular output is CSV with a schema_version comment line
and a header row.  Only the configured output directory is written to;
the environment variable SUBDIFF_OUTPUT_DIR overrides it.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import math
import os
import sys
from pathlib import Path

import numpy as np

from . import analytics, diagnostics, laplace
from .bernstein import eval_exponent
from .config import SimConfig, config_as_dict, load_config, spec_from_mapping
from .errors import ConfigError, NumericError, SubdiffError
from .inverse_process import inverse_ensemble
from .seeding import substream
from .subdiffusion import DiffusionSpec, fk_ensemble, x_ensemble
from .subordinator_sim import (
    TemperedStable,
    rejection_acceptance_probability,
    simulate_path,
)

SCHEMA_VERSION = 1

EXIT_OK = 0
EXIT_FAIL = 1
EXIT_USAGE = 2
EXIT_INCONCLUSIVE = 3
EXIT_NUMERIC = 4


def _output_dir(cfg: SimConfig) -> Path:
    override = os.environ.get("SUBDIFF_OUTPUT_DIR")
    out = Path(override) if override else Path(cfg.io["output_dir"])
    out.mkdir(parents=True, exist_ok=True)
    return out


def _write_csv(path: Path, header: list, rows: list) -> None:
    with open(path, "w") as fh:
        fh.write(f"# schema_version={SCHEMA_VERSION}\n")
        fh.write(",".join(header) + "\n")
        for row in rows:
            fh.write(",".join("" if v is None else f"{v:.12g}" if isinstance(v, float) else str(v) for v in row) + "\n")


def _config_hash(cfg_dict: dict) -> str:
    canon = json.dumps(cfg_dict, sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(canon.encode()).hexdigest()[:16]


def _write_report(path: Path, report: diagnostics.TestReport, cfg: SimConfig) -> None:
    cfg_dict = config_as_dict(cfg)
    payload = dict(report.as_dict())
    payload["schema_version"] = SCHEMA_VERSION
    payload["config"] = cfg_dict
    payload["config_hash"] = _config_hash(cfg_dict)
    with open(path, "w") as fh:
        json.dump(payload, fh, sort_keys=True, indent=1)
        fh.write("\n")


# ---------------------------------------------------------------------------
# registries for the Feynman-Kac subcommand


def _parse_registry(text: str, table: dict, what: str):
    name, _, args = text.partition(":")
    if name not in table:
        raise ConfigError(f"unknown {what} {name!r}; choose from {sorted(table)}")
    params = [float(v) for v in args.split(",") if v.strip()] if args else []
    return table[name](*params)


_DRIFTS = {
    "zero": lambda: lambda x: 0.0 * x,
    "const": lambda v=0.0: lambda x: v + 0.0 * x,
    "linear": lambda a=1.0: lambda x: a * x,
    "meanrev": lambda k=1.0, m=0.0: lambda x: k * (m - x),
}
_VOLS = {
    "const": lambda v=1.0: lambda x: v + 0.0 * x,
    "proportional": lambda a=1.0: lambda x: a * np.abs(x),
}
_HS = {
    "zero": lambda: lambda x: 0.0 * x,
    "const": lambda c=1.0: lambda x: c + 0.0 * x,
    "square": lambda: lambda x: x * x,
}
_GS = {
    "one": lambda: lambda x: 1.0 + 0.0 * x,
    "cos": lambda: np.cos,
    "tanh": lambda: np.tanh,
    "gauss": lambda: lambda x: np.exp(-np.asarray(x) ** 2),
}


# ---------------------------------------------------------------------------
# subcommands


def _cmd_exponent(args, cfg: SimConfig) -> int:
    spec = _spec_from_args(args, cfg)
    if args.u is None or args.u <= 0:
        raise ConfigError("exponent needs a positive --u")
    value = float(eval_exponent(spec, args.u))
    print(f"{value:.12g}")
    return EXIT_OK


def _spec_from_args(args, cfg: SimConfig):
    mapping = dict(cfg.spec_section)
    if getattr(args, "kind", None):
        mapping["kind"] = args.kind
    if getattr(args, "alpha", None) is not None:
        mapping["alpha"] = args.alpha
    if getattr(args, "temper", None) is not None:
        mapping["temper"] = args.temper
    if getattr(args, "mixing", None):
        from .config import _parse_pairs

        mapping["mixing"] = _parse_pairs(args.mixing)
    return spec_from_mapping(mapping)


def _cmd_density(args, cfg: SimConfig) -> int:
    spec = cfg.spec()
    out = _output_dir(cfg)
    method = laplace.default_method(spec)
    rows = []
    for t in cfg.t_grid():
        if t <= 0:
            continue
        for x in cfg.x_grid():
            handle = laplace.density_transform(spec, float(x))
            res = laplace.invert_laplace(handle, float(t), method=method)
            value = 0.0 if -laplace.NEGATIVE_CLAMP < res.value < 0.0 else res.value
            rows.append((float(t), float(x), float(value), float(res.err_estimate)))
    path = out / "density.csv"
    _write_csv(path, ["t", "x", "value", "err_estimate"], rows)
    print(f"density: wrote {len(rows)} rows to {path}")
    return EXIT_OK


def _cmd_kernel(args, cfg: SimConfig) -> int:
    spec = cfg.spec()
    out = _output_dir(cfg)
    method = laplace.default_method(spec)
    rows = []
    for t in cfg.t_grid():
        if t <= 0:
            continue
        res = laplace.invert_laplace(laplace.kernel_transform(spec), float(t), method=method)
        rows.append((float(t), None, float(res.value), float(res.err_estimate)))
    path = out / "kernel.csv"
    _write_csv(path, ["t", "x", "value", "err_estimate"], rows)
    print(f"kernel: wrote {len(rows)} rows to {path}")
    return EXIT_OK


def _cmd_simulate(args, cfg: SimConfig) -> int:
    spec = cfg.spec()
    out = _output_dir(cfg)
    run = cfg.run
    n_paths, dtau, seed = int(run["n_paths"]), run["dtau"], cfg.seed
    process = run["process"]
    if isinstance(spec, TemperedStable):
        acc = rejection_acceptance_probability(spec, dtau)
        if acc < 1e-3:
            print(
                f"warning: tempering acceptance {acc:.2e} at dtau={dtau:g}; "
                "use a smaller dtau",
                file=sys.stderr,
            )
    rows = []
    if process == "subordinator":
        for i in range(n_paths):
            path = simulate_path(spec, run["horizon"], dtau, substream(seed, i, 0), cutoff=run["cutoff"])
            rows.extend((i, float(tau), float(v)) for tau, v in zip(path.grid, path.values))
    else:
        t_grid = cfg.t_grid()
        if process == "inverse":
            S, _ = inverse_ensemble(
                spec, t_grid, n_paths, dtau, seed,
                stationary=run["stationary"], workers=int(run["workers"]),
            )
            values = S
        else:
            X, _ = x_ensemble(
                spec, t_grid, n_paths, dtau, seed,
                stationary=run["stationary"], workers=int(run["workers"]),
            )
            values = X
        for i in range(n_paths):
            rows.extend((i, float(t), float(v)) for t, v in zip(t_grid, values[i]))
    path = out / "paths.csv"
    _write_csv(path, ["path_id", "clock", "value"], rows)
    print(f"simulate: wrote {n_paths} {process} paths to {path}")
    return EXIT_OK


def _cmd_oracle(args, cfg: SimConfig) -> int:
    spec = cfg.spec()
    out = _output_dir(cfg)
    mode = args.mode
    rows: list = []
    if mode == "laplace":
        theta, tau = args.theta, args.tau
        stationary = bool(args.stationary)
        if stationary:
            value = analytics.stationary_laplace_S_at(spec, theta, tau)
        else:
            value = analytics.laplace_S_at(spec, theta, tau)
        header = ["theta", "tau", "stationary", "value", "err_estimate"]
        rows.append((theta, tau, int(stationary), value, 1e-7 * abs(value) + 1e-10))
    elif mode == "joint":
        thetas = [float(v) for v in args.thetas.split(",")]
        taus = [float(v) for v in args.taus.split(",")]
        value = analytics.joint_laplace(spec, thetas, taus, stationary=bool(args.stationary))
        header = ["thetas", "taus", "stationary", "value", "err_estimate"]
        rows.append((args.thetas.replace(",", ";"), args.taus.replace(",", ";"), int(bool(args.stationary)), value, 1e-3 * abs(value)))
    elif mode == "moments":
        value = analytics.moment_increment(
            spec, args.z, args.n, args.k, stationary_limit=bool(args.stationary)
        )
        header = ["z", "n", "k", "stationary_limit", "value", "err_estimate"]
        rows.append((args.z, args.n, args.k, int(bool(args.stationary)), value, 2e-3 * abs(value)))
    elif mode == "density":
        header = ["t", "x", "value", "err_estimate"]
        for t in cfg.t_grid():
            if t <= 0:
                continue
            xs = cfg.x_grid()
            vals = analytics.subordinated_density_grid(spec, xs, float(t))
            rows.extend((float(t), float(x), float(v), 1e-8) for x, v in zip(xs, vals))
    elif mode == "fk":
        g = _parse_registry(args.g, _GS, "payoff")
        value = analytics.fk_quadrature(spec, args.h_const, g, args.x0, args.t)
        header = ["h_const", "g", "x0", "t", "value", "err_estimate"]
        rows.append((args.h_const, args.g, args.x0, args.t, value, 1e-8))
    elif mode == "lil":
        c, gamma = cfg.test["c"], cfg.test["gamma"]
        header = ["t", "c", "gamma", "value", "err_estimate"]
        for t in args.t_values or [1e3, 1e4, 1e5, 1e6]:
            g_val = analytics.lil_envelope(spec, float(t), c, gamma)
            resid = abs(analytics.lil_h(spec, g_val, c, gamma) - t) / t
            rows.append((float(t), c, gamma, g_val, resid))
    else:
        raise ConfigError(f"unknown oracle mode {mode!r}")
    path = out / f"oracle_{mode}.csv"
    _write_csv(path, header, rows)
    print(f"oracle {mode}: wrote {len(rows)} rows to {path}")
    return EXIT_OK


def _cmd_fk(args, cfg: SimConfig) -> int:
    spec = cfg.spec()
    out = _output_dir(cfg)
    run, test = cfg.run, cfg.test
    drift = _parse_registry(args.drift, _DRIFTS, "drift")
    vol = _parse_registry(args.vol, _VOLS, "volatility")
    h = _parse_registry(args.h, _HS, "rate")
    g = _parse_registry(args.g, _GS, "payoff")
    dspec = DiffusionSpec(drift_fn=lambda x: float(drift(x)), vol_fn=lambda x: float(vol(x)), x0=args.x0)
    t = args.t
    draws = fk_ensemble(
        dspec, lambda x: float(h(x)), lambda x: float(g(x)), spec, t,
        run["du"], int(run["n_paths"]), cfg.seed, dtau=run["dtau"],
        workers=int(run["workers"]),
    )
    est = diagnostics.EstimateWithCI.from_samples(draws)
    oracle_value = None
    if args.drift == "zero" and args.vol in ("const", "const:1") and args.h.split(":")[0] in ("zero", "const"):
        h_const = 0.0 if args.h.startswith("zero") else float(args.h.split(":")[1]) if ":" in args.h else 1.0
        oracle_value = analytics.fk_quadrature(spec, h_const, g, args.x0, t)
    rows = [(t, est.mean, est.stderr, oracle_value)]
    path = out / "fk.csv"
    _write_csv(path, ["t", "estimate", "stderr", "oracle_value"], rows)
    msg = f"fk: estimate {est.mean:.6g} +- {est.stderr:.2g}"
    if oracle_value is not None:
        msg += f" (oracle {oracle_value:.6g})"
    print(msg + f", wrote {path}")
    return EXIT_OK


_DIAGNOSE_NAMES = ("martingale", "measure_change", "lln", "lil", "msd", "mixing")


def _cmd_diagnose(args, cfg: SimConfig) -> int:
    spec = cfg.spec()
    out = _output_dir(cfg)
    run, test = cfg.run, cfg.test
    name = args.test_name
    workers = int(run["workers"])
    seed = cfg.seed
    n_paths = int(run["n_paths"])
    if name == "martingale":
        report = diagnostics.run_martingale_suite(
            spec, n_paths, test["times"], seed, dtau=run["dtau"], workers=workers
        )
    elif name == "measure_change":
        report = diagnostics.run_measure_change_test(
            spec, n_paths, test["epsilon"], run["horizon"], test["checkpoints"],
            seed, dtau=run["dtau"], workers=workers,
        )
    elif name == "lln":
        report = diagnostics.run_lln_test(
            spec, n_paths, test["t_list"], seed, dtau=run["dtau"], workers=workers
        )
    elif name == "lil":
        report = diagnostics.run_lil_test(
            spec, n_paths, horizon=run["horizon"], c=test["c"], gamma=test["gamma"],
            seed=seed, dtau=run["dtau"], workers=workers,
        )
    elif name == "msd":
        from .bernstein import mean_T1

        crossover = test.get("crossover_time") if math.isfinite(mean_T1(spec)) else None
        report = diagnostics.run_msd_test(
            spec, n_paths, test["times"], seed, dtau=run["dtau"], workers=workers,
            crossover_time=crossover,
        )
    elif name == "mixing":
        report = diagnostics.run_mixing_test(
            spec, int(test["n_series"]), int(test["series_length"]),
            lags=test["lags"], a_grid=test["a_grid"], seed=seed,
            dtau=run["dtau"], workers=workers, laplace_pairs=test["laplace_pairs"],
            n_boot=int(test["n_boot"]),
        )
    else:
        raise ConfigError(f"unknown diagnostic {name!r}; choose from {_DIAGNOSE_NAMES}")
    path = out / f"report_{name}.json"
    _write_report(path, report, cfg)
    status = "PASS" if report.passed else ("INCONCLUSIVE" if report.inconclusive else "FAIL")
    print(f"diagnose {name}: {status} ({len(report.statistics)} statistics) -> {path}")
    if report.inconclusive:
        return EXIT_INCONCLUSIVE
    return EXIT_OK if report.passed else EXIT_FAIL


# ---------------------------------------------------------------------------


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="subdiff",
        description="simulation and verification toolkit for inverse-subordinator subdiffusion",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--config", default=None, help="experiment config file")
        p.add_argument("--seed", type=int, default=None, help="override run.seed")
        p.add_argument("--workers", type=int, default=None, help="override run.workers")
        p.add_argument("--output-dir", default=None, help="override io.output_dir")
        p.add_argument(
            "--set", action="append", default=[], metavar="SECTION.KEY=VALUE",
            help="override any config key",
        )

    p = sub.add_parser("exponent", help="evaluate the Bernstein exponent f(u)")
    common(p)
    p.add_argument("--kind", default=None)
    p.add_argument("--alpha", type=float, default=None)
    p.add_argument("--temper", type=float, default=None)
    p.add_argument("--mixing", default=None, help="beta:weight pairs, comma separated")
    p.add_argument("--u", type=float, required=True)

    for name, help_text in (
        ("density", "invert the inverse-subordinator density s(x, t)"),
        ("kernel", "invert the memory kernel M(t)"),
        ("simulate", "simulate paths and emit CSV"),
    ):
        p = sub.add_parser(name, help=help_text)
        common(p)

    p = sub.add_parser("oracle", help="evaluate semi-analytic oracles")
    common(p)
    p.add_argument("--mode", required=True, choices=["laplace", "joint", "moments", "density", "fk", "lil"])
    p.add_argument("--theta", type=float, default=-1.0)
    p.add_argument("--tau", type=float, default=1.0)
    p.add_argument("--thetas", default="-1.0,-1.0")
    p.add_argument("--taus", default="0.5,1.0")
    p.add_argument("--stationary", action="store_true")
    p.add_argument("--z", type=float, default=0.0)
    p.add_argument("--n", type=float, default=0.0)
    p.add_argument("--k", type=int, default=1)
    p.add_argument("--h-const", type=float, default=0.0)
    p.add_argument("--g", default="one")
    p.add_argument("--x0", type=float, default=0.0)
    p.add_argument("--t", type=float, default=1.0)
    p.add_argument("--t-values", type=float, nargs="*", default=None)

    p = sub.add_parser("fk", help="Monte-Carlo Feynman-Kac functional")
    common(p)
    p.add_argument("--drift", default="zero")
    p.add_argument("--vol", default="const:1")
    p.add_argument("--h", default="zero")
    p.add_argument("--g", default="cos")
    p.add_argument("--x0", type=float, default=0.0)
    p.add_argument("--t", type=float, default=1.0)

    p = sub.add_parser("diagnose", help="run a theorem diagnostic")
    common(p)
    p.add_argument("test_name", choices=_DIAGNOSE_NAMES)

    return parser


_COMMANDS = {
    "exponent": _cmd_exponent,
    "density": _cmd_density,
    "kernel": _cmd_kernel,
    "simulate": _cmd_simulate,
    "oracle": _cmd_oracle,
    "fk": _cmd_fk,
    "diagnose": _cmd_diagnose,
}


def main(argv=None) -> int:
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_USAGE if exc.code not in (0, None) else EXIT_OK
    try:
        overrides = {}
        for item in args.set:
            dotted, _, value = item.partition("=")
            if not value:
                raise ConfigError(f"override {item!r} must look like section.key=value")
            overrides[dotted.strip()] = value.strip()
        if args.seed is not None:
            overrides["run.seed"] = str(args.seed)
        if args.workers is not None:
            overrides["run.workers"] = str(args.workers)
        if args.output_dir is not None:
            overrides["io.output_dir"] = args.output_dir
        cfg = load_config(args.config, overrides)
        return _COMMANDS[args.command](args, cfg)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except NumericError as exc:
        print(f"numeric error: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except SubdiffError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE


run = main


if __name__ == "__main__":
    sys.exit(main())
