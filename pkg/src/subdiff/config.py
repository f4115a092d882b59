"""Experiment configuration: flat sectioned key-value files.

The grammar is INI-style with exactly four sections; unknown sections or
keys are rejected so typos cannot silently change an experiment.

    [spec]   kind = stable | tempered_stable | distributed_order | tabulated_levy
             alpha, temper, mixing (beta:weight pairs, comma separated),
             tail_table (path to a two-column t,tail CSV)
    [run]    seed, n_paths, dtau, du, cutoff, horizon, workers, process,
             stationary, t_start, t_stop, t_step, x_start, x_stop, x_step
    [test]   times, checkpoints, t_list, lags, a_grid, laplace_pairs,
             epsilon, c, gamma, n_series, series_length, crossover_time,
             n_boot, tolerance_band
    [io]     output_dir, format

Lists are comma separated; pair lists use colon-separated pairs.  Values
keep python float syntax (1e-3 etc.).
"""

from __future__ import annotations

import configparser
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from scipy.interpolate import PchipInterpolator

from .bernstein import BernsteinSpec, DistributedOrder, Stable, TabulatedLevy, TemperedStable
from .errors import ConfigError

__all__ = ["SimConfig", "load_config", "spec_from_mapping", "config_as_dict"]

_SPEC_KEYS = {"kind", "alpha", "temper", "mixing", "tail_table"}
_RUN_KEYS = {
    "seed",
    "n_paths",
    "dtau",
    "du",
    "cutoff",
    "horizon",
    "workers",
    "process",
    "stationary",
    "t_start",
    "t_stop",
    "t_step",
    "x_start",
    "x_stop",
    "x_step",
}
_TEST_KEYS = {
    "times",
    "checkpoints",
    "t_list",
    "lags",
    "a_grid",
    "laplace_pairs",
    "epsilon",
    "c",
    "gamma",
    "n_series",
    "series_length",
    "crossover_time",
    "n_boot",
    "tolerance_band",
}
_IO_KEYS = {"output_dir", "format"}

_RUN_DEFAULTS = {
    "seed": 0,
    "n_paths": 1000,
    "dtau": 1e-3,
    "du": 1e-3,
    "cutoff": 1e-4,
    "horizon": 1.0,
    "workers": 1,
    "process": "subordinator",
    "stationary": False,
    "t_start": 0.25,
    "t_stop": 2.0,
    "t_step": 0.25,
    "x_start": 0.0,
    "x_stop": 4.0,
    "x_step": 0.25,
}
_TEST_DEFAULTS = {
    "times": (0.5, 1.0, 2.0),
    "checkpoints": (0.25, 0.5, 1.0),
    "t_list": (1e2, 1e3, 1e4),
    "lags": (1, 2, 4, 8, 16, 32, 64),
    "a_grid": ((0.5, 0.5), (1.0, 1.0), (1.0, 2.0), (2.0, 2.0)),
    "laplace_pairs": ((0.5, 1.0),),
    "epsilon": 0.01,
    "c": 1e-3,
    "gamma": 1.01,
    "n_series": 10000,
    "series_length": 128,
    "crossover_time": 1e3,
    "n_boot": 200,
    "tolerance_band": 3.0,
}


@dataclass(frozen=True)
class SimConfig:
    """Fully resolved experiment description."""

    spec_section: dict
    run: dict
    test: dict
    io: dict

    @property
    def seed(self) -> int:
        return int(self.run["seed"])

    def spec(self) -> BernsteinSpec:
        return spec_from_mapping(self.spec_section)

    def t_grid(self) -> np.ndarray:
        start, stop, step = (self.run[k] for k in ("t_start", "t_stop", "t_step"))
        if step <= 0 or stop <= start:
            raise ConfigError("t grid needs t_stop > t_start and t_step > 0")
        n = int(round((stop - start) / step))
        return start + step * np.arange(n + 1)

    def x_grid(self) -> np.ndarray:
        start, stop, step = (self.run[k] for k in ("x_start", "x_stop", "x_step"))
        if step <= 0 or stop < start:
            raise ConfigError("x grid needs x_stop >= x_start and x_step > 0")
        n = int(round((stop - start) / step))
        return start + step * np.arange(n + 1)


def _parse_float_list(text: str) -> tuple:
    return tuple(float(v) for v in text.split(",") if v.strip())


def _parse_int_list(text: str) -> tuple:
    return tuple(int(v) for v in text.split(",") if v.strip())


def _parse_pairs(text: str) -> tuple:
    out = []
    for item in text.split(","):
        item = item.strip()
        if not item:
            continue
        a, sep, b = item.partition(":")
        if not sep:
            raise ConfigError(f"expected colon-separated pair, got {item!r}")
        out.append((float(a), float(b)))
    return tuple(out)


def _parse_bool(text: str) -> bool:
    lowered = text.strip().lower()
    if lowered in ("1", "true", "yes", "on"):
        return True
    if lowered in ("0", "false", "no", "off"):
        return False
    raise ConfigError(f"expected boolean, got {text!r}")


_PARSERS = {
    ("run", "seed"): int,
    ("run", "n_paths"): int,
    ("run", "workers"): int,
    ("run", "stationary"): _parse_bool,
    ("run", "process"): str,
    ("test", "times"): _parse_float_list,
    ("test", "checkpoints"): _parse_float_list,
    ("test", "t_list"): _parse_float_list,
    ("test", "lags"): _parse_int_list,
    ("test", "a_grid"): _parse_pairs,
    ("test", "laplace_pairs"): _parse_pairs,
    ("test", "n_series"): int,
    ("test", "series_length"): int,
    ("test", "n_boot"): int,
}


def load_config(path: str | Path | None, overrides: dict | None = None) -> SimConfig:
    """Parse a config file, apply flat ``section.key`` overrides, validate."""
    parser = configparser.ConfigParser(inline_comment_prefixes=("#", ";"))
    if path is not None:
        read = parser.read(str(path))
        if not read:
            raise ConfigError(f"config file {path!s} not found")
    sections = {"spec": {}, "run": dict(_RUN_DEFAULTS), "test": dict(_TEST_DEFAULTS), "io": {"output_dir": "out", "format": "csv"}}
    allowed = {"spec": _SPEC_KEYS, "run": _RUN_KEYS, "test": _TEST_KEYS, "io": _IO_KEYS}
    for section in parser.sections():
        if section not in sections:
            raise ConfigError(f"unknown config section [{section}]")
        for key, raw in parser.items(section):
            if key not in allowed[section]:
                raise ConfigError(f"unknown key {key!r} in section [{section}]")
            sections[section][key] = _convert(section, key, raw)
    for dotted, value in (overrides or {}).items():
        section, _, key = dotted.partition(".")
        if section not in sections or key not in allowed[section]:
            raise ConfigError(f"unknown override {dotted!r}")
        sections[section][key] = (
            _convert(section, key, value) if isinstance(value, str) else value
        )
    _validate(sections)
    return SimConfig(
        spec_section=sections["spec"],
        run=sections["run"],
        test=sections["test"],
        io=sections["io"],
    )


def _convert(section: str, key: str, raw: str):
    parser = _PARSERS.get((section, key))
    if parser is not None:
        return parser(raw)
    if section == "spec":
        if key == "mixing":
            return _parse_pairs(raw)
        if key in ("kind", "tail_table"):
            return raw.strip()
        return float(raw)
    if section == "io":
        return raw.strip()
    return float(raw)


def _validate(sections: dict) -> None:
    run = sections["run"]
    for key in ("dtau", "du", "cutoff", "horizon", "t_step", "x_step"):
        if run[key] <= 0:
            raise ConfigError(f"run.{key} must be positive")
    for key in ("n_paths", "workers"):
        if run[key] < 1:
            raise ConfigError(f"run.{key} must be >= 1")
    if not 0 <= run["seed"] < 2**64:
        raise ConfigError("run.seed must be a 64-bit nonnegative integer")
    if run["process"] not in ("subordinator", "inverse", "subdiffusion"):
        raise ConfigError(f"unknown run.process {run['process']!r}")
    test = sections["test"]
    if test["epsilon"] < 0:
        raise ConfigError("test.epsilon must be nonnegative")
    if test["gamma"] <= 1:
        raise ConfigError("test.gamma must exceed 1")
    if test["c"] <= 0:
        raise ConfigError("test.c must be positive")
    if sections["io"]["format"] not in ("csv", "json"):
        raise ConfigError("io.format must be csv or json")


def spec_from_mapping(mapping: dict) -> BernsteinSpec:
    """Build the exponent model from its config keys."""
    kind = mapping.get("kind")
    if kind is None:
        raise ConfigError("spec.kind is required")
    if kind == "stable":
        return Stable(alpha=float(mapping.get("alpha", 0.5)))
    if kind == "tempered_stable":
        return TemperedStable(
            alpha=float(mapping.get("alpha", 0.5)),
            temper=float(mapping.get("temper", 1.0)),
        )
    if kind == "distributed_order":
        mixing = mapping.get("mixing")
        if not mixing:
            raise ConfigError("distributed_order needs spec.mixing")
        return DistributedOrder(mixing=tuple(mixing))
    if kind == "tabulated_levy":
        path = mapping.get("tail_table")
        if not path:
            raise ConfigError("tabulated_levy needs spec.tail_table")
        return TabulatedLevy(tail=_tail_from_csv(path))
    raise ConfigError(f"unknown spec.kind {kind!r}")


def _tail_from_csv(path: str):
    """Monotone tail handle from a two-column (t, tail) table.

    Interpolates log-log with a monotone cubic; extrapolates both ends
    as power laws fitted to the edge slopes.
    """
    data = np.loadtxt(path, delimiter=",", comments="#")
    if data.ndim != 2 or data.shape[1] != 2 or data.shape[0] < 4:
        raise ConfigError("tail table must have >= 4 rows of 't,tail'")
    t, tail = data[:, 0], data[:, 1]
    if np.any(t <= 0) or np.any(tail <= 0):
        raise ConfigError("tail table entries must be positive")
    if np.any(np.diff(t) <= 0) or np.any(np.diff(tail) > 0):
        raise ConfigError("tail table must have increasing t and nonincreasing tail")
    lt, ln = np.log(t), np.log(tail)
    interp = PchipInterpolator(lt, ln, extrapolate=False)
    slope_lo = (ln[1] - ln[0]) / (lt[1] - lt[0])
    slope_hi = (ln[-1] - ln[-2]) / (lt[-1] - lt[-2])

    def tail_fn(x):
        x = np.asarray(x, dtype=float)
        lx = np.log(x)
        out = interp(np.clip(lx, lt[0], lt[-1]))
        out = np.where(lx < lt[0], ln[0] + slope_lo * (lx - lt[0]), out)
        out = np.where(lx > lt[-1], ln[-1] + slope_hi * (lx - lt[-1]), out)
        result = np.exp(out)
        return float(result) if result.ndim == 0 else result

    return tail_fn


def config_as_dict(cfg: SimConfig) -> dict:
    """Canonical nested-dict form (JSON-ready, deterministic ordering)."""

    def clean(value):
        if isinstance(value, tuple):
            return [clean(v) for v in value]
        if isinstance(value, (np.floating, np.integer)):
            return value.item()
        if isinstance(value, float) and math.isinf(value):
            return "inf"
        return value

    # workers is scheduling detail: the seed-derivation contract makes
    # outputs independent of it, so it must not enter the result identity
    run = {k: clean(v) for k, v in sorted(cfg.run.items()) if k != "workers"}
    return {
        "spec": {k: clean(v) for k, v in sorted(cfg.spec_section.items())},
        "run": run,
        "test": {k: clean(v) for k, v in sorted(cfg.test.items())},
        "io": {k: clean(v) for k, v in sorted(cfg.io.items())},
    }
