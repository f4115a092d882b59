"""Inverse subordinator paths and the stationary modification.

The inverse S(t) = inf{tau : T(tau) > t} is computed on simulation grids
as the right-continuous counting inverse (first grid time whose T value
exceeds the level), which matches the inf definition up to one grid
cell and is monotone by construction.  The stationary modification
starts the subordinator from an independent initial delay T0 with the
size-biased law F0(x) = (1/mu) int_0^x nu(y, inf) dy, which makes the
increments of the inverse (and of the time-changed Brownian motion)
stationary.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache
from typing import Optional

import numpy as np
from scipy import integrate
from scipy.interpolate import PchipInterpolator

from .bernstein import BernsteinSpec, levy_tail, mean_T1
from .errors import NumericError, PreconditionError, UnsupportedModelError
from .laplace import renewal_function
from .seeding import SeedInfo, substream
from .subordinator_sim import PathGrid, sample_increments

__all__ = [
    "InitialDelay",
    "DelayTable",
    "delay_table",
    "invert_path",
    "sample_T0",
    "sample_T0_values",
    "stationary_inverse_path",
    "inverse_ensemble",
]

TABLE_NODES = 4096
TABLE_TAIL_MASS = 1e-8


@dataclass(frozen=True)
class DelayTable:
    """Cached monotone table of the initial-delay law F0."""

    xs: np.ndarray
    cdf: np.ndarray
    mu: float
    tail_mass_bound: float

    def __post_init__(self):
        if self.cdf[0] < 0.0 or np.any(np.diff(self.cdf) < 0.0):
            raise NumericError("F0 table is not monotone")
        if self.cdf[-1] < 1.0 - 1e-8:
            raise NumericError(
                "F0 table does not reach its tail-mass target",
                last=float(self.cdf[-1]),
            )

    def forward(self) -> PchipInterpolator:
        xs = np.concatenate(([0.0], self.xs))
        cdf = np.concatenate(([0.0], self.cdf))
        return PchipInterpolator(xs, cdf, extrapolate=False)

    def inverse(self) -> PchipInterpolator:
        cdf = np.concatenate(([0.0], self.cdf))
        xs = np.concatenate(([0.0], self.xs))
        keep = np.concatenate(([True], np.diff(cdf) > 0.0))
        return PchipInterpolator(cdf[keep], xs[keep], extrapolate=False)


@dataclass(frozen=True)
class InitialDelay:
    """One draw of the initial delay plus the table it was drawn from."""

    value: float
    cdf_table: DelayTable


@lru_cache(maxsize=32)
def delay_table(spec: BernsteinSpec) -> DelayTable:
    """Build (once per spec) the F0 table on log-spaced nodes.

    Nodes extend until the remaining tail mass drops below 1e-8; the
    accumulated integral of the Levy tail must agree with mu, otherwise
    the model's tail and mean are inconsistent and we raise.
    """
    mu = mean_T1(spec)
    if not math.isfinite(mu):
        raise UnsupportedModelError(
            "the stationary modification needs E T(1) < inf "
            "(the first moment of the subordinator must be finite)"
        )
    # find x_max with (1/mu) int_x^inf tail < target
    x_max = 1.0
    for _ in range(200):
        tail_mass, _ = integrate.quad(
            lambda y: levy_tail(spec, y), x_max, np.inf, limit=200
        )
        if tail_mass / mu < TABLE_TAIL_MASS:
            break
        x_max *= 1.5
    else:
        raise NumericError("could not locate the table horizon for F0")
    x_min = x_max * 1e-12
    xs = np.geomspace(x_min, x_max, TABLE_NODES)
    # head piece [0, x_min] by adaptive quadrature (integrable singularity),
    # then fixed Gauss-Legendre on each log segment, all nodes in one batch
    head, _ = integrate.quad(lambda y: levy_tail(spec, y), 0.0, x_min, limit=200)
    gl_x, gl_w = np.polynomial.legendre.leggauss(8)
    a, b = xs[:-1], xs[1:]
    mid, half = 0.5 * (a + b), 0.5 * (b - a)
    nodes = mid[:, None] + half[:, None] * gl_x[None, :]
    vals = levy_tail(spec, nodes)
    seg = half * (vals * gl_w[None, :]).sum(axis=1)
    cum = head + np.concatenate(([0.0], np.cumsum(seg)))
    total_check = cum[-1] + mu * TABLE_TAIL_MASS
    if abs(total_check - mu) > 1e-6 * mu:
        raise NumericError(
            "accumulated tail integral disagrees with the model mean",
            integral=float(cum[-1]),
            mu=mu,
        )
    cdf = np.minimum(cum / mu, 1.0)
    return DelayTable(xs=xs, cdf=cdf, mu=mu, tail_mass_bound=TABLE_TAIL_MASS)


def sample_T0_values(spec: BernsteinSpec, size: int, rng: np.random.Generator) -> np.ndarray:
    """Inverse-CDF draws of the initial delay (vectorized)."""
    table = delay_table(spec)
    inv = table.inverse()
    u = rng.random(size)
    top = float(table.cdf[-1])
    out = np.where(u >= top, table.xs[-1], inv(np.minimum(u, top)))
    return np.asarray(out, dtype=float)


def sample_T0(spec: BernsteinSpec, rng: np.random.Generator) -> InitialDelay:
    """One initial-delay draw with its cached table."""
    value = float(sample_T0_values(spec, 1, rng)[0])
    return InitialDelay(value=value, cdf_table=delay_table(spec))


def invert_path(T: PathGrid, t_grid) -> PathGrid:
    """Right-continuous grid inverse of a nondecreasing path.

    S(t_j) is the first grid time whose value exceeds t_j; on a uniform
    grid with step dtau this equals dtau times the count of grid points
    with value <= t_j.
    """
    t_grid = np.asarray(t_grid, dtype=float)
    if np.any(np.diff(t_grid) <= 0.0):
        raise PreconditionError("t_grid must be strictly increasing")
    if np.any(np.diff(T.values) < 0.0):
        raise PreconditionError("subordinator path must be nondecreasing")
    if T.values[-1] <= t_grid[-1]:
        raise PreconditionError(
            f"path tops out at {T.values[-1]:g} and does not cover the horizon {t_grid[-1]:g}"
        )
    idx = np.searchsorted(T.values, t_grid, side="right")
    return PathGrid(grid=t_grid, values=T.grid[idx], clock="t", seed=T.seed)


def _inverse_values(
    spec: BernsteinSpec,
    t_grid: np.ndarray,
    dtau: float,
    rng: np.random.Generator,
    t0: float,
    hint: int,
) -> np.ndarray:
    """S values at t_grid for one path of T0 + T (T0 = 0 gives plain S)."""
    target = t_grid[-1] - t0
    if target < 0.0:
        return np.zeros(t_grid.size)
    values = [np.array([0.0])]
    total = 0.0
    n_block = max(hint, 64)
    while total <= target:
        draws = sample_increments(spec, dtau, n_block, rng)
        cum = total + np.cumsum(draws)
        values.append(cum)
        total = float(cum[-1])
    v = np.concatenate(values)
    stop = int(np.argmax(v > target))
    v = v[: stop + 1]
    return dtau * np.searchsorted(t0 + v, t_grid, side="right")


def stationary_inverse_path(
    spec: BernsteinSpec,
    t_grid,
    rng: np.random.Generator,
    dtau: float = 1e-2,
    seed: Optional[SeedInfo] = None,
) -> PathGrid:
    """One path of the stationary inverse on t_grid.

    Draws T0, simulates T on the dtau grid, and inverts T0 + T; times
    before T0 map to 0.  The delay and the subordinator use disjoint
    child streams of ``rng``.
    """
    t_grid = np.asarray(t_grid, dtype=float)
    rng_T, rng_T0 = rng.spawn(2)
    t0 = float(sample_T0_values(spec, 1, rng_T0)[0])
    hint = _block_hint(spec, float(t_grid[-1]), dtau)
    values = _inverse_values(spec, t_grid, dtau, rng_T, t0, hint)
    return PathGrid(grid=t_grid, values=values, clock="t", seed=seed)


def _block_hint(spec: BernsteinSpec, horizon: float, dtau: float) -> int:
    try:
        expected = renewal_function(spec, max(horizon, dtau)) / dtau
    except Exception:
        expected = horizon / dtau
    return int(min(max(64.0, 1.3 * expected), 4e6))


def inverse_ensemble(
    spec: BernsteinSpec,
    t_grid,
    n_paths: int,
    dtau: float,
    master_seed: int,
    stationary: bool = False,
    workers: int = 1,
) -> tuple[np.ndarray, np.ndarray]:
    """S (or the stationary modification) at t_grid for n_paths paths.

    Returns ``(S, t0)`` with S of shape (n_paths, len(t_grid)).  Path i
    draws its subordinator increments from substream (master_seed, i, 0)
    and its initial delay from (master_seed, i, 2), so results are
    independent of chunking and worker count.
    """
    t_grid = np.asarray(t_grid, dtype=float)
    out = np.empty((n_paths, t_grid.size))
    t0s = np.zeros(n_paths)
    hint = _block_hint(spec, float(t_grid[-1]), dtau)
    if stationary:
        delay_table(spec)  # build once before threads fan out

    def run_chunk(lo: int, hi: int) -> None:
        for i in range(lo, hi):
            t0 = 0.0
            if stationary:
                t0 = float(sample_T0_values(spec, 1, substream(master_seed, i, 2))[0])
            t0s[i] = t0
            out[i] = _inverse_values(
                spec, t_grid, dtau, substream(master_seed, i, 0), t0, hint
            )

    _run_chunked(run_chunk, n_paths, workers)
    return out, t0s


def _run_chunked(fn, n: int, workers: int) -> None:
    if workers <= 1 or n < 2:
        fn(0, n)
        return
    from concurrent.futures import ThreadPoolExecutor

    chunk = (n + workers - 1) // workers
    ranges = [(lo, min(lo + chunk, n)) for lo in range(0, n, chunk)]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        list(pool.map(lambda r: fn(*r), ranges))
