"""Exact and approximate samplers for subordinator increments and paths.

Stable increments use the Kanter representation of the one-sided stable
law; tempered-stable increments tilt it by rejection (exact for any step
size, expected trials exp(temper**alpha * dt)).  Models known only
through their Levy tail are simulated by compound-Poisson jumps above a
cutoff plus deterministic mean compensation of the small jumps.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np
from scipy import integrate

from .bernstein import (
    BernsteinSpec,
    DistributedOrder,
    Stable,
    TabulatedLevy,
    TemperedStable,
    levy_tail,
)
from .errors import DomainError, NumericError, PreconditionError, SamplingError
from .seeding import SeedInfo

__all__ = [
    "PathGrid",
    "sample_increment",
    "sample_increments",
    "stable_standard_draws",
    "sample_path_general",
    "compound_poisson_totals",
    "simulate_path",
    "small_jump_mean",
    "rejection_acceptance_probability",
]

REJECTION_CAP = 10**6
DEFAULT_CUTOFF = 1e-4


@dataclass(frozen=True)
class PathGrid:
    """A sampled trajectory on a strictly increasing time grid.

    ``clock`` labels the axis: "tau" for the subordinator's operational
    time, "t" for physical time (inverse and subdiffusion paths).
    """

    grid: np.ndarray
    values: np.ndarray
    clock: str = "tau"
    seed: Optional[SeedInfo] = None
    monotone: bool = field(default=True, repr=False)

    def __post_init__(self):
        grid = np.asarray(self.grid, dtype=float)
        values = np.asarray(self.values, dtype=float)
        object.__setattr__(self, "grid", grid)
        object.__setattr__(self, "values", values)
        if grid.ndim != 1 or values.ndim != 1 or grid.size != values.size:
            raise PreconditionError("grid and values must be 1-d arrays of equal length")
        if grid.size < 1:
            raise PreconditionError("paths need at least one point")
        if np.any(np.diff(grid) <= 0.0):
            raise PreconditionError("grid must be strictly increasing")
        if self.monotone:
            if np.any(np.diff(values) < 0.0) or (values.size and values[0] < 0.0):
                raise PreconditionError("subordinator values must be nonnegative and nondecreasing")

    @property
    def step(self) -> float:
        """Grid step, defined for uniform grids only."""
        steps = np.diff(self.grid)
        if steps.size == 0:
            raise PreconditionError("single-point grid has no step")
        h = steps[0]
        if not np.allclose(steps, h, rtol=1e-9, atol=0.0):
            raise PreconditionError("grid is not uniform")
        return float(h)


def stable_standard_draws(alpha: float, size: int, rng: np.random.Generator) -> np.ndarray:
    """Draws of the one-sided alpha-stable law with E exp(-u X) = exp(-u**alpha).

    Kanter's representation: X = (a(theta)/W)**((1-alpha)/alpha) with
    theta uniform on (0, pi) and W unit exponential.
    """
    theta = rng.uniform(0.0, np.pi, size)
    w = rng.standard_exponential(size)
    a = (
        np.sin(alpha * theta) ** alpha
        * np.sin((1.0 - alpha) * theta) ** (1.0 - alpha)
        / np.sin(theta)
    ) ** (1.0 / (1.0 - alpha))
    return (a / w) ** ((1.0 - alpha) / alpha)


def rejection_acceptance_probability(spec: TemperedStable, dt: float) -> float:
    """Acceptance probability of the exponential-tilting rejection step."""
    return math.exp(-spec.temper ** spec.alpha * dt)


def sample_increments(
    spec: BernsteinSpec,
    dt: float,
    size: int,
    rng: np.random.Generator,
    cutoff: float = DEFAULT_CUTOFF,
    rejection_cap: int = REJECTION_CAP,
) -> np.ndarray:
    """``size`` independent draws of T(dt)."""
    if dt <= 0.0:
        raise DomainError(f"dt must be positive, got {dt}")
    if isinstance(spec, Stable):
        return dt ** (1.0 / spec.alpha) * stable_standard_draws(spec.alpha, size, rng)
    if isinstance(spec, TemperedStable):
        scale = dt ** (1.0 / spec.alpha)
        out = np.empty(size)
        pending = np.arange(size)
        rounds_bound = rejection_cap
        trials = 0
        while pending.size:
            x = scale * stable_standard_draws(spec.alpha, pending.size, rng)
            accept = rng.random(pending.size) <= np.exp(-spec.temper * x)
            out[pending[accept]] = x[accept]
            pending = pending[~accept]
            trials += 1
            if trials > rounds_bound:
                raise SamplingError(
                    f"tempered rejection exceeded {rejection_cap} trials per draw "
                    f"(acceptance {rejection_acceptance_probability(spec, dt):.3g}); "
                    "use a smaller dt"
                )
        return out
    # distributed-order / tabulated models: one compound-Poisson step each
    return compound_poisson_totals(spec, dt, cutoff, size, rng)


def sample_increment(
    spec: BernsteinSpec,
    dt: float,
    rng: np.random.Generator,
    cutoff: float = DEFAULT_CUTOFF,
) -> float:
    """One draw of T(dt)."""
    return float(sample_increments(spec, dt, 1, rng, cutoff=cutoff)[0])


def small_jump_mean(spec: BernsteinSpec, cutoff: float) -> float:
    """Mean of jumps below the cutoff: int_0^cutoff x nu(dx).

    Computed by parts from the tail: int_0^c tail(x) dx - c * tail(c).
    This is both the compensation slope of ``sample_path_general`` and
    the documented truncation-error bound on E T(1).
    """
    if cutoff <= 0.0:
        raise DomainError(f"cutoff must be positive, got {cutoff}")
    val, err = integrate.quad(lambda x: levy_tail(spec, x), 0.0, cutoff, limit=200)
    if err > max(1e-12, 1e-6 * abs(val)):
        raise NumericError("small-jump compensation quadrature did not converge", value=val)
    return val - cutoff * levy_tail(spec, cutoff)


def _invert_tail(spec: BernsteinSpec, level: np.ndarray, cutoff: float) -> np.ndarray:
    """Solve tail(x) = level for x >= cutoff (tail nonincreasing)."""
    lo = np.full(level.shape, cutoff)
    hi = np.full(level.shape, max(2.0 * cutoff, 1.0))
    for _ in range(960):
        need = levy_tail(spec, hi) > level
        if not np.any(need):
            break
        hi[need] *= 2.0
        if np.any(hi > 1e280):
            raise NumericError("jump-size bracketing failed to cover the tail")
    else:
        raise NumericError("jump-size bracketing failed to cover the tail")
    for _ in range(80):
        mid = 0.5 * (lo + hi)
        above = levy_tail(spec, mid) > level
        lo = np.where(above, mid, lo)
        hi = np.where(above, hi, mid)
    return 0.5 * (lo + hi)


def compound_poisson_totals(
    spec: BernsteinSpec,
    tau_horizon: float,
    cutoff: float,
    size: int,
    rng: np.random.Generator,
) -> np.ndarray:
    """T(tau_horizon) draws under the compound-Poisson scheme, jumps pooled
    across draws so the tail inversion runs once."""
    rate = levy_tail(spec, cutoff)
    slope = small_jump_mean(spec, cutoff)
    counts = rng.poisson(rate * tau_horizon, size)
    total_jumps = int(counts.sum())
    if total_jumps:
        sizes = _invert_tail(spec, rng.uniform(0.0, rate, total_jumps), cutoff)
        bounds = np.concatenate(([0], np.cumsum(counts)))
        sums = np.add.reduceat(np.concatenate((sizes, [0.0])), bounds[:-1])
        sums[counts == 0] = 0.0
    else:
        sums = np.zeros(size)
    return slope * tau_horizon + sums


def sample_path_general(
    spec: BernsteinSpec,
    tau_horizon: float,
    cutoff: float,
    rng: np.random.Generator,
    seed: Optional[SeedInfo] = None,
) -> PathGrid:
    """Compound-Poisson approximation of T on [0, tau_horizon].

    Jumps larger than ``cutoff`` arrive at rate nu(cutoff, inf) with
    sizes drawn by inverting the normalized tail; jumps below the cutoff
    enter through their mean as a deterministic slope (paths stay
    nondecreasing; the neglected fluctuation is bounded by the reported
    ``small_jump_mean``).  Returns the event-time grid with cumulative
    values.
    """
    if tau_horizon <= 0.0:
        raise DomainError(f"tau_horizon must be positive, got {tau_horizon}")
    rate = levy_tail(spec, cutoff)
    slope = small_jump_mean(spec, cutoff)
    n_jumps = rng.poisson(rate * tau_horizon)
    times = np.sort(rng.uniform(0.0, tau_horizon, n_jumps))
    times = times[np.concatenate(([True], np.diff(times) > 0.0))] if n_jumps else times
    if times.size:
        levels = rng.uniform(0.0, rate, times.size)
        sizes = _invert_tail(spec, levels, cutoff)
    else:
        sizes = np.empty(0)
    grid = np.concatenate(([0.0], times, [tau_horizon]))
    keep = np.concatenate(([True], np.diff(grid) > 0.0))
    jump_cum = np.concatenate(([0.0], np.cumsum(sizes), [np.sum(sizes)]))
    grid, jump_cum = grid[keep], jump_cum[keep]
    values = jump_cum + slope * grid
    return PathGrid(grid=grid, values=values, clock="tau", seed=seed)


def simulate_path(
    spec: BernsteinSpec,
    t_horizon: float,
    dtau: float,
    rng: np.random.Generator,
    seed: Optional[SeedInfo] = None,
    cutoff: float = DEFAULT_CUTOFF,
) -> PathGrid:
    """T on the uniform grid tau_i = i * dtau, run until T exceeds t_horizon.

    The grid includes tau = 0 with T = 0, and the final value is
    guaranteed to exceed the horizon.
    """
    if t_horizon <= 0.0:
        raise DomainError(f"t_horizon must be positive, got {t_horizon}")
    if dtau <= 0.0:
        raise DomainError(f"dtau must be positive, got {dtau}")
    blocks = [np.array([0.0])]
    total = 0.0
    n_block = 1024
    while total <= t_horizon:
        draws = sample_increments(spec, dtau, n_block, rng, cutoff=cutoff)
        cum = total + np.cumsum(draws)
        blocks.append(cum)
        total = float(cum[-1])
        n_block = min(2 * n_block, 1 << 20)
    values = np.concatenate(blocks)
    stop = int(np.argmax(values > t_horizon))
    values = values[: stop + 1]
    grid = dtau * np.arange(values.size)
    return PathGrid(grid=grid, values=values, clock="tau", seed=seed)
