"""Time-changed Brownian motion, its stationary increments, Feynman-Kac
functionals, and change-of-measure weights.

The Brownian factor is generated directly on the inverse clock: given
the (grid) inverse S at the output times, X gains independent Gaussian
increments with variance dS.  That is exact in distribution, keeps X
constant over trapping intervals where dS = 0, and never interpolates a
separately stored Brownian path.  The subordinator and the Brownian
driver always use disjoint substreams.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np

from .bernstein import BernsteinSpec, mean_T1
from .errors import DomainError, NumericError, PreconditionError
from .inverse_process import _block_hint, _inverse_values, _run_chunked, sample_T0_values, delay_table
from .seeding import SeedInfo, substream
from .subordinator_sim import PathGrid
from .errors import UnsupportedModelError

__all__ = [
    "DiffusionSpec",
    "IncrementSeries",
    "sample_X_path",
    "x_ensemble",
    "increments_sequence",
    "increment_ensemble",
    "sample_fk_functional",
    "fk_ensemble",
    "girsanov_weight",
]


@dataclass(frozen=True)
class DiffusionSpec:
    """Ito diffusion dV = drift(V) dt + vol(V) dB with V(0) = x0."""

    drift_fn: Callable[[float], float]
    vol_fn: Callable[[float], float]
    x0: float = 0.0


@dataclass(frozen=True)
class IncrementSeries:
    """Stationary increment sequence of the modified process."""

    values: np.ndarray
    spec: BernsteinSpec
    seed: Optional[SeedInfo] = None
    t0_draw: float = 0.0

    def __post_init__(self):
        values = np.asarray(self.values, dtype=float)
        object.__setattr__(self, "values", values)
        if values.ndim != 1 or values.size < 1:
            raise PreconditionError("increment series must be a nonempty 1-d array")
        if not np.all(np.isfinite(values)):
            raise PreconditionError("increment series must be finite")


def _gaussian_on_clock(s_values: np.ndarray, rng: np.random.Generator) -> np.ndarray:
    ds = np.diff(np.concatenate(([0.0], s_values)))
    return np.cumsum(np.sqrt(ds) * rng.standard_normal(ds.size))


def sample_X_path(
    spec: BernsteinSpec,
    t_grid,
    rng: np.random.Generator,
    stationary: bool = False,
    dtau: float = 1e-2,
    seed: Optional[SeedInfo] = None,
    return_clock: bool = False,
):
    """One path of the time-changed Brownian motion on t_grid.

    ``stationary`` switches to the stationary modification (finite-mean
    models only).  With ``return_clock`` the inverse path is returned as
    well, on the same grid.
    """
    t_grid = np.asarray(t_grid, dtype=float)
    rng_T, rng_B, rng_T0 = rng.spawn(3)
    t0 = 0.0
    if stationary:
        if not math.isfinite(mean_T1(spec)):
            raise UnsupportedModelError("stationary paths need E T(1) < inf")
        t0 = float(sample_T0_values(spec, 1, rng_T0)[0])
    hint = _block_hint(spec, float(t_grid[-1]), dtau)
    s_values = _inverse_values(spec, t_grid, dtau, rng_T, t0, hint)
    x_values = _gaussian_on_clock(s_values, rng_B)
    x_path = PathGrid(grid=t_grid, values=x_values, clock="t", seed=seed, monotone=False)
    if return_clock:
        s_path = PathGrid(grid=t_grid, values=s_values, clock="t", seed=seed)
        return x_path, s_path
    return x_path


def x_ensemble(
    spec: BernsteinSpec,
    t_grid,
    n_paths: int,
    dtau: float,
    master_seed: int,
    stationary: bool = False,
    workers: int = 1,
) -> tuple[np.ndarray, np.ndarray]:
    """X and S at t_grid for n_paths paths; shapes (n_paths, len(t_grid)).

    Path i uses substreams (master_seed, i, 0) for the subordinator,
    (master_seed, i, 1) for the Brownian driver and (master_seed, i, 2)
    for the initial delay, so ensembles are reproducible for any chunking.
    """
    t_grid = np.asarray(t_grid, dtype=float)
    S = np.empty((n_paths, t_grid.size))
    X = np.empty((n_paths, t_grid.size))
    hint = _block_hint(spec, float(t_grid[-1]), dtau)
    if stationary:
        delay_table(spec)

    def run_chunk(lo: int, hi: int) -> None:
        for i in range(lo, hi):
            t0 = 0.0
            if stationary:
                t0 = float(sample_T0_values(spec, 1, substream(master_seed, i, 2))[0])
            s = _inverse_values(spec, t_grid, dtau, substream(master_seed, i, 0), t0, hint)
            S[i] = s
            X[i] = _gaussian_on_clock(s, substream(master_seed, i, 1))

    _run_chunked(run_chunk, n_paths, workers)
    return X, S


def increments_sequence(
    spec: BernsteinSpec,
    N: int,
    rng: np.random.Generator,
    dtau: float = 1e-2,
    seed: Optional[SeedInfo] = None,
) -> IncrementSeries:
    """The stationary sequence: one modified path on 0..N, differenced."""
    if N < 1:
        raise DomainError(f"series length must be >= 1, got {N}")
    rng_T, rng_B, rng_T0 = rng.spawn(3)
    t0 = float(sample_T0_values(spec, 1, rng_T0)[0])
    t_grid = np.arange(N + 1, dtype=float)
    hint = _block_hint(spec, float(N), dtau)
    s = _inverse_values(spec, t_grid, dtau, rng_T, t0, hint)
    x = _gaussian_on_clock(s, rng_B)
    return IncrementSeries(values=np.diff(x), spec=spec, seed=seed, t0_draw=t0)


def increment_ensemble(
    spec: BernsteinSpec,
    N: int,
    n_series: int,
    dtau: float,
    master_seed: int,
    workers: int = 1,
) -> tuple[np.ndarray, np.ndarray]:
    """Y and dS increments, shapes (n_series, N); substreams as in x_ensemble."""
    t_grid = np.arange(N + 1, dtype=float)
    X, S = x_ensemble(
        spec, t_grid, n_series, dtau, master_seed, stationary=True, workers=workers
    )
    return np.diff(X, axis=1), np.diff(S, axis=1)


def sample_fk_functional(
    dspec: DiffusionSpec,
    h: Callable[[float], float],
    g: Callable[[float], float],
    spec: BernsteinSpec,
    t: float,
    du: float,
    rng: np.random.Generator,
    dtau: float = 1e-2,
) -> float:
    """One draw of exp(-int_0^{S(t)} h(V)) g(V(S(t))).

    S(t) is drawn by path inversion; V follows Euler-Maruyama on the
    internal clock with step du (last step shortened to land exactly on
    S(t)); the h integral uses the trapezoid rule along the discrete
    path.
    """
    if du <= 0.0:
        raise DomainError(f"du must be positive, got {du}")
    if t <= 0.0:
        raise DomainError(f"t must be positive, got {t}")
    rng_T, rng_B = rng.spawn(2)
    hint = _block_hint(spec, t, dtau)
    s_t = float(_inverse_values(spec, np.array([t]), dtau, rng_T, 0.0, hint)[0])
    return _fk_single(dspec, h, g, s_t, du, rng_B)


def _fk_single(dspec, h, g, s_t, du, rng) -> float:
    n_full = int(s_t // du)
    last = s_t - n_full * du
    v = dspec.x0
    integral = 0.0
    h_prev = h(v)
    for k in range(n_full + 1):
        step = du if k < n_full else last
        if step <= 0.0:
            break
        z = rng.standard_normal()
        v = v + dspec.drift_fn(v) * step + dspec.vol_fn(v) * math.sqrt(step) * z
        if not math.isfinite(v):
            raise NumericError(f"diffusion iterate became non-finite at step {k}", step=k)
        h_curr = h(v)
        integral += 0.5 * (h_prev + h_curr) * step
        h_prev = h_curr
    return math.exp(-integral) * g(v)


def fk_ensemble(
    dspec: DiffusionSpec,
    h: Callable[[float], float],
    g: Callable[[float], float],
    spec: BernsteinSpec,
    t: float,
    du: float,
    n_paths: int,
    master_seed: int,
    dtau: float = 1e-2,
    workers: int = 1,
) -> np.ndarray:
    """Independent functional draws; draw i uses substreams of (master_seed, i)."""
    out = np.empty(n_paths)
    hint = _block_hint(spec, t, dtau)

    def run_chunk(lo: int, hi: int) -> None:
        for i in range(lo, hi):
            s_t = float(
                _inverse_values(
                    spec, np.array([t]), dtau, substream(master_seed, i, 0), 0.0, hint
                )[0]
            )
            out[i] = _fk_single(dspec, h, g, s_t, du, substream(master_seed, i, 1))

    _run_chunked(run_chunk, n_paths, workers)
    return out


def girsanov_weight(
    X_path: PathGrid,
    S_path: PathGrid,
    epsilon: float,
    T: float,
) -> float:
    """Change-of-measure weight exp(-X(T)/2 - (epsilon + 1/8) S(T)).

    Both paths must live on the same grid and cover T; T must be a grid
    point (the processes are only defined at sampled times).
    """
    if epsilon < 0.0:
        raise DomainError(f"epsilon must be nonnegative, got {epsilon}")
    if T <= 0.0:
        raise DomainError(f"T must be positive, got {T}")
    if X_path.grid.shape != S_path.grid.shape or not np.allclose(
        X_path.grid, S_path.grid, rtol=1e-12, atol=0.0
    ):
        raise PreconditionError("X and S paths live on different grids")
    idx = np.searchsorted(X_path.grid, T)
    if idx >= X_path.grid.size or not math.isclose(
        X_path.grid[idx], T, rel_tol=1e-9, abs_tol=1e-12
    ):
        raise PreconditionError(f"T={T:g} is not a grid point of the paths")
    x_t = float(X_path.values[idx])
    s_t = float(S_path.values[idx])
    return math.exp(-0.5 * x_t - (epsilon + 0.125) * s_t)
