"""Semi-analytic oracles for the inverse subordinator and the
time-changed process.

Everything here is computed from the exponent f by quadrature and
transform inversion, independent of the Monte-Carlo samplers, so these
values serve as oracles in the verification suite: exponential moments
of S(t) and of its stationary modification, multi-time joint transforms
through the one-step recursion, renewal-measure moment formulas for the
increments, the subordinated density of X(t), Feynman-Kac functionals
for Brownian diffusion, and the iterated-logarithm envelope.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache
from typing import Callable, Sequence

import numpy as np
from scipy import integrate
from scipy.interpolate import PchipInterpolator

from .bernstein import BernsteinSpec, eval_exponent, levy_tail, mean_T1
from .errors import DegenerateCoefficientError, DomainError, NumericError, UnsupportedModelError
from .laplace import inverse_density_grid, renewal_grid
from .subordinator_sim import PathGrid  # noqa: F401  (re-exported context)

__all__ = [
    "RenewalMeasureTable",
    "build_renewal_table",
    "laplace_S_at",
    "stationary_laplace_S_at",
    "joint_laplace",
    "moment_increment",
    "inverse_moment",
    "subordinated_density",
    "subordinated_density_grid",
    "fk_quadrature",
    "lil_h",
    "lil_envelope",
    "stationary_increment_pair_laplace",
]

_GL64 = np.polynomial.legendre.leggauss(64)
_GL48 = np.polynomial.legendre.leggauss(48)


# ---------------------------------------------------------------------------
# single-time exponential moments


def _density_integral(spec, weight_fn, tau, gl) -> float:
    """int_0^inf weight(x) s(x, tau) dx with adaptive chunk extension.

    Density values below 1e-13 of the running peak are treated as
    inversion noise and dropped: the true density decays faster than any
    exponential, so growing weights (positive exponential moments) must
    not be allowed to amplify contour-inversion noise in the far tail.
    """
    scale = max(float(renewal_grid(spec, np.array([tau]))[0]), 1e-6)
    gl_x, gl_w = gl
    total = 0.0
    dens_peak = 0.0
    lo, width = 0.0, 2.0 * scale
    for _ in range(64):
        hi = lo + width
        mid, half = 0.5 * (lo + hi), 0.5 * (hi - lo)
        xs = mid + half * gl_x
        dens = inverse_density_grid(spec, xs, tau)
        dens_peak = max(dens_peak, float(np.max(dens)))
        live = dens > 1e-13 * dens_peak
        if not np.any(live):
            if lo > 4.0 * scale:
                return total
            lo, width = hi, width * 1.5
            continue
        with np.errstate(over="ignore", invalid="ignore"):
            vals = np.where(live, weight_fn(xs) * dens, 0.0)
        if not np.all(np.isfinite(vals)):
            raise NumericError(
                "exponential weight overflowed before the density decayed",
                tau=tau,
            )
        chunk = half * float(np.dot(gl_w, vals))
        total += chunk
        if abs(chunk) < 1e-13 * max(abs(total), 1e-300) and lo > 4.0 * scale:
            return total
        lo, width = hi, width * 1.5
    raise NumericError("density quadrature truncation did not converge", value=total)


def _exponent_root(spec: BernsteinSpec, theta: float) -> float:
    """Solve f(u) = theta for u > 0 (f strictly increasing)."""
    lo = hi = 1.0
    for _ in range(2400):
        if float(eval_exponent(spec, hi)) >= theta:
            break
        hi *= 4.0
    else:
        raise NumericError("could not bracket the exponent root", theta=theta)
    for _ in range(2400):
        if float(eval_exponent(spec, lo)) <= theta:
            break
        lo /= 4.0
    else:
        raise NumericError("could not bracket the exponent root", theta=theta)
    for _ in range(200):
        mid = math.sqrt(lo * hi)
        if float(eval_exponent(spec, mid)) < theta:
            lo = mid
        else:
            hi = mid
        if hi - lo <= 1e-14 * hi:
            break
    return 0.5 * (lo + hi)


def laplace_S_at(spec: BernsteinSpec, theta: float, tau: float) -> float:
    """E exp(theta S(tau)); finite for every real theta.

    Nonpositive theta integrates exp(theta x) against the inverted
    density.  Positive theta cannot (the integrand's far tail falls
    below inversion noise); instead the transform identity
    int_0^inf e^{-u tau} E e^{theta S(tau)} d tau = f(u)/(u (f(u)-theta))
    is inverted after shifting the contour past the real pole at
    u* = f^{-1}(theta), which turns the pole into the benign 1/u type.
    """
    if tau < 0.0:
        raise DomainError(f"tau must be nonnegative, got {tau}")
    if tau == 0.0:
        return 1.0
    if theta > 0.0:
        from .laplace import TransformHandle, default_method, invert_laplace

        if default_method(spec) != "fixed_talbot":
            raise UnsupportedModelError(
                "positive exponential moments need a contour method; the "
                "model's exponent does not continue off the real axis"
            )
        u_star = _exponent_root(spec, theta)

        def shifted(u):
            w = u + u_star
            f = eval_exponent(spec, w)
            return f / (w * (f - theta))

        res = invert_laplace(TransformHandle(shifted), tau, rtol=1e-6)
        return math.exp(u_star * tau) * res.value
    v64 = _density_integral(spec, lambda x: np.exp(theta * x), tau, _GL64)
    v48 = _density_integral(spec, lambda x: np.exp(theta * x), tau, _GL48)
    err = abs(v64 - v48)
    if err > 1e-7 * abs(v64) + 1e-10:
        raise NumericError(
            "exponential-moment quadrature did not converge",
            value=v64,
            check_value=v48,
        )
    return v64


@lru_cache(maxsize=64)
def _tail_integral_table(spec: BernsteinSpec, span: float, cells: int = 8192):
    """Cumulative Levy-tail integral N(w) = int_0^w nu(y, inf) dy on [0, span]."""
    edges = np.linspace(0.0, span, cells + 1)
    head, _ = integrate.quad(lambda y: levy_tail(spec, y), 0.0, edges[1], limit=200)
    gl_x, gl_w = np.polynomial.legendre.leggauss(8)
    a, b = edges[1:-1], edges[2:]
    mid, half = 0.5 * (a + b), 0.5 * (b - a)
    vals = levy_tail(spec, mid[:, None] + half[:, None] * gl_x[None, :])
    seg = half * (vals * gl_w[None, :]).sum(axis=1)
    cum = np.concatenate(([0.0, head], head + np.cumsum(seg)))
    return edges, cum


@lru_cache(maxsize=64)
def _plain_moment_cached(spec: BernsteinSpec, theta: float, span: float) -> Callable:
    nodes = np.unique(
        np.concatenate(
            (
                [0.0],
                np.geomspace(min(1e-4, span / 8.0), min(1.0, span), 160),
                np.linspace(min(1.0, span), span, 360),
            )
        )
    )
    vals = np.array([1.0] + [laplace_S_at(spec, theta, float(y)) for y in nodes[1:]])
    interp = PchipInterpolator(nodes, vals, extrapolate=False)

    def fn(y):
        return interp(np.clip(y, 0.0, span))

    return fn


def _plain_moment_fn(spec: BernsteinSpec, theta: float, span: float) -> Callable:
    """Interpolant of y -> E exp(theta S(y)) on [0, span], dense near 0."""
    return _plain_moment_cached(spec, float(theta), float(math.ceil(span)))


def stationary_laplace_S_at(
    spec: BernsteinSpec,
    theta: float,
    tau: float,
    cells: int = 4096,
    _plain: Callable | None = None,
) -> float:
    """E exp(theta S~(tau)) for the stationary modification.

    Conditioning on the initial delay T0 with density nu(y, inf)/mu:
    the inverse restarted after T0 = y is a plain inverse at tau - y, so
    the transform is (1 - F0(tau)) plus the tail-density mixture of the
    plain transforms, evaluated by product integration against the
    cumulative tail integral (which absorbs the tail singularity at 0).
    """
    if tau < 0.0:
        raise DomainError(f"tau must be nonnegative, got {tau}")
    mu = mean_T1(spec)
    if not math.isfinite(mu):
        raise UnsupportedModelError("the stationary modification needs E T(1) < inf")
    if tau == 0.0:
        return 1.0
    plain = _plain or _plain_moment_fn(spec, theta, tau)
    edges, cum = _tail_integral_table(spec, float(tau), cells)
    f0_tau = cum[-1] / mu
    mids = 0.5 * (edges[:-1] + edges[1:])
    dN = np.diff(cum)
    mix = float(np.dot(np.asarray(plain(tau - mids), dtype=float), dN)) / mu
    return max(1.0 - f0_tau, 0.0) + mix


# ---------------------------------------------------------------------------
# joint transforms (one-step recursion)


def joint_laplace(
    spec: BernsteinSpec,
    thetas: Sequence[float],
    taus: Sequence[float],
    stationary: bool = False,
    nodes_per_unit: int = 1024,
    rtol: float = 1e-3,
    check: bool = True,
) -> float:
    """E exp(sum_j theta_j S(tau_j)) (or the stationary analogue).

    Evaluated by recursing on the number of time points: the M-term
    transform equals the (M-1)-term one plus a weighted Stieltjes
    integral of the shifted (M-1)-term transform against
    x -> E exp(S(x) sum theta), tabulated on ``nodes_per_unit`` uniform
    nodes per unit of the earliest time and integrated by midpoint rule
    on its increments.  Every recursion level needs a nonvanishing
    coefficient sum; otherwise the prefactor is undefined and a
    :class:`DegenerateCoefficientError` is raised (pure increment
    functionals hit this; see ``stationary_increment_pair_laplace``).
    """
    thetas = [float(v) for v in thetas]
    taus = [float(v) for v in taus]
    if len(thetas) != len(taus) or not thetas:
        raise DomainError("thetas and taus must have equal positive length")
    if any(b < a - 1e-12 for a, b in zip(taus, taus[1:])):
        raise DomainError("taus must be nondecreasing")
    if any(t < 0 for t in taus):
        raise DomainError("taus must be nonnegative")
    if stationary and not math.isfinite(mean_T1(spec)):
        raise UnsupportedModelError("the stationary modification needs E T(1) < inf")
    value = _joint_recursive(spec, thetas, taus, stationary, nodes_per_unit)
    if check and len(thetas) > 1 and taus[0] > 0.0:
        coarse = _joint_recursive(spec, thetas, taus, stationary, max(nodes_per_unit // 2, 4))
        if abs(value - coarse) > rtol * abs(value) + 1e-9:
            raise NumericError(
                "joint-transform grid refinement disagrees",
                value=value,
                check_value=coarse,
            )
    return value


def _joint_recursive(spec, thetas, taus, stationary, nodes_per_unit) -> float:
    total = math.fsum(thetas)
    if abs(total) < 1e-12:
        raise DegenerateCoefficientError(
            "coefficient sum vanishes at a recursion level; the recursion "
            "prefactor theta_1 / sum(theta) is undefined"
        )
    if len(thetas) == 1:
        if stationary:
            return stationary_laplace_S_at(spec, thetas[0], taus[0])
        return laplace_S_at(spec, thetas[0], taus[0])
    rest_t, rest_tau = thetas[1:], taus[1:]
    first = _joint_recursive(spec, rest_t, rest_tau, stationary, nodes_per_unit)
    tau1 = taus[0]
    if tau1 <= 0.0:
        return first
    n = max(4, int(round(nodes_per_unit * tau1)))
    edges = np.linspace(0.0, tau1, n + 1)
    mids = 0.5 * (edges[:-1] + edges[1:])
    if stationary:
        integ = np.array([stationary_laplace_S_at(spec, total, float(x)) for x in edges])
    else:
        integ = np.array([laplace_S_at(spec, total, float(x)) for x in edges])
    inner = np.array(
        [
            _joint_recursive(
                spec, rest_t, [tj - x for tj in rest_tau], False, nodes_per_unit
            )
            for x in mids
        ]
    )
    stieltjes = float(np.dot(inner, np.diff(integ)))
    return first + (thetas[0] / total) * stieltjes


# ---------------------------------------------------------------------------
# renewal-measure moment formulas


@dataclass(frozen=True)
class RenewalMeasureTable:
    """U on a uniform grid, with the increments used as a measure."""

    nodes: np.ndarray
    U_values: np.ndarray
    spec: BernsteinSpec

    def __post_init__(self):
        if np.any(np.diff(self.U_values) < -1e-12):
            raise NumericError("renewal table is not monotone")
        if abs(self.U_values[0]) > 1e-12:
            raise NumericError("renewal table must start at U(0) = 0")

    @property
    def step(self) -> float:
        return float(self.nodes[1] - self.nodes[0])

    def at(self, x) -> np.ndarray:
        return np.interp(x, self.nodes, self.U_values)


def build_renewal_table(
    spec: BernsteinSpec, span: float, nodes_per_unit: int = 2048
) -> RenewalMeasureTable:
    """Tabulate U on [0, span] by batched transform inversion."""
    if span <= 0.0:
        raise DomainError(f"span must be positive, got {span}")
    n = max(16, int(round(span * nodes_per_unit)))
    nodes = np.linspace(0.0, span, n + 1)
    U = renewal_grid(spec, nodes)
    return RenewalMeasureTable(nodes=nodes, U_values=U, spec=spec)


def _window_moment(table: RenewalMeasureTable, a: float, b: float, k: int, outer_lebesgue_mu: float | None) -> float:
    """k! * nested simplex integral of U increments over (a, b].

    The innermost integral is exact (it telescopes to U of the remaining
    gap); outer layers are midpoint sums over table increments.  With
    ``outer_lebesgue_mu`` set, the outermost integrator is dx/mu instead
    of U(dx) (the stationary limit of the window moments).
    """
    nodes = table.nodes
    interior = nodes[(nodes > a + 1e-15) & (nodes < b - 1e-15)]
    edges = np.concatenate(([a], interior, [b]))
    if edges.size < 8:
        raise NumericError("renewal table too coarse for the requested window")
    mids = 0.5 * (edges[:-1] + edges[1:])
    width = b - a
    if k == 1:
        inner = np.ones(mids.size)
    elif k == 2:
        inner = table.at(b - mids)
    elif k == 3:
        w_grid, w_vals = _double_convolution(table, width)
        inner = np.interp(b - mids, w_grid, w_vals)
    else:
        raise DomainError("moment order k must be 1, 2 or 3")
    if outer_lebesgue_mu is not None:
        outer = np.diff(edges) / outer_lebesgue_mu
    else:
        outer = np.diff(table.at(edges))
    return math.factorial(k) * float(np.dot(inner, outer))


def _double_convolution(table: RenewalMeasureTable, span: float):
    """W(s) = int_0^s U(s - g) U(dg) on [0, span], via FFT convolution."""
    nodes, _ = table.nodes, table.U_values
    m = int(np.searchsorted(nodes, span, side="right"))
    m = min(max(m, 8), nodes.size - 1)
    edges = nodes[: m + 1]
    dU = np.diff(table.at(edges))
    mids = 0.5 * (edges[:-1] + edges[1:])
    u_mid = table.at(mids)
    conv = np.convolve(u_mid, dU)[:m]
    w_vals = np.concatenate(([0.0], conv))
    return edges, w_vals


def moment_increment(
    spec: BernsteinSpec,
    z: float,
    n: float,
    k: int,
    stationary_limit: bool = False,
    table: RenewalMeasureTable | None = None,
    nodes_per_unit: int = 2048,
    check: bool = True,
    rtol: float = 2e-3,
) -> float:
    """E[(S(z+1+n) - S(z+n))**k], or the stationary-limit moment.

    Uses the renewal-measure representation of the window moments: k!
    times the nested integral of U increments over the ordered simplex
    in (z+n, z+1+n].  ``stationary_limit`` replaces the outermost
    integrator by Lebesgue measure / mu, which is the n -> inf limit and
    equals the corresponding moment of the stationary increments.
    """
    if z < 0.0 or n < 0.0:
        raise DomainError("z and n must be nonnegative")
    if k not in (1, 2, 3):
        raise DomainError("moment order k must be 1, 2 or 3")
    mu = None
    if stationary_limit:
        mu = mean_T1(spec)
        if not math.isfinite(mu):
            raise UnsupportedModelError("the stationary limit needs E T(1) < inf")
        a, b = z, z + 1.0
    else:
        a, b = z + n, z + 1.0 + n
    if table is None or table.nodes[-1] < b - 1e-12:
        table = build_renewal_table(spec, b, nodes_per_unit)
    value = _window_moment(table, a, b, k, mu)
    if check and k > 1:
        coarse_table = RenewalMeasureTable(
            nodes=table.nodes[::2], U_values=table.U_values[::2], spec=spec
        )
        coarse = _window_moment(coarse_table, a, b, k, mu)
        if abs(value - coarse) > rtol * abs(value) + 1e-9:
            raise NumericError(
                "moment refinement disagrees; table too coarse",
                value=value,
                check_value=coarse,
            )
    return value


def inverse_moment(spec: BernsteinSpec, t: float, k: int, nodes_per_unit: int = 2048) -> float:
    """E[S(t)**k] for k <= 3 through the same renewal-measure formulas."""
    if t <= 0.0:
        raise DomainError(f"t must be positive, got {t}")
    table = build_renewal_table(spec, t, nodes_per_unit)
    return _window_moment(table, 0.0, t, k, None)


# ---------------------------------------------------------------------------
# subordinated density and Feynman-Kac quadrature


def _log_grid_density(spec, t: float, x_scale: float, n_nodes: int = 3072):
    """y-grid (log-spaced) and s(y, t) values covering the mixture mass."""
    u_t = max(float(renewal_grid(spec, np.array([t]))[0]), 1e-8)
    y_lo = min(1e-12 * u_t, 1e-14)
    y_hi = 64.0 * max(u_t, x_scale)
    for _ in range(40):
        z = np.linspace(math.log(y_lo), math.log(y_hi), n_nodes)
        y = np.exp(z)
        s_vals = inverse_density_grid(spec, y, t)
        tail = y[-1] * s_vals[-1]
        if tail < 1e-14 * max(float(np.max(y * s_vals)), 1e-300):
            return z, y, s_vals
        y_hi *= 2.0
    raise NumericError("subordinated-density grid failed to cover the mixing law")


def subordinated_density_grid(spec: BernsteinSpec, xs, t: float) -> np.ndarray:
    """p(x, t) = int (2 pi y)^(-1/2) exp(-x^2/(2y)) s(y, t) dy, batched in x.

    The y integral runs in log coordinates (y = e^z), which absorbs the
    integrable behaviour at y -> 0; one shared s(., t) tabulation serves
    every requested x.
    """
    if t <= 0.0:
        raise DomainError(f"t must be positive, got {t}")
    xs = np.asarray(xs, dtype=float)
    x_scale = float(np.max(np.abs(xs) ** 2)) if xs.size else 1.0
    z, y, s_vals = _log_grid_density(spec, t, max(x_scale, 1.0))
    # integrand in z: (2 pi y)^(-1/2) exp(-x^2/(2y)) s(y) * y
    base = s_vals * y / np.sqrt(2.0 * np.pi * y)
    vals = np.exp(-0.5 * np.outer(xs ** 2, 1.0 / y)) * base[None, :]
    return np.trapezoid(vals, z, axis=1)


def subordinated_density(spec: BernsteinSpec, x: float, t: float) -> float:
    """Density of X(t) = B(S(t)) at level x."""
    return float(subordinated_density_grid(spec, np.array([float(x)]), t)[0])


_HERM = np.polynomial.hermite.hermgauss(64)


def fk_quadrature(
    spec: BernsteinSpec,
    h_const: float,
    g: Callable,
    x0: float,
    t: float,
) -> float:
    """E[exp(-h_const S(t)) g(x0 + B(S(t)))] by double quadrature.

    The Brownian layer is a Gauss-Hermite expectation at each clock
    value; the clock layer mixes over s(., t) on the shared log grid.
    ``g`` must be bounded and vectorized over numpy arrays.
    """
    if t <= 0.0:
        raise DomainError(f"t must be positive, got {t}")
    if h_const < 0.0:
        raise DomainError(f"h_const must be nonnegative, got {h_const}")
    z, y, s_vals = _log_grid_density(spec, t, 1.0 + abs(x0))
    xi, w = _HERM
    # E g(x0 + sqrt(y) Z) = pi^(-1/2) sum w_i g(x0 + sqrt(2 y) xi_i)
    args = x0 + np.sqrt(2.0 * np.outer(y, np.ones(xi.size))) * xi[None, :]
    inner = np.asarray(g(args), dtype=float) @ w / math.sqrt(math.pi)
    integrand = np.exp(-h_const * y) * inner * s_vals * y
    return float(np.trapezoid(integrand, z))


# ---------------------------------------------------------------------------
# iterated-logarithm envelope


def lil_h(spec: BernsteinSpec, y: float, c: float, gamma: float) -> float:
    """h(y) = c loglog / eta(gamma * loglog / y) with loglog = log|log y|."""
    if gamma <= 1.0:
        raise DomainError(f"gamma must exceed 1, got {gamma}")
    if c <= 0.0:
        raise DomainError(f"c must be positive, got {c}")
    if y <= 0.0 or abs(math.log(y)) <= 1.0 + 1e-6:
        raise DomainError(f"|log y| must exceed 1, got y={y}")
    from .bernstein import eta_of

    ll = math.log(abs(math.log(y)))
    return c * ll / eta_of(spec, gamma * ll / y)


def lil_envelope(spec: BernsteinSpec, t: float, c: float = 1.0, gamma: float = 1.01) -> float:
    """The envelope g(t): the inverse of ``lil_h`` on the branch of t.

    For t > e the increasing branch of h on (e, inf) is bracketed by a
    geometric walk past h's interior minimum and bisected; for t < 1/e
    the mirrored branch on (0, 1/e) is used.  Near t = 1 the double
    logarithm degenerates and the envelope is undefined.
    """
    if t <= 0.0 or abs(math.log(t)) <= 1.0 + 1e-6:
        raise DomainError(f"|log t| must exceed 1, got t={t}")
    if t > 1.0:
        y = math.e ** 1.02
        h_prev = lil_h(spec, y, c, gamma)
        y_lo = None
        for _ in range(4000):
            y_next = y * 1.2
            h_next = lil_h(spec, y_next, c, gamma)
            if h_next >= h_prev and h_next >= t:
                if h_prev <= t:
                    y_lo, y_hi = y, y_next
                    break
                raise NumericError(
                    "t lies below the invertible range of the envelope "
                    "equation; decrease c",
                    t=t,
                )
            y, h_prev = y_next, h_next
            if y > 1e280:
                raise NumericError("envelope bracket overflow", t=t)
        if y_lo is None:
            raise NumericError("envelope bracket overflow", t=t)
    else:
        y_hi = math.e ** -1.02
        if lil_h(spec, y_hi, c, gamma) < t:
            raise NumericError(
                "t lies above the invertible range on the small-time branch",
                t=t,
            )
        y = y_hi
        for _ in range(4000):
            y_next = y / 1.2
            if lil_h(spec, y_next, c, gamma) <= t:
                y_lo, y_hi = y_next, y
                break
            y = y_next
            if y < 1e-280:
                raise NumericError("envelope bracket underflow", t=t)
        else:
            raise NumericError("envelope bracket underflow", t=t)
    llo, lhi = math.log(y_lo), math.log(y_hi)
    # h is evaluated through the eta bisection, whose own tolerance puts a
    # ~1e-9 relative noise floor under |h - t|
    for _ in range(300):
        mid = math.exp(0.5 * (llo + lhi))
        hm = lil_h(spec, mid, c, gamma)
        if abs(hm - t) <= 1e-9 * t or lhi - llo < 1e-13:
            if abs(hm - t) > 1e-8 * t:
                raise NumericError("envelope bisection stalled", t=t, h=hm)
            return mid
        if hm < t:
            llo = math.log(mid)
        else:
            lhi = math.log(mid)
    raise NumericError("envelope bisection did not converge", t=t)


# ---------------------------------------------------------------------------
# stationary increment pairs (limit form of the recursion)


def stationary_increment_pair_laplace(
    spec: BernsteinSpec,
    c1: float,
    c2: float,
    lag: int,
    cells: int = 2048,
) -> float:
    """E exp(-c1 (S~(1) - S~(0)) - c2 (S~(lag+1) - S~(lag))) for lag >= 1.

    Pure increment functionals make the one-step recursion degenerate
    (the coefficients cancel), but the recursion extends continuously:
    as the coefficient sum vanishes the Stieltjes integrator converges
    to the renewal measure U(dx) (plain case) and to Lebesgue
    measure / mu (stationary case).  This evaluates that limit form:

        J = P~(lag, lag+1)
            + int_0^1 P(lag - x, lag + 1 - x) d_x E exp(-c1 S~(x)),
        P(a, b)  = G2(b) + c2 * int_0^a G2(b - w) U(dw),
        P~(a, b) = E exp(-c2 S~(b)) + (c2/mu) int_0^a G2(b - w) dw,

    with G2(y) = E exp(-c2 S(y)).
    """
    if lag < 1:
        raise DomainError("lag must be a positive integer")
    if c1 < 0.0 or c2 < 0.0:
        raise DomainError("c1 and c2 must be nonnegative")
    mu = mean_T1(spec)
    if not math.isfinite(mu):
        raise UnsupportedModelError("stationary increments need E T(1) < inf")
    n = float(lag)
    g2 = _plain_moment_fn(spec, -c2, n + 1.0)
    table = build_renewal_table(spec, n + 1.0, nodes_per_unit=cells)

    def plain_pair(a: float, b: float) -> float:
        w_edges = np.linspace(0.0, a, cells + 1)
        w_mids = 0.5 * (w_edges[:-1] + w_edges[1:])
        dU = np.diff(table.at(w_edges))
        integral = float(np.dot(np.asarray(g2(b - w_mids), dtype=float), dU))
        return float(g2(b)) + c2 * integral

    def tilde_pair(a: float, b: float) -> float:
        w_edges = np.linspace(0.0, a, cells + 1)
        w_mids = 0.5 * (w_edges[:-1] + w_edges[1:])
        vals = np.asarray(g2(b - w_mids), dtype=float)
        integral = float(np.dot(vals, np.diff(w_edges)))
        tilde_b = stationary_laplace_S_at(spec, -c2, b, _plain=g2)
        return tilde_b + (c2 / mu) * integral

    first = tilde_pair(n, n + 1.0)
    if c1 == 0.0:
        return first
    x_edges = np.linspace(0.0, 1.0, max(cells // 8, 64) + 1)
    x_mids = 0.5 * (x_edges[:-1] + x_edges[1:])
    g1 = _plain_moment_fn(spec, -c1, 1.0)
    tilde_vals = np.array(
        [1.0]
        + [
            stationary_laplace_S_at(spec, -c1, float(x), _plain=g1)
            for x in x_edges[1:]
        ]
    )
    inner = np.array([plain_pair(n - x, n + 1.0 - x) for x in x_mids])
    return first + float(np.dot(inner, np.diff(tilde_vals)))
