"""Analytic loss distributions and oracles for the increasing convex order.

Every family lives on the non-negative half-line. Stop-loss transforms
(integrated survival functions) have closed forms for all families; the
adaptive-quadrature route `sl_quadrature` is kept as the independent check.
"""
from __future__ import annotations

import enum
import logging
import math
import re
import warnings
from dataclasses import dataclass, field
from fractions import Fraction
from functools import lru_cache

import numpy as np
from scipy import integrate, special, stats

from empirical import Sample, make_sample

logger = logging.getLogger(__name__)

QUAD_EPSABS = 1e-10
QUAD_EPSREL = 1e-12
QUAD_LIMIT = 200
QUAD_HARD_TOL = 1e-6
TAIL_SURVIVAL = 1e-12

DEFAULT_GRID_POINTS = 4096
DEFAULT_TOL_FACTOR = 1e-7
EQUALITY_REL_TOL = 1e-6
ENDPOINT_XTOL = 1e-6
POINT_WIDTH = 1e-5
# a tangency leaves about a quarter of the bound at the interior quarter points
FLAT_FRACTION = 1e-3


class SpecError(ValueError):
    pass


class QuadratureError(RuntimeError):
    def __init__(self, what: str, achieved: float):
        self.what = what
        self.achieved = achieved
        super().__init__(f"quadrature for {what} did not converge (achieved abs. error {achieved:.3g})")


class Family(str, enum.Enum):
    UNIFORM = "unif"
    EXPONENTIAL = "exp"
    WEIBULL = "weib"
    GAMMA = "gamma"
    SHIFTED_PARETO = "par"
    TWO_POINT = "twopoint"
    SQRT_UNIFORM = "sqrtunif"


_ARITY = {
    Family.UNIFORM: 2,
    Family.EXPONENTIAL: 1,
    Family.WEIBULL: 1,
    Family.GAMMA: 1,
    Family.SHIFTED_PARETO: 1,
    Family.TWO_POINT: 3,
    Family.SQRT_UNIFORM: 2,
}

_ALIASES = {
    "unif": Family.UNIFORM,
    "uniform": Family.UNIFORM,
    "exp": Family.EXPONENTIAL,
    "expon": Family.EXPONENTIAL,
    "exponential": Family.EXPONENTIAL,
    "weib": Family.WEIBULL,
    "wei": Family.WEIBULL,
    "weibull": Family.WEIBULL,
    "gamma": Family.GAMMA,
    "par": Family.SHIFTED_PARETO,
    "pareto": Family.SHIFTED_PARETO,
    "twopoint": Family.TWO_POINT,
    "sqrtunif": Family.SQRT_UNIFORM,
}


@dataclass(frozen=True)
class DistributionSpec:
    family: Family
    params: tuple

    def __post_init__(self):
        family = Family(self.family)
        params = tuple(float(p) for p in self.params)
        object.__setattr__(self, "family", family)
        object.__setattr__(self, "params", params)
        if len(params) != _ARITY[family]:
            raise SpecError(f"{family.value} takes {_ARITY[family]} parameter(s), got {len(params)}")
        if not all(math.isfinite(p) for p in params):
            raise SpecError(f"{family.value}: parameters must be finite")
        match family:
            case Family.UNIFORM | Family.SQRT_UNIFORM:
                a, b = params
                if not 0 <= a < b:
                    raise SpecError(f"{family.value}(a,b) needs 0 <= a < b, got ({a:g},{b:g})")
            case Family.TWO_POINT:
                v1, p1, v2 = params
                if not 0 <= v1 < v2:
                    raise SpecError(f"twopoint needs 0 <= value1 < value2, got ({v1:g},{v2:g})")
                if not 0 < p1 < 1:
                    raise SpecError(f"twopoint needs 0 < p1 < 1, got {p1:g}")
            case _:
                if not params[0] > 0:
                    raise SpecError(f"{family.value} parameter must be positive, got {params[0]:g}")

    @classmethod
    def uniform(cls, a, b):
        return cls(Family.UNIFORM, (a, b))

    @classmethod
    def exponential(cls, rate):
        return cls(Family.EXPONENTIAL, (rate,))

    @classmethod
    def weibull(cls, shape):
        return cls(Family.WEIBULL, (shape,))

    @classmethod
    def gamma(cls, shape):
        return cls(Family.GAMMA, (shape,))

    @classmethod
    def shifted_pareto(cls, eta):
        return cls(Family.SHIFTED_PARETO, (eta,))

    @classmethod
    def two_point(cls, value1, p1, value2):
        return cls(Family.TWO_POINT, (value1, p1, value2))

    @classmethod
    def sqrt_uniform(cls, a, b):
        return cls(Family.SQRT_UNIFORM, (a, b))

    @property
    def label(self) -> str:
        return f"{self.family.value}({','.join(f'{p:g}' for p in self.params)})"

    def __str__(self) -> str:
        return self.label


_SPEC_PATTERN = re.compile(r"^\s*([a-z]+)\s*\(([^()]*)\)\s*$")


def _parse_number(text: str) -> float:
    try:
        return float(Fraction(text.strip()))
    except (ValueError, ZeroDivisionError):
        raise SpecError(f"not a number: {text.strip()!r}") from None


def parse_spec(text: str) -> DistributionSpec:
    match = _SPEC_PATTERN.match((text or "").lower())
    if not match:
        raise SpecError(f"malformed distribution {text!r}; expected e.g. exp(1) or unif(0,1)")
    name, body = match.groups()
    family = _ALIASES.get(name)
    if family is None:
        raise SpecError(f"unknown distribution family {name!r}")
    params = tuple(_parse_number(part) for part in body.split(",")) if body.strip() else ()
    return DistributionSpec(family, params)


@lru_cache(maxsize=256)
def _scipy_dist(spec: DistributionSpec):
    p = spec.params
    match spec.family:
        case Family.UNIFORM:
            return stats.uniform(loc=p[0], scale=p[1] - p[0])
        case Family.EXPONENTIAL:
            return stats.expon(scale=1.0 / p[0])
        case Family.WEIBULL:
            return stats.weibull_min(p[0])
        case Family.GAMMA:
            return stats.gamma(p[0])
        case Family.SHIFTED_PARETO:
            return stats.lomax(p[0])
    return None


def _out(result, scalar: bool):
    return float(result) if scalar else result


def cdf(spec: DistributionSpec, x):
    scalar = np.ndim(x) == 0
    x = np.asarray(x, dtype=float)
    p = spec.params
    match spec.family:
        case Family.TWO_POINT:
            v1, p1, v2 = p
            result = np.where(x >= v2, 1.0, np.where(x >= v1, p1, 0.0))
        case Family.SQRT_UNIFORM:
            a, b = p
            result = np.clip((x * x - a) / (b - a), 0.0, 1.0)
            result = np.where(x < 0, 0.0, result)
        case _:
            result = _scipy_dist(spec).cdf(x)
    return _out(result, scalar)


def sf(spec: DistributionSpec, x):
    scalar = np.ndim(x) == 0
    x = np.asarray(x, dtype=float)
    if _scipy_dist(spec) is not None:
        return _out(_scipy_dist(spec).sf(x), scalar)
    return _out(1.0 - np.asarray(cdf(spec, x)), scalar)


def pdf(spec: DistributionSpec, x):
    scalar = np.ndim(x) == 0
    x = np.asarray(x, dtype=float)
    match spec.family:
        case Family.TWO_POINT:
            raise SpecError("twopoint has no density")
        case Family.SQRT_UNIFORM:
            a, b = spec.params
            inside = (x >= math.sqrt(a)) & (x <= math.sqrt(b))
            result = np.where(inside, 2.0 * x / (b - a), 0.0)
        case _:
            result = _scipy_dist(spec).pdf(x)
    return _out(result, scalar)


def ppf(spec: DistributionSpec, q):
    scalar = np.ndim(q) == 0
    q = np.asarray(q, dtype=float)
    match spec.family:
        case Family.TWO_POINT:
            v1, p1, v2 = spec.params
            result = np.where(q <= p1, v1, v2)
        case Family.SQRT_UNIFORM:
            a, b = spec.params
            result = np.sqrt(a + np.clip(q, 0.0, 1.0) * (b - a))
        case _:
            result = _scipy_dist(spec).ppf(q)
    return _out(result, scalar)


def left_endpoint(spec: DistributionSpec) -> float:
    match spec.family:
        case Family.UNIFORM:
            return spec.params[0]
        case Family.SQRT_UNIFORM:
            return math.sqrt(spec.params[0])
        case Family.TWO_POINT:
            return spec.params[0]
    return 0.0


def right_endpoint(spec: DistributionSpec) -> float:
    match spec.family:
        case Family.UNIFORM:
            return spec.params[1]
        case Family.SQRT_UNIFORM:
            return math.sqrt(spec.params[1])
        case Family.TWO_POINT:
            return spec.params[2]
    return math.inf


def tail_point(spec: DistributionSpec, survival: float = TAIL_SURVIVAL) -> float:
    """Right endpoint if finite, else the point where the survival function drops to `survival`."""
    end = right_endpoint(spec)
    if math.isfinite(end):
        return end
    return float(_scipy_dist(spec).isf(survival))


def _kinks(spec: DistributionSpec) -> list:
    match spec.family:
        case Family.UNIFORM:
            return list(spec.params)
        case Family.SQRT_UNIFORM:
            return [math.sqrt(p) for p in spec.params]
        case Family.TWO_POINT:
            return [spec.params[0], spec.params[2]]
    return []


def _require_finite_mean(spec: DistributionSpec):
    if spec.family is Family.SHIFTED_PARETO and spec.params[0] <= 1:
        raise SpecError(f"{spec.label} has an infinite mean (needs eta > 1)")


def mean(spec: DistributionSpec) -> float:
    _require_finite_mean(spec)
    p = spec.params
    match spec.family:
        case Family.UNIFORM:
            return (p[0] + p[1]) / 2.0
        case Family.EXPONENTIAL:
            return 1.0 / p[0]
        case Family.WEIBULL:
            return math.gamma(1.0 + 1.0 / p[0])
        case Family.GAMMA:
            return p[0]
        case Family.SHIFTED_PARETO:
            return 1.0 / (p[0] - 1.0)
        case Family.TWO_POINT:
            return p[1] * p[0] + (1.0 - p[1]) * p[2]
        case Family.SQRT_UNIFORM:
            a, b = p
            return 2.0 * (b ** 1.5 - a ** 1.5) / (3.0 * (b - a))
    raise SpecError(f"unsupported family {spec.family}")


def sl_analytic(spec: DistributionSpec, t):
    """Stop-loss transform t -> E(X - t)^+ = integral of the survival function over [t, inf)."""
    _require_finite_mean(spec)
    scalar = np.ndim(t) == 0
    t = np.asarray(t, dtype=float)
    below = np.maximum(-t, 0.0)
    t = np.maximum(t, 0.0)
    p = spec.params
    match spec.family:
        case Family.UNIFORM:
            a, b = p
            result = np.where(t <= a, (a + b) / 2.0 - t, np.where(t < b, (b - t) ** 2 / (2.0 * (b - a)), 0.0))
        case Family.EXPONENTIAL:
            result = np.exp(-p[0] * t) / p[0]
        case Family.WEIBULL if p[0] == 2.0:
            result = math.sqrt(math.pi) / 2.0 * special.erfc(t)
        case Family.WEIBULL:
            beta = p[0]
            result = math.gamma(1.0 + 1.0 / beta) * special.gammaincc(1.0 / beta, t ** beta)
        case Family.GAMMA:
            theta = p[0]
            result = theta * special.gammaincc(theta + 1.0, t) - t * special.gammaincc(theta, t)
            result = np.maximum(result, 0.0)
        case Family.SHIFTED_PARETO:
            eta = p[0]
            result = (1.0 + t) ** (1.0 - eta) / (eta - 1.0)
        case Family.TWO_POINT:
            v1, p1, v2 = p
            result = p1 * np.maximum(v1 - t, 0.0) + (1.0 - p1) * np.maximum(v2 - t, 0.0)
        case Family.SQRT_UNIFORM:
            a, b = p
            lo, hi = math.sqrt(a), math.sqrt(b)
            inner = ((2.0 / 3.0) * b * hi - b * t + t ** 3 / 3.0) / (b - a)
            result = np.where(t <= lo, mean(spec) - t, np.where(t < hi, inner, 0.0))
        case _:
            raise SpecError(f"unsupported family {spec.family}")
    return _out(result + below, scalar)


def integrate_adaptive(func, lo: float, hi: float, what: str, points=None, epsabs: float = QUAD_EPSABS) -> float:
    inner = sorted({float(p) for p in points or () if lo < p < hi})
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", integrate.IntegrationWarning)
        value, abserr = integrate.quad(
            func,
            lo,
            hi,
            epsabs=epsabs,
            epsrel=QUAD_EPSREL,
            limit=QUAD_LIMIT,
            points=inner or None,
        )
    if abserr > QUAD_HARD_TOL:
        raise QuadratureError(what, abserr)
    if abserr > 10 * epsabs:
        logger.warning("Quadrature for %s reached abs. error %.3g only", what, abserr)
    return value


def sl_quadrature(spec: DistributionSpec, t: float) -> float:
    _require_finite_mean(spec)
    t = float(t)
    if t < 0:
        return sl_quadrature(spec, 0.0) - t
    upper = tail_point(spec)
    if t >= upper:
        return 0.0
    return integrate_adaptive(lambda x: sf(spec, x), t, upper, f"SL of {spec.label}", points=_kinks(spec))


def prob_exceed(f: DistributionSpec, g: DistributionSpec) -> float:
    """P(X > Y) for independent X ~ f, Y ~ g, i.e. the integral of (1 - F) against G."""
    _require_finite_mean(f)
    _require_finite_mean(g)
    if g.family is Family.TWO_POINT:
        v1, p1, v2 = g.params
        return float(p1 * sf(f, v1) + (1.0 - p1) * sf(f, v2))
    lo, hi = left_endpoint(g), tail_point(g)
    value = integrate_adaptive(
        lambda x: sf(f, x) * pdf(g, x),
        lo,
        hi,
        f"P({f.label} > {g.label})",
        points=_kinks(f) + _kinks(g),
    )
    return min(max(value, 0.0), 1.0)


def mixture_cdf(f: DistributionSpec, g: DistributionSpec, tau: float):
    """H = (1 - tau) F + tau G as a vectorised callable."""
    if not 0.0 <= tau <= 1.0:
        raise ValueError(f"tau must lie in [0, 1], got {tau}")

    def mixture(t):
        return (1.0 - tau) * np.asarray(cdf(f, t)) + tau * np.asarray(cdf(g, t))

    return mixture


def mixture_right_endpoint(f: DistributionSpec, g: DistributionSpec, tau: float) -> float:
    if tau <= 0.0:
        return right_endpoint(f)
    if tau >= 1.0:
        return right_endpoint(g)
    return max(right_endpoint(f), right_endpoint(g))


def sample_n(spec: DistributionSpec, n: int, stream: np.random.Generator) -> Sample:
    if n < 1:
        raise ValueError(f"sample size must be at least 1, got {n}")
    p = spec.params
    match spec.family:
        case Family.UNIFORM:
            draws = stream.uniform(p[0], p[1], n)
        case Family.EXPONENTIAL:
            draws = stream.exponential(1.0 / p[0], n)
        case Family.WEIBULL:
            draws = stream.weibull(p[0], n)
        case Family.GAMMA:
            # numpy's standard_gamma is the Marsaglia-Tsang squeeze/rejection sampler
            draws = stream.standard_gamma(p[0], n)
        case Family.SHIFTED_PARETO:
            # numpy's pareto is the Lomax law 1 - (1 + x)^-eta
            draws = stream.pareto(p[0], n)
        case Family.TWO_POINT:
            draws = np.where(stream.random(n) < p[1], p[0], p[2])
        case Family.SQRT_UNIFORM:
            draws = np.sqrt(stream.uniform(p[0], p[1], n))
        case _:
            raise SpecError(f"unsupported family {spec.family}")
    return make_sample(draws)


@dataclass(frozen=True)
class GridSpec:
    points: int = DEFAULT_GRID_POINTS
    t_max: float | None = None


def default_t_max(*specs: DistributionSpec) -> float:
    return 1.05 * max(tail_point(spec) for spec in specs)


def _grid(grid: GridSpec, *specs: DistributionSpec) -> np.ndarray:
    t_max = grid.t_max if grid.t_max is not None else default_t_max(*specs)
    kinks = [k for spec in specs for k in _kinks(spec) if 0.0 <= k <= t_max]
    return np.unique(np.concatenate([np.linspace(0.0, t_max, grid.points), kinks]))


def _default_tol(g: DistributionSpec) -> float:
    return DEFAULT_TOL_FACTOR * (1.0 + mean(g))


@dataclass(frozen=True)
class OrderCheck:
    holds: bool
    max_violation: float
    argmax: float


def icx_holds(f: DistributionSpec, g: DistributionSpec, grid: GridSpec = GridSpec(), tol: float | None = None) -> OrderCheck:
    tol = _default_tol(g) if tol is None else tol
    t = _grid(grid, f, g)
    excess = np.asarray(sl_analytic(f, t)) - np.asarray(sl_analytic(g, t))
    worst = int(np.argmax(excess))
    return OrderCheck(bool(excess[worst] <= tol), float(excess[worst]), float(t[worst]))


def st_holds(f: DistributionSpec, g: DistributionSpec, grid: GridSpec = GridSpec(), tol: float = 1e-12) -> OrderCheck:
    """Usual stochastic order F <=st G: G(x) <= F(x) everywhere."""
    t = _grid(grid, f, g)
    gap = np.asarray(cdf(g, t)) - np.asarray(cdf(f, t))
    worst = int(np.argmax(gap))
    return OrderCheck(bool(gap[worst] <= tol), float(gap[worst]), float(t[worst]))


def karlin_novikov(f: DistributionSpec, g: DistributionSpec, grid: GridSpec = GridSpec(), tol: float = 1e-12) -> bool:
    """Mean comparison plus a single crossing of the CDFs (F below G first, then above)."""
    if mean(f) > mean(g) + _default_tol(g):
        return False
    t = _grid(grid, f, g)
    diff = np.asarray(cdf(f, t)) - np.asarray(cdf(g, t))
    above = np.flatnonzero(diff > tol)
    if above.size == 0:
        return True
    return not bool(np.any(diff[above[0]:] < -tol))


@dataclass(frozen=True)
class IntervalSet:
    intervals: tuple = ()
    includes_infinity: bool = False

    @property
    def is_empty(self) -> bool:
        return not self.intervals and not self.includes_infinity

    @property
    def measure(self) -> float:
        return float(sum(hi - lo for lo, hi in self.intervals))

    def contains(self, t: float) -> bool:
        if math.isinf(t):
            return self.includes_infinity
        return any(lo <= t <= hi for lo, hi in self.intervals)

    def to_dict(self) -> dict:
        return {
            "intervals": [[lo, None if math.isinf(hi) else hi] for lo, hi in self.intervals],
            "includes_infinity": self.includes_infinity,
        }


@dataclass(frozen=True)
class EqualitySet:
    A: IntervalSet
    S: IntervalSet
    gamma_h: float
    t_max: float = field(default=math.inf)


def _refine(member, inside: float, outside: float) -> float:
    while abs(outside - inside) > ENDPOINT_XTOL:
        mid = 0.5 * (inside + outside)
        if member(mid):
            inside = mid
        else:
            outside = mid
    return inside


def equality_set(
    f: DistributionSpec,
    g: DistributionSpec,
    tau: float,
    tol: float | None = None,
    grid: GridSpec = GridSpec(),
) -> EqualitySet:
    tol = _default_tol(g) if tol is None else tol
    t = _grid(grid, f, g)
    t_max = float(t[-1])

    def gap_and_bound(points):
        fv = np.asarray(sl_analytic(f, points))
        gv = np.asarray(sl_analytic(g, points))
        return np.abs(fv - gv), np.minimum(tol, EQUALITY_REL_TOL * np.maximum(fv, gv))

    def member_array(points):
        gap, bound = gap_and_bound(points)
        return gap <= bound

    def flat(lo, hi):
        gap, bound = gap_and_bound(lo + (hi - lo) * np.array([0.25, 0.5, 0.75]))
        return bool(np.all(gap <= FLAT_FRACTION * bound))

    def member(point):
        return bool(member_array(np.array([point]))[0])

    # tangential contact widens a point of equality to O(sqrt(tol))
    width_floor = max(POINT_WIDTH, 10.0 * math.sqrt(tol))
    inside = member_array(t)
    intervals = []
    i = 0
    while i < len(t):
        if not inside[i]:
            i += 1
            continue
        j = i
        while j + 1 < len(t) and inside[j + 1]:
            j += 1
        lo = 0.0 if i == 0 else _refine(member, t[i], t[i - 1])
        hi = math.inf if j == len(t) - 1 else _refine(member, t[j], t[j + 1])
        if hi - lo < width_floor and not flat(lo, hi):
            point = lo if lo == 0.0 else 0.5 * (lo + hi)
            logger.info("Equality on [%.6g, %.6g] is a tangency; keeping the point %.6g", lo, hi, point)
            lo = hi = point
        intervals.append((float(lo), float(hi)))
        i = j + 1

    gamma_h = mixture_right_endpoint(f, g, tau)
    cut = gamma_h if math.isfinite(gamma_h) else t_max
    s_intervals = []
    for lo, hi in intervals:
        if math.isfinite(gamma_h) and lo >= gamma_h - ENDPOINT_XTOL:
            continue
        if lo > cut:
            continue
        s_intervals.append((lo, min(hi, cut)))
    return EqualitySet(
        A=IntervalSet(tuple(intervals), includes_infinity=True),
        S=IntervalSet(tuple(s_intervals), includes_infinity=False),
        gamma_h=gamma_h,
        t_max=t_max,
    )


class PairClass(str, enum.Enum):
    BOUNDARY = "boundary"
    INSIDE_S_EMPTY = "inside_s_empty"
    INSIDE_S_NULL = "inside_s_null"
    INSIDE_S_POSITIVE = "inside_s_positive"
    ALTERNATIVE = "alternative"


def classify_pair(
    f: DistributionSpec,
    g: DistributionSpec,
    tau: float,
    tol: float | None = None,
    grid: GridSpec = GridSpec(),
) -> PairClass:
    if f == g:
        return PairClass.BOUNDARY
    if not icx_holds(f, g, grid, tol).holds:
        return PairClass.ALTERNATIVE
    s = equality_set(f, g, tau, tol, grid).S
    if not s.intervals:
        return PairClass.INSIDE_S_EMPTY
    if s.measure == 0.0:
        return PairClass.INSIDE_S_NULL
    return PairClass.INSIDE_S_POSITIVE
