"""Limit laws: the Gaussian process B_H, its functionals, and the two-point example.

B_H(t) is the integral over [t, inf) of B(H(s)) for a standard Brownian bridge
B. For the two-point pair (F: 0/1 with mass 1/2 each, G: 0/2 with mass 3/4 and
1/4) the process reduces to a bivariate normal pair, which gives closed-form
critical values for both resampling schemes.
"""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass

import numpy as np
from joblib import Parallel, delayed
from scipy import integrate, optimize, special, stats

import streams
from bootstrap import ResamplingScheme
from distributions import IntervalSet, integrate_adaptive
from icx_stats import StatKind

logger = logging.getLogger(__name__)

NORMAL_SPAN = 8.0
CDF_EPSABS = 1e-10
QUANTILE_XTOL = 1e-9
TRUNCATION_LEVEL = 1.0 - 1e-6
DEFAULT_NODES = 2048
PATH_CHUNK = 1024


class NonMonotoneError(ValueError):
    pass


def bridge_cov(u: float, v: float) -> float:
    return min(u, v) - u * v


@dataclass(frozen=True)
class TwoPointLimit:
    tau: float
    scheme: ResamplingScheme
    u0: float
    u1: float
    sigma1_sq: float
    sigma2_sq: float
    cov: float

    @property
    def rho(self) -> float:
        return self.cov / math.sqrt(self.sigma1_sq * self.sigma2_sq)

    @property
    def var_sum(self) -> float:
        return self.sigma1_sq + self.sigma2_sq + 2.0 * self.cov


def two_point_params(tau: float, scheme: ResamplingScheme) -> TwoPointLimit:
    """Bridge levels H(0), H(1) of the resampling limit and the moments of B at them."""
    if not 0.0 <= tau <= 1.0:
        raise ValueError(f"tau must lie in [0, 1], got {tau}")
    scheme = ResamplingScheme(scheme)
    if scheme is ResamplingScheme.SWITCHED:
        u0, u1 = (2.0 + tau) / 4.0, (4.0 - tau) / 4.0
    else:
        u0, u1 = (3.0 - tau) / 4.0, (3.0 + tau) / 4.0
    return TwoPointLimit(
        tau=tau,
        scheme=scheme,
        u0=u0,
        u1=u1,
        sigma1_sq=bridge_cov(u0, u0),
        sigma2_sq=bridge_cov(u1, u1),
        cov=bridge_cov(u0, u1),
    )


def xplus_yplus_cdf(p: TwoPointLimit, z: float) -> float:
    """P(X^+ + Y^+ <= z) for the jointly normal pair (X, Y) described by `p`."""
    if z < 0:
        return 0.0
    if math.isinf(z):
        return 1.0
    if p.sigma1_sq <= 0 or p.sigma2_sq <= 0:
        raise ValueError("both variances must be positive")
    s1, s2 = math.sqrt(p.sigma1_sq), math.sqrt(p.sigma2_sq)
    rho = p.rho
    spread = s2 * math.sqrt(max(1.0 - rho * rho, 0.0))
    if spread <= 0:
        raise ValueError("X and Y are perfectly correlated")

    def y_too_large(t):
        return special.ndtr(-(z - rho * s2 * t) / spread) * stats.norm.pdf(t)

    def sum_too_large(t):
        return special.ndtr(-(z - (rho * s2 + s1) * t) / spread) * stats.norm.pdf(t)

    first = integrate_adaptive(y_too_large, -NORMAL_SPAN, 0.0, "P(X <= 0, Y > z)", epsabs=CDF_EPSABS)
    upper = min(z / s1, NORMAL_SPAN)
    second = integrate_adaptive(sum_too_large, 0.0, upper, "P(0 < X, X + Y > z)", epsabs=CDF_EPSABS) if upper > 0 else 0.0
    value = special.ndtr(z / s1) - first - second
    return min(max(float(value), 0.0), 1.0)


def limit_quantile(p: TwoPointLimit, alpha: float) -> float:
    if not 0 < alpha < 0.5:
        raise ValueError(f"alpha must lie in (0, 1/2), got {alpha}")
    target = 1.0 - alpha
    hi = 1.0
    while xplus_yplus_cdf(p, hi) < target:
        hi *= 2.0
    return float(optimize.brentq(lambda z: xplus_yplus_cdf(p, z) - target, 0.0, hi, xtol=QUANTILE_XTOL))


def tks_exceed_prob(tau: float, c: float) -> float:
    """P((X + Y)^+ > c) under the size-switched levels; (X + Y)^+ is the KS limit at 0."""
    if math.isinf(c):
        return 0.0
    sigma = math.sqrt(two_point_params(tau, ResamplingScheme.SWITCHED).var_sum)
    return float(stats.norm.sf(c / sigma))


@dataclass(frozen=True)
class Table1Row:
    alpha: float
    c_switch: float
    c_prop: float
    p_switch: float
    p_prop: float


def table1_rows(tau: float = 0.75, alphas=(0.1, 0.05, 0.025)) -> list:
    switched = two_point_params(tau, ResamplingScheme.SWITCHED)
    proportional = two_point_params(tau, ResamplingScheme.PROPORTIONAL)
    rows = []
    for alpha in alphas:
        c_switch = limit_quantile(switched, alpha)
        c_prop = limit_quantile(proportional, alpha)
        rows.append(Table1Row(alpha, c_switch, c_prop, tks_exceed_prob(tau, c_switch), tks_exceed_prob(tau, c_prop)))
        logger.info("alpha=%.3f c=%.4f c0=%.4f", alpha, c_switch, c_prop)
    return rows


def rho_h(H, s: float, t: float, upper: float, breakpoints=()) -> float:
    """Covariance of B_H(s), B_H(t): the double integral of H(u ^ v) - H(u) H(v) over [s, upper] x [t, upper]."""

    def integrand(v, u):
        hu = float(H(u))
        hv = float(H(v))
        return float(H(min(u, v))) - hu * hv

    def cuts(lo):
        inner = sorted({float(b) for b in breakpoints if lo < b < upper})
        return [lo, *inner, upper]

    total = 0.0
    u_cuts, v_cuts = cuts(s), cuts(t)
    for u_lo, u_hi in zip(u_cuts, u_cuts[1:]):
        for v_lo, v_hi in zip(v_cuts, v_cuts[1:]):
            value, _ = integrate.dblquad(integrand, u_lo, u_hi, v_lo, v_hi, epsabs=1e-10, epsrel=1e-10)
            total += value
    return total


@dataclass(frozen=True)
class BridgeGrid:
    nodes: np.ndarray

    def __post_init__(self):
        nodes = np.array(self.nodes, dtype=float)
        if nodes.ndim != 1 or nodes.shape[0] < 2:
            raise ValueError("a bridge grid needs at least two nodes")
        if nodes[0] != 0.0:
            raise ValueError("a bridge grid starts at 0")
        if np.any(np.diff(nodes) <= 0):
            raise ValueError("bridge grid nodes must be strictly increasing")
        nodes.setflags(write=False)
        object.__setattr__(self, "nodes", nodes)

    @property
    def truncation(self) -> float:
        return float(self.nodes[-1])

    @property
    def size(self) -> int:
        return int(self.nodes.shape[0])

    @classmethod
    def uniform(cls, truncation: float, count: int = DEFAULT_NODES) -> "BridgeGrid":
        return cls(np.linspace(0.0, truncation, count))

    @classmethod
    def for_cdf(cls, H, truncation: float, count: int = DEFAULT_NODES) -> "BridgeGrid":
        """Nodes equally spaced in H-probability, merged with a uniform cap on the step."""
        fine = np.linspace(0.0, truncation, 32 * count + 1)
        levels = np.maximum.accumulate(np.asarray(H(fine), dtype=float))
        targets = np.linspace(levels[0], levels[-1], count)
        picks = np.clip(np.searchsorted(levels, targets, side="left"), 0, fine.shape[0] - 1)
        nodes = np.concatenate([fine[picks], np.linspace(0.0, truncation, count)])
        return cls(np.unique(nodes))

    def with_points(self, points) -> "BridgeGrid":
        extra = [p for p in points if 0.0 <= p <= self.truncation]
        return BridgeGrid(np.unique(np.concatenate([self.nodes, extra])))


def truncation_point(H, gamma: float = math.inf, start: float = 1.0) -> float:
    if math.isfinite(gamma):
        return float(gamma)
    t = start
    while float(H(t)) < TRUNCATION_LEVEL:
        t *= 2.0
    return t


def _levels(H, grid: BridgeGrid) -> np.ndarray:
    levels = np.asarray(H(grid.nodes), dtype=float)
    if np.any(np.diff(levels) < -1e-12):
        raise NonMonotoneError("H must be non-decreasing on the grid")
    if levels[0] < -1e-12 or levels[-1] > 1.0 + 1e-12:
        raise NonMonotoneError("H must map into [0, 1]")
    return np.clip(np.maximum.accumulate(levels), 0.0, 1.0)


def _bridge(levels: np.ndarray, normals: np.ndarray) -> np.ndarray:
    """Brownian bridge at non-decreasing levels, B(u) = W(u) - u W(1); equal levels share a value."""
    steps = np.sqrt(np.diff(np.concatenate([[0.0], levels])))
    walk = np.cumsum(normals[:, :-1] * steps, axis=1)
    endpoint = walk[:, -1] + math.sqrt(1.0 - levels[-1]) * normals[:, -1]
    bridge = walk - levels * endpoint[:, None]
    bridge[:, levels >= 1.0] = 0.0
    return bridge


def _integrate_paths(values: np.ndarray, grid: BridgeGrid, rule: str) -> np.ndarray:
    dt = np.diff(grid.nodes)
    if rule == "trapezoid":
        pieces = 0.5 * (values[:, :-1] + values[:, 1:]) * dt
    elif rule == "left":
        # exact when H is a step function jumping only at grid nodes
        pieces = values[:, :-1] * dt
    else:
        raise ValueError(f"unknown integration rule {rule!r}")
    paths = np.zeros_like(values)
    paths[:, :-1] = np.cumsum(pieces[:, ::-1], axis=1)[:, ::-1]
    return paths


def simulate_bh_path(H, grid: BridgeGrid, stream: np.random.Generator, rule: str = "trapezoid") -> np.ndarray:
    levels = _levels(H, grid)
    normals = stream.standard_normal((1, levels.shape[0] + 1))
    return _integrate_paths(_bridge(levels, normals), grid, rule)[0]


def _at_points(paths: np.ndarray, nodes: np.ndarray, points: np.ndarray) -> np.ndarray:
    points = np.asarray(points, dtype=float)
    left = np.clip(np.searchsorted(nodes, points, side="right") - 1, 0, nodes.shape[0] - 2)
    weight = np.clip((points - nodes[left]) / (nodes[left + 1] - nodes[left]), 0.0, 1.0)
    values = paths[:, left] * (1.0 - weight) + paths[:, left + 1] * weight
    values[:, points > nodes[-1]] = 0.0
    return values


def _functional(paths: np.ndarray, grid: BridgeGrid, kind: StatKind, restriction: IntervalSet) -> np.ndarray:
    nodes = grid.nodes
    result = np.zeros(paths.shape[0])
    if kind is StatKind.KS:
        for lo, hi in restriction.intervals:
            inner = nodes[(nodes > lo) & (nodes < hi)]
            ends = [lo] if hi == lo else [lo, min(hi, grid.truncation)]
            values = _at_points(paths, nodes, np.concatenate([ends, inner]))
            result = np.maximum(result, values.max(axis=1))
        return result
    for lo, hi in restriction.intervals:
        hi = min(hi, grid.truncation)
        if hi <= lo:
            continue
        points = np.unique(np.concatenate([[lo, hi], nodes[(nodes > lo) & (nodes < hi)]]))
        values = np.maximum(_at_points(paths, nodes, points), 0.0)
        result += integrate.trapezoid(values, points, axis=1)
    return result


def _path_chunk(levels, grid, kind, restriction, seed, start, stop, rule):
    normals = np.empty((stop - start, levels.shape[0] + 1))
    for row, index in enumerate(range(start, stop)):
        normals[row] = streams.substream(seed, streams.BRIDGE_PATHS, index=index).standard_normal(levels.shape[0] + 1)
    paths = _integrate_paths(_bridge(levels, normals), grid, rule)
    return _functional(paths, grid, kind, restriction)


def simulate_functional(
    H,
    kind: StatKind,
    restriction: IntervalSet,
    grid: BridgeGrid,
    paths: int,
    seed: int,
    threads: int = 1,
    rule: str = "trapezoid",
) -> np.ndarray:
    """Sorted Monte-Carlo draws of sup (KS, positive part) or integral of B_H^+ (CvM) over `restriction`."""
    if paths < 1:
        raise ValueError(f"paths must be at least 1, got {paths}")
    kind = StatKind(kind)
    levels = _levels(H, grid)
    bounds = [(start, min(start + PATH_CHUNK, paths)) for start in range(0, paths, PATH_CHUNK)]
    if threads > 1 and len(bounds) > 1:
        parts = Parallel(n_jobs=threads, prefer="threads")(
            delayed(_path_chunk)(levels, grid, kind, restriction, seed, start, stop, rule) for start, stop in bounds
        )
    else:
        parts = [_path_chunk(levels, grid, kind, restriction, seed, start, stop, rule) for start, stop in bounds]
    logger.debug("Simulated %s paths on %s nodes", paths, grid.size)
    return np.sort(np.concatenate(parts))
