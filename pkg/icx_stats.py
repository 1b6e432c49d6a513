"""Kolmogorov-Smirnov and Cramer-von Mises statistics for increasing convex order.

Both statistics are functionals of f = F_m^SL - G_n^SL, which is piecewise
linear with breakpoints at the pooled data, so they are evaluated exactly from
the node values. Observed statistics and bootstrap replicates share one
extended-precision kernel, `batch_statistics`. `oracle_statistic` is a dense
brute-force evaluation kept for verification only.
"""
from __future__ import annotations

import enum
import math

import numpy as np

from empirical import Sample

ORACLE_CHUNK = 1 << 16


class StatKind(str, enum.Enum):
    KS = "ks"
    CVM = "cvm"


def kappa(m: int, n: int) -> float:
    if m < 1 or n < 1:
        raise ValueError(f"sample sizes must be positive, got m={m}, n={n}")
    return math.sqrt(m * n / (m + n))


def _positive_area(z0, z1, f0, f1):
    """Integral of max(f, 0) over segments where f is linear from f0 to f1.

    Ends of the same sign take the trapezoid of the positive parts. A sign
    change takes the triangle p^2 / (2 |f1 - f0|) * width.
    """
    width = z1 - z0
    positive = np.maximum(f0, 0.0) + np.maximum(f1, 0.0)
    crossing = (f0 > 0) != (f1 > 0)
    rise = np.where(crossing, np.abs(f1 - f0), 1.0)
    return np.where(crossing, 0.5 * positive * positive / rise, 0.5 * positive) * width


def ks_statistic(x: Sample, y: Sample) -> float:
    return statistic(x, y, StatKind.KS)


def cvm_statistic(x: Sample, y: Sample) -> float:
    return statistic(x, y, StatKind.CVM)


def statistic(x: Sample, y: Sample, kind: StatKind) -> float:
    ks, cvm = batch_statistics(x.values[None, :], y.values[None, :])
    if StatKind(kind) is StatKind.KS:
        return float(ks[0])
    return float(cvm[0])


def _direct_difference(x: Sample, y: Sample, t: np.ndarray) -> np.ndarray:
    out = np.empty_like(t)
    for start in range(0, t.shape[0], ORACLE_CHUNK):
        chunk = t[start:start + ORACLE_CHUNK, None]
        out[start:start + ORACLE_CHUNK] = (
            np.maximum(x.values[None, :], chunk).mean(axis=1) - np.maximum(y.values[None, :], chunk).mean(axis=1)
        )
    return out


def oracle_statistic(x: Sample, y: Sample, kind: StatKind, refinement: int) -> float:
    """Brute force: evaluate the defining sums on `refinement` subintervals per segment."""
    if refinement < 2:
        raise ValueError(f"refinement must be at least 2, got {refinement}")
    nodes = np.unique(np.concatenate([[0.0], x.values, y.values]))
    if nodes.shape[0] < 2:
        return 0.0
    fractions = np.linspace(0.0, 1.0, refinement + 1)
    t = (nodes[:-1, None] + np.diff(nodes)[:, None] * fractions[None, :]).ravel()
    values = _direct_difference(x, y, t).reshape(nodes.shape[0] - 1, refinement + 1)
    scale = kappa(x.size, y.size)
    if StatKind(kind) is StatKind.KS:
        return scale * max(float(values.max()), 0.0)
    positive = np.maximum(values, 0.0)
    steps = (np.diff(nodes) / refinement)[:, None]
    areas = 0.5 * (positive[:, :-1] + positive[:, 1:]) * steps
    return scale * math.fsum(areas.ravel().tolist())


def batch_statistics(x_rows: np.ndarray, y_rows: np.ndarray) -> tuple:
    """Both statistics for every row pair of an (k, m) and a (k, n) matrix.

    Node values, areas and row sums are carried in extended precision and
    rounded to float64 once at the end. Ties between pooled values produce
    zero-width segments, which add nothing, so rows need no deduplication.
    """
    k, m = x_rows.shape
    n = y_rows.shape[1]
    pooled = np.concatenate([x_rows, y_rows], axis=1).astype(np.longdouble)
    # integer weights n and -m; node values carry a factor mn until rescaled
    weights = np.concatenate([np.full(m, n, dtype=np.longdouble), np.full(n, -m, dtype=np.longdouble)])
    order = np.argsort(pooled, axis=1, kind="stable")
    z = np.take_along_axis(pooled, order, axis=1)
    w = weights[order]

    # f(z_j) = sum_{i > j} w_i (z_i - z_j), via exclusive suffix sums
    suffix_wz = np.cumsum((w * z)[:, ::-1], axis=1, dtype=np.longdouble)[:, ::-1]
    suffix_w = np.cumsum(w[:, ::-1], axis=1, dtype=np.longdouble)[:, ::-1]
    zeros = np.zeros((k, 1), dtype=np.longdouble)
    tail_wz = np.concatenate([suffix_wz[:, 1:], zeros], axis=1)
    tail_w = np.concatenate([suffix_w[:, 1:], zeros], axis=1)
    at_nodes = tail_wz - z * tail_w

    nodes = np.concatenate([zeros, z], axis=1)
    values = np.concatenate([suffix_wz[:, :1], at_nodes], axis=1)
    values[:, -1] = 0.0
    values /= m * n

    scale = kappa(m, n)
    ks = scale * np.maximum(values.max(axis=1), 0.0)
    areas = _positive_area(nodes[:, :-1], nodes[:, 1:], values[:, :-1], values[:, 1:])
    cvm = scale * areas.sum(axis=1, dtype=np.longdouble)
    return ks.astype(float), cvm.astype(float)
