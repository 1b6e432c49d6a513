"""Size-switched pooled resampling and the bootstrap test procedure.

Resampling draws pooled indices (not values) from the mixture that weights
the X-sample by n/(m+n) and the Y-sample by m/(m+n). Replicate b always uses
the stream keyed by (seed, b), so the sorted replicate law is a pure function
of the data and the configuration.
"""
from __future__ import annotations

import enum
import logging
import math
import time
from dataclasses import dataclass

import numpy as np
from joblib import Parallel, delayed

import streams
from empirical import Sample
from icx_stats import StatKind, batch_statistics, statistic
from models import TestReport

logger = logging.getLogger(__name__)

# Fixed chunking keeps replicate values independent of the thread count.
REPLICATE_CHUNK = 256
BOTH = "both"


class ResamplingScheme(str, enum.Enum):
    SWITCHED = "switched"
    PROPORTIONAL = "proportional"


@dataclass(frozen=True)
class BootstrapConfig:
    replicates: int = 1000
    alpha: float = 0.05
    scheme: ResamplingScheme = ResamplingScheme.SWITCHED
    seed: int = 0
    threads: int = 1

    def __post_init__(self):
        object.__setattr__(self, "scheme", ResamplingScheme(self.scheme))
        if self.replicates < 1:
            raise ValueError(f"replicates must be at least 1, got {self.replicates}")
        if not 0 < self.alpha < 0.5:
            raise ValueError(f"alpha must lie in (0, 1/2), got {self.alpha}")
        if not 0 <= self.seed < streams.SEED_LIMIT:
            raise ValueError(f"seed must lie in [0, 2**63), got {self.seed}")
        if self.threads < 1:
            raise ValueError(f"threads must be at least 1, got {self.threads}")


def pooled_weights(m: int, n: int, scheme: ResamplingScheme) -> np.ndarray:
    if m < 1 or n < 1:
        raise ValueError(f"sample sizes must be positive, got m={m}, n={n}")
    total = m + n
    if ResamplingScheme(scheme) is ResamplingScheme.PROPORTIONAL:
        return np.full(total, 1.0 / total)
    return np.concatenate([np.full(m, n / (total * m)), np.full(n, m / (total * n))])


def _draw_indices(weights: np.ndarray, stream: np.random.Generator) -> np.ndarray:
    return stream.choice(weights.shape[0], size=weights.shape[0], p=weights)


def resample_split(x: Sample, y: Sample, scheme: ResamplingScheme, stream: np.random.Generator) -> tuple:
    pooled = np.concatenate([x.values, y.values])
    indices = _draw_indices(pooled_weights(x.size, y.size, scheme), stream)
    draws = pooled[indices]
    return Sample._trusted(np.sort(draws[: x.size])), Sample._trusted(np.sort(draws[x.size:]))


def _replicate_chunk(pooled, weights, m, seed, start, stop):
    rows = np.empty((stop - start, pooled.shape[0]))
    for row, b in enumerate(range(start, stop)):
        rows[row] = pooled[_draw_indices(weights, streams.substream(seed, streams.BOOTSTRAP, index=b))]
    return batch_statistics(rows[:, :m], rows[:, m:])


def replicate_statistics(x: Sample, y: Sample, cfg: BootstrapConfig) -> dict:
    """Unsorted KS and CvM replicate values, position b from stream (seed, b)."""
    pooled = np.concatenate([x.values, y.values])
    weights = pooled_weights(x.size, y.size, cfg.scheme)
    bounds = [(start, min(start + REPLICATE_CHUNK, cfg.replicates)) for start in range(0, cfg.replicates, REPLICATE_CHUNK)]
    if cfg.threads > 1 and len(bounds) > 1:
        parts = Parallel(n_jobs=cfg.threads, prefer="threads")(
            delayed(_replicate_chunk)(pooled, weights, x.size, cfg.seed, start, stop) for start, stop in bounds
        )
    else:
        parts = [_replicate_chunk(pooled, weights, x.size, cfg.seed, start, stop) for start, stop in bounds]
    return {
        StatKind.KS: np.concatenate([ks for ks, _ in parts]),
        StatKind.CVM: np.concatenate([cvm for _, cvm in parts]),
    }


def bootstrap_distribution(x: Sample, y: Sample, kind: StatKind, cfg: BootstrapConfig) -> np.ndarray:
    return np.sort(replicate_statistics(x, y, cfg)[StatKind(kind)])


def critical_value(replicates: np.ndarray, alpha: float) -> float:
    """The ceil(B(1 - alpha))-th smallest replicate."""
    replicates = np.asarray(replicates, dtype=float)
    if replicates.size == 0:
        raise ValueError("no replicates")
    if not 0 < alpha < 0.5:
        raise ValueError(f"alpha must lie in (0, 1/2), got {alpha}")
    rank = math.ceil(replicates.size * (1.0 - alpha) - 1e-9)
    rank = min(max(rank, 1), replicates.size)
    return float(replicates[rank - 1])


def p_value(replicates: np.ndarray, observed: float) -> float:
    replicates = np.asarray(replicates, dtype=float)
    exceed = int(np.count_nonzero(replicates >= observed))
    return (1 + exceed) / (replicates.size + 1)


def run_tests(x: Sample, y: Sample, kinds, cfg: BootstrapConfig) -> list:
    """One report per requested statistic; all statistics share the same B resamples."""
    kinds = [StatKind(kind) for kind in kinds]
    started = time.perf_counter()
    replicates = replicate_statistics(x, y, cfg)
    shared = time.perf_counter() - started
    reports = []
    for kind in kinds:
        kind_started = time.perf_counter()
        observed = statistic(x, y, kind)
        values = np.sort(replicates[kind])
        threshold = critical_value(values, cfg.alpha)
        reports.append(
            TestReport(
                statistic=kind.value,
                observed=observed,
                critical_value=threshold,
                p_value=p_value(values, observed),
                reject=observed > threshold,
                m=x.size,
                n=y.size,
                alpha=cfg.alpha,
                resamples=cfg.replicates,
                scheme=cfg.scheme.value,
                seed=cfg.seed,
                wall_time=shared + time.perf_counter() - kind_started,
            )
        )
    logger.debug("Bootstrap m=%s n=%s B=%s took %.3fs", x.size, y.size, cfg.replicates, time.perf_counter() - started)
    return reports


def run_test(x: Sample, y: Sample, kind, cfg: BootstrapConfig):
    """A single report, or a (ks, cvm) pair of reports for kind "both"."""
    if kind == BOTH:
        return tuple(run_tests(x, y, [StatKind.KS, StatKind.CVM], cfg))
    return run_tests(x, y, [kind], cfg)[0]
