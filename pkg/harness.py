"""Power studies: repeated data draws per (pair, sizes) cell, one bootstrap test each.

Replication r of cell (pair i, sizes j) draws its data from the stream keyed by
(seed, i, j) at counter r and bootstraps with a seed derived from the same
coordinates, so a cell's result does not depend on which other cells run, in
what order, or on how many threads.
"""
from __future__ import annotations

import hashlib
import json
import logging
import math
import os
import time
from dataclasses import dataclass, field

from joblib import Parallel, delayed

import streams
from bootstrap import BootstrapConfig, ResamplingScheme, run_tests
from distributions import DistributionSpec, SpecError, parse_spec, sample_n
from icx_stats import StatKind
from models import StudyCellRecord

logger = logging.getLogger(__name__)

STATE_KEY = "finished_cells"

TABLE2_PAIRS = (
    ("unif(0,1)", "unif(0,1)"),
    ("unif(1/4,3/4)", "unif(1/4,3/4)"),
    ("exp(1)", "exp(1)"),
    ("weib(2)", "weib(2)"),
    ("gamma(2)", "gamma(2)"),
    ("gamma(1/2)", "gamma(1/2)"),
    ("unif(1/4,3/4)", "unif(0,1)"),
    ("weib(2)", "exp(1)"),
    ("unif(0,2)", "exp(1)"),
    ("exp(4)", "par(5)"),
    ("unif(0,1)", "unif(1/4,3/4)"),
    ("exp(1)", "weib(2)"),
    ("weib(2)", "exp(4/3)"),
    ("exp(4/3)", "weib(2)"),
    ("gamma(2)", "exp(1)"),
    ("exp(1)", "gamma(1/2)"),
)
TABLE2_SIZES = ((50, 30), (30, 50), (50, 50))


class StudyConfigError(ValueError):
    pass


@dataclass(frozen=True)
class PowerStudySpec:
    pairs: tuple
    sizes: tuple
    seed: int
    alpha: float = 0.05
    replications: int = 1000
    resamples: int = 1000
    scheme: ResamplingScheme = ResamplingScheme.SWITCHED
    name: str = "study"

    def __post_init__(self):
        try:
            object.__setattr__(self, "scheme", ResamplingScheme(self.scheme))
        except ValueError:
            raise StudyConfigError(f"unknown resampling scheme {self.scheme!r}") from None
        pairs = tuple((_as_spec(f), _as_spec(g)) for f, g in self.pairs)
        sizes = tuple((int(m), int(n)) for m, n in self.sizes)
        object.__setattr__(self, "pairs", pairs)
        object.__setattr__(self, "sizes", sizes)
        if not pairs:
            raise StudyConfigError("a study needs at least one distribution pair")
        if not sizes:
            raise StudyConfigError("a study needs at least one (m, n) size")
        if any(m < 2 or n < 2 for m, n in sizes):
            raise StudyConfigError(f"sample sizes must be at least 2, got {list(sizes)}")
        if self.replications < 1 or self.resamples < 1:
            raise StudyConfigError("replications and resamples must be at least 1")
        if not 0 < self.alpha < 0.5:
            raise StudyConfigError(f"alpha must lie in (0, 1/2), got {self.alpha}")
        if not 0 <= self.seed < streams.SEED_LIMIT:
            raise StudyConfigError(f"seed must lie in [0, 2**63), got {self.seed}")

    def cells(self) -> list:
        return [
            (pair_index, size_index, f, g, m, n)
            for pair_index, (f, g) in enumerate(self.pairs)
            for size_index, (m, n) in enumerate(self.sizes)
        ]

    def to_dict(self) -> dict:
        return {
            "name": self.name,
            "pairs": [[f.label, g.label] for f, g in self.pairs],
            "sizes": [list(size) for size in self.sizes],
            "alpha": self.alpha,
            "replications": self.replications,
            "resamples": self.resamples,
            "scheme": self.scheme.value,
            "seed": self.seed,
        }

    def fingerprint(self) -> str:
        payload = json.dumps(self.to_dict(), sort_keys=True)
        return hashlib.sha256(payload.encode("utf-8")).hexdigest()[:16]


def _as_spec(value) -> DistributionSpec:
    if isinstance(value, DistributionSpec):
        return value
    try:
        return parse_spec(str(value))
    except SpecError as exc:
        raise StudyConfigError(str(exc)) from None


def study_spec_from_dict(payload, **overrides) -> PowerStudySpec:
    if not isinstance(payload, dict):
        raise StudyConfigError("a study document must be a JSON object")
    merged = {**payload, **{k: v for k, v in overrides.items() if v is not None}}
    unknown = set(merged) - {"name", "pairs", "sizes", "alpha", "replications", "resamples", "scheme", "seed"}
    if unknown:
        raise StudyConfigError(f"unknown study fields: {', '.join(sorted(unknown))}")
    for required in ("pairs", "sizes", "seed"):
        if required not in merged:
            raise StudyConfigError(f"study document is missing {required!r}")
    try:
        pairs = [tuple(pair) for pair in merged["pairs"]]
        sizes = [tuple(size) for size in merged["sizes"]]
        if any(len(pair) != 2 for pair in pairs) or any(len(size) != 2 for size in sizes):
            raise StudyConfigError("pairs and sizes must be two-element lists")
        return PowerStudySpec(
            pairs=tuple(pairs),
            sizes=tuple(sizes),
            seed=int(merged["seed"]),
            alpha=float(merged.get("alpha", 0.05)),
            replications=int(merged.get("replications", 1000)),
            resamples=int(merged.get("resamples", 1000)),
            scheme=merged.get("scheme", ResamplingScheme.SWITCHED),
            name=str(merged.get("name", "study")),
        )
    except (TypeError, ValueError) as exc:
        if isinstance(exc, StudyConfigError):
            raise
        raise StudyConfigError(f"malformed study document: {exc}") from None


def load_study_spec(path, **overrides) -> PowerStudySpec:
    with open(path, "r", encoding="utf-8") as fh:
        try:
            payload = json.load(fh)
        except json.JSONDecodeError as exc:
            raise StudyConfigError(f"{path}: invalid JSON at line {exc.lineno}") from None
    return study_spec_from_dict(payload, **overrides)


def table2_spec(seed: int, **overrides) -> PowerStudySpec:
    payload = {
        "name": "table2",
        "pairs": [list(pair) for pair in TABLE2_PAIRS],
        "sizes": [list(size) for size in TABLE2_SIZES],
        "seed": seed,
    }
    return study_spec_from_dict(payload, **overrides)


@dataclass
class PowerStudyResult:
    name: str
    fingerprint: str
    rows: list = field(default_factory=list)

    def rate(self, f: str, g: str, m: int, n: int, kind: StatKind) -> float:
        for row in self.rows:
            if (row.f, row.g, row.m, row.n, row.statistic) == (f, g, m, n, StatKind(kind).value):
                return row.rate
        raise KeyError((f, g, m, n, kind))


def _replication(spec: PowerStudySpec, pair_index, size_index, f, g, m, n, r) -> tuple:
    stream = streams.substream(spec.seed, streams.STUDY_DATA, pair_index, size_index, index=r)
    x = sample_n(f, m, stream)
    y = sample_n(g, n, stream)
    cfg = BootstrapConfig(
        replicates=spec.resamples,
        alpha=spec.alpha,
        scheme=spec.scheme,
        seed=streams.derive_seed(spec.seed, streams.STUDY_BOOTSTRAP, pair_index, size_index, r),
    )
    reports = run_tests(x, y, [StatKind.KS, StatKind.CVM], cfg)
    return tuple(report.reject for report in reports)


def run_cell(spec: PowerStudySpec, cell, threads: int = 1) -> list:
    pair_index, size_index, f, g, m, n = cell
    started = time.perf_counter()
    if threads > 1:
        decisions = Parallel(n_jobs=threads, prefer="threads")(
            delayed(_replication)(spec, pair_index, size_index, f, g, m, n, r) for r in range(spec.replications)
        )
    else:
        decisions = [_replication(spec, pair_index, size_index, f, g, m, n, r) for r in range(spec.replications)]
    elapsed = time.perf_counter() - started
    rows = []
    for position, kind in enumerate((StatKind.KS, StatKind.CVM)):
        rejections = sum(1 for decision in decisions if decision[position])
        rate = rejections / spec.replications
        rows.append(
            StudyCellRecord(
                study=spec.name,
                f=f.label,
                g=g.label,
                m=m,
                n=n,
                statistic=kind.value,
                rejections=rejections,
                replications=spec.replications,
                rate=rate,
                std_error=math.sqrt(rate * (1.0 - rate) / spec.replications),
                alpha=spec.alpha,
                resamples=spec.resamples,
                scheme=spec.scheme.value,
                seed=spec.seed,
                wall_time=elapsed,
            )
        )
    logger.info(
        "%s vs %s (m=%s, n=%s): ks=%.3f cvm=%.3f in %.1fs", f.label, g.label, m, n, rows[0].rate, rows[1].rate, elapsed
    )
    return rows


def _cell_key(cell) -> str:
    return f"{cell[0]}:{cell[1]}"


def load_state(path, fingerprint: str) -> dict:
    try:
        with open(path, "r", encoding="utf-8") as fh:
            payload = json.load(fh)
    except FileNotFoundError:
        return {}
    except Exception:
        logger.exception("Failed to load study state from %s", path)
        return {}

    if not isinstance(payload, dict) or payload.get("fingerprint") != fingerprint:
        logger.warning("Ignoring study state in %s: written for a different study", path)
        return {}
    cells = payload.get(STATE_KEY, {})
    if not isinstance(cells, dict):
        return {}

    restored = {}
    for key, rows in cells.items():
        try:
            restored[key] = [StudyCellRecord(**row) for row in rows]
        except Exception:
            logger.warning("Dropping unreadable checkpoint entry %s", key)
    return restored


def save_state(path, fingerprint: str, finished: dict):
    parent = os.path.dirname(path)
    if parent:
        os.makedirs(parent, exist_ok=True)
    payload = {
        "fingerprint": fingerprint,
        STATE_KEY: {key: [row.model_dump(exclude={"id", "created_at"}) for row in rows] for key, rows in finished.items()},
    }
    temp_path = f"{path}.tmp"
    try:
        with open(temp_path, "w", encoding="utf-8") as fh:
            json.dump(payload, fh, indent=2, sort_keys=True)
        os.replace(temp_path, path)
    except Exception:
        logger.exception("Failed to save study state to %s", path)


def power_study(spec: PowerStudySpec, threads: int = 1, state_path=None) -> PowerStudyResult:
    fingerprint = spec.fingerprint()
    finished = load_state(state_path, fingerprint) if state_path else {}
    if finished:
        logger.info("Resuming %s: %s cell(s) already finished", spec.name, len(finished))
    result = PowerStudyResult(name=spec.name, fingerprint=fingerprint)
    for cell in spec.cells():
        key = _cell_key(cell)
        if key not in finished:
            finished[key] = run_cell(spec, cell, threads)
            if state_path:
                save_state(state_path, fingerprint, finished)
        result.rows.extend(finished[key])
    return result
