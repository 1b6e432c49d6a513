"""Command-line front end: `test`, `power`, `table1` and `classify`.

Exit codes: 0 on success, 1 on usage errors, 2 on data errors. The test
decision is reported in the output, never in the exit code.
"""
from __future__ import annotations

import argparse
import json
import logging
import math
import sys
from datetime import datetime, timezone

import httpx
from sqlalchemy.exc import SQLAlchemyError

import settings
import streams
from bootstrap import BootstrapConfig, ResamplingScheme, run_tests
from distributions import (
    GridSpec,
    PairClass,
    QuadratureError,
    SpecError,
    classify_pair,
    equality_set,
    icx_holds,
    karlin_novikov,
    parse_spec,
    prob_exceed,
    st_holds,
)
from empirical import SampleError
from harness import StudyConfigError, load_study_spec, power_study, table2_spec
from icx_stats import StatKind
from limit_analytics import table1_rows
from report import MissingDependency, write_report, write_study_pdf, write_table1_pdf
from sample_io import read_sample

logger = logging.getLogger(__name__)

DATA_ERRORS = (
    SampleError,
    SpecError,
    StudyConfigError,
    QuadratureError,
    json.JSONDecodeError,
    UnicodeDecodeError,
    OSError,
    httpx.HTTPError,
    httpx.InvalidURL,
    SQLAlchemyError,
    settings.MissingSetting,
    MissingDependency,
)


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(1, f"{self.prog}: error: {message}\n")


def _alpha(text: str) -> float:
    try:
        value = float(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"not a number: {text!r}") from None
    if not 0 < value < 0.5:
        raise argparse.ArgumentTypeError(f"alpha must lie in (0, 1/2), got {value}")
    return value


def _alphas(text: str) -> list:
    values = [_alpha(part) for part in text.split(",") if part.strip()]
    if not values:
        raise argparse.ArgumentTypeError("expected at least one alpha")
    return values


def _positive_int(text: str) -> int:
    try:
        value = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"not an integer: {text!r}") from None
    if value < 1:
        raise argparse.ArgumentTypeError(f"must be at least 1, got {value}")
    return value


def _seed(text: str) -> int:
    try:
        value = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"not an integer: {text!r}") from None
    if not 0 <= value < streams.SEED_LIMIT:
        raise argparse.ArgumentTypeError(f"seed must lie in [0, 2**63), got {value}")
    return value


def _tau(text: str) -> float:
    try:
        value = float(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"not a number: {text!r}") from None
    if not 0 <= value <= 1:
        raise argparse.ArgumentTypeError(f"tau must lie in [0, 1], got {value}")
    return value


def _open_tau(text: str) -> float:
    value = _tau(text)
    if value in (0.0, 1.0):
        raise argparse.ArgumentTypeError(f"tau must lie strictly inside (0, 1), got {value}")
    return value


def _tolerance(text: str) -> float:
    try:
        value = float(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"not a number: {text!r}") from None
    if not value >= 0:
        raise argparse.ArgumentTypeError(f"tolerance must be non-negative, got {value}")
    return value


def _add_output_flags(parser, default_format, formats=("json", "tsv")):
    parser.add_argument("--out", help="Write the report to this file instead of standard output.")
    parser.add_argument("--format", choices=formats, default=default_format)


def _add_pdf_flag(parser):
    parser.add_argument(
        "--pdf",
        nargs="?",
        const="auto",
        help="Write a PDF table. Optionally pass a file path; defaults to an auto-named file in cwd.",
    )


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="icx", description="Bootstrap tests for increasing convex (stop-loss) order.")
    parser.add_argument("--quiet", action="store_true", help="Only log warnings and errors.")
    commands = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    test = commands.add_parser("test", help="Test H0: X <=icx Y on two samples.")
    test.add_argument("--x", required=True, help="File or http(s) URL with the X-sample.")
    test.add_argument("--y", required=True, help="File or http(s) URL with the Y-sample.")
    test.add_argument("--column", type=_positive_int, help="1-based column of a delimited file.")
    test.add_argument("--stat", choices=("ks", "cvm", "both"), default="both")
    test.add_argument("--alpha", type=_alpha, default=0.05)
    test.add_argument("--resamples", type=_positive_int, default=None)
    test.add_argument("--scheme", choices=[s.value for s in ResamplingScheme], default=ResamplingScheme.SWITCHED.value)
    test.add_argument("--seed", type=_seed, default=0)
    test.add_argument("--threads", type=_positive_int, default=None)
    test.add_argument("--no-timing", action="store_true", help="Omit wall times for byte-stable output.")
    _add_output_flags(test, "json")

    power = commands.add_parser("power", help="Run a power study.")
    source = power.add_mutually_exclusive_group(required=True)
    source.add_argument("--config", help="JSON study document.")
    source.add_argument("--preset", choices=("table2",))
    power.add_argument("--seed", type=_seed, required=True)
    power.add_argument("--replications", type=_positive_int, default=None)
    power.add_argument("--resamples", type=_positive_int, default=None)
    power.add_argument("--alpha", type=_alpha, default=None)
    power.add_argument("--scheme", choices=[s.value for s in ResamplingScheme], default=None)
    power.add_argument("--threads", type=_positive_int, default=None)
    power.add_argument("--state", default=None, help="Checkpoint file; finished cells are skipped on rerun.")
    power.add_argument("--db", action="store_true", help="Persist the cells to DATABASE_URL.")
    power.add_argument("--no-timing", action="store_true")
    _add_pdf_flag(power)
    _add_output_flags(power, "tsv")

    table1 = commands.add_parser("table1", help="Two-point limit quantiles and KS rejection probabilities.")
    table1.add_argument("--tau", type=_open_tau, default=0.75)
    table1.add_argument("--alphas", type=_alphas, default=[0.1, 0.05, 0.025])
    _add_pdf_flag(table1)
    _add_output_flags(table1, "tsv")

    classify = commands.add_parser("classify", help="Where a pair of distributions sits relative to H0.")
    classify.add_argument("--f", required=True, help="Distribution of X, e.g. weib(2).")
    classify.add_argument("--g", required=True, help="Distribution of Y, e.g. exp(1).")
    classify.add_argument("--tau", type=_tau, default=0.5, help="Mixing weight of G in H, n/(m+n).")
    classify.add_argument("--tol", type=_tolerance, default=None)
    classify.add_argument("--grid-points", type=_positive_int, default=4096)
    _add_output_flags(classify, "json", formats=("json",))
    return parser


def _emit(text: str, out_path):
    if out_path:
        with open(out_path, "w", encoding="utf-8") as fh:
            fh.write(text)
        logger.info("Report written to %s", out_path)
    else:
        sys.stdout.write(text)


def _pdf_path(value, stem):
    if value != "auto":
        return value
    timestamp = datetime.now(timezone.utc).strftime("%Y%m%d_%H%M%S")
    return f"{stem}_{timestamp}.pdf"


def _run_test(args) -> int:
    x = read_sample(args.x, args.column)
    y = read_sample(args.y, args.column)
    cfg = BootstrapConfig(
        replicates=args.resamples or settings.resamples(),
        alpha=args.alpha,
        scheme=ResamplingScheme(args.scheme),
        seed=args.seed,
        threads=args.threads or settings.threads(),
    )
    kinds = [StatKind.KS, StatKind.CVM] if args.stat == "both" else [StatKind(args.stat)]
    reports = run_tests(x, y, kinds, cfg)
    _emit(write_report(reports, args.format, timing=not args.no_timing), args.out)
    return 0


def _run_power(args) -> int:
    overrides = {
        "seed": args.seed,
        "replications": args.replications,
        "resamples": args.resamples,
        "alpha": args.alpha,
        "scheme": args.scheme,
    }
    spec = table2_spec(**overrides) if args.preset else load_study_spec(args.config, **overrides)
    state_path = args.state or settings.study_state_file()
    logger.info("Study %s: %s cell(s), R=%s, B=%s", spec.name, len(spec.cells()), spec.replications, spec.resamples)
    result = power_study(spec, threads=args.threads or settings.threads(), state_path=state_path)
    _emit(write_report(result, args.format, timing=not args.no_timing), args.out)
    if args.pdf:
        path = _pdf_path(args.pdf, f"power_{spec.name}")
        write_study_pdf(result, path)
        logger.info("PDF written to %s", path)
    if args.db:
        from db import get_engine, init_db, save_study

        engine = get_engine(settings.database_url())
        init_db(engine)
        save_study(engine, result)
    return 0


def _run_table1(args) -> int:
    rows = table1_rows(args.tau, tuple(args.alphas))
    _emit(write_report(rows, args.format), args.out)
    if args.pdf:
        path = _pdf_path(args.pdf, "table1")
        write_table1_pdf(rows, path, args.tau)
        logger.info("PDF written to %s", path)
    return 0


def _finite_or_none(value: float):
    return None if math.isinf(value) else value


def classification_report(f_text: str, g_text: str, tau: float, tol=None, grid_points: int = 4096) -> dict:
    f, g = parse_spec(f_text), parse_spec(g_text)
    grid = GridSpec(points=grid_points)
    order = icx_holds(f, g, grid, tol)
    stochastic = st_holds(f, g, grid)
    verdict = classify_pair(f, g, tau, tol, grid)
    payload = {
        "f": f.label,
        "g": g.label,
        "tau": tau,
        "class": verdict.value,
        "icx_holds": order.holds,
        "icx_max_violation": order.max_violation,
        "icx_argmax": order.argmax,
        "st_holds": stochastic.holds,
        "st_max_gap": stochastic.max_violation,
        "prob_f_exceeds_g": prob_exceed(f, g),
        "prob_g_exceeds_f": prob_exceed(g, f),
        "karlin_novikov": karlin_novikov(f, g, grid),
    }
    if verdict is not PairClass.ALTERNATIVE:
        sets = equality_set(f, g, tau, tol, grid)
        payload.update(A=sets.A.to_dict(), S=sets.S.to_dict(), gamma_h=_finite_or_none(sets.gamma_h))
    return payload


def _run_classify(args) -> int:
    payload = classification_report(args.f, args.g, args.tau, args.tol, args.grid_points)
    _emit(write_report(payload, args.format), args.out)
    return 0


HANDLERS = {
    "test": _run_test,
    "power": _run_power,
    "table1": _run_table1,
    "classify": _run_classify,
}


def cli_main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return exc.code if isinstance(exc.code, int) else 1

    logging.basicConfig(
        level="WARNING" if args.quiet else settings.log_level(),
        stream=sys.stderr,
        format="%(asctime)s %(levelname)s %(name)s: %(message)s",
    )
    try:
        return HANDLERS[args.command](args)
    except DATA_ERRORS as exc:
        logger.debug("Command %s failed", args.command, exc_info=True)
        sys.stderr.write(f"icx {args.command}: error: {exc}\n")
        return 2


if __name__ == "__main__":
    sys.exit(cli_main())
