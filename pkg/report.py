"""Serialising test reports, power studies and the Table 1 reproduction."""
from __future__ import annotations

import csv
import io
import json
import os
from dataclasses import asdict

try:
    from fpdf import FPDF
except ImportError:
    FPDF = None

from harness import PowerStudyResult
from limit_analytics import Table1Row
from models import TestReport

STUDY_COLUMNS = (
    "f",
    "g",
    "m",
    "n",
    "statistic",
    "rejections",
    "replications",
    "rate",
    "std_error",
    "alpha",
    "resamples",
    "scheme",
    "seed",
    "wall_time",
)
TABLE1_COLUMNS = ("alpha", "c_switch", "c_prop", "p_switch", "p_prop")


class MissingDependency(RuntimeError):
    pass


def _report_dict(report: TestReport, timing: bool) -> dict:
    return report.model_dump(exclude=None if timing else {"wall_time"})


def _study_rows(result: PowerStudyResult, timing: bool) -> tuple:
    columns = [c for c in STUDY_COLUMNS if timing or c != "wall_time"]
    rows = [[getattr(row, c) for c in columns] for row in result.rows]
    return columns, rows


def _table1_rows(rows) -> tuple:
    return list(TABLE1_COLUMNS), [[round(getattr(row, c), 6) for c in TABLE1_COLUMNS] for row in rows]


def _tsv(columns, rows) -> str:
    buffer = io.StringIO()
    writer = csv.writer(buffer, delimiter="\t", lineterminator="\n")
    writer.writerow(columns)
    writer.writerows(rows)
    return buffer.getvalue()


def _is_table1(obj) -> bool:
    return isinstance(obj, (list, tuple)) and bool(obj) and all(isinstance(row, Table1Row) for row in obj)


def write_report(obj, fmt: str = "json", timing: bool = True) -> str:
    """Text for a TestReport, a list of them, a PowerStudyResult, Table 1 rows, or a plain dict."""
    if fmt not in ("json", "tsv"):
        raise ValueError(f"unknown report format {fmt!r}")
    if isinstance(obj, TestReport):
        obj = [obj]
    if isinstance(obj, PowerStudyResult):
        columns, rows = _study_rows(obj, timing)
        if fmt == "tsv":
            return _tsv(columns, rows)
        payload = {"study": obj.name, "fingerprint": obj.fingerprint, "cells": [dict(zip(columns, row)) for row in rows]}
    elif _is_table1(obj):
        if fmt == "tsv":
            return _tsv(*_table1_rows(obj))
        payload = [asdict(row) for row in obj]
    elif isinstance(obj, (list, tuple)) and all(isinstance(item, TestReport) for item in obj):
        dumped = [_report_dict(item, timing) for item in obj]
        if fmt == "tsv":
            columns = list(dumped[0]) if dumped else []
            return _tsv(columns, [[item[c] for c in columns] for item in dumped])
        payload = dumped[0] if len(dumped) == 1 else dumped
    elif isinstance(obj, dict):
        if fmt == "tsv":
            raise ValueError("only tabular results can be written as tsv")
        payload = obj
    else:
        raise TypeError(f"cannot report {type(obj).__name__}")
    return json.dumps(payload, indent=2) + "\n"


def _sanitize_pdf_text(value):
    if value is None:
        return ""
    if not isinstance(value, str):
        value = str(value)
    return value.encode("latin-1", "replace").decode("latin-1")


def _format_cell(value):
    if isinstance(value, float):
        return f"{value:.4f}"
    return _sanitize_pdf_text(value)


def _write_table_pdf(title, subtitle, columns, rows, output_path):
    if FPDF is None:
        raise MissingDependency("Missing dependency: install fpdf2 to write PDF output.")
    output_dir = os.path.dirname(output_path)
    if output_dir:
        os.makedirs(output_dir, exist_ok=True)
    pdf = FPDF(orientation="L")
    pdf.set_auto_page_break(auto=True, margin=15)
    pdf.add_page()
    pdf.set_font("Times", "B", 16)
    pdf.cell(0, 10, _sanitize_pdf_text(title), new_x="LMARGIN", new_y="NEXT")
    pdf.set_font("Times", size=10)
    pdf.cell(0, 6, _sanitize_pdf_text(subtitle), new_x="LMARGIN", new_y="NEXT")
    pdf.ln(4)

    width = (pdf.w - pdf.l_margin - pdf.r_margin) / max(len(columns), 1)
    pdf.set_font("Times", "B", 9)
    for column in columns:
        pdf.cell(width, 7, _sanitize_pdf_text(column), border=1, align="C")
    pdf.ln()
    pdf.set_font("Times", size=9)
    for row in rows:
        for value in row:
            pdf.cell(width, 6, _format_cell(value), border=1, align="C")
        pdf.ln()
    pdf.output(output_path)


def write_study_pdf(result: PowerStudyResult, output_path: str):
    columns, rows = _study_rows(result, timing=False)
    subtitle = f"Estimated rejection rates, study fingerprint {result.fingerprint}"
    _write_table_pdf(f"Power study: {result.name}", subtitle, columns, rows, output_path)


def write_table1_pdf(rows, output_path: str, tau: float = 0.75):
    columns, values = _table1_rows(rows)
    subtitle = f"Two-point limit, tau = {tau:g}: limit quantiles and KS rejection probabilities"
    _write_table_pdf("Critical values and error probabilities", subtitle, columns, values, output_path)
