import json

import pytest

from harness import PowerStudyResult
from limit_analytics import Table1Row
from models import StudyCellRecord, TestReport
from report import write_report, write_study_pdf, write_table1_pdf


def _report(statistic="ks", wall_time=0.25):
    return TestReport(
        statistic=statistic,
        observed=0.41,
        critical_value=0.63,
        p_value=0.2,
        reject=False,
        m=30,
        n=50,
        alpha=0.05,
        resamples=999,
        scheme="switched",
        seed=7,
        wall_time=wall_time,
    )


def _study():
    rows = [
        StudyCellRecord(
            study="demo",
            f="exp(1)",
            g="exp(1)",
            m=50,
            n=50,
            statistic=kind,
            rejections=3,
            replications=40,
            rate=0.075,
            std_error=0.0416,
            alpha=0.05,
            resamples=200,
            scheme="switched",
            seed=1,
            wall_time=2.0,
        )
        for kind in ("ks", "cvm")
    ]
    return PowerStudyResult(name="demo", fingerprint="0123456789abcdef", rows=rows)


def _table1():
    return [Table1Row(0.05, 1.30041234, 1.0202, 0.05, 0.0984)]


def test_single_report_json():
    payload = json.loads(write_report(_report()))
    assert payload["statistic"] == "ks"
    assert payload["reject"] is False
    assert payload["wall_time"] == 0.25
    assert payload["version"]


def test_several_reports_without_timing():
    payload = json.loads(write_report([_report("ks"), _report("cvm", 9.0)], timing=False))
    assert [item["statistic"] for item in payload] == ["ks", "cvm"]
    assert all("wall_time" not in item for item in payload)


def test_reports_as_tsv():
    lines = write_report([_report("ks"), _report("cvm")], "tsv").splitlines()
    assert lines[0].split("\t")[:3] == ["statistic", "observed", "critical_value"]
    assert len(lines) == 3


def test_study_tsv():
    lines = write_report(_study(), "tsv", timing=False).splitlines()
    assert lines[0].split("\t") == [
        "f", "g", "m", "n", "statistic", "rejections", "replications",
        "rate", "std_error", "alpha", "resamples", "scheme", "seed",
    ]
    assert lines[1].split("\t")[:8] == ["exp(1)", "exp(1)", "50", "50", "ks", "3", "40", "0.075"]
    assert len(lines) == 3


def test_study_json():
    payload = json.loads(write_report(_study(), "json"))
    assert payload["study"] == "demo"
    assert payload["fingerprint"] == "0123456789abcdef"
    assert [cell["statistic"] for cell in payload["cells"]] == ["ks", "cvm"]
    assert payload["cells"][0]["wall_time"] == 2.0


def test_table1_tsv_is_rounded():
    lines = write_report(_table1(), "tsv").splitlines()
    assert lines[0] == "alpha\tc_switch\tc_prop\tp_switch\tp_prop"
    assert lines[1].split("\t")[1] == "1.300412"


def test_table1_json():
    payload = json.loads(write_report(_table1(), "json"))
    assert payload[0]["c_prop"] == 1.0202


def test_dict_is_json_only():
    assert json.loads(write_report({"class": "null"})) == {"class": "null"}
    with pytest.raises(ValueError):
        write_report({"class": "null"}, "tsv")


def test_unknown_format_and_object():
    with pytest.raises(ValueError):
        write_report(_report(), "xml")
    with pytest.raises(TypeError):
        write_report(42)


def test_pdf_output(tmp_path):
    pytest.importorskip("fpdf")
    study_path = tmp_path / "out" / "study.pdf"
    table_path = tmp_path / "table1.pdf"
    write_study_pdf(_study(), str(study_path))
    write_table1_pdf(_table1(), str(table_path))
    assert study_path.read_bytes().startswith(b"%PDF")
    assert table_path.read_bytes().startswith(b"%PDF")
