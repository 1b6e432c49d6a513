import json

import pytest
from sqlmodel import Session, create_engine, select

import cli
import streams
from cli import build_parser, cli_main
from models import StudyCellRecord


@pytest.fixture
def samples(tmp_path):
    x = tmp_path / "x.txt"
    y = tmp_path / "y.csv"
    x.write_text("# X losses\n0.5\n1.0\n1.5\n2.0\n0.25\n0.75\n", encoding="utf-8")
    y.write_text("id,loss\n1,0.1\n2,3.0\n3,0.4\n4,2.2\n5,1.1\n6,0.05\n7,1.9\n", encoding="utf-8")
    return str(x), str(y)


@pytest.fixture
def study_file(tmp_path):
    path = tmp_path / "study.json"
    path.write_text(
        json.dumps({"name": "cli", "pairs": [["exp(1)", "exp(1)"]], "sizes": [[8, 10]], "replications": 4, "resamples": 19, "seed": 0}),
        encoding="utf-8",
    )
    return str(path)


def _run(capsys, argv):
    code = cli_main(argv)
    captured = capsys.readouterr()
    return code, captured.out, captured.err


def test_test_command_is_reproducible(capsys, tmp_path, samples):
    x, y = samples
    y_single = tmp_path / "y.txt"
    y_single.write_text("0.1\n3.0\n0.4\n2.2\n1.1\n0.05\n1.9\n", encoding="utf-8")
    argv = ["test", "--x", x, "--y", str(y_single), "--resamples", "199", "--seed", "11", "--no-timing"]
    code, first, _ = _run(capsys, argv)
    assert code == 0
    reports = json.loads(first)
    assert [r["statistic"] for r in reports] == ["ks", "cvm"]
    assert all(r["m"] == 6 and r["n"] == 7 and r["resamples"] == 199 for r in reports)
    assert all("wall_time" not in r for r in reports)
    code, second, _ = _run(capsys, argv + ["--threads", "3"])
    assert code == 0
    assert second == first


def test_test_command_with_column(capsys, tmp_path, samples):
    x, y = samples
    x_csv = tmp_path / "x.csv"
    x_csv.write_text("id,loss\n1,0.5\n2,1.0\n3,2.5\n", encoding="utf-8")
    code, out, _ = _run(capsys, ["test", "--x", str(x_csv), "--y", y, "--column", "2", "--stat", "ks", "--resamples", "99"])
    assert code == 0
    report = json.loads(out)
    assert report["statistic"] == "ks"
    assert (report["m"], report["n"]) == (3, 7)
    assert 0 < report["p_value"] <= 1


def test_usage_errors_exit_with_one(capsys):
    assert cli_main([]) == 1
    assert cli_main(["bogus"]) == 1
    assert cli_main(["test", "--x", "a.txt"]) == 1
    assert cli_main(["test", "--x", "a", "--y", "b", "--alpha", "0.7"]) == 1
    assert cli_main(["power", "--preset", "table2"]) == 1
    assert "usage" in capsys.readouterr().err


def test_data_errors_exit_with_two(capsys, tmp_path, samples):
    x, _ = samples
    code, _, err = _run(capsys, ["test", "--x", x, "--y", str(tmp_path / "absent.txt")])
    assert code == 2
    assert err.startswith("icx test: error:")

    negative = tmp_path / "neg.txt"
    negative.write_text("1.0\n-0.5\n", encoding="utf-8")
    code, _, err = _run(capsys, ["test", "--x", x, "--y", str(negative)])
    assert code == 2
    assert "error" in err


def test_table1_command(capsys):
    code, out, _ = _run(capsys, ["table1"])
    assert code == 0
    lines = out.splitlines()
    assert lines[0] == "alpha\tc_switch\tc_prop\tp_switch\tp_prop"
    alpha, c_switch, c_prop, p_switch, p_prop = (float(v) for v in lines[2].split("\t"))
    assert alpha == 0.05
    assert c_switch == pytest.approx(1.3004, abs=5e-4)
    assert c_prop == pytest.approx(1.0202, abs=5e-4)
    assert p_switch == pytest.approx(0.0500, abs=5e-4)
    assert p_prop == pytest.approx(0.0984, abs=5e-4)


def test_table1_to_file_as_json(capsys, tmp_path):
    out_path = tmp_path / "table1.json"
    code, out, _ = _run(capsys, ["table1", "--alphas", "0.1", "--format", "json", "--out", str(out_path)])
    assert code == 0
    assert out == ""
    rows = json.loads(out_path.read_text(encoding="utf-8"))
    assert rows[0]["c_switch"] == pytest.approx(1.0134, abs=5e-4)


def test_classify_command(capsys):
    code, out, _ = _run(capsys, ["classify", "--f", "weib(2)", "--g", "exp(1)"])
    assert code == 0
    payload = json.loads(out)
    assert payload["class"] == "inside_s_empty"
    assert payload["icx_holds"] is True
    assert payload["S"]["intervals"] == []


def test_classify_alternative_has_no_equality_set(capsys):
    code, out, _ = _run(capsys, ["classify", "--f", "gamma(2)", "--g", "exp(1)"])
    assert code == 0
    payload = json.loads(out)
    assert payload["class"] == "alternative"
    assert "S" not in payload


def test_classify_rejects_bad_distribution(capsys):
    code, _, err = _run(capsys, ["classify", "--f", "lognormal(1)", "--g", "exp(1)"])
    assert code == 2
    assert "icx classify: error:" in err


def test_power_command(capsys, tmp_path, study_file):
    state = tmp_path / "state.json"
    out_path = tmp_path / "power.tsv"
    argv = ["power", "--config", study_file, "--seed", "5", "--state", str(state), "--no-timing", "--out", str(out_path)]
    assert cli_main(argv) == 0
    first = out_path.read_text(encoding="utf-8")
    lines = first.splitlines()
    assert lines[0].startswith("f\tg\tm\tn\tstatistic")
    assert [line.split("\t")[4] for line in lines[1:]] == ["ks", "cvm"]
    assert all(line.split("\t")[-1] == "5" for line in lines[1:])
    assert json.loads(state.read_text(encoding="utf-8"))["finished_cells"]
    assert cli_main(argv) == 0
    assert out_path.read_text(encoding="utf-8") == first


def test_power_command_persists_to_database(capsys, tmp_path, study_file, monkeypatch):
    url = f"sqlite:///{tmp_path / 'icx.db'}"
    monkeypatch.setenv("DATABASE_URL", url)
    code, out, _ = _run(capsys, ["power", "--config", study_file, "--seed", "1", "--db", "--format", "json"])
    assert code == 0
    assert json.loads(out)["study"] == "cli"
    with Session(create_engine(url)) as session:
        stored = session.exec(select(StudyCellRecord)).all()
    assert len(stored) == 2


def test_power_command_with_bad_config(capsys, tmp_path):
    path = tmp_path / "bad.json"
    path.write_text(json.dumps({"pairs": [["exp(1)", "exp(1)"]], "sizes": [[1, 1]], "seed": 0}), encoding="utf-8")
    code, _, err = _run(capsys, ["power", "--config", str(path), "--seed", "0"])
    assert code == 2
    assert "icx power: error:" in err


def test_seed_range_matches_the_streams():
    parser = build_parser()
    args = parser.parse_args(["test", "--x", "a", "--y", "b", "--seed", str(streams.SEED_LIMIT - 1)])
    assert args.seed == streams.SEED_LIMIT - 1
    assert cli_main(["test", "--x", "a", "--y", "b", "--seed", str(streams.SEED_LIMIT)]) == 1


def test_degenerate_tau_and_formats_are_usage_errors():
    assert cli_main(["table1", "--tau", "1"]) == 1
    assert cli_main(["table1", "--tau", "0"]) == 1
    assert cli_main(["table1", "--alphas", ","]) == 1
    assert cli_main(["classify", "--f", "exp(1)", "--g", "exp(1)", "--format", "tsv"]) == 1
    assert cli_main(["classify", "--f", "exp(1)", "--g", "exp(1)", "--tol", "-1"]) == 1


def test_missing_database_url_is_a_data_error(capsys, study_file, monkeypatch):
    monkeypatch.delenv("DATABASE_URL", raising=False)
    code, _, err = _run(capsys, ["power", "--config", study_file, "--seed", "1", "--db"])
    assert code == 2
    assert "DATABASE_URL is not set" in err


def test_unreadable_text_is_a_data_error(capsys, tmp_path, samples):
    x, _ = samples
    binary = tmp_path / "y.bin"
    binary.write_bytes(b"\xff\xfe\x00\x81")
    code, _, _ = _run(capsys, ["test", "--x", x, "--y", str(binary)])
    assert code == 2


def test_internal_errors_are_not_reported_as_data_errors(monkeypatch):
    def broken(*args, **kwargs):
        raise ValueError("bug")

    monkeypatch.setattr(cli, "table1_rows", broken)
    with pytest.raises(ValueError, match="bug"):
        cli_main(["table1"])
