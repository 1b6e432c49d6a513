import pytest
from sqlmodel import Session, select

import db
from harness import PowerStudyResult
from models import StudyCellRecord


def _result():
    rows = [
        StudyCellRecord(
            study="persisted",
            f="weib(2)",
            g="exp(1)",
            m=30,
            n=50,
            statistic=kind,
            rejections=1,
            replications=20,
            rate=0.05,
            std_error=0.0487,
            alpha=0.05,
            resamples=100,
            scheme="switched",
            seed=4,
        )
        for kind in ("ks", "cvm")
    ]
    return PowerStudyResult(name="persisted", fingerprint="feedfacefeedface", rows=rows)


def test_save_study_round_trip():
    engine = db.get_engine("sqlite://")
    db.init_db(engine)
    assert db.save_study(engine, _result()) == 2
    with Session(engine) as session:
        stored = session.exec(select(StudyCellRecord).where(StudyCellRecord.study == "persisted")).all()
    assert sorted(row.statistic for row in stored) == ["cvm", "ks"]
    assert all(row.id is not None and row.created_at is not None for row in stored)


def test_engine_needs_a_url(monkeypatch):
    monkeypatch.delenv("DATABASE_URL", raising=False)
    with pytest.raises(RuntimeError):
        db.get_engine()
