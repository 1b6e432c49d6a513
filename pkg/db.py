import logging
from datetime import datetime, timezone

from sqlmodel import Session, SQLModel, create_engine

import settings
from harness import PowerStudyResult
from models import StudyCellRecord

logger = logging.getLogger(__name__)


def get_engine(database_url=None):
    database_url = database_url or settings.require_env("DATABASE_URL")
    return create_engine(database_url, echo=False)


def init_db(engine):
    SQLModel.metadata.create_all(engine)


def save_study(engine, result: PowerStudyResult) -> int:
    stamp = datetime.now(timezone.utc)
    rows = [StudyCellRecord(**row.model_dump(exclude={"id", "created_at"}), created_at=stamp) for row in result.rows]
    with Session(engine) as session:
        session.add_all(rows)
        session.commit()
    logger.info("Saved %s row(s) of study %s", len(rows), result.name)
    return len(rows)
