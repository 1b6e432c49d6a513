from __future__ import annotations

from datetime import datetime
from typing import Optional

from sqlmodel import Field, SQLModel

VERSION = "0.3.0"


class TestReport(SQLModel):
    __test__ = False

    statistic: str
    observed: float
    critical_value: float
    p_value: float = Field(gt=0, le=1)
    reject: bool
    m: int = Field(ge=1)
    n: int = Field(ge=1)
    alpha: float = Field(gt=0, lt=0.5)
    resamples: int = Field(ge=1)
    scheme: str
    seed: int = Field(ge=0)
    version: str = VERSION
    wall_time: Optional[float] = None


class StudyCellRecord(SQLModel, table=True):
    id: Optional[int] = Field(default=None, primary_key=True)
    study: str = Field(index=True)
    f: str
    g: str
    m: int
    n: int
    statistic: str
    rejections: int
    replications: int
    rate: float
    std_error: float
    alpha: float
    resamples: int
    scheme: str
    seed: int
    wall_time: Optional[float] = None
    created_at: Optional[datetime] = None
