"""Reading loss samples from plain-text or delimited files and http(s) URLs."""
from __future__ import annotations

import logging
import re

import httpx

from empirical import Sample, SampleError, make_sample

logger = logging.getLogger(__name__)

FETCH_TIMEOUT = 10
_FIELD_SPLIT = re.compile(r"\s*,\s*|\s+")


class SampleParseError(SampleError):
    def __init__(self, source: str, line: int, detail: str):
        super().__init__(f"{source}, line {line}: {detail}")
        self.source = source
        self.line = line


def _is_url(source: str) -> bool:
    return source.startswith("http://") or source.startswith("https://")


def fetch_text(url: str, client: httpx.Client | None = None) -> str:
    if client is None:
        response = httpx.get(url, timeout=FETCH_TIMEOUT, follow_redirects=True)
    else:
        response = client.get(url, timeout=FETCH_TIMEOUT)
    response.raise_for_status()
    return response.text


def _fields(line: str) -> list:
    return [part for part in _FIELD_SPLIT.split(line.strip()) if part]


def parse_sample_text(text: str, column: int | None = None, source: str = "<input>") -> Sample:
    """One value per line, or the 1-based `column` of a comma/whitespace delimited table.

    Blank lines and `#` comments are skipped. With a column, a first data line
    whose field is not numeric is taken as a header.
    """
    if column is not None and column < 1:
        raise ValueError(f"column numbers start at 1, got {column}")
    values = []
    seen_data = False
    for number, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        fields = _fields(line)
        if column is None:
            if len(fields) != 1:
                raise SampleParseError(source, number, f"expected one value, found {len(fields)}; pass a column")
            token = fields[0]
        else:
            if len(fields) < column:
                raise SampleParseError(source, number, f"no column {column} (found {len(fields)} fields)")
            token = fields[column - 1]
        try:
            values.append(float(token))
        except ValueError:
            if column is not None and not seen_data:
                logger.debug("Treating line %s of %s as a header", number, source)
                seen_data = True
                continue
            raise SampleParseError(source, number, f"not a number: {token!r}") from None
        seen_data = True
    return make_sample(values)


def read_sample(path: str, column: int | None = None, client: httpx.Client | None = None) -> Sample:
    source = str(path)
    if _is_url(source):
        text = fetch_text(source, client)
    else:
        with open(source, "r", encoding="utf-8") as fh:
            text = fh.read()
    sample = parse_sample_text(text, column, source)
    logger.debug("Read %s values from %s", sample.size, source)
    return sample
