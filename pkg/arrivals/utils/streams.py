"""
Readers and writers for event and report streams (NDJSON or CSV).
"""
import io
import json
import logging
from typing import Any, Dict, Iterable, Iterator, List, TextIO

import pandas as pd
from pydantic import ValidationError

from arrivals.exceptions import DomainError, OutOfOrderError
from arrivals.models import EventRecord

logger = logging.getLogger(__name__)

FORMATS = ("ndjson", "csv")
# at least 9 significant digits for timestamps and statistics
CSV_FLOAT_FORMAT = "%.12g"


def _check_format(fmt: str) -> str:
    fmt = fmt.lower()
    if fmt not in FORMATS:
        raise DomainError(f"unknown stream format '{fmt}', expected one of {FORMATS}")
    return fmt


def _parse_ndjson(handle: TextIO) -> Iterator[tuple]:
    for line_no, line in enumerate(handle, start=1):
        if not line.strip():
            continue
        try:
            yield line_no, json.loads(line)
        except json.JSONDecodeError as e:
            raise DomainError(f"line {line_no}: invalid JSON: {e}") from e


def _parse_csv(handle: TextIO) -> Iterator[tuple]:
    try:
        df = pd.read_csv(handle, dtype={"arm": str})
    except pd.errors.EmptyDataError:
        return
    missing = [col for col in ("ts", "arm") if col not in df.columns]
    if missing:
        raise DomainError(f"missing required columns: {missing}")
    for index, row in enumerate(df[["ts", "arm"]].itertuples(index=False)):
        # header is line 1
        yield index + 2, {"ts": row.ts, "arm": row.arm}


def read_events(handle: TextIO, fmt: str = "ndjson") -> Iterator[EventRecord]:
    """
    Yield validated event records in input order, failing on the first record
    whose timestamp precedes its predecessor.
    """
    fmt = _check_format(fmt)
    rows = _parse_ndjson(handle) if fmt == "ndjson" else _parse_csv(handle)
    last_ts = 0.0
    for line_no, raw in rows:
        try:
            record = EventRecord.model_validate(raw)
        except ValidationError as e:
            raise DomainError(f"line {line_no}: invalid event record {raw}: {e}") from e
        if record.ts < last_ts:
            raise OutOfOrderError(
                f"line {line_no}: timestamp {record.ts} precedes previous timestamp {last_ts}",
                record=raw,
                line=line_no,
            )
        last_ts = record.ts
        yield record


def _jsonable(value: Any) -> Any:
    if hasattr(value, "value") and not isinstance(value, (int, float, bool)):
        return value.value
    return value


def write_rows(rows: Iterable[Dict[str, Any]], fields: List[str], out: TextIO, fmt: str = "ndjson") -> int:
    """
    Write rows with a fixed column order. NDJSON is streamed row by row;
    CSV is written through a DataFrame once the rows are collected.
    """
    fmt = _check_format(fmt)
    count = 0
    if fmt == "ndjson":
        for row in rows:
            out.write(json.dumps({name: _jsonable(row.get(name)) for name in fields}) + "\n")
            count += 1
        out.flush()
        return count
    df = pd.DataFrame([{name: _jsonable(row.get(name)) for name in fields} for row in rows], columns=fields)
    buffer = io.StringIO()
    df.to_csv(buffer, index=False, float_format=CSV_FLOAT_FORMAT, lineterminator="\n")
    out.write(buffer.getvalue())
    out.flush()
    return len(df)
