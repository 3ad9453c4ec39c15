"""CSV tables with a mandatory header row (RFC 4180 quoting, LF output)."""
from __future__ import annotations

import csv
import io

from ..errors import CsvError


def read_csv(raw: bytes | str, expected_header: list[str], source: str | None = None) -> list[tuple[int, list[str]]]:
    """Rows as ``(line_number, fields)``; the header must match exactly."""
    if isinstance(raw, bytes):
        try:
            text = raw.decode("utf-8")
        except UnicodeDecodeError as exc:
            raise CsvError("invalid UTF-8", raw[: exc.start].count(b"\n") + 1, source) from None
    else:
        text = raw
    reader = csv.reader(io.StringIO(text, newline=""), strict=True)
    rows = []
    try:
        header = next(reader, None)
        if header is None:
            raise CsvError("missing header row", 1, source)
        if header != expected_header:
            raise CsvError(f"expected header {','.join(expected_header)!r}, got {','.join(header)!r}", 1, source)
        for fields in reader:
            line = reader.line_num
            if not fields:
                continue
            if len(fields) != len(expected_header):
                raise CsvError(f"expected {len(expected_header)} fields, got {len(fields)}", line, source)
            rows.append((line, fields))
    except csv.Error as exc:
        raise CsvError(f"malformed CSV: {exc}", reader.line_num, source) from None
    return rows


def write_csv(header: list[str], rows) -> bytes:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(header)
    for row in rows:
        writer.writerow(row)
    return buf.getvalue().encode("utf-8")
