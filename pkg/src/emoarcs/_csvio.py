"""Small helpers shared by every on-disk format: `# k=v,...` headers and float text."""
from __future__ import annotations

import csv
import io
import math
from pathlib import Path

from .errors import ParseError


def fmt(x) -> str:
    """Shortest text that parses back to the same float."""
    x = float(x)
    if x == 0.0:
        return "0.0"  # drop the sign of -0.0 so output bytes do not depend on it
    return repr(x)


def header_line(items: dict) -> str:
    parts = []
    for key, value in items.items():
        if isinstance(value, bool):
            value = "true" if value else "false"
        elif value is None:
            value = "none"
        elif isinstance(value, float):
            value = fmt(value)
        parts.append(f"{key}={value}")
    return "# " + ",".join(parts) + "\n"


def parse_header(line: str) -> dict:
    if not line.startswith("#"):
        raise ParseError(f"expected '# key=value,...' header, got {line[:40]!r}")
    body = line[1:].strip()
    out = {}
    if not body:
        return out
    for part in body.split(","):
        if "=" not in part:
            raise ParseError(f"malformed header item {part!r}")
        key, value = part.split("=", 1)
        out[key.strip()] = value.strip()
    return out


def parse_float(text: str, where: str) -> float:
    try:
        return float(text)
    except ValueError:
        raise ParseError(f"{where}: not a number: {text!r}") from None


def parse_bool(text: str) -> bool:
    low = text.lower()
    if low in ("true", "1", "yes"):
        return True
    if low in ("false", "0", "no"):
        return False
    raise ParseError(f"not a boolean: {text!r}")


def read_text(path) -> str:
    path = Path(path)
    try:
        return path.read_text()
    except FileNotFoundError:
        raise
    except (OSError, UnicodeDecodeError) as exc:
        raise ParseError(f"{path}: {exc}") from exc


def csv_rows(text: str):
    """Rows of a CSV body, skipping blank lines and `#` comment lines."""
    lines = [ln for ln in text.splitlines() if ln.strip() and not ln.lstrip().startswith("#")]
    return list(csv.reader(io.StringIO("\n".join(lines))))


def write_csv(path, header: dict | None, columns: list[str] | None, rows) -> None:
    buf = io.StringIO()
    if header is not None:
        buf.write(header_line(header))
    writer = csv.writer(buf, lineterminator="\n")
    if columns is not None:
        writer.writerow(columns)
    for row in rows:
        writer.writerow(row)
    Path(path).write_text(buf.getvalue())


def is_finite(x: float) -> bool:
    return math.isfinite(x)
