"""JSON models and ``t,u,y`` CSV signals."""

from __future__ import annotations

import csv
import io
import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .systems import FractionalTf, RationalTf

__all__ = ["system_to_dict", "system_from_dict", "dump_system", "load_system", "Signals", "write_signals_csv", "read_signals_csv", "CsvFormatError"]


class CsvFormatError(ValueError):
    """Malformed signal CSV; the message names the offending line."""


def system_to_dict(sys: RationalTf | FractionalTf) -> dict:
    if isinstance(sys, RationalTf):
        return {
            "type": "rational",
            "num_terms": [[float(c), k] for k, c in enumerate(sys.num.coeffs) if c != 0][::-1] or [[0.0, 0]],
            "den_terms": [[float(c), k] for k, c in enumerate(sys.den.coeffs) if c != 0][::-1],
            "delay_s": sys.delay,
        }
    return {
        "type": "fractional",
        "num_terms": [[c, e] for c, e in sys.num_terms],
        "den_terms": [[c, e] for c, e in sys.den_terms],
        "delay_s": sys.delay,
    }


def system_from_dict(d: dict) -> RationalTf | FractionalTf:
    try:
        kind = d["type"]
        num = [(float(c), float(e)) for c, e in d["num_terms"]]
        den = [(float(c), float(e)) for c, e in d["den_terms"]]
        delay = float(d.get("delay_s", 0.0))
    except (KeyError, TypeError, ValueError) as exc:
        raise ValueError(f"malformed system description: {exc}") from exc
    frac = FractionalTf(num, den, delay)
    if kind == "fractional":
        return frac
    if kind == "rational":
        return frac.to_rational()
    raise ValueError(f"unknown system type {kind!r}")


def dump_system(sys, path) -> None:
    Path(path).write_text(json.dumps(system_to_dict(sys), indent=2) + "\n")


def load_system(path):
    return system_from_dict(json.loads(Path(path).read_text()))


@dataclass(frozen=True)
class Signals:
    t: np.ndarray
    u: np.ndarray
    y: np.ndarray


def write_signals_csv(t, u, y) -> str:
    buf = io.StringIO()
    buf.write("t,u,y\n")
    for row in zip(t, u, y):
        buf.write(",".join(repr(float(v)) for v in row) + "\n")
    return buf.getvalue()


def read_signals_csv(text: str) -> Signals:
    """Parse ``t,u,y`` CSV text. Lines starting with ``#`` are comments."""
    numbered = [(i, ln) for i, ln in enumerate(text.splitlines(), start=1) if not ln.startswith("#")]
    if not numbered or not numbered[0][1].strip():
        first = numbered[0][0] if numbered else 1
        raise CsvFormatError(f"line {first}: empty file, expected header 't,u,y'")
    head_no, head = numbered[0]
    header = [h.strip() for h in next(csv.reader([head]))]
    if header != ["t", "u", "y"]:
        raise CsvFormatError(f"line {head_no}: expected header 't,u,y', got {','.join(header)!r}")
    rows = []
    for lineno, line in numbered[1:]:
        row = next(csv.reader([line]), [])
        if not row or all(not c.strip() for c in row):
            continue
        if len(row) != 3:
            raise CsvFormatError(f"line {lineno}: expected 3 fields, got {len(row)}")
        try:
            vals = [float(c) for c in row]
        except ValueError as exc:
            raise CsvFormatError(f"line {lineno}: {exc}") from exc
        if not all(np.isfinite(vals)):
            raise CsvFormatError(f"line {lineno}: non-finite value")
        rows.append(vals)
    if not rows:
        raise CsvFormatError("line 2: no data rows")
    arr = np.array(rows)
    return Signals(arr[:, 0], arr[:, 1], arr[:, 2])
