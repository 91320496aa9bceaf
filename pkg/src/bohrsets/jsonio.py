"""Serialization helpers: rationals as "p/q", unbounded integers as decimal strings.

All file formats in this package are UTF-8 JSON / JSONL built from these
primitives.  Decimal conversion of very large integers is required by the
manifest format, so the interpreter's int->str guard is raised once here.
"""

from __future__ import annotations

import hashlib
import json
import sys
from fractions import Fraction

# Stage constants reach ~10^6 digits on the paper track.
if hasattr(sys, "set_int_max_str_digits"):
    sys.set_int_max_str_digits(40_000_000)


def frac_str(x: Fraction | int) -> str:
    """Format a rational as "p/q" (always with the slash)."""
    f = Fraction(x)
    return f"{f.numerator}/{f.denominator}"


def parse_frac(s: str) -> Fraction:
    """Parse "p/q" (or a bare integer string) into an exact Fraction."""
    return Fraction(s.strip())


def int_str(n: int) -> str:
    return str(int(n))


def parse_int(s: str) -> int:
    return int(s.strip())


def canonical_json(obj) -> str:
    """Deterministic JSON encoding used for digests and on-disk files."""
    return json.dumps(obj, sort_keys=True, separators=(",", ":"))


def digest(obj) -> str:
    """SHA-256 of the canonical JSON encoding."""
    return hashlib.sha256(canonical_json(obj).encode("utf-8")).hexdigest()


def dump_json(path, obj) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(obj, fh, sort_keys=True, indent=1)
        fh.write("\n")


def load_json(path):
    with open(path, "r", encoding="utf-8") as fh:
        return json.load(fh)


def dump_jsonl(path, rows) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for row in rows:
            fh.write(canonical_json(row))
            fh.write("\n")
