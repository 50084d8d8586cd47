"""Positive magnitudes carried as natural logarithms, and bound reports built on them."""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import total_ordering
from typing import Any

import numpy as np

LN10 = math.log(10.0)


@total_ordering
@dataclass(frozen=True)
class LogNumber:
    """A positive real x stored as ln(x); products add, sums use log-sum-exp."""

    ln_value: float

    @classmethod
    def from_value(cls, x: float | int) -> "LogNumber":
        if x <= 0:
            raise ValueError(f"LogNumber needs a positive value, got {x}")
        if isinstance(x, int):
            # exact ints can exceed the float range
            return cls(_ln_int(x))
        return cls(math.log(x))

    def __mul__(self, other: "LogNumber") -> "LogNumber":
        return LogNumber(self.ln_value + other.ln_value)

    def __truediv__(self, other: "LogNumber") -> "LogNumber":
        return LogNumber(self.ln_value - other.ln_value)

    def __add__(self, other: "LogNumber") -> "LogNumber":
        return LogNumber(float(np.logaddexp(self.ln_value, other.ln_value)))

    def __pow__(self, k: float) -> "LogNumber":
        return LogNumber(self.ln_value * k)

    def __lt__(self, other: "LogNumber") -> bool:
        return self.ln_value < other.ln_value

    @property
    def log10(self) -> float:
        return self.ln_value / LN10

    def value(self) -> float:
        """The plain float (inf when it overflows)."""
        try:
            return math.exp(self.ln_value)
        except OverflowError:
            return math.inf

    def sci(self, digits: int = 4) -> str:
        return sci_from_ln(self.ln_value, digits)

    def __str__(self) -> str:
        return self.sci()


def _ln_int(x: int) -> float:
    bits = x.bit_length()
    if bits < 1000:
        return math.log(x)
    shift = bits - 60
    return math.log(x >> shift) + shift * math.log(2.0)


def ln_of_int(x: int) -> float:
    if x <= 0:
        raise ValueError("need a positive integer")
    return _ln_int(x)


def sci_from_ln(ln_value: float, digits: int = 4) -> str:
    """Decimal scientific rendering of exp(ln_value), e.g. ``3.140e+23``."""
    if math.isnan(ln_value):
        return "nan"
    if math.isinf(ln_value):
        return "inf" if ln_value > 0 else "0"
    log10 = ln_value / LN10
    exp10 = math.floor(log10)
    mant = 10.0 ** (log10 - exp10)
    mant = round(mant, digits - 1)
    if mant >= 10.0:
        mant /= 10.0
        exp10 += 1
    return f"{mant:.{digits - 1}f}e{exp10:+03d}"


def sci_from_int(x: int, digits: int = 4) -> str:
    """Scientific rendering of an exact integer, rounded from its decimal digits."""
    if x == 0:
        return "0"
    s = str(abs(x))
    exp10 = len(s) - 1
    head = int(s[:digits]) if len(s) >= digits else int(s.ljust(digits, "0"))
    if len(s) > digits and int(s[digits]) >= 5:
        head += 1
    if head >= 10**digits:
        head //= 10
        exp10 += 1
    hs = str(head)
    sign = "-" if x < 0 else ""
    return f"{sign}{hs[0]}.{hs[1:]}e{exp10:+03d}"


@dataclass
class BoundReport:
    """One upper bound on |P ∩ Z^n|, with the parameters that produced it."""

    method: str
    bound: LogNumber
    params: dict[str, Any] = field(default_factory=dict)
    notes: list[str] = field(default_factory=list)

    @property
    def ln_bound(self) -> float:
        return self.bound.ln_value

    def to_dict(self) -> dict:
        return {
            "method": self.method,
            "ln_bound": self.bound.ln_value,
            "bound_sci": self.bound.sci(),
            "params": _jsonable(self.params),
            "notes": list(self.notes),
        }


def _jsonable(obj: Any) -> Any:
    if isinstance(obj, LogNumber):
        return {"ln": obj.ln_value, "sci": obj.sci()}
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _jsonable(obj.tolist())
    if isinstance(obj, np.integer):
        return int(obj)
    if isinstance(obj, np.floating):
        return float(obj)
    return obj
