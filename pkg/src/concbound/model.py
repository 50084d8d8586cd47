"""Polytope specifications {x >= 0, Ax = b}: construction, validation, JSON I/O."""
from __future__ import annotations

import json
from dataclasses import dataclass, field
from fractions import Fraction
from functools import cached_property
from typing import Any, Sequence

import numpy as np
import scipy.linalg

RANK_RTOL = 1e-9


class SpecError(ValueError):
    """Malformed or mathematically invalid polytope specification."""


def to_fraction(v: Any) -> Fraction:
    if isinstance(v, Fraction):
        return v
    if isinstance(v, bool):
        raise SpecError(f"boolean is not a valid matrix entry: {v!r}")
    if isinstance(v, int):
        return Fraction(v)
    if isinstance(v, float):
        if not np.isfinite(v):
            raise SpecError(f"non-finite entry: {v!r}")
        # repr gives the shortest decimal that round-trips, which is what the
        # user typed in the JSON document
        return Fraction(repr(v))
    if isinstance(v, str):
        try:
            return Fraction(v.strip())
        except (ValueError, ZeroDivisionError) as exc:
            raise SpecError(f"cannot parse entry {v!r} as a rational") from exc
    raise SpecError(f"unsupported entry type {type(v).__name__}")


def fraction_to_json(x: Fraction) -> int | str:
    return int(x) if x.denominator == 1 else f"{x.numerator}/{x.denominator}"


@dataclass(frozen=True)
class PolytopeSpec:
    """Constraint system of P = {x >= 0, Ax = b}, entries stored as exact rationals.

    Construction does not enforce the invariants (so that ``validate`` can report
    on broken systems); use :func:`make_spec`, the generators or :func:`load_spec`
    to get a checked instance.
    """

    A: tuple[tuple[Fraction, ...], ...]
    b: tuple[Fraction, ...]
    name: str = ""

    @property
    def m(self) -> int:
        return len(self.A)

    @property
    def n(self) -> int:
        return len(self.A[0]) if self.A else 0

    @cached_property
    def integral_A(self) -> bool:
        return all(x.denominator == 1 for row in self.A for x in row)

    @cached_property
    def integral_b(self) -> bool:
        return all(x.denominator == 1 for x in self.b)

    @cached_property
    def A_float(self) -> np.ndarray:
        arr = np.array([[float(x) for x in row] for row in self.A], dtype=float)
        arr.setflags(write=False)
        return arr

    @cached_property
    def b_float(self) -> np.ndarray:
        arr = np.array([float(x) for x in self.b], dtype=float)
        arr.setflags(write=False)
        return arr

    def A_int(self) -> np.ndarray:
        if not self.integral_A:
            raise SpecError("A has non-integer entries")
        return np.array([[int(x) for x in row] for row in self.A], dtype=np.int64)

    def b_int(self) -> np.ndarray:
        if not self.integral_b:
            raise SpecError("b has non-integer entries")
        return np.array([int(x) for x in self.b], dtype=np.int64)

    def column(self, j: int) -> np.ndarray:
        return self.A_float[:, j]

    def to_dict(self) -> dict:
        return {
            "name": self.name,
            "A": [[fraction_to_json(x) for x in row] for row in self.A],
            "b": [fraction_to_json(x) for x in self.b],
        }


@dataclass
class ValidationReport:
    rank_ok: bool
    rank_estimate: int
    column_norms: np.ndarray
    zero_columns: list[int]
    messages: list[str] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return self.rank_ok and not self.messages


def numeric_rank(M: np.ndarray, rtol: float = RANK_RTOL) -> int:
    """Rank by column-pivoted QR, threshold ``rtol`` times the largest column norm."""
    if M.size == 0:
        return 0
    norms = np.linalg.norm(M, axis=0)
    scale = norms.max()
    if scale == 0.0:
        return 0
    R = scipy.linalg.qr(M, mode="r", pivoting=True)[0]
    diag = np.abs(np.diag(R))
    return int(np.count_nonzero(diag > rtol * scale))


def validate(spec: PolytopeSpec) -> ValidationReport:
    """Report rank, zero columns and shape problems without raising."""
    msgs = []
    A = spec.A_float
    if A.ndim != 2 or A.shape[0] == 0:
        return ValidationReport(False, 0, np.zeros(0), [], ["empty constraint matrix"])
    norms = np.linalg.norm(A, axis=0)
    zero_cols = [int(j) for j in np.flatnonzero(norms == 0.0)]
    rank = numeric_rank(A)
    if len(spec.b) != spec.m:
        msgs.append(f"b has length {len(spec.b)} but A has {spec.m} rows")
    if spec.n <= spec.m:
        msgs.append(f"need n > m, got m={spec.m}, n={spec.n}")
    rank_ok = rank == spec.m
    if not rank_ok:
        msgs.append(f"rank(A)={rank} < m={spec.m}")
    return ValidationReport(rank_ok, rank, norms, zero_cols, msgs)


def make_spec(A: Sequence[Sequence[Any]], b: Sequence[Any], name: str = "") -> PolytopeSpec:
    """Build a spec from nested sequences and enforce n > m and full row rank."""
    if not A or not all(len(row) == len(A[0]) for row in A):
        raise SpecError("A must be a non-empty rectangular matrix")
    if len(A[0]) == 0:
        raise SpecError("A has no columns")
    spec = PolytopeSpec(
        tuple(tuple(to_fraction(x) for x in row) for row in A),
        tuple(to_fraction(x) for x in b),
        name,
    )
    if len(spec.b) != spec.m:
        raise SpecError(f"dimension mismatch: A has {spec.m} rows, b has {len(spec.b)} entries")
    if spec.n <= spec.m:
        raise SpecError(f"n <= m is not allowed (m={spec.m}, n={spec.n})")
    rank = numeric_rank(spec.A_float)
    if rank < spec.m:
        raise SpecError(f"rank deficient: rank(A)={rank} < m={spec.m}")
    return spec


def gen_simplex(n: int, r: Any) -> PolytopeSpec:
    """Dilated simplex {x >= 0, x_1 + ... + x_n = r}."""
    if int(n) != n or n < 2:
        raise SpecError(f"simplex needs n >= 2, got {n}")
    r = to_fraction(r)
    if r <= 0:
        raise SpecError(f"simplex needs r > 0, got {r}")
    return make_spec([[1] * n], [r], name=f"simplex(n={n}, r={r})")


def gen_transportation(R: Sequence[Any], C: Sequence[Any]) -> PolytopeSpec:
    """Transportation polytope of r x s tables with margins R, C.

    Cells are variables in row-major order; rows of A are the r row-sum
    equations followed by the first s-1 column-sum equations (the last one is
    implied and dropped).
    """
    R = [to_fraction(x) for x in R]
    C = [to_fraction(x) for x in C]
    r, s = len(R), len(C)
    if r < 2 or s < 2:
        raise SpecError(f"transportation polytope needs r, s >= 2, got {r}x{s}")
    if any(x < 0 for x in R + C):
        raise SpecError("margins must be nonnegative")
    if sum(R) != sum(C):
        raise SpecError(f"margin sums differ: sum(R)={sum(R)} != sum(C)={sum(C)}")
    A = [[0] * (r * s) for _ in range(r + s - 1)]
    for i in range(r):
        for k in range(s):
            j = i * s + k
            A[i][j] = 1
            if k < s - 1:
                A[r + k][j] = 1
    b = R + C[:-1]
    label = ",".join(str(x) for x in R) + " | " + ",".join(str(x) for x in C)
    return make_spec(A, b, name=f"transportation({label})")


def _from_generator(gen: dict) -> PolytopeSpec:
    kind = gen.get("kind")
    if kind == "simplex":
        return gen_simplex(gen["n"], gen["r"])
    if kind in ("transportation", "transport"):
        return gen_transportation(gen["R"], gen["C"])
    raise SpecError(f"unknown generator kind {kind!r}")


def spec_from_dict(doc: dict) -> PolytopeSpec:
    if not isinstance(doc, dict):
        raise SpecError("spec document must be a JSON object")
    if "generator" in doc:
        try:
            spec = _from_generator(doc["generator"])
        except KeyError as exc:
            raise SpecError(f"generator is missing field {exc}") from exc
        if doc.get("name"):
            spec = PolytopeSpec(spec.A, spec.b, doc["name"])
        return spec
    if "A" not in doc or "b" not in doc:
        raise SpecError("spec document needs either 'generator' or both 'A' and 'b'")
    A, b = doc["A"], doc["b"]
    if not isinstance(A, list) or not all(isinstance(row, list) for row in A):
        raise SpecError("'A' must be a list of rows")
    if not isinstance(b, list):
        raise SpecError("'b' must be a list")
    return make_spec(A, b, name=str(doc.get("name", "")))


def load_spec(source: str) -> PolytopeSpec:
    """Parse a JSON spec document (the text itself, not a path)."""
    try:
        doc = json.loads(source)
    except json.JSONDecodeError as exc:
        raise SpecError(f"malformed JSON: {exc}") from exc
    return spec_from_dict(doc)


def load_spec_file(path) -> PolytopeSpec:
    with open(path) as fh:
        return load_spec(fh.read())


def dump_spec(spec: PolytopeSpec) -> str:
    return json.dumps(spec.to_dict())
