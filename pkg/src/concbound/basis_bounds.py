"""Bounds from a single best basis and from an entropy-balanced cover by bases.

Column indices are 0-based throughout.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from .lognum import BoundReport, LogNumber
from .maxent import MaxEntSolution, entropy_inverse
from .model import RANK_RTOL, PolytopeSpec

# reports list block contents only up to this many indices
MAX_LISTED = 256


class BasisError(ValueError):
    """No basis of the requested kind exists."""


class _Span:
    """Orthonormal basis of the span of accepted columns, grown one column at a time."""

    def __init__(self, m: int, tol: float = RANK_RTOL):
        self.Q = np.zeros((m, 0))
        self.tol = tol

    def residual(self, a: np.ndarray) -> np.ndarray:
        r = a - self.Q @ (self.Q.T @ a)
        # second pass keeps the basis orthogonal to working precision
        return r - self.Q @ (self.Q.T @ r)

    def try_add(self, a: np.ndarray) -> bool:
        norm = float(np.linalg.norm(a))
        if norm == 0.0:
            return False
        r = self.residual(a)
        rn = float(np.linalg.norm(r))
        if rn <= self.tol * norm:
            return False
        self.Q = np.column_stack([self.Q, r / rn])
        return True

    @property
    def dim(self) -> int:
        return self.Q.shape[1]


def greedy_independent(A: np.ndarray, candidates: Iterable[int], start: Sequence[int] = ()) -> list[int]:
    """Scan ``candidates`` in order, keeping each column that enlarges the span of those kept."""
    m = A.shape[0]
    span = _Span(m)
    chosen = []
    for j in start:
        if span.try_add(A[:, j]):
            chosen.append(j)
    for j in candidates:
        if span.dim == m:
            break
        if span.try_add(A[:, j]):
            chosen.append(int(j))
    return chosen


def best_basis(spec: PolytopeSpec, z: np.ndarray) -> tuple[tuple[int, ...], float]:
    """Basis maximizing sum ln(z_j + 1), by matroid greedy; ties go to the lower index.

    Returns the sorted indices and ln_factor = -sum ln(z_j + 1) over them.
    """
    z = np.asarray(z, dtype=float)
    if z.shape != (spec.n,):
        raise ValueError(f"z must have length {spec.n}")
    w = np.log1p(z)
    order = np.lexsort((np.arange(spec.n), -w))
    chosen = greedy_independent(spec.A_float, order)
    if len(chosen) < spec.m:
        raise BasisError(f"rank(A) = {len(chosen)} < m = {spec.m}")
    idx = tuple(sorted(chosen))
    return idx, -float(w[list(idx)].sum())


def bound_thm1(sol: MaxEntSolution, spec: PolytopeSpec) -> BoundReport:
    """e^H times prod over the best basis of 1/(z_j + 1)."""
    idx, ln_factor = best_basis(spec, sol.z)
    return BoundReport(
        "thm1",
        LogNumber(sol.entropy + ln_factor),
        {"basis": list(idx), "ln_factor": ln_factor, "entropy": sol.entropy},
    )


@dataclass(frozen=True)
class BasisCover:
    """Blocks of m column indices, each a basis, whose union is every column."""

    blocks: tuple[tuple[int, ...], ...]
    m: int
    n: int

    @property
    def p(self) -> int:
        return len(self.blocks)

    def check(self, spec: PolytopeSpec) -> None:
        covered = set()
        for blk in self.blocks:
            if len(blk) != self.m or len(greedy_independent(spec.A_float, blk)) != self.m:
                raise BasisError(f"block {list(blk)} is not a basis")
            covered.update(blk)
        missing = sorted(set(range(self.n)) - covered)
        if missing:
            raise BasisError(f"columns {missing} are not covered")


def cover_by_bases(spec: PolytopeSpec) -> BasisCover:
    """Heuristic cover: disjoint greedy bases first, then one block per leftover column.

    A leftover block starts from its column and is completed preferring other
    uncovered columns, then covered ones, each in index order.
    """
    A = spec.A_float
    m, n = spec.m, spec.n
    zero = [j for j in range(n) if not np.any(A[:, j])]
    if zero:
        raise BasisError(f"column {zero[0]} is zero and lies in no basis")
    if m == 1:
        return BasisCover(tuple((j,) for j in range(n)), m, n)
    uncovered = list(range(n))
    blocks = []
    while uncovered:
        blk = greedy_independent(A, uncovered)
        if len(blk) < m:
            break
        blocks.append(tuple(sorted(blk)))
        taken = set(blk)
        uncovered = [j for j in uncovered if j not in taken]
    covered = sorted(set(range(n)) - set(uncovered))
    while uncovered:
        a = uncovered[0]
        rest = [j for j in uncovered if j != a] + covered
        blk = greedy_independent(A, rest, start=[a])
        if len(blk) < m:
            raise BasisError(f"rank(A) < m = {m}; column {a} lies in no basis")
        blocks.append(tuple(sorted(blk)))
        taken = set(blk)
        uncovered = [j for j in uncovered if j not in taken]
        covered = sorted(set(covered) | taken)
    return BasisCover(tuple(blocks), m, n)


def bound_cor1(sol: MaxEntSolution, cover: BasisCover) -> BoundReport:
    """e^H / (zbar + 1)^m with zbar the geometric mean having entropy H/(p m)."""
    if cover.n != sol.n or cover.m != sol.m:
        raise ValueError("cover does not match the solution's dimensions")
    H = sol.entropy
    zbar = entropy_inverse(H / (cover.p * cover.m))
    ln_bound = H - cover.m * math.log1p(zbar)
    params = {"p": cover.p, "zbar": zbar, "entropy": H}
    if cover.p * cover.m <= MAX_LISTED:
        params["blocks"] = [list(b) for b in cover.blocks]
    return BoundReport(
        "cor1", LogNumber(ln_bound), params,
        ["cover is heuristic; a cover with fewer blocks gives a smaller bound"],
    )


__all__ = [
    "BasisError", "BasisCover", "LogNumber", "BoundReport", "greedy_independent",
    "best_basis", "bound_thm1", "cover_by_bases", "bound_cor1",
]
