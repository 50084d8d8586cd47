"""Gaussian-type bound e^H (C p^{-m/2} + C'^p) over a partition of columns into bases.

Column indices are 0-based.
"""
from __future__ import annotations

import math
from collections import deque
from dataclasses import dataclass, field

import numpy as np

from .lognum import BoundReport, LogNumber
from .maxent import MaxEntSolution
from .model import RANK_RTOL, PolytopeSpec, SpecError

GAMMA_GRID = np.geomspace(1e-3, 32.0, 64)
GAMMA_RTOL = 1e-4
INV_PHI = (math.sqrt(5.0) - 1.0) / 2.0
# reports list block contents only up to this many indices
MAX_LISTED = 256


@dataclass(frozen=True)
class BasisPartition:
    """Disjoint blocks, each an ordered basis, plus the columns left out."""

    blocks: tuple[tuple[int, ...], ...]
    dropped: tuple[int, ...]
    m: int
    n: int
    integral_A: bool = True
    hypothesis_ok: bool = True

    @property
    def p(self) -> int:
        return len(self.blocks)

    def permuted(self, perm) -> "BasisPartition":
        return BasisPartition(
            tuple(self.blocks[i] for i in perm), self.dropped, self.m, self.n,
            self.integral_A, self.hypothesis_ok,
        )


def _is_independent(A: np.ndarray, cols) -> bool:
    if not cols:
        return True
    M = A[:, list(cols)]
    s = np.linalg.svd(M, compute_uv=False)
    scale = float(np.linalg.norm(M, axis=0).max())
    return bool(s[-1] > RANK_RTOL * scale)


def _circuit(A: np.ndarray, cols: list[int], y: int) -> list[int] | None:
    """Members of ``cols`` in the unique circuit of cols + y, or None if cols + y is independent."""
    if len(cols) == A.shape[0] or not _is_independent(A, cols + [y]):
        c, *_ = np.linalg.lstsq(A[:, cols], A[:, y], rcond=None)
        tol = RANK_RTOL * max(1.0, float(np.abs(c).max()))
        return [cols[i] for i in np.flatnonzero(np.abs(c) > tol)]
    return None


def _partition_into(A: np.ndarray, order: list[int], p: int) -> list[list[int]]:
    """Matroid partition: grow p independent sets by shortest augmenting paths."""
    sets: list[list[int]] = [[] for _ in range(p)]
    where: dict[int, int] = {}
    for s in order:
        # BFS over the exchange graph; y -> x via set k means y enters k, x leaves k
        parent: dict[int, tuple[int, int] | None] = {s: None}
        queue = deque([s])
        found = None
        while queue and found is None:
            y = queue.popleft()
            for k in range(p):
                if where.get(y) == k:
                    continue
                circ = _circuit(A, sets[k], y)
                if circ is None:
                    found = (y, k)
                    break
                for x in circ:
                    if x not in parent:
                        parent[x] = (y, k)
                        queue.append(x)
        if found is None:
            continue
        cur, target = found
        # walk back from the sink: cur enters target, its predecessor takes cur's old slot
        while True:
            old = where.get(cur)
            if old is not None:
                sets[old].remove(cur)
            sets[target].append(cur)
            where[cur] = target
            link = parent[cur]
            if link is None:
                break
            cur, target = link
    return sets


def partition_into_bases(spec: PolytopeSpec, alpha: np.ndarray | None = None) -> BasisPartition:
    """Largest number p of pairwise disjoint bases; remaining columns are dropped.

    Columns are inserted by decreasing ``alpha`` (index order when omitted),
    so low-alpha columns are the ones left out when not all fit.
    """
    A = spec.A_float
    m, n = spec.m, spec.n
    if alpha is None:
        order = list(range(n))
    else:
        alpha = np.asarray(alpha, dtype=float)
        order = [int(j) for j in np.lexsort((np.arange(n), -alpha))]
    nonzero = [j for j in order if np.any(A[:, j])]
    if m == 1:
        blocks = [[j] for j in nonzero]
    else:
        blocks = []
        for p in range(len(nonzero) // m, 0, -1):
            sets = _partition_into(A, nonzero, p)
            if all(len(s) == m for s in sets):
                blocks = sets
                break
        if not blocks:
            raise SpecError("rank(A) < m: no basis exists")
    used = {j for blk in blocks for j in blk}
    key = (lambda j: (-alpha[j], j)) if alpha is not None else (lambda j: j)
    blocks = sorted((tuple(sorted(blk, key=key)) for blk in blocks), key=lambda blk: min(blk))
    dropped = tuple(j for j in range(n) if j not in used)
    hyp = bool(np.all(A.T @ spec.b_float > 0))
    return BasisPartition(tuple(blocks), dropped, m, n, spec.integral_A, hyp)


@dataclass
class Thm2Constants:
    gamma: float
    alpha: np.ndarray
    alpha_vee: np.ndarray
    q_vee: np.ndarray
    c: np.ndarray
    C: LogNumber
    C_prime: float
    p: int
    ln_C_prime: float = field(default=math.nan)

    def to_dict(self) -> dict:
        return {
            "gamma": self.gamma,
            "alpha_vee": self.alpha_vee,
            "q_vee": self.q_vee,
            "c": self.c,
            "C": self.C,
            "C_prime": self.C_prime,
            "p": self.p,
        }


def c_branches(alpha_vee, gamma: float) -> tuple[np.ndarray, np.ndarray]:
    """The two candidates for c_i; c_i is their maximum."""
    a = np.asarray(alpha_vee, dtype=float)
    # 1 - cos x = 2 sin^2(x/2) avoids cancellation for small x
    one_minus_cos = 2.0 * np.sin(gamma / (2.0 * np.sqrt(a))) ** 2
    first = np.log1p(a * one_minus_cos) / gamma**2
    second = np.log1p(2.0 * a) / (a * math.pi**2)
    return first, second


def _alphas(q: np.ndarray) -> np.ndarray:
    return 2.0 * q / (1.0 - q) ** 2


def _vee(values: np.ndarray, part: BasisPartition, alpha: np.ndarray) -> np.ndarray:
    # i-th entry: min over blocks of the block's i-th value, blocks sorted by alpha descending
    rows = []
    for blk in part.blocks:
        srt = sorted(blk, key=lambda j: (-alpha[j], j))
        rows.append(values[srt])
    return np.min(np.array(rows), axis=0)


def _vee_arrays(sol: MaxEntSolution, part: BasisPartition):
    q = np.asarray(sol.q, dtype=float)
    alpha = _alphas(q)
    return alpha, _vee(alpha, part, alpha), _vee(q, part, alpha)


def _constants(vees, p: int, gamma: float) -> Thm2Constants:
    alpha, a_vee, q_vee = vees
    first, second = c_branches(a_vee, gamma)
    c = np.maximum(first, second)
    ln_C = -0.5 * float(np.sum(np.log(2.0 * math.pi * c * a_vee)))
    ln_Cp = float(np.max(-0.5 * gamma**2 * c))
    return Thm2Constants(float(gamma), alpha, a_vee, q_vee, c, LogNumber(ln_C), math.exp(ln_Cp), p, ln_Cp)


def _check(part: BasisPartition, gamma: float) -> None:
    if not part.integral_A:
        raise SpecError("the Gaussian bound needs an integer matrix A")
    if not gamma > 0:
        raise ValueError("gamma must be positive")
    if part.p < 1:
        raise ValueError("partition has no blocks")


def thm2_constants(sol: MaxEntSolution, part: BasisPartition, gamma: float) -> Thm2Constants:
    _check(part, gamma)
    return _constants(_vee_arrays(sol, part), part.p, gamma)


def ln_bound_thm2(H: float, consts: Thm2Constants, m: int) -> float:
    main = consts.C.ln_value - 0.5 * m * math.log(consts.p)
    tail = consts.p * consts.ln_C_prime
    return H + float(np.logaddexp(main, tail))


def bound_thm2(sol: MaxEntSolution, part: BasisPartition, gamma: float) -> BoundReport:
    consts = thm2_constants(sol, part, gamma)
    ln_b = ln_bound_thm2(sol.entropy, consts, part.m)
    notes = ["within-block order is alpha-descending (heuristic)"]
    if part.dropped:
        notes.append(f"{len(part.dropped)} column(s) dropped from the partition: {list(part.dropped)}")
    if part.p == 1:
        notes.append("p = 1: only one block, so this bound is weak")
    if not part.hypothesis_ok:
        notes.append("warning: some <a_j, b> <= 0, outside the stated hypotheses")
    params = consts.to_dict()
    params["dropped"] = list(part.dropped)
    if part.p * part.m <= MAX_LISTED:
        params["blocks"] = [list(b) for b in part.blocks]
    return BoundReport("thm2", LogNumber(ln_b), params, notes)


def optimize_gamma(sol: MaxEntSolution, part: BasisPartition) -> tuple[float, BoundReport]:
    """Grid search over gamma, then golden-section refinement around the best grid point."""

    _check(part, 1.0)
    vees = _vee_arrays(sol, part)

    def f(g: float) -> float:
        return ln_bound_thm2(sol.entropy, _constants(vees, part.p, g), part.m)

    vals = [f(float(g)) for g in GAMMA_GRID]
    i = int(np.argmin(vals))  # first minimum, so ties go to the smaller gamma
    lo = math.log(GAMMA_GRID[max(i - 1, 0)])
    hi = math.log(GAMMA_GRID[min(i + 1, len(GAMMA_GRID) - 1)])
    best_g, best_v = float(GAMMA_GRID[i]), vals[i]
    x1 = hi - INV_PHI * (hi - lo)
    x2 = lo + INV_PHI * (hi - lo)
    f1, f2 = f(math.exp(x1)), f(math.exp(x2))
    while math.expm1(hi - lo) > GAMMA_RTOL:
        if f1 <= f2:
            hi, x2, f2 = x2, x1, f1
            x1 = hi - INV_PHI * (hi - lo)
            f1 = f(math.exp(x1))
        else:
            lo, x1, f1 = x1, x2, f2
            x2 = lo + INV_PHI * (hi - lo)
            f2 = f(math.exp(x2))
    for x, v in sorted([(x1, f1), (x2, f2)]):
        if v < best_v:
            best_g, best_v = math.exp(x), v
    report = bound_thm2(sol, part, best_g)
    report.params["gamma_search"] = "grid+golden"
    return best_g, report


def thm2b_closed_forms(q_vee, gamma: float) -> tuple[LogNumber, float]:
    """Closed-form upper bounds on C and C' (in that order)."""
    q = np.atleast_1d(np.asarray(q_vee, dtype=float))
    if np.any((q <= 0) | (q >= 1)):
        raise ValueError("q_vee entries must lie in (0, 1)")
    if not gamma > 0:
        raise ValueError("gamma must be positive")
    m = q.shape[0]
    L = math.log1p(2.0 * gamma**2 / math.pi**2)
    ln_coef = math.log(gamma) - math.log(2.0) - 0.5 * math.log(math.pi) - 0.5 * math.log(L)
    ln_C = m * ln_coef + float(np.sum(np.log1p(-q) - 0.5 * np.log(q)))
    return LogNumber(ln_C), math.exp(-0.5 * L)


__all__ = [
    "BasisPartition", "Thm2Constants", "partition_into_bases", "c_branches", "thm2_constants",
    "ln_bound_thm2", "bound_thm2", "optimize_gamma", "thm2b_closed_forms",
]
