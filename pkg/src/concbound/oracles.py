"""Ground-truth engines: exact counting, Monte Carlo, and concentration oracles."""
from __future__ import annotations

import itertools
import math
import time
from dataclasses import dataclass, field

import numpy as np
from sympy.ntheory import prevprime
from sympy.ntheory.modular import crt

from . import kernels
from .lognum import ln_of_int, sci_from_int, sci_from_ln
from .maxent import MaxEntSolution
from .model import PolytopeSpec, gen_transportation

DEFAULT_BUDGET = 500_000_000
DEFAULT_LAYER_CAP = 30_000_000
MODULUS_CEIL = 1 << 62
# per-axis grid sizes that keep conc_quadrature under a few seconds
DEFAULT_GRID = {1: 4096, 2: 512, 3: 64}


class OracleError(RuntimeError):
    """An oracle precondition failed or a resource limit was hit."""


class BudgetExceeded(OracleError):
    """The exact-count DP would exceed its state budget."""


@dataclass
class ExactCount:
    count: int
    states_visited: int
    elapsed: float
    method: str = "dp"

    @property
    def ln_count(self) -> float:
        return ln_of_int(self.count) if self.count > 0 else -math.inf

    def to_dict(self) -> dict:
        return {
            "count": str(self.count),
            "count_sci": sci_from_int(self.count),
            "states_visited": self.states_visited,
            "method": self.method,
        }


@dataclass
class McEstimate:
    trials: int
    hits: int
    ln_estimate: float
    ln_stderr: float
    seed: int
    ln_upper: float | None = None
    notes: list[str] = field(default_factory=list)

    @property
    def estimate(self) -> float:
        return math.exp(self.ln_estimate) if math.isfinite(self.ln_estimate) else 0.0

    def to_dict(self) -> dict:
        out = {
            "trials": self.trials,
            "hits": self.hits,
            "seed": self.seed,
            "ln_estimate": self.ln_estimate if math.isfinite(self.ln_estimate) else None,
            "estimate_sci": sci_from_ln(self.ln_estimate) if math.isfinite(self.ln_estimate) else None,
            "ln_stderr": self.ln_stderr if math.isfinite(self.ln_stderr) else None,
            "notes": list(self.notes),
        }
        if self.ln_upper is not None:
            out["ln_upper_95"] = self.ln_upper
        return out


# ---------------------------------------------------------------- exact DP

def _check_countable(spec: PolytopeSpec) -> tuple[np.ndarray, np.ndarray]:
    if not (spec.integral_A and spec.integral_b):
        raise OracleError("nonnegative A required: exact counting needs integer A and b")
    A = spec.A_int()
    b = spec.b_int()
    if np.any(A < 0):
        raise OracleError("nonnegative A required: mixed-sign matrices are not supported")
    if np.any(b < 0):
        raise OracleError("b must be nonnegative")
    zero = np.flatnonzero(~A.any(axis=0))
    if zero.size:
        raise OracleError(f"column {int(zero[0])} is zero, so the count is infinite")
    return A, b


def dp_order(A: np.ndarray, b: np.ndarray) -> list[int]:
    """Greedy variable order keeping few rows open (touched but unfinished).

    A row's residual only varies while it is open, so the reachable state set
    is bounded by the product of (b_i + 1) over open rows.
    """
    m, n = A.shape
    touches = A > 0
    remaining = touches.sum(axis=1)
    opened = np.zeros(m, dtype=bool)
    left = np.arange(n)
    logsize = np.log1p(b.astype(float))
    order = []
    while left.size:
        T = touches[:, left]
        closing = T & (remaining == 1)[:, None]
        still_open = (opened[:, None] | T) & ~closing
        score = np.round(logsize @ still_open, 9)
        # lexsort keys, last is primary: score, then more rows closed, then index
        pick = np.lexsort((left, -closing.sum(axis=0), score))[0]
        best = int(left[pick])
        order.append(best)
        left = np.delete(left, pick)
        rows = touches[:, best]
        opened |= rows
        remaining -= rows
    return order


def _moduli(k: int) -> list[int]:
    out = []
    p = MODULUS_CEIL
    while len(out) < k:
        p = prevprime(p)
        out.append(p)
    return out


def _advance_size(keys, kmax, d) -> int:
    """Exact number of states after an advance: states sharing a foot lie on one line."""
    feet, inv = np.unique(keys - kmax * d, return_inverse=True)
    longest = np.zeros(feet.shape[0], dtype=np.int64)
    np.maximum.at(longest, inv.ravel(), kmax)
    return int(longest.sum()) + feet.shape[0]


def _run_dp(A, b, order, counts0, mods, budget, layer_cap, kern):
    m, n = A.shape
    bases = (b + 1).astype(np.int64)
    strides = np.ones(m, dtype=np.int64)
    for i in range(1, m):
        strides[i] = strides[i - 1] * bases[i - 1]
    last_use = {}
    for pos, j in enumerate(order):
        for i in np.flatnonzero(A[:, j]):
            last_use[int(i)] = pos
    keys = np.array([int(b @ strides)], dtype=np.int64)
    counts = counts0
    log_scale = 0.0
    visited = 1
    for pos, j in enumerate(order):
        rows = np.flatnonzero(A[:, j])
        coefs = A[rows, j].astype(np.int64)
        d = int(coefs @ strides[rows])
        kmax = kern.dp_kmax(keys, strides[rows], bases[rows], coefs)
        finishing = [int(i) for i in rows if last_use[int(i)] == pos]
        if finishing:
            fs = strides[finishing]
            fb = bases[finishing]
            if mods is None:
                keys, counts = kern.dp_collapse_float(keys, counts, kmax, d, fs, fb)
            else:
                keys, counts = kern.dp_collapse_mod(keys, counts, kmax, d, fs, fb, mods)
        else:
            # the output has at most sum(kmax + 1) states; refuse before allocating
            upper = int(kmax.sum()) + kmax.shape[0]
            if upper > layer_cap:
                upper = _advance_size(keys, kmax, d)
            if upper > layer_cap:
                raise BudgetExceeded(
                    f"layer at variable {j} would hold {upper} states (cap {layer_cap})"
                )
            if visited + upper > budget:
                raise BudgetExceeded(f"state budget {budget} exceeded at variable {j}")
            if mods is None:
                keys, counts = kern.dp_advance_float(keys, counts, kmax, d)
            else:
                keys, counts = kern.dp_advance_mod(keys, counts, kmax, d, mods)
        visited += keys.shape[0]
        if visited > budget:
            raise BudgetExceeded(f"state budget {budget} exceeded at variable {j}")
        if keys.shape[0] == 0:
            return 0, visited, log_scale
        if mods is None:
            # rescale so huge counts stay inside the float range
            top = float(counts.max())
            if top > 0:
                counts = counts / top
                log_scale += math.log(top)
    if keys.shape[0] != 1 or keys[0] != 0:
        return 0, visited, log_scale
    return counts[:, 0], visited, log_scale


def count_exact(
    spec: PolytopeSpec,
    budget: int = DEFAULT_BUDGET,
    layer_cap: int = DEFAULT_LAYER_CAP,
    order: list[int] | None = None,
    backend: str | None = None,
) -> ExactCount:
    """Exact |{x in Z^n_{>=0}: Ax = b}| by a layered DP over residual vectors.

    Residuals are packed into mixed-radix int64 keys. A float pass sizes the
    result; a second pass runs modulo enough 62-bit primes to pin the count,
    which is then rebuilt by CRT. ``budget`` caps the states produced per pass.
    """
    t0 = time.perf_counter()
    A, b = _check_countable(spec)
    kern = kernels.get_backend(backend)
    if math.prod(int(x) + 1 for x in b) >= 1 << 62:
        raise OracleError("residual space too large for 64-bit state keys")
    if order is None:
        order = dp_order(A, b)
    elif sorted(order) != list(range(spec.n)):
        raise ValueError("order must be a permutation of the column indices")

    res, visited, log_scale = _run_dp(A, b, order, np.ones((1, 1)), None, budget, layer_cap, kern)
    if isinstance(res, int) or float(res[0]) == 0.0:
        return ExactCount(0, visited, time.perf_counter() - t0)
    ln_est = log_scale + math.log(float(res[0]))
    # two spare moduli cover the float pass's relative error with room to spare
    k = int(ln_est / math.log(MODULUS_CEIL / 2)) + 2
    mods = _moduli(k)
    mods_arr = np.array(mods, dtype=np.uint64)
    res, visited2, _ = _run_dp(
        A, b, order, np.ones((k, 1), dtype=np.uint64), mods_arr, budget, layer_cap, kern
    )
    residues = [0] * k if isinstance(res, int) else [int(x) for x in res]
    count = int(crt(mods, residues)[0])
    return ExactCount(count, visited + visited2, time.perf_counter() - t0)


def count_exact_binomial(n: int, r: int) -> int:
    """Integer points of the dilated simplex: C(n + r - 1, r)."""
    if n < 1 or r < 0:
        raise ValueError("need n >= 1 and r >= 0")
    return math.comb(n + r - 1, r)


def _bounded_compositions(total: int, caps: np.ndarray) -> np.ndarray:
    """#{v in Z^s: 0 <= v <= caps, sum v = total} per row of ``caps``, by inclusion-exclusion."""
    caps = np.atleast_2d(caps).astype(np.int64)
    s = caps.shape[1]
    out = np.zeros(caps.shape[0], dtype=np.int64)
    for size in range(s + 1):
        for subset in itertools.combinations(range(s), size):
            rest = total - (caps[:, list(subset)] + 1).sum(axis=1) if subset else np.full(caps.shape[0], total)
            term = _comb_vec(rest + s - 1, s - 1)
            out += -term if size % 2 else term
    return out


def _comb_vec(top: np.ndarray, k: int) -> np.ndarray:
    out = np.zeros(top.shape[0], dtype=np.int64)
    ok = top >= k
    acc = np.ones(int(ok.sum()), dtype=np.int64)
    t = top[ok]
    for i in range(k):
        acc = acc * (t - i) // (i + 1)
    out[ok] = acc
    return out


def count_transportation(R, C) -> ExactCount:
    """Exact count of r x s contingency tables with margins R, C, for min(r, s) <= 4.

    Splits the table after its second row: with t the column sums of the top
    two rows, both halves are counted independently and the products summed.
    """
    t0 = time.perf_counter()
    R = [int(x) for x in R]
    C = [int(x) for x in C]
    if sum(R) != sum(C) or min(R + C) < 0:
        raise OracleError("margins must be nonnegative with equal sums")
    if len(R) > len(C):
        R, C = C, R
    r, s = len(R), len(C)
    if r > 4:
        raise OracleError("count_transportation supports at most 4 rows (after transposing)")
    if r == 1:
        return ExactCount(1, 1, time.perf_counter() - t0, "transportation")
    Carr = np.array(C, dtype=np.int64)
    if r == 2:
        n = int(_bounded_compositions(R[0], Carr)[0])
        return ExactCount(n, 1, time.perf_counter() - t0, "transportation")
    top = R[0] + R[1]
    # all t with 0 <= t <= C and sum t = top, enumerated over the first s-1 coordinates
    grids = np.meshgrid(*[np.arange(c + 1) for c in C[:-1]], indexing="ij")
    head = np.stack([g.ravel() for g in grids], axis=1)
    last = top - head.sum(axis=1)
    ok = (last >= 0) & (last <= C[-1])
    t = np.concatenate([head[ok], last[ok, None]], axis=1)
    k_top = _bounded_compositions(R[0], t)
    if r == 3:
        k_bot = np.ones_like(k_top)
    else:
        k_bot = _bounded_compositions(R[2], Carr - t)
    total = sum(int(x) * int(y) for x, y in zip(k_top.tolist(), k_bot.tolist()))
    return ExactCount(total, int(t.shape[0]), time.perf_counter() - t0, "transportation")


def detect_transportation(spec: PolytopeSpec) -> tuple[list[int], list[int]] | None:
    """Margins (R, C) if ``spec`` has exactly the gen_transportation layout, else None."""
    if not (spec.integral_A and spec.integral_b):
        return None
    A = spec.A_int()
    b = [int(x) for x in spec.b_int()]
    for r in range(2, spec.n + 1):
        if spec.n % r:
            continue
        s = spec.n // r
        if s < 2 or r + s - 1 != spec.m:
            continue
        R = b[:r]
        C = b[r:] + [sum(R) - sum(b[r:])]
        if C[-1] < 0:
            continue
        if np.array_equal(A, gen_transportation(R, C).A_int()):
            return R, C
    return None


# ---------------------------------------------------------------- Monte Carlo

def make_rng(seed: int) -> np.random.Generator:
    """PCG64 stream for ``seed``; sub-streams come from SeedSequence.spawn."""
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence(int(seed))))


def estimate_count_mc(
    sol: MaxEntSolution,
    spec: PolytopeSpec,
    trials: int,
    seed: int,
    backend: str | None = None,
) -> McEstimate:
    """e^H * (fraction of draws of X landing on AX = b)."""
    if not (spec.integral_A and spec.integral_b):
        raise OracleError("Monte Carlo needs integer A and b")
    if trials < 1:
        raise ValueError("trials must be at least 1")
    if not 0 <= int(seed) < 1 << 64:
        raise ValueError("seed must be a 64-bit unsigned integer")
    kern = kernels.get_backend(backend)
    log_q = -np.asarray(sol.theta, dtype=float)
    hits = kern.mc_hits(spec.A_int(), spec.b_int(), log_q, int(trials), make_rng(seed))
    H = sol.entropy
    if hits == 0:
        # rule of three: one-sided 95% upper limit 3/T for a zero-hit binomial
        ln_up = H + math.log(3.0 / trials)
        return McEstimate(
            trials, 0, -math.inf, math.inf, int(seed), ln_up,
            [f"no hits; 95% upper limit {sci_from_ln(ln_up)}"],
        )
    p = hits / trials
    ln_est = H + math.log(p)
    ln_se = math.sqrt(p * (1.0 - p) / trials) / p
    return McEstimate(trials, hits, ln_est, ln_se, int(seed))


# ---------------------------------------------------------------- concentration

def conc_sum_geometrics(qs, tail_eps: float = 1e-9) -> float:
    """max_k Pr[X_1 + ... + X_n = k] for independent geometrics with ratios qs.

    Each pmf is cut where its tail mass drops below tail_eps/n, so the result
    is at most tail_eps below the true value and never above it.
    """
    qs = np.atleast_1d(np.asarray(qs, dtype=float))
    if qs.size == 0 or np.any((qs <= 0) | (qs >= 1)):
        raise ValueError("each q must lie in (0, 1)")
    if not 0 < tail_eps < 0.1:
        raise ValueError("tail_eps must lie in (0, 0.1)")
    cut = tail_eps / qs.size
    pmf = np.ones(1)
    for q in qs:
        # tail beyond index L is q^(L+1)
        L = max(0, math.ceil(math.log(cut) / math.log(q)))
        pmf = np.convolve(pmf, (1.0 - q) * q ** np.arange(L + 1))
    return float(pmf.max())


def conc_quadrature(
    sol: MaxEntSolution,
    spec: PolytopeSpec,
    grid_points_per_axis: int | None = None,
    backend: str | None = None,
) -> float:
    """Torus average of prod_j |(1-q_j)/(1 - q_j e^{i<t,a_j>})|, an upper bound on conc(AX)."""
    if spec.m > 3:
        raise OracleError(f"quadrature is limited to m <= 3, got m={spec.m}")
    if not spec.integral_A:
        raise OracleError("quadrature needs integer A (periodic integrand)")
    K = grid_points_per_axis or DEFAULT_GRID[spec.m]
    if K < 2:
        raise ValueError("need at least 2 grid points per axis")
    kern = kernels.get_backend(backend)
    return kern.torus_mean(spec.A_float, np.asarray(sol.q, dtype=float), int(K))


def ln_bound_margin(ln_bound: float, count: int) -> float:
    """ln(bound / count); nonnegative when the bound holds."""
    return ln_bound - ln_of_int(count)


__all__ = [
    "OracleError", "BudgetExceeded", "ExactCount", "McEstimate", "count_exact",
    "count_exact_binomial", "count_transportation", "detect_transportation",
    "estimate_count_mc", "make_rng", "conc_sum_geometrics", "conc_quadrature", "dp_order",
]
