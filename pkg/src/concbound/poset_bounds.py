"""Concentration of sums of uniform variables (chain products) and the cyclic-basis bound."""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .lognum import BoundReport, LogNumber
from .maxent import MaxEntSolution
from .model import PolytopeSpec, SpecError, numeric_rank

WIDTH_GUARD = 100_000
SNAP_TOL = 1e-9


class VacuousBoundError(ValueError):
    """Some class has N_i = 1, so the cyclic bound is infinite."""


@dataclass(frozen=True)
class ChainProductSpec:
    """Chain lengths N_1, ..., N_p of the product [N_1] x ... x [N_p]."""

    Ns: tuple[int, ...]

    def __post_init__(self):
        if not self.Ns:
            raise ValueError("need at least one chain")
        if any(int(N) != N or N < 1 for N in self.Ns):
            raise ValueError(f"chain lengths must be positive integers, got {self.Ns}")
        object.__setattr__(self, "Ns", tuple(int(N) for N in self.Ns))

    @classmethod
    def of(cls, Ns) -> "ChainProductSpec":
        return Ns if isinstance(Ns, cls) else cls(tuple(Ns))


def _uniform_power(N: int, k: int) -> np.ndarray:
    """pmf of a sum of k independent uniforms on {0..N-1}, by repeated squaring."""
    base = np.full(N, 1.0 / N)
    out = np.ones(1)
    while k:
        if k & 1:
            out = np.convolve(out, base)
        k >>= 1
        if k:
            base = np.convolve(base, base)
    return out


def conc_chain(spec) -> float:
    """Largest point mass of a sum of independent uniforms on {0..N_j - 1}.

    By the Sperner property of chain products this is the width of the
    product divided by prod N_j.
    """
    Ns = ChainProductSpec.of(spec).Ns
    pmf = np.ones(1)
    for N in sorted(set(Ns)):
        pmf = np.convolve(pmf, _uniform_power(N, Ns.count(N)))
    return float(pmf.max())


def width_exact(spec) -> int:
    """Largest coefficient of prod_j (1 + x + ... + x^{N_j - 1}), exactly."""
    Ns = ChainProductSpec.of(spec).Ns
    if sum(N - 1 for N in Ns) > WIDTH_GUARD:
        raise ValueError(f"sum(N_j - 1) exceeds {WIDTH_GUARD}")
    coeffs = np.array([1], dtype=object)
    for N in Ns:
        # multiply by (1 + ... + x^{N-1}) as a sliding-window sum of the prefix sums
        S = np.concatenate([[0], np.cumsum(np.concatenate([coeffs, np.zeros(N - 1, dtype=object)]))])
        coeffs = S[1:] - np.concatenate([np.zeros(N, dtype=object), S[1 : len(S) - N]])
    return int(max(coeffs))


def asymptotic_conc(spec) -> float:
    """(pi/6 * sum (N_j^2 - 1))^{-1/2}."""
    Ns = ChainProductSpec.of(spec).Ns
    s = sum(N * N - 1 for N in Ns)
    if s == 0:
        raise VacuousBoundError("all N_j = 1; the asymptotic formula is infinite")
    return (math.pi / 6.0 * s) ** -0.5


@dataclass(frozen=True)
class CyclicStructure:
    m: int
    p: int
    class_of_column: tuple[int, ...]


def detect_cyclic(spec: PolytopeSpec) -> CyclicStructure:
    """Check a_{km+i} = a_i exactly for all blocks k and that a_0..a_{m-1} is a basis."""
    m, n = spec.m, spec.n
    if n % m:
        raise SpecError(f"columns are not cyclic: n={n} is not a multiple of m={m}")
    cols = list(zip(*spec.A))
    for j in range(m, n):
        if cols[j] != cols[j % m]:
            raise SpecError(f"columns are not cyclic: column {j} differs from column {j % m}")
    if numeric_rank(spec.A_float[:, :m]) < m:
        raise SpecError("columns are not cyclic: the first m columns are not a basis")
    return CyclicStructure(m, n // m, tuple(j % m for j in range(n)))


def chain_lengths(z: np.ndarray, cyc: CyclicStructure) -> list[int]:
    """N_i = floor(z_i + 1) per class, snapping z within SNAP_TOL of an integer first."""
    z = np.asarray(z, dtype=float)
    cls = np.asarray(cyc.class_of_column)
    out = []
    for i in range(cyc.m):
        zi = float(np.mean(z[cls == i]))
        r = round(zi)
        if abs(zi - r) <= SNAP_TOL:
            zi = float(r)
        out.append(int(math.floor(zi + 1.0)))
    return out


def bound_thm3(sol: MaxEntSolution, cyc: CyclicStructure) -> tuple[BoundReport, BoundReport]:
    """Rigorous (chain-product concentration) and asymptotic cyclic-basis bounds."""
    if sol.n != cyc.m * cyc.p:
        raise ValueError("structure does not match the solution")
    Ns = chain_lengths(sol.z, cyc)
    if any(N == 1 for N in Ns):
        raise VacuousBoundError(f"N_i = 1 for classes {[i for i, N in enumerate(Ns) if N == 1]}; bound is vacuous")
    H = sol.entropy
    p = cyc.p
    ln_rig = H + sum(math.log(conc_chain([N] * p)) for N in Ns)
    ln_asy = H - 0.5 * sum(math.log(math.pi * p / 6.0 * (N * N - 1)) for N in Ns)
    params = {"N": Ns, "p": p, "m": cyc.m, "entropy": H}
    rig = BoundReport("thm3_rigorous", LogNumber(ln_rig), dict(params))
    asy = BoundReport(
        "thm3_asymptotic", LogNumber(ln_asy), dict(params),
        ["asymptotic in p; not a guaranteed bound at finite p"],
    )
    return rig, asy


__all__ = [
    "VacuousBoundError", "ChainProductSpec", "CyclicStructure", "conc_chain", "width_exact",
    "asymptotic_conc", "detect_cyclic", "chain_lengths", "bound_thm3",
]
