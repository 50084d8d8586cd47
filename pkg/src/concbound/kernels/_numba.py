"""numba-compiled kernels; same signatures and results as ``_numpy``."""
import math

import numpy as np
from numba import njit


@njit(cache=True)
def dp_kmax(keys, strides, bases, coefs):
    n = keys.shape[0]
    out = np.empty(n, dtype=np.int64)
    for i in range(n):
        best = np.int64(-1)
        for r in range(strides.shape[0]):
            d = (keys[i] // strides[r]) % bases[r] // coefs[r]
            if best < 0 or d < best:
                best = d
        out[i] = best
    return out


@njit(cache=True)
def _line_structure(keys, kmax, d):
    n = keys.shape[0]
    foot = keys - kmax * d
    order = np.argsort(foot, kind="mergesort")
    nlines = 0
    for i in range(n):
        if i == 0 or foot[order[i]] != foot[order[i - 1]]:
            nlines += 1
    starts = np.empty(nlines + 1, dtype=np.int64)
    feet = np.empty(nlines, dtype=np.int64)
    L = 0
    for i in range(n):
        if i == 0 or foot[order[i]] != foot[order[i - 1]]:
            starts[L] = i
            feet[L] = foot[order[i]]
            L += 1
    starts[nlines] = n
    return order, feet, starts


@njit(cache=True)
def _advance_core(keys, counts, kmax, d, mods, use_mod):
    order, feet, starts = _line_structure(keys, kmax, d)
    nlines = feet.shape[0]
    nrow = counts.shape[0]
    length = np.zeros(nlines, dtype=np.int64)
    total = 0
    for ln in range(nlines):
        mx = 0
        for i in range(starts[ln], starts[ln + 1]):
            k = kmax[order[i]]
            if k > mx:
                mx = k
        length[ln] = mx + 1
        total += mx + 1
    new_keys = np.empty(total, dtype=np.int64)
    new_counts = np.zeros((nrow, total), dtype=counts.dtype)
    off = 0
    for ln in range(nlines):
        Ln = length[ln]
        for t in range(Ln):
            new_keys[off + t] = feet[ln] + t * d
        for i in range(starts[ln], starts[ln + 1]):
            o = order[i]
            for r in range(nrow):
                new_counts[r, off + kmax[o]] = counts[r, o]
        for r in range(nrow):
            for t in range(Ln - 2, -1, -1):
                v = new_counts[r, off + t] + new_counts[r, off + t + 1]
                if use_mod:
                    v = v % mods[r]
                new_counts[r, off + t] = v
        off += Ln
    return new_keys, new_counts


@njit(cache=True)
def _collapse_core(keys, counts, kmax, d, fin_strides, fin_bases, mods, use_mod):
    order, feet, starts = _line_structure(keys, kmax, d)
    nlines = feet.shape[0]
    nrow = counts.shape[0]
    keep = np.ones(nlines, dtype=np.bool_)
    nkeep = 0
    for ln in range(nlines):
        for r in range(fin_strides.shape[0]):
            if (feet[ln] // fin_strides[r]) % fin_bases[r] != 0:
                keep[ln] = False
        if keep[ln]:
            nkeep += 1
    out_keys = np.empty(nkeep, dtype=np.int64)
    out = np.zeros((nrow, nkeep), dtype=counts.dtype)
    w = 0
    for ln in range(nlines):
        if not keep[ln]:
            continue
        out_keys[w] = feet[ln]
        for r in range(nrow):
            acc = out[r, w]
            for i in range(starts[ln], starts[ln + 1]):
                acc = acc + counts[r, order[i]]
                if use_mod:
                    acc = acc % mods[r]
            out[r, w] = acc
        w += 1
    return out_keys, out


_NOMOD = np.ones(1, dtype=np.uint64)


def dp_advance_float(keys, counts, kmax, d):
    return _advance_core(keys, counts, kmax, np.int64(d), _NOMOD, False)


def dp_advance_mod(keys, counts, kmax, d, mods):
    return _advance_core(keys, counts, kmax, np.int64(d), mods, True)


def dp_collapse_float(keys, counts, kmax, d, fin_strides, fin_bases):
    return _collapse_core(keys, counts, kmax, np.int64(d), fin_strides, fin_bases, _NOMOD, False)


def dp_collapse_mod(keys, counts, kmax, d, fin_strides, fin_bases, mods):
    return _collapse_core(keys, counts, kmax, np.int64(d), fin_strides, fin_bases, mods, True)


@njit(cache=True)
def _mc_hits_core(A, b, log_q, trials, rng):
    m, n = A.shape
    x = np.empty(n, dtype=np.int64)
    hits = 0
    for _ in range(trials):
        # always draw n variates so the stream matches the vectorized backend
        for j in range(n):
            u = rng.random()
            if math.isinf(log_q[j]):
                x[j] = 0
            else:
                x[j] = np.int64(math.floor(math.log1p(-u) / log_q[j]))
        ok = True
        for i in range(m):
            s = 0
            for j in range(n):
                s += A[i, j] * x[j]
            if s != b[i]:
                ok = False
                break
        if ok:
            hits += 1
    return hits


def mc_hits(A, b, log_q, trials, rng):
    return int(_mc_hits_core(A, b, log_q, trials, rng))


@njit(cache=True)
def _torus_sum(A, q, K):
    m, n = A.shape
    num = 1.0
    for j in range(n):
        num *= 1.0 - q[j]
    step = 2.0 * math.pi / K
    total = 0.0
    npts = K**m
    idx = np.zeros(m, dtype=np.int64)
    for _ in range(npts):
        den = 1.0
        for j in range(n):
            ph = 0.0
            for i in range(m):
                ph += (-math.pi + step * idx[i]) * A[i, j]
            den *= 1.0 + q[j] * q[j] - 2.0 * q[j] * math.cos(ph)
        total += num / math.sqrt(den)
        # odometer increment
        i = m - 1
        while i >= 0:
            idx[i] += 1
            if idx[i] < K:
                break
            idx[i] = 0
            i -= 1
    return total


def torus_mean(A, q, K):
    return float(_torus_sum(A, q, K)) / float(K) ** A.shape[0]


__all__ = [
    "dp_kmax", "dp_advance_float", "dp_advance_mod", "dp_collapse_float",
    "dp_collapse_mod", "mc_hits", "torus_mean",
]
