"""Pure-numpy kernels. Reference semantics for the numba backend."""
import numpy as np

MC_CHUNK = 1 << 15


def dp_kmax(keys, strides, bases, coefs):
    """Largest k with r - k*a_j >= 0 for every residual vector r encoded in ``keys``."""
    kmax = None
    for s, base, c in zip(strides, bases, coefs):
        d = (keys // s) % base // c
        kmax = d if kmax is None else np.minimum(kmax, d)
    return kmax


def _lines(keys, kmax, d):
    foot = keys - kmax * d
    order = np.argsort(foot, kind="stable")
    foot = foot[order]
    first = np.empty(foot.shape[0], dtype=bool)
    if foot.shape[0]:
        first[0] = True
        np.not_equal(foot[1:], foot[:-1], out=first[1:])
    line_id = np.cumsum(first) - 1
    return order, foot[first], line_id


def _suffix_scan(vals, pos, seglen, mod):
    """Inclusive suffix sums inside contiguous segments (log-step scan, no subtraction)."""
    n = vals.shape[0]
    s = 1
    while True:
        ok = pos + s < seglen
        if not ok.any():
            return vals
        src = np.flatnonzero(ok)
        vals = vals.copy()
        vals[src] += vals[src + s]
        if mod is not None:
            vals[src] %= mod
        s *= 2
        if s >= n:
            return vals


def _advance(keys, counts, kmax, d, mods):
    order, feet, line_id = _lines(keys, kmax, d)
    idx = kmax[order]
    nlines = feet.shape[0]
    length = np.zeros(nlines, dtype=np.int64)
    np.maximum.at(length, line_id, idx)
    length += 1
    offset = np.zeros(nlines, dtype=np.int64)
    np.cumsum(length[:-1], out=offset[1:])
    total = int(length.sum())
    seg = np.repeat(np.arange(nlines), length)
    pos = np.arange(total, dtype=np.int64) - offset[seg]
    new_keys = feet[seg] + pos * d
    seglen = length[seg]
    new_counts = np.zeros((counts.shape[0], total), dtype=counts.dtype)
    target = offset[line_id] + idx
    for row in range(counts.shape[0]):
        buf = np.zeros(total, dtype=counts.dtype)
        buf[target] = counts[row, order]
        new_counts[row] = _suffix_scan(buf, pos, seglen, None if mods is None else mods[row])
    return new_keys, new_counts


def _collapse(keys, counts, kmax, d, fin_strides, fin_bases, mods):
    order, feet, line_id = _lines(keys, kmax, d)
    nlines = feet.shape[0]
    starts = np.flatnonzero(np.r_[True, line_id[1:] != line_id[:-1]]) if line_id.size else np.zeros(0, np.int64)
    seglen_line = np.diff(np.r_[starts, line_id.shape[0]])
    pos = np.arange(line_id.shape[0]) - starts[line_id]
    seglen = seglen_line[line_id]
    keep = np.ones(nlines, dtype=bool)
    for s, base in zip(fin_strides, fin_bases):
        keep &= (feet // s) % base == 0
    out = np.zeros((counts.shape[0], nlines), dtype=counts.dtype)
    for row in range(counts.shape[0]):
        scanned = _suffix_scan(counts[row, order], pos, seglen, None if mods is None else mods[row])
        out[row] = scanned[starts]
    return feet[keep], out[:, keep]


def dp_advance_float(keys, counts, kmax, d):
    return _advance(keys, counts, kmax, d, None)


def dp_advance_mod(keys, counts, kmax, d, mods):
    return _advance(keys, counts, kmax, d, mods)


def dp_collapse_float(keys, counts, kmax, d, fin_strides, fin_bases):
    return _collapse(keys, counts, kmax, d, fin_strides, fin_bases, None)


def dp_collapse_mod(keys, counts, kmax, d, fin_strides, fin_bases, mods):
    return _collapse(keys, counts, kmax, d, fin_strides, fin_bases, mods)


def mc_hits(A, b, log_q, trials, rng):
    """Count trials with A X = b, X_j = floor(ln(1-U)/ln q_j); n uniforms per trial."""
    n = A.shape[1]
    hits = 0
    done = 0
    while done < trials:
        k = min(MC_CHUNK, trials - done)
        u = rng.random((k, n))
        with np.errstate(divide="ignore", invalid="ignore"):
            x = np.floor(np.log1p(-u) / log_q)
        x = np.where(np.isfinite(log_q), x, 0.0).astype(np.int64)
        hits += int(np.count_nonzero(np.all(x @ A.T == b, axis=1)))
        done += k
    return hits


def torus_mean(A, q, K):
    """Mean of prod_j (1-q_j)/|1 - q_j e^{i<t,a_j>}| over the K^m grid t_k = -pi + 2 pi k/K."""
    m, n = A.shape
    t = -np.pi + 2.0 * np.pi * np.arange(K) / K
    num = np.prod(1.0 - q)
    total = 0.0
    # loop over the leading m-1 axes, vectorize the last
    lead = np.stack(np.meshgrid(*([t] * (m - 1)), indexing="ij"), axis=-1).reshape(-1, m - 1) if m > 1 else np.zeros((1, 0))
    phase_last = np.outer(t, A[m - 1])
    for row in lead:
        phase = phase_last + (row @ A[: m - 1] if m > 1 else 0.0)
        den = 1.0 + q * q - 2.0 * q * np.cos(phase)
        total += float(np.sum(num / np.sqrt(np.prod(den, axis=1))))
    return total / float(K) ** m
