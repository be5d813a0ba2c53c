"""Hot numeric kernels: numba @njit with a pure-numpy fallback.

Kernel selection: the njit path is used when numba imports cleanly and the
environment variable PRGFORGE_NO_NUMBA is unset/0; setting PRGFORGE_NO_NUMBA=1
forces the numpy path.  Both paths are always importable so they can be
benchmarked against each other (benchmarks/benchmark_kernels.py).

The MLP kernels are written once and compiled twice (the numpy variant is the
plain Python function, the numba variant is njit of the same body), so both
paths perform the identical floating-point operations via the same BLAS calls.
The PRG/count kernels have hand-vectorized numpy twins; they are integer-exact
or used for counting, so path choice cannot change results beyond float ties
of measure zero.
"""

from __future__ import annotations

import os

import numpy as np

try:
    import numba
    from numba import njit, prange

    NUMBA_AVAILABLE = True
except ImportError:  # pragma: no cover - numba is a declared dependency
    NUMBA_AVAILABLE = False

    def njit(*args, **kwargs):  # type: ignore
        def wrap(f):
            return f

        return wrap if not (args and callable(args[0])) else args[0]

    prange = range  # type: ignore

USE_NUMBA = NUMBA_AVAILABLE and os.environ.get("PRGFORGE_NO_NUMBA", "0") not in (
    "1",
    "true",
    "yes",
)


def active_path() -> str:
    return "numba" if USE_NUMBA else "numpy"


def as_typed_list(arrays):
    """Wrap a list of same-dtype arrays for the njit path."""
    if not NUMBA_AVAILABLE:
        return list(arrays)
    from numba.typed import List

    out = List()
    for a in arrays:
        out.append(a)
    return out


def _wrap_list(arrays):
    return as_typed_list(arrays) if USE_NUMBA else list(arrays)


# ---------------------------------------------------------------------------
# PRG batch evaluation
# ---------------------------------------------------------------------------


def prg_eval_batch_np(seeds, sets, table):
    bits = (seeds[:, sets] > 0).astype(np.int64)  # (n, d, k)
    k = sets.shape[1]
    pows = 1 << np.arange(k - 1, -1, -1, dtype=np.int64)
    idx = bits @ pows
    return table[idx]


def _prg_eval_batch_loop(seeds, sets, table, out):
    n = seeds.shape[0]
    d, k = sets.shape
    for i in prange(n):
        for ell in range(d):
            idx = 0
            for j in range(k):
                idx <<= 1
                if seeds[i, sets[ell, j]] > 0:
                    idx |= 1
            out[i, ell] = table[idx]


if NUMBA_AVAILABLE:
    _prg_eval_batch_loop_nb = njit(parallel=True, cache=False)(_prg_eval_batch_loop)


def prg_eval_batch_nb(seeds, sets, table):
    out = np.empty((seeds.shape[0], sets.shape[0]), dtype=table.dtype)
    _prg_eval_batch_loop_nb(seeds, sets, table, out)
    return out


def prg_eval_batch(seeds, sets, table):
    """seeds (n,m) int8 +-1, sets (d,k) int64, table (2**k,) int8 -> (n,d) int8.

    Table index: seed bits of the set in ascending index order, first bit most
    significant, +1 mapping to bit 1.
    """
    seeds = np.ascontiguousarray(seeds, dtype=np.int8)
    sets = np.ascontiguousarray(sets, dtype=np.int64)
    table = np.ascontiguousarray(table, dtype=np.int8)
    if USE_NUMBA:
        return prg_eval_batch_nb(seeds, sets, table)
    return prg_eval_batch_np(seeds, sets, table)


# ---------------------------------------------------------------------------
# MLP forward / fused train steps (single body, compiled both ways)
# ---------------------------------------------------------------------------


def _mlp_logits_impl(X, Ws, bs):
    L = len(Ws)
    a = X
    for l in range(L - 1):
        z = np.dot(a, np.ascontiguousarray(Ws[l].T)) + bs[l]
        a = np.maximum(z, 0.0)
    z = np.dot(a, np.ascontiguousarray(Ws[L - 1].T)) + bs[L - 1]
    return z[:, 0].copy()


def _mlp_train_chunk_impl(Ws, bs, mWs, vWs, mbs, vbs, batches, y, acts, t0, lr, b1, b2, eps):
    steps = batches.shape[0]
    nb = batches.shape[1]
    L = len(Ws)
    t = t0
    inv_n = 1.0 / nb
    for s in range(steps):
        acts[0][:, :] = batches[s]
        for l in range(L - 1):
            z = np.dot(acts[l], np.ascontiguousarray(Ws[l].T)) + bs[l]
            acts[l + 1][:, :] = np.maximum(z, 0.0)
        logits = np.dot(acts[L - 1], np.ascontiguousarray(Ws[L - 1].T)) + bs[L - 1]
        zf = logits[:, 0]
        # stable sigmoid
        sig = np.where(zf >= 0.0, 1.0 / (1.0 + np.exp(-np.abs(zf))),
                       np.exp(-np.abs(zf)) / (1.0 + np.exp(-np.abs(zf))))
        dz = ((sig - y) * inv_n).reshape(nb, 1)
        t += 1
        c1 = 1.0 - b1 ** t
        c2 = 1.0 - b2 ** t
        for l in range(L - 1, -1, -1):
            gW = np.dot(np.ascontiguousarray(dz.T), acts[l])
            gb = np.sum(dz, axis=0)
            if l > 0:
                da = np.dot(dz, Ws[l])
                dz = da * (acts[l] > 0.0)
            mWs[l][:, :] = b1 * mWs[l] + (1.0 - b1) * gW
            vWs[l][:, :] = b2 * vWs[l] + (1.0 - b2) * gW * gW
            mbs[l][:] = b1 * mbs[l] + (1.0 - b1) * gb
            vbs[l][:] = b2 * vbs[l] + (1.0 - b2) * gb * gb
            Ws[l][:, :] = Ws[l] - lr * (mWs[l] / c1) / (np.sqrt(vWs[l] / c2) + eps)
            bs[l][:] = bs[l] - lr * (mbs[l] / c1) / (np.sqrt(vbs[l] / c2) + eps)
    return t


mlp_logits_np = _mlp_logits_impl
mlp_train_chunk_np = _mlp_train_chunk_impl
if NUMBA_AVAILABLE:
    mlp_logits_nb = njit(cache=False)(_mlp_logits_impl)
    mlp_train_chunk_nb = njit(cache=False)(_mlp_train_chunk_impl)


def mlp_logits(X, Ws, bs):
    X = np.ascontiguousarray(X, dtype=np.float64)
    if USE_NUMBA:
        return mlp_logits_nb(X, as_typed_list(Ws), as_typed_list(bs))
    return mlp_logits_np(X, list(Ws), list(bs))


def mlp_train_chunk(Ws, bs, mWs, vWs, mbs, vbs, batches, y, acts, t0, lr, b1, b2, eps):
    """Run len(batches) fused train steps in place; returns the new Adam step count.

    batches: (steps, n_batch, d); y: (n_batch,) 0/1 labels; acts: per-layer
    activation buffers [(n_batch, d), (n_batch, w1), ...] reused across steps.
    """
    if USE_NUMBA:
        return mlp_train_chunk_nb(
            as_typed_list(Ws), as_typed_list(bs), as_typed_list(mWs), as_typed_list(vWs),
            as_typed_list(mbs), as_typed_list(vbs), batches, y, as_typed_list(acts),
            t0, lr, b1, b2, eps,
        )
    return mlp_train_chunk_np(Ws, bs, mWs, vWs, mbs, vbs, batches, y, acts,
                              t0, lr, b1, b2, eps)


# ---------------------------------------------------------------------------
# Monte-Carlo small-ball counting
# ---------------------------------------------------------------------------


def count_within_np(points, centers, radius):
    r2 = radius * radius
    counts = np.empty(centers.shape[0], dtype=np.int64)
    for c in range(centers.shape[0]):
        diff = points - centers[c]
        counts[c] = int(np.count_nonzero(np.einsum("ij,ij->i", diff, diff) <= r2))
    return counts


def _count_within_loop(points, centers, radius, counts):
    n, d = points.shape
    r2 = radius * radius
    for c in prange(centers.shape[0]):
        acc = 0
        for i in range(n):
            s = 0.0
            for j in range(d):
                diff = points[i, j] - centers[c, j]
                s += diff * diff
            if s <= r2:
                acc += 1
        counts[c] = acc


if NUMBA_AVAILABLE:
    _count_within_loop_nb = njit(parallel=True, cache=False)(_count_within_loop)


def count_within_nb(points, centers, radius):
    counts = np.empty(centers.shape[0], dtype=np.int64)
    _count_within_loop_nb(points, centers, radius, counts)
    return counts


def count_within(points, centers, radius):
    """Number of rows of `points` within Euclidean `radius` of each center."""
    points = np.ascontiguousarray(points, dtype=np.float64)
    centers = np.ascontiguousarray(centers, dtype=np.float64)
    if USE_NUMBA:
        return count_within_nb(points, centers, radius)
    return count_within_np(points, centers, radius)


def warmup():
    """Trigger JIT compilation of the njit kernels on tiny inputs."""
    if not USE_NUMBA:
        return
    seeds = np.array([[1, -1, 1]], dtype=np.int8)
    sets = np.array([[0, 1]], dtype=np.int64)
    table = np.array([1, -1, -1, 1], dtype=np.int8)
    prg_eval_batch(seeds, sets, table)
    Ws = [np.ones((2, 3)), np.ones((1, 2))]
    bs = [np.zeros(2), np.zeros(1)]
    X = np.zeros((4, 3))
    mlp_logits(X, Ws, bs)
    mWs = [np.zeros_like(w) for w in Ws]
    vWs = [np.zeros_like(w) for w in Ws]
    mbs = [np.zeros_like(b) for b in bs]
    vbs = [np.zeros_like(b) for b in bs]
    acts = [np.zeros((4, 3)), np.zeros((4, 2))]
    batches = np.zeros((1, 4, 3))
    y = np.array([1.0, 1.0, 0.0, 0.0])
    mlp_train_chunk(Ws, bs, mWs, vWs, mbs, vbs, batches, y, acts, 0, 1e-3, 0.9, 0.999, 1e-8)
    count_within(np.zeros((2, 3)), np.zeros((1, 3)), 1.0)
