# cython: boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled hot loops: flooding density evolution and peeling.

Both functions mirror ``scldpcl._fallback`` argument for argument; the
fallback is the reference and the test suite checks they agree.
"""
import numpy as np
cimport numpy as cnp
from libc.math cimport expm1, fabs, log, log1p

cnp.import_array()

ctypedef cnp.int64_t idx_t


def de_iterate(const idx_t[::1] vn_ptr, const idx_t[::1] vn_edges,
               const idx_t[::1] cn_ptr, const idx_t[::1] cn_edges,
               const double[::1] eps, const double[::1] cn_keep,
               double[::1] x, double[::1] u, double[::1] p,
               long max_iters, double conv_tol, double floor):
    """Run flooding BEC density evolution in place.

    Returns ``(iterations, status, max_increase)`` where status is 1 when
    every ``p`` fell to ``floor`` or below, 2 when the largest per-edge
    change in ``x`` dropped under ``conv_tol`` and 0 when ``max_iters`` ran
    out. ``max_increase`` is the largest observed growth of any ``x`` or
    ``u`` entry between iterations (zero for a monotone run).

    Check updates work with sums of ``log1p(-x)`` so that ``1 - prod(1 - x)``
    keeps full relative precision when every ``x`` is tiny.
    """
    cdef Py_ssize_t n_vn = vn_ptr.shape[0] - 1
    cdef Py_ssize_t n_cn = cn_ptr.shape[0] - 1
    cdef Py_ssize_t n_e = x.shape[0]
    cdef Py_ssize_t v, c, k, a, b, e, deg
    cdef long it
    cdef double acc, val, old, delta, pmax, lk, grow = 0.0
    cdef double[::1] pre = np.empty(n_e + 1, dtype=np.float64)
    cdef int status = 0

    for it in range(1, max_iters + 1):
        for c in range(n_cn):
            a = cn_ptr[c]
            b = cn_ptr[c + 1]
            deg = b - a
            lk = log(cn_keep[c])
            acc = 0.0
            for k in range(deg):
                pre[k] = acc
                acc += log1p(-x[cn_edges[a + k]])
            acc = 0.0
            for k in range(deg - 1, -1, -1):
                e = cn_edges[a + k]
                val = -expm1(lk + pre[k] + acc)
                acc += log1p(-x[e])
                if val - u[e] > grow:
                    grow = val - u[e]
                u[e] = val
        delta = 0.0
        pmax = 0.0
        for v in range(n_vn):
            a = vn_ptr[v]
            b = vn_ptr[v + 1]
            deg = b - a
            acc = 1.0
            for k in range(deg):
                pre[k] = acc
                acc *= u[vn_edges[a + k]]
            p[v] = eps[v] * acc
            if p[v] > pmax:
                pmax = p[v]
            acc = 1.0
            for k in range(deg - 1, -1, -1):
                e = vn_edges[a + k]
                val = eps[v] * pre[k] * acc
                acc *= u[e]
                old = x[e]
                if val - old > grow:
                    grow = val - old
                if fabs(val - old) > delta:
                    delta = fabs(val - old)
                x[e] = val
        if pmax <= floor:
            status = 1
            break
        if delta < conv_tol:
            status = 2
            break
    else:
        it = max_iters
    return it, status, grow


def peel(const idx_t[::1] vn_ptr, const idx_t[::1] vn_adj,
         const idx_t[::1] cn_ptr, const idx_t[::1] cn_adj,
         cnp.uint8_t[::1] known, const cnp.uint8_t[::1] resolvable,
         bint lifo):
    """Peel erasures in place; return the number of VNs resolved.

    ``vn_adj`` lists CN indices per VN and ``cn_adj`` lists VN indices per
    CN, one entry per lifted edge. A VN is only ever resolved when its
    ``resolvable`` flag is set.
    """
    cdef Py_ssize_t n_cn = cn_ptr.shape[0] - 1
    cdef Py_ssize_t c, c2, k, v
    cdef Py_ssize_t head = 0, tail = 0, resolved = 0
    cdef cnp.int64_t[::1] cnt = np.zeros(n_cn, dtype=np.int64)
    cdef cnp.int64_t[::1] xsum = np.zeros(n_cn, dtype=np.int64)
    # every CN enters the work list at most once per decrement, so the
    # edge count bounds the total number of pushes
    cdef cnp.int64_t[::1] work = np.empty(n_cn + vn_adj.shape[0] + 1, dtype=np.int64)

    for c in range(n_cn):
        for k in range(cn_ptr[c], cn_ptr[c + 1]):
            v = cn_adj[k]
            if not known[v]:
                cnt[c] += 1
                xsum[c] += v
        if cnt[c] == 1:
            work[tail] = c
            tail += 1
    while tail > head:
        if lifo:
            tail -= 1
            c = work[tail]
        else:
            c = work[head]
            head += 1
        if cnt[c] != 1:
            continue
        v = xsum[c]
        if known[v] or not resolvable[v]:
            continue
        known[v] = 1
        resolved += 1
        for k in range(vn_ptr[v], vn_ptr[v + 1]):
            c2 = vn_adj[k]
            cnt[c2] -= 1
            xsum[c2] -= v
            if cnt[c2] == 1:
                work[tail] = c2
                tail += 1
    return resolved
