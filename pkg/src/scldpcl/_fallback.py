"""Pure numpy versions of the hot loops in ``_ckernels``.

The signatures match the compiled module exactly so ``_core`` can swap one
for the other. Density evolution uses padded neighbour tables and
prefix/suffix cumulative products (log sums on the check side); peeling resolves every degree-one check
found in a sweep at once.
"""
from __future__ import annotations

import numpy as np


def _padded(ptr: np.ndarray, members: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Return ``(table, mask)`` with one padded row per node."""
    deg = np.diff(ptr)
    width = int(deg.max()) if deg.size else 0
    table = np.zeros((deg.size, max(width, 1)), dtype=np.int64)
    mask = np.arange(max(width, 1))[None, :] < deg[:, None]
    rows = np.repeat(np.arange(deg.size), deg)
    cols = np.arange(members.size) - np.repeat(ptr[:-1], deg)
    table[rows, cols] = members
    return table, mask


def _excl_products(vals: np.ndarray, mask: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Leave-one-out and full row products of a padded table."""
    v = np.where(mask, vals, 1.0)
    ones = np.ones((v.shape[0], 1))
    left = np.cumprod(np.hstack([ones, v[:, :-1]]), axis=1)
    right = np.cumprod(np.hstack([ones, v[:, :0:-1]]), axis=1)[:, ::-1]
    full = left[:, -1] * v[:, -1] if v.shape[1] else np.ones(v.shape[0])
    return left * right, full


def _excl_log_sums(vals: np.ndarray, mask: np.ndarray) -> np.ndarray:
    """Leave-one-out row sums of a padded table (``-inf`` entries allowed)."""
    v = np.where(mask, vals, 0.0)
    zeros = np.zeros((v.shape[0], 1))
    left = np.cumsum(np.hstack([zeros, v[:, :-1]]), axis=1)
    right = np.cumsum(np.hstack([zeros, v[:, :0:-1]]), axis=1)[:, ::-1]
    return left + right


def de_iterate(vn_ptr, vn_edges, cn_ptr, cn_edges, eps, cn_keep, x, u, p,
               max_iters, conv_tol, floor):
    vn_tab, vn_mask = _padded(np.asarray(vn_ptr), np.asarray(vn_edges))
    cn_tab, cn_mask = _padded(np.asarray(cn_ptr), np.asarray(cn_edges))
    eps = np.asarray(eps)
    keep = np.asarray(cn_keep)
    grow = 0.0
    status = 0
    it = max_iters
    for step in range(1, max_iters + 1):
        with np.errstate(divide="ignore"):
            logs = np.log1p(-x[cn_tab])
            log_keep = np.log(keep)
        new_u = -np.expm1(log_keep[:, None] + _excl_log_sums(logs, cn_mask))
        sel = cn_tab[cn_mask]
        new_u = new_u[cn_mask]
        grow = max(grow, float(np.max(new_u - u[sel], initial=0.0)))
        u[sel] = new_u

        excl, full = _excl_products(u[vn_tab], vn_mask)
        new_x = (eps[:, None] * excl)[vn_mask]
        sel = vn_tab[vn_mask]
        diff = new_x - x[sel]
        grow = max(grow, float(np.max(diff, initial=0.0)))
        delta = float(np.max(np.abs(diff), initial=0.0))
        x[sel] = new_x
        p[:] = eps * full
        if float(np.max(p, initial=0.0)) <= floor:
            status, it = 1, step
            break
        if delta < conv_tol:
            status, it = 2, step
            break
    return it, status, grow


def peel(vn_ptr, vn_adj, cn_ptr, cn_adj, known, resolvable, lifo):
    cn_ptr = np.asarray(cn_ptr)
    cn_adj = np.asarray(cn_adj)
    vn_ptr = np.asarray(vn_ptr)
    vn_adj = np.asarray(vn_adj)
    resolvable = np.asarray(resolvable).astype(bool)
    n_cn = cn_ptr.size - 1
    edge_cn = np.repeat(np.arange(n_cn), np.diff(cn_ptr))
    unknown = known[cn_adj] == 0
    cnt = np.bincount(edge_cn, weights=unknown, minlength=n_cn).astype(np.int64)
    xsum = np.bincount(edge_cn, weights=np.where(unknown, cn_adj, 0),
                       minlength=n_cn).astype(np.int64)
    resolved = 0
    while True:
        cand = xsum[cnt == 1]
        cand = cand[resolvable[cand] & (known[cand] == 0)]
        if cand.size == 0:
            return resolved
        cand = np.unique(cand)
        known[cand] = 1
        resolved += cand.size
        deg = vn_ptr[cand + 1] - vn_ptr[cand]
        starts = np.repeat(vn_ptr[cand], deg)
        offs = np.arange(deg.sum()) - np.repeat(np.cumsum(deg) - deg, deg)
        touched = vn_adj[starts + offs]
        owners = np.repeat(cand, deg)
        np.subtract.at(cnt, touched, 1)
        np.subtract.at(xsum, touched, owners)
