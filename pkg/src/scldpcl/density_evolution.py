"""Protograph density evolution over the binary erasure channel.

Messages live on edge strands: an entry ``H[c, v] = k`` becomes ``k``
parallel strands, each with its own VN-to-CN erasure fraction ``x`` and
CN-to-VN fraction ``u``. One flooding iteration is

    u(e) = 1 - (1 - delta_c) * prod_{e' at c, e' != e} (1 - x(e'))
    x(e) = eps_v * prod_{e' at v, e' != e} u(e')

starting from ``x = 1``. ``delta_c`` is an optional fixed erasure fraction
injected at check ``c`` (zero when absent). A VN is decoded when
``P(v) = eps_v * prod u`` falls to the erasure floor.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Mapping, Sequence

import numpy as np

from . import _core
from .protograph import CoupledProtograph, Protograph, local_protograph

ArrayLike = np.ndarray | Sequence[float] | float

#: growth between iterations above this is reported as non-monotone
MONOTONE_SLACK = 1e-12


class MonotonicityError(RuntimeError):
    """A DE trajectory increased, which the BEC recursion never allows."""


@dataclass(frozen=True)
class DEConfig:
    """Stopping rules for density evolution and threshold bisection.

    ``max_iters`` caps runs that decide success (threshold probes).
    ``fixed_point_iters`` caps runs that must reach their fixed point,
    such as helper passes whose final messages feed later passes.
    """

    max_iters: int = 1000
    fixed_point_iters: int = 100000
    conv_tol: float = 1e-12
    erasure_floor: float = 1e-9
    bisect_tol: float = 1e-4
    check_monotone: bool = True

    def __post_init__(self) -> None:
        if self.max_iters < 1 or self.fixed_point_iters < 1:
            raise ValueError("iteration caps must be at least 1")
        if not 0.0 < self.erasure_floor < 1.0:
            raise ValueError("erasure_floor must lie in (0, 1)")
        if self.conv_tol <= 0 or self.bisect_tol <= 0:
            raise ValueError("tolerances must be positive")


@dataclass(frozen=True)
class StrandGraph:
    """CSR view of a protograph with one entry per edge strand."""

    num_vns: int
    num_cns: int
    strand_vn: np.ndarray
    strand_cn: np.ndarray
    vn_ptr: np.ndarray
    vn_edges: np.ndarray
    cn_ptr: np.ndarray
    cn_edges: np.ndarray

    @classmethod
    def from_adjacency(cls, H: np.ndarray) -> "StrandGraph":
        H = np.asarray(H, dtype=np.int64)
        cn_idx, vn_idx = np.nonzero(H)
        mult = H[cn_idx, vn_idx]
        return cls.from_strands(np.repeat(cn_idx, mult), np.repeat(vn_idx, mult), *H.shape)

    @classmethod
    def from_strands(cls, strand_cn: np.ndarray, strand_vn: np.ndarray, n_cn: int, n_vn: int) -> "StrandGraph":
        strand_cn = np.asarray(strand_cn, dtype=np.int64)
        strand_vn = np.asarray(strand_vn, dtype=np.int64)
        vn_edges = np.argsort(strand_vn, kind="stable").astype(np.int64)
        cn_edges = np.argsort(strand_cn, kind="stable").astype(np.int64)
        vn_ptr = np.concatenate([[0], np.cumsum(np.bincount(strand_vn, minlength=n_vn))]).astype(np.int64)
        cn_ptr = np.concatenate([[0], np.cumsum(np.bincount(strand_cn, minlength=n_cn))]).astype(np.int64)
        return cls(n_vn, n_cn, strand_vn, strand_cn, vn_ptr, vn_edges, cn_ptr, cn_edges)

    @property
    def num_strands(self) -> int:
        return int(self.strand_vn.size)


@dataclass
class DEResult:
    """Final state of a density-evolution run.

    ``x``/``u`` are indexed by the strands of ``strands`` (built from the
    full input adjacency). ``success`` means every active VN reached the
    erasure floor; ``converged`` means the run stopped on its own rather than
    by exhausting ``max_iters``.
    """

    p: np.ndarray
    x: np.ndarray
    u: np.ndarray
    success: bool
    converged: bool
    iterations: int
    max_increase: float
    strands: StrandGraph
    history: list[np.ndarray] | None = field(default=None, repr=False)
    u_history: list[np.ndarray] | None = field(default=None, repr=False)

    @property
    def monotone(self) -> bool:
        return self.max_increase <= MONOTONE_SLACK


def _as_matrix(G: Protograph | CoupledProtograph | np.ndarray) -> np.ndarray:
    if isinstance(G, CoupledProtograph):
        return G.adjacency
    if isinstance(G, Protograph):
        return G.adjacency
    return np.asarray(G, dtype=np.int64)


def de_run(
    G: Protograph | CoupledProtograph | np.ndarray,
    eps: ArrayLike,
    boundary: Mapping[int, float] | None = None,
    active_vns: Sequence[int] | np.ndarray | None = None,
    cfg: DEConfig = DEConfig(),
    record: bool = False,
    stop_on_floor: bool = True,
) -> DEResult:
    """Iterate BEC density evolution to a fixed point or to success.

    Parameters
    ----------
    eps
        Channel erasure probability, scalar or one value per VN.
    boundary
        Map from check index to injected erasure fraction ``delta``.
    active_vns
        VNs taking part in decoding. Every other VN is permanently erased,
        which silences every check it touches.
    record
        Keep the per-strand ``x`` and ``u`` after every iteration.
    stop_on_floor
        Stop as soon as all active VNs reach the erasure floor, giving up
        after ``cfg.max_iters``. When false the run continues until the
        per-strand change drops below ``conv_tol`` or
        ``cfg.fixed_point_iters`` is reached.
    """
    H = _as_matrix(G)
    n_cn, n_vn = H.shape
    eps_v = np.broadcast_to(np.asarray(eps, dtype=np.float64), (n_vn,)).copy()
    if np.any((eps_v < 0) | (eps_v > 1)):
        raise ValueError("erasure probabilities must lie in [0, 1]")
    keep = np.ones(n_cn)
    for c, d in (boundary or {}).items():
        if not 0.0 <= d <= 1.0:
            raise ValueError(f"boundary erasure at check {c} outside [0, 1]")
        keep[int(c)] = 1.0 - d

    full = StrandGraph.from_adjacency(H)
    if active_vns is None:
        act = np.ones(n_vn, dtype=bool)
    else:
        act = np.zeros(n_vn, dtype=bool)
        act[np.asarray(active_vns, dtype=np.int64)] = True
    # a check next to a permanently erased VN only ever sends erasures, and
    # a check injected with delta = 1 likewise; both are dropped
    dead = (H[:, ~act] > 0).any(axis=1) | (keep == 0.0)
    rows = np.flatnonzero(~dead)
    cols = np.flatnonzero(act)
    sel = np.flatnonzero(~dead[full.strand_cn] & act[full.strand_vn])
    row_pos = np.cumsum(~dead) - 1
    col_pos = np.cumsum(act) - 1
    sub = StrandGraph.from_strands(
        row_pos[full.strand_cn[sel]], col_pos[full.strand_vn[sel]], rows.size, cols.size
    )

    x = np.ones(sub.num_strands)
    u = np.ones(sub.num_strands)
    p = np.empty(sub.num_vns)
    sub_eps = np.ascontiguousarray(eps_v[cols])
    sub_keep = np.ascontiguousarray(keep[rows])
    floor = cfg.erasure_floor if stop_on_floor else -1.0
    cap = cfg.max_iters if stop_on_floor else cfg.fixed_point_iters
    args = (sub.vn_ptr, sub.vn_edges, sub.cn_ptr, sub.cn_edges, sub_eps, sub_keep)

    history = u_history = None
    if record:
        history, u_history = [], []
        grow = 0.0
        status = 0
        iters = cap
        for it in range(1, cap + 1):
            prev = x.copy()
            _, _, g = _core.de_iterate(*args, x, u, p, 1, -1.0, -1.0)
            grow = max(grow, g)
            history.append(x.copy())
            u_history.append(u.copy())
            if sub.num_vns and p.max() <= floor:
                status, iters = 1, it
                break
            if np.max(np.abs(x - prev), initial=0.0) < cfg.conv_tol:
                status, iters = 2, it
                break
    else:
        iters, status, grow = _core.de_iterate(*args, x, u, p, cap, cfg.conv_tol, floor)
        if sub.num_vns == 0:
            status = 1

    if cfg.check_monotone and grow > MONOTONE_SLACK:
        raise MonotonicityError(f"density evolution increased by {grow:.3e}")

    p_full = np.ones(n_vn)
    p_full[cols] = p
    x_full = np.ones(full.num_strands)
    u_full = np.ones(full.num_strands)
    x_full[sel] = x
    u_full[sel] = u
    success = bool(sub.num_vns == 0 or p.max() <= cfg.erasure_floor)
    if record:
        history = [_scatter(h, sel, full.num_strands) for h in history]
        u_history = [_scatter(h, sel, full.num_strands) for h in u_history]
    return DEResult(
        p=p_full,
        x=x_full,
        u=u_full,
        success=success,
        converged=status != 0,
        iterations=int(iters),
        max_increase=float(grow),
        strands=full,
        history=history,
        u_history=u_history,
    )


def _scatter(vals: np.ndarray, dst: np.ndarray, n: int) -> np.ndarray:
    out = np.ones(n)
    out[dst] = vals
    return out


def bisect_threshold(succeeds: Callable[[float], bool], cfg: DEConfig = DEConfig()) -> float:
    """Largest ``eps`` in ``[0, 1]`` (to ``bisect_tol``) for which ``succeeds`` holds.

    ``succeeds`` must be monotone: true below the threshold, false above.
    Returns ``0.0`` when the probe at ``1e-3`` already fails, and ``1.0``
    when ``eps = 1`` succeeds.
    """
    if not succeeds(1e-3):
        return 0.0
    if succeeds(1.0):
        return 1.0
    lo, hi = 1e-3, 1.0
    while hi - lo > cfg.bisect_tol:
        mid = 0.5 * (lo + hi)
        if succeeds(mid):
            lo = mid
        else:
            hi = mid
    return lo


def bp_threshold(
    G: Protograph | CoupledProtograph | np.ndarray,
    boundary: Mapping[int, float] | None = None,
    active_vns: Sequence[int] | np.ndarray | None = None,
    cfg: DEConfig = DEConfig(),
) -> float:
    """BP threshold of a protograph under a uniform channel on the active VNs."""
    H = _as_matrix(G)
    if H.shape[1] == 0:
        return 1.0
    return bisect_threshold(lambda e: de_run(H, e, boundary, active_vns, cfg).success, cfg)


def local_thresholds(G: CoupledProtograph, cfg: DEConfig = DEConfig()) -> list[float]:
    """Threshold of every sub-block's local graph, in chain order."""
    return [bp_threshold(local_protograph(G, m), cfg=cfg) for m in range(G.M)]


@dataclass(frozen=True)
class SandwichResult:
    lower: float
    mid: float
    upper: float
    holds: bool


def threshold_sandwich_check(
    H: Protograph | np.ndarray,
    rows: Sequence[int],
    cols: Sequence[int],
    cfg: DEConfig = DEConfig(),
) -> SandwichResult:
    """Compare thresholds of a row-restriction, the full graph and a column-restriction.

    Deleting checks can only hurt and deleting variables can only help, so
    ``lower <= mid <= upper`` must hold up to bisection slack.
    """
    A = _as_matrix(H)
    rows = np.asarray(rows, dtype=np.int64)
    cols = np.asarray(cols, dtype=np.int64)
    if rows.size == 0 or cols.size == 0:
        raise ValueError("row and column index sets must be nonempty")
    lower = bp_threshold(A[rows, :], cfg=cfg)
    mid = bp_threshold(A, cfg=cfg)
    upper = bp_threshold(A[:, cols], cfg=cfg)
    slack = 2 * cfg.bisect_tol
    return SandwichResult(lower, mid, upper, lower <= mid + slack and mid <= upper + slack)


def regular_scalar_de(l: int, r: int, eps: float, iters: int = 100000, tol: float = 1e-14) -> float:
    """Fixed point of the scalar ``(l, r)``-regular recursion.

    Used as an independent check of the strand engine on all-ones
    protographs.
    """
    x = 1.0
    for _ in range(iters):
        nxt = eps * (1.0 - (1.0 - x) ** (r - 1)) ** (l - 1)
        if abs(nxt - x) < tol:
            return nxt
        x = nxt
    return x
