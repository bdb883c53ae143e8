"""Finite-length Monte-Carlo simulation of lifted codes with a peeling decoder.

A protograph is lifted by giving every edge strand its own random
permutation of the ``L`` copies. Lifted VN ``v * L + k`` is copy ``k`` of
protograph VN ``v`` and inherits its sub-block.

Decoding modes restrict which VNs may be resolved:

* global: every VN;
* local: only the target sub-block, everything else counts as erased;
* semi-global: helper steps first, each helper seeing the values its
  predecessors recovered, then the target.
"""
from __future__ import annotations

import csv
import io
import json
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field
from typing import Sequence

import numpy as np
from scipy.stats import binomtest

from . import _core, _rng
from .protograph import CoupledProtograph, Protograph
from .varying_channel import ChannelCdf


class SimulationError(ValueError):
    """Inconsistent simulation input."""


@dataclass(frozen=True)
class TannerGraph:
    """Lifted graph in CSR form, one entry per lifted edge.

    ``edge_strand`` and ``edge_copy`` record which protograph strand and
    which copy each lifted edge came from.
    """

    L: int
    num_vns: int
    num_cns: int
    vn_sub_block: np.ndarray
    edge_vn: np.ndarray
    edge_cn: np.ndarray
    edge_strand: np.ndarray
    edge_copy: np.ndarray
    vn_ptr: np.ndarray = field(repr=False)
    vn_adj: np.ndarray = field(repr=False)
    cn_ptr: np.ndarray = field(repr=False)
    cn_adj: np.ndarray = field(repr=False)

    @property
    def num_sub_blocks(self) -> int:
        return int(self.vn_sub_block.max()) + 1 if self.num_vns else 0

    def vn_degrees(self) -> np.ndarray:
        return np.diff(self.vn_ptr)

    def cn_degrees(self) -> np.ndarray:
        return np.diff(self.cn_ptr)


def lift(G: CoupledProtograph | Protograph | np.ndarray, L: int, seed: int = 0) -> TannerGraph:
    """Copy-and-permute lifting with one uniform permutation per edge strand."""
    if L < 1:
        raise SimulationError("lifting parameter L must be at least 1")
    if isinstance(G, CoupledProtograph):
        H, sb = G.adjacency, G.vn_sub_block
    else:
        H = G.adjacency if isinstance(G, Protograph) else np.asarray(G, dtype=np.int64)
        sb = np.zeros(H.shape[1], dtype=np.int64)
    n_cn, n_vn = H.shape
    cn_idx, vn_idx = np.nonzero(H)
    mult = H[cn_idx, vn_idx]
    s_cn = np.repeat(cn_idx, mult)
    s_vn = np.repeat(vn_idx, mult)
    n_s = s_cn.size

    rng = _rng.stream(seed, _rng.LIFT)
    perms = rng.permuted(np.tile(np.arange(L), (n_s, 1)), axis=1) if L > 1 else np.zeros((n_s, 1), np.int64)
    copy = np.tile(np.arange(L), n_s)
    strand = np.repeat(np.arange(n_s), L)
    e_vn = s_vn[strand] * L + copy
    e_cn = s_cn[strand] * L + perms.reshape(-1)

    vn_order = np.argsort(e_vn, kind="stable")
    cn_order = np.argsort(e_cn, kind="stable")
    vn_ptr = np.concatenate([[0], np.cumsum(np.bincount(e_vn, minlength=n_vn * L))])
    cn_ptr = np.concatenate([[0], np.cumsum(np.bincount(e_cn, minlength=n_cn * L))])
    return TannerGraph(
        L=L,
        num_vns=n_vn * L,
        num_cns=n_cn * L,
        vn_sub_block=np.repeat(np.asarray(sb, dtype=np.int64), L),
        edge_vn=e_vn.astype(np.int64),
        edge_cn=e_cn.astype(np.int64),
        edge_strand=strand.astype(np.int64),
        edge_copy=copy.astype(np.int64),
        vn_ptr=vn_ptr.astype(np.int64),
        vn_adj=np.ascontiguousarray(e_cn[vn_order], dtype=np.int64),
        cn_ptr=cn_ptr.astype(np.int64),
        cn_adj=np.ascontiguousarray(e_vn[cn_order], dtype=np.int64),
    )


# ----------------------------------------------------------------------------
# decoding


@dataclass(frozen=True)
class Mode:
    """Decoding mode: ``kind`` is ``"global"``, ``"local"`` or ``"semiglobal"``."""

    kind: str
    target: int = 0
    steps: tuple[tuple[int, ...], ...] = ()

    def __post_init__(self) -> None:
        if self.kind not in ("global", "local", "semiglobal"):
            raise SimulationError(f"unknown mode {self.kind!r}")

    @classmethod
    def global_(cls) -> "Mode":
        return cls("global")

    @classmethod
    def local(cls, m: int) -> "Mode":
        return cls("local", m)

    @classmethod
    def semiglobal(cls, m: int, steps: Sequence[Sequence[int]]) -> "Mode":
        return cls("semiglobal", m, tuple(tuple(int(a) for a in s) for s in steps))

    def label(self) -> str:
        if self.kind == "global":
            return "global"
        if self.kind == "local":
            return f"local({self.target})"
        return f"semiglobal({self.target},d={sum(len(s) for s in self.steps)})"


@dataclass
class DecodeResult:
    known: np.ndarray
    success: bool
    resolved: int
    evaluated: np.ndarray = field(repr=False)

    @property
    def unresolved(self) -> int:
        return int(np.count_nonzero(self.known[self.evaluated] == 0))


def _peel(T: TannerGraph, known: np.ndarray, resolvable: np.ndarray, lifo: bool) -> int:
    return int(_core.peel(T.vn_ptr, T.vn_adj, T.cn_ptr, T.cn_adj, known, resolvable, lifo))


def decode(T: TannerGraph, erased: np.ndarray, mode: Mode, lifo: bool = False) -> DecodeResult:
    """Peel an erasure pattern under ``mode``.

    ``erased`` flags the lifted VNs erased by the channel. The final set of
    recovered VNs does not depend on ``lifo`` (the work-list order).
    """
    erased = np.asarray(erased, dtype=bool)
    if erased.shape != (T.num_vns,):
        raise SimulationError(f"erasure pattern must have length {T.num_vns}")
    sb = T.vn_sub_block
    if mode.kind == "global":
        known = (~erased).astype(np.uint8)
        n = _peel(T, known, np.ones(T.num_vns, np.uint8), lifo)
        evaluated = np.arange(T.num_vns)
        return DecodeResult(known, bool(known.all()), n, evaluated)

    M = T.num_sub_blocks
    if not 0 <= mode.target < M:
        raise SimulationError(f"target {mode.target} is not a sub-block")
    state = np.zeros(T.num_vns, dtype=np.uint8)
    decoded = np.zeros(M, dtype=bool)
    resolved = 0
    steps = mode.steps if mode.kind == "semiglobal" else ()
    for step in steps:
        updates = []
        for m in step:
            if not 0 <= m < M or decoded[m] or m == mode.target:
                raise SimulationError(f"invalid helper {m}")
            mine = sb == m
            known = np.where(decoded[sb], state, 0).astype(np.uint8)
            known[mine] = ~erased[mine]
            resolved += _peel(T, known, mine.astype(np.uint8), lifo)
            updates.append((mine, known))
        for mine, known in updates:
            state[mine] = known[mine]
        for m in step:
            decoded[m] = True
    mine = sb == mode.target
    known = np.where(decoded[sb], state, 0).astype(np.uint8)
    known[mine] = ~erased[mine]
    resolved += _peel(T, known, mine.astype(np.uint8), lifo)
    evaluated = np.flatnonzero(mine)
    return DecodeResult(known, bool(known[mine].all()), resolved, evaluated)


# ----------------------------------------------------------------------------
# Monte Carlo


@dataclass(frozen=True)
class TrialConfig:
    """Simulation settings.

    ``channel`` is a fixed erasure probability or a :class:`ChannelCdf`
    from which each trial draws one erasure probability per sub-block.
    """

    L: int
    channel: float | ChannelCdf
    mode: Mode
    trials: int
    seed: int = 0
    lifo: bool = False

    def __post_init__(self) -> None:
        if self.L < 1 or self.trials < 1:
            raise SimulationError("L and trials must be positive")
        if not isinstance(self.channel, ChannelCdf) and not 0.0 <= float(self.channel) <= 1.0:
            raise SimulationError("erasure probability must lie in [0, 1]")


def _interval(k: int, n: int, level: float = 0.95) -> tuple[float, float]:
    if n == 0:
        return (0.0, 1.0)
    ci = binomtest(k, n).proportion_ci(confidence_level=level, method="wilson")
    return (float(ci.low), float(ci.high))


@dataclass
class TrialStats:
    trials: int
    bits: int
    bit_errors: int
    frame_errors: int
    erasures_per_trial: np.ndarray = field(repr=False)
    epsilon: float | None = None
    mode: str = ""

    @property
    def ber(self) -> float:
        return self.bit_errors / self.bits if self.bits else 0.0

    @property
    def fer(self) -> float:
        return self.frame_errors / self.trials if self.trials else 0.0

    def ber_interval(self, level: float = 0.95) -> tuple[float, float]:
        return _interval(self.bit_errors, self.bits, level)

    def fer_interval(self, level: float = 0.95) -> tuple[float, float]:
        return _interval(self.frame_errors, self.trials, level)

    def csv_row(self) -> dict[str, object]:
        return {
            "epsilon": "" if self.epsilon is None else self.epsilon,
            "mode": self.mode,
            "trials": self.trials,
            "bit_errors": self.bit_errors,
            "bits": self.bits,
            "frame_errors": self.frame_errors,
        }

    def summary(self) -> dict[str, object]:
        out = self.csv_row()
        out.update(
            ber=self.ber,
            fer=self.fer,
            ber_ci=list(self.ber_interval()),
            fer_ci=list(self.fer_interval()),
        )
        return out


CSV_FIELDS = ("epsilon", "mode", "trials", "bit_errors", "bits", "frame_errors")


def stats_to_csv(rows: Sequence[TrialStats]) -> str:
    buf = io.StringIO()
    w = csv.DictWriter(buf, fieldnames=CSV_FIELDS, lineterminator="\n")
    w.writeheader()
    for r in rows:
        w.writerow(r.csv_row())
    return buf.getvalue()


def stats_to_json(rows: Sequence[TrialStats]) -> str:
    return json.dumps([r.summary() for r in rows], indent=2, sort_keys=True)


def trial_pattern(T: TannerGraph, cfg: TrialConfig, k: int) -> np.ndarray:
    """Erasure pattern of trial ``k``; identical for identical ``(seed, k)``."""
    rng = _rng.stream(cfg.seed, _rng.TRIAL, k)
    if isinstance(cfg.channel, ChannelCdf):
        eps_sb = cfg.channel.sample(rng, T.num_sub_blocks)
        eps = eps_sb[T.vn_sub_block]
    else:
        eps = float(cfg.channel)
    return rng.random(T.num_vns) < eps


def _run_chunk(args: tuple) -> tuple[int, int, int, np.ndarray]:
    T, cfg, lo, hi = args
    bit_err = frame_err = bits = 0
    per = np.zeros(hi - lo, dtype=np.int64)
    for i, k in enumerate(range(lo, hi)):
        res = decode(T, trial_pattern(T, cfg, k), cfg.mode, cfg.lifo)
        miss = res.unresolved
        per[i] = miss
        bit_err += miss
        bits += res.evaluated.size
        frame_err += miss > 0
    return bit_err, bits, frame_err, per


def monte_carlo(
    G: CoupledProtograph | Protograph | TannerGraph,
    cfg: TrialConfig,
    jobs: int = 1,
) -> TrialStats:
    """Run ``cfg.trials`` independent trials, optionally over ``jobs`` processes.

    Results do not depend on ``jobs``: trial ``k`` always draws from the
    stream keyed by ``(seed, k)``.
    """
    T = G if isinstance(G, TannerGraph) else lift(G, cfg.L, cfg.seed)
    n_chunks = max(1, min(jobs, cfg.trials))
    edges = np.linspace(0, cfg.trials, n_chunks + 1).astype(int)
    chunks = [(T, cfg, lo, hi) for lo, hi in zip(edges[:-1], edges[1:])]
    if jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            parts = list(pool.map(_run_chunk, chunks))
    else:
        parts = [_run_chunk(c) for c in chunks]
    eps = None if isinstance(cfg.channel, ChannelCdf) else float(cfg.channel)
    return TrialStats(
        trials=cfg.trials,
        bits=sum(p[1] for p in parts),
        bit_errors=sum(p[0] for p in parts),
        frame_errors=sum(p[2] for p in parts),
        erasures_per_trial=np.concatenate([p[3] for p in parts]),
        epsilon=eps,
        mode=cfg.mode.label(),
    )


def config_dict(cfg: TrialConfig) -> dict[str, object]:
    d = asdict(cfg)
    if isinstance(cfg.channel, ChannelCdf):
        d["channel"] = cfg.channel.to_dict()
    return d
