"""Semi-global decoding analysis.

A target sub-block is decoded after a schedule of helper sub-blocks. Each
pass runs density evolution on one sub-block: its variables, its local
checks, and every coupling check whose other member sub-blocks were all
decoded in earlier steps. Such a check receives a fixed boundary erasure

    delta_c = 1 - prod_{decoded members a} f_a(c)

where ``f_a(c)`` is the probability that every edge from ``a`` into ``c``
carries a known value once ``a`` finished. Coupling checks with an
undecoded member stay silent. After a pass over sub-block ``m`` every
still-silent check ``c`` gets ``f_m(c) = prod_v (1 - P(v)) ** H[c, v]``.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from functools import lru_cache
from typing import Mapping, Sequence

import numpy as np

from .density_evolution import DEConfig, DEResult, bisect_threshold, de_run
from .protograph import ConstructionError, CoupledProtograph, build_scldpcl


class ScheduleError(ValueError):
    """A schedule does not fit the graph or repeats a sub-block."""


# ----------------------------------------------------------------------------
# generic pass engine


@dataclass
class PassResult:
    """Outcome of decoding one sub-block.

    ``factors`` maps each coupling check that stayed silent during the pass
    to the probability that all of this sub-block's edges into it are known.
    """

    sub_block: int
    success: bool
    p: np.ndarray
    factors: dict[int, float]
    rows: np.ndarray
    boundary: dict[int, float]
    de: DEResult = field(repr=False)

    def delta_out(self, cn: int) -> float:
        return 1.0 - self.factors[cn]


def sb_pass(
    G: CoupledProtograph,
    m: int,
    injections: Mapping[int, float],
    eps: float,
    cfg: DEConfig = DEConfig(),
    target: bool = True,
    record: bool = False,
) -> PassResult:
    """Run density evolution on sub-block ``m`` with injected coupling checks.

    Parameters
    ----------
    injections
        Coupling check index to boundary erasure ``delta``. These checks take
        part in the pass; every other coupling check touching ``m`` is
        silent.
    target
        Stop once every VN reaches the erasure floor. Helpers run on to the
        fixed point so their outgoing messages are as small as possible.
    """
    if not 0 <= m < G.M:
        raise ScheduleError(f"sub-block {m} out of range 0..{G.M - 1}")
    H = G.adjacency
    cols = G.sub_blocks[m]
    local = G.classification().local_checks[m]
    inj = sorted(int(c) for c in injections)
    rows = np.concatenate([local, np.array(inj, dtype=np.int64)]).astype(np.int64)
    sub = H[np.ix_(rows, cols)]
    boundary = {len(local) + k: float(injections[c]) for k, c in enumerate(inj)}
    res = de_run(sub, eps, boundary, None, cfg, record=record, stop_on_floor=target)

    touching = np.flatnonzero(H[:, cols].any(axis=1))
    silent = np.setdiff1d(touching, rows)
    with np.errstate(divide="ignore"):
        log_known = np.log1p(-np.minimum(res.p, 1.0))
    factors = {}
    for c in silent:
        mult = H[c, cols]
        if np.any(res.p[mult > 0] >= 1.0):
            factors[int(c)] = 0.0
        else:
            factors[int(c)] = float(np.exp(np.dot(mult, log_known)))
    return PassResult(m, res.success, res.p, factors, rows, boundary, res)


@dataclass
class ScheduleResult:
    success: bool
    target: PassResult
    helpers: dict[int, PassResult]


def run_schedule(
    G: CoupledProtograph,
    steps: Sequence[Sequence[int]],
    target: int,
    eps: float | Sequence[float] | np.ndarray,
    cfg: DEConfig = DEConfig(),
) -> ScheduleResult:
    """Decode helper steps in order, then the target.

    ``eps`` is one erasure probability or one per sub-block (0-based).
    Passes inside one step only see results of earlier steps.
    """
    eps_sb = np.broadcast_to(np.asarray(eps, dtype=np.float64), (G.M,))
    _validate_steps(G, steps, target)
    members = G.all_cn_members()
    done: dict[int, PassResult] = {}

    def injections_for(m: int) -> dict[int, float]:
        inj = {}
        for c in G.classification().coupling_checks:
            mem = members[c]
            if m not in mem:
                continue
            others = mem - {m}
            if all(a in done for a in others):
                known = 1.0
                for a in others:
                    known *= done[a].factors[int(c)]
                inj[int(c)] = 1.0 - known
        return inj

    for step in steps:
        out = {m: sb_pass(G, m, injections_for(m), float(eps_sb[m]), cfg, target=False) for m in step}
        done.update(out)
    tgt = sb_pass(G, target, injections_for(target), float(eps_sb[target]), cfg, target=True)
    return ScheduleResult(tgt.success, tgt, done)


def _validate_steps(G: CoupledProtograph, steps: Sequence[Sequence[int]], target: int) -> None:
    seen = set()
    for step in steps:
        for m in step:
            if not 0 <= m < G.M:
                raise ScheduleError(f"schedule names unknown sub-block {m}")
            if m in seen or m == target:
                raise ScheduleError(f"sub-block {m} appears twice in the schedule")
            seen.add(m)
    if not 0 <= target < G.M:
        raise ScheduleError(f"target {target} out of range")


def schedule_threshold(
    G: CoupledProtograph,
    steps: Sequence[Sequence[int]],
    target: int,
    cfg: DEConfig = DEConfig(),
) -> float:
    """Threshold of a helper schedule under a uniform channel."""
    _validate_steps(G, steps, target)
    return bisect_threshold(lambda e: run_schedule(G, steps, target, e, cfg).success, cfg)


def count_active_edges(G: CoupledProtograph, steps: Sequence[Sequence[int]], target: int) -> int:
    """Edges taking part in the passes of a schedule (helpers plus target)."""
    res = run_schedule(G, steps, target, 0.0, DEConfig(max_iters=1, fixed_point_iters=1))
    total = 0
    for pr in list(res.helpers.values()) + [res.target]:
        total += int(G.adjacency[np.ix_(pr.rows, G.sub_blocks[pr.sub_block])].sum())
    return total


# ----------------------------------------------------------------------------
# chains


def chain_balanced_schedule(M: int, m: int, d: int) -> list[list[int]]:
    """Helpers split evenly around target ``m`` (0-based), outermost first.

    With odd ``d`` the extra helper sits on the side farther from the chain
    end. When one side runs out of sub-blocks the rest go to the other side.
    """
    if not 0 <= m < M:
        raise ScheduleError(f"target {m} outside chain of length {M}")
    if d < 0 or d > M - 1:
        raise ScheduleError(f"need 0 <= d <= {M - 1}, got d={d}")
    room_l, room_r = m, M - 1 - m
    n_l = n_r = d // 2
    if d % 2:
        if room_r >= room_l:
            n_r += 1
        else:
            n_l += 1
    if n_l > room_l:
        n_r += n_l - room_l
        n_l = room_l
    if n_r > room_r:
        n_l += n_r - room_r
        n_r = room_r
    depth = max(n_l, n_r)
    steps = []
    for k in range(depth, 0, -1):
        step = []
        if k <= n_l:
            step.append(m - k)
        if k <= n_r:
            step.append(m + k)
        steps.append(step)
    return steps


def sg_threshold(
    G: CoupledProtograph,
    m: int,
    d: int,
    schedule: Sequence[Sequence[int]] | None = None,
    cfg: DEConfig = DEConfig(),
) -> float:
    """Semi-global threshold of target ``m`` (0-based) with ``d`` helpers."""
    steps = chain_balanced_schedule(G.M, m, d) if schedule is None else schedule
    if sum(len(s) for s in steps) != d:
        raise ScheduleError(f"schedule holds {sum(len(s) for s in steps)} helpers, expected {d}")
    return schedule_threshold(G, steps, m, cfg)


def _coupling_cn(G: CoupledProtograph, m: int, side: str, i: int) -> int | None:
    """Check linking sub-block ``m`` to its neighbour through coupling row ``i``.

    ``side`` is ``"left"`` or ``"right"``; rows are 0-based. Returns ``None``
    when the check is a terminating local check or absent.
    """
    block_row = m if side == "left" else m + 1
    c = G.find_cn(block_row, i)
    if c is None or len(G.all_cn_members()[c]) < 2:
        return None
    return c


def _chain_t(G: CoupledProtograph) -> int:
    if G.params is None or G.params.T != 1:
        raise ConstructionError("this operation needs a memory-one chain built by build_scldpcl")
    return G.params.t


def target_pass(
    G: CoupledProtograph,
    m: int,
    delta_l: Sequence[float],
    delta_r: Sequence[float],
    eps: float,
    cfg: DEConfig = DEConfig(),
    record: bool = False,
) -> PassResult:
    """Decode sub-block ``m`` of a chain with given incoming erasure vectors."""
    t = _chain_t(G)
    if len(delta_l) != t or len(delta_r) != t:
        raise ValueError(f"incoming vectors must have length t={t}")
    inj = {}
    for i in range(t):
        for side, vec in (("left", delta_l), ("right", delta_r)):
            c = _coupling_cn(G, m, side, i)
            if c is not None:
                inj[c] = float(vec[i])
    return sb_pass(G, m, inj, eps, cfg, target=True, record=record)


@dataclass
class HelperResult:
    success: bool
    delta_out: np.ndarray
    pass_result: PassResult


def helper_pass(
    G: CoupledProtograph,
    m: int,
    incoming: Mapping[str, Sequence[float]],
    eps: float,
    cfg: DEConfig = DEConfig(),
    record: bool = False,
) -> HelperResult:
    """Decode chain helper ``m`` and return its outgoing erasure vector.

    ``incoming`` names exactly one side (``"left"`` or ``"right"``) with a
    length-``t`` vector, or is empty. The outgoing side is the other one
    (``"left"`` when nothing comes in).
    """
    t = _chain_t(G)
    if len(incoming) > 1:
        raise ValueError("a helper receives messages from one side only")
    side_in = next(iter(incoming), "right")
    side_out = "left" if side_in == "right" else "right"
    inj = {}
    for side, vec in incoming.items():
        if len(vec) != t:
            raise ValueError(f"incoming vector must have length t={t}")
        for i in range(t):
            c = _coupling_cn(G, m, side, i)
            if c is not None:
                inj[c] = float(vec[i])
    pr = sb_pass(G, m, inj, eps, cfg, target=False, record=record)
    out = np.ones(t)
    for i in range(t):
        c = _coupling_cn(G, m, side_out, i)
        if c is not None:
            out[i] = pr.delta_out(c)
    return HelperResult(pr.success, out, pr)


def epsilon_star_target(
    G: CoupledProtograph,
    m: int,
    delta_l: Sequence[float],
    delta_r: Sequence[float],
    cfg: DEConfig = DEConfig(),
) -> float:
    """Target threshold for fixed incoming erasure vectors."""
    return bisect_threshold(lambda e: target_pass(G, m, delta_l, delta_r, e, cfg).success, cfg)


@lru_cache(maxsize=32)
def _reference_chain(l: int, r: int, t: int) -> CoupledProtograph:
    return build_scldpcl(l, r, t, 3)


def _check_symmetric(l: int, r: int, t: int) -> None:
    if r % (t + 1):
        raise ConstructionError(
            f"(t+1) must divide r for left and right helpers to coincide; got r={r}, t={t}"
        )


def delta_fn(
    params: tuple[int, int, int],
    eps: float,
    delta_in: Sequence[float],
    cfg: DEConfig = DEConfig(),
    side: str = "right",
) -> np.ndarray:
    """Outgoing erasure vector of an inner helper.

    ``side`` says where the helper sits relative to the target. A right
    helper's output feeds the target's right coupling checks; a left
    helper's output feeds the left ones.
    """
    l, r, t = params
    _check_symmetric(l, r, t)
    G = _reference_chain(l, r, t)
    if side not in ("left", "right"):
        raise ValueError("side must be 'left' or 'right'")
    return helper_pass(G, 1, {side: list(delta_in)}, eps, cfg).delta_out


def delta_k(
    params: tuple[int, int, int],
    eps_list: Sequence[float],
    delta_in: Sequence[float],
    cfg: DEConfig = DEConfig(),
    side: str = "right",
) -> np.ndarray:
    """Chained helpers: ``eps_list[-1]`` is decoded first (farthest from the target)."""
    if not len(eps_list):
        raise ValueError("eps_list must not be empty")
    delta = np.asarray(delta_in, dtype=np.float64)
    for e in reversed(list(eps_list)):
        delta = delta_fn(params, e, delta, cfg, side)
    return delta


def epsilon_star(
    params: tuple[int, int, int],
    delta_1: Sequence[float],
    delta_2: Sequence[float],
    cfg: DEConfig = DEConfig(),
) -> float:
    """Inner target threshold with left input ``delta_1`` and right input ``delta_2``."""
    l, r, t = params
    return epsilon_star_target(_reference_chain(l, r, t), 1, delta_1, delta_2, cfg)


# ----------------------------------------------------------------------------
# complexity


@dataclass(frozen=True)
class Complexity:
    chi_g: float
    chi_sg: float
    reduction: float


def sg_complexity(l: int, r: int, t: int, M: int, d: int) -> Complexity:
    """Edge-count complexity of global versus semi-global decoding."""
    if r % (t + 1):
        raise ConstructionError(f"(t+1) must divide r, got r={r}, t={t}")
    chi_g = M * l * r
    chi_sg = d * (l * r - r * t / 2) + l * r
    reduction = 1 - (d * (l - t / 2) + l) / (M * l)
    return Complexity(float(chi_g), float(chi_sg), float(reduction))


# ----------------------------------------------------------------------------
# labels and the t = 1 reduction


@dataclass(frozen=True)
class SGLabeling:
    """Node and edge labels of a chain sub-block seen as a target.

    VN ``j`` (0-based) is labelled ``k`` when it meets ``k - 1`` right
    coupling checks. Edge labels follow the offsets ``s_k`` and ``v_k``.
    """

    l: int
    r: int
    t: int
    vn_labels: np.ndarray

    @property
    def w(self) -> int:
        return self.r // (self.t + 1)

    def s(self, k: int) -> int:
        return self.t + 1 + (k - 1) * (k - 2) // 2

    def v(self, k: int) -> int:
        t = self.t
        return 2 * t + 1 + t * (t - 1) // 2 + (k - 1) * (2 * t - k) // 2

    def edge_label(self, j: int, kind: str, i: int = 0) -> int:
        """Label of the edge between VN ``j`` and a check.

        ``kind`` is ``"local"``, ``"right"`` or ``"left"``; ``i`` is the
        1-based coupling row for the latter two.
        """
        k = int(self.vn_labels[j])
        if kind == "local":
            return k
        if kind == "right":
            return self.s(k) + i
        if kind == "left":
            return self.v(k) + i
        raise ValueError(f"unknown check kind {kind!r}")


def sg_labeling(l: int, r: int, t: int) -> SGLabeling:
    w = r // (t + 1)
    j = np.arange(1, r + 1)
    n_right = np.array([sum(1 for i in range(1, t + 1) if jj > i * w) for jj in j])
    return SGLabeling(l, r, t, n_right + 1)


def strand_labels(G: CoupledProtograph, pr: PassResult) -> np.ndarray:
    """Edge label of every strand of a chain target pass (see :func:`sg_labeling`)."""
    p = G.params
    if p is None:
        raise ConstructionError("labels need construction parameters")
    lab = sg_labeling(p.l, p.r, p.t)
    m = pr.sub_block
    kinds = {}
    for i in range(p.t):
        for side in ("left", "right"):
            c = _coupling_cn(G, m, side, i)
            if c is not None:
                kinds[c] = (side, i + 1)
    st = pr.de.strands
    out = np.empty(st.num_strands, dtype=np.int64)
    for e in range(st.num_strands):
        c = int(pr.rows[st.strand_cn[e]])
        j = int(st.strand_vn[e])
        if c in kinds:
            out[e] = lab.edge_label(j, *kinds[c])
        else:
            out[e] = lab.edge_label(j, "local")
    return out


def t1_step(l: int, r: int, eps: float, delta_l: float, delta_r: float, x: np.ndarray) -> np.ndarray:
    """One iteration of the four-label ``t = 1`` recursion.

    ``x = (x1, x2, x3, x4)``: local edges of left-group and right-group VNs,
    then the right-group edge into the right coupling check and the
    left-group edge into the left coupling check.
    """
    w = r // 2
    x1, x2, x3, x4 = x
    lc1 = 1.0 - (1.0 - x1) ** (w - 1) * (1.0 - x2) ** (r - w)
    lc2 = 1.0 - (1.0 - x1) ** w * (1.0 - x2) ** (r - w - 1)
    cl = 1.0 - (1.0 - x4) ** (w - 1) * (1.0 - delta_l)
    cr = 1.0 - (1.0 - x3) ** (r - w - 1) * (1.0 - delta_r)
    return np.array([
        eps * lc1 ** (l - 2) * cl,
        eps * lc2 ** (l - 2) * cr,
        eps * lc2 ** (l - 1),
        eps * lc1 ** (l - 1),
    ])


def t1_iterate(
    l: int, r: int, eps: float, delta_l: float, delta_r: float,
    max_iters: int = 100000, tol: float = 1e-14,
) -> np.ndarray:
    """Trajectory of the ``t = 1`` recursion from ``x = 1``, shape ``(iters + 1, 4)``."""
    xs = [np.ones(4)]
    for _ in range(max_iters):
        nxt = t1_step(l, r, eps, delta_l, delta_r, xs[-1])
        xs.append(nxt)
        if np.max(np.abs(nxt - xs[-2])) < tol:
            break
    return np.array(xs)


def t1_delta_out(l: int, r: int, eps: float, x1: float) -> float:
    """Outgoing erasure of a ``t = 1`` helper from its converged ``x1``."""
    if eps == 0.0:
        return 0.0
    return 1.0 - (1.0 - eps * (x1 / eps) ** ((l - 1) / (l - 2))) ** (r // 2)


@dataclass
class T1Curves:
    grid: np.ndarray
    f: np.ndarray
    g: np.ndarray
    limit: tuple[float, float]
    trajectory: np.ndarray


def t1_curves(
    l: int, r: int, eps: float, delta_l: float, delta_r: float, resolution: int = 101
) -> T1Curves:
    """Fixed-point maps ``f``, ``g`` on a square grid plus the iteration limit.

    ``f[i, j]`` is the new ``x1`` and ``g[i, j]`` the new ``x2`` when
    ``x1 = grid[i]`` and ``x2 = grid[j]`` are held on every edge type.
    """
    grid = np.linspace(0.0, 1.0, resolution)
    X1, X2 = np.meshgrid(grid, grid, indexing="ij")
    w = r // 2
    lc1 = 1.0 - (1.0 - X1) ** (w - 1) * (1.0 - X2) ** (r - w)
    lc2 = 1.0 - (1.0 - X1) ** w * (1.0 - X2) ** (r - w - 1)
    x4 = eps * lc1 ** (l - 1)
    x3 = eps * lc2 ** (l - 1)
    f = eps * lc1 ** (l - 2) * (1.0 - (1.0 - x4) ** (w - 1) * (1.0 - delta_l))
    g = eps * lc2 ** (l - 2) * (1.0 - (1.0 - x3) ** (r - w - 1) * (1.0 - delta_r))
    traj = t1_iterate(l, r, eps, delta_l, delta_r)
    return T1Curves(grid, f, g, (float(traj[-1, 0]), float(traj[-1, 1])), traj)
