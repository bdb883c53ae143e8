"""Success probabilities over a sub-block-varying erasure channel.

Every sub-block sees its own erasure probability ``E``, drawn i.i.d. from a
CDF ``F``. This module evaluates the exact no-helper success probability,
a Monte-Carlo oracle for any even number of helpers, the quantized lower
bound and the cheap two-state recursive bounds.
"""
from __future__ import annotations

import json
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from typing import Any, Callable, Mapping, Sequence

import numpy as np

from . import _rng
from .density_evolution import DEConfig
from .protograph import CoupledProtograph
from .semi_global import (
    _check_symmetric,
    chain_balanced_schedule,
    delta_fn,
    epsilon_star,
    epsilon_star_target,
    run_schedule,
)


class ChannelSpecError(ValueError):
    """A CDF description is malformed or not a distribution on [0, 1]."""


class BudgetError(RuntimeError):
    """The quantized bound would need more terms than allowed."""


# ----------------------------------------------------------------------------
# channel distributions


@dataclass(frozen=True)
class ChannelCdf:
    """CDF of the per-sub-block erasure probability.

    ``kind`` is ``"step"``, ``"uniform"`` or ``"piecewise"``. Piecewise CDFs
    interpolate linearly between ``(x, F(x))`` points; repeating an ``x``
    encodes a jump.
    """

    kind: str
    params: tuple[float, ...]
    points: tuple[tuple[float, float], ...] = ()

    # -- constructors -------------------------------------------------------

    @classmethod
    def step(cls, eps: float) -> "ChannelCdf":
        if not 0.0 <= eps <= 1.0:
            raise ChannelSpecError(f"step location {eps} outside [0, 1]")
        return cls("step", (float(eps),))

    @classmethod
    def uniform(cls, a: float, b: float) -> "ChannelCdf":
        if not 0.0 <= a < b <= 1.0:
            raise ChannelSpecError(f"need 0 <= a < b <= 1, got a={a}, b={b}")
        return cls("uniform", (float(a), float(b)))

    @classmethod
    def piecewise(cls, points: Sequence[Sequence[float]]) -> "ChannelCdf":
        pts = np.asarray(points, dtype=np.float64)
        if pts.ndim != 2 or pts.shape[1] != 2 or len(pts) < 2:
            raise ChannelSpecError("piecewise CDF needs at least two (x, F) pairs")
        xs, fs = pts[:, 0], pts[:, 1]
        if np.any(np.diff(xs) < 0) or np.any(np.diff(fs) < 0):
            raise ChannelSpecError("piecewise points must be non-decreasing in x and F")
        if xs[0] < 0 or xs[-1] > 1 or fs[0] < 0 or not math.isclose(fs[-1], 1.0):
            raise ChannelSpecError("piecewise CDF must live on [0, 1] and end at F = 1")
        return cls("piecewise", (), tuple((float(x), float(f)) for x, f in pts))

    @classmethod
    def from_dict(cls, spec: Mapping[str, Any]) -> "ChannelCdf":
        spec = dict(spec)
        kind = spec.pop("kind", None)
        allowed = {"step": {"eps"}, "uniform": {"a", "b"}, "piecewise": {"points"}}
        if kind not in allowed:
            raise ChannelSpecError(f"unknown channel kind {kind!r}")
        if set(spec) != allowed[kind]:
            raise ChannelSpecError(f"{kind} channel takes keys {sorted(allowed[kind])}, got {sorted(spec)}")
        if kind == "step":
            return cls.step(spec["eps"])
        if kind == "uniform":
            return cls.uniform(spec["a"], spec["b"])
        return cls.piecewise(spec["points"])

    @classmethod
    def from_json(cls, text: str) -> "ChannelCdf":
        try:
            return cls.from_dict(json.loads(text))
        except (json.JSONDecodeError, TypeError) as exc:
            raise ChannelSpecError(str(exc)) from exc

    def to_dict(self) -> dict[str, Any]:
        if self.kind == "step":
            return {"kind": "step", "eps": self.params[0]}
        if self.kind == "uniform":
            return {"kind": "uniform", "a": self.params[0], "b": self.params[1]}
        return {"kind": "piecewise", "points": [list(p) for p in self.points]}

    # -- evaluation ---------------------------------------------------------

    def __call__(self, x: float | np.ndarray) -> float | np.ndarray:
        """``F(x) = Pr(E <= x)``."""
        x = np.asarray(x, dtype=np.float64)
        if self.kind == "step":
            out = (x >= self.params[0]).astype(np.float64)
        elif self.kind == "uniform":
            a, b = self.params
            out = np.clip((x - a) / (b - a), 0.0, 1.0)
        else:
            xs, fs = np.array(self.points).T
            # rightmost point at each x so jumps are right-continuous
            idx = np.searchsorted(xs, x, side="right")
            out = np.where(idx == 0, 0.0, np.interp(x, xs, fs))
            at = np.isin(x, xs)
            if np.any(at):
                last = {xv: fv for xv, fv in zip(xs, fs)}
                out = np.where(at, np.vectorize(lambda v: last.get(float(v), 0.0))(x), out)
            out = np.where(x >= xs[-1], 1.0, out)
        return float(out) if out.ndim == 0 else out

    def below(self, x: float) -> float:
        """``Pr(E < x)``, the left limit of ``F``."""
        if self.kind == "step":
            return 1.0 if self.params[0] < x else 0.0
        if self.kind == "uniform":
            return float(self(x))
        return float(self(np.nextafter(x, -np.inf)))

    def sample(self, rng: np.random.Generator, size: int | tuple[int, ...]) -> np.ndarray:
        u = rng.random(size)
        if self.kind == "step":
            return np.full(u.shape, self.params[0])
        if self.kind == "uniform":
            a, b = self.params
            return a + (b - a) * u
        xs, fs = np.array(self.points).T
        # generalized inverse: smallest x with F(x) >= u
        idx = np.searchsorted(fs, u, side="left")
        idx = np.clip(idx, 1, len(xs) - 1)
        f0, f1 = fs[idx - 1], fs[idx]
        x0, x1 = xs[idx - 1], xs[idx]
        frac = np.where(f1 > f0, (u - f0) / np.where(f1 > f0, f1 - f0, 1.0), 1.0)
        return x0 + frac * (x1 - x0)


# ----------------------------------------------------------------------------
# exact and sampled success probabilities


def p0_exact(
    F: ChannelCdf,
    G: CoupledProtograph,
    m: int,
    delta_1: Sequence[float],
    delta_2: Sequence[float],
    cfg: DEConfig = DEConfig(),
) -> float:
    """Success probability of sub-block ``m`` with no helpers and fixed inputs."""
    return F.below(epsilon_star_target(G, m, delta_1, delta_2, cfg))


@dataclass(frozen=True)
class MCEstimate:
    estimate: float
    std_error: float
    trials: int
    successes: int


def _mc_chunk(args: tuple) -> int:
    G, m, steps, F, seed, lo, hi, cfg = args
    wins = 0
    for k in range(lo, hi):
        eps = F.sample(_rng.stream(seed, _rng.CHANNEL, k), G.M)
        wins += run_schedule(G, steps, m, eps, cfg).success
    return wins


def mc_success_prob(
    G: CoupledProtograph,
    m: int,
    d: int,
    F: ChannelCdf,
    trials: int,
    seed: int = 0,
    cfg: DEConfig = DEConfig(),
    jobs: int = 1,
) -> MCEstimate:
    """Monte-Carlo estimate of semi-global success with ``d`` balanced helpers.

    Each trial draws one erasure probability per sub-block from ``F`` and
    runs the deterministic helper schedule followed by the target pass.
    Trial ``k`` always uses the same random stream.
    """
    if d % 2:
        raise ValueError("d must be even")
    if trials < 1:
        raise ValueError("trials must be positive")
    steps = chain_balanced_schedule(G.M, m, d)
    bounds = np.linspace(0, trials, max(1, min(jobs, trials)) + 1).astype(int)
    chunks = [(G, m, steps, F, seed, lo, hi, cfg) for lo, hi in zip(bounds[:-1], bounds[1:])]
    if jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            wins = sum(pool.map(_mc_chunk, chunks))
    else:
        wins = sum(map(_mc_chunk, chunks))
    est = wins / trials
    return MCEstimate(est, math.sqrt(est * (1 - est) / trials), trials, int(wins))


# ----------------------------------------------------------------------------
# quantized bound


@dataclass(frozen=True)
class QuantizationPartition:
    points: tuple[float, ...]

    def __post_init__(self) -> None:
        e = np.asarray(self.points)
        if e.size < 2 or e[0] != 0.0 or e[-1] != 1.0 or np.any(np.diff(e) <= 0):
            raise ValueError("partition must increase strictly from 0 to 1")

    @property
    def K(self) -> int:
        return len(self.points) - 1

    @classmethod
    def uniform(cls, K: int) -> "QuantizationPartition":
        return cls(tuple(np.linspace(0.0, 1.0, K + 1)))


def default_partition(K: int, eps_l: float, eps_s: float) -> QuantizationPartition:
    """Grid with ``eps_l`` and ``eps_s`` as points.

    ``[0, eps_l]`` is one cell, ``(eps_l, eps_s)`` is split into
    ``K // 2`` equal cells and ``(eps_s, 1)`` takes the remaining ones.
    """
    if K < 4:
        raise ValueError("K must be at least 4")
    if not 0.0 < eps_l <= eps_s < 1.0:
        raise ValueError(f"need 0 < eps_l <= eps_s < 1, got {eps_l}, {eps_s}")
    n_mid = K // 2 if eps_s > eps_l else 0
    n_top = K - 1 - n_mid
    mid = np.linspace(eps_l, eps_s, n_mid + 1) if n_mid else np.array([eps_s])
    top = np.linspace(eps_s, 1.0, n_top + 1)
    return QuantizationPartition(tuple(np.concatenate([[0.0], mid, top[1:]])))


def _delta_table(
    params: tuple[int, int, int],
    e: np.ndarray,
    cells: Sequence[int],
    depth: int,
    delta_in: tuple[float, ...],
    side: str,
    cfg: DEConfig,
) -> dict[tuple[int, ...], tuple[float, ...]]:
    """Outputs of helper chains keyed by grid indices, nearest helper first.

    A key ``(i_1, .., i_k)`` means the helper next to the target used
    ``e[i_1]`` and the farthest used ``e[i_k]``; prefixes from the far end
    are shared across keys.
    """
    out: dict[tuple[int, ...], tuple[float, ...]] = {}
    frontier: dict[tuple[int, ...], tuple[float, ...]] = {(): delta_in}
    for _ in range(depth):
        nxt = {}
        for far, vec in frontier.items():
            for i in cells:
                nxt[(i,) + far] = tuple(delta_fn(params, float(e[i]), vec, cfg, side))
        frontier = nxt
    out.update(frontier)
    return out


def quantized_lower_bound(
    params: tuple[int, int, int],
    F: ChannelCdf,
    partition: QuantizationPartition,
    j: int,
    delta_1: Sequence[float] | None = None,
    delta_2: Sequence[float] | None = None,
    cfg: DEConfig = DEConfig(),
    budget: int = 10**6,
) -> float:
    """Lower bound on balanced success with ``j`` helpers by quantizing ``E``.

    Every helper whose channel falls in a cell ``(e_{i-1}, e_i]`` is replaced
    by the worse channel ``e_i``. Cells with no probability mass are
    skipped, and helper outputs are tabulated once per side.
    """
    l, r, t = params
    _check_symmetric(l, r, t)
    if j < 0 or j % 2:
        raise ValueError("j must be even and non-negative")
    d1 = tuple(float(v) for v in (delta_1 if delta_1 is not None else [1.0] * t))
    d2 = tuple(float(v) for v in (delta_2 if delta_2 is not None else [1.0] * t))
    e = np.asarray(partition.points)
    mass = np.diff(F(e))
    mass[0] = F(e[1])
    cells = [i + 1 for i in range(partition.K) if mass[i] > 0]
    half = j // 2
    if len(cells) ** j > budget:
        raise BudgetError(f"{len(cells)}^{j} terms exceed the budget of {budget}")
    if half == 0:
        return F.below(epsilon_star(params, d1, d2, cfg))
    left = _delta_table(params, e, cells, half, d1, "left", cfg)
    right = _delta_table(params, e, cells, half, d2, "right", cfg)
    weight = {i: float(mass[i - 1]) for i in cells}
    cache: dict[tuple, float] = {}
    total = 0.0
    for kl, vl in left.items():
        wl = math.prod(weight[i] for i in kl)
        for kr, vr in right.items():
            w = wl * math.prod(weight[i] for i in kr)
            key = (vl, vr)
            if key not in cache:
                cache[key] = F.below(epsilon_star(params, vl, vr, cfg))
            total += w * cache[key]
    return total


# ----------------------------------------------------------------------------
# two-state bounds


@dataclass(frozen=True)
class ExtremeProbs:
    """Success probabilities with both, one or no sides erased."""

    p_l: float
    p_s: float
    p_d: float
    eps_l: float = float("nan")
    eps_s: float = float("nan")
    eps_d: float = float("nan")

    def __post_init__(self) -> None:
        for v in (self.p_l, self.p_s, self.p_d):
            if not 0.0 <= v <= 1.0:
                raise ValueError("probabilities must lie in [0, 1]")


def extreme_probs(G: CoupledProtograph, m: int, F: ChannelCdf, cfg: DEConfig = DEConfig()) -> ExtremeProbs:
    t = G.params.t if G.params is not None else 0
    one, zero = [1.0] * t, [0.0] * t
    eps_l = epsilon_star_target(G, m, one, one, cfg)
    eps_s = epsilon_star_target(G, m, one, zero, cfg)
    eps_d = epsilon_star_target(G, m, zero, zero, cfg)
    return ExtremeProbs(F.below(eps_l), F.below(eps_s), F.below(eps_d), eps_l, eps_s, eps_d)


def one_sided_lower_bound(
    extremes: ExtremeProbs,
    j: int,
    delta_zero: bool = False,
    anchors: Sequence[float] = (),
) -> float:
    """Lower bound on success with ``j`` helpers all on one side.

    The target succeeds with probability at least ``p_s`` when its helper
    neighbour fully decoded and at least ``p_l`` otherwise; the neighbour
    in turn is a one-sided target with ``j - 1`` helpers. ``anchors[k]``,
    when given, replaces the recursion's value at ``k`` helpers by a
    sharper bound computed elsewhere. ``delta_zero`` means the farthest
    helper receives perfect knowledge instead of erasures.
    """
    if j < 0:
        raise ValueError("j must be non-negative")
    p = extremes.p_s if delta_zero else extremes.p_l
    for k in range(1, j + 1):
        p = extremes.p_s * p + extremes.p_l * (1.0 - p)
        if k < len(anchors):
            p = max(p, anchors[k])
    if j == 0 and anchors:
        p = max(p, anchors[0])
    return float(p)


def _rec2(ex: ExtremeProbs, q1: float, q2: float) -> float:
    return (
        ex.p_l * (1 - q1) * (1 - q2)
        + ex.p_s * (q2 * (1 - q1) + q1 * (1 - q2))
        + ex.p_d * q1 * q2
    )


def recursive_lower_bound(
    extremes: ExtremeProbs,
    j: int,
    p2: float | None = None,
    one_sided: Callable[[int, bool], float] | None = None,
) -> float:
    """Balanced lower bound on success with ``j`` helpers and erased far inputs.

    ``p2`` optionally replaces the two-helper value by a sharper bound
    (such as the quantized one); ``one_sided(k, delta_zero)`` supplies the
    one-sided terms and defaults to :func:`one_sided_lower_bound`.
    """
    if j < 0 or j % 2:
        raise ValueError("j must be even and non-negative")
    ex = extremes
    hat = one_sided or (lambda k, z: one_sided_lower_bound(ex, k, z))

    def side_probs(k: int) -> tuple[float, float, float]:
        """Bounds on p_k(0,0), p_k(1,0), p_k(1,1) for balanced ``k``."""
        if k == 0:
            return ex.p_d, ex.p_s, ex.p_l
        h = k // 2 - 1
        z, o = hat(h, True), hat(h, False)
        return _rec2(ex, z, z), _rec2(ex, o, z), _rec2(ex, o, o)

    p = ex.p_l
    for k in range(2, j + 1, 2):
        p00, p10, _ = side_probs(k - 2)
        p = ex.p_l**2 * p00 + 2 * ex.p_l * (1 - ex.p_l) * p10 + (1 - ex.p_l) ** 2 * p
        if k == 2 and p2 is not None:
            p = max(p, p2)
    return float(p)


def one_sided_quantized(
    params: tuple[int, int, int],
    F: ChannelCdf,
    partition: QuantizationPartition,
    j: int,
    cfg: DEConfig = DEConfig(),
    budget: int = 10**5,
) -> float:
    """Quantized bound for ``j`` one-sided helpers with erased far input."""
    l, r, t = params
    _check_symmetric(l, r, t)
    e = np.asarray(partition.points)
    mass = np.diff(F(e))
    mass[0] = F(e[1])
    cells = [i + 1 for i in range(partition.K) if mass[i] > 0]
    if len(cells) ** j > budget:
        raise BudgetError(f"{len(cells)}^{j} terms exceed the budget of {budget}")
    ones = tuple([1.0] * t)
    if j == 0:
        return F.below(epsilon_star(params, ones, ones, cfg))
    table = _delta_table(params, e, cells, j, ones, "right", cfg)
    total = 0.0
    for key, vec in table.items():
        w = math.prod(float(mass[i - 1]) for i in key)
        if w > 0:
            total += w * F.below(epsilon_star(params, ones, vec, cfg))
    return total
