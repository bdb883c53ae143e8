"""Inter-sub-block hypergraphs and named helper schedules.

The inter-sub-block (ISB) graph has one node per sub-block and one
hyperedge per set of sub-blocks joined by some coupling check. Schedules
list helper sub-blocks in decoding steps, farthest first; all passes in a
step see only the results of earlier steps.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Any, Mapping

import numpy as np

from .density_evolution import DEConfig
from .protograph import CoupledProtograph
from .semi_global import ScheduleError, chain_balanced_schedule, schedule_threshold

KINDS = ("vertical", "cross", "diamond", "chain-balanced")


@dataclass(frozen=True)
class ISBGraph:
    """Hypergraph over sub-blocks.

    ``hyperedges`` maps each member set to the coupling checks that realise
    it, so parallel hyperedges are merged and their multiplicity is
    ``len(checks)``.
    """

    num_nodes: int
    hyperedges: Mapping[frozenset[int], tuple[int, ...]]

    def neighbours(self, m: int) -> set[int]:
        out: set[int] = set()
        for members in self.hyperedges:
            if m in members:
                out |= members
        out.discard(m)
        return out

    def degree(self, m: int) -> int:
        return len(self.neighbours(m))

    def simple_edges(self) -> set[frozenset[int]]:
        return {e for e in self.hyperedges if len(e) == 2}

    @property
    def max_edge_size(self) -> int:
        return max((len(e) for e in self.hyperedges), default=0)


def build_isb(G: CoupledProtograph) -> ISBGraph:
    members = G.all_cn_members()
    edges: dict[frozenset[int], list[int]] = {}
    for c in G.classification().coupling_checks:
        edges.setdefault(members[int(c)], []).append(int(c))
    return ISBGraph(G.M, {k: tuple(v) for k, v in edges.items()})


# ----------------------------------------------------------------------------
# schedules


@dataclass(frozen=True)
class NamedSchedule:
    kind: str
    target: int
    steps: tuple[tuple[int, ...], ...]
    meta: Mapping[str, Any] = field(default_factory=dict)

    @property
    def num_helpers(self) -> int:
        return sum(len(s) for s in self.steps)

    def as_lists(self) -> list[list[int]]:
        return [list(s) for s in self.steps]


def _grid_cells(kind: str, rows: int, cols: int, tr: int, tc: int, k: int) -> list[int]:
    cells = []
    for r in range(rows):
        for c in range(cols):
            dr, dc = abs(r - tr), abs(c - tc)
            if kind == "vertical":
                hit = dc == 0 and dr == k
            elif kind == "cross":
                hit = (dc == 0 and dr == k) or (dr == 0 and dc == k)
            else:
                hit = dr + dc == k
            if hit:
                cells.append(r * cols + c)
    return cells


def make_schedule(
    kind: str,
    dims: int | tuple[int, int],
    target: int | tuple[int, int],
    steps: int,
) -> NamedSchedule:
    """Build a named schedule.

    Parameters
    ----------
    dims
        Chain length for ``"chain-balanced"``; ``(rows, cols)`` of the grid
        otherwise. Grid sub-block ``row * cols + col`` sits at ``(row, col)``
        and vertical neighbours are ``cols`` indices apart.
    target
        Sub-block index, or ``(row, col)`` on a grid.
    steps
        Number of helpers ``d`` for chains. For grids, the radius: helpers
        at distance ``k = steps, ..., 1`` form one step each, in that order.
        Distances are Manhattan; cells outside the grid are skipped.
    """
    if kind not in KINDS:
        raise ScheduleError(f"unknown schedule kind {kind!r}; expected one of {KINDS}")
    if steps < 0:
        raise ScheduleError("steps must be non-negative")
    if kind == "chain-balanced":
        if not isinstance(dims, (int, np.integer)):
            raise ScheduleError("chain-balanced schedules need a chain length")
        if not isinstance(target, (int, np.integer)):
            raise ScheduleError("chain targets are sub-block indices")
        plan = chain_balanced_schedule(int(dims), int(target), steps)
        return NamedSchedule(kind, int(target), tuple(tuple(s) for s in plan), {"M": int(dims)})
    if isinstance(dims, (int, np.integer)) or len(dims) != 2:
        raise ScheduleError(f"{kind} schedules need (rows, cols) grid dimensions")
    rows, cols = (int(v) for v in dims)
    if isinstance(target, (int, np.integer)):
        tr, tc = divmod(int(target), cols)
    else:
        tr, tc = (int(v) for v in target)
    if not (0 <= tr < rows and 0 <= tc < cols):
        raise ScheduleError(f"target ({tr}, {tc}) outside a {rows}x{cols} grid")
    plan = []
    for k in range(steps, 0, -1):
        cells = _grid_cells(kind, rows, cols, tr, tc, k)
        if cells:
            plan.append(tuple(cells))
    meta = {"rows": rows, "cols": cols, "target_cell": (tr, tc), "radius": steps}
    return NamedSchedule(kind, tr * cols + tc, tuple(plan), meta)


def schedule_from_dict(spec: Mapping[str, Any], dims: int | tuple[int, int]) -> NamedSchedule:
    """Parse ``{"kind": ..., "target": ..., "steps": n}`` or ``{"steps": [[..], ..], "target": m}``."""
    spec = dict(spec)
    allowed = {"kind", "target", "steps"}
    if set(spec) - allowed:
        raise ScheduleError(f"unknown schedule keys {sorted(set(spec) - allowed)}")
    if "target" not in spec or "steps" not in spec:
        raise ScheduleError("schedule needs 'target' and 'steps'")
    target = spec["target"]
    if isinstance(spec["steps"], list):
        if isinstance(target, list):
            if isinstance(dims, int):
                raise ScheduleError("grid target given for a chain")
            target = target[0] * dims[1] + target[1]
        plan = tuple(tuple(int(m) for m in s) for s in spec["steps"])
        return NamedSchedule(spec.get("kind", "explicit"), int(target), plan)
    if isinstance(target, list):
        target = tuple(target)
    return make_schedule(spec.get("kind", "chain-balanced"), dims, target, int(spec["steps"]))


def check_schedule(G: CoupledProtograph, schedule: NamedSchedule) -> None:
    """Reject schedules naming unknown or repeated sub-blocks."""
    seen = {schedule.target}
    if not 0 <= schedule.target < G.M:
        raise ScheduleError(f"target {schedule.target} is not a sub-block")
    for step in schedule.steps:
        for m in step:
            if not 0 <= m < G.M:
                raise ScheduleError(f"schedule references unknown sub-block {m}")
            if m in seen:
                raise ScheduleError(f"sub-block {m} scheduled twice")
            seen.add(m)


def evaluate_schedule(G: CoupledProtograph, schedule: NamedSchedule, cfg: DEConfig = DEConfig()) -> float:
    """Semi-global threshold of ``schedule`` under a uniform channel."""
    check_schedule(G, schedule)
    return schedule_threshold(G, schedule.as_lists(), schedule.target, cfg)


def isb_to_dict(g: ISBGraph) -> dict[str, Any]:
    return {
        "nodes": g.num_nodes,
        "hyperedges": [
            {"members": sorted(k), "checks": list(v)}
            for k, v in sorted(g.hyperedges.items(), key=lambda kv: sorted(kv[0]))
        ],
    }
