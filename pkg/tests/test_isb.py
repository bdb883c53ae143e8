from __future__ import annotations

import pytest

from scldpcl.isb import build_isb, check_schedule, evaluate_schedule, isb_to_dict, make_schedule, schedule_from_dict
from scldpcl.protograph import build_generalized, build_scldpcl, make_grid_partition, make_hyper_partition
from scldpcl.semi_global import ScheduleError, sg_threshold


def test_chain_isb_is_a_path():
    g = build_isb(build_scldpcl(4, 8, 2, 6))
    assert g.simple_edges() == {frozenset({m, m + 1}) for m in range(5)}
    assert [g.degree(m) for m in range(6)] == [1, 2, 2, 2, 2, 1]
    # two coupling rows give each edge multiplicity two
    assert all(len(v) == 2 for v in g.hyperedges.values())


def test_hyper_partition_gives_triples():
    g = build_isb(build_generalized(make_hyper_partition(4, 8, 2, 2), 6))
    assert g.max_edge_size == 3


def test_grid_isb_degrees():
    g = build_isb(build_generalized(make_grid_partition(4, 8, 5), 25))
    assert len(g.simple_edges()) == 44
    assert g.degree(12) == 4


def test_vertical_rings():
    s = make_schedule("vertical", (7, 7), (3, 3), 3)
    assert s.steps == ((3, 45), (10, 38), (17, 31))
    assert s.num_helpers == 6


def test_diamond_counts():
    counts = [make_schedule("diamond", (7, 7), (3, 3), k).num_helpers for k in range(1, 7)]
    assert counts == [4, 12, 24, 36, 44, 48]


def test_cross_counts():
    assert [make_schedule("cross", (7, 7), 24, k).num_helpers for k in (1, 2, 3)] == [4, 8, 12]


def test_chain_balanced_matches_semi_global():
    G = build_scldpcl(4, 8, 1, 9)
    s = make_schedule("chain-balanced", 9, 4, 4)
    assert evaluate_schedule(G, s) == pytest.approx(sg_threshold(G, 4, 4), abs=1e-12)


def test_schedule_errors():
    with pytest.raises(ScheduleError):
        make_schedule("spiral", (7, 7), 0, 1)
    with pytest.raises(ScheduleError):
        make_schedule("vertical", (7, 7), (9, 0), 1)
    with pytest.raises(ScheduleError):
        schedule_from_dict({"target": 0, "steps": 1, "extra": 2}, 5)
    G = build_scldpcl(4, 8, 1, 5)
    with pytest.raises(ScheduleError):
        check_schedule(G, schedule_from_dict({"target": 2, "steps": [[1], [1]]}, 5))


def test_explicit_grid_schedule_from_dict():
    s = schedule_from_dict({"target": [3, 3], "steps": [[17, 31]]}, (7, 7))
    assert s.target == 24 and s.as_lists() == [[17, 31]]


def test_isb_dict_is_sorted():
    d = isb_to_dict(build_isb(build_scldpcl(3, 6, 1, 4)))
    assert [h["members"] for h in d["hyperedges"]] == [[0, 1], [1, 2], [2, 3]]
