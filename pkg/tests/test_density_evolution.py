from __future__ import annotations

import numpy as np
import pytest

from scldpcl.density_evolution import (
    DEConfig,
    MonotonicityError,
    StrandGraph,
    bisect_threshold,
    bp_threshold,
    de_run,
    local_thresholds,
    regular_scalar_de,
    threshold_sandwich_check,
)
from scldpcl.protograph import build_scldpcl, cutting_vector_protograph


def _scalar_threshold(l: int, r: int) -> float:
    """Bisection on the scalar recursion, independent of the strand engine."""
    lo, hi = 0.0, 1.0
    for _ in range(40):
        mid = (lo + hi) / 2
        x = mid
        for _ in range(20000):
            x = mid * (1 - (1 - x) ** (r - 1)) ** (l - 1)
        lo, hi = (mid, hi) if x < 1e-9 else (lo, mid)
    return lo


def test_config_validation():
    with pytest.raises(ValueError):
        DEConfig(max_iters=0)
    with pytest.raises(ValueError):
        DEConfig(fixed_point_iters=0)


def test_strand_graph_counts_multi_edges():
    sg = StrandGraph.from_adjacency(np.array([[2, 1], [0, 1]]))
    assert sg.num_strands == 4
    np.testing.assert_array_equal(np.diff(sg.vn_ptr), [2, 2])


@pytest.mark.parametrize("l,r", [(3, 6), (4, 8), (3, 4)])
def test_all_ones_protograph_matches_scalar_recursion(l, r):
    H = np.ones((l, r), dtype=np.int64)
    eps = 0.35
    res = de_run(H, eps, cfg=DEConfig(max_iters=100000), stop_on_floor=False)
    x_star = regular_scalar_de(l, r, eps)
    # VN output of the scalar fixed point
    p_star = eps * (1 - (1 - x_star) ** (r - 1)) ** l
    assert res.p.max() == pytest.approx(p_star, abs=1e-9)


def test_regular_threshold_against_independent_bisection():
    want = _scalar_threshold(3, 6)
    assert want == pytest.approx(0.4294, abs=2e-4)
    got = bp_threshold(np.ones((3, 6), dtype=np.int64), cfg=DEConfig(max_iters=100000))
    assert got == pytest.approx(want, abs=2e-4)


def test_threshold_bisection_protocol():
    # always-successful and never-successful predicates pin the ends
    assert bisect_threshold(lambda e: True) == 1.0
    assert bisect_threshold(lambda e: False) == 0.0
    assert bisect_threshold(lambda e: e < 0.3) == pytest.approx(0.3, abs=2e-4)


def test_success_and_floor():
    H = np.ones((3, 6), dtype=np.int64)
    assert de_run(H, 0.3).success
    assert not de_run(H, 0.5).success


def test_boundary_injection_and_inactive_vns():
    G = build_scldpcl(3, 6, 1, 3)
    H = G.adjacency
    full = de_run(H, 0.45)
    # erasing sub-block 0 outright can only hurt sub-block 1
    part = de_run(H, 0.45, active_vns=np.concatenate(G.sub_blocks[1:]))
    assert part.p[G.sub_blocks[1]].max() >= full.p[G.sub_blocks[1]].max() - 1e-12
    # delta = 1 on every check is the same as having no checks
    all_dead = de_run(H, 0.2, boundary={c: 1.0 for c in range(H.shape[0])}, stop_on_floor=False)
    np.testing.assert_allclose(all_dead.p, 0.2)


def test_record_is_monotone():
    res = de_run(build_scldpcl(4, 8, 1, 4).adjacency, 0.45, record=True)
    xs = np.array(res.history)
    assert (np.diff(xs, axis=0) <= 1e-15).all()
    assert res.monotone


def test_monotonicity_guard():
    with pytest.raises(ValueError):
        de_run(np.ones((3, 6)), 1.5)
    assert MonotonicityError.__mro__[1] is RuntimeError


def test_local_thresholds_symmetric():
    th = local_thresholds(build_scldpcl(3, 6, 1, 3))
    assert th[0] == pytest.approx(th[2], abs=1e-12)
    assert th[1] < th[0]


@pytest.mark.parametrize("p", [2, 3, 4])
def test_cutting_vector_graph_has_zero_threshold(p):
    H = cutting_vector_protograph(p)
    # the fixed point is positive but of order eps**k, so a zero threshold
    # only shows once the floor sits near underflow
    assert bp_threshold(H, cfg=DEConfig(erasure_floor=1e-250)) < 1e-3
    for eps in (1e-3, 0.05, 0.3):
        res = de_run(H, eps, cfg=DEConfig(max_iters=100000), stop_on_floor=False)
        assert res.p.min() > 0.0


def test_tiny_messages_keep_precision():
    # 1 - (1 - x)**2 for x = 1e-20 underflows in naive arithmetic
    res = de_run(np.ones((1, 3), dtype=np.int64), 1e-20, stop_on_floor=False)
    assert res.p[0] == pytest.approx(2e-40, rel=1e-12)


def test_sandwich_on_small_graph():
    H = build_scldpcl(3, 6, 1, 3).adjacency
    res = threshold_sandwich_check(H, range(0, 8), range(0, 12))
    assert res.holds
    with pytest.raises(ValueError):
        threshold_sandwich_check(H, [], [0])
