from __future__ import annotations

import json

import numpy as np
import pytest
from scipy import stats

from scldpcl.protograph import build_scldpcl
from scldpcl.semi_global import epsilon_star, sg_threshold
from scldpcl.varying_channel import (
    BudgetError,
    ChannelCdf,
    ChannelSpecError,
    ExtremeProbs,
    QuantizationPartition,
    default_partition,
    extreme_probs,
    mc_success_prob,
    one_sided_lower_bound,
    p0_exact,
    quantized_lower_bound,
    recursive_lower_bound,
)


def test_uniform_cdf_values():
    F = ChannelCdf.uniform(0.0, 0.4)
    assert F(0.2) == pytest.approx(0.5)
    assert F(-1.0) == 0.0 and F(0.5) == 1.0
    assert F.below(0.1) == pytest.approx(0.25)


def test_step_cdf_left_limit():
    F = ChannelCdf.step(0.3)
    assert F(0.3) == 1.0
    assert F.below(0.3) == 0.0
    assert F.below(0.30001) == 1.0


def test_piecewise_jump_is_right_continuous():
    F = ChannelCdf.piecewise([(0.0, 0.0), (0.2, 0.0), (0.2, 0.5), (0.6, 1.0)])
    assert F(0.2) == 0.5
    assert F.below(0.2) == pytest.approx(0.0, abs=1e-12)
    assert F(0.4) == pytest.approx(0.75)


@pytest.mark.parametrize(
    "spec",
    [{"kind": "uniform", "a": 0.1, "b": 0.5}, {"kind": "step", "eps": 0.3},
     {"kind": "piecewise", "points": [[0.0, 0.0], [0.5, 0.25], [1.0, 1.0]]}],
)
def test_channel_round_trip(spec):
    F = ChannelCdf.from_dict(spec)
    assert ChannelCdf.from_json(json.dumps(F.to_dict())) == F


@pytest.mark.parametrize(
    "spec",
    ['{"kind": "gauss"}', '{"kind": "uniform", "a": 0.5, "b": 0.1}', '{"kind": "step", "eps": 0.3, "x": 1}',
     '{"kind": "piecewise", "points": [[0, 0], [1, 0.9]]}', "not json"],
)
def test_bad_channel_specs(spec):
    with pytest.raises(ChannelSpecError):
        ChannelCdf.from_json(spec)


def test_sampling_follows_cdf():
    F = ChannelCdf.piecewise([(0.0, 0.0), (0.3, 0.6), (0.5, 1.0)])
    xs = F.sample(np.random.default_rng(3), 20000)
    res = stats.kstest(xs, lambda v: F(np.asarray(v)))
    assert res.pvalue > 1e-3


def test_p0_uniform_is_threshold_over_width():
    G = build_scldpcl(5, 12, 1, 11)
    F = ChannelCdf.uniform(0.0, 0.4)
    eps0 = sg_threshold(G, 5, 0)
    assert p0_exact(F, G, 5, [1.0], [1.0]) == pytest.approx(eps0 / 0.4, abs=1e-3)


def test_step_channel_collapses():
    G = build_scldpcl(5, 12, 1, 11)
    thr = sg_threshold(G, 5, 2)
    for eps0, want in ((thr - 0.01, 1.0), (thr + 0.01, 0.0)):
        F = ChannelCdf.step(eps0)
        mc = mc_success_prob(G, 5, 2, F, trials=20, seed=1)
        assert mc.estimate == want and mc.std_error == 0.0
        part = QuantizationPartition.uniform(40)
        assert quantized_lower_bound((5, 12, 1), F, part, 2) == want


def test_mc_matches_direct_schedule():
    G = build_scldpcl(4, 8, 1, 7)
    F = ChannelCdf.uniform(0.2, 0.5)
    mc = mc_success_prob(G, 3, 2, F, trials=30, seed=9)
    serial = mc_success_prob(G, 3, 2, F, trials=30, seed=9, jobs=2)
    assert mc == serial
    assert 0 <= mc.successes <= 30


def test_default_partition_layout():
    part = default_partition(40, 0.2, 0.3)
    e = np.asarray(part.points)
    assert part.K == 40 and e[0] == 0.0 and e[1] == pytest.approx(0.2)
    assert e[1 + 20] == pytest.approx(0.3)
    with pytest.raises(ValueError):
        default_partition(40, 0.3, 0.2)


def test_quantized_budget():
    with pytest.raises(BudgetError):
        quantized_lower_bound((5, 12, 1), ChannelCdf.uniform(0, 1), QuantizationPartition.uniform(40), 4, budget=100)


def test_two_state_recursions():
    ex = ExtremeProbs(0.4, 0.7, 0.9, 0.2, 0.28, 0.35)
    assert one_sided_lower_bound(ex, 0) == 0.4
    assert one_sided_lower_bound(ex, 0, delta_zero=True) == 0.7
    want = 0.7 * 0.4 + 0.4 * 0.6
    assert one_sided_lower_bound(ex, 1) == pytest.approx(want)
    assert one_sided_lower_bound(ex, 1, anchors=[0.0, 0.9]) == 0.9
    assert recursive_lower_bound(ex, 0) == 0.4
    p2 = 0.16 * 0.9 + 2 * 0.4 * 0.6 * 0.7 + 0.36 * 0.4
    assert recursive_lower_bound(ex, 2) == pytest.approx(p2)
    assert recursive_lower_bound(ex, 2, p2=0.99) == 0.99
    with pytest.raises(ValueError):
        recursive_lower_bound(ex, 3)


def test_extremes_are_ordered():
    G = build_scldpcl(5, 12, 2, 11)
    ex = extreme_probs(G, 5, ChannelCdf.uniform(0.0, 0.4))
    assert ex.eps_l <= ex.eps_s <= ex.eps_d
    assert ex.p_l <= ex.p_s <= ex.p_d
    assert ex.eps_s == pytest.approx(epsilon_star((5, 12, 2), [1.0, 1.0], [0.0, 0.0]), abs=1e-12)
