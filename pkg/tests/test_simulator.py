from __future__ import annotations

import numpy as np
import pytest

from scldpcl.protograph import build_scldpcl
from scldpcl.simulator import (
    CSV_FIELDS,
    Mode,
    SimulationError,
    TrialConfig,
    config_dict,
    decode,
    lift,
    monte_carlo,
    stats_to_csv,
    stats_to_json,
    trial_pattern,
)
from scldpcl.varying_channel import ChannelCdf


@pytest.fixture(scope="module")
def small():
    return lift(build_scldpcl(4, 8, 1, 5), 40, seed=2)


def test_lift_preserves_degrees(small):
    G = build_scldpcl(4, 8, 1, 5)
    assert small.num_vns == 40 * G.graph.num_vns
    assert (small.vn_degrees() == 4).all()
    np.testing.assert_array_equal(
        np.sort(small.cn_degrees()), np.sort(np.repeat(G.adjacency.sum(axis=1), 40))
    )


def test_lift_is_seeded():
    G = build_scldpcl(3, 6, 1, 3)
    a, b, c = lift(G, 20, 1), lift(G, 20, 1), lift(G, 20, 2)
    np.testing.assert_array_equal(a.cn_adj, b.cn_adj)
    assert not np.array_equal(a.cn_adj, c.cn_adj)


def test_no_erasures_is_success(small):
    res = decode(small, np.zeros(small.num_vns, bool), Mode.global_())
    assert res.success and res.resolved == 0


def test_all_erased_fails(small):
    res = decode(small, np.ones(small.num_vns, bool), Mode.global_())
    assert not res.success and res.unresolved == small.num_vns


def test_single_erasure_resolves(small):
    e = np.zeros(small.num_vns, bool)
    e[17] = True
    for mode in (Mode.global_(), Mode.local(0)):
        assert decode(small, e, mode).success


def test_local_mode_only_judges_target(small):
    e = np.zeros(small.num_vns, bool)
    e[small.vn_sub_block == 3] = True
    assert decode(small, e, Mode.local(0)).success
    assert not decode(small, e, Mode.local(3)).success


def test_semiglobal_needs_valid_helpers(small):
    e = np.zeros(small.num_vns, bool)
    with pytest.raises(SimulationError):
        decode(small, e, Mode.semiglobal(2, [[2]]))
    with pytest.raises(SimulationError):
        decode(small, e[:-1], Mode.global_())


def test_trial_patterns_depend_only_on_seed_and_index(small):
    cfg = TrialConfig(40, 0.3, Mode.global_(), 10, seed=5)
    np.testing.assert_array_equal(trial_pattern(small, cfg, 3), trial_pattern(small, cfg, 3))
    assert not np.array_equal(trial_pattern(small, cfg, 3), trial_pattern(small, cfg, 4))


def test_varying_channel_trials(small):
    cfg = TrialConfig(40, ChannelCdf.uniform(0.0, 0.2), Mode.global_(), 6, seed=1)
    st = monte_carlo(small, cfg)
    assert st.epsilon is None
    assert config_dict(cfg)["channel"] == {"kind": "uniform", "a": 0.0, "b": 0.2}


def test_monte_carlo_independent_of_jobs(small):
    cfg = TrialConfig(40, 0.45, Mode.local(2), 12, seed=7)
    a = monte_carlo(small, cfg, jobs=1)
    b = monte_carlo(small, cfg, jobs=3)
    assert (a.bit_errors, a.frame_errors) == (b.bit_errors, b.frame_errors)
    np.testing.assert_array_equal(a.erasures_per_trial, b.erasures_per_trial)


def test_stats_outputs(small):
    st = monte_carlo(small, TrialConfig(40, 0.4, Mode.global_(), 5, seed=3))
    lines = stats_to_csv([st]).splitlines()
    assert lines[0].split(",") == list(CSV_FIELDS)
    lo, hi = st.ber_interval()
    assert lo <= st.ber <= hi
    assert '"trials": 5' in stats_to_json([st])


def test_config_validation():
    with pytest.raises(SimulationError):
        TrialConfig(0, 0.3, Mode.global_(), 5)
    with pytest.raises(SimulationError):
        TrialConfig(10, 1.3, Mode.global_(), 5)
