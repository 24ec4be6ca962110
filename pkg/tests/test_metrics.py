import math

import numpy as np
import pytest

from stageq import (DeterministicPolicy, EPISODE_CSV_HEADER, EpisodeRecord,
                    PolicyValueCache, SwitchTracker, backward_induction,
                    check_optimism, count_switches, episode_regret,
                    make_random_mdp, policy_evaluation, switching_bound,
                    write_episode_csv)


def test_episode_regret_zero_for_optimal_policy():
    mdp = make_random_mdp(3, 2, 4, seed=0)
    tables, pi = backward_induction(mdp)
    for s in range(3):
        assert episode_regret(mdp, tables, pi, s) == pytest.approx(0.0, abs=1e-12)


def test_episode_regret_matches_direct_evaluation():
    mdp = make_random_mdp(3, 2, 4, seed=1)
    tables, _ = backward_induction(mdp)
    gen = np.random.default_rng(0)
    for _ in range(20):
        pol = DeterministicPolicy(gen.integers(0, 2, size=(4, 3)))
        vpi = policy_evaluation(mdp, pol)
        for s in range(3):
            direct = float(tables.V[0, s] - vpi.V[0, s])
            assert episode_regret(mdp, tables, pol, s) == direct
            assert direct >= -1e-12


def test_cache_agrees_with_fresh_evaluation():
    mdp = make_random_mdp(3, 2, 4, seed=2)
    cache = PolicyValueCache(mdp)
    gen = np.random.default_rng(1)
    for _ in range(10):
        acts = gen.integers(0, 2, size=(4, 3))
        got = cache.values(acts.reshape(-1).tolist())
        fresh = policy_evaluation(mdp, DeterministicPolicy(acts))
        assert np.array_equal(got.V, fresh.V)
        assert np.array_equal(got.Q, fresh.Q)
    # same table (as any sequence type) hits the same entry
    acts = [0] * 12
    assert cache.values(acts) is cache.values(tuple(acts))


def test_count_switches():
    assert count_switches([0, 1, 0], [0, 1, 0]) == 0
    assert count_switches([0, 1, 0], [1, 1, 0]) == 1
    assert count_switches([0, 0], [1, 1]) == 2


def test_switch_tracker_accumulates_consecutive_diffs():
    tr = SwitchTracker()
    assert tr.record([0, 0, 0]) == 0
    assert tr.record([0, 1, 0]) == 1
    assert tr.record([0, 1, 0]) == 0
    assert tr.record([1, 0, 0]) == 2
    assert tr.total == 3


def test_switching_bound_frozen_values():
    # S=A=H=2: 4*4*2*2 = 64 prefactor
    assert switching_bound(2, 2, 2, 1600) == pytest.approx(64 * math.log(51.0), rel=1e-12)
    assert switching_bound(2, 2, 2, 32) == pytest.approx(64 * math.log(2.0), rel=1e-12)
    assert switching_bound(2, 2, 2, 0) == 0.0


def test_check_optimism_counts_entries():
    q_star = np.zeros((3, 2, 2))
    q = np.zeros((3, 2, 2))
    assert check_optimism(q, q_star) == 0
    q[1, 0, 1] = -1e-6
    q[2, 1, 0] = -1.0
    assert check_optimism(q, q_star) == 2
    # a boundary row on q_star is sliced away
    q_star_b = np.zeros((4, 2, 2))
    assert check_optimism(q, q_star_b) == 2
    # tolerance keeps tiny dips out
    q2 = np.full((3, 2, 2), -1e-10)
    assert check_optimism(q2, q_star) == 0


def test_episode_record_row_uses_repr_floats():
    rec = EpisodeRecord(k=3, episode_regret=0.1, cum_regret=0.30000000000000004,
                        cum_switching_cost=2, cum_q_updates=7,
                        cum_optimism_violations=0, ref_states_fixed=1)
    assert rec.csv_row() == "3,0.1,0.30000000000000004,2,7,0,1"


def test_write_episode_csv_golden(tmp_path):
    recs = [EpisodeRecord(1, 0.5, 0.5, 0, 1, 0, 0),
            EpisodeRecord(2, 0.25, 0.75, 3, 2, 1, 0)]
    path = tmp_path / "ep.csv"
    write_episode_csv(recs, path)
    assert path.read_text() == (EPISODE_CSV_HEADER + "\n"
                                "1,0.5,0.5,0,1,0,0\n"
                                "2,0.25,0.75,3,2,1,0\n")
