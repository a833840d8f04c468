"""Smoke tests for the amporder python module."""

import math
import os

import pytest

import amporder as ap

SCENARIO_DIR = os.environ.get("AMPORDER_SCENARIO_DIR", "scenarios")


def make_test_link():
    return ap.make_link(6, 80.0, 0.2, 5.0, 193.4, 1000.0, [15.0, 17.0], [-1.2, 1.2])


def full_plan():
    plan = ap.ChannelPlan()
    plan.loaded_batches = list(range(6))
    plan.existing_batches = [0]
    return plan


def test_ase_desk_value():
    got = ap.ase_injection_w(5.0, 16.0, 193.4, 63.9)
    expected = 10**0.5 * 6.62607015e-34 * 193.4e12 * (10**1.6 - 1.0) * 63.9e9
    assert got == pytest.approx(expected, rel=1e-12)
    assert abs(10 * math.log10(got * 1e3) - (-30.0)) < 0.1


def test_transparent_link_q():
    link = ap.make_link(6, 80.0, 0.2, 5.0, 193.4, 0.0, [13.0, 19.0], [-1.0, 1.0])
    plan = full_plan()
    config = ap.OaConfig([16.0] * 7, [0.0] * 7)
    q = ap.evaluate_q(link, plan, config)
    for b in plan.loaded_batches:
        assert abs((q.q_db[b] + 3.0) - 21.55) < 0.1


def test_pmx_hand_example():
    child_a, child_b = ap.pmx([1, 2, 3, 4, 5], [5, 4, 3, 2, 1], 2, 4)
    assert child_a == [5, 2, 3, 4, 1]
    assert child_b == [1, 4, 3, 2, 5]


def test_optimize_with_python_fitness():
    # a flat landscape converges right after the stagnation patience
    flat = lambda order: ap.FitnessValue(mean_q=10.0, min_q=10.0)
    params = ap.GaParams()
    params.seed = 9
    res = ap.optimize(flat, params, 6)
    assert res.generations_run == params.patience_generations + 1
    assert res.best.fitness.value == pytest.approx(20.0)


def test_scenarios_load():
    c1 = ap.load_scenario(os.path.join(SCENARIO_DIR, "case1.json"))
    c2 = ap.load_scenario(os.path.join(SCENARIO_DIR, "case2.json"))
    assert c1.case_id == "case1"
    assert len(c1.initial_loading) == 1
    assert len(c2.initial_loading) == 2
    assert c2.candidate_count == 500
    assert c2.baseline_count == 100


def test_trajectory_and_fitness_roundtrip():
    link = make_test_link()
    plan = full_plan()
    cfgs = ap.sample_configs(link, 2, 42)
    tr = ap.TransitionScenario(cfgs[0], cfgs[1], [0], plan)
    oracle = lambda c: ap.evaluate_q(link, plan, c)
    order = list(range(1, 15))
    traj = ap.trajectory(oracle, tr, order)
    assert len(traj.scalar_per_state) == 15
    f = ap.fitness(traj)
    assert f.value == pytest.approx(f.mean_q + f.min_q)
    assert min(traj.scalar_per_state) == f.min_q


def test_small_ga_against_brute_force():
    link = ap.make_link(1, 80.0, 0.2, 5.0, 193.4, 1000.0, [15.0, 17.0], [-1.2, 1.2])
    plan = ap.ChannelPlan()
    plan.n_batches = 2
    plan.loaded_batches = [0, 1]
    plan.existing_batches = [0]
    cfgs = ap.sample_configs(link, 2, 7)
    tr = ap.TransitionScenario(cfgs[0], cfgs[1], [0], plan)
    fit = lambda o: ap.fitness(
        ap.trajectory(lambda c: ap.evaluate_q(link, plan, c), tr, o)
    )
    bf_order, bf_value = ap.brute_force_best(fit, 4)
    params = ap.GaParams()
    params.seed = 3
    res = ap.optimize(fit, params, 4)
    assert res.best.fitness.value == pytest.approx(bf_value.value, abs=1e-9)
