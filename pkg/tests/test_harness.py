import math

import numpy as np
import pytest

from conftest import CONFIGS, make_spec
from doublestop.harness import (
    ConstantRule,
    ThresholdRule,
    UniformBank,
    evaluate_game_path,
    paths_csv,
    replicate_generator,
    replicate_paths,
    rule_from_config,
    run_game_payoff_eval,
    run_policy_simulation,
)
from doublestop.model import load_spec
from doublestop.process import MarkedEvent, Trajectory
from doublestop.stage2 import StoppingPolicy


def run_to_horizon(a, b, c):
    return np.asarray(c, dtype=float)


def stop_now(a, b, c):
    return np.zeros_like(np.asarray(c, dtype=float))


@pytest.fixture(scope="module")
def ref_policies(ref1_solved):
    y_b, first = ref1_solved
    return StoppingPolicy(first.y_a), StoppingPolicy(y_b)


@pytest.fixture(scope="module")
def game():
    return load_spec(CONFIGS / "game_symmetric.json")


# --- random streams ------------------------------------------------------------


def test_replicate_generators_are_keyed():
    a = replicate_generator(5, 3).random(4)
    assert np.array_equal(a, replicate_generator(5, 3).random(4))
    assert not np.array_equal(a, replicate_generator(5, 4).random(4))
    assert not np.array_equal(a, replicate_generator(5, 3, purpose=1).random(4))


def test_bank_extends_deterministically():
    bank = UniformBank(1, np.arange(3), block=2)
    idx = np.arange(3)
    first = np.stack([bank.take(0, idx) for _ in range(5)])
    again = UniformBank(1, np.arange(3), block=4)
    second = np.stack([again.take(0, idx) for _ in range(5)])
    assert np.all((first > 0) & (first <= 1))
    # per-replicate draws interleave purposes block by block, so only equal blocks agree
    assert np.array_equal(first[:2], second[:2])
    bank.rewind(0)
    assert np.array_equal(bank.take(0, idx), first[0])


# --- policy simulation ---------------------------------------------------------


def test_same_seed_same_report(ref1, ref_policies):
    a = run_policy_simulation(ref1, *ref_policies, 500, seed=3)
    b = run_policy_simulation(ref1, *ref_policies, 500, seed=3)
    c = run_policy_simulation(ref1, *ref_policies, 500, seed=4)
    assert a.to_dict() == b.to_dict()
    assert a.mc_mean != c.mc_mean


def test_replicates_do_not_depend_on_run_size(ref1, ref_policies):
    short = replicate_paths(ref1, *ref_policies, seed=9, n=10)
    long = replicate_paths(ref1, *ref_policies, seed=9, n=40)
    assert [p[2] for p in short] == [p[2] for p in long[:10]]
    assert [p[0].events for p in short] == [p[0].events for p in long[:10]]


def test_path_dump_matches_full_run(ref1, ref_policies):
    n = 200
    paths = replicate_paths(ref1, *ref_policies, seed=2, n=n)
    report = run_policy_simulation(ref1, *ref_policies, n, seed=2)
    pay = np.array([p[2] for p in paths])
    assert float(pay.mean()) == pytest.approx(report.mc_mean, abs=1e-12)
    assert report.mc_stderr == pytest.approx(pay.std(ddof=1) / math.sqrt(n), rel=1e-12)


def test_stopping_times_feasible(ref1, ref_policies):
    for traj, stop, pay in replicate_paths(ref1, *ref_policies, seed=5, n=300):
        s = traj.switch_time
        assert 0.0 <= s <= stop <= ref1.t0
        assert all(e.time <= stop for e in traj.events if e.mark == 3)
        assert all(e.time <= s for e in traj.events if e.mark == 1)
        m = sum(e.reward for e in traj.events if e.mark == 1)
        assert pay == pytest.approx(float(ref1.w_b(m, s, traj.post_switch_mass(stop), stop)), abs=1e-12)


def test_stderr_shrinks_like_root_n(ref1, ref_policies):
    se1 = run_policy_simulation(ref1, *ref_policies, 4000, seed=1).mc_stderr
    se2 = run_policy_simulation(ref1, *ref_policies, 8000, seed=1).mc_stderr
    assert se2 / se1 == pytest.approx(1 / math.sqrt(2), rel=0.2)


def test_immediate_stop_is_deterministic(lin1):
    rep = run_policy_simulation(lin1, stop_now, stop_now, 100, seed=0)
    assert rep.mc_mean == float(lin1.w_b(0.0, 0.0, 0.0, 0.0))
    assert rep.mc_stderr == 0.0
    assert rep.switch_times["frac_at_zero"] == 1.0


def test_running_to_horizon_matches_wald(lin1):
    # switching at t0 leaves no stage-two time: E M_{t0} - c_a(t0) = 2 - 0.1 by Wald
    rep = run_policy_simulation(lin1, run_to_horizon, run_to_horizon, 20_000, seed=8)
    assert rep.stop_times["frac_at_horizon"] == 1.0
    assert abs(rep.mc_mean - 1.9) <= 3 * rep.mc_stderr
    base = rep.baselines["switch0_stop_t0"]
    assert abs(base["mean"] - 0.8) <= 3 * base["stderr"]


def test_paths_csv_layout(ref1, ref_policies):
    text = paths_csv(replicate_paths(ref1, *ref_policies, seed=5, n=3))
    lines = text.splitlines()
    assert lines[0] == "replicate,n,time,mark,reward,switch_time,stop_time,payoff"
    assert {ln.split(",")[0] for ln in lines[1:]} == {"0", "1", "2"}


def test_invalid_replicates(ref1, ref_policies):
    with pytest.raises(ValueError):
        run_policy_simulation(ref1, *ref_policies, 0, seed=1)


# --- competitive payoff field -------------------------------------------------


def test_game_hand_built_path(game):
    traj = Trajectory(tuple(MarkedEvent(*e) for e in
                            ((0.1, 1, 1.0), (0.2, 2, 0.5), (0.5, 3, 2.0), (0.8, 3, 1.0))), switch_time=0.3)
    z1, z2 = evaluate_game_path(traj, ConstantRule(0.3), ConstantRule(0.6), ConstantRule(0.9), game)
    lead = 2 * (1 - math.exp(-3.0))
    follow = 1 - math.exp(-3.0)
    # player 1 forces the switch at 0.3; rod-2 mass 0.5, rod-1 mass 1.0, post-switch mass 3.0
    assert z1 == pytest.approx(1.0 + 0.2 - 0.03 + lead - 0.2 * 0.6, abs=1e-12)
    assert z2 == pytest.approx(0.5 - 0.03 + follow - 0.2 * 0.6, abs=1e-12)


def test_game_late_final_stop_is_penalised(game):
    traj = Trajectory((MarkedEvent(0.1, 1, 1.0),))
    out = evaluate_game_path(traj, ConstantRule(0.3), ConstantRule(0.6), ConstantRule(1.2), game)
    assert out == (-game.penalty, -game.penalty)


def test_game_zero_functions():
    zu, zc = {"kind": "constant", "value": 0.0}, {"kind": "linear", "rate": 0.0}
    exp1 = {"holding": {"kind": "exponential", "rate": 1.0}, "reward": {"kind": "exponential", "mean": 1.0}}
    p = {"utility_a": zu, "cost_a": zc, "utility_b_lead": zu, "utility_b_follow": zu, "last_catch_bonus": 0.0}
    spec = make_spec(rod2=exp1, game={"players": [p, p]})
    rep = run_game_payoff_eval(spec, ConstantRule(0.3), ConstantRule(0.6), ConstantRule(0.9), 50, seed=1)
    assert rep.means == (0.0, 0.0) and rep.stderrs == (0.0, 0.0)


def test_game_swap_symmetry(game):
    a, b, sig = ConstantRule(0.3), ConstantRule(0.6), ConstantRule(1.0)
    n = 4000
    fwd = run_game_payoff_eval(game, a, b, sig, n, seed=17)
    rev = run_game_payoff_eval(game, b, a, sig, n, seed=18)
    assert fwd.tie_fraction == 0.0
    se = math.hypot(fwd.stderrs[0], rev.stderrs[1])
    assert abs(fwd.means[0] - rev.means[1]) <= 3 * se
    se = math.hypot(fwd.stderrs[1], rev.stderrs[0])
    assert abs(fwd.means[1] - rev.means[0]) <= 3 * se


def test_game_is_reproducible(game):
    rules = (ConstantRule(0.3), ConstantRule(0.6), ConstantRule(1.0))
    assert run_game_payoff_eval(game, *rules, 200, seed=5) == run_game_payoff_eval(game, *rules, 200, seed=5)


def test_rule_from_config(tmp_path, ref1_solved):
    assert rule_from_config({"kind": "constant", "time": 0.4}) == ConstantRule(0.4)
    y_b, _ = ref1_solved
    y_b.save(tmp_path / "b.csv")
    rule = rule_from_config({"kind": "table", "path": str(tmp_path / "b.csv")})
    assert isinstance(rule, ThresholdRule)
    with pytest.raises(ValueError):
        rule_from_config({"kind": "oracle"})


def test_threshold_rule_runs_to_horizon_on_linear_instance(lin1_solved, lin1):
    y_b, first = lin1_solved
    traj = Trajectory(tuple(MarkedEvent(*e) for e in ((0.2, 1, 1.0), (0.7, 2, 1.0))))
    assert ThresholdRule(first.y_a).first_stop(traj, lin1) == lin1.t0
    assert ThresholdRule(y_b).second_stop(traj, 0.4, lin1) == lin1.t0
