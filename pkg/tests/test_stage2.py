import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from conftest import make_spec, stage
from doublestop.distributions import DomainError
from doublestop.grid import Grid3, ValueTable3
from doublestop.stage2 import (
    StoppingPolicy,
    apply_phi_operator,
    contraction_constant,
    gamma_sm,
    iterate_y_b,
    phi_b,
    policy_r_b,
    solve_y_b,
)
from doublestop.sweep import ConvergenceError

LN10 = math.log(10.0)


def table(grid, fill):
    v = np.broadcast_to(np.asarray(fill, dtype=float), grid.shape).copy()
    return ValueTable3(grid, v, np.zeros(grid.shape))


@pytest.fixture(scope="module")
def ref_grid(ref1):
    return Grid3(ref1.a_max, ref1.t0, 16, 16, 16)


# --- running integral --------------------------------------------------------


def test_phi_b_zero_delta_linear_closed_form(lin1):
    # int_0^r e^{-z} (1 * 1 - 0.2) dz
    for r in (0.0, 0.3, 1.0):
        assert phi_b(None, 0.5, 0.0, 1.0, r, lin1, n_z=2001) == pytest.approx(0.8 * (1 - math.exp(-r)), abs=1e-6)


def test_phi_b_constant_delta_adds_jump_mass(lin1):
    g = Grid3(lin1.a_max, lin1.t0, 8, 4, 8)
    d = table(g, 0.5)
    got = phi_b(d, 1.0, 0.0, 1.0, 0.6, lin1, n_z=2001)
    assert got == pytest.approx(1.3 * (1 - math.exp(-0.6)), abs=1e-6)


def test_phi_b_zero_functions_vanish(zero_spec):
    assert phi_b(None, 1.0, 0.2, 0.7, 0.5, zero_spec) == 0.0


def test_phi_b_rejects_r_beyond_c(lin1):
    with pytest.raises(DomainError):
        phi_b(None, 0.0, 0.0, 0.5, 0.6, lin1)
    with pytest.raises(DomainError):
        phi_b(None, 0.0, 0.0, 0.5, -0.1, lin1)


def test_phi_b_ref1_sign_flips_at_threshold(ref1):
    # alpha Delta(a) - c' = e^{-a} - 0.1 changes sign at ln 10
    assert phi_b(None, LN10 - 0.3, 0.0, 1.0, 0.2, ref1) > 0
    assert phi_b(None, LN10 + 0.3, 0.0, 1.0, 0.2, ref1) < 0


# --- operator ----------------------------------------------------------------


def test_operator_on_zero_is_max_of_running_integral(lin1):
    g = Grid3(lin1.a_max, lin1.t0, 8, 1, 33)
    out = apply_phi_operator(table(g, 0.0), lin1)
    assert np.allclose(out.values[:, 0, :], 0.8 * (1 - np.exp(-g.c))[None, :], atol=2e-4)
    assert np.array_equal(out.policy[:, 0, :], np.broadcast_to(g.c, (8, 33)))


def test_operator_at_zero_horizon_is_zero(ref1, ref_grid):
    out = apply_phi_operator(table(ref_grid, 3.0), ref1)
    assert np.all(out.values[:, :, 0] == 0.0)


@settings(max_examples=15, deadline=None)
@given(st.integers(0, 2**32 - 1), st.floats(0.01, 5.0))
def test_operator_is_q_contraction(ref1, ref_grid, seed, scale):
    rng = np.random.default_rng(seed)
    d1 = table(ref_grid, scale * rng.standard_normal(ref_grid.shape))
    d2 = table(ref_grid, scale * rng.standard_normal(ref_grid.shape))
    lhs = np.max(np.abs(apply_phi_operator(d1, ref1).values - apply_phi_operator(d2, ref1).values))
    q = contraction_constant(ref1)
    assert lhs <= q * np.max(np.abs(d1.values - d2.values)) + 1e-9


@settings(max_examples=15, deadline=None)
@given(st.integers(0, 2**32 - 1))
def test_operator_is_monotone(ref1, ref_grid, seed):
    rng = np.random.default_rng(seed)
    lo = rng.standard_normal(ref_grid.shape)
    hi = lo + np.abs(rng.standard_normal(ref_grid.shape))
    a = apply_phi_operator(table(ref_grid, lo), ref1).values
    b = apply_phi_operator(table(ref_grid, hi), ref1).values
    assert np.all(b >= a - 1e-12)


def test_contraction_constant_exponential(ref1):
    assert contraction_constant(ref1) == pytest.approx(1 - math.exp(-2.0), abs=1e-15)


# --- fixed point -------------------------------------------------------------


def test_lin1_fixed_point_is_linear_in_c(lin1_solved):
    y_b, _ = lin1_solved
    c = y_b.grid.c
    assert np.max(np.abs(y_b.values - 0.8 * c[None, None, :])) <= 1e-3


def test_boundary_zero_at_horizon(ref1_solved, lin1_solved):
    for y_b, _ in (ref1_solved, lin1_solved):
        assert np.all(y_b.values[:, :, 0] == 0.0)


def test_values_nonnegative(ref1_solved):
    assert np.all(ref1_solved[0].values >= 0.0)


def test_ref1_value_vanishes_past_threshold(ref1_solved):
    y_b, _ = ref1_solved
    far = y_b.grid.a >= LN10 + y_b.grid.a_step
    assert np.all(y_b.values[far] == 0.0)
    assert np.all(y_b.policy[far] == 0.0)


def test_ref1_policy_runs_to_horizon_below_threshold(ref1_solved):
    y_b, _ = ref1_solved
    g = y_b.grid
    near = g.a <= LN10 - g.a_step
    want = np.broadcast_to(g.c, y_b.policy[near].shape)
    assert np.allclose(y_b.policy[near], want, atol=1e-12)


def test_collapse_matches_full_sweep(ref1):
    g = Grid3(ref1.a_max, ref1.t0, 12, 9, 12)
    full = solve_y_b(ref1, g, collapse=False)
    fast = solve_y_b(ref1, g, collapse=True)
    assert fast.diagnostics["collapsed_b"] and not full.diagnostics["collapsed_b"]
    assert np.max(np.abs(full.values - fast.values)) <= 1e-10


def test_convergence_error_carries_residuals(ref1, ref_grid):
    with pytest.raises(ConvergenceError) as err:
        solve_y_b(ref1, ref_grid, tol=1e-12, max_iters=1)
    assert len(err.value.residuals) == 1 and err.value.residuals[0] > 0


def test_residual_decay_within_contraction_rate(ref1_solved):
    y_b, _ = ref1_solved
    q = y_b.diagnostics["q"]
    assert y_b.diagnostics["ratios"]
    assert max(y_b.diagnostics["ratios"]) <= q + 0.02


def test_iterates_are_monotone(ref1, ref_grid):
    prev = iterate_y_b(ref1, ref_grid, 0).values
    for k in range(1, 5):
        cur = iterate_y_b(ref1, ref_grid, k).values
        assert np.all(cur >= prev - 1e-12)
        prev = cur


def test_iterates_approach_fixed_point(ref1, ref_grid):
    fixed = solve_y_b(ref1, ref_grid, tol=1e-10).values
    q = contraction_constant(ref1)
    y1 = iterate_y_b(ref1, ref_grid, 1).values
    y5 = iterate_y_b(ref1, ref_grid, 5).values
    d1, d5 = np.max(np.abs(y1 - fixed)), np.max(np.abs(y5 - fixed))
    assert d5 <= q**4 * d1 + 1e-9


def test_grid_horizon_mismatch_rejected(ref1):
    with pytest.raises(ValueError):
        solve_y_b(ref1, Grid3(5.0, 2.0, 8, 8, 8))


def test_csv_round_trip(tmp_path, ref1, ref_grid):
    y = solve_y_b(ref1, ref_grid)
    y.save(tmp_path / "t.csv", note="x")
    back = ValueTable3.load(tmp_path / "t.csv")
    assert np.array_equal(back.values, y.values)
    assert np.array_equal(back.policy, y.policy)
    assert back.iterations == y.iterations


def test_non_exponential_and_nonlinear_cost_run():
    spec = make_spec(stage_b=stage({"kind": "exp_saturating", "scale": 1.0, "rate": 1.0},
                                   {"kind": "power", "coef": 0.3, "power": 2.0},
                                   {"kind": "weibull", "shape": 2.0, "scale": 0.8},
                                   {"kind": "exponential", "mean": 1.0}))
    g = Grid3(spec.a_max, spec.t0, 12, 12, 12)
    y = solve_y_b(spec, g)
    assert not y.diagnostics["collapsed_b"]
    assert np.all(y.values[:, :, 0] == 0.0) and np.all(y.values >= 0)
    # a later start pays a steeper cost, so the value cannot rise in b
    assert np.all(np.diff(y.values, axis=1) <= 1e-9)


# --- read-outs ---------------------------------------------------------------


def test_gamma_sm_adds_payoff(lin1_solved, lin1):
    y_b, _ = lin1_solved
    got = gamma_sm(y_b, 1.0, 2.5, 0.2, 0.6, lin1)
    want = float(lin1.w_b(1.0, 0.2, 2.5, 0.6)) + 0.8 * 0.4
    assert got == pytest.approx(want, abs=1e-3)
    assert gamma_sm(y_b, 1.0, 2.5, 0.2, 1.1, lin1) == -lin1.penalty


def test_policy_reads_within_remaining_time(ref1_solved):
    y_b, _ = ref1_solved
    pol = StoppingPolicy(y_b)
    for a, b, c in ((0.3, 0.1, 0.5), (4.0, 0.0, 0.9), (1.0, 0.5, 0.0)):
        r = pol(a, b, c)
        assert 0.0 <= r <= c
        assert r == policy_r_b(y_b, a, b, c)


def test_sweep_agrees_with_pointwise_integral(ref1_solved, ref1):
    y_b, _ = ref1_solved
    g = y_b.grid
    out = apply_phi_operator(y_b, ref1)
    for ia, ib, kc in ((3, 0, 47), (10, 5, 30), (20, 2, 12), (30, 0, 40)):
        a, b, c = g.a[ia], g.b[ib], g.c[kc]
        r = float(out.policy[ia, ib, kc])
        assert phi_b(y_b, a, b, c, r, ref1, n_z=kc + 1) == pytest.approx(out.values[ia, ib, kc], abs=2e-3)
