"""Stage one: value before the switch and the overall double-stopping value.

State (a, b, c) = (total mass at the latest stream-1 catch, its absolute
time, time left). The stage-two solution enters only through
ybar(c) = y^b(0, 0, c) and its left-hand slope, which act as a drag on the
pre-switch running integral: each unit of time spent before switching
shortens the post-switch expedition.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .distributions import DomainError
from .functions import LinearCost
from .grid import Grid3, ValueTable3
from .model import ProblemSpec
from .sweep import SweepPlan, pointwise_phi, run_fixed_point
from .stage2 import DEFAULT_MAX_ITERS, DEFAULT_TOL


def ybar(y_b: ValueTable3, c):
    return y_b.value_at(0.0, 0.0, c)


def ybar_prime(y_b: ValueTable3, c: float) -> float:
    """Left-hand difference of ybar over one c-step of the stage-two grid."""
    if c <= 0:
        raise DomainError("left-hand derivative of ybar needs c > 0")
    h = min(y_b.grid.c_step, c)
    return (float(ybar(y_b, c)) - float(ybar(y_b, c - h))) / h


def u_of(m, s, y_b: ValueTable3, spec: ProblemSpec):
    """Value of switching at s with mass m and then stopping optimally."""
    sa, sb = spec.stage_a, spec.stage_b
    base = sa.utility(m) - sa.cost(s) + float(sb.utility(0.0)) - float(sb.cost(0.0))
    out = base + ybar(y_b, spec.t0 - np.asarray(s, dtype=float))
    return float(out) if np.ndim(out) == 0 else out


def phi_a(delta: ValueTable3 | None, a: float, b: float, c: float, r: float,
          y_b: ValueTable3, spec: ProblemSpec, n_z: int = 64) -> float:
    st = spec.stage_a
    return pointwise_phi(delta, st.reward, st.holding, st.utility, st.cost, a, b, c, r, n_z,
                         ybar=lambda cc: ybar(y_b, cc))


def _ybar_on(grid: Grid3, y_b: ValueTable3, smooth: bool = False) -> np.ndarray:
    yb = np.asarray(ybar(y_b, grid.c), dtype=float)
    if not smooth:
        return yb
    # three-point average of the slopes, re-integrated
    d = np.diff(yb)
    padded = np.concatenate([d[:1], d, d[-1:]])
    d_s = (padded[:-2] + padded[1:-1] + padded[2:]) / 3.0
    return np.concatenate([[yb[0]], yb[0] + np.cumsum(d_s)])


def _plan(spec: ProblemSpec, grid: Grid3, y_b: ValueTable3, smooth: bool = False) -> SweepPlan:
    st = spec.stage_a
    return SweepPlan.build(grid, st.holding, st.reward, st.utility, st.cost,
                           ybar=_ybar_on(grid, y_b, smooth))


def contraction_constant(spec: ProblemSpec) -> float:
    return float(spec.stage_a.holding.cdf(spec.t0))


def apply_phi_a_operator(delta: ValueTable3, y_b: ValueTable3, spec: ProblemSpec) -> ValueTable3:
    values, policy = _plan(spec, delta.grid, y_b).apply(delta.values)
    return ValueTable3(delta.grid, values, policy, label="Phi_a(delta)")


@dataclass
class FirstStageValue:
    """Solved stage one together with the frozen stage-two table it used."""

    y_a: ValueTable3
    y_b: ValueTable3
    spec: ProblemSpec
    s_axis: np.ndarray
    u_table: np.ndarray          # u(m, s) on (y_a.grid.a, s_axis)
    ybar_prime_table: np.ndarray  # ybar'(c) on y_a.grid.c, nan at c = 0
    gamma00: float

    def u(self, m, s):
        return u_of(m, s, self.y_b, self.spec)

    def gamma(self, m: float, s: float) -> float:
        """Optimal expected payoff from stream-1 state (mass m, time s)."""
        if s > self.spec.t0:
            return -self.spec.penalty
        c = self.spec.t0 - s
        return float(self.u(m, s)) + float(self.y_a.value_at(m, s, c))

    def policy(self, a, b, c):
        return self.y_a.policy_at(a, b, c)


def _drag_table(grid: Grid3, y_b: ValueTable3) -> np.ndarray:
    out = np.full(grid.n_c, np.nan)
    for k, c in enumerate(grid.c):
        if c > 0:
            out[k] = ybar_prime(y_b, float(c))
    return out


def _solve(spec, y_b, grid, tol, max_iters, n_iter, collapse, smooth_drag) -> ValueTable3:
    if abs(grid.t0 - spec.t0) > 1e-12:
        raise ValueError("grid horizon differs from the problem horizon")
    if collapse is None:
        collapse = isinstance(spec.stage_a.cost, LinearCost)
    work = grid.with_b(1) if collapse and grid.n_b > 1 else grid
    table = run_fixed_point(_plan(spec, work, y_b, smooth_drag), contraction_constant(spec),
                            tol, max_iters, "y_a", n_iter=n_iter)
    if work is not grid:
        table = table.expand_b(grid.n_b)
    table.diagnostics["collapsed_b"] = work is not grid
    return table


def solve_y_a(spec: ProblemSpec, y_b: ValueTable3, grid: Grid3, tol: float = DEFAULT_TOL,
              max_iters: int = DEFAULT_MAX_ITERS, collapse: bool | None = None,
              smooth_drag: bool = False) -> FirstStageValue:
    y_a = _solve(spec, y_b, grid, tol, max_iters, None, collapse, smooth_drag)
    s_axis = grid.c.copy()
    u_table = np.asarray(u_of(grid.a[:, None], s_axis[None, :], y_b, spec), dtype=float)
    gamma00 = float(u_of(0.0, 0.0, y_b, spec)) + float(y_a.value_at(0.0, 0.0, spec.t0))
    return FirstStageValue(y_a, y_b, spec, s_axis, u_table, _drag_table(grid, y_b), gamma00)


def iterate_y_a(spec: ProblemSpec, y_b: ValueTable3, grid: Grid3, n_iter: int,
                collapse: bool | None = None) -> ValueTable3:
    return _solve(spec, y_b, grid, DEFAULT_TOL, n_iter, n_iter, collapse, False)


def policy_r_a(first: FirstStageValue, a, b, c):
    return first.policy(a, b, c)


def ybar_slope_report(y_b: ValueTable3, spec: ProblemSpec, n_points: int | None = None) -> dict:
    """Measured ybar'(t0 - s) on the stage-two grid against the exponential-case value 0."""
    c = y_b.grid.c[1:] if n_points is None else np.linspace(spec.t0 / n_points, spec.t0, n_points)
    slopes = np.array([ybar_prime(y_b, float(cc)) for cc in c])
    return {
        "s": [float(spec.t0 - cc) for cc in c],
        "ybar_prime": [float(v) for v in slopes],
        "predicted": 0.0,
        "max_abs_discrepancy": float(np.max(np.abs(slopes))) if slopes.size else 0.0,
    }
