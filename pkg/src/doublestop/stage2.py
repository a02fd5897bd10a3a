"""Stage two: value after the switch, its fixed point and stopping policy.

State (a, b, c) = (mass caught since the switch, time since the switch,
time left to the horizon). ``solve_y_b`` returns y^b with r*(a, b, c), the
delay after the latest post-switch catch at which the angler should stop.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .functions import LinearCost
from .grid import Grid3, ValueTable3
from .model import ProblemSpec
from .sweep import SweepPlan, pointwise_phi, run_fixed_point

DEFAULT_TOL = 1e-8
DEFAULT_MAX_ITERS = 200


def phi_b(delta: ValueTable3 | None, a: float, b: float, c: float, r: float,
          spec: ProblemSpec, n_z: int = 64) -> float:
    """Running integral of the stage-two operator; ``delta=None`` means delta == 0."""
    st = spec.stage_b
    return pointwise_phi(delta, st.reward, st.holding, st.utility, st.cost, a, b, c, r, n_z)


def _plan(spec: ProblemSpec, grid: Grid3) -> SweepPlan:
    st = spec.stage_b
    return SweepPlan.build(grid, st.holding, st.reward, st.utility, st.cost)


def contraction_constant(spec: ProblemSpec) -> float:
    return float(spec.stage_b.holding.cdf(spec.t0))


def apply_phi_operator(delta: ValueTable3, spec: ProblemSpec) -> ValueTable3:
    values, policy = _plan(spec, delta.grid).apply(delta.values)
    return ValueTable3(delta.grid, values, policy, label="Phi_b(delta)")


def _solve(spec: ProblemSpec, grid: Grid3, tol: float, max_iters: int, n_iter: int | None,
           collapse: bool | None) -> ValueTable3:
    if abs(grid.t0 - spec.t0) > 1e-12:
        raise ValueError("grid horizon differs from the problem horizon")
    if collapse is None:
        collapse = isinstance(spec.stage_b.cost, LinearCost)
    work = grid.with_b(1) if collapse and grid.n_b > 1 else grid
    table = run_fixed_point(_plan(spec, work), contraction_constant(spec), tol, max_iters,
                            "y_b", n_iter=n_iter)
    if work is not grid:
        table = table.expand_b(grid.n_b)
    table.diagnostics["collapsed_b"] = work is not grid
    return table


def solve_y_b(spec: ProblemSpec, grid: Grid3, tol: float = DEFAULT_TOL,
              max_iters: int = DEFAULT_MAX_ITERS, collapse: bool | None = None) -> ValueTable3:
    """Fixed point of the stage-two operator to sup-norm accuracy ``tol``.

    With a time-linear stage cost the b-axis carries no information and the
    sweep runs on one b-slice (``collapse=None`` auto-detects this).
    """
    return _solve(spec, grid, tol, max_iters, None, collapse)


def iterate_y_b(spec: ProblemSpec, grid: Grid3, n_iter: int, collapse: bool | None = None) -> ValueTable3:
    """The finite iterate y_K = Phi^K 0 (K = ``n_iter``)."""
    if n_iter == 0:
        z = np.zeros(grid.shape)
        return ValueTable3(grid, z, z.copy(), label="y_b")
    return _solve(spec, grid, DEFAULT_TOL, n_iter, n_iter, collapse)


def gamma_sm(y_b: ValueTable3, m: float, m_tilde: float, s: float, t: float, spec: ProblemSpec) -> float:
    """Conditional value after the switch at s with mass m, now at t with total mass m_tilde."""
    if t > spec.t0:
        return -spec.penalty
    w = float(spec.w_b(m, s, m_tilde, t))
    return w + float(y_b.value_at(m_tilde - m, t - s, spec.t0 - t))


def policy_r_b(y_b: ValueTable3, a: float, b: float, c: float):
    return y_b.policy_at(a, b, c)


@dataclass
class StoppingPolicy:
    """Threshold rule R_n = r*(a, b, c) read off a value table.

    Stop at T_n + R_n unless the next catch arrives first; R_n never exceeds
    the remaining horizon c.
    """

    table: ValueTable3

    def __call__(self, a, b, c):
        return self.table.policy_at(a, b, c)
