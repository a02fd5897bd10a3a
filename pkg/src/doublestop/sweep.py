"""Grid sweep shared by both stage operators.

For a node (a, b, c) the running integral

    phi(r) = int_0^r Fbar(z) { alpha(z) [D(a) + E delta(a + X, b + z, c - z)]
                               - cost'(b + z) - drag'(c - z) } dz

is discretised on the c-axis nodes z_m = m * h, so c - z always lands on a
grid node and only the a-axis needs interpolation. On each cell the hazard
term integrates exactly against F(z_{m+1}) - F(z_m) (so the discrete
operator contracts with constant F(c) <= F(t0)); the delta values use the
trapezoid rule, and the cost/drag terms use the mean survival times the
exact increment of the cost (resp. of ybar). The max over r is taken on the
cumulative sums, ties going to the smallest r.
"""

from __future__ import annotations

from dataclasses import dataclass
import logging

import numpy as np

from .distributions import DomainError, HoldingDist, RewardDist, mean_increment
from .functions import Cost, Utility
from .grid import Grid3, ValueTable3, axis_weights

log = logging.getLogger(__name__)


class ConvergenceError(RuntimeError):
    def __init__(self, message: str, residuals: list):
        super().__init__(message)
        self.residuals = residuals


def expectation_matrix(a_axis: np.ndarray, reward: RewardDist) -> np.ndarray:
    """P with (P @ f)[i] = sum_q w_q f(a_i + x_q), f linear between nodes and clamped at a_max."""
    n = a_axis.size
    lo, hi, w = axis_weights(a_axis, a_axis[:, None] + reward.nodes[None, :])
    P = np.zeros((n, n))
    rows = np.repeat(np.arange(n)[:, None], reward.nodes.size, axis=1)
    np.add.at(P, (rows, lo), reward.weights[None, :] * (1.0 - w))
    np.add.at(P, (rows, hi), reward.weights[None, :] * w)
    return P


@dataclass
class SweepPlan:
    """Precomputed pieces of one stage operator on a fixed grid."""

    grid: Grid3
    dF: np.ndarray          # (n_c - 1,)
    surv_avg: np.ndarray    # (n_c - 1,)
    increment: np.ndarray   # (n_a,) mean utility increment D(a)
    P: np.ndarray           # (n_a, n_a)
    cost_inc: np.ndarray    # (n_b, n_c - 1)
    drag_inc: np.ndarray    # (n_c,) ybar(c_k) - ybar(c_{k-1}); entry 0 unused
    b_brackets: list

    @classmethod
    def build(cls, grid: Grid3, holding: HoldingDist, reward: RewardDist, utility: Utility,
              cost: Cost, ybar: np.ndarray | None = None) -> "SweepPlan":
        z = grid.c
        F = np.asarray(holding.cdf(z), dtype=float)
        S = 1.0 - F
        dF = np.diff(F)
        surv_avg = 0.5 * (S[:-1] + S[1:])
        inc = np.asarray(mean_increment(utility, reward, grid.a), dtype=float)
        P = expectation_matrix(grid.a, reward)
        bz = grid.b[:, None] + z[None, :]
        cvals = np.asarray(cost(bz), dtype=float)
        cost_inc = np.diff(cvals, axis=1)
        drag_inc = np.zeros(grid.n_c)
        if ybar is not None:
            drag_inc[1:] = np.diff(np.asarray(ybar, dtype=float))
        b_brackets = [None]
        for k in range(1, grid.n_c):
            b_brackets.append(axis_weights(grid.b, grid.b[:, None] + z[None, : k + 1]))
        return cls(grid, dF, surv_avg, inc, P, cost_inc, drag_inc, b_brackets)

    def apply(self, delta: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        """One application of the operator: returns (values, policy)."""
        g = self.grid
        E = np.tensordot(self.P, delta, axes=(1, 0))
        values = np.zeros(g.shape)
        policy = np.zeros(g.shape)
        h = g.c_step
        for k in range(1, g.n_c):
            lo, hi, w = self.b_brackets[k]
            cidx = k - np.arange(k + 1)
            Ed = (1.0 - w) * E[:, lo, cidx] + w * E[:, hi, cidx]
            jump = self.dF[:k] * (self.increment[:, None, None] + 0.5 * (Ed[:, :, :-1] + Ed[:, :, 1:]))
            drift = self.surv_avg[:k] * (self.cost_inc[:, :k] + self.drag_inc[k:0:-1])
            running = np.cumsum(jump - drift[None, :, :], axis=2)
            best = running.argmax(axis=2)
            top = np.take_along_axis(running, best[..., None], axis=2)[..., 0]
            # r = 0 (empty integral) wins ties and beats negative running values
            stop_now = top <= 0.0
            values[:, :, k] = np.where(stop_now, 0.0, top)
            policy[:, :, k] = np.where(stop_now, 0.0, (best + 1) * h)
        return values, policy


def run_fixed_point(plan: SweepPlan, q: float, tol: float, max_iters: int, label: str,
                    n_iter: int | None = None, start: np.ndarray | None = None) -> ValueTable3:
    """Iterate y <- Phi y from zero.

    With ``n_iter`` given, exactly that many sweeps are applied; otherwise the
    loop stops once ||y_{k+1} - y_k|| <= tol (1 - q) / q, which bounds the
    distance to the fixed point by ``tol``.
    """
    g = plan.grid
    y = np.zeros(g.shape) if start is None else np.array(start, dtype=float)
    pol = np.zeros(g.shape)
    residuals: list[float] = []
    ratios: list[float] = []
    worst_drop = 0.0
    threshold = np.inf if q <= 0 else tol * (1.0 - q) / q
    sweeps = n_iter if n_iter is not None else max_iters
    converged = n_iter is not None
    for it in range(1, sweeps + 1):
        y_new, pol = plan.apply(y)
        res = float(np.max(np.abs(y_new - y)))
        worst_drop = max(worst_drop, float(np.max(y - y_new)))
        if residuals and residuals[-1] > 1e-13:
            ratios.append(res / residuals[-1])
        residuals.append(res)
        y = y_new
        if n_iter is None and res <= threshold:
            converged = True
            break
    if not converged:
        raise ConvergenceError(
            f"{label}: no convergence in {max_iters} sweeps (residual {residuals[-1]:.3e})", residuals
        )
    log.debug("%s: %d sweeps, residual %.3e", label, len(residuals), residuals[-1] if residuals else 0.0)
    return ValueTable3(
        g, y, pol,
        iterations=len(residuals),
        residual=residuals[-1] if residuals else 0.0,
        contraction_estimate=max(ratios) if ratios else 0.0,
        residuals=residuals,
        label=label,
        diagnostics={"ratios": ratios, "monotone_violation": worst_drop, "q": q},
    )


def pointwise_phi(delta: ValueTable3 | None, reward: RewardDist, holding: HoldingDist,
                  utility: Utility, cost: Cost, a: float, b: float, c: float, r: float,
                  n_z: int = 64, ybar=None) -> float:
    """The running integral at one (a, b, c, r) with its own z-grid of ``n_z`` points.

    ``ybar`` (a callable c -> ybar(c)) adds the stage-one drag term.
    """
    if r < -1e-12 or r > c + 1e-12:
        raise DomainError(f"r={r} outside [0, c={c}]")
    r = min(max(r, 0.0), c)
    if r == 0.0:
        return 0.0
    z = np.linspace(0.0, r, n_z)
    F = np.asarray(holding.cdf(z), dtype=float)
    S = 1.0 - F
    dF = np.diff(F)
    surv_avg = 0.5 * (S[:-1] + S[1:])
    inc = mean_increment(utility, reward, a)
    if delta is None:
        Ed = np.zeros(n_z)
    else:
        x, w = reward.nodes, reward.weights
        vals = delta.value_at(a + x[None, :], b + z[:, None], c - z[:, None])
        Ed = vals @ w
    jump = dF * (inc + 0.5 * (Ed[:-1] + Ed[1:]))
    drift = surv_avg * np.diff(np.asarray(cost(b + z), dtype=float))
    if ybar is not None:
        yb = np.asarray(ybar(c - z), dtype=float)
        drift = drift + surv_avg * (yb[:-1] - yb[1:])
    return float(np.sum(jump - drift))
