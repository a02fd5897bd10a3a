"""Independent cross-checks for the stage solvers.

``backward_induction`` evaluates the finite-K recursion for the post-switch
value directly in payoff form,

    gamma_j(mt, t) = max_r  Fbar(r) w_b(mt, t + r)
                           + int_0^r dF(z) E gamma_{j-1}(mt + X, t + z),

starting from gamma_0 = w_b, on its own refined (mt, t) grid and with its own
quantile rule for X. It never uses the (a, b, c) reduction or the running
integral of the sweep, so agreement with the solver's K-th iterate is a
genuine two-route check.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .distributions import DiscreteReward, DomainError, Exponential, RewardDist, mean_increment
from .grid import Grid3, ValueTable3, axis_weights
from .model import ProblemSpec
from .stage1 import ybar_prime


class PreconditionError(ValueError):
    """A closed-form rule was asked for outside its hypotheses."""


def quantile_rule(reward: RewardDist, n: int = 4000) -> tuple[np.ndarray, np.ndarray]:
    """Equal-mass midpoint rule x_i = H^{-1}((i - 1/2)/n); exact support for discrete H."""
    if isinstance(reward, DiscreteReward):
        return np.asarray(reward.values, dtype=float), np.asarray(reward.probs, dtype=float)
    u = (np.arange(n) + 0.5) / n
    return np.asarray(reward.ppf(u), dtype=float), np.full(n, 1.0 / n)


@dataclass
class InductionTable:
    """gamma_j^{s,m}(mt, t) for j = 0..K on the oracle's own grid."""

    m: float
    s: float
    t0: float
    penalty: float
    m_axis: np.ndarray
    t_axis: np.ndarray
    layers: np.ndarray   # (K + 1, n_m, n_t)
    policy: np.ndarray   # (n_m, n_t) maximiser r of the last layer
    refine: int

    @property
    def K(self) -> int:
        return self.layers.shape[0] - 1

    def value(self, m_tilde, t, j: int | None = None):
        """Bilinear read-out of gamma_j (default j = K); -C beyond the horizon."""
        j = self.K if j is None else j
        m_tilde, t = np.broadcast_arrays(np.asarray(m_tilde, float), np.asarray(t, float))
        i0, i1, wm = axis_weights(self.m_axis, m_tilde)
        k0, k1, wt = axis_weights(self.t_axis, t)
        L = self.layers[j]
        out = ((1 - wm) * ((1 - wt) * L[i0, k0] + wt * L[i0, k1])
               + wm * ((1 - wt) * L[i1, k0] + wt * L[i1, k1]))
        out = np.where(t > self.t0, -self.penalty, out)
        return float(out) if out.ndim == 0 else out


def _expectation_matrix(axis: np.ndarray, x: np.ndarray, w: np.ndarray) -> np.ndarray:
    n = axis.size
    lo, hi, frac = axis_weights(axis, axis[:, None] + x[None, :])
    P = np.zeros((n, n))
    rows = np.broadcast_to(np.arange(n)[:, None], lo.shape)
    np.add.at(P, (rows, lo), w[None, :] * (1.0 - frac))
    np.add.at(P, (rows, hi), w[None, :] * frac)
    return P


def backward_induction(spec: ProblemSpec, s: float, K: int, grid: Grid3, m: float = 0.0,
                       refine: int = 4, n_quantiles: int = 4000) -> InductionTable:
    """Finite-K post-switch values after switching at ``s`` with pre-switch mass ``m``.

    The mass axis starts at m with step a_step / refine and extends K reward
    quantiles past m + a_max; the time axis is t = t0 - c on the c-axis
    refined by ``refine``, so every solver node (a, t0 - s - c, c) is an
    oracle node (m + a, t0 - c).
    """
    if K < 0:
        raise ValueError("K must be nonnegative")
    if s < 0 or s > spec.t0:
        raise DomainError("switch time must lie in [0, t0]")
    st = spec.stage_b
    x, w = quantile_rule(st.reward, n_quantiles)
    h_m = grid.a_step / refine
    n_m = int(np.ceil((grid.a_max + K * float(x.max())) / h_m)) + 1
    m_axis = m + h_m * np.arange(n_m)
    n_t = refine * (grid.n_c - 1) + 1
    c_fine = np.linspace(0.0, spec.t0, n_t)
    t_axis = spec.t0 - c_fine[::-1]                      # increasing in t
    h_t = c_fine[1]

    z = h_t * np.arange(n_t)
    F = np.asarray(st.holding.cdf(z), dtype=float)
    dF = np.diff(F)
    P = _expectation_matrix(m_axis, x, w)

    W = np.asarray(spec.w_b(m, s, m_axis[:, None], t_axis[None, :]), dtype=float)
    layers = [W]
    policy = np.zeros((n_m, n_t))
    live = t_axis >= s - 1e-12
    for _ in range(K):
        prev = layers[-1]
        G = P @ prev                                      # E gamma_{j-1}(mt + X, t)
        new = np.full((n_m, n_t), np.nan)
        pol = np.zeros((n_m, n_t))
        for i in np.nonzero(live)[0]:
            span = n_t - i                                # t_i + z_l for l < span stays <= t0
            g = G[:, i:]
            cont = np.cumsum(dF[: span - 1] * 0.5 * (g[:, :-1] + g[:, 1:]), axis=1)
            cont = np.concatenate([np.zeros((n_m, 1)), cont], axis=1)
            kappa = (1.0 - F[:span]) * W[:, i:] + cont
            # stopping past the horizon: survival mass pays -C instead of w_b(t0)
            late = -spec.penalty * (1.0 - F[span - 1]) + cont[:, -1]
            best = kappa.argmax(axis=1)
            top = kappa[np.arange(n_m), best]
            new[:, i] = np.maximum(top, late)
            pol[:, i] = z[best]
        new[:, ~live] = W[:, ~live]
        layers.append(new)
        policy = pol
    return InductionTable(m, s, spec.t0, spec.penalty, m_axis, t_axis, np.stack(layers), policy, refine)


def compare_with_iterate(table: InductionTable, y_k: ValueTable3, spec: ProblemSpec) -> np.ndarray:
    """Rows (a, b, c, y_solver, y_oracle, abs_diff) on solver nodes shared with the oracle.

    The oracle's gamma_K minus w_b is compared with the K-th solver iterate.
    Only c <= t0 - s is meaningful; b = t0 - s - c is read on the solver grid.
    """
    g = y_k.grid
    r = table.refine
    s, m = table.s, table.m
    rows = []
    for k, c in enumerate(g.c):
        if c > spec.t0 - s + 1e-12:
            continue
        t = spec.t0 - c
        b = t - s
        kt = table.t_axis.size - 1 - r * k
        for ia, a in enumerate(g.a):
            gam = table.layers[-1][r * ia, kt]
            y_or = gam - float(spec.w_b(m, s, m + a, t))
            y_sv = float(y_k.value_at(a, b, c))
            rows.append((a, b, c, y_sv, y_or, abs(y_sv - y_or)))
    return np.array(rows, dtype=float).reshape(-1, 6)


def generator(spec: ProblemSpec, stage: str, a: float, elapsed: float, v: float,
              s: float = 0.0, y_b: ValueTable3 | None = None) -> float:
    """Generator of the payoff-carrying process.

    Stage ``"b"``: alpha(v) Delta_b(a) - c_b'(elapsed), elapsed = t - s.
    Stage ``"a"``: alpha_1(v) Delta_a(a) - [ybar'(t0 - elapsed) + c_a'(elapsed)], elapsed = s.
    Zero beyond the horizon. The stage-a drag needs the stage-two table.
    """
    if stage == "b":
        if s + elapsed > spec.t0:
            return 0.0
        st = spec.stage_b
        return float(st.holding.hazard(v) * mean_increment(st.utility, st.reward, a)
                     - st.cost.derivative(elapsed))
    if stage == "a":
        if elapsed > spec.t0:
            return 0.0
        if y_b is None:
            raise ValueError("stage-a generator needs the stage-two value table")
        c = spec.t0 - elapsed
        drag = ybar_prime(y_b, c) if c > 0 else 0.0
        st = spec.stage_a
        return float(st.holding.hazard(v) * mean_increment(st.utility, st.reward, a)
                     - drag - st.cost.derivative(elapsed))
    raise ValueError("stage must be 'a' or 'b'")


def _nondecreasing(g) -> bool:
    return bool(g.increasing) or g.kind == "constant"


def _require(cond: bool, what: str) -> None:
    if not cond:
        raise PreconditionError(what)


def threshold_rule_b(spec: ProblemSpec, a: float, t: float, s: float) -> str:
    """Exponential-holding rule: stop iff alpha_2 Delta_b(a) <= c_b'(t - s)."""
    st = spec.stage_b
    _require(isinstance(st.holding, Exponential), "stage_b holding must be exponential")
    _require(_nondecreasing(st.utility), "stage_b utility must be nondecreasing")
    _require(bool(st.utility.concave), "stage_b utility must be concave")
    _require(bool(st.cost.convex), "stage_b cost must be convex")
    lhs = st.holding.rate * float(mean_increment(st.utility, st.reward, a))
    return "stop" if lhs <= float(st.cost.derivative(t - s)) else "continue"


def threshold_mass_b(spec: ProblemSpec, elapsed: float = 0.0, a_hi: float | None = None) -> float:
    """Smallest a at which ``threshold_rule_b`` says stop (bisection; Delta_b decreasing)."""
    a_hi = spec.a_max if a_hi is None else a_hi
    if threshold_rule_b(spec, 0.0, elapsed, 0.0) == "stop":
        return 0.0
    if threshold_rule_b(spec, a_hi, elapsed, 0.0) == "continue":
        return np.inf
    lo, hi = 0.0, a_hi
    for _ in range(80):
        mid = 0.5 * (lo + hi)
        if threshold_rule_b(spec, mid, elapsed, 0.0) == "stop":
            hi = mid
        else:
            lo = mid
    return hi


def corollary2_check(spec: ProblemSpec) -> dict:
    """Expected policy when both stages have convex utility, concave cost, exponential holdings.

    Besides the structural hypotheses this requires the generator to be
    nonnegative at its smallest value (mass 0, worst time); with that, the
    generator paths are nondecreasing and start nonnegative, so both stops
    happen at t0 (r* = c at every state).
    """
    sa, sb = spec.stage_a, spec.stage_b
    for label, st in (("stage_a", sa), ("stage_b", sb)):
        _require(isinstance(st.holding, Exponential), f"{label} holding must be exponential")
        _require(_nondecreasing(st.utility), f"{label} utility must be nondecreasing")
        _require(bool(st.utility.convex), f"{label} utility must be convex")
        _require(bool(st.cost.concave), f"{label} cost must be concave")
    d_b = sb.holding.rate * float(mean_increment(sb.utility, sb.reward, 0.0))
    d_a = sa.holding.rate * float(mean_increment(sa.utility, sa.reward, 0.0))
    drift_b = d_b - float(sb.cost.derivative(0.0))
    # ybar'(t0 - s) = d_b - c_b'(t0 - s) once stage two runs to the horizon
    drift_a = d_a - float(sa.cost.derivative(0.0)) - (d_b - float(sb.cost.derivative(spec.t0)))
    _require(np.isfinite(drift_b) and drift_b >= 0, "stage_b generator is negative at the origin")
    _require(np.isfinite(drift_a) and drift_a >= 0, "stage_a generator is negative at the origin")
    return {
        "tau_a": "t0",
        "tau_b": "t0",
        "policy": "r* = c at every state",
        "drift_a": drift_a,
        "drift_b": drift_b,
    }
