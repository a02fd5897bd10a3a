"""Payoff functionals: single-angler Z(s, t) and the competitive fields."""

from __future__ import annotations

from .model import PlayerSpec, ProblemSpec
from .process import Trajectory


def payoff_Z(spec: ProblemSpec, s: float, t: float, m: float, m_tilde: float) -> float:
    """Z(s, t) with scalar masses.

    ``m`` is the mass at min(s, t) and ``m_tilde`` the total mass M_t^s
    (pre-switch mass plus post-switch catches).
    """
    if t > spec.t0:
        return -spec.penalty
    if t < s:
        return float(spec.w_a(m, t))
    return float(spec.w_b(m, s, m_tilde, t))


def _g_a(p: PlayerSpec, i: int, m_vec, j: int) -> float:
    bonus = p.last_catch_bonus if j == i else 0.0
    return float(p.utility_a(m_vec[i - 1])) + bonus


def _w_b(spec: ProblemSpec, p: PlayerSpec, i: int, m_vec, j: int, s: float,
         m_tilde: float, t: float) -> float:
    # j is the player who forced the switch; that player leads and takes the other rod
    w_a = _g_a(p, i, m_vec, j) - float(p.cost_a(s))
    util = p.utility_b_lead if j == i else p.utility_b_follow
    g_b = float(util(m_tilde - sum(m_vec)))
    return w_a + g_b - float(spec.stage_b.cost(t - s))


def payoff_competitive(spec: ProblemSpec, i: int, j: int, s: float, t: float,
                       m_vec, m_tilde: float) -> tuple[float, float]:
    """(Z_i, Z_{-i}) when player ``i`` forces the first stop at ``s``.

    ``j`` is the rod of the last catch before the stop, ``m_vec`` the per-rod
    masses at min(s, t) and ``m_tilde`` the total mass at t.
    """
    if i not in (1, 2):
        raise ValueError("player index must be 1 or 2")
    if spec.players is None:
        raise ValueError("spec has no player configuration")
    o = 3 - i
    t0 = spec.t0
    if t > t0:
        return -spec.penalty, -spec.penalty
    pi, po = spec.players[i - 1], spec.players[o - 1]
    if t <= s <= t0:
        return _g_a(pi, i, m_vec, j), _g_a(po, o, m_vec, j)
    if s < t:
        zi = _w_b(spec, pi, i, m_vec, i, s, m_tilde, t)
        zo = _w_b(spec, po, o, m_vec, i, s, m_tilde, t)
        return zi, zo
    return 0.0, 0.0


def payoff_field_psi(traj: Trajectory, tau1: float, tau2: float, sigma: float,
                     spec: ProblemSpec) -> tuple[float, float]:
    """(psi_1, psi_2) for first-stop rules tau1, tau2 and final stop sigma.

    Marks 1, 2 are the two rods before the switch, mark 3 the post-switch
    stream. The earlier stopper leads; on a tie both receive the leader form.
    """
    s = min(tau1, tau2)
    j = traj.last_mark(s)
    at = min(s, sigma)
    m_vec = (traj.mass(at, (1,)), traj.mass(at, (2,)))
    m_tilde = traj.post_switch_mass(sigma, s)
    if tau1 < tau2:
        z1, z2 = payoff_competitive(spec, 1, j, s, sigma, m_vec, m_tilde)
        return z1, z2
    if tau2 < tau1:
        z2, z1 = payoff_competitive(spec, 2, j, s, sigma, m_vec, m_tilde)
        return z1, z2
    z1 = payoff_competitive(spec, 1, j, s, sigma, m_vec, m_tilde)[0]
    z2 = payoff_competitive(spec, 2, j, s, sigma, m_vec, m_tilde)[0]
    return z1, z2
