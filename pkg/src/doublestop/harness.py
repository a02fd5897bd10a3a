"""Monte Carlo execution of stopping policies and of the competitive payoff field.

Every replicate owns a counter-based Philox stream keyed by (seed, replicate),
so a replicate's draws do not depend on how many other replicates run or in
what order. The policy simulation advances all replicates in lockstep with
numpy; each replicate reads uniforms from its own pre-drawn block, one row
per purpose (stage-a holding, stage-a reward, stage-b holding, stage-b reward).
"""

from __future__ import annotations

from dataclasses import asdict, dataclass, field
import math

import numpy as np

from .grid import ValueTable3
from .model import ProblemSpec
from .payoff import payoff_field_psi
from .process import MarkedEvent, Trajectory, simulate_stream, superpose
from .stage2 import StoppingPolicy

HOLD_A, REWARD_A, HOLD_B, REWARD_B = range(4)
BLOCK = 8
MAX_STEPS = 100_000


def replicate_generator(seed: int, rep: int, purpose: int = 0) -> np.random.Generator:
    """Independent stream for (seed, replicate); ``purpose`` selects a jumped sub-stream."""
    bitgen = np.random.Philox(key=[int(seed), int(rep)])
    if purpose:
        bitgen = bitgen.jumped(purpose)
    return np.random.Generator(bitgen)


class UniformBank:
    """Per-replicate uniforms on (0, 1], consumed in order per purpose."""

    def __init__(self, seed: int, reps: np.ndarray, n_purposes: int = 4, block: int = BLOCK):
        self.gens = [replicate_generator(seed, r) for r in reps]
        self.block = block
        self.n_purposes = n_purposes
        self.data = self._draw()
        self.pos = np.zeros((n_purposes, len(self.gens)), dtype=int)

    def _draw(self) -> np.ndarray:
        shape = (self.n_purposes, self.block)
        return np.stack([g.random(shape) for g in self.gens]) if self.gens else np.zeros((0,) + shape)

    def take(self, purpose: int, idx: np.ndarray) -> np.ndarray:
        p = self.pos[purpose, idx]
        if p.size and p.max() >= self.data.shape[2]:
            self.data = np.concatenate([self.data, self._draw()], axis=2)
        u = self.data[idx, purpose, p]
        self.pos[purpose, idx] += 1
        return 1.0 - u

    def rewind(self, *purposes: int) -> None:
        for p in purposes:
            self.pos[p] = 0


def _summary(x: np.ndarray, t0: float, bins: int = 10) -> dict:
    counts, edges = np.histogram(x, bins=bins, range=(0.0, t0))
    q = np.quantile(x, [0.0, 0.1, 0.25, 0.5, 0.75, 0.9, 1.0])
    return {
        "mean": float(np.mean(x)),
        "quantiles": {k: float(v) for k, v in zip(("min", "p10", "p25", "p50", "p75", "p90", "max"), q)},
        "frac_at_zero": float(np.mean(x <= 1e-12)),
        "frac_at_horizon": float(np.mean(x >= t0 - 1e-12)),
        "bin_edges": [float(e) for e in edges],
        "counts": [int(c) for c in counts],
    }


def _mean_se(x: np.ndarray) -> tuple[float, float]:
    n = x.size
    mean = float(np.sum(x) / n)
    se = float(np.std(x, ddof=1) / math.sqrt(n)) if n > 1 else 0.0
    return mean, se


@dataclass
class SimulationReport:
    instance: str
    gamma00: float | None
    mc_mean: float
    mc_stderr: float
    replicates: int
    seed: int
    switch_times: dict
    stop_times: dict
    baselines: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return asdict(self)

    def dominates_baselines(self, k: float = 3.0) -> dict:
        out = {}
        for name, b in self.baselines.items():
            se = math.hypot(self.mc_stderr, b["stderr"])
            out[name] = self.mc_mean >= b["mean"] - k * se
        return out


@dataclass
class _Paths:
    payoff: np.ndarray
    switch: np.ndarray
    stop: np.ndarray
    events: list | None


def _advance(policy, hold, reward, bank, hold_p, reward_p, t_start, t0, record, mark, events,
             b_elapsed):
    """Run the threshold rule from event times t_start; returns (stop time, mass gained)."""
    n = t_start.size
    elapsed = np.zeros(n)
    mass = np.zeros(n)
    stop = np.full(n, np.nan)
    active = np.arange(n)
    for _ in range(MAX_STEPS):
        if active.size == 0:
            return stop, mass
        now = t_start[active] + elapsed[active]
        b = elapsed[active] if b_elapsed else now
        R = np.asarray(policy(mass[active], b, t0 - now), dtype=float)
        S = np.asarray(hold.ppf(bank.take(hold_p, active)), dtype=float)
        halt = R < S
        stop[active[halt]] = np.minimum(now[halt] + R[halt], t0)
        go = active[~halt]
        X = np.asarray(reward.ppf(bank.take(reward_p, go)), dtype=float)
        elapsed[go] += S[~halt]
        mass[go] += X
        if record:
            for i, x in zip(go, X):
                events[i].append(MarkedEvent(float(t_start[i] + elapsed[i]), mark, float(x)))
        active = go
    raise RuntimeError("policy simulation did not terminate")


def _simulate(spec: ProblemSpec, policy_a, policy_b, bank: UniformBank,
              record: bool = False) -> _Paths:
    t0 = spec.t0
    n = len(bank.gens)
    events = [[] for _ in range(n)] if record else None
    sa, sb = spec.stage_a, spec.stage_b
    # stage a: state (mass, absolute time, time left) at stream-1 events
    s, m = _advance(policy_a, sa.holding, sa.reward, bank, HOLD_A, REWARD_A, np.zeros(n), t0,
                    record, 1, events, b_elapsed=False)
    # stage b: state (post-switch mass, time since switch, time left)
    tau, a = _advance(policy_b, sb.holding, sb.reward, bank, HOLD_B, REWARD_B, s, t0,
                      record, 3, events, b_elapsed=True)
    if np.any(s > tau) or np.any(tau > t0) or np.any(s < 0):
        raise AssertionError("policy produced an infeasible stopping time")
    payoff = np.asarray(spec.w_b(m, s, m + a, tau), dtype=float)
    return _Paths(payoff, s, tau, events)


def _baseline_horizon(spec: ProblemSpec, bank: UniformBank) -> np.ndarray:
    """Switch at 0 and fish stream 3 until t0 (reuses the stage-b draws from their start)."""
    bank.rewind(HOLD_B, REWARD_B)
    sb = spec.stage_b
    n = len(bank.gens)
    T = np.zeros(n)
    A = np.zeros(n)
    active = np.arange(n)
    while active.size:
        S = np.asarray(sb.holding.ppf(bank.take(HOLD_B, active)), dtype=float)
        arrive = T[active] + S <= spec.t0
        hit = active[arrive]
        A[hit] += np.asarray(sb.reward.ppf(bank.take(REWARD_B, hit)), dtype=float)
        T[hit] += S[arrive]
        active = hit
    return np.asarray(spec.w_b(0.0, 0.0, A, spec.t0), dtype=float)


def run_policy_simulation(spec: ProblemSpec, policy_a: StoppingPolicy, policy_b: StoppingPolicy,
                          replicates: int, seed: int, gamma00: float | None = None) -> SimulationReport:
    """Estimate E Z(tau_a, tau_b) under the two threshold policies, with baselines."""
    if replicates < 1:
        raise ValueError("replicates must be >= 1")
    bank = UniformBank(seed, np.arange(replicates))
    paths = _simulate(spec, policy_a, policy_b, bank)
    mean, se = _mean_se(paths.payoff)
    horizon = _baseline_horizon(spec, bank)
    h_mean, h_se = _mean_se(horizon)
    origin = float(spec.w_b(0.0, 0.0, 0.0, 0.0))
    return SimulationReport(
        instance=spec.name,
        gamma00=gamma00,
        mc_mean=mean,
        mc_stderr=se,
        replicates=replicates,
        seed=seed,
        switch_times=_summary(paths.switch, spec.t0),
        stop_times=_summary(paths.stop, spec.t0),
        baselines={
            "switch0_stop_t0": {"mean": h_mean, "stderr": h_se},
            "switch0_stop0": {"mean": origin, "stderr": 0.0},
        },
    )


def replicate_paths(spec: ProblemSpec, policy_a, policy_b, seed: int, n: int) -> list[tuple[Trajectory, float, float]]:
    """The first ``n`` replicates as (trajectory, stop time, payoff); same draws as the full run."""
    paths = _simulate(spec, policy_a, policy_b, UniformBank(seed, np.arange(n)), record=True)
    out = []
    for i in range(n):
        traj = Trajectory(tuple(paths.events[i]), switch_time=float(paths.switch[i]))
        out.append((traj, float(paths.stop[i]), float(paths.payoff[i])))
    return out


def paths_csv(paths) -> str:
    lines = ["replicate,n,time,mark,reward,switch_time,stop_time,payoff"]
    for r, (traj, stop, pay) in enumerate(paths):
        tail = f"{traj.switch_time!r},{stop!r},{pay!r}"
        if not traj.events:
            lines.append(f"{r},0,,,,{tail}")
        for n, e in enumerate(traj.events, start=1):
            lines.append(f"{r},{n},{e.time!r},{e.mark},{e.reward!r},{tail}")
    return "\n".join(lines) + "\n"


# ---------------------------------------------------------------------------
# competitive payoff field


@dataclass(frozen=True)
class ConstantRule:
    """Stop at a fixed time (the second stop never precedes the switch)."""

    time: float

    def first_stop(self, traj: Trajectory, spec: ProblemSpec) -> float:
        return float(self.time)

    def second_stop(self, traj: Trajectory, s: float, spec: ProblemSpec) -> float:
        return max(float(self.time), s)


@dataclass(frozen=True)
class ThresholdRule:
    """Delay rule R_n = r*(mass, time, time left) read from a value table."""

    table: ValueTable3

    def _run(self, times: np.ndarray, rewards: np.ndarray, start: float, t0: float, elapsed_axis: bool) -> float:
        t_prev, mass = start, 0.0
        for t_next, x in zip(list(times) + [math.inf], list(rewards) + [0.0]):
            b = t_prev - start if elapsed_axis else t_prev
            r = float(self.table.policy_at(mass, b, t0 - t_prev))
            if t_prev + r < t_next:
                return min(t_prev + r, t0)
            t_prev, mass = t_next, mass + x
        return t0

    def first_stop(self, traj: Trajectory, spec: ProblemSpec) -> float:
        pre = traj.filter(1, 2)
        return self._run(pre.times, pre.rewards, 0.0, spec.t0, elapsed_axis=False)

    def second_stop(self, traj: Trajectory, s: float, spec: ProblemSpec) -> float:
        post = Trajectory(tuple(e for e in traj.events if e.mark == 3 and e.time > s))
        return self._run(post.times, post.rewards, s, spec.t0, elapsed_axis=True)


def rule_from_config(cfg: dict):
    if cfg["kind"] == "constant":
        return ConstantRule(float(cfg["time"]))
    if cfg["kind"] == "table":
        return ThresholdRule(ValueTable3.load(cfg["path"]))
    raise ValueError(f"unknown rule kind {cfg['kind']!r}")


def evaluate_game_path(traj: Trajectory, tau1, tau2, sigma, spec: ProblemSpec) -> tuple[float, float]:
    """(psi_1, psi_2) on one path; ``traj`` must already contain the post-switch stream."""
    t1 = tau1.first_stop(traj, spec)
    t2 = tau2.first_stop(traj, spec)
    s = min(t1, t2)
    sig = sigma.second_stop(traj, s, spec)
    return payoff_field_psi(traj, t1, t2, sig, spec)


@dataclass
class GameReport:
    instance: str
    means: tuple
    stderrs: tuple
    replicates: int
    seed: int
    tie_fraction: float
    event_ties: int

    def to_dict(self) -> dict:
        return asdict(self)


def run_game_payoff_eval(spec: ProblemSpec, tau1, tau2, sigma, replicates: int, seed: int) -> GameReport:
    """Mean payoffs (psi_1, psi_2) of the two anglers under the given rules."""
    if spec.rod2 is None or spec.players is None:
        raise ValueError("game evaluation needs rod2 and two player configurations")
    t0 = spec.t0
    psi = np.zeros((replicates, 2))
    ties = 0
    event_ties = 0
    for rep in range(replicates):
        rod1 = simulate_stream(spec.stage_a.holding, spec.stage_a.reward, t0, replicate_generator(seed, rep, 0), mark=1)
        rod2 = simulate_stream(spec.rod2.holding, spec.rod2.reward, t0, replicate_generator(seed, rep, 1), mark=2)
        pre = superpose(rod1, rod2)
        t1 = tau1.first_stop(pre, spec)
        t2 = tau2.first_stop(pre, spec)
        s = min(t1, t2)
        ties += t1 == t2
        horizon = max(t0 - s, 0.0)
        post = simulate_stream(spec.stage_b.holding, spec.stage_b.reward, horizon,
                               replicate_generator(seed, rep, 2), mark=3, start=min(s, t0))
        full = superpose(pre, post)
        full = Trajectory(full.events, switch_time=s, ties=full.ties)
        event_ties += full.ties
        sig = sigma.second_stop(full, s, spec)
        psi[rep] = payoff_field_psi(full, t1, t2, sig, spec)
    m1, se1 = _mean_se(psi[:, 0])
    m2, se2 = _mean_se(psi[:, 1])
    return GameReport(spec.name, (m1, m2), (se1, se2), replicates, seed,
                      float(ties / replicates), int(event_ties))
