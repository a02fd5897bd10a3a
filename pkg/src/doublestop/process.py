"""Marked renewal-reward trajectories: simulation, superposition, accessors."""

from __future__ import annotations

import csv
from dataclasses import dataclass
import io

import numpy as np

from .distributions import HoldingDist, RewardDist


@dataclass(frozen=True)
class MarkedEvent:
    time: float
    mark: int
    reward: float


@dataclass(frozen=True)
class Trajectory:
    """Time-ordered marked events; ``switch_time`` is the phase change s, if any."""

    events: tuple[MarkedEvent, ...] = ()
    switch_time: float | None = None
    ties: int = 0

    def __post_init__(self):
        t = self.times
        if t.size > 1 and np.any(np.diff(t) < 0):
            raise ValueError("events must be time ordered")
        if any(e.reward < 0 for e in self.events):
            raise ValueError("rewards must be nonnegative")

    def __len__(self):
        return len(self.events)

    @property
    def times(self) -> np.ndarray:
        return np.array([e.time for e in self.events], dtype=float)

    @property
    def marks(self) -> np.ndarray:
        return np.array([e.mark for e in self.events], dtype=int)

    @property
    def rewards(self) -> np.ndarray:
        return np.array([e.reward for e in self.events], dtype=float)

    def filter(self, *marks: int) -> "Trajectory":
        keep = tuple(e for e in self.events if e.mark in marks)
        return Trajectory(keep, self.switch_time)

    def count(self, mark: int, t: float) -> int:
        """N_i(t): number of mark-i events at or before t."""
        return sum(1 for e in self.events if e.mark == mark and e.time <= t)

    def mass(self, t: float, marks=None) -> float:
        """M_t: total reward of events at or before t (optionally restricted to marks)."""
        return float(sum(e.reward for e in self.events
                         if e.time <= t and (marks is None or e.mark in marks)))

    def post_switch_mass(self, t: float, s: float | None = None, pre=(1, 2), post=(3,)) -> float:
        """M_t^s: pre-switch marks counted up to min(s, t), post-switch marks in (s, t]."""
        s = self.switch_time if s is None else s
        if s is None:
            return self.mass(t, pre)
        before = self.mass(min(s, t), pre)
        after = sum(e.reward for e in self.events if e.mark in post and s < e.time <= t)
        return float(before + after)

    def last_mark(self, t: float, marks=(1, 2)) -> int:
        """Mark of the last event at or before t among ``marks`` (0 when none)."""
        last = 0
        for e in self.events:
            if e.time > t:
                break
            if e.mark in marks:
                last = e.mark
        return last

    def group_indices(self, group) -> list[int]:
        """n^C_k for k = 0, 1, ...: 1-based indices of events with marks in ``group``."""
        return [0] + [n for n, e in enumerate(self.events, start=1) if e.mark in group]

    def first_after(self, group, t: float) -> int | None:
        """n^C(t) = inf{n : T_n > t, mark_n in C}; None when no such event."""
        for n, e in enumerate(self.events, start=1):
            if e.time > t and e.mark in group:
                return n
        return None

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["n", "time", "mark", "reward"])
        for n, e in enumerate(self.events, start=1):
            w.writerow([n, repr(float(e.time)), e.mark, repr(float(e.reward))])
        return buf.getvalue()


def simulate_stream(holding: HoldingDist, reward: RewardDist, horizon: float,
                    rng: np.random.Generator, mark: int = 1, start: float = 0.0) -> Trajectory:
    """Renewal-reward path on (start, start + horizon]; the first event past it is dropped."""
    if horizon < 0:
        raise ValueError("horizon must be nonnegative")
    end = start + horizon
    events = []
    t = start
    while True:
        t = t + float(holding.sample(rng))
        if t > end:
            break
        events.append(MarkedEvent(t, mark, float(reward.sample(rng))))
    return Trajectory(tuple(events))


def superpose(first: Trajectory, second: Trajectory) -> Trajectory:
    """Merge two single-mark streams; exact time ties put the lower mark first."""
    merged = sorted(first.events + second.events, key=lambda e: (e.time, e.mark))
    ties = sum(1 for a, b in zip(merged, merged[1:]) if a.time == b.time)
    return Trajectory(tuple(merged), ties=first.ties + second.ties + ties)
