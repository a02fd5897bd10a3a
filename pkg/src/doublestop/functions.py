"""Closed set of utility (mass -> money) and cost (time -> money) functions."""

from __future__ import annotations

from dataclasses import dataclass, field
import math

import numpy as np


class Utility:
    kind = "abstract"
    increasing = False
    concave = False
    convex = False

    def __call__(self, m):
        raise NotImplementedError

    @property
    def bound(self) -> float:
        """sup of |g| on [0, inf) (inf when unbounded)."""
        raise NotImplementedError

    def to_config(self) -> dict:
        raise NotImplementedError


@dataclass(frozen=True)
class LinearUtility(Utility):
    """g(m) = slope * min(m, cap); uncapped when ``cap`` is None."""

    slope: float = 1.0
    cap: float | None = None
    kind: str = field(default="linear", init=False)

    def __post_init__(self):
        if self.slope < 0:
            raise ValueError("utility slope must be nonnegative")
        if self.cap is not None and self.cap <= 0:
            raise ValueError("utility cap must be positive")

    def __call__(self, m):
        m = np.asarray(m, dtype=float)
        if self.cap is not None:
            m = np.minimum(m, self.cap)
        return self.slope * m

    @property
    def increasing(self):
        return self.slope > 0

    @property
    def concave(self):
        return True

    @property
    def convex(self):
        return self.cap is None

    @property
    def bound(self):
        return math.inf if self.cap is None else self.slope * self.cap

    def to_config(self):
        cfg = {"kind": self.kind, "slope": self.slope}
        if self.cap is not None:
            cfg["cap"] = self.cap
        return cfg


@dataclass(frozen=True)
class SaturatingUtility(Utility):
    """g(m) = scale * (1 - exp(-rate * m))."""

    scale: float = 1.0
    rate: float = 1.0
    kind: str = field(default="exp_saturating", init=False)
    increasing = True
    concave = True
    convex = False

    def __post_init__(self):
        if self.scale <= 0 or self.rate <= 0:
            raise ValueError("saturating utility needs positive scale and rate")

    def __call__(self, m):
        return -self.scale * np.expm1(-self.rate * np.asarray(m, dtype=float))

    @property
    def bound(self):
        return self.scale

    def to_config(self):
        return {"kind": self.kind, "scale": self.scale, "rate": self.rate}


@dataclass(frozen=True)
class ConstantUtility(Utility):
    value: float = 0.0
    kind: str = field(default="constant", init=False)
    increasing = False
    concave = True
    convex = True

    def __call__(self, m):
        return np.full_like(np.asarray(m, dtype=float), self.value)

    @property
    def bound(self):
        return abs(self.value)

    def to_config(self):
        return {"kind": self.kind, "value": self.value}


class Cost:
    kind = "abstract"

    def __call__(self, t):
        raise NotImplementedError

    def derivative(self, t):
        raise NotImplementedError

    def to_config(self) -> dict:
        raise NotImplementedError


@dataclass(frozen=True)
class LinearCost(Cost):
    rate: float = 0.0
    kind: str = field(default="linear", init=False)
    convex = True
    concave = True

    def __post_init__(self):
        if self.rate < 0:
            raise ValueError("cost rate must be nonnegative")

    def __call__(self, t):
        return self.rate * np.asarray(t, dtype=float)

    def derivative(self, t):
        return np.full_like(np.asarray(t, dtype=float), self.rate)

    def to_config(self):
        return {"kind": self.kind, "rate": self.rate}


@dataclass(frozen=True)
class PowerCost(Cost):
    """c(t) = coef * t**power; derivative is infinite at 0 when power < 1."""

    coef: float = 1.0
    power: float = 2.0
    kind: str = field(default="power", init=False)

    def __post_init__(self):
        if self.coef < 0 or self.power <= 0:
            raise ValueError("power cost needs coef >= 0 and power > 0")

    @property
    def convex(self):
        return self.power >= 1

    @property
    def concave(self):
        return self.power <= 1

    def __call__(self, t):
        return self.coef * np.maximum(np.asarray(t, dtype=float), 0.0) ** self.power

    def derivative(self, t):
        t = np.maximum(np.asarray(t, dtype=float), 0.0)
        with np.errstate(divide="ignore"):
            return self.coef * self.power * t ** (self.power - 1.0)

    def to_config(self):
        return {"kind": self.kind, "coef": self.coef, "power": self.power}


def utility_from_config(cfg: dict) -> Utility:
    kind = cfg["kind"]
    if kind == "linear":
        cap = cfg.get("cap")
        return LinearUtility(float(cfg.get("slope", 1.0)), None if cap is None else float(cap))
    if kind == "exp_saturating":
        return SaturatingUtility(float(cfg.get("scale", 1.0)), float(cfg.get("rate", 1.0)))
    if kind == "constant":
        return ConstantUtility(float(cfg.get("value", 0.0)))
    raise ValueError(f"unknown utility kind {kind!r}")


def cost_from_config(cfg: dict) -> Cost:
    kind = cfg["kind"]
    if kind == "linear":
        return LinearCost(float(cfg.get("rate", 0.0)))
    if kind == "power":
        return PowerCost(float(cfg.get("coef", 1.0)), float(cfg.get("power", 2.0)))
    raise ValueError(f"unknown cost kind {kind!r}")
