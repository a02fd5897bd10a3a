"""Holding-time and reward distributions.

Holding times expose cdf/pdf/survival/hazard plus an inverse cdf used for
sampling. Reward laws carry a fixed quadrature rule ``(nodes, weights)`` so
that expectations ``E f(a + X)`` reduce to a weighted sum.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

import numpy as np

# queries with survival below this are rejected by ``hazard``
SURVIVAL_FLOOR = 1e-12
# reward quadrature covers at least 1 - TAIL_MASS of the law
TAIL_MASS = 1e-8
DEFAULT_NODES = 32


class DomainError(ValueError):
    """Raised when a quantity is queried outside its domain of definition."""


class HoldingDist:
    """Base class for continuous holding-time laws on [0, inf)."""

    kind: str = "abstract"

    def cdf(self, t):
        raise NotImplementedError

    def pdf(self, t):
        raise NotImplementedError

    def ppf(self, u):
        raise NotImplementedError

    def mean(self) -> float:
        raise NotImplementedError

    def sf(self, t):
        return 1.0 - self.cdf(t)

    def hazard(self, t):
        """Hazard rate f(t) / (1 - F(t)); raises DomainError where survival vanishes."""
        t = np.asarray(t, dtype=float)
        if np.any(t < 0):
            raise DomainError("hazard queried at negative time")
        surv = self.sf(t)
        if np.any(surv < SURVIVAL_FLOOR):
            raise DomainError(f"hazard undefined: survival below {SURVIVAL_FLOOR:g}")
        out = self.pdf(t) / surv
        return float(out) if out.ndim == 0 else out

    def sample(self, rng: np.random.Generator, size=None):
        return self.ppf(rng.random(size))

    def to_config(self) -> dict:
        raise NotImplementedError


@dataclass(frozen=True)
class Exponential(HoldingDist):
    rate: float
    kind: str = field(default="exponential", init=False)

    def __post_init__(self):
        if not self.rate > 0:
            raise ValueError("exponential rate must be positive")

    def cdf(self, t):
        t = np.maximum(np.asarray(t, dtype=float), 0.0)
        return -np.expm1(-self.rate * t)

    def sf(self, t):
        t = np.maximum(np.asarray(t, dtype=float), 0.0)
        return np.exp(-self.rate * t)

    def pdf(self, t):
        t = np.asarray(t, dtype=float)
        return np.where(t >= 0, self.rate * np.exp(-self.rate * np.maximum(t, 0.0)), 0.0)

    def hazard(self, t):
        t = np.asarray(t, dtype=float)
        if np.any(t < 0):
            raise DomainError("hazard queried at negative time")
        out = np.full_like(t, self.rate)
        return float(out) if out.ndim == 0 else out

    def ppf(self, u):
        return -np.log1p(-np.asarray(u, dtype=float)) / self.rate

    def mean(self) -> float:
        return 1.0 / self.rate

    def to_config(self) -> dict:
        return {"kind": self.kind, "rate": self.rate}


@dataclass(frozen=True)
class Weibull(HoldingDist):
    shape: float
    scale: float = 1.0
    kind: str = field(default="weibull", init=False)

    def __post_init__(self):
        if not (self.shape > 0 and self.scale > 0):
            raise ValueError("weibull shape and scale must be positive")

    def _z(self, t):
        t = np.maximum(np.asarray(t, dtype=float), 0.0)
        return (t / self.scale) ** self.shape

    def cdf(self, t):
        return -np.expm1(-self._z(t))

    def sf(self, t):
        return np.exp(-self._z(t))

    def pdf(self, t):
        t = np.asarray(t, dtype=float)
        tp = np.maximum(t, 0.0)
        k, lam = self.shape, self.scale
        with np.errstate(divide="ignore", invalid="ignore"):
            dens = (k / lam) * (tp / lam) ** (k - 1) * np.exp(-((tp / lam) ** k))
        return np.where(t >= 0, dens, 0.0)

    def ppf(self, u):
        u = np.asarray(u, dtype=float)
        return self.scale * (-np.log1p(-u)) ** (1.0 / self.shape)

    def mean(self) -> float:
        from math import gamma

        return self.scale * gamma(1.0 + 1.0 / self.shape)

    def to_config(self) -> dict:
        return {"kind": self.kind, "shape": self.shape, "scale": self.scale}


@dataclass(frozen=True)
class Uniform(HoldingDist):
    low: float = 0.0
    high: float = 1.0
    kind: str = field(default="uniform", init=False)

    def __post_init__(self):
        if not (0 <= self.low < self.high):
            raise ValueError("uniform holding needs 0 <= low < high")

    def cdf(self, t):
        t = np.asarray(t, dtype=float)
        return np.clip((t - self.low) / (self.high - self.low), 0.0, 1.0)

    def pdf(self, t):
        t = np.asarray(t, dtype=float)
        inside = (t >= self.low) & (t <= self.high)
        return np.where(inside, 1.0 / (self.high - self.low), 0.0)

    def ppf(self, u):
        return self.low + (self.high - self.low) * np.asarray(u, dtype=float)

    def mean(self) -> float:
        return 0.5 * (self.low + self.high)

    def to_config(self) -> dict:
        return {"kind": self.kind, "low": self.low, "high": self.high}


class RewardDist:
    """Base class for nonnegative reward laws with a fixed quadrature rule."""

    kind: str = "abstract"

    def cdf(self, x):
        raise NotImplementedError

    def ppf(self, u):
        raise NotImplementedError

    def mean(self) -> float:
        raise NotImplementedError

    def second_moment(self) -> float:
        raise NotImplementedError

    @property
    def nodes(self) -> np.ndarray:
        return self._quad[0]

    @property
    def weights(self) -> np.ndarray:
        return self._quad[1]

    def expect(self, f: Callable[[np.ndarray], np.ndarray]) -> float:
        """E f(X) by the quadrature rule."""
        return float(np.dot(self.weights, f(self.nodes)))

    def sample(self, rng: np.random.Generator, size=None):
        return self.ppf(rng.random(size))

    def to_config(self) -> dict:
        raise NotImplementedError


def _gauss_legendre_on(lo: float, hi: float, n: int, density) -> tuple[np.ndarray, np.ndarray]:
    x, w = np.polynomial.legendre.leggauss(n)
    nodes = 0.5 * (hi - lo) * x + 0.5 * (hi + lo)
    weights = 0.5 * (hi - lo) * w * density(nodes)
    weights = weights / weights.sum()
    return nodes, weights


@dataclass(frozen=True)
class ExponentialReward(RewardDist):
    rate: float
    n_nodes: int = DEFAULT_NODES
    kind: str = field(default="exponential", init=False)
    _quad: tuple = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        if not self.rate > 0:
            raise ValueError("exponential reward rate must be positive")
        upper = -np.log(TAIL_MASS) / self.rate
        dens = lambda x: self.rate * np.exp(-self.rate * x)  # noqa: E731
        object.__setattr__(self, "_quad", _gauss_legendre_on(0.0, upper, self.n_nodes, dens))

    def cdf(self, x):
        x = np.maximum(np.asarray(x, dtype=float), 0.0)
        return -np.expm1(-self.rate * x)

    def ppf(self, u):
        return -np.log1p(-np.asarray(u, dtype=float)) / self.rate

    def mean(self) -> float:
        return 1.0 / self.rate

    def second_moment(self) -> float:
        return 2.0 / self.rate**2

    def to_config(self) -> dict:
        return {"kind": self.kind, "rate": self.rate}


@dataclass(frozen=True)
class UniformReward(RewardDist):
    low: float = 0.0
    high: float = 1.0
    n_nodes: int = DEFAULT_NODES
    kind: str = field(default="uniform", init=False)
    _quad: tuple = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        if not (0 <= self.low < self.high):
            raise ValueError("uniform reward needs 0 <= low < high")
        dens = lambda x: np.ones_like(x)  # noqa: E731
        object.__setattr__(self, "_quad", _gauss_legendre_on(self.low, self.high, self.n_nodes, dens))

    def cdf(self, x):
        x = np.asarray(x, dtype=float)
        return np.clip((x - self.low) / (self.high - self.low), 0.0, 1.0)

    def ppf(self, u):
        return self.low + (self.high - self.low) * np.asarray(u, dtype=float)

    def mean(self) -> float:
        return 0.5 * (self.low + self.high)

    def second_moment(self) -> float:
        lo, hi = self.low, self.high
        return (hi**3 - lo**3) / (3.0 * (hi - lo))

    def to_config(self) -> dict:
        return {"kind": self.kind, "low": self.low, "high": self.high}


@dataclass(frozen=True)
class DiscreteReward(RewardDist):
    values: tuple
    probs: tuple
    kind: str = field(default="discrete", init=False)
    _quad: tuple = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        v = np.asarray(self.values, dtype=float)
        p = np.asarray(self.probs, dtype=float)
        if v.shape != p.shape or v.ndim != 1 or v.size == 0:
            raise ValueError("discrete reward needs equal-length value/prob lists")
        if np.any(v < 0):
            raise ValueError("rewards must be nonnegative")
        if np.any(p <= 0) or abs(p.sum() - 1.0) > 1e-12:
            raise ValueError("discrete probabilities must be positive and sum to 1")
        order = np.argsort(v, kind="stable")
        object.__setattr__(self, "values", tuple(v[order]))
        object.__setattr__(self, "probs", tuple(p[order]))
        object.__setattr__(self, "_quad", (v[order], p[order]))

    def cdf(self, x):
        v, p = self._quad
        x = np.asarray(x, dtype=float)
        cum = np.concatenate([[0.0], np.cumsum(p)])
        return cum[np.searchsorted(v, x, side="right")]

    def ppf(self, u):
        v, p = self._quad
        cum = np.cumsum(p)
        cum[-1] = 1.0
        idx = np.searchsorted(cum, np.asarray(u, dtype=float), side="right")
        return v[np.minimum(idx, v.size - 1)]

    def mean(self) -> float:
        v, p = self._quad
        return float(np.dot(v, p))

    def second_moment(self) -> float:
        v, p = self._quad
        return float(np.dot(v * v, p))

    def to_config(self) -> dict:
        return {"kind": self.kind, "values": list(self.values), "probs": list(self.probs)}


def hazard(dist: HoldingDist, t):
    return dist.hazard(t)


def mean_increment(g, H: RewardDist, a):
    """E[g(a + X) - g(a)] for X ~ H; vectorised over ``a``."""
    a = np.asarray(a, dtype=float)
    x, w = H.nodes, H.weights
    inc = g(a[..., None] + x) - g(a)[..., None]
    out = inc @ w
    return float(out) if out.ndim == 0 else out


def sample(dist, rng: np.random.Generator, size=None):
    return dist.sample(rng, size)


def holding_from_config(cfg: dict) -> HoldingDist:
    kind = cfg["kind"]
    if kind == "exponential":
        return Exponential(float(cfg["rate"]))
    if kind == "weibull":
        return Weibull(float(cfg["shape"]), float(cfg.get("scale", 1.0)))
    if kind == "uniform":
        return Uniform(float(cfg.get("low", 0.0)), float(cfg["high"]))
    raise ValueError(f"unknown holding kind {kind!r}")


def reward_from_config(cfg: dict) -> RewardDist:
    kind = cfg["kind"]
    n = int(cfg.get("nodes", DEFAULT_NODES))
    if kind == "exponential":
        if "rate" in cfg:
            return ExponentialReward(float(cfg["rate"]), n)
        return ExponentialReward(1.0 / float(cfg["mean"]), n)
    if kind == "uniform":
        return UniformReward(float(cfg.get("low", 0.0)), float(cfg["high"]), n)
    if kind == "discrete":
        return DiscreteReward(tuple(cfg["values"]), tuple(cfg["probs"]))
    raise ValueError(f"unknown reward kind {kind!r}")
