"""Problem specification and JSON config handling."""

from __future__ import annotations

from dataclasses import dataclass
import json
import math
from pathlib import Path

import jsonschema

from .distributions import HoldingDist, RewardDist, holding_from_config, reward_from_config
from .functions import Cost, Utility, cost_from_config, utility_from_config


class ConfigError(ValueError):
    """Malformed or inadmissible problem configuration."""


_NUM = {"type": "number"}
_FN = {"type": "object", "required": ["kind"], "properties": {"kind": {"type": "string"}}}

_STAGE = {
    "type": "object",
    "required": ["utility", "cost", "holding", "reward"],
    "properties": {
        "utility": {
            **_FN,
            "properties": {
                "kind": {"enum": ["linear", "exp_saturating", "constant"]},
                "slope": _NUM, "cap": {"type": ["number", "null"]},
                "scale": _NUM, "rate": _NUM, "value": _NUM,
            },
        },
        "cost": {
            **_FN,
            "properties": {
                "kind": {"enum": ["linear", "power"]},
                "rate": _NUM, "coef": _NUM, "power": _NUM,
            },
        },
        "holding": {
            **_FN,
            "properties": {
                "kind": {"enum": ["exponential", "weibull", "uniform"]},
                "rate": _NUM, "shape": _NUM, "scale": _NUM, "low": _NUM, "high": _NUM,
            },
        },
        "reward": {
            **_FN,
            "properties": {
                "kind": {"enum": ["exponential", "uniform", "discrete"]},
                "rate": _NUM, "mean": _NUM, "low": _NUM, "high": _NUM,
                "values": {"type": "array", "items": _NUM},
                "probs": {"type": "array", "items": _NUM},
                "nodes": {"type": "integer", "minimum": 2},
            },
        },
    },
}

_RULE = {
    "type": "object",
    "required": ["kind"],
    "properties": {
        "kind": {"enum": ["constant", "table"]},
        "time": _NUM,
        "path": {"type": "string"},
    },
}

_PLAYER = {
    "type": "object",
    "required": ["utility_a", "cost_a", "utility_b_lead", "utility_b_follow"],
    "properties": {
        "utility_a": _STAGE["properties"]["utility"],
        "cost_a": _STAGE["properties"]["cost"],
        "utility_b_lead": _STAGE["properties"]["utility"],
        "utility_b_follow": _STAGE["properties"]["utility"],
        "last_catch_bonus": _NUM,
    },
}

CONFIG_SCHEMA = {
    "$schema": "http://json-schema.org/draft-07/schema#",
    "title": "double stopping problem instance",
    "type": "object",
    "required": ["horizon", "penalty", "stage_a", "stage_b"],
    "properties": {
        "name": {"type": "string"},
        "horizon": {"type": "number", "exclusiveMinimum": 0},
        "penalty": {"type": "number", "minimum": 0},
        "a_max": {"type": "number", "exclusiveMinimum": 0},
        "stage_a": _STAGE,
        "stage_b": _STAGE,
        "rod2": {
            "type": "object",
            "required": ["holding", "reward"],
            "properties": {
                "holding": _STAGE["properties"]["holding"],
                "reward": _STAGE["properties"]["reward"],
            },
        },
        "grid": {
            "type": "object",
            "properties": {
                "n_a": {"type": "integer", "minimum": 2},
                "n_b": {"type": "integer", "minimum": 2},
                "n_c": {"type": "integer", "minimum": 2},
            },
        },
        "solver": {
            "type": "object",
            "properties": {
                "tol": {"type": "number", "exclusiveMinimum": 0},
                "max_iters": {"type": "integer", "minimum": 1},
            },
        },
        "simulation": {
            "type": "object",
            "properties": {
                "replicates": {"type": "integer", "minimum": 1},
                "seed": {"type": "integer", "minimum": 0},
            },
        },
        "oracle": {
            "type": "object",
            "properties": {
                "K": {"type": "integer", "minimum": 0},
                "s": {"type": "number", "minimum": 0},
            },
        },
        "game": {
            "type": "object",
            "required": ["players"],
            "properties": {
                "players": {"type": "array", "items": _PLAYER, "minItems": 2, "maxItems": 2},
                "rules": {
                    "type": "object",
                    "properties": {"tau1": _RULE, "tau2": _RULE, "sigma": _RULE},
                },
            },
        },
    },
}


@dataclass(frozen=True)
class StageSpec:
    utility: Utility
    cost: Cost
    holding: HoldingDist
    reward: RewardDist

    def to_config(self) -> dict:
        return {
            "utility": self.utility.to_config(),
            "cost": self.cost.to_config(),
            "holding": self.holding.to_config(),
            "reward": self.reward.to_config(),
        }


@dataclass(frozen=True)
class RodSpec:
    holding: HoldingDist
    reward: RewardDist


@dataclass(frozen=True)
class PlayerSpec:
    """Per-angler payoff pieces of the competitive formulation.

    ``utility_a`` is applied to the player's own rod mass before the switch
    and ``last_catch_bonus`` is added when the rod index passed to it equals
    the player's own. Before the switch that index is the rod of the last
    catch; in the post-switch payoff it is the index of the player who forced
    the switch, so there the bonus goes to the leader. The post-switch utility
    depends on the technique the player ends up with (the leader takes the
    opponent's rod).
    """

    utility_a: Utility
    cost_a: Cost
    utility_b_lead: Utility
    utility_b_follow: Utility
    last_catch_bonus: float = 0.0


@dataclass(frozen=True)
class ProblemSpec:
    horizon: float
    penalty: float
    stage_a: StageSpec
    stage_b: StageSpec
    a_max: float
    rod2: RodSpec | None = None
    players: tuple[PlayerSpec, PlayerSpec] | None = None
    name: str = "instance"

    def __post_init__(self):
        if not self.horizon > 0:
            raise ConfigError("horizon must be positive")
        if self.penalty < 0:
            raise ConfigError("penalty must be nonnegative")
        for label, stage in (("stage_a", self.stage_a), ("stage_b", self.stage_b)):
            if not float(stage.holding.cdf(self.horizon)) < 1.0:
                raise ConfigError(
                    f"{label}.holding: F(horizon) must be < 1 for the value operator to contract"
                )

    @property
    def t0(self) -> float:
        return self.horizon

    def w_a(self, m, t):
        return self.stage_a.utility(m) - self.stage_a.cost(t)

    def w_b(self, m, s, m_tilde, t):
        return self.w_a(m, s) + self.stage_b.utility(m_tilde - m) - self.stage_b.cost(t - s)

    def payoff_bound(self) -> float:
        """G^a + G^b + C^a + C^b + C."""
        ca = float(self.stage_a.cost(self.horizon))
        cb = float(self.stage_b.cost(self.horizon))
        return self.stage_a.utility.bound + self.stage_b.utility.bound + ca + cb + self.penalty


def default_a_max(horizon: float, stages) -> float:
    """Mass-axis extent covering a renewal-reward total with a generous margin."""
    best = 0.0
    for st in stages:
        n = horizon / st.holding.mean() + 1.0
        mu = st.reward.mean()
        sd = math.sqrt(n * st.reward.second_moment())
        best = max(best, n * mu + 4.0 * sd)
    return best


def _format_error(err: jsonschema.ValidationError) -> str:
    path = "/".join(str(p) for p in err.absolute_path) or "<root>"
    return f"{path}: {err.message}"


def validate_config(cfg: dict) -> None:
    validator = jsonschema.Draft7Validator(CONFIG_SCHEMA)
    errors = sorted(validator.iter_errors(cfg), key=lambda e: list(e.absolute_path))
    if errors:
        raise ConfigError("; ".join(_format_error(e) for e in errors))


def _build(cfg: dict, where: str, fn):
    try:
        return fn(cfg)
    except (KeyError, ValueError, TypeError) as exc:
        raise ConfigError(f"{where}: {exc}") from exc


def _stage(cfg: dict, where: str) -> StageSpec:
    return StageSpec(
        utility=_build(cfg["utility"], f"{where}/utility", utility_from_config),
        cost=_build(cfg["cost"], f"{where}/cost", cost_from_config),
        holding=_build(cfg["holding"], f"{where}/holding", holding_from_config),
        reward=_build(cfg["reward"], f"{where}/reward", reward_from_config),
    )


def _player(cfg: dict, where: str) -> PlayerSpec:
    return PlayerSpec(
        utility_a=_build(cfg["utility_a"], f"{where}/utility_a", utility_from_config),
        cost_a=_build(cfg["cost_a"], f"{where}/cost_a", cost_from_config),
        utility_b_lead=_build(cfg["utility_b_lead"], f"{where}/utility_b_lead", utility_from_config),
        utility_b_follow=_build(cfg["utility_b_follow"], f"{where}/utility_b_follow", utility_from_config),
        last_catch_bonus=float(cfg.get("last_catch_bonus", 0.0)),
    )


def spec_from_config(cfg: dict) -> ProblemSpec:
    validate_config(cfg)
    stage_a = _stage(cfg["stage_a"], "stage_a")
    stage_b = _stage(cfg["stage_b"], "stage_b")
    rod2 = None
    if "rod2" in cfg:
        rod2 = RodSpec(
            holding=_build(cfg["rod2"]["holding"], "rod2/holding", holding_from_config),
            reward=_build(cfg["rod2"]["reward"], "rod2/reward", reward_from_config),
        )
    players = None
    if "game" in cfg:
        p = cfg["game"]["players"]
        players = (_player(p[0], "game/players/0"), _player(p[1], "game/players/1"))
    horizon = float(cfg["horizon"])
    a_max = float(cfg["a_max"]) if "a_max" in cfg else default_a_max(horizon, (stage_a, stage_b))
    return ProblemSpec(
        horizon=horizon,
        penalty=float(cfg["penalty"]),
        stage_a=stage_a,
        stage_b=stage_b,
        a_max=a_max,
        rod2=rod2,
        players=players,
        name=cfg.get("name", "instance"),
    )


def load_config(path) -> dict:
    text = Path(path).read_text()
    try:
        return json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}: line {exc.lineno} column {exc.colno}: {exc.msg}") from exc


def load_spec(path) -> ProblemSpec:
    return spec_from_config(load_config(path))
