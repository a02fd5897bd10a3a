"""Two-stage optimal stopping on marked renewal-reward processes."""

from .grid import Grid3, ValueTable3
from .model import ConfigError, ProblemSpec, load_spec, spec_from_config
from .stage1 import FirstStageValue, solve_y_a
from .stage2 import StoppingPolicy, solve_y_b
from .sweep import ConvergenceError

__all__ = [
    "ConfigError",
    "ConvergenceError",
    "FirstStageValue",
    "Grid3",
    "ProblemSpec",
    "StoppingPolicy",
    "ValueTable3",
    "load_spec",
    "solve_y_a",
    "solve_y_b",
    "spec_from_config",
]
