from __future__ import annotations

from pathlib import Path

import pytest

from doublestop.grid import Grid3
from doublestop.model import load_spec, spec_from_config
from doublestop.stage1 import solve_y_a
from doublestop.stage2 import solve_y_b

CONFIGS = Path(__file__).resolve().parent.parent / "configs"

# criterion -> (passed, detail); filled by the acceptance module
ACCEPTANCE: dict[int, tuple[bool, str]] = {}


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for k in sorted(ACCEPTANCE):
        ok, detail = ACCEPTANCE[k]
        terminalreporter.write_line(f"criterion {k}: {'PASS' if ok else 'FAIL'}  {detail}")


def stage(utility, cost, holding, reward):
    return {"utility": utility, "cost": cost, "holding": holding, "reward": reward}


def make_spec(stage_a=None, stage_b=None, **top):
    """Spec from partial dicts; defaults are the zero-payoff instance."""
    zero = stage({"kind": "constant", "value": 0.0}, {"kind": "linear", "rate": 0.0},
                 {"kind": "exponential", "rate": 1.0}, {"kind": "exponential", "mean": 1.0})
    cfg = {"horizon": 1.0, "penalty": 1.0, "a_max": 5.0,
           "stage_a": stage_a or zero, "stage_b": stage_b or zero}
    cfg.update(top)
    return spec_from_config(cfg)


@pytest.fixture(scope="session")
def lin1():
    return load_spec(CONFIGS / "lin1.json")


@pytest.fixture(scope="session")
def ref1():
    return load_spec(CONFIGS / "ref1.json")


@pytest.fixture(scope="session")
def dominant():
    return load_spec(CONFIGS / "lin1_stage_b_dominant.json")


@pytest.fixture(scope="session")
def zero_spec():
    return make_spec()


def _solved(spec, n):
    g = Grid3(spec.a_max, spec.t0, n, n, n)
    y_b = solve_y_b(spec, g)
    return y_b, solve_y_a(spec, y_b, g)


@pytest.fixture(scope="session")
def lin1_solved(lin1):
    return _solved(lin1, 64)


@pytest.fixture(scope="session")
def ref1_solved(ref1):
    return _solved(ref1, 48)


@pytest.fixture(scope="session")
def dominant_solved(dominant):
    return _solved(dominant, 32)
