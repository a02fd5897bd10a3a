"""Command-line entry point: solve, simulate, oracle, game, compare.

Exit codes: 0 success, 1 configuration error, 2 solver non-convergence.
"""

from __future__ import annotations

import argparse
import json
import logging
from pathlib import Path
import sys

import numpy as np

from .grid import Grid3
from .harness import (paths_csv, replicate_paths, rule_from_config,
                      run_game_payoff_eval, run_policy_simulation)
from .model import ConfigError, ProblemSpec, load_config, spec_from_config
from .oracle import (PreconditionError, backward_induction, compare_with_iterate,
                     threshold_mass_b)
from .stage1 import FirstStageValue, ybar_slope_report, solve_y_a
from .stage2 import DEFAULT_MAX_ITERS, DEFAULT_TOL, StoppingPolicy, iterate_y_b, solve_y_b
from .sweep import ConvergenceError

log = logging.getLogger("doublestop")

DEFAULT_GRID = 64
DEFAULT_REPLICATES = 100_000
DEFAULT_SEED = 12345


def _parse_grid(text: str) -> tuple[int, int, int]:
    try:
        parts = tuple(int(p) for p in text.split(","))
    except ValueError:
        raise argparse.ArgumentTypeError("grid must be three integers na,nb,nc") from None
    if len(parts) != 3 or min(parts) < 2:
        raise argparse.ArgumentTypeError("grid must be three integers >= 2: na,nb,nc")
    return parts


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="doublestop", description=__doc__.splitlines()[0])
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)
    for name, help_text in (
        ("solve", "solve both stages and write the value tables"),
        ("simulate", "solve, then estimate the optimal value by Monte Carlo"),
        ("oracle", "compare the K-th stage-two iterate with backward induction"),
        ("game", "evaluate the competitive payoff field under given rules"),
        ("compare", "solve + simulate + oracle into one summary"),
    ):
        p = sub.add_parser(name, help=help_text)
        p.add_argument("--config", required=True, type=Path)
        p.add_argument("--out", type=Path, default=Path("out"))
        p.add_argument("--grid", type=_parse_grid, default=None, help="na,nb,nc")
        p.add_argument("--tol", type=float, default=None)
        p.add_argument("--seed", type=int, default=None)
        p.add_argument("--replicates", type=int, default=None)
        p.add_argument("--dump-paths", type=int, default=0, metavar="N",
                       help="write the first N simulated paths to trajectories.csv")
    return parser


class Run:
    """Resolved settings for one invocation (CLI flags override the config)."""

    def __init__(self, args: argparse.Namespace):
        self.cfg = load_config(args.config)
        self.spec: ProblemSpec = spec_from_config(self.cfg)
        g = self.cfg.get("grid", {})
        na, nb, nc = args.grid or (g.get("n_a", DEFAULT_GRID), g.get("n_b", DEFAULT_GRID),
                                   g.get("n_c", DEFAULT_GRID))
        self.grid = Grid3(self.spec.a_max, self.spec.t0, na, nb, nc)
        solver = self.cfg.get("solver", {})
        self.tol = args.tol if args.tol is not None else solver.get("tol", DEFAULT_TOL)
        self.max_iters = solver.get("max_iters", DEFAULT_MAX_ITERS)
        sim = self.cfg.get("simulation", {})
        self.seed = args.seed if args.seed is not None else sim.get("seed", DEFAULT_SEED)
        self.replicates = args.replicates if args.replicates is not None else sim.get("replicates", DEFAULT_REPLICATES)
        if self.replicates < 1:
            raise ConfigError("replicates must be >= 1")
        self.dump_paths = args.dump_paths
        self.out: Path = args.out
        self.out.mkdir(parents=True, exist_ok=True)
        self.summary: dict = {"instance": self.spec.name, "grid": self.grid.to_dict()}
        self._solved: FirstStageValue | None = None

    def solve(self) -> FirstStageValue:
        if self._solved is None:
            y_b = solve_y_b(self.spec, self.grid, self.tol, self.max_iters)
            first = solve_y_a(self.spec, y_b, self.grid, self.tol, self.max_iters)
            y_b.save(self.out / "table_stage_b.csv")
            first.y_a.save(self.out / "table_stage_a.csv", gamma00=first.gamma00)
            self.summary["gamma00"] = first.gamma00
            self.summary["stage_b"] = _table_stats(y_b)
            self.summary["stage_a"] = _table_stats(first.y_a)
            slope = ybar_slope_report(y_b, self.spec)
            self.summary["ybar_slope"] = {k: slope[k] for k in ("predicted", "max_abs_discrepancy")}
            log.info("gamma(0,0) = %.6f; max |ybar'| = %.4g against the exponential-case value 0",
                     first.gamma00, slope["max_abs_discrepancy"])
            self._solved = first
        return self._solved

    def simulate(self) -> None:
        first = self.solve()
        pa, pb = StoppingPolicy(first.y_a), StoppingPolicy(first.y_b)
        report = run_policy_simulation(self.spec, pa, pb, self.replicates, self.seed, first.gamma00)
        self.summary["simulation"] = report.to_dict()
        self.summary["simulation"]["dominates_baselines"] = report.dominates_baselines()
        if self.dump_paths > 0:
            paths = replicate_paths(self.spec, pa, pb, self.seed, self.dump_paths)
            (self.out / "trajectories.csv").write_text(paths_csv(paths))

    def oracle(self) -> None:
        oc = self.cfg.get("oracle", {})
        K, s = int(oc.get("K", 2)), float(oc.get("s", 0.0))
        table = backward_induction(self.spec, s, K, self.grid)
        rows = compare_with_iterate(table, iterate_y_b(self.spec, self.grid, K), self.spec)
        lines = ["a,b,c,y_solver,y_oracle,abs_diff"]
        lines += [",".join(repr(float(v)) for v in row) for row in rows]
        (self.out / "oracle_diff.csv").write_text("\n".join(lines) + "\n")
        info = {"K": K, "s": s, "nodes": int(rows.shape[0]), "max_abs_diff": float(rows[:, 5].max())}
        try:
            info["threshold_mass_b"] = threshold_mass_b(self.spec)
        except PreconditionError as exc:
            info["threshold_mass_b"] = f"not applicable: {exc}"
        self.summary["oracle"] = info

    def game(self) -> None:
        game = self.cfg.get("game")
        if game is None:
            raise ConfigError("game: section missing from config")
        rules = game.get("rules", {})
        horizon = {"kind": "constant", "time": self.spec.t0}
        tau1, tau2, sigma = (rule_from_config(rules.get(k, horizon)) for k in ("tau1", "tau2", "sigma"))
        report = run_game_payoff_eval(self.spec, tau1, tau2, sigma, self.replicates, self.seed)
        self.summary["game"] = report.to_dict()

    def write_summary(self) -> None:
        text = json.dumps(_plain(self.summary), indent=2, sort_keys=True)
        (self.out / "summary.json").write_text(text + "\n")


def _table_stats(t) -> dict:
    return {
        "iterations": t.iterations,
        "residual": t.residual,
        "contraction_estimate": t.contraction_estimate,
        "contraction_bound": t.diagnostics.get("q"),
    }


def _plain(obj):
    if isinstance(obj, dict):
        return {str(k): _plain(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_plain(v) for v in obj]
    if isinstance(obj, np.generic):
        return obj.item()
    if isinstance(obj, float) and not np.isfinite(obj):
        return repr(obj)
    return obj


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(message)s")
    try:
        run = Run(args)
        if args.command in ("solve", "compare"):
            run.solve()
        if args.command in ("simulate", "compare"):
            run.simulate()
        if args.command in ("oracle", "compare"):
            run.oracle()
        if args.command == "game":
            run.game()
        run.write_summary()
    except (ConfigError, FileNotFoundError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 1
    except ConvergenceError as exc:
        print(f"solver did not converge: {exc}", file=sys.stderr)
        return 2
    return 0


if __name__ == "__main__":
    sys.exit(main())
