"""Discretised value tables y(a, b, c) with companion argmax policies."""

from __future__ import annotations

from dataclasses import dataclass, field
import csv
import io
import json
from pathlib import Path

import numpy as np


@dataclass(frozen=True)
class Grid3:
    """Uniform axes a in [0, a_max], b in [0, t0], c in [0, t0].

    ``n_b == 1`` is a degenerate b-axis used internally when the stage cost is
    linear in time and the table cannot depend on b.
    """

    a_max: float
    t0: float
    n_a: int
    n_b: int
    n_c: int

    def __post_init__(self):
        if self.n_a < 2 or self.n_c < 2 or self.n_b < 1:
            raise ValueError("grid needs n_a, n_c >= 2 and n_b >= 1")
        if not (self.a_max > 0 and self.t0 > 0):
            raise ValueError("grid extents must be positive")

    @property
    def a(self) -> np.ndarray:
        return np.linspace(0.0, self.a_max, self.n_a)

    @property
    def b(self) -> np.ndarray:
        return np.linspace(0.0, self.t0, self.n_b) if self.n_b > 1 else np.zeros(1)

    @property
    def c(self) -> np.ndarray:
        return np.linspace(0.0, self.t0, self.n_c)

    @property
    def a_step(self) -> float:
        return self.a_max / (self.n_a - 1)

    @property
    def b_step(self) -> float:
        return self.t0 / (self.n_b - 1) if self.n_b > 1 else np.inf

    @property
    def c_step(self) -> float:
        return self.t0 / (self.n_c - 1)

    @property
    def shape(self) -> tuple[int, int, int]:
        return (self.n_a, self.n_b, self.n_c)

    def with_b(self, n_b: int) -> "Grid3":
        return Grid3(self.a_max, self.t0, self.n_a, n_b, self.n_c)

    def to_dict(self) -> dict:
        return {"a_max": self.a_max, "t0": self.t0, "n_a": self.n_a, "n_b": self.n_b, "n_c": self.n_c}


def axis_weights(axis: np.ndarray, x) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Linear interpolation brackets on a uniform axis, clamped to its ends.

    Returns (lo, hi, w) with value = (1 - w) * f[lo] + w * f[hi]. Positions
    within 1e-9 of a node snap onto it so on-grid queries are exact.
    """
    x = np.asarray(x, dtype=float)
    n = axis.size
    if n == 1:
        z = np.zeros(x.shape, dtype=int)
        return z, z, np.zeros(x.shape)
    step = (axis[-1] - axis[0]) / (n - 1)
    pos = np.clip((x - axis[0]) / step, 0.0, n - 1)
    near = np.rint(pos)
    pos = np.where(np.abs(pos - near) < 1e-9, near, pos)
    lo = np.minimum(np.floor(pos).astype(int), n - 2)
    w = pos - lo
    return lo, lo + 1, w


def interp3(grid: Grid3, table: np.ndarray, a, b, c):
    """Trilinear interpolation of ``table`` with clamping outside the grid."""
    a, b, c = np.broadcast_arrays(*(np.asarray(v, dtype=float) for v in (a, b, c)))
    ia0, ia1, wa = axis_weights(grid.a, a)
    ib0, ib1, wb = axis_weights(grid.b, b)
    ic0, ic1, wc = axis_weights(grid.c, c)
    out = np.zeros(a.shape)
    for ia, fa in ((ia0, 1 - wa), (ia1, wa)):
        for ib, fb in ((ib0, 1 - wb), (ib1, wb)):
            for ic, fc in ((ic0, 1 - wc), (ic1, wc)):
                out = out + fa * fb * fc * table[ia, ib, ic]
    return float(out) if out.ndim == 0 else out


@dataclass
class ValueTable3:
    grid: Grid3
    values: np.ndarray
    policy: np.ndarray
    iterations: int = 0
    residual: float = 0.0
    contraction_estimate: float = 0.0
    residuals: list = field(default_factory=list)
    label: str = "y"
    diagnostics: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.values.shape != self.grid.shape or self.policy.shape != self.grid.shape:
            raise ValueError("table shape does not match grid")

    def value_at(self, a, b, c):
        return interp3(self.grid, self.values, a, b, c)

    def policy_at(self, a, b, c):
        """Interpolated stopping delay, clipped into [0, c]."""
        r = np.asarray(interp3(self.grid, self.policy, a, b, c))
        out = np.clip(r, 0.0, np.maximum(np.asarray(c, dtype=float), 0.0))
        return float(out) if out.ndim == 0 else out

    def expand_b(self, n_b: int) -> "ValueTable3":
        """Broadcast a degenerate b-axis table onto ``n_b`` points."""
        if self.grid.n_b != 1:
            raise ValueError("only a degenerate b-axis can be expanded")
        g = self.grid.with_b(n_b)
        return ValueTable3(
            g,
            np.repeat(self.values, n_b, axis=1),
            np.repeat(self.policy, n_b, axis=1),
            self.iterations,
            self.residual,
            self.contraction_estimate,
            list(self.residuals),
            self.label,
            dict(self.diagnostics),
        )

    def header(self, **extra) -> dict:
        h = {
            "label": self.label,
            "grid": self.grid.to_dict(),
            "residual": self.residual,
            "iterations": self.iterations,
            "contraction_estimate": self.contraction_estimate,
        }
        h.update(extra)
        return h

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["a", "b", "c", "y", "r_star"])
        A, B, C = np.meshgrid(self.grid.a, self.grid.b, self.grid.c, indexing="ij")
        for row in zip(A.ravel(), B.ravel(), C.ravel(), self.values.ravel(), self.policy.ravel()):
            w.writerow([repr(float(v)) for v in row])
        return buf.getvalue()

    def save(self, csv_path, **extra) -> None:
        csv_path = Path(csv_path)
        csv_path.write_text(self.to_csv())
        csv_path.with_suffix(".json").write_text(json.dumps(self.header(**extra), indent=2, sort_keys=True) + "\n")

    @classmethod
    def load(cls, csv_path) -> "ValueTable3":
        csv_path = Path(csv_path)
        head = json.loads(csv_path.with_suffix(".json").read_text())
        g = Grid3(**head["grid"])
        data = np.loadtxt(csv_path, delimiter=",", skiprows=1, ndmin=2)
        values = data[:, 3].reshape(g.shape)
        policy = data[:, 4].reshape(g.shape)
        return cls(g, values, policy, head.get("iterations", 0), head.get("residual", 0.0),
                   head.get("contraction_estimate", 0.0), label=head.get("label", "y"))
