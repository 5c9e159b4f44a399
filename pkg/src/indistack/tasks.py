"""Task definitions: state costs, input metrics, and multi-robot lifting.

A task pairs a positive semi-definite state cost q(x) with a state-dependent
input metric R(x) = I + sum_i lambda_i r_i(x)^T r_i(x), where each r_i is the
input-space gradient row of a previously trained value function. Large
lambda_i penalize inputs that interfere with those earlier tasks, which is
what pushes a newly trained task toward gradient independence.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .dynamics import ControlAffineSystem
from .errors import ConfigurationError, ShapeError
from .validation import as_batch, as_vector


# ---------------------------------------------------------------------------
# State costs
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Region:
    """Axis-aligned rectangle; the boundary counts as inside."""

    lo: tuple[float, float]
    hi: tuple[float, float]

    def __post_init__(self):
        if not (self.hi[0] > self.lo[0] and self.hi[1] > self.lo[1]):
            raise ConfigurationError(f"degenerate region {self.lo}..{self.hi}")

    def contains(self, p) -> bool:
        return bool(
            self.lo[0] <= p[0] <= self.hi[0] and self.lo[1] <= p[1] <= self.hi[1]
        )

    def contains_batch(self, P: np.ndarray) -> np.ndarray:
        return (
            (P[:, 0] >= self.lo[0])
            & (P[:, 0] <= self.hi[0])
            & (P[:, 1] >= self.lo[1])
            & (P[:, 1] <= self.hi[1])
        )

    def to_dict(self) -> dict:
        return {"lo": list(self.lo), "hi": list(self.hi)}

    @classmethod
    def from_dict(cls, data: dict) -> "Region":
        return cls(lo=tuple(data["lo"]), hi=tuple(data["hi"]))


class StateCost:
    """Base class: a nonnegative cost over states with a batched evaluator."""

    kind = "custom"

    def __call__(self, x) -> float:
        X, _ = as_batch(x, self.dim, "x")
        return float(self.batch(X)[0])

    def batch(self, X: np.ndarray) -> np.ndarray:  # pragma: no cover - abstract
        raise NotImplementedError

    @property
    def dim(self) -> int:  # pragma: no cover - abstract
        raise NotImplementedError


class AvoidRegions(StateCost):
    """Constant penalty per robot whose position lies inside any region."""

    kind = "avoid_regions"

    def __init__(self, regions, penalty: float, num_robots: int = 1):
        if penalty < 0:
            raise ConfigurationError("penalty must be nonnegative")
        if num_robots < 1:
            raise ConfigurationError("num_robots must be >= 1")
        self.regions = [r if isinstance(r, Region) else Region(**r) for r in regions]
        if not self.regions:
            raise ConfigurationError("avoid cost needs at least one region")
        self.penalty = float(penalty)
        self.num_robots = int(num_robots)

    @property
    def dim(self) -> int:
        return 2 * self.num_robots

    def batch(self, X: np.ndarray) -> np.ndarray:
        total = np.zeros(X.shape[0])
        for i in range(self.num_robots):
            P = X[:, 2 * i : 2 * i + 2]
            inside = np.zeros(X.shape[0], dtype=bool)
            for region in self.regions:
                inside |= region.contains_batch(P)
            total += self.penalty * inside
        return total


class GoToPoint(StateCost):
    """gain * Euclidean distance from a single robot position to a target."""

    kind = "go_to_point"

    def __init__(self, target, gain: float):
        self.target = as_vector(target, 2, "target")
        if gain <= 0:
            raise ConfigurationError("gain must be positive")
        self.gain = float(gain)

    @property
    def dim(self) -> int:
        return 2

    def batch(self, X: np.ndarray) -> np.ndarray:
        return self.gain * np.linalg.norm(X - self.target, axis=1)


class Formation(StateCost):
    """gain * sum over robot pairs of | ||p_i - p_j|| - side |.

    Zero exactly when all pairwise distances equal `side` (for three robots,
    an equilateral triangle).
    """

    kind = "formation"

    def __init__(self, side: float, gain: float, num_robots: int = 3):
        if side <= 0 or gain <= 0:
            raise ConfigurationError("side and gain must be positive")
        if num_robots < 2:
            raise ConfigurationError("formation needs at least two robots")
        self.side = float(side)
        self.gain = float(gain)
        self.num_robots = int(num_robots)

    @property
    def dim(self) -> int:
        return 2 * self.num_robots

    def batch(self, X: np.ndarray) -> np.ndarray:
        total = np.zeros(X.shape[0])
        for i in range(self.num_robots):
            for j in range(i + 1, self.num_robots):
                d = np.linalg.norm(
                    X[:, 2 * i : 2 * i + 2] - X[:, 2 * j : 2 * j + 2], axis=1
                )
                total += np.abs(d - self.side)
        return self.gain * total


class CustomCost(StateCost):
    kind = "custom"

    def __init__(self, fn, dim: int):
        self._fn = fn
        self._dim = int(dim)

    @property
    def dim(self) -> int:
        return self._dim

    def batch(self, X: np.ndarray) -> np.ndarray:
        return np.asarray([float(self._fn(x)) for x in X])


def eval_state_cost(cost: StateCost, x) -> float:
    return cost(x)


# ---------------------------------------------------------------------------
# Input metric
# ---------------------------------------------------------------------------


@dataclass
class Penalty:
    """One interference penalty: weight * (L_g J(x) u)^2 with optional clamp.

    `clamp` limits the gradient-row norm before squaring; it keeps early
    training targets bounded when the prior value function has steep cliffs.
    """

    net: object
    weight: float
    clamp: float | None = 10.0

    def __post_init__(self):
        if self.weight <= 0:
            raise ConfigurationError("penalty weight must be positive")
        if self.clamp is not None and self.clamp <= 0:
            raise ConfigurationError("clamp must be positive or None")


def _clamp_rows(rows: np.ndarray, clamp: float | None) -> np.ndarray:
    if clamp is None:
        return rows
    norms = np.linalg.norm(rows, axis=-1, keepdims=True)
    scale = np.where(norms > clamp, clamp / np.maximum(norms, 1e-300), 1.0)
    return rows * scale


@dataclass
class InputMetric:
    """R(x) = I + sum_i weight_i * r_i(x)^T r_i(x), always symmetric PD."""

    penalties: tuple = ()

    def __post_init__(self):
        self.penalties = tuple(self.penalties)

    def rows_batch(self, sys: ControlAffineSystem, X: np.ndarray) -> list[np.ndarray]:
        """Clamped L_g J rows of each penalty net over a batch of states."""
        rows = []
        for pen in self.penalties:
            if pen.net.n != sys.n:
                raise ShapeError(
                    f"penalty net expects dim {pen.net.n}, system has n={sys.n}"
                )
            grads = pen.net.input_grad(X)
            rows.append(_clamp_rows(sys.input_rows(grads, X), pen.clamp))
        return rows

    def at_batch(self, sys: ControlAffineSystem, X: np.ndarray) -> np.ndarray:
        R = np.broadcast_to(np.eye(sys.m), (X.shape[0], sys.m, sys.m)).copy()
        for pen, rows in zip(self.penalties, self.rows_batch(sys, X)):
            R += pen.weight * np.einsum("bi,bj->bij", rows, rows)
        return R

    def at(self, sys: ControlAffineSystem, x) -> np.ndarray:
        X, _ = as_batch(x, sys.n, "x")
        return self.at_batch(sys, X)[0]


def input_metric_at(metric: InputMetric, sys: ControlAffineSystem, x) -> np.ndarray:
    return metric.at(sys, x)


# ---------------------------------------------------------------------------
# Task specification
# ---------------------------------------------------------------------------


@dataclass
class TaskSpec:
    """Everything defining one task's cost functional and training defaults."""

    name: str
    state_cost: StateCost
    input_metric: InputMetric = field(default_factory=InputMetric)
    discount: float = 0.99
    td_lambda: float = 0.9
    lookahead: int = 20
    assigned_robots: tuple[int, ...] | None = None

    def __post_init__(self):
        if not 0.0 < self.discount <= 1.0:
            raise ConfigurationError(f"discount must be in (0, 1], got {self.discount}")
        if not 0.0 <= self.td_lambda <= 1.0:
            raise ConfigurationError(
                f"td_lambda must be in [0, 1], got {self.td_lambda}"
            )
        if self.lookahead < 1:
            raise ConfigurationError(f"lookahead must be >= 1, got {self.lookahead}")


# ---------------------------------------------------------------------------
# Multi-robot lifting
# ---------------------------------------------------------------------------


class LiftedValueFunction:
    """Single-robot value function summed over an assigned robot subset.

    J(x) = sum_{i in robots} j(x_i) where x_i is robot i's state block.
    Gradients of unassigned robot blocks are exactly zero, so in a stacked
    controller the lifted task never asks anything of the other robots.
    """

    def __init__(self, base, robots, num_robots: int, robot_dim: int | None = None):
        robots = tuple(sorted(set(int(r) for r in robots)))
        if not robots:
            raise ConfigurationError("lifted task needs a nonempty robot subset")
        if robots[0] < 0 or robots[-1] >= num_robots:
            raise ConfigurationError(
                f"robot indices {robots} out of range for {num_robots} robots"
            )
        robot_dim = base.n if robot_dim is None else int(robot_dim)
        if base.n != robot_dim:
            raise ShapeError(
                f"base value function has dim {base.n}, robot blocks have {robot_dim}"
            )
        self.base = base
        self.robots = robots
        self.num_robots = int(num_robots)
        self.robot_dim = robot_dim

    @property
    def n(self) -> int:
        return self.num_robots * self.robot_dim

    def _blocks(self, X: np.ndarray, robot: int) -> np.ndarray:
        d = self.robot_dim
        return X[:, robot * d : (robot + 1) * d]

    def forward(self, x):
        X, single = as_batch(x, self.n, "x")
        total = np.zeros(X.shape[0])
        for robot in self.robots:
            total += self.base.forward(self._blocks(X, robot))
        return float(total[0]) if single else total

    def input_grad(self, x):
        X, single = as_batch(x, self.n, "x")
        out = np.zeros_like(X)
        d = self.robot_dim
        for robot in self.robots:
            out[:, robot * d : (robot + 1) * d] = self.base.input_grad(
                self._blocks(X, robot)
            )
        return out[0] if single else out


def lift_task(net, robots, sys: ControlAffineSystem) -> LiftedValueFunction:
    """Turn a single-robot value function into a team task on `sys`."""
    if sys.num_robots is None or sys.robot_dim is None:
        raise ConfigurationError("system does not carry a robot partition")
    return LiftedValueFunction(net, robots, sys.num_robots, sys.robot_dim)
