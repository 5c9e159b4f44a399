"""Declarative scenario definitions and closed-loop evaluation.

A scenario bundles the system (robot count), region geometry, task cost
definitions, independence penalty weights, stack order, success thresholds,
initial-state sampler, and training hyperparameters. Three scenarios ship
builtin:

  s51  one robot moves to a point while avoiding a square region
  s52  three robots form a triangle while avoiding a central square
  s53  three robots avoid three squares, robot 0 goes to the origin,
       and the team forms a triangle (priority avoid > goto > formation)

Region placements that the source experiments leave unspecified are fixed
here and marked as assumptions in the comments.
"""

from __future__ import annotations

import hashlib
import json
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, asdict

import numpy as np

from .controller import PriorityStack, build_qp, solve
from .dynamics import ControlAffineSystem, euler_step, single_integrator_team
from .errors import ConfigurationError, ShapeError
from .tasks import (
    AvoidRegions,
    Formation,
    GoToPoint,
    InputMetric,
    LiftedValueFunction,
    Penalty,
    Region,
    StateCost,
    TaskSpec,
    lift_task,
)
from .training import TrainConfig, value_iteration
from .value_net import ValueNet

REJECTION_LIMIT = 100_000

# Consecutive steps with max |u| below this freeze the episode early: the
# remaining drift is bounded by steps * dt * tol, far below any threshold.
EQUILIBRIUM_TOL = 1e-5
EQUILIBRIUM_STEPS = 25


@dataclass
class TaskDef:
    """One task inside a scenario: cost definition plus training overrides."""

    name: str
    kind: str  # avoid_regions | go_to_point | formation
    params: dict = field(default_factory=dict)
    scope: str = "robot"  # "robot": trained on one robot; "team": full state
    assigned: tuple | None = None  # robots the lifted task acts on (None: all)
    train: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.scope not in ("robot", "team"):
            raise ConfigurationError(f"task scope must be robot|team, got {self.scope}")


@dataclass
class ScenarioConfig:
    name: str
    num_robots: int
    regions: list
    tasks: dict
    lambdas: dict
    stack: list
    success: dict
    sampler: dict
    trials: int
    methods: dict
    training: dict = field(default_factory=dict)
    seeds: dict = field(default_factory=lambda: {"train": 0, "eval": 1})
    dt: float = 0.01
    episode_seconds: float = 20.0
    kappa: float = 1e3

    def __post_init__(self):
        if self.num_robots < 1:
            raise ConfigurationError("num_robots must be >= 1")
        if self.trials < 1:
            raise ConfigurationError("trial count must be >= 1")
        self.regions = [r if isinstance(r, Region) else Region(**r) for r in self.regions]
        self.tasks = {
            k: (v if isinstance(v, TaskDef) else TaskDef(name=k, **v))
            for k, v in self.tasks.items()
        }
        for name in self.stack:
            if name not in self.tasks:
                raise ConfigurationError(f"stack entry {name!r} is not a defined task")

    # -- plumbing ------------------------------------------------------------

    def system(self) -> ControlAffineSystem:
        return single_integrator_team(self.num_robots)

    def to_dict(self) -> dict:
        data = asdict(self)
        data["regions"] = [r.to_dict() for r in self.regions]
        data["tasks"] = {
            k: {
                "kind": t.kind,
                "params": t.params,
                "scope": t.scope,
                "assigned": list(t.assigned) if t.assigned is not None else None,
                "train": t.train,
            }
            for k, t in self.tasks.items()
        }
        return data

    @classmethod
    def from_dict(cls, data: dict) -> "ScenarioConfig":
        try:
            return cls(**data)
        except TypeError as exc:
            raise ConfigurationError(f"malformed scenario: {exc}") from exc

    def save(self, path) -> None:
        with open(path, "w") as fh:
            json.dump(self.to_dict(), fh, indent=2, sort_keys=True)

    @classmethod
    def load(cls, path) -> "ScenarioConfig":
        try:
            with open(path) as fh:
                data = json.load(fh)
        except FileNotFoundError:
            raise ConfigurationError(f"scenario file not found: {path}") from None
        except json.JSONDecodeError as exc:
            raise ConfigurationError(f"scenario file {path} is not valid JSON: {exc}") from None
        return cls.from_dict(data)

    def digest(self) -> str:
        payload = json.dumps(self.to_dict(), sort_keys=True).encode()
        return hashlib.sha256(payload).hexdigest()

    def assigned_robots(self, task_name: str) -> tuple:
        tdef = self.tasks[task_name]
        if tdef.assigned is not None:
            return tuple(tdef.assigned)
        return tuple(range(self.num_robots))


# ---------------------------------------------------------------------------
# Builtin scenarios
# ---------------------------------------------------------------------------


def _square(cx: float, cy: float, half: float) -> Region:
    return Region(lo=(cx - half, cy - half), hi=(cx + half, cy + half))


def builtin(name: str) -> ScenarioConfig:
    """The three shipped scenarios with their pinned cost constants."""
    if name == "s51":
        # Region placement is an assumption: unit square centred at the origin,
        # goal on the far side so the straight-line path crosses it.
        return ScenarioConfig(
            name="s51",
            num_robots=1,
            regions=[_square(0.0, 0.0, 0.5)],
            tasks={
                "avoid": TaskDef(
                    name="avoid",
                    kind="avoid_regions",
                    params={"penalty": 60.0},
                    scope="robot",
                ),
                "goto": TaskDef(
                    name="goto",
                    kind="go_to_point",
                    params={"target": [-2.0, 0.0], "gain": 5.0},
                    scope="robot",
                ),
            },
            lambdas={"goto": 1e4},
            stack=["avoid", "goto"],
            success={
                "avoid": {"final_max": 0.0, "no_entry": True},
                # gain 5 * goal radius 0.2
                "goto": {"final_max": 1.0, "strict": True},
            },
            sampler={"kind": "segment", "start": [2.0, -0.45], "stop": [2.0, 0.45]},
            trials=10,
            methods={
                "baseline": {"avoid": {"model": "avoid"}, "goto": {"model": "goto_base"}},
                "independent": {
                    "avoid": {"model": "avoid"},
                    "goto": {"model": "goto_ind", "penalties": {"avoid": 1e4}},
                },
            },
            training={
                "box": [[-3.0, -3.0], [3.0, 3.0]],
                "hidden": [64],
                "iterations": 150,
                "dataset_size": 1024,
                "horizon": 12,
                "td_lambda": 0.9,
                "gamma": 0.99,
                "dt": 0.02,
                "batch_size": 128,
                "learning_rate": 2e-3,
                "fit_epochs": 8,
                "clamp": 10.0,
            },
        )
    if name == "s52":
        return ScenarioConfig(
            name="s52",
            num_robots=3,
            regions=[_square(0.0, 0.0, 0.5)],
            tasks={
                "avoid": TaskDef(
                    name="avoid",
                    kind="avoid_regions",
                    params={"penalty": 35.0},
                    scope="robot",
                ),
                "formation": TaskDef(
                    name="formation",
                    kind="formation",
                    params={"side": 0.75, "gain": 1.5},
                    scope="team",
                    train={"hidden": [64, 64], "iterations": 220, "dataset_size": 2048},
                ),
            },
            lambdas={"formation": 5e4},
            stack=["avoid", "formation"],
            success={
                "avoid": {"final_max": 0.0, "no_entry": True},
                "formation": {"final_max": 0.4, "strict": True},
            },
            sampler={"kind": "box", "lo": [-1.0, -1.0], "hi": [1.0, 1.0]},
            trials=50,
            methods={
                "baseline": {
                    "avoid": {"model": "avoid"},
                    "formation": {"model": "formation_base"},
                },
                "independent": {
                    "avoid": {"model": "avoid"},
                    "formation": {"model": "formation_ind", "penalties": {"avoid": 5e4}},
                },
            },
            training={
                "box": [[-2.0, -2.0], [2.0, 2.0]],
                "team_box": [[-1.5, -1.5], [1.5, 1.5]],
                "hidden": [64],
                "iterations": 150,
                "dataset_size": 1024,
                "horizon": 10,
                "td_lambda": 0.9,
                "gamma": 0.99,
                "dt": 0.02,
                "batch_size": 128,
                "learning_rate": 2e-3,
                "fit_epochs": 8,
                "clamp": 10.0,
            },
        )
    if name == "s53":
        # The three (smaller) regions are placed as an assumption: two squares
        # flanking the upper half and one below, leaving the origin free.
        return ScenarioConfig(
            name="s53",
            num_robots=3,
            regions=[
                _square(1.0, 0.8, 0.3),
                _square(-1.0, 0.8, 0.3),
                _square(0.0, -1.0, 0.3),
            ],
            tasks={
                "avoid": TaskDef(
                    name="avoid",
                    kind="avoid_regions",
                    params={"penalty": 25.0},
                    scope="robot",
                ),
                "goto": TaskDef(
                    name="goto",
                    kind="go_to_point",
                    params={"target": [0.0, 0.0], "gain": 12.0},
                    scope="robot",
                    assigned=(0,),
                ),
                "formation": TaskDef(
                    name="formation",
                    kind="formation",
                    params={"side": 0.75, "gain": 1.5},
                    scope="team",
                    train={"hidden": [64, 64], "iterations": 220, "dataset_size": 2048},
                ),
            },
            lambdas={"goto": 1.0, "formation": 5e4},
            stack=["avoid", "goto", "formation"],
            success={
                "avoid": {"final_max": 0.0, "no_entry": True},
                "goto": {"final_max": 1.8, "strict": True},
                "formation": {"final_max": 0.75, "strict": True},
            },
            sampler={
                "kind": "box_cluster",
                "lo": [-1.6, -1.6],
                "hi": [1.6, 1.6],
                "std": 0.25,
            },
            trials=50,
            methods={
                "baseline": {
                    "avoid": {"model": "avoid"},
                    "goto": {"model": "goto_base"},
                    "formation": {"model": "formation_base"},
                },
                "goto_independent": {
                    "avoid": {"model": "avoid"},
                    "goto": {"model": "goto_ind", "penalties": {"avoid": 1.0}},
                    "formation": {"model": "formation_base"},
                },
                "formation_independent": {
                    "avoid": {"model": "avoid"},
                    "goto": {"model": "goto_base"},
                    "formation": {"model": "formation_ind", "penalties": {"avoid": 5e4}},
                },
                "independent": {
                    "avoid": {"model": "avoid"},
                    "goto": {"model": "goto_ind", "penalties": {"avoid": 1.0}},
                    "formation": {"model": "formation_ind", "penalties": {"avoid": 5e4}},
                },
            },
            training={
                "box": [[-2.0, -2.0], [2.0, 2.0]],
                "team_box": [[-1.8, -1.8], [1.8, 1.8]],
                "hidden": [64],
                "iterations": 150,
                "dataset_size": 1024,
                "horizon": 10,
                "td_lambda": 0.9,
                "gamma": 0.99,
                "dt": 0.02,
                "batch_size": 128,
                "learning_rate": 2e-3,
                "fit_epochs": 8,
                "clamp": 10.0,
            },
        )
    raise ConfigurationError(f"unknown scenario {name!r}; builtins are s51, s52, s53")


# ---------------------------------------------------------------------------
# Cost construction and training
# ---------------------------------------------------------------------------


class SummedCost(StateCost):
    """Single-robot cost summed over assigned robot blocks of a team state."""

    def __init__(self, base: StateCost, robots, num_robots: int):
        self.base = base
        self.robots = tuple(sorted(set(int(r) for r in robots)))
        if not self.robots:
            raise ConfigurationError("summed cost needs at least one robot")
        self.num_robots = int(num_robots)
        self.kind = base.kind

    @property
    def dim(self) -> int:
        return 2 * self.num_robots

    def batch(self, X: np.ndarray) -> np.ndarray:
        total = np.zeros(X.shape[0])
        for r in self.robots:
            total += self.base.batch(X[:, 2 * r : 2 * r + 2])
        return total


def build_state_cost(cfg: ScenarioConfig, task_name: str, team: bool) -> StateCost:
    """The task's cost over the single-robot state or the full team state."""
    tdef = cfg.tasks[task_name]
    robots = cfg.num_robots if team else 1
    if tdef.kind == "avoid_regions":
        return AvoidRegions(cfg.regions, tdef.params["penalty"], num_robots=robots)
    if tdef.kind == "go_to_point":
        cost = GoToPoint(tdef.params["target"], tdef.params["gain"])
    elif tdef.kind == "formation":
        return Formation(
            tdef.params["side"], tdef.params["gain"], num_robots=cfg.num_robots
        )
    else:
        raise ConfigurationError(f"unknown cost kind {tdef.kind!r}")
    if team and tdef.scope == "robot":
        return SummedCost(cost, cfg.assigned_robots(task_name), cfg.num_robots)
    return cost


def train_config_for(cfg: ScenarioConfig, task_name: str, seed: int, overrides=None) -> TrainConfig:
    tdef = cfg.tasks[task_name]
    merged = dict(cfg.training)
    merged.update(tdef.train)
    if overrides:
        merged.update({k: v for k, v in overrides.items() if v is not None})
    if tdef.scope == "team":
        per_robot = merged.get("team_box", merged["box"])
        lo = list(per_robot[0]) * cfg.num_robots
        hi = list(per_robot[1]) * cfg.num_robots
    else:
        lo, hi = merged["box"]
    fields = (
        "dataset_size",
        "iterations",
        "horizon",
        "td_lambda",
        "gamma",
        "dt",
        "batch_size",
        "learning_rate",
        "fit_epochs",
        "activation",
        "workers",
    )
    kwargs = {k: merged[k] for k in fields if k in merged}
    return TrainConfig(
        sample_box=(lo, hi),
        hidden=tuple(merged.get("hidden", (64, 64))),
        seed=seed,
        **kwargs,
    )


def train_task(
    cfg: ScenarioConfig,
    task_name: str,
    seed: int,
    independent_to=(),
    on_iteration=None,
    overrides=None,
) -> ValueNet:
    """Train one scenario task, optionally with interference penalties.

    `independent_to` is a list of (value function, weight) pairs. Prior nets
    whose dimension matches a single robot are lifted to the training system
    when the task is team-scope.
    """
    if task_name not in cfg.tasks:
        raise ConfigurationError(
            f"unknown task {task_name!r}; scenario defines {sorted(cfg.tasks)}"
        )
    tdef = cfg.tasks[task_name]
    team = tdef.scope == "team"
    sys = single_integrator_team(cfg.num_robots if team else 1)
    cost = build_state_cost(cfg, task_name, team=team)
    tcfg = train_config_for(cfg, task_name, seed, overrides)
    clamp = dict(cfg.training).get("clamp", 10.0)
    penalties = []
    for net, weight in independent_to:
        if net.n == sys.n:
            penalties.append(Penalty(net, weight, clamp))
        elif team and sys.robot_dim is not None and net.n == sys.robot_dim:
            penalties.append(Penalty(lift_task(net, range(cfg.num_robots), sys), weight, clamp))
        else:
            raise ShapeError(
                f"prior value function dim {net.n} fits neither the training "
                f"system (n={sys.n}) nor one robot"
            )
    task = TaskSpec(
        name=task_name,
        state_cost=cost,
        input_metric=InputMetric(tuple(penalties)),
    )
    return value_iteration(task, sys, tcfg, on_iteration=on_iteration)


# ---------------------------------------------------------------------------
# Stack assembly
# ---------------------------------------------------------------------------


def build_stack(
    cfg: ScenarioConfig,
    nets: dict,
    penalties: dict | None = None,
    order=None,
) -> PriorityStack:
    """Assemble the team priority stack from per-task value functions.

    `nets` maps task name -> trained net (robot-scope nets are lifted to the
    task's assigned robots). `penalties` maps task name -> {prior task:
    weight} and restores each task's training-time input metric; for a
    lifted task the prior is lifted with the same assignment so the metric
    matches what training saw on the single-robot system.
    """
    sys = cfg.system()
    penalties = penalties or {}
    clamp = dict(cfg.training).get("clamp", 10.0)
    order = list(order or cfg.stack)
    entries = []
    for name in order:
        if name not in cfg.tasks:
            raise ConfigurationError(f"unknown task {name!r} in stack order")
        if name not in nets:
            raise ConfigurationError(f"no model supplied for task {name!r}")
        tdef = cfg.tasks[name]
        net = nets[name]
        assigned = cfg.assigned_robots(name)
        lift_needed = net.n != sys.n
        if lift_needed:
            if sys.robot_dim is None or net.n != sys.robot_dim:
                raise ShapeError(
                    f"model for {name!r} has dim {net.n}; expected {sys.n} or "
                    f"{sys.robot_dim}"
                )
            value_fn = lift_task(net, assigned, sys)
        else:
            value_fn = net
        pens = []
        for prior_name, weight in penalties.get(name, {}).items():
            prior = nets[prior_name]
            if prior.n == sys.n:
                prior_fn = prior
            elif lift_needed and prior.n == net.n:
                # penalty was trained on the single-robot system; mirror the lift
                prior_fn = lift_task(prior, assigned, sys)
            elif prior.n == sys.robot_dim:
                prior_fn = lift_task(prior, cfg.assigned_robots(prior_name), sys)
            else:
                raise ShapeError(
                    f"penalty model {prior_name!r} has dim {prior.n}; cannot lift"
                )
            pens.append(Penalty(prior_fn, weight, clamp))
        spec = TaskSpec(
            name=name,
            state_cost=build_state_cost(cfg, name, team=True),
            input_metric=InputMetric(tuple(pens)),
        )
        entries.append((value_fn, spec))
    return PriorityStack(entries, kappa=cfg.kappa)


def resolve_method_models(cfg: ScenarioConfig, method: str, load_model) -> tuple[dict, dict]:
    """(nets, penalties) for one scenario method; load_model(key) -> net."""
    if method not in cfg.methods:
        raise ConfigurationError(
            f"unknown method {method!r}; scenario defines {sorted(cfg.methods)}"
        )
    nets = {}
    penalties = {}
    for task_name, entry in cfg.methods[method].items():
        if isinstance(entry, str):
            entry = {"model": entry}
        nets[task_name] = load_model(entry["model"])
        if entry.get("penalties"):
            penalties[task_name] = dict(entry["penalties"])
    return nets, penalties


# ---------------------------------------------------------------------------
# Initial states
# ---------------------------------------------------------------------------


def sample_initial_states(cfg: ScenarioConfig, count: int, seed: int) -> np.ndarray:
    """Deterministic initial team states according to the scenario sampler."""
    if count < 1:
        raise ConfigurationError("count must be >= 1")
    kind = cfg.sampler.get("kind", "box")
    rng = np.random.default_rng([int(seed), 11])
    n = 2 * cfg.num_robots
    if kind == "segment":
        start = np.asarray(cfg.sampler["start"], dtype=float)
        stop = np.asarray(cfg.sampler["stop"], dtype=float)
        if start.shape != (n,) or stop.shape != (n,):
            raise ConfigurationError("segment endpoints must match the state dim")
        if count == 1:
            return start[None, :].copy()
        frac = np.linspace(0.0, 1.0, count)[:, None]
        return start[None, :] + frac * (stop - start)[None, :]
    if kind == "box":
        lo = np.asarray(cfg.sampler["lo"], dtype=float)
        hi = np.asarray(cfg.sampler["hi"], dtype=float)
        per_robot = rng.uniform(lo, hi, size=(count, cfg.num_robots, 2))
        return per_robot.reshape(count, n)
    if kind == "box_cluster":
        lo = np.asarray(cfg.sampler["lo"], dtype=float)
        hi = np.asarray(cfg.sampler["hi"], dtype=float)
        std = float(cfg.sampler.get("std", 0.25))
        states = np.empty((count, n))
        for t in range(count):
            base = None
            for _ in range(REJECTION_LIMIT):
                cand = rng.uniform(lo, hi)
                if not any(r.contains(cand) for r in cfg.regions):
                    base = cand
                    break
            if base is None:
                raise ConfigurationError(
                    "rejection sampling failed: regions cover the sampling box"
                )
            offsets = rng.normal(0.0, std, size=(cfg.num_robots, 2))
            states[t] = (base[None, :] + offsets).reshape(n)
        return states
    raise ConfigurationError(f"unknown sampler kind {kind!r}")


# ---------------------------------------------------------------------------
# Closed-loop simulation and evaluation
# ---------------------------------------------------------------------------


@dataclass
class Trajectory:
    t: np.ndarray
    X: np.ndarray
    U: np.ndarray
    delta: np.ndarray
    values: np.ndarray
    statuses: list
    entries: int
    frozen_at: int | None


def _count_entries(regions, prev_inside: np.ndarray, X_row: np.ndarray) -> tuple[int, np.ndarray]:
    num_robots = X_row.shape[0] // 2
    inside = np.zeros(num_robots, dtype=bool)
    P = X_row.reshape(num_robots, 2)
    for region in regions:
        inside |= region.contains_batch(P)
    events = int(np.sum(inside & ~prev_inside))
    return events, inside


def simulate_stack(
    stack: PriorityStack,
    sys: ControlAffineSystem,
    x0,
    dt: float,
    steps: int,
    regions=(),
    stop_on_failure: bool = False,
) -> Trajectory:
    """Run the closed loop, tracking slacks, task values, and region entries.

    When the input stays below EQUILIBRIUM_TOL for EQUILIBRIUM_STEPS
    consecutive steps the episode is frozen: the state no longer changes
    meaningfully and the remaining motion is bounded by steps*dt*tol.
    """
    x = np.asarray(x0, dtype=float).copy()
    N = stack.num_tasks
    T = np.zeros(steps + 1)
    X = np.zeros((steps + 1, sys.n))
    U = np.zeros((steps, sys.m))
    delta = np.zeros((steps, N))
    values = np.zeros((steps + 1, N))
    statuses: list[str] = []
    X[0] = x
    values[0] = [net.forward(x) for net, _ in stack.tasks]
    prev_inside = None
    entries = 0
    if regions:
        _, prev_inside = _count_entries(regions, np.zeros(sys.n // 2, dtype=bool), x)
        # robots already inside at t=0 are not entry events
    frozen_at = None
    quiet = 0
    last = steps
    for k in range(steps):
        qp = build_qp(stack, sys, x)
        sol = solve(qp)
        statuses.append(sol.status)
        if sol.status == "infeasible":
            last = k
            break
        U[k] = sol.u
        delta[k] = sol.delta
        x = euler_step(sys, x, sol.u, dt)
        T[k + 1] = (k + 1) * dt
        X[k + 1] = x
        values[k + 1] = [net.forward(x) for net, _ in stack.tasks]
        if regions:
            ev, prev_inside = _count_entries(regions, prev_inside, x)
            entries += ev
        if stop_on_failure and sol.status != "optimal":
            last = k + 1
            break
        if np.abs(sol.u).max() < EQUILIBRIUM_TOL:
            quiet += 1
            if quiet >= EQUILIBRIUM_STEPS:
                frozen_at = k + 1
                last = k + 1
                break
        else:
            quiet = 0
    else:
        last = steps
    return Trajectory(
        t=T[: last + 1],
        X=X[: last + 1],
        U=U[:last],
        delta=delta[:last],
        values=values[: last + 1],
        statuses=statuses,
        entries=entries,
        frozen_at=frozen_at,
    )


@dataclass
class TrialRecord:
    method: str
    trial: int
    success: bool
    reason: str
    final_costs: dict
    entries: int
    steps: int


@dataclass
class EvalResult:
    method: str
    success_rate: float
    records: list


def _judge_trial(cfg: ScenarioConfig, traj: Trajectory, costs: dict) -> tuple[bool, str, dict]:
    final_costs = {name: float(cost(traj.X[-1])) for name, cost in costs.items()}
    bad = [s for s in traj.statuses if s != "optimal"]
    if bad:
        return False, f"solver {bad[0]}", final_costs
    for name, rule in cfg.success.items():
        q = final_costs[name]
        limit = float(rule.get("final_max", np.inf))
        if rule.get("strict", False):
            ok = q < limit
        else:
            ok = q <= limit + 1e-12
        if not ok:
            return False, f"{name} final cost {q:.4g} exceeds {limit:.4g}", final_costs
        if rule.get("no_entry", False) and traj.entries > 0:
            return False, f"{name} violated: {traj.entries} region entries", final_costs
    return True, "", final_costs


def evaluate(
    cfg: ScenarioConfig,
    nets: dict,
    trials: int,
    seed: int,
    penalties: dict | None = None,
    method: str = "stack",
    workers: int | None = None,
) -> EvalResult:
    """Closed-loop success rate over seeded trials.

    Initial states depend only on (cfg, trials, seed), so different methods
    are compared on the same starts. Trials are independent and may be run
    concurrently; per-trial results are deterministic either way.
    """
    stack = build_stack(cfg, nets, penalties)
    sys = cfg.system()
    for name in cfg.success:
        if name not in cfg.tasks:
            raise ConfigurationError(f"success rule for unknown task {name!r}")
    costs = {name: build_state_cost(cfg, name, team=True) for name in cfg.success}
    starts = sample_initial_states(cfg, trials, seed)
    steps = int(round(cfg.episode_seconds / cfg.dt))

    def run(trial: int) -> TrialRecord:
        traj = simulate_stack(
            stack, sys, starts[trial], cfg.dt, steps, regions=cfg.regions,
            stop_on_failure=True,
        )
        success, reason, final_costs = _judge_trial(cfg, traj, costs)
        return TrialRecord(
            method=method,
            trial=trial,
            success=success,
            reason=reason,
            final_costs=final_costs,
            entries=traj.entries,
            steps=len(traj.U),
        )

    if workers is None:
        workers = max(1, int(os.environ.get("INDISTACK_THREADS", "1")))
    if workers <= 1 or trials == 1:
        records = [run(t) for t in range(trials)]
    else:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            records = list(pool.map(run, range(trials)))
    rate = sum(r.success for r in records) / trials
    return EvalResult(method=method, success_rate=rate, records=records)
