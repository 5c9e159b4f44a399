"""Prioritized min-norm controller over a stack of trained tasks.

At each state the controller solves

    min_{u, delta}  ||u||^2 + kappa ||delta||^2
    s.t.            L_f J_i(x) + L_g J_i(x) u <= -sigma_i(x) + delta_i
                    K delta >= 0                 (slack priorities)
                    lb <= u <= ub                (optional)

where sigma_i demands progress on task i at the rate its own optimal policy
would achieve, and K orders the slack so higher-priority tasks give up less.
The QP is strictly convex and tiny (m + N variables), so it is solved exactly
with a primal active-set method.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .dynamics import ControlAffineSystem, euler_step, lie_derivatives
from .errors import ConfigurationError, NumericalError
from .tasks import TaskSpec
from .training import optimal_input
from .validation import as_vector


def chain_priority_matrix(num_tasks: int) -> np.ndarray:
    """K with rows delta_1 >= 0 and delta_{i+1} - delta_i >= 0.

    K delta >= 0 is then equivalent to 0 <= delta_1 <= ... <= delta_N: the
    earlier (higher-priority) a task sits in the stack, the less slack it may
    receive.
    """
    K = np.eye(num_tasks)
    for i in range(1, num_tasks):
        K[i, i - 1] = -1.0
    return K


@dataclass
class PriorityStack:
    """Ordered tasks (index 0 = highest priority) plus slack configuration."""

    tasks: list  # (value function, TaskSpec) pairs
    kappa: float = 1e3
    priority_matrix: np.ndarray | None = None
    input_bounds: tuple | None = None  # (lb, ub) arrays over u

    def __post_init__(self):
        self.tasks = list(self.tasks)
        if not self.tasks:
            raise ConfigurationError("a stack needs at least one task")
        if self.kappa < 0:
            raise ConfigurationError("kappa must be nonnegative")
        if self.priority_matrix is None:
            self.priority_matrix = chain_priority_matrix(len(self.tasks))
        else:
            self.priority_matrix = np.asarray(self.priority_matrix, dtype=float)
            if self.priority_matrix.shape[1] != len(self.tasks):
                raise ConfigurationError(
                    "priority matrix must have one column per task"
                )

    @property
    def num_tasks(self) -> int:
        return len(self.tasks)

    def names(self) -> list[str]:
        return [spec.name for _, spec in self.tasks]

    def reordered(self, order) -> "PriorityStack":
        """New stack with tasks permuted; the default chain K is rebuilt."""
        tasks = [self.tasks[i] for i in order]
        return PriorityStack(tasks, kappa=self.kappa, input_bounds=self.input_bounds)


def sigma(net, task: TaskSpec, sys: ControlAffineSystem, x) -> float:
    """Required decrease rate: what the task's own optimal input achieves.

    sigma(x) = max(0, -(L_f J + L_g J u*)) with u* = -1/2 R(x)^-1 (L_g J)^T,
    clamped at zero so the progress constraint never demands an increase.
    """
    LfJ, LgJ = lie_derivatives(sys, net, x)
    if task.input_metric.penalties:
        R = task.input_metric.at(sys, x)
        ustar = optimal_input(R, LgJ)
    else:
        ustar = -0.5 * LgJ
    return max(0.0, -(LfJ + float(LgJ @ ustar)))


@dataclass
class QPData:
    """min z^T diag(quad) z s.t. G z <= h, with z = (u, delta)."""

    quad: np.ndarray
    G: np.ndarray
    h: np.ndarray
    m: int
    num_tasks: int
    row_kinds: list[str]
    start: np.ndarray | None = None

    @property
    def dim(self) -> int:
        return self.quad.shape[0]

    def objective(self, z: np.ndarray) -> float:
        return float(z @ (self.quad * z))


@dataclass
class QPSolution:
    u: np.ndarray
    delta: np.ndarray
    status: str  # "optimal" | "max_iter" | "infeasible"
    kkt_residual: float
    objective: float
    iterations: int = 0


def build_qp(stack: PriorityStack, sys: ControlAffineSystem, x) -> QPData:
    """Assemble the stack QP at state x.

    Row order: one progress row per task (stack order), then the K rows,
    then input-bound rows. A feasible start is attached when the priority
    matrix is the default chain.
    """
    x = as_vector(x, sys.n, "x")
    N = stack.num_tasks
    m = sys.m
    K = stack.priority_matrix
    rows = []
    rhs = []
    kinds = []
    needed = np.empty(N)
    for i, (net, spec) in enumerate(stack.tasks):
        LfJ, LgJ = lie_derivatives(sys, net, x)
        sig = sigma(net, spec, sys, x)
        row = np.zeros(m + N)
        row[:m] = LgJ
        row[m + i] = -1.0
        rows.append(row)
        rhs.append(-sig - LfJ)
        kinds.append("progress")
        needed[i] = LfJ + sig  # slack needed at u = 0
    for krow in K:
        row = np.zeros(m + N)
        row[m:] = -krow
        rows.append(row)
        rhs.append(0.0)
        kinds.append("priority")
    u0 = np.zeros(m)
    if stack.input_bounds is not None:
        lb = as_vector(stack.input_bounds[0], m, "input lower bound")
        ub = as_vector(stack.input_bounds[1], m, "input upper bound")
        if np.any(ub < lb):
            raise ConfigurationError("input bounds must satisfy lb <= ub")
        for j in range(m):
            row = np.zeros(m + N)
            row[j] = 1.0
            rows.append(row.copy())
            rhs.append(ub[j])
            kinds.append("bound")
            row[j] = -1.0
            rows.append(row)
            rhs.append(-lb[j])
            kinds.append("bound")
        u0 = np.clip(u0, lb, ub)
        for i, (net, spec) in enumerate(stack.tasks):
            LfJ, LgJ = lie_derivatives(sys, net, x)
            needed[i] = LfJ + LgJ @ u0 + sigma(net, spec, sys, x)
    quad = np.concatenate([np.ones(m), np.full(N, max(stack.kappa, 1e-10))])
    start = None
    default_chain = np.array_equal(K, chain_priority_matrix(N))
    if default_chain:
        delta0 = np.maximum.accumulate(np.maximum(needed, 0.0))
        start = np.concatenate([u0, delta0])
    return QPData(
        quad=quad,
        G=np.array(rows),
        h=np.array(rhs),
        m=m,
        num_tasks=N,
        row_kinds=kinds,
        start=start,
    )


def _phase1_start(qp: QPData) -> np.ndarray | None:
    """Feasibility LP: min s s.t. G z <= h + s. Returns z or None."""
    from scipy.optimize import linprog

    d = qp.dim
    A = np.hstack([qp.G, -np.ones((qp.G.shape[0], 1))])
    c = np.zeros(d + 1)
    c[-1] = 1.0
    res = linprog(
        c,
        A_ub=A,
        b_ub=qp.h,
        bounds=[(None, None)] * d + [(0, None)],
        method="highs",
    )
    if not res.success or res.x[-1] > 1e-9:
        return None
    return res.x[:d]


def _kkt_residual(qp: QPData, z: np.ndarray, mu_full: np.ndarray) -> float:
    """Worst KKT violation, normalized by problem scale.

    Componentwise: stationarity relative to the gradient magnitudes, primal
    feasibility relative to |h|, dual feasibility relative to |mu|, and
    complementary slackness relative to their product.
    """
    grad_term = 2.0 * qp.quad * z
    mult_term = qp.G.T @ mu_full
    scale = max(1.0, np.abs(grad_term).max(), np.abs(mult_term).max())
    stationarity = np.abs(grad_term + mult_term).max() / scale
    slack = qp.G @ z - qp.h
    if slack.size:
        pscale = max(1.0, float(np.abs(qp.h).max()))
        primal = max(0.0, slack.max()) / pscale
    else:
        primal = 0.0
    if mu_full.size:
        mscale = max(1.0, float(np.abs(mu_full).max()))
        dual = max(0.0, -mu_full.min()) / mscale
        comp = np.abs(mu_full * slack).max() / max(
            1.0, float(np.abs(mu_full).max() * np.abs(slack).max())
        )
    else:
        dual = comp = 0.0
    return float(max(stationarity, primal, dual, comp))


def solve(qp: QPData, tol: float = 1e-8, max_iter: int = 10_000) -> QPSolution:
    """Exact primal active-set solve of the stack QP.

    With slack variables and the chain priority matrix the problem is always
    feasible, so "infeasible" can only result from user-supplied input
    bounds. Maintains z feasible with the working-set rows tight, so blocking
    rows are automatically independent of the working set.
    """
    if tol <= 0:
        raise ConfigurationError("tol must be positive")
    G, h, quad = qp.G, qp.h, qp.quad
    feas_tol = 1e-9 * max(1.0, float(np.abs(h).max()) if h.size else 1.0)
    z = qp.start
    if z is not None and G.size and np.any(G @ z > h + feas_tol):
        z = None
    if z is None:
        if not G.size or np.all(h >= -feas_tol):
            z = np.zeros(qp.dim)
        else:
            z = _phase1_start(qp)
    if z is None:
        empty = np.empty(0)
        return QPSolution(
            u=np.full(qp.m, np.nan),
            delta=np.full(qp.num_tasks, np.nan),
            status="infeasible",
            kkt_residual=np.inf,
            objective=np.inf,
            iterations=0,
        )
    working: list[int] = []

    def eq_solve(W: list[int]):
        if not W:
            return np.zeros(qp.dim), np.empty(0)
        A = G[W]
        S = (A / quad) @ A.T  # A H^-1 A^T with H = diag(quad)
        try:
            y = np.linalg.solve(S, h[W])
        except np.linalg.LinAlgError:
            y = np.linalg.lstsq(S, h[W], rcond=None)[0]
        zW = (A.T @ y) / quad
        return zW, -2.0 * y

    best = z
    for iteration in range(1, max_iter + 1):
        zstar, mu = eq_solve(working)
        p = zstar - z
        if np.abs(p).max() <= 1e-11 * (1.0 + np.abs(z).max()):
            if mu.size == 0 or mu.min() >= -tol:
                z = zstar if working else z
                mu_full = np.zeros(G.shape[0])
                mu_full[working] = np.maximum(mu, 0.0)
                residual = _kkt_residual(qp, z, mu_full)
                status = "optimal" if residual < tol else "max_iter"
                return QPSolution(
                    u=z[: qp.m],
                    delta=z[qp.m :],
                    status=status,
                    kkt_residual=residual,
                    objective=qp.objective(z),
                    iterations=iteration,
                )
            working.pop(int(np.argmin(mu)))
            continue
        alpha = 1.0
        blocker = -1
        for i in range(G.shape[0]):
            if i in working:
                continue
            advance = float(G[i] @ p)
            if advance <= 1e-13:
                continue
            ratio = float(h[i] - G[i] @ z) / advance
            if ratio < alpha - 1e-13:
                alpha = max(ratio, 0.0)
                blocker = i
        z = z + alpha * p
        best = z
        if blocker >= 0:
            working.append(blocker)
    mu_full = np.zeros(G.shape[0])
    return QPSolution(
        u=best[: qp.m],
        delta=best[qp.m :],
        status="max_iter",
        kkt_residual=_kkt_residual(qp, best, mu_full),
        objective=qp.objective(best),
        iterations=max_iter,
    )


def control_step(
    stack: PriorityStack,
    sys: ControlAffineSystem,
    x,
    dt: float,
    tol: float = 1e-8,
    max_iter: int = 10_000,
) -> tuple[np.ndarray, np.ndarray, QPSolution]:
    """Solve the stack QP at x and apply the input through one Euler step."""
    x = as_vector(x, sys.n, "x")
    qp = build_qp(stack, sys, x)
    sol = solve(qp, tol=tol, max_iter=max_iter)
    if sol.status == "infeasible":
        return np.zeros(sys.m), x.copy(), sol
    x_next = euler_step(sys, x, sol.u, dt)
    return sol.u, x_next, sol
