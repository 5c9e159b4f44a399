"""Fitted value iteration for control-affine systems.

Each iteration simulates short rollouts from a dataset of states, driving
them with the analytically optimal input u* = -1/2 R(x)^-1 (L_g J)^T for the
current value estimate, blends the resulting n-step returns with forward-view
TD(lambda) weights, and regresses the network onto those targets.
"""

from __future__ import annotations

import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg

from .dynamics import ControlAffineSystem, euler_step_batch
from .errors import ConfigurationError, NumericalError, TrainingError
from .tasks import InputMetric, Penalty, StateCost, TaskSpec
from .validation import as_box, as_vector
from .value_net import AdamState, ValueNet, fit_batch

# Targets are always computed in fixed chunks of this many states so that the
# floating-point result is identical for any worker count.
TARGET_CHUNK = 256


@dataclass
class TrainConfig:
    """Hyperparameters of one value-iteration run.

    horizon / gamma / td_lambda left as None inherit the task's values.
    `workers` defaults to the INDISTACK_THREADS environment variable.
    """

    sample_box: tuple
    dataset_size: int = 1024
    iterations: int = 200
    horizon: int | None = None
    td_lambda: float | None = None
    gamma: float | None = None
    dt: float = 0.01
    batch_size: int = 128
    learning_rate: float = 1e-3
    fit_epochs: int = 10
    hidden: tuple[int, ...] = (64, 64)
    activation: str = "tanh"
    seed: int = 0
    workers: int | None = None
    divergence_factor: float = 100.0
    divergence_window: int = 5

    def validate(self, sys: ControlAffineSystem) -> None:
        as_box(self.sample_box, sys.n, "sample_box")
        for name in ("dataset_size", "iterations", "batch_size", "fit_epochs"):
            if getattr(self, name) < 1:
                raise ConfigurationError(f"{name} must be >= 1")
        if self.dt <= 0 or self.learning_rate <= 0:
            raise ConfigurationError("dt and learning_rate must be positive")
        if self.horizon is not None and self.horizon < 1:
            raise ConfigurationError("horizon must be >= 1")
        if self.gamma is not None and not 0.0 < self.gamma <= 1.0:
            raise ConfigurationError("gamma must be in (0, 1]")
        if self.td_lambda is not None and not 0.0 <= self.td_lambda <= 1.0:
            raise ConfigurationError("td_lambda must be in [0, 1]")

    def resolved_workers(self) -> int:
        if self.workers is not None:
            return max(1, int(self.workers))
        return max(1, int(os.environ.get("INDISTACK_THREADS", "1")))

    def resolve_rollout(self, task: TaskSpec) -> tuple[int, float, float]:
        horizon = task.lookahead if self.horizon is None else self.horizon
        gamma = task.discount if self.gamma is None else self.gamma
        lam = task.td_lambda if self.td_lambda is None else self.td_lambda
        return int(horizon), float(gamma), float(lam)


# ---------------------------------------------------------------------------
# Optimal input
# ---------------------------------------------------------------------------


def optimal_input(R, LgJ) -> np.ndarray:
    """u* = -1/2 R^-1 (L_g J)^T via a Cholesky solve.

    The minimizer of u^T R u + (L_g J) u for symmetric positive definite R.
    """
    R = np.asarray(R, dtype=float)
    LgJ = np.asarray(LgJ, dtype=float).reshape(-1)
    if R.shape != (LgJ.shape[0], LgJ.shape[0]):
        raise NumericalError(f"R shape {R.shape} does not match gradient length {LgJ.shape[0]}")
    if not np.allclose(R, R.T, atol=1e-9 * max(1.0, np.abs(R).max())):
        raise NumericalError("input metric is not symmetric")
    try:
        factor = scipy.linalg.cho_factor(R)
    except scipy.linalg.LinAlgError:
        min_eig = float(np.linalg.eigvalsh((R + R.T) / 2).min())
        raise NumericalError(
            f"input metric is not positive definite (min eigenvalue {min_eig:.6e})"
        ) from None
    return scipy.linalg.cho_solve(factor, -0.5 * LgJ)


def _optimal_input_batch(R: np.ndarray | None, LgJ: np.ndarray) -> np.ndarray:
    """Batched u*; R None means the identity metric."""
    if R is None:
        return -0.5 * LgJ
    return np.linalg.solve(R, -0.5 * LgJ[..., None])[..., 0]


# ---------------------------------------------------------------------------
# TD(lambda) targets
# ---------------------------------------------------------------------------


def forward_view_weights(horizon: int, lam: float) -> np.ndarray:
    """Truncated forward-view weights over n-step returns G_1..G_H.

    w_n = (1 - lam) lam^(n-1) for n < H and w_H = lam^(H-1); the weights sum
    to one. lam = 0 leaves only w_1 = 1 and lam = 1 only w_H = 1, so those
    corners reproduce G_1 and G_H exactly.
    """
    if horizon == 1:
        return np.array([1.0])
    powers = np.concatenate([[1.0], np.cumprod(np.full(horizon - 1, float(lam)))])
    w = np.empty(horizon)
    w[: horizon - 1] = (1.0 - lam) * powers[: horizon - 1]
    w[-1] = powers[-1]
    return w


def rollout_targets(net, sys: ControlAffineSystem, task: TaskSpec, X0: np.ndarray, cfg: TrainConfig) -> np.ndarray:
    """Forward-view TD(lambda) targets for a batch of start states.

    Arithmetic order (fixed for reproducibility): the running cost is
    accumulated stepwise as cum += gamma^k * (c_k * dt), each n-step return is
    G_n = cum_n + gamma^n * J(x_n), and the blend is accumulated over n in
    increasing order.
    """
    horizon, gamma, lam = cfg.resolve_rollout(task)
    dt = cfg.dt
    X = np.array(X0, dtype=float)
    B = X.shape[0]
    cum = np.zeros(B)
    returns = np.empty((B, horizon))
    disc = 1.0
    for k in range(horizon):
        grads = net.input_grad(X)
        LgJ = sys.input_rows(grads, X)
        if task.input_metric.penalties:
            R = task.input_metric.at_batch(sys, X)
            U = _optimal_input_batch(R, LgJ)
            quad = np.einsum("bi,bij,bj->b", U, R, U)
        else:
            U = -0.5 * LgJ
            quad = np.einsum("bi,bi->b", U, U)
        c = task.state_cost.batch(X) + quad
        cum = cum + disc * (c * dt)
        X = euler_step_batch(sys, X, U, dt)
        disc = disc * gamma
        returns[:, k] = cum + disc * net.forward(X)
        if not np.all(np.isfinite(returns[:, k])):
            bad = int(np.flatnonzero(~np.isfinite(returns[:, k]))[0])
            raise TrainingError(
                f"non-finite rollout value at step {k + 1} (sample {bad})"
            )
    w = forward_view_weights(horizon, lam)
    target = w[0] * returns[:, 0]
    for k in range(1, horizon):
        target = target + w[k] * returns[:, k]
    return target


def rollout_target(net, sys: ControlAffineSystem, task: TaskSpec, x0, cfg: TrainConfig) -> float:
    """Target for a single start state; see rollout_targets."""
    x0 = as_vector(x0, sys.n, "x0")
    return float(rollout_targets(net, sys, task, x0[None, :], cfg)[0])


def _compute_targets(net, sys, task, D: np.ndarray, cfg: TrainConfig) -> np.ndarray:
    """Targets over the dataset, chunked; chunk boundaries are fixed so the
    result does not depend on the worker count."""
    slices = [slice(i, min(i + TARGET_CHUNK, len(D))) for i in range(0, len(D), TARGET_CHUNK)]
    out = np.empty(len(D))
    workers = cfg.resolved_workers()
    if workers <= 1 or len(slices) == 1:
        for sl in slices:
            out[sl] = rollout_targets(net, sys, task, D[sl], cfg)
    else:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            futures = {pool.submit(rollout_targets, net, sys, task, D[sl], cfg): sl for sl in slices}
            for fut, sl in futures.items():
                out[sl] = fut.result()
    return out


# ---------------------------------------------------------------------------
# Value iteration
# ---------------------------------------------------------------------------


def _check_divergence(history: list[float], mean_abs: float, cfg: TrainConfig, iteration: int) -> None:
    w = cfg.divergence_window
    if len(history) >= w:
        ref = history[-w]
        if ref > 1e-12 and mean_abs > cfg.divergence_factor * ref:
            raise TrainingError(
                f"targets diverged: mean |target| grew from {ref:.6g} to "
                f"{mean_abs:.6g} within {w} iterations (iteration {iteration})"
            )


def value_iteration(
    task: TaskSpec,
    sys: ControlAffineSystem,
    cfg: TrainConfig,
    on_iteration=None,
    fixed_dataset=None,
) -> ValueNet:
    """Train a value function for `task` on `sys`.

    Per iteration: sample (or reuse) the dataset, compute TD(lambda) targets
    under the current net's analytic policy, then fit for `fit_epochs` passes
    of minibatch updates. Fully deterministic for a given seed and worker
    count >= 1.
    """
    cfg.validate(sys)
    if task.state_cost.dim != sys.n:
        raise ConfigurationError(
            f"state cost is over dim {task.state_cost.dim}, system has n={sys.n}"
        )
    lo, hi = as_box(cfg.sample_box, sys.n, "sample_box")
    if fixed_dataset is not None:
        fixed_dataset = np.asarray(fixed_dataset, dtype=float)
    rng_data = np.random.default_rng([cfg.seed, 101])
    rng_fit = np.random.default_rng([cfg.seed, 202])
    net = ValueNet([sys.n, *cfg.hidden, 1], cfg.activation, seed=cfg.seed)
    opt = AdamState(learning_rate=cfg.learning_rate)
    history: list[float] = []
    for k in range(cfg.iterations):
        if fixed_dataset is not None:
            D = fixed_dataset
        else:
            D = rng_data.uniform(lo, hi, size=(cfg.dataset_size, sys.n))
        targets = _compute_targets(net, sys, task, D, cfg)
        # The true cost-to-go of a nonnegative-cost problem is nonnegative, but
        # bootstrapped returns can dip below zero through approximation error;
        # training on the clamped targets keeps spurious negative basins (and
        # their noise gradients) from becoming self-sustaining.
        np.maximum(targets, 0.0, out=targets)
        mean_abs = float(np.mean(np.abs(targets)))
        _check_divergence(history, mean_abs, cfg, k)
        history.append(mean_abs)
        loss = np.nan
        for _ in range(cfg.fit_epochs):
            perm = rng_fit.permutation(len(D))
            for start in range(0, len(D), cfg.batch_size):
                idx = perm[start : start + cfg.batch_size]
                loss = fit_batch(net, D[idx], targets[idx], opt)
        if on_iteration is not None:
            on_iteration({"iteration": k, "mean_target": mean_abs, "loss": float(loss)})
    return net


def train_independent(
    state_cost: StateCost,
    prior_nets,
    sys: ControlAffineSystem,
    cfg: TrainConfig,
    clamp: float | None = 10.0,
    name: str = "independent",
    on_iteration=None,
) -> ValueNet:
    """Value iteration with interference penalties against earlier tasks.

    `prior_nets` is a list of (value function, weight) pairs; each adds
    weight * (L_g J_prior(x) u)^2 to the instantaneous cost. With an empty
    list this is exactly plain value_iteration.
    """
    penalties = tuple(Penalty(net, weight, clamp) for net, weight in prior_nets)
    task = TaskSpec(name=name, state_cost=state_cost, input_metric=InputMetric(penalties))
    return value_iteration(task, sys, cfg, on_iteration=on_iteration)
