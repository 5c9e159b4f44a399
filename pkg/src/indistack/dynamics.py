"""Control-affine systems, Euler stepping, and Lie derivatives.

A system is xdot = f(x) + g(x) u. Multi-robot teams of velocity-controlled
planar robots are the n = m = 2N special case with f = 0 and g = I; the
`f_is_zero` / `g_is_identity` flags let hot loops skip the matmuls.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .errors import ConfigurationError, ShapeError
from .validation import as_vector


@dataclass
class ControlAffineSystem:
    n: int
    m: int
    f: Callable[[np.ndarray], np.ndarray]
    g: Callable[[np.ndarray], np.ndarray]
    f_is_zero: bool = False
    g_is_identity: bool = False
    num_robots: int | None = None
    robot_dim: int | None = None

    def drift_batch(self, X: np.ndarray) -> np.ndarray:
        """f evaluated row-wise on a batch of states (B, n) -> (B, n)."""
        if self.f_is_zero:
            return np.zeros_like(X)
        return np.stack([self.f(x) for x in X])

    def input_rows(self, grads: np.ndarray, X: np.ndarray) -> np.ndarray:
        """Batched L_g: grads (B, n) times g(x) per row -> (B, m)."""
        if self.g_is_identity:
            return grads
        return np.stack([d @ self.g(x) for d, x in zip(grads, X)])


def single_integrator_team(num_robots: int) -> ControlAffineSystem:
    """Velocity-controlled planar robots stacked into one state vector.

    State and input are both R^(2N): x = [p_1 .. p_N], u = [v_1 .. v_N],
    with f = 0 and g = I.
    """
    if num_robots < 1:
        raise ConfigurationError(f"num_robots must be >= 1, got {num_robots}")
    n = 2 * num_robots
    eye = np.eye(n)
    return ControlAffineSystem(
        n=n,
        m=n,
        f=lambda x: np.zeros(n),
        g=lambda x: eye,
        f_is_zero=True,
        g_is_identity=True,
        num_robots=num_robots,
        robot_dim=2,
    )


def euler_step(sys: ControlAffineSystem, x, u, dt: float) -> np.ndarray:
    """x + (f(x) + g(x) u) * dt."""
    if dt <= 0:
        raise ConfigurationError(f"dt must be positive, got {dt}")
    x = as_vector(x, sys.n, "x")
    u = as_vector(u, sys.m, "u")
    drift = np.zeros(sys.n) if sys.f_is_zero else np.asarray(sys.f(x), dtype=float)
    if drift.shape != (sys.n,):
        raise ShapeError(f"f(x) returned shape {drift.shape}, expected ({sys.n},)")
    if sys.g_is_identity:
        push = u
    else:
        G = np.asarray(sys.g(x), dtype=float)
        if G.shape != (sys.n, sys.m):
            raise ShapeError(f"g(x) returned shape {G.shape}, expected ({sys.n}, {sys.m})")
        push = G @ u
    return x + (drift + push) * dt


def euler_step_batch(sys: ControlAffineSystem, X: np.ndarray, U: np.ndarray, dt: float) -> np.ndarray:
    if sys.f_is_zero and sys.g_is_identity:
        return X + U * dt
    drift = sys.drift_batch(X)
    if sys.g_is_identity:
        return X + (drift + U) * dt
    push = np.stack([sys.g(x) @ u for x, u in zip(X, U)])
    return X + (drift + push) * dt


def lie_derivatives(sys: ControlAffineSystem, net, x) -> tuple[float, np.ndarray]:
    """(L_f J, L_g J) at x: the value gradient projected on drift and input map."""
    x = as_vector(x, sys.n, "x")
    if getattr(net, "n", None) != sys.n:
        raise ShapeError(
            f"value function expects dim {getattr(net, 'n', '?')}, system has n={sys.n}"
        )
    grad = net.input_grad(x)
    LfJ = 0.0 if sys.f_is_zero else float(grad @ np.asarray(sys.f(x), dtype=float))
    LgJ = grad if sys.g_is_identity else grad @ np.asarray(sys.g(x), dtype=float)
    return LfJ, np.asarray(LgJ, dtype=float)
