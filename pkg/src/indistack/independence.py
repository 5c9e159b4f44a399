"""Numerical diagnostics for task independence and orthogonality.

Tasks are independent at a state when the nonzero L_g J rows of their value
functions are linearly independent there; orthogonal when the rows are
pairwise perpendicular. These checks are sampling-based: no claim is made
over continuous regions.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np

from .dynamics import ControlAffineSystem
from .errors import ConfigurationError, ShapeError
from .training import optimal_input
from .validation import as_box, as_matrix, as_vector

MAX_REPORTED_FAILURES = 20


def _nonzero_rows(rows: np.ndarray, tol: float) -> np.ndarray:
    norms = np.linalg.norm(rows, axis=1)
    return rows[norms >= tol]


def is_independent(rows, tol: float = 1e-6) -> bool:
    """True when the nonzero rows are linearly independent.

    Rows with norm below `tol` count as zero and are dropped (a completed
    task places no demand on the input). Surviving rows are normalized to
    unit length before the smallest-singular-value test, so the verdict does
    not depend on the scale of any individual row.
    """
    rows = as_matrix(rows, name="rows")
    if rows.shape[0] == 0:
        raise ConfigurationError("is_independent needs at least one row")
    alive = _nonzero_rows(rows, tol)
    if alive.shape[0] <= 1:
        return True
    if alive.shape[0] > alive.shape[1]:
        return False
    unit = alive / np.linalg.norm(alive, axis=1, keepdims=True)
    svals = np.linalg.svd(unit, compute_uv=False)
    return bool(svals[-1] > tol * svals[0])


def orthogonality_residual(new_row, prior_rows, tol: float = 1e-6) -> float:
    """Worst absolute cosine between the new row and any prior row.

    0 when the new row is orthogonal to every prior (or any participant is
    numerically zero), 1 when it is parallel to one of them.
    """
    new_row = as_vector(new_row, name="new_row")
    prior_rows = as_matrix(prior_rows, cols=new_row.shape[0], name="prior_rows")
    nn = np.linalg.norm(new_row)
    if nn < tol:
        return 0.0
    worst = 0.0
    for row in prior_rows:
        pn = np.linalg.norm(row)
        if pn < tol:
            continue
        worst = max(worst, abs(float(row @ new_row)) / (pn * nn))
    return min(worst, 1.0)


def prop3_policy_gap(new_net, prior_nets, sys: ControlAffineSystem, x) -> float:
    """Distance between the penalized optimal input and -1/2 (L_g J_new)^T.

    The penalized metric is I + sum (L_g J_i)^T (L_g J_i) over the priors
    (unit weights, no clamping). The gap vanishes exactly when the new task's
    gradient is orthogonal to every prior gradient at x.
    """
    x = as_vector(x, sys.n, "x")
    grads_new = new_net.input_grad(x)
    LgJ_new = grads_new if sys.g_is_identity else grads_new @ sys.g(x)
    R = np.eye(sys.m)
    for net in prior_nets:
        g = net.input_grad(x)
        row = g if sys.g_is_identity else g @ sys.g(x)
        R += np.outer(row, row)
    return float(np.linalg.norm(optimal_input(R, LgJ_new) - (-0.5 * LgJ_new)))


@dataclass
class IndependenceReport:
    samples: int
    fraction_independent: float
    mean_abs_cosine: float
    max_abs_cosine: float
    min_gram_det: float | None
    failures: list = field(default_factory=list)
    tol: float = 1e-6
    seed: int = 0

    def to_dict(self) -> dict:
        return {
            "samples": self.samples,
            "fraction_independent": self.fraction_independent,
            "mean_abs_cosine": self.mean_abs_cosine,
            "max_abs_cosine": self.max_abs_cosine,
            "min_gram_det": self.min_gram_det,
            "failures": self.failures,
            "tol": self.tol,
            "seed": self.seed,
        }

    def save(self, path) -> None:
        with open(path, "w") as fh:
            json.dump(self.to_dict(), fh, indent=2)


def report(
    nets,
    sys: ControlAffineSystem,
    region,
    samples: int,
    tol: float = 1e-6,
    seed: int = 0,
) -> IndependenceReport:
    """Monte-Carlo independence sweep over uniformly sampled states.

    Pairwise |cosine| statistics only count pairs whose rows are both
    nonzero; the Gram determinant (of unit-normalized rows, so 1 means
    orthonormal and 0 dependent) is only tracked at states where every row
    is nonzero.
    """
    nets = list(nets)
    if not nets:
        raise ConfigurationError("report needs at least one value function")
    if samples < 1:
        raise ConfigurationError("samples must be >= 1")
    for net in nets:
        if net.n != sys.n:
            raise ShapeError(f"value function dim {net.n} does not match system n={sys.n}")
    lo, hi = as_box(region, sys.n, "region")
    rng = np.random.default_rng([seed, 7])
    X = rng.uniform(lo, hi, size=(samples, sys.n))
    all_rows = []
    for net in nets:
        grads = net.input_grad(X)
        all_rows.append(sys.input_rows(grads, X))
    rows_by_state = np.stack(all_rows, axis=1)  # (samples, N, m)
    independent = 0
    cosines = []
    min_det = None
    failures = []
    for s in range(samples):
        rows = rows_by_state[s]
        ok = is_independent(rows, tol)
        independent += ok
        if not ok and len(failures) < MAX_REPORTED_FAILURES:
            failures.append({"state": X[s].tolist()})
        norms = np.linalg.norm(rows, axis=1)
        alive = norms >= tol
        for i in range(len(nets)):
            for j in range(i + 1, len(nets)):
                if alive[i] and alive[j]:
                    cosines.append(
                        abs(float(rows[i] @ rows[j])) / (norms[i] * norms[j])
                    )
        if alive.all() and len(nets) >= 1:
            unit = rows / norms[:, None]
            det = float(np.linalg.det(unit @ unit.T))
            min_det = det if min_det is None else min(min_det, det)
    return IndependenceReport(
        samples=samples,
        fraction_independent=independent / samples,
        mean_abs_cosine=float(np.mean(cosines)) if cosines else 0.0,
        max_abs_cosine=float(np.max(cosines)) if cosines else 0.0,
        min_gram_det=min_det,
        failures=failures,
        tol=tol,
        seed=seed,
    )
