"""Scikit-learn style front end for the value-iteration trainer."""

from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator
from sklearn.exceptions import NotFittedError

from .errors import ConfigurationError
from .tasks import InputMetric, Penalty, TaskSpec
from .training import TrainConfig, value_iteration
from .validation import as_matrix


class FittedValueIteration(BaseEstimator):
    """Estimator that fits a cost-to-go function for one task.

    fit() runs continuous fitted value iteration over states sampled from
    `sample_box` (or over a fixed dataset X, if given); predict(X) evaluates
    the learned value at states and gradient(X) its exact input gradients.
    Hyperparameters follow the sklearn convention, so get_params /
    set_params / clone compose with the usual tooling.

    Parameters mirror TrainConfig; `penalties` is a sequence of
    (value_function, weight) pairs defining the interference cost against
    previously trained tasks.
    """

    def __init__(
        self,
        system=None,
        state_cost=None,
        penalties=(),
        sample_box=None,
        hidden=(64, 64),
        activation="tanh",
        iterations=200,
        dataset_size=1024,
        horizon=20,
        td_lambda=0.9,
        gamma=0.99,
        dt=0.01,
        batch_size=128,
        learning_rate=1e-3,
        fit_epochs=10,
        clamp=10.0,
        seed=0,
        workers=None,
    ):
        self.system = system
        self.state_cost = state_cost
        self.penalties = penalties
        self.sample_box = sample_box
        self.hidden = hidden
        self.activation = activation
        self.iterations = iterations
        self.dataset_size = dataset_size
        self.horizon = horizon
        self.td_lambda = td_lambda
        self.gamma = gamma
        self.dt = dt
        self.batch_size = batch_size
        self.learning_rate = learning_rate
        self.fit_epochs = fit_epochs
        self.clamp = clamp
        self.seed = seed
        self.workers = workers

    def _config(self) -> TrainConfig:
        if self.system is None or self.state_cost is None or self.sample_box is None:
            raise ConfigurationError(
                "system, state_cost and sample_box are required before fitting"
            )
        return TrainConfig(
            sample_box=self.sample_box,
            dataset_size=self.dataset_size,
            iterations=self.iterations,
            horizon=self.horizon,
            td_lambda=self.td_lambda,
            gamma=self.gamma,
            dt=self.dt,
            batch_size=self.batch_size,
            learning_rate=self.learning_rate,
            fit_epochs=self.fit_epochs,
            hidden=tuple(self.hidden),
            activation=self.activation,
            seed=self.seed,
            workers=self.workers,
        )

    def fit(self, X=None, y=None):
        """Train the value function; X (optional) is a frozen state dataset."""
        cfg = self._config()
        metric = InputMetric(
            tuple(Penalty(net, weight, self.clamp) for net, weight in self.penalties)
        )
        task = TaskSpec(
            name=getattr(self.state_cost, "kind", "task"),
            state_cost=self.state_cost,
            input_metric=metric,
        )
        self.history_ = []
        self.net_ = value_iteration(
            task,
            self.system,
            cfg,
            on_iteration=self.history_.append,
            fixed_dataset=X,
        )
        self.task_ = task
        return self

    def _check_fitted(self):
        if not hasattr(self, "net_"):
            raise NotFittedError("this FittedValueIteration instance is not fitted yet")

    def predict(self, X) -> np.ndarray:
        """Learned cost-to-go at each state row of X."""
        self._check_fitted()
        X = as_matrix(X, self.net_.n, "X")
        return self.net_.forward(X)

    def gradient(self, X) -> np.ndarray:
        """Exact input-space gradients of the learned value at each row of X."""
        self._check_fitted()
        X = as_matrix(X, self.net_.n, "X")
        return self.net_.input_grad(X)
