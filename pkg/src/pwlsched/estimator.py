"""scikit-learn style wrapper around :func:`pwlsched.scheduler.solve`."""

from __future__ import annotations

from pathlib import Path

import numpy as np
from sklearn.base import BaseEstimator
from sklearn.utils.validation import check_is_fitted

from .pwl import as_rational
from .scheduler import ProblemInstance, _as_state, initial_state, instance_from_dict, load_instance, solve


def check_instance(X) -> ProblemInstance:
    """Accept an instance, a mapping in instance-file layout, or a file path."""
    if isinstance(X, ProblemInstance):
        return X
    if isinstance(X, dict):
        return instance_from_dict(X)
    if isinstance(X, (str, Path)):
        return load_instance(X)
    raise TypeError(f"cannot build a ProblemInstance from {type(X).__name__}")


def check_times(T) -> list:
    """1-D sequence of times as exact rationals."""
    arr = np.asarray(T, dtype=object)
    if arr.ndim == 0:
        arr = arr.reshape(1)
    if arr.ndim != 1:
        raise ValueError("times must be one-dimensional")
    return [as_rational(t) for t in arr]


class OptimalScheduler(BaseEstimator):
    """Fit = solve the DP; predict = look up the feedback strategy.

    Args:
        state: state queried by :meth:`predict` (default: the initial state).
        alternative: on tie intervals pick the highest co-optimal class.
    """

    def __init__(self, state=None, alternative: bool = False):
        self.state = state
        self.alternative = alternative

    def fit(self, X, y=None):
        self.instance_ = check_instance(X)
        self.solution_ = solve(self.instance_)
        return self

    def _state(self):
        if self.state is None:
            return initial_state(self.instance_)
        return _as_state(self.instance_, self.state)

    def predict(self, T) -> np.ndarray:
        """``(n, 2)`` object array of ``(class, processing_time)`` per time."""
        check_is_fitted(self, "solution_")
        ss = self.solution_[self._state()]
        out = [ss.decide(t, self.alternative) for t in check_times(T)]
        return np.array(out, dtype=object).reshape(len(out), 2)

    def cost_to_go(self, T) -> np.ndarray:
        check_is_fitted(self, "solution_")
        J = self.solution_[self._state()].cost_to_go
        return np.array([J(t) for t in check_times(T)], dtype=object)

    def score(self, T, y=None) -> float:
        """Negative mean optimal cost over the given start times."""
        return -float(np.mean([float(v) for v in self.cost_to_go(T)]))
