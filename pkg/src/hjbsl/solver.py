"""Estimator-style front end around the sweep: fit on a problem + mesh,
then evaluate the value function in space-time."""
from __future__ import annotations

import numpy as np

from .errors import NotFitted
from .mesh import Mesh
from .scheme import Problem, SchemeParams, sweep


class SemiLagrangianSolver:
    """fit/predict wrapper with sklearn-like parameter handling."""

    def __init__(self, dt: float = 0.01, c_bar: float = 0.25,
                 blowup_guard: float = None):
        self.dt = dt
        self.c_bar = c_bar
        self.blowup_guard = blowup_guard
        self.value_function_ = None

    def get_params(self, deep: bool = True) -> dict:
        return {"dt": self.dt, "c_bar": self.c_bar,
                "blowup_guard": self.blowup_guard}

    def set_params(self, **params):
        for k, v in params.items():
            if k not in self.get_params():
                raise ValueError(f"unknown parameter {k!r}")
            setattr(self, k, v)
        return self

    def fit(self, problem: Problem, mesh: Mesh):
        params = SchemeParams(dt=self.dt, c_bar=self.c_bar,
                              blowup_guard=self.blowup_guard)
        self.value_function_ = sweep(problem, mesh, params)
        return self

    def predict(self, t: float, X):
        """Interpolated values at time t for one point or a list of points."""
        if self.value_function_ is None:
            raise NotFitted("call fit() first")
        vf = self.value_function_
        X = np.asarray(X, dtype=float)
        if X.ndim <= 1 and X.size == vf.mesh.dim:
            return vf(t, X)
        return np.array([vf(t, x) for x in np.atleast_2d(X)])
