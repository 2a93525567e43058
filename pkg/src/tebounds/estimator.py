"""Scikit-learn style front end.

``CDependenceSensitivity`` wraps the functional core behind the familiar
``fit`` / ``get_params`` estimator surface so sensitivity analyses compose
with the wider ecosystem: fitting groups (outcome, treatment, covariates)
observations into discrete cells, after which bound queries evaluate any
supported estimand over the configured sensitivity grid.
"""

from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator

from .errors import InputError
from .estimands import BoundInterval
from .problem import (
    DEFAULT_OVERLAP_EPSILON,
    EstimandRequest,
    Problem,
    SensitivitySpec,
    cells_from_arrays,
)
from .report import Report, breakdown as _breakdown, run as _run
from .validation import as_covariate_keys


class CDependenceSensitivity(BaseEstimator):
    """Partial-identification bounds under bounded latent propensity drift.

    Parameters
    ----------
    sensitivity : {"msm", "conditional_c"}, default="msm"
        Grid parameterization: symmetric odds-ratio levels (each grid value
        L maps to odds bounds (1/L, L)) or additive bounds p1 +/- c.
    grid : sequence of float, default=(1.0, 2.0)
        Sensitivity levels to evaluate, ascending.
    overlap_epsilon : float, default=1e-6
        Strict overlap requirement: every cell's treated share must lie in
        [epsilon, 1 - epsilon].
    drop_nonoverlap : bool, default=False
        Drop cells violating overlap (reweighting the rest) instead of
        raising.

    Examples
    --------
    >>> est = CDependenceSensitivity(grid=[1.0, 2.0])
    >>> est.fit(y=[0, 1, 0, 1], x=[1, 1, 0, 0], w=["a", "a", "a", "a"])
    CDependenceSensitivity(grid=[1.0, 2.0])
    >>> [round(b.lo, 3) for b in est.bounds("ate")]
    [0.0, -0.25]
    """

    def __init__(
        self,
        sensitivity: str = "msm",
        grid=(1.0, 2.0),
        overlap_epsilon: float = DEFAULT_OVERLAP_EPSILON,
        drop_nonoverlap: bool = False,
    ):
        self.sensitivity = sensitivity
        self.grid = grid
        self.overlap_epsilon = overlap_epsilon
        self.drop_nonoverlap = drop_nonoverlap

    # ------------------------------------------------------------------

    def fit(self, y, x, w=None):
        """Group observations into covariate cells.

        Parameters
        ----------
        y : array-like of shape (n,)
            Outcomes.
        x : array-like of shape (n,)
            Binary treatment indicators (0 or 1).
        w : array-like of shape (n,) or (n, k), optional
            Discrete covariates; omitted means a single cell.
        """
        y = np.asarray(y, dtype=float).ravel()
        keys = as_covariate_keys(w, y.size)
        cells, dropped = cells_from_arrays(
            y,
            x,
            keys,
            epsilon=self.overlap_epsilon,
            drop_nonoverlap=self.drop_nonoverlap,
        )
        self.cells_ = cells
        self.dropped_cells_ = dropped
        self.n_cells_ = len(cells)
        return self

    def _check_fitted(self) -> None:
        if not hasattr(self, "cells_"):
            raise InputError("estimator is not fitted; call fit(y, x, w) first")

    def _spec(self) -> SensitivitySpec:
        if self.sensitivity == "msm":
            return SensitivitySpec.msm(self.grid)
        if self.sensitivity == "conditional_c":
            return SensitivitySpec.conditional_c(self.grid)
        raise InputError(
            f"sensitivity must be 'msm' or 'conditional_c', got {self.sensitivity!r}"
        )

    def _problem(self, requests=()) -> Problem:
        self._check_fitted()
        return Problem(
            cells=self.cells_,
            sensitivity=self._spec(),
            requests=tuple(requests),
            overlap_epsilon=self.overlap_epsilon,
            dropped_cells=self.dropped_cells_,
        )

    # ------------------------------------------------------------------

    def bounds(self, estimand: str, **params) -> list[BoundInterval]:
        """Bound intervals for one estimand, one per sensitivity grid point."""
        from .envelopes import compute_envelopes
        from .estimands import compute_estimand

        problem = self._problem()
        req = EstimandRequest.make(estimand, **params)
        out = []
        for gi in range(len(problem.sensitivity.points)):
            sens = [problem.sensitivity.cell_sensitivity(gi, c) for c in problem.cells]
            envs = [compute_envelopes(c, s) for c, s in zip(problem.cells, sens)]
            out.append(compute_estimand(req.name, envs, req.param_dict()))
        return out

    def report(self, estimands) -> Report:
        """Full report for a list of estimand names or (name, params) pairs."""
        requests = []
        for item in estimands:
            if isinstance(item, str):
                requests.append(EstimandRequest.make(item))
            else:
                name, params = item
                requests.append(EstimandRequest.make(name, **params))
        return _run(self._problem(requests))

    def breakdown(
        self, estimand: str, target: float = 0.0, lambda_max: float = 100.0, **params
    ) -> float | None:
        """Smallest symmetric odds level whose interval covers ``target``."""
        req = EstimandRequest.make(estimand, **params)
        return _breakdown(self._problem(), req, target=target, lambda_max=lambda_max)
