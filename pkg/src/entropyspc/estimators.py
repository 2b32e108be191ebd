"""Per-sample profile coefficient estimates: least squares and maximum entropy.

Both routes produce an (intercept, slope) pair per sample. Least squares is
the closed form b = S_xy / S_xx, a = mean_y - b * mean_x. The maximum-entropy
route fits a bivariate density to the sample's moment constraints and reads
the same two quantities off the fitted density's moments.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum

import numpy as np
from sklearn.base import BaseEstimator, TransformerMixin

from .exceptions import DegenerateDesignError, EntropySpcError, ZeroVarianceError
from .maxent import (
    ConstraintPreset,
    ConstraintSet,
    MaxEntDensity,
    SupportRegion,
    default_support,
    density_moments,
    solve_maxent,
)
from .profiles import DesignVector, Phase, ProfileDataset, ProfileSample, sample_moments
from .validation import check_design, check_profile_matrix


class Method(str, Enum):
    LR = "lr"
    ME = "me"


@dataclass(frozen=True)
class CoefficientVector:
    """(intercept, slope) estimate for one sample, tagged by estimator route."""

    intercept: float
    slope: float
    method: Method
    sample_id: int

    def __post_init__(self):
        object.__setattr__(self, "method", Method(self.method))
        if not (math.isfinite(self.intercept) and math.isfinite(self.slope)):
            raise ValueError("coefficients must be finite")

    def as_array(self) -> np.ndarray:
        return np.array([self.intercept, self.slope])


def _lr_from_arrays(x: np.ndarray, y: np.ndarray) -> tuple[float, float]:
    xbar = x.mean()
    ybar = y.mean()
    sxx = float(((x - xbar) ** 2).sum())
    if sxx == 0.0:
        raise DegenerateDesignError("all design points are identical")
    b = float(((x - xbar) * (y - ybar)).sum()) / sxx
    return ybar - b * xbar, b


def lr_fit(dataset: ProfileDataset, sample_id: int) -> CoefficientVector:
    """Least-squares fit of one sample."""
    sample = dataset.sample(sample_id)
    a, b = _lr_from_arrays(dataset.design.x, sample.y)
    return CoefficientVector(intercept=a, slope=b, method=Method.LR, sample_id=sample_id)


def me_fit(density: MaxEntDensity, sample_id: int = 0) -> CoefficientVector:
    """Coefficients from a fitted density: slope = cov(X,Y)/var(X), intercept
    = E[Y] - slope * E[X]."""
    mom = density_moments(density)
    if mom.var_x <= 1e-12 * max(1.0, mom.e_x**2):
        raise ZeroVarianceError(f"density x-variance {mom.var_x} is numerically zero")
    b = mom.cov_xy / mom.var_x
    return CoefficientVector(
        intercept=mom.e_y - b * mom.e_x, slope=b, method=Method.ME, sample_id=sample_id
    )


def me_fit_sample(
    dataset: ProfileDataset,
    sample_id: int,
    preset: ConstraintPreset = ConstraintPreset.FULL_SECOND_ORDER,
    support: SupportRegion | None = None,
    tol: float = 1e-8,
    max_iter: int = 100,
    quad_order: int = 96,
    init=None,
) -> CoefficientVector:
    """Solve the maximum-entropy problem for one sample's moments and fit it."""
    moments = sample_moments(dataset, sample_id)
    constraints = ConstraintSet.from_sample_moments(moments, preset)
    density = solve_maxent(
        constraints,
        support=support,
        tol=tol,
        max_iter=max_iter,
        quad_order=quad_order,
        init=init,
    )
    return me_fit(density, sample_id=sample_id)


def fit_all(
    dataset: ProfileDataset,
    method: Method,
    preset: ConstraintPreset = ConstraintPreset.FULL_SECOND_ORDER,
    support: SupportRegion | None = None,
    tol: float = 1e-8,
    max_iter: int = 100,
    quad_order: int = 96,
) -> list[CoefficientVector]:
    """Fit every sample with the chosen route, preserving sample order.

    A failed maximum-entropy solve aborts the whole batch with the offending
    sample named: chart baselines must not be built on partial data.
    """
    method = Method(method)
    if method is Method.LR:
        return [lr_fit(dataset, sid) for sid in dataset.sample_ids]
    if support is None:
        support = default_support(preset)
    out = []
    for sid in dataset.sample_ids:
        try:
            out.append(
                me_fit_sample(
                    dataset,
                    sid,
                    preset=preset,
                    support=support,
                    tol=tol,
                    max_iter=max_iter,
                    quad_order=quad_order,
                )
            )
        except EntropySpcError as exc:
            raise type(exc)(f"sample {sid}: {exc}") from exc
    return out


def coefficient_matrix(coeffs) -> np.ndarray:
    """Stack coefficient vectors into a (k, 2) array of (intercept, slope) rows."""
    return np.array([[c.intercept, c.slope] for c in coeffs])


class ProfileCoefficients(BaseEstimator, TransformerMixin):
    """Transformer turning (k, n) response matrices into (k, 2) coefficient rows.

    Stateless apart from parameter validation; exists so profile data can run
    through ordinary scikit-learn pipelines.

    Parameters
    ----------
    design : array-like of shape (n,)
        The fixed x vector shared by every profile sample.
    method : {"lr", "me"}
    preset, support, tol, max_iter, quad_order
        Maximum-entropy solver settings; ignored for method="lr".
    """

    def __init__(
        self,
        design=None,
        method="lr",
        preset="full-second",
        support=None,
        tol=1e-8,
        max_iter=100,
        quad_order=96,
    ):
        self.design = design
        self.method = method
        self.preset = preset
        self.support = support
        self.tol = tol
        self.max_iter = max_iter
        self.quad_order = quad_order

    def fit(self, X, y=None):
        design = check_design(self.design)
        check_profile_matrix(X, design.size)
        self.n_features_in_ = design.size
        return self

    def transform(self, X) -> np.ndarray:
        design = check_design(self.design)
        X = check_profile_matrix(X, design.size)
        ds = ProfileDataset(
            design=DesignVector(design),
            samples=tuple(ProfileSample(i + 1, row) for i, row in enumerate(X)),
            phase=Phase.PHASE_I,
        )
        coeffs = fit_all(
            ds,
            Method(self.method),
            preset=ConstraintPreset(self.preset),
            support=self.support,
            tol=self.tol,
            max_iter=self.max_iter,
            quad_order=self.quad_order,
        )
        return coefficient_matrix(coeffs)
