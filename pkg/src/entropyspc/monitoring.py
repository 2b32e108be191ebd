"""Hotelling T2 monitoring of profile coefficient vectors.

A phase-I baseline is the mean and 2x2 covariance of the coefficient vectors
with its explicit inverse; T2 of a new vector is the quadratic form against
that baseline. Two upper control limits are supported: a scaled F quantile
and the empirical (1-alpha) quantile of the phase-I T2 values. The lower
limit is always 0 and a point signals on the strict inequality t2 > UCL.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum
from typing import Sequence

import numpy as np
from sklearn.base import BaseEstimator

from .estimators import CoefficientVector, Method, coefficient_matrix, fit_all
from .exceptions import (
    EmptyInputError,
    InvalidDofError,
    SingularCovarianceError,
    TooFewSamplesError,
)
from .fdist import f_upper_quantile
from .maxent import ConstraintPreset
from .profiles import DesignVector, Phase, ProfileDataset, ProfileSample
from .validation import check_alpha, check_design, check_profile_matrix


class CovEstimator(str, Enum):
    """Baseline covariance estimators.

    "sample" is the divisor-(k-1) sample covariance; its phase-I T2 values
    satisfy the closure identity sum(T2) = p*(k-1) exactly. The
    "successive-diff" estimator pools squared differences of consecutive
    coefficient vectors, S = sum (v[i+1]-v[i])(v[i+1]-v[i])' / (2(k-1)); it is
    less sensitive to drifting phase-I data.
    """

    SAMPLE = "sample"
    SUCCESSIVE_DIFF = "successive-diff"


@dataclass(frozen=True)
class HotellingBaseline:
    """Phase-I mean vector and covariance (with inverse) of coefficient vectors."""

    mean: np.ndarray
    cov: np.ndarray
    cov_inv: np.ndarray
    k: int
    method: Method

    def __post_init__(self):
        mean = np.asarray(self.mean, dtype=float)
        cov = np.asarray(self.cov, dtype=float)
        cov_inv = np.asarray(self.cov_inv, dtype=float)
        if mean.shape != (2,) or cov.shape != (2, 2) or cov_inv.shape != (2, 2):
            raise ValueError("baseline must be 2-dimensional")
        for arr in (mean, cov, cov_inv):
            arr.setflags(write=False)
        object.__setattr__(self, "mean", mean)
        object.__setattr__(self, "cov", cov)
        object.__setattr__(self, "cov_inv", cov_inv)
        object.__setattr__(self, "method", Method(self.method))


@dataclass(frozen=True)
class ControlLimitSet:
    """Upper limits for one chart; the lower limit is identically zero."""

    ucl_f: float
    ucl_quantile: float
    alpha: float
    k: int
    p: int = 2
    lcl: float = 0.0

    def __post_init__(self):
        if not self.ucl_f > 0 or self.ucl_quantile < 0:
            raise ValueError("control limits must be positive")
        if self.lcl != 0.0:
            raise ValueError("the lower control limit is fixed at zero")
        check_alpha(self.alpha)


@dataclass(frozen=True)
class ChartPoint:
    """T2 of one sample with a signal flag per limit scheme."""

    sample_id: int
    t2: float
    signal_fisher: bool
    signal_quantile: bool

    def __post_init__(self):
        if self.t2 < 0:
            raise ValueError("t2 cannot be negative")


def _successive_diff_cov(v: np.ndarray) -> np.ndarray:
    d = np.diff(v, axis=0)
    return (d.T @ d) / (2.0 * (len(v) - 1))


def build_baseline(
    coeffs: Sequence[CoefficientVector],
    cov_estimator: CovEstimator = CovEstimator.SAMPLE,
) -> HotellingBaseline:
    """Mean and covariance of phase-I coefficient vectors.

    The default covariance is the divisor-(k-1) sample estimator. The inverse
    is computed by the direct 2x2 formula and rejected when the determinant
    falls below 1e-14 of the diagonal scale.
    """
    coeffs = list(coeffs)
    k = len(coeffs)
    if k < 3:
        raise TooFewSamplesError(f"need at least 3 samples for a 2-d baseline, got {k}")
    methods = {c.method for c in coeffs}
    if len(methods) != 1:
        raise ValueError("cannot mix estimator methods in one baseline")
    v = coefficient_matrix(coeffs)
    mean = v.mean(axis=0)
    centred = v - mean
    if CovEstimator(cov_estimator) is CovEstimator.SUCCESSIVE_DIFF:
        cov = _successive_diff_cov(v)
    else:
        cov = (centred.T @ centred) / (k - 1)
    det = cov[0, 0] * cov[1, 1] - cov[0, 1] * cov[1, 0]
    scale = max(cov[0, 0] * cov[1, 1], 1e-300)
    if not det > 1e-14 * scale:
        raise SingularCovarianceError(
            "coefficient covariance is singular; the phase-I vectors are collinear"
        )
    cov_inv = np.array([[cov[1, 1], -cov[0, 1]], [-cov[1, 0], cov[0, 0]]]) / det
    return HotellingBaseline(mean=mean, cov=cov, cov_inv=cov_inv, k=k, method=methods.pop())


def t2_statistic(baseline: HotellingBaseline, coeff: CoefficientVector) -> float:
    """(v - mean)' S^-1 (v - mean) for one coefficient vector."""
    d = coeff.as_array() - baseline.mean
    return float(d @ baseline.cov_inv @ d)


def phase1_t2(baseline: HotellingBaseline, coeffs: Sequence[CoefficientVector]) -> np.ndarray:
    return np.array([t2_statistic(baseline, c) for c in coeffs])


def fisher_ucl(p: int, k: int, alpha: float) -> float:
    """F-based upper control limit.

    For k <= 100 phase-I samples the limit is p(k+1)(k-1)/(k^2-pk) times the
    upper-alpha F(p, k-p) point; for larger k the leaner p(k-1)/(k-p) factor
    is used.
    """
    if k <= p:
        raise InvalidDofError(f"need more samples than coefficients, got k={k}, p={p}")
    if not 0.0 < alpha < 1.0:
        raise InvalidDofError(f"alpha must lie strictly between 0 and 1, got {alpha}")
    quantile = f_upper_quantile(alpha, p, k - p)
    if k <= 100:
        factor = p * (k + 1) * (k - 1) / (k * k - p * k)
    else:
        factor = p * (k - 1) / (k - p)
    return factor * quantile


def quantile_ucl(t2_values, alpha: float) -> float:
    """Empirical (1-alpha) quantile of phase-I T2 values.

    Linear interpolation of order statistics: with m sorted values and
    h = (m-1)(1-alpha)+1, the result is x_floor(h) plus the fractional part of
    h times the gap to the next order statistic.
    """
    values = np.asarray(list(t2_values), dtype=float)
    if values.size == 0:
        raise EmptyInputError("cannot take a quantile of an empty list")
    check_alpha(alpha)
    xs = np.sort(values)
    m = xs.size
    h = (m - 1) * (1.0 - alpha) + 1.0
    lo = int(math.floor(h))
    if lo >= m:
        return float(xs[-1])
    return float(xs[lo - 1] + (h - lo) * (xs[lo] - xs[lo - 1]))


def control_limits(t2_values, k: int, alpha: float, p: int = 2) -> ControlLimitSet:
    """Bundle both upper limits computed from phase-I T2 values."""
    return ControlLimitSet(
        ucl_f=fisher_ucl(p, k, alpha),
        ucl_quantile=quantile_ucl(t2_values, alpha),
        alpha=alpha,
        k=k,
        p=p,
    )


def evaluate_chart(
    baseline: HotellingBaseline,
    limits: ControlLimitSet,
    coeffs: Sequence[CoefficientVector],
) -> list[ChartPoint]:
    """Chart coefficient vectors against a frozen baseline and limits.

    Signals use the strict inequality t2 > UCL; a point exactly on a limit is
    in control. The zero lower limit can never signal because t2 >= 0.
    """
    out = []
    for c in coeffs:
        t2 = t2_statistic(baseline, c)
        out.append(
            ChartPoint(
                sample_id=c.sample_id,
                t2=t2,
                signal_fisher=t2 > limits.ucl_f,
                signal_quantile=t2 > limits.ucl_quantile,
            )
        )
    return out


class ProfileT2Chart(BaseEstimator):
    """Estimator-style front end: fit on phase-I responses, score/predict on
    phase-II responses.

    Parameters
    ----------
    design : array-like of shape (n,)
        Fixed x vector shared by all profiles.
    method : {"lr", "me"}
        Coefficient estimator.
    alpha : float
        False-alarm rate for both control limits.
    limit_scheme : {"quantile", "fisher"}
        Which UCL predict() uses for its signal flags.
    cov_estimator : {"sample", "successive-diff"}
    preset, support, tol, max_iter, quad_order
        Maximum-entropy solver settings; ignored for method="lr".

    Attributes (after fit)
    ----------------------
    coefficients_ : (k, 2) phase-I coefficient rows
    baseline_ : HotellingBaseline
    limits_ : ControlLimitSet
    t2_ : (k,) phase-I T2 values
    """

    def __init__(
        self,
        design=None,
        method="lr",
        alpha=0.05,
        limit_scheme="quantile",
        cov_estimator="sample",
        preset="full-second",
        support=None,
        tol=1e-8,
        max_iter=100,
        quad_order=96,
    ):
        self.design = design
        self.method = method
        self.alpha = alpha
        self.limit_scheme = limit_scheme
        self.cov_estimator = cov_estimator
        self.preset = preset
        self.support = support
        self.tol = tol
        self.max_iter = max_iter
        self.quad_order = quad_order

    def _dataset(self, X, phase: Phase) -> ProfileDataset:
        design = check_design(self.design)
        X = check_profile_matrix(X, design.size)
        return ProfileDataset(
            design=DesignVector(design),
            samples=tuple(ProfileSample(i + 1, row) for i, row in enumerate(X)),
            phase=phase,
        )

    def _coeffs(self, X, phase: Phase):
        ds = self._dataset(X, phase)
        return fit_all(
            ds,
            Method(self.method),
            preset=ConstraintPreset(self.preset),
            support=self.support,
            tol=self.tol,
            max_iter=self.max_iter,
            quad_order=self.quad_order,
        )

    def fit(self, X, y=None):
        coeffs = self._coeffs(X, Phase.PHASE_I)
        self.baseline_ = build_baseline(coeffs, CovEstimator(self.cov_estimator))
        self.t2_ = phase1_t2(self.baseline_, coeffs)
        self.limits_ = control_limits(self.t2_, k=len(coeffs), alpha=self.alpha)
        self.coefficients_ = coefficient_matrix(coeffs)
        self.n_features_in_ = self.baseline_.mean.size
        return self

    def score_samples(self, X) -> np.ndarray:
        coeffs = self._coeffs(X, Phase.PHASE_II)
        return np.array([t2_statistic(self.baseline_, c) for c in coeffs])

    def predict(self, X) -> np.ndarray:
        """True where a sample signals under the configured limit scheme."""
        t2 = self.score_samples(X)
        if self.limit_scheme == "fisher":
            return t2 > self.limits_.ucl_f
        if self.limit_scheme == "quantile":
            return t2 > self.limits_.ucl_quantile
        raise ValueError(f"unknown limit scheme {self.limit_scheme!r}")
