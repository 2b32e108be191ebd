"""Monte-Carlo run-length study for profile control charts.

Phase I simulates k in-control samples, fits both estimators and freezes
their baselines and limits. For each shifted model and shift size, fresh
samples are generated and the in-control probability beta is the fraction
whose T2 stays at or below the limit; ARL = 1/(1 - beta). At shift 0 this is
the in-control run length 1/alpha-hat.

Replicate randomness comes from numpy PCG64 generators seeded through
SeedSequence spawn keys (a counter-based split of the master seed), so every
replicate stream is reproducible independently of execution order, and the
same simulated samples are scored against all four method/limit combinations
to make comparisons paired.
"""

from __future__ import annotations

import csv
import hashlib
import json
import math
from dataclasses import dataclass
from enum import Enum
from pathlib import Path
from typing import Sequence

import numpy as np

from .estimators import Method, _lr_from_arrays, fit_all
from .maxent import (
    ConstraintPreset,
    ConstraintSet,
    SupportRegion,
    default_support,
    density_moments,
    solve_maxent,
)
from .monitoring import (
    ControlLimitSet,
    CovEstimator,
    HotellingBaseline,
    build_baseline,
    control_limits,
    phase1_t2,
)
from .profiles import DesignVector, Phase, ProfileDataset, ProfileSample

_PHASE1_DOMAIN = 0
_REPLICATE_DOMAIN = 1

GENERATOR_NAME = "numpy PCG64 seeded via SeedSequence spawn keys"


class ShiftModel(str, Enum):
    INTERCEPT = "intercept"
    SLOPE = "slope"
    MIXED = "mixed"


@dataclass(frozen=True)
class TrueModel:
    """In-control profile model y = intercept + slope * x + N(0, noise_variance)."""

    intercept: float
    slope: float
    noise_variance: float
    design: DesignVector

    def __post_init__(self):
        if not self.noise_variance > 0:
            raise ValueError("noise variance must be positive")

    @property
    def sigma(self) -> float:
        return math.sqrt(self.noise_variance)


@dataclass(frozen=True)
class ShiftScenario:
    """A shift of size s applied to the intercept, the slope, or both."""

    model_type: ShiftModel
    shift: float
    base: TrueModel

    def shifted_coefficients(self) -> tuple[float, float]:
        a, b, s = self.base.intercept, self.base.slope, self.shift
        kind = ShiftModel(self.model_type)
        if kind is ShiftModel.INTERCEPT:
            return a + s, b
        if kind is ShiftModel.SLOPE:
            return a, b + s
        return a + s, b + s


@dataclass(frozen=True)
class ArlRow:
    model: ShiftModel
    shift: float
    method: Method
    scheme: str  # "fisher" or "quantile"
    beta: float
    arl: float


@dataclass(frozen=True)
class ArlReport:
    rows: tuple[ArlRow, ...]
    seed: int
    replicates: int
    config: dict
    generator: str = GENERATOR_NAME


def stream(seed: int, *key: int) -> np.random.Generator:
    """Independent generator for a spawn key; order-independent by construction."""
    return np.random.default_rng(np.random.SeedSequence(int(seed), spawn_key=tuple(key)))


def simulate_phase1(model: TrueModel, k: int, seed: int, draw: int = 0) -> ProfileDataset:
    """k in-control samples from the true model; bit-identical for a fixed seed."""
    if k < 3:
        raise ValueError("phase I needs at least 3 samples")
    rng = stream(seed, _PHASE1_DOMAIN, draw)
    x = model.design.x
    line = model.intercept + model.slope * x
    samples = tuple(
        ProfileSample(j + 1, line + rng.normal(0.0, model.sigma, x.size))
        for j in range(k)
    )
    return ProfileDataset(design=model.design, samples=samples, phase=Phase.PHASE_I)


class _CoefficientFitter:
    """Per-replicate coefficient fit with precomputed design moments.

    The maximum-entropy route warm-starts at the closed-form moment-matched
    Gaussian when the preset admits one, which keeps the per-replicate solve
    to a couple of Newton steps.
    """

    def __init__(
        self,
        design: DesignVector,
        method: Method,
        preset: ConstraintPreset = ConstraintPreset.FULL_SECOND_ORDER,
        support: SupportRegion | None = None,
        tol: float = 1e-8,
        max_iter: int = 100,
        quad_order: int = 96,
    ):
        self.x = design.x
        self.method = Method(method)
        self.preset = ConstraintPreset(preset)
        self.support = support if support is not None else default_support(self.preset)
        self.tol = tol
        self.max_iter = max_iter
        self.quad_order = quad_order
        self.mean_x = float(np.mean(self.x))
        self.mean_x2 = float(np.mean(self.x * self.x))

    def coefficients(self, y: np.ndarray) -> tuple[float, float]:
        if self.method is Method.LR:
            return _lr_from_arrays(self.x, y)
        mean_y = float(np.mean(y))
        mean_y2 = float(np.mean(y * y))
        mean_xy = float(np.mean(self.x * y))
        if self.preset is ConstraintPreset.FULL_SECOND_ORDER:
            constraints = ConstraintSet.full_second_order(
                self.mean_x, mean_y, self.mean_x2, mean_y2, mean_xy
            )
            init = "gaussian"
        else:
            constraints = ConstraintSet.first_order_cross(self.mean_x, mean_y, mean_xy)
            init = None
        density = solve_maxent(
            constraints,
            support=self.support,
            tol=self.tol,
            max_iter=self.max_iter,
            quad_order=self.quad_order,
            init=init,
        )
        mom = density_moments(density)
        b = mom.cov_xy / mom.var_x
        return mom.e_y - b * mom.e_x, b


@dataclass(frozen=True)
class _MethodState:
    fitter: _CoefficientFitter
    baseline: HotellingBaseline
    limits: ControlLimitSet


def _in_control_counts(
    scenario: ShiftScenario,
    states: Sequence[_MethodState],
    replicates: int,
    seed: int,
    key_prefix: tuple[int, ...],
) -> np.ndarray:
    """Counts of replicates with T2 <= UCL, shaped (len(states), 2) for the
    (fisher, quantile) schemes, scored on shared simulated samples."""
    x = scenario.base.design.x
    sigma = scenario.base.sigma
    a, b = scenario.shifted_coefficients()
    line = a + b * x
    counts = np.zeros((len(states), 2), dtype=int)
    for i in range(replicates):
        rng = stream(seed, _REPLICATE_DOMAIN, *key_prefix, i)
        y = line + rng.normal(0.0, sigma, x.size)
        for m, st in enumerate(states):
            ca, cb = st.fitter.coefficients(y)
            d0 = ca - st.baseline.mean[0]
            d1 = cb - st.baseline.mean[1]
            ci = st.baseline.cov_inv
            t2 = d0 * (ci[0, 0] * d0 + ci[0, 1] * d1) + d1 * (ci[1, 0] * d0 + ci[1, 1] * d1)
            if t2 <= st.limits.ucl_f:
                counts[m, 0] += 1
            if t2 <= st.limits.ucl_quantile:
                counts[m, 1] += 1
    return counts


def estimate_beta(
    scenario: ShiftScenario,
    baseline: HotellingBaseline,
    limits: ControlLimitSet,
    method: Method,
    replicates: int,
    seed: int,
    scheme: str = "quantile",
    preset: ConstraintPreset = ConstraintPreset.FULL_SECOND_ORDER,
    support: SupportRegion | None = None,
    tol: float = 1e-8,
    max_iter: int = 100,
    quad_order: int = 96,
) -> float:
    """Fraction of shifted replicates whose T2 stays at or below the chosen UCL."""
    if replicates < 1:
        raise ValueError("need at least one replicate")
    if scheme not in ("fisher", "quantile"):
        raise ValueError(f"unknown scheme {scheme!r}")
    fitter = _CoefficientFitter(
        scenario.base.design, method, preset, support, tol, max_iter, quad_order
    )
    state = _MethodState(fitter=fitter, baseline=baseline, limits=limits)
    counts = _in_control_counts(scenario, [state], replicates, seed, (0, 0))
    return float(counts[0, 0 if scheme == "fisher" else 1]) / replicates


def _arl_from_beta(beta: float) -> float:
    return math.inf if beta >= 1.0 else 1.0 / (1.0 - beta)


def arl_table(
    base: TrueModel,
    shifts: Sequence[float],
    models: Sequence[ShiftModel] = tuple(ShiftModel),
    k: int = 100,
    alpha: float = 0.05,
    replicates: int = 1000,
    seed: int = 0,
    methods: Sequence[Method] = (Method.LR, Method.ME),
    preset: ConstraintPreset = ConstraintPreset.FULL_SECOND_ORDER,
    support: SupportRegion | None = None,
    tol: float = 1e-8,
    max_iter: int = 100,
    quad_order: int = 96,
    cov_estimator: CovEstimator = CovEstimator.SAMPLE,
    phase1_draws: int = 1,
) -> ArlReport:
    """Full run-length study: one row per (model, shift, method, scheme).

    A shift of 0 (the in-control row) is always included first. With
    phase1_draws > 1 the study repeats over independent phase-I datasets and
    averages beta per row before converting to ARL.
    """
    models = tuple(ShiftModel(m) for m in models)
    methods = tuple(Method(m) for m in methods)
    grid = [0.0] + [float(s) for s in shifts if float(s) != 0.0]
    beta_sums: dict[tuple, float] = {}

    for draw in range(phase1_draws):
        dataset = simulate_phase1(base, k, seed, draw=draw)
        states: dict[Method, _MethodState] = {}
        for method in methods:
            coeffs = fit_all(
                dataset,
                method,
                preset=preset,
                support=support,
                tol=tol,
                max_iter=max_iter,
                quad_order=quad_order,
            )
            baseline = build_baseline(coeffs, cov_estimator)
            t2 = phase1_t2(baseline, coeffs)
            limits = control_limits(t2, k=k, alpha=alpha)
            fitter = _CoefficientFitter(
                base.design, method, preset, support, tol, max_iter, quad_order
            )
            states[method] = _MethodState(fitter=fitter, baseline=baseline, limits=limits)

        state_list = [states[m] for m in methods]
        for mi, model in enumerate(models):
            for si, s in enumerate(grid):
                if s == 0.0 and mi > 0:
                    continue  # the in-control row does not depend on the shift model
                scenario = ShiftScenario(model_type=model, shift=s, base=base)
                counts = _in_control_counts(
                    scenario, state_list, replicates, seed, (draw, mi, si)
                )
                for m, method in enumerate(methods):
                    for sc, scheme in enumerate(("fisher", "quantile")):
                        key = (model, s, method, scheme)
                        beta_sums[key] = beta_sums.get(key, 0.0) + counts[m, sc] / replicates

    rows = []
    for mi, model in enumerate(models):
        for s in grid:
            if s == 0.0 and mi > 0:
                continue
            for method in methods:
                for scheme in ("fisher", "quantile"):
                    beta = beta_sums[(model, s, method, scheme)] / phase1_draws
                    rows.append(
                        ArlRow(
                            model=model,
                            shift=s,
                            method=method,
                            scheme=scheme,
                            beta=beta,
                            arl=_arl_from_beta(beta),
                        )
                    )

    support_used = support if support is not None else default_support(ConstraintPreset(preset))
    # JSON has no inf literal, so unbounded support edges are serialised as strings
    support_json = [b if math.isfinite(b) else ("inf" if b > 0 else "-inf") for b in support_used.bounds]
    config = {
        "true_intercept": base.intercept,
        "true_slope": base.slope,
        "noise_variance": base.noise_variance,
        "design": [float(v) for v in base.design.x],
        "k": k,
        "alpha": alpha,
        "replicates": replicates,
        "seed": seed,
        "models": [m.value for m in models],
        "shifts": grid,
        "methods": [m.value for m in methods],
        "preset": ConstraintPreset(preset).value,
        "support": support_json,
        "tol": tol,
        "max_iter": max_iter,
        "quad_order": quad_order,
        "cov_estimator": CovEstimator(cov_estimator).value,
        "phase1_draws": phase1_draws,
    }
    return ArlReport(
        rows=tuple(rows), seed=seed, replicates=replicates, config=config
    )


def config_hash(config: dict) -> str:
    return hashlib.sha256(
        json.dumps(config, sort_keys=True, allow_nan=False).encode("utf-8")
    ).hexdigest()


def write_report_csv(report: ArlReport, path) -> None:
    path = Path(path)
    with path.open("w", newline="", encoding="utf-8") as handle:
        writer = csv.writer(handle)
        writer.writerow(["model", "s", "method", "limit_scheme", "beta", "arl"])
        for row in report.rows:
            writer.writerow(
                [
                    row.model.value,
                    repr(row.shift),
                    row.method.value,
                    row.scheme,
                    repr(row.beta),
                    "inf" if math.isinf(row.arl) else repr(row.arl),
                ]
            )


def write_report_json(report: ArlReport, path) -> None:
    payload = {
        "seed": report.seed,
        "replicates": report.replicates,
        "generator": report.generator,
        "config": report.config,
        "config_hash": config_hash(report.config),
    }
    Path(path).write_text(json.dumps(payload, indent=2, sort_keys=True) + "\n", encoding="utf-8")


def read_report_csv(path) -> list[dict]:
    """Read back a report CSV as dictionaries with parsed numerics."""
    out = []
    with Path(path).open(newline="", encoding="utf-8") as handle:
        for rec in csv.DictReader(handle):
            out.append(
                {
                    "model": rec["model"],
                    "s": float(rec["s"]),
                    "method": rec["method"],
                    "limit_scheme": rec["limit_scheme"],
                    "beta": float(rec["beta"]),
                    "arl": float(rec["arl"]),
                }
            )
    return out
