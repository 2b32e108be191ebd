"""Baseline artifact: the frozen phase-I state a phase-II chart runs against.

JSON with a schema marker; carries the design vector so monitoring data can
be checked for compatibility, the per-sample coefficients and T2 values, both
control limits, and the effective run configuration for provenance.
"""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

import numpy as np

from .estimators import CoefficientVector, Method
from .exceptions import MalformedCsvError
from .monitoring import ControlLimitSet, CovEstimator, HotellingBaseline

BASELINE_SCHEMA = "entropyspc.baseline/1"
COEFFS_CSV_HEADER = ("sample_id", "a", "b")


@dataclass(frozen=True)
class BaselineArtifact:
    baseline: HotellingBaseline
    limits: ControlLimitSet
    design: np.ndarray
    cov_estimator: CovEstimator
    coeffs: tuple[CoefficientVector, ...]
    t2: tuple[float, ...]
    config: dict


def save_baseline(
    path,
    baseline: HotellingBaseline,
    limits: ControlLimitSet,
    design,
    cov_estimator: CovEstimator,
    coeffs: Sequence[CoefficientVector],
    t2: Sequence[float],
    config: dict,
) -> None:
    payload = {
        "schema": BASELINE_SCHEMA,
        "method": baseline.method.value,
        "alpha": limits.alpha,
        "k": baseline.k,
        "p": limits.p,
        "design": [float(v) for v in design],
        "mean": [float(v) for v in baseline.mean],
        "cov": [[float(v) for v in row] for row in baseline.cov],
        "cov_inv": [[float(v) for v in row] for row in baseline.cov_inv],
        "ucl_f": limits.ucl_f,
        "ucl_quantile": limits.ucl_quantile,
        "lcl": limits.lcl,
        "cov_estimator": CovEstimator(cov_estimator).value,
        "samples": [
            {
                "sample_id": c.sample_id,
                "intercept": c.intercept,
                "slope": c.slope,
                "t2": float(v),
            }
            for c, v in zip(coeffs, t2)
        ],
        "config": config,
    }
    Path(path).write_text(
        json.dumps(payload, indent=2, sort_keys=True) + "\n", encoding="utf-8"
    )


def load_baseline(path) -> BaselineArtifact:
    raw = json.loads(Path(path).read_text(encoding="utf-8"))
    if raw.get("schema") != BASELINE_SCHEMA:
        raise ValueError(f"{path}: not a baseline artifact (schema {raw.get('schema')!r})")
    method = Method(raw["method"])
    baseline = HotellingBaseline(
        mean=np.array(raw["mean"]),
        cov=np.array(raw["cov"]),
        cov_inv=np.array(raw["cov_inv"]),
        k=int(raw["k"]),
        method=method,
    )
    limits = ControlLimitSet(
        ucl_f=float(raw["ucl_f"]),
        ucl_quantile=float(raw["ucl_quantile"]),
        alpha=float(raw["alpha"]),
        k=int(raw["k"]),
        p=int(raw["p"]),
    )
    coeffs = tuple(
        CoefficientVector(
            intercept=float(s["intercept"]),
            slope=float(s["slope"]),
            method=method,
            sample_id=int(s["sample_id"]),
        )
        for s in raw["samples"]
    )
    return BaselineArtifact(
        baseline=baseline,
        limits=limits,
        design=np.array(raw["design"], dtype=float),
        cov_estimator=CovEstimator(raw["cov_estimator"]),
        coeffs=coeffs,
        t2=tuple(float(s["t2"]) for s in raw["samples"]),
        config=dict(raw.get("config", {})),
    )


def load_coefficients_csv(path, method: Method) -> list[CoefficientVector]:
    """Fixture mode: precomputed coefficients with header ``sample_id,a,b``."""
    path = Path(path)
    out = []
    with path.open(newline="", encoding="utf-8") as handle:
        reader = csv.reader(handle)
        header = None
        for line_no, row in enumerate(reader, start=1):
            if not row or (len(row) == 1 and not row[0].strip()):
                continue
            if row[0].lstrip().startswith("#"):
                continue
            if header is None:
                header = tuple(cell.strip().lower() for cell in row)
                if header != COEFFS_CSV_HEADER:
                    raise MalformedCsvError(
                        f"{path}:{line_no}: expected header {','.join(COEFFS_CSV_HEADER)!r}"
                    )
                continue
            if len(row) != 3:
                raise MalformedCsvError(f"{path}:{line_no}: expected 3 fields, got {len(row)}")
            try:
                sid = int(row[0])
                a = float(row[1])
                b = float(row[2])
            except ValueError:
                raise MalformedCsvError(f"{path}:{line_no}: cannot parse row {row!r}") from None
            out.append(CoefficientVector(intercept=a, slope=b, method=method, sample_id=sid))
    if header is None:
        raise MalformedCsvError(f"{path}: missing header line")
    if not out:
        raise MalformedCsvError(f"{path}: no coefficient rows")
    return out
