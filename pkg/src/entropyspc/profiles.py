"""Profile data model: one fixed x design vector, k response samples, CSV ingestion.

What separates a profile from ordinary regression is the fixed design: every
sample shares the identical x vector, so a dataset is the design plus a stack
of y vectors. The CSV schema is long format with header ``sample_id,x,y``, one
row per (sample, point). Blank lines and lines starting with ``#`` are skipped.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass
from enum import Enum
from pathlib import Path

import numpy as np

from .exceptions import (
    DegenerateDesignError,
    EmptyDatasetError,
    InconsistentDesignError,
    MalformedCsvError,
    UnknownSampleError,
)

CSV_HEADER = ("sample_id", "x", "y")


class Phase(str, Enum):
    PHASE_I = "phase1"
    PHASE_II = "phase2"


def _readonly(values) -> np.ndarray:
    arr = np.array(values, dtype=float)
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True)
class DesignVector:
    """The fixed x grid shared by every sample of a dataset."""

    x: np.ndarray

    def __post_init__(self):
        arr = _readonly(self.x)
        if arr.ndim != 1 or arr.size < 2:
            raise ValueError("design needs at least two points")
        if not np.all(np.isfinite(arr)):
            raise ValueError("design values must be finite")
        if np.unique(arr).size < 2:
            raise DegenerateDesignError("all design points are identical")
        object.__setattr__(self, "x", arr)

    @property
    def n(self) -> int:
        return int(self.x.size)


@dataclass(frozen=True)
class ProfileSample:
    """One response vector, aligned point-for-point with the owning design."""

    sample_id: int
    y: np.ndarray

    def __post_init__(self):
        if int(self.sample_id) <= 0:
            raise ValueError(f"sample_id must be a positive integer, got {self.sample_id}")
        object.__setattr__(self, "sample_id", int(self.sample_id))
        arr = _readonly(self.y)
        if arr.ndim != 1:
            raise ValueError("y must be one-dimensional")
        if not np.all(np.isfinite(arr)):
            raise ValueError("y contains non-finite values")
        object.__setattr__(self, "y", arr)


@dataclass(frozen=True)
class ProfileDataset:
    """Immutable bundle of a design vector and k >= 1 response samples."""

    design: DesignVector
    samples: tuple[ProfileSample, ...]
    phase: Phase

    def __post_init__(self):
        samples = tuple(sorted(self.samples, key=lambda s: s.sample_id))
        if not samples:
            raise EmptyDatasetError("dataset has no samples")
        ids = [s.sample_id for s in samples]
        if len(set(ids)) != len(ids):
            raise ValueError("sample_ids must be unique")
        for s in samples:
            if s.y.size != self.design.n:
                raise InconsistentDesignError(
                    f"sample {s.sample_id} has {s.y.size} points, design has {self.design.n}"
                )
        object.__setattr__(self, "samples", samples)
        object.__setattr__(self, "phase", Phase(self.phase))

    @property
    def k(self) -> int:
        return len(self.samples)

    @property
    def n(self) -> int:
        return self.design.n

    @property
    def sample_ids(self) -> tuple[int, ...]:
        return tuple(s.sample_id for s in self.samples)

    def sample(self, sample_id: int) -> ProfileSample:
        for s in self.samples:
            if s.sample_id == sample_id:
                return s
        raise UnknownSampleError(f"no sample with id {sample_id}")

    def y_matrix(self) -> np.ndarray:
        """All responses as a (k, n) array, rows ordered by sample_id."""
        return np.array([s.y for s in self.samples])


@dataclass(frozen=True)
class SampleMoments:
    """Empirical first and second moments of (x, y) over one sample's n points."""

    mean_x: float
    mean_y: float
    mean_x2: float
    mean_y2: float
    mean_xy: float

    def __post_init__(self):
        # Cauchy-Schwarz up to rounding slack; violated only by corrupt input.
        for m2, m, label in ((self.mean_x2, self.mean_x, "x"), (self.mean_y2, self.mean_y, "y")):
            if m2 - m * m < -1e-12 * max(1.0, abs(m2)):
                raise ValueError(f"second moment of {label} is below its squared mean")

    @property
    def var_x(self) -> float:
        return self.mean_x2 - self.mean_x**2

    @property
    def var_y(self) -> float:
        return self.mean_y2 - self.mean_y**2

    @property
    def cov_xy(self) -> float:
        return self.mean_xy - self.mean_x * self.mean_y


def sample_moments(dataset: ProfileDataset, sample_id: int) -> SampleMoments:
    """Arithmetic means of x, y, x^2, y^2 and xy over one sample's points."""
    s = dataset.sample(sample_id)
    x = dataset.design.x
    y = s.y
    return SampleMoments(
        mean_x=float(np.mean(x)),
        mean_y=float(np.mean(y)),
        mean_x2=float(np.mean(x * x)),
        mean_y2=float(np.mean(y * y)),
        mean_xy=float(np.mean(x * y)),
    )


def _parse_float(token: str, path, line_no: int, column: str) -> float:
    try:
        return float(token)
    except ValueError:
        raise MalformedCsvError(
            f"{path}:{line_no}: cannot parse {column} value {token!r}"
        ) from None


def _parse_id(token: str, path, line_no: int) -> int:
    try:
        value = int(token)
    except ValueError:
        raise MalformedCsvError(
            f"{path}:{line_no}: cannot parse sample_id value {token!r}"
        ) from None
    if value <= 0:
        raise MalformedCsvError(f"{path}:{line_no}: sample_id must be positive, got {value}")
    return value


def load_dataset(path, phase: Phase) -> ProfileDataset:
    """Load a long-format profile CSV (``sample_id,x,y``) into a ProfileDataset.

    The x sequence of the first sample defines the design; every later sample
    must repeat it exactly (value equality after parsing, zero tolerance), in
    the same order. Rows of one sample must be contiguous.
    """
    path = Path(path)
    groups: list[tuple[int, list[float], list[float]]] = []
    seen: set[int] = set()
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
                if header != CSV_HEADER:
                    raise MalformedCsvError(
                        f"{path}:{line_no}: expected header {','.join(CSV_HEADER)!r}, "
                        f"got {','.join(header)!r}"
                    )
                continue
            if len(row) != 3:
                raise MalformedCsvError(
                    f"{path}:{line_no}: expected 3 fields, got {len(row)}"
                )
            sid = _parse_id(row[0].strip(), path, line_no)
            xv = _parse_float(row[1].strip(), path, line_no, "x")
            yv = _parse_float(row[2].strip(), path, line_no, "y")
            if groups and groups[-1][0] == sid:
                groups[-1][1].append(xv)
                groups[-1][2].append(yv)
            else:
                if sid in seen:
                    raise MalformedCsvError(
                        f"{path}:{line_no}: rows of sample {sid} are not contiguous"
                    )
                seen.add(sid)
                groups.append((sid, [xv], [yv]))
    if header is None:
        raise MalformedCsvError(f"{path}: missing header line")
    if not groups:
        raise EmptyDatasetError(f"{path}: no data rows")

    design_x = groups[0][1]
    for sid, xs, _ in groups[1:]:
        if len(xs) != len(design_x) or any(a != b for a, b in zip(xs, design_x)):
            raise InconsistentDesignError(
                f"{path}: sample {sid} has x values {xs} but the design is {design_x}"
            )
    design = DesignVector(np.array(design_x))
    samples = tuple(ProfileSample(sid, np.array(ys)) for sid, _, ys in groups)
    return ProfileDataset(design=design, samples=samples, phase=phase)


def write_dataset(dataset: ProfileDataset, path) -> None:
    """Write a dataset in the same CSV schema that load_dataset reads.

    Floats are written with repr, so a load round-trips every value exactly.
    """
    path = Path(path)
    with path.open("w", newline="", encoding="utf-8") as handle:
        writer = csv.writer(handle)
        writer.writerow(CSV_HEADER)
        for s in dataset.samples:
            for xv, yv in zip(dataset.design.x, s.y):
                writer.writerow([s.sample_id, repr(float(xv)), repr(float(yv))])
