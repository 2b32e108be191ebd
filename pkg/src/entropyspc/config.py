"""Run configuration: JSON file values overridden by CLI flags, echoed into
every report for provenance."""

from __future__ import annotations

import dataclasses
import json
import math
import os
from dataclasses import dataclass
from pathlib import Path

SEED_ENV_VAR = "ENTROPYSPC_SEED"


@dataclass(frozen=True)
class RunConfig:
    alpha: float = 0.05
    method: str = "both"  # lr | me | both
    preset: str = "full-second"  # first-cross | full-second
    support: tuple[float, float, float, float] | None = None  # None -> preset default
    tol: float = 1e-8
    max_iter: int = 100
    quad_order: int = 96
    seed: int | None = None  # resolved via effective_seed()
    replicates: int = 1000
    grid: tuple[float, float, float] = (0.01, 0.32, 0.01)  # start, stop, step
    models: tuple[str, ...] = ("intercept", "slope", "mixed")
    cov_estimator: str = "sample"  # sample | successive-diff
    out: str = "."
    true_intercept: float = 2.0
    true_slope: float = 3.0
    noise_variance: float = 0.1
    design: tuple[float, ...] = (2.0, 2.2, 2.4, 2.1, 2.7)
    phase1_k: int = 100
    phase1_draws: int = 1

    def __post_init__(self):
        if self.tol <= 0 or self.max_iter <= 0 or self.quad_order <= 0:
            raise ValueError("solver settings must be positive")
        if self.grid[2] <= 0:
            raise ValueError("grid step must be positive")
        if self.method not in ("lr", "me", "both"):
            raise ValueError(f"unknown method {self.method!r}")

    @classmethod
    def load(cls, path=None) -> "RunConfig":
        if path is None:
            return cls()
        raw = json.loads(Path(path).read_text(encoding="utf-8"))
        known = {f.name for f in dataclasses.fields(cls)}
        unknown = set(raw) - known
        if unknown:
            raise ValueError(f"unknown config keys: {sorted(unknown)}")
        if "support" in raw and raw["support"] is not None:
            raw["support"] = tuple(float(v) for v in raw["support"])
        for key in ("grid", "models", "design"):
            if key in raw and raw[key] is not None:
                raw[key] = tuple(raw[key])
        return cls(**raw)

    def merged(self, **overrides) -> "RunConfig":
        """New config with the non-None overrides applied."""
        updates = {k: v for k, v in overrides.items() if v is not None}
        return dataclasses.replace(self, **updates)

    def effective_seed(self) -> int:
        if self.seed is not None:
            return int(self.seed)
        env = os.environ.get(SEED_ENV_VAR)
        if env is not None:
            return int(env)
        return 0

    def grid_values(self) -> list[float]:
        start, stop, step = self.grid
        count = int(round((stop - start) / step)) + 1
        values = [round(start + i * step, 10) for i in range(max(count, 0))]
        return [v for v in values if v <= stop + 1e-12]

    def to_dict(self) -> dict:
        """JSON-safe dict; unbounded support edges become 'inf'/'-inf' strings."""
        out = dataclasses.asdict(self)
        out["seed"] = self.effective_seed()
        if out["support"] is not None:
            out["support"] = [
                b if math.isfinite(b) else ("inf" if b > 0 else "-inf")
                for b in out["support"]
            ]
        for key in ("grid", "models", "design"):
            out[key] = list(out[key])
        return out


def parse_grid(text: str) -> tuple[float, float, float]:
    """Parse 'START:STOP:STEP'."""
    parts = text.split(":")
    if len(parts) != 3:
        raise ValueError(f"grid must be START:STOP:STEP, got {text!r}")
    start, stop, step = (float(p) for p in parts)
    return (start, stop, step)
