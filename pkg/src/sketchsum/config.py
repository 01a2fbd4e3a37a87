"""Pipeline configuration: one JSON-serializable dataclass drives every run.

The resolved form (after bound fitting and threshold resolution) embeds
the grid block (dims, bins, lo[], hi[]) so any later stage, including the
standalone expand/oracle subcommands, can reconstruct the exact grid.
"""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass, field
from pathlib import Path

from .errors import ConfigError
from .quantizer import BoundingBox, GridSpec
from .sketch import SketchConfig
from .summary import SCHEMES


@dataclass
class PipelineConfig:
    input_path: str
    dims: int
    bins: int
    input_format: str = "auto"  # csv | snsd | auto
    bounds: str = "fit"  # fit | explicit
    lo: list[float] | None = None
    hi: list[float] | None = None
    threshold: float | None = None
    threshold_percentile: float | None = None
    normalize: bool = False
    rows: int = 16
    cols: int = 200_000
    seed: int = 1
    top_k: int = 1000
    candidate_multiplier: int = 2
    scheme: str = "log_rank"
    jitter_seed: int = 0
    partitions: int = 1
    jobs: int = 1
    output_dir: str = "out"

    def validate(self) -> None:
        if self.dims < 1:
            raise ConfigError(f"dims must be >= 1, got {self.dims}")
        if self.bins < 2:
            raise ConfigError(f"bins must be >= 2, got {self.bins}")
        if self.bins ** self.dims > 1 << 128:
            raise ConfigError(
                f"grid of {self.bins}^{self.dims} cells does not fit a 128-bit key"
            )
        SketchConfig(self.rows, self.cols, self.seed)  # reuses its validation
        if self.input_format not in ("csv", "snsd", "auto"):
            raise ConfigError(f"input_format must be csv, snsd or auto, got {self.input_format!r}")
        if self.bounds not in ("fit", "explicit"):
            raise ConfigError(f"bounds must be 'fit' or 'explicit', got {self.bounds!r}")
        if self.bounds == "explicit":
            if self.lo is None or self.hi is None:
                raise ConfigError("explicit bounds require both lo and hi")
            if len(self.lo) != self.dims or len(self.hi) != self.dims:
                raise ConfigError("lo and hi must each have one value per dimension")
            BoundingBox(tuple(self.lo), tuple(self.hi))
        if self.threshold is not None and self.threshold < 0:
            raise ConfigError(f"threshold must be non-negative, got {self.threshold}")
        if self.threshold_percentile is not None and not 0 <= self.threshold_percentile < 100:
            raise ConfigError(
                f"threshold_percentile must be in [0, 100), got {self.threshold_percentile}"
            )
        if self.threshold is not None and self.threshold_percentile is not None:
            raise ConfigError("set threshold or threshold_percentile, not both")
        if self.top_k < 1:
            raise ConfigError(f"top_k must be >= 1, got {self.top_k}")
        if self.candidate_multiplier < 1:
            raise ConfigError(
                f"candidate_multiplier must be >= 1, got {self.candidate_multiplier}"
            )
        if self.scheme not in SCHEMES:
            raise ConfigError(f"scheme must be one of {SCHEMES}, got {self.scheme!r}")
        if self.partitions < 1:
            raise ConfigError(f"partitions must be >= 1, got {self.partitions}")
        if self.jobs < 1:
            raise ConfigError(f"jobs must be >= 1, got {self.jobs}")

    @property
    def candidate_budget(self) -> int:
        return self.top_k * self.candidate_multiplier

    @property
    def sketch_config(self) -> SketchConfig:
        return SketchConfig(self.rows, self.cols, self.seed)

    def explicit_grid(self) -> GridSpec | None:
        if self.bounds != "explicit":
            return None
        return GridSpec(BoundingBox(tuple(self.lo), tuple(self.hi)), self.bins)

    # -- serialization ----------------------------------------------------

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, raw: dict) -> "PipelineConfig":
        raw = dict(raw)
        known = {f for f in cls.__dataclass_fields__}
        grid = raw.pop("grid", None)
        unknown = set(raw) - known
        if unknown:
            raise ConfigError(f"unknown config keys: {sorted(unknown)}")
        if "input_path" not in raw:
            raise ConfigError("config requires input_path")
        if grid is not None:
            raw.setdefault("dims", grid.get("dims"))
            raw.setdefault("bins", grid.get("bins"))
            if grid.get("lo") is not None:
                raw.setdefault("bounds", "explicit")
                raw.setdefault("lo", grid["lo"])
                raw.setdefault("hi", grid["hi"])
        if "dims" not in raw or "bins" not in raw:
            raise ConfigError("config requires dims and bins (directly or via a grid block)")
        cfg = cls(**raw)
        cfg.validate()
        return cfg

    @classmethod
    def from_file(cls, path) -> "PipelineConfig":
        try:
            raw = json.loads(Path(path).read_text())
        except json.JSONDecodeError as exc:
            raise ConfigError(f"{path}: invalid JSON: {exc}") from exc
        if not isinstance(raw, dict):
            raise ConfigError(f"{path}: config must be a JSON object")
        return cls.from_dict(raw)

    def resolved_dict(self, grid: GridSpec, threshold: float | None) -> dict:
        """Provenance form: every field pinned, plus the concrete grid block."""
        out = self.to_dict()
        out["threshold"] = threshold
        out["threshold_percentile"] = None
        out["bounds"] = "explicit"
        out["lo"] = list(grid.box.lo)
        out["hi"] = list(grid.box.hi)
        out["grid"] = {
            "dims": grid.dims,
            "bins": grid.bins_per_axis,
            "lo": list(grid.box.lo),
            "hi": list(grid.box.hi),
        }
        return out
