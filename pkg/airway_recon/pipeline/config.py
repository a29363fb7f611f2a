# Airway OCT Reconstruction - 3D airway geometry from anatomic OCT pull-backs.
# Copyright (C) 2025 Pramit Sharma
#
# This file is part of airway_recon.
#
# airway_recon is free software: you can redistribute it and/or modify
# it under the terms of the GNU Affero General Public License as published by
# the Free Software Foundation, either version 3 of the License, or (at your
# option) any later version.
#
# airway_recon is distributed in the hope that it will be useful,
# but WITHOUT ANY WARRANTY; without even the implied warranty of
# MERCHANTABILITY or FITNESS FOR A PARTICULAR PURPOSE.  See the
# GNU Affero General Public License for more details.
#
# You should have received a copy of the GNU Affero General Public License
# along with this program.  If not, see <https://www.gnu.org/licenses/>.

"""
Pipeline configuration: one TOML file parsed into frozen dataclasses.

Tables: [paths], [scan], [phantom] (+ [[phantom.stenoses]]), [noise],
[extract], [train], [mesh], [metrics]; top-level keys `seed`, `out`,
`stages`. Missing keys take the dataclass defaults, unknown keys are errors.
"""

import dataclasses
import hashlib
import json
try:
    import tomllib
except ModuleNotFoundError:  # Python < 3.11
    import tomli as tomllib
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Dict, Optional, Tuple

from airway_recon.exceptions import ConfigError
from airway_recon.extract.boundary import IntensityParams, MaskParams
from airway_recon.geometry.types import ScanConfig
from airway_recon.neural.training import TrainConfig
from airway_recon.phantom.scanner import NoiseParams
from airway_recon.phantom.shape import Phantom, Stenosis
from airway_recon.surface.marching import GridSpec

STAGES = ("simulate", "extract", "fit", "mesh", "resample", "metrics")
EXTRACT_METHODS = ("mask", "intensity")


@dataclass(frozen=True)
class PathsConfig:
    mask_dir: str = ""  # external masks; empty means the simulate stage's masks
    frame_dir: str = ""  # external frames for intensity extraction


@dataclass(frozen=True)
class ExtractParams:
    method: str = "mask"
    search_rows: int = 0  # 0 means frame_height // 8
    max_gap: int = 3
    threshold: float = 0.5
    min_run: int = 3
    median_width: int = 0

    def mask_params(self) -> MaskParams:
        return MaskParams(self.search_rows or None, self.max_gap)

    def intensity_params(self) -> IntensityParams:
        return IntensityParams(self.threshold, self.min_run, self.median_width)

    def diagnostics(self):
        problems = []
        if self.method not in EXTRACT_METHODS:
            problems.append(f"extract.method must be one of {EXTRACT_METHODS} (got '{self.method}')")
        if self.search_rows < 0 or self.max_gap < 0 or self.min_run < 1 or self.median_width < 0:
            problems.append("extract: search_rows, max_gap, median_width must be >= 0 and min_run >= 1")
        if not 0.0 < self.threshold < 1.0:
            problems.append("extract.threshold must lie in (0, 1)")
        return problems


@dataclass(frozen=True)
class MeshOptions:
    grid: GridSpec = GridSpec()
    crop_to_scan: bool = True


@dataclass(frozen=True)
class MetricOptions:
    emd_cap: int = 256
    mesh_samples: int = 10000


@dataclass(frozen=True)
class PipelineConfig:
    seed: int = 0
    out: str = "out"
    stages: Tuple[str, ...] = STAGES
    paths: PathsConfig = PathsConfig()
    scan: ScanConfig = ScanConfig()
    phantom: Optional[Phantom] = None
    noise: NoiseParams = NoiseParams()
    extract: ExtractParams = ExtractParams()
    train: TrainConfig = TrainConfig()
    mesh: MeshOptions = MeshOptions()
    metrics: MetricOptions = MetricOptions()
    source: Optional[str] = field(default=None, compare=False)

    @property
    def out_dir(self) -> Path:
        return Path(self.out)

    def with_overrides(self, seed: Optional[int] = None, out: Optional[str] = None) -> "PipelineConfig":
        """Apply CLI overrides; the seed propagates to training as well."""
        cfg = self
        if seed is not None:
            cfg = dataclasses.replace(cfg, seed=int(seed), train=dataclasses.replace(cfg.train, seed=int(seed)))
        if out is not None:
            cfg = dataclasses.replace(cfg, out=str(out))
        return cfg

    def snapshot(self) -> Dict[str, Any]:
        """Everything needed to re-run; written into the manifest."""
        return {
            "seed": self.seed,
            "stages": list(self.stages),
            "paths": dataclasses.asdict(self.paths),
            "scan": self.scan.to_dict(),
            "phantom": self.phantom.to_dict() if self.phantom is not None else None,
            "noise": self.noise.to_dict(),
            "extract": dataclasses.asdict(self.extract),
            "train": self.train.to_dict(),
            "mesh": {**self.mesh.grid.to_dict(), "crop_to_scan": self.mesh.crop_to_scan},
            "metrics": dataclasses.asdict(self.metrics),
        }

    def config_hash(self) -> str:
        payload = json.dumps(self.snapshot(), sort_keys=True).encode("utf-8")
        return hashlib.sha256(payload).hexdigest()


def _checked(table: Dict[str, Any], cls, section: str, exclude=()) -> Dict[str, Any]:
    if not isinstance(table, dict):
        raise ConfigError(f"[{section}] must be a table")
    allowed = {f.name for f in dataclasses.fields(cls)} - set(exclude)
    unknown = set(table) - allowed
    if unknown:
        raise ConfigError(f"unknown keys in [{section}]: {sorted(unknown)}")
    return dict(table)


def _build(cls, table, section, exclude=()):
    values = _checked(table, cls, section, exclude)
    try:
        return cls(**values)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"[{section}]: {exc}") from exc


def config_from_dict(data: Dict[str, Any], source: Optional[str] = None) -> PipelineConfig:
    top_level = {"seed", "out", "stages", "paths", "scan", "phantom", "noise", "extract", "train", "mesh", "metrics"}
    unknown = set(data) - top_level
    if unknown:
        raise ConfigError(f"unknown top-level keys: {sorted(unknown)}")

    kwargs: Dict[str, Any] = {"source": source}
    if "seed" in data:
        kwargs["seed"] = int(data["seed"])
    if "out" in data:
        kwargs["out"] = str(data["out"])
    if "stages" in data:
        stages = tuple(data["stages"])
        bad = [s for s in stages if s not in STAGES]
        if bad:
            raise ConfigError(f"unknown stages {bad}; expected a subset of {STAGES}")
        kwargs["stages"] = tuple(s for s in STAGES if s in stages)
    if "paths" in data:
        kwargs["paths"] = _build(PathsConfig, data["paths"], "paths")
    if "scan" in data:
        kwargs["scan"] = _build(ScanConfig, data["scan"], "scan", exclude=("velocity_profile",))
    if "phantom" in data:
        values = _checked(data["phantom"], Phantom, "phantom")
        for i, sten in enumerate(values.get("stenoses", [])):
            _checked(sten, Stenosis, f"phantom.stenoses[{i}]")
        try:
            kwargs["phantom"] = Phantom.from_dict(values)
        except TypeError as exc:
            raise ConfigError(f"[phantom]: {exc}") from exc
    if "noise" in data:
        kwargs["noise"] = _build(NoiseParams, data["noise"], "noise")
    if "extract" in data:
        kwargs["extract"] = _build(ExtractParams, data["extract"], "extract")
    if "train" in data:
        values = _checked(data["train"], TrainConfig, "train")
        try:
            kwargs["train"] = TrainConfig.from_dict(values)
        except TypeError as exc:
            raise ConfigError(f"[train]: {exc}") from exc
    if "mesh" in data:
        values = dict(data["mesh"])
        crop = values.pop("crop_to_scan", True)
        grid = _build(GridSpec, values, "mesh")
        kwargs["mesh"] = MeshOptions(grid, bool(crop))
    if "metrics" in data:
        kwargs["metrics"] = _build(MetricOptions, data["metrics"], "metrics")
    cfg = PipelineConfig(**kwargs)
    if "train" not in data or "seed" not in data.get("train", {}):
        cfg = dataclasses.replace(cfg, train=dataclasses.replace(cfg.train, seed=cfg.seed))
    return cfg


def load_config(path) -> PipelineConfig:
    path = Path(path)
    if not path.is_file():
        raise ConfigError(f"config file {path} not found")
    try:
        with open(path, "rb") as fh:
            data = tomllib.load(fh)
    except tomllib.TOMLDecodeError as exc:
        raise ConfigError(f"{path}: {exc}") from exc
    return config_from_dict(data, str(path))
