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

"""Metric report assembly and its JSON / CSV forms."""

import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Dict, Optional

import pandas as pd
from celery.utils.log import get_task_logger

from airway_recon.exceptions import DomainError
from airway_recon.extract.cloud import PointCloud, UnitTransform
from airway_recon.metrics.aline import ALineErrors
from airway_recon.metrics.mesh_distance import PointToMeshResult
from airway_recon.metrics.pointsets import EMD_CAP, chamfer, emd, hausdorff
from airway_recon.surface.marching import TriangleMesh

logger = get_task_logger(__name__)

REPORT_SCHEMA_VERSION = 1
CONVENTIONS = {
    "chamfer": "symmetric sum of mean squared nearest-neighbour distances",
    "hausdorff": "symmetric, unsquared",
    "emd": f"mean matched distance of an exact assignment on seeded subsamples of at most {EMD_CAP} points",
    "mu_dist": "mean over frames of the mean |d_gt - d_pred| over jointly present columns",
    "max_dist": "mean over frames of the max |d_gt - d_pred| over jointly present columns",
    "dice": "2|A n B| / (|A| + |B|), 1.0 when both masks are empty",
    "units": "*_mm values in mm (mm^2 for chamfer), *_unit values in the unit-ball frame",
}


@dataclass
class MetricsReport:
    values: Dict[str, float] = field(default_factory=dict)
    per_frame: Optional[pd.DataFrame] = None
    provenance: Dict[str, Any] = field(default_factory=dict)

    def add(self, name: str, value: float) -> None:
        value = float(value)
        if not math.isfinite(value) or value < 0.0:
            raise DomainError(f"metric {name}={value} must be finite and >= 0")
        if name.startswith("dice") and value > 1.0:
            raise DomainError(f"{name}={value} outside [0, 1]")
        self.values[name] = value

    def add_aline_errors(self, errors: ALineErrors, prefix: str = "") -> None:
        self.add(f"{prefix}mu_dist_mm", errors.mu_dist)
        self.add(f"{prefix}mu_dist_mm_std", errors.mu_dist_std)
        self.add(f"{prefix}max_dist_mm", errors.max_dist)
        self.add(f"{prefix}max_dist_mm_std", errors.max_dist_std)
        self.add(f"{prefix}max_dist_mm_overall", errors.worst)
        self.add(f"{prefix}coverage_deficit", errors.coverage_deficit)

    def add_point_to_mesh(self, result: PointToMeshResult) -> None:
        self.add("point_to_mesh_mean_mm", result.mean)
        self.add("point_to_mesh_max_mm", result.max)
        for p, value in result.percentiles.items():
            self.add(f"point_to_mesh_p{p}_mm", value)

    def add_frame_table(self, frames: pd.DataFrame) -> None:
        """Aggregate per-frame segmentation metrics as mean and std, skipping undefined frames."""
        for column in ("cd_mm2", "hd_mm", "emd_mm", "dice"):
            values = frames[column].dropna()
            if values.empty:
                continue
            self.add(f"frame_{column}", values.mean())
            self.add(f"frame_{column}_std", values.std(ddof=0))

    def to_dict(self) -> Dict[str, Any]:
        return {
            "schema_version": REPORT_SCHEMA_VERSION,
            "conventions": CONVENTIONS,
            "metrics": dict(sorted(self.values.items())),
            "provenance": self.provenance,
        }

    def write_json(self, path) -> Path:
        path = Path(path)
        path.write_text(json.dumps(self.to_dict(), indent=2, sort_keys=True) + "\n")
        return path

    def write_csv(self, path) -> Path:
        path = Path(path)
        frame = self.per_frame if self.per_frame is not None else pd.DataFrame()
        with open(path, "w", newline="") as fh:
            fh.write(f"# schema_version={REPORT_SCHEMA_VERSION}\n")
            frame.to_csv(fh, index=False, float_format="%.10g")
        return path


def reconstruction_metrics(
    report: MetricsReport,
    cloud: PointCloud,
    mesh: TriangleMesh,
    transform: UnitTransform,
    samples: int = 10000,
    emd_cap: int = EMD_CAP,
    seed: int = 0,
) -> None:
    """Raw cloud against mesh surface samples, in mm and in the unit frame."""
    if len(cloud) == 0:
        raise DomainError("reconstruction metrics need a nonempty cloud")
    surface = mesh.sample_surface(samples, seed)
    raw = cloud.points
    for suffix, a, b in (
        ("mm", raw, surface),
        ("unit", transform.to_unit(raw), transform.to_unit(surface)),
    ):
        report.add(f"cd_{suffix}", chamfer(a, b))
        report.add(f"hd_{suffix}", hausdorff(a, b))
        report.add(f"emd_{suffix}", emd(a, b, emd_cap, seed))
    logger.info(f"Reconstruction metrics against {samples} mesh samples: cd {report.values['cd_mm']:.4g} mm^2")
