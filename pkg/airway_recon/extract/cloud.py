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

"""Raw wall point clouds and their unit-ball normalization."""

from dataclasses import dataclass
from typing import Any, Dict, Sequence, Tuple

import numpy as np
from celery.utils.log import get_task_logger

from airway_recon.exceptions import DomainError
from airway_recon.extract.boundary import ALineBoundary
from airway_recon.geometry.helix import cartesian_arrays, cylindrical_arrays, sample_times
from airway_recon.geometry.types import ScanConfig

logger = get_task_logger(__name__)

NORMALIZATION_MARGIN = 1.05


@dataclass
class PointCloud:
    points: np.ndarray  # (n, 3), mm (or unit space after normalization)
    frames: np.ndarray  # (n,) provenance
    columns: np.ndarray  # (n,) provenance

    @classmethod
    def from_points(cls, points) -> "PointCloud":
        """A cloud without scan provenance (frame and column set to -1)."""
        points = np.asarray(points, dtype=np.float64).reshape(-1, 3)
        minus = np.full(len(points), -1, dtype=np.int64)
        return cls(points, minus, minus.copy())

    def __len__(self) -> int:
        return int(self.points.shape[0])

    @property
    def bounding_box(self) -> Tuple[np.ndarray, np.ndarray]:
        return self.points.min(axis=0), self.points.max(axis=0)


@dataclass(frozen=True)
class UnitTransform:
    """unit = (world - center) / scale; scale is mm per unit."""

    center: Tuple[float, float, float] = (0.0, 0.0, 0.0)
    scale: float = 1.0

    def to_unit(self, points) -> np.ndarray:
        return (np.asarray(points, dtype=np.float64) - np.asarray(self.center)) / self.scale

    def to_world(self, points) -> np.ndarray:
        return np.asarray(points, dtype=np.float64) * self.scale + np.asarray(self.center)

    def to_dict(self) -> Dict[str, Any]:
        return {"center": list(self.center), "scale": self.scale}

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> "UnitTransform":
        return cls(tuple(float(v) for v in data["center"]), float(data["scale"]))


def pointcloud_from_scan(boundaries: Sequence[ALineBoundary], cfg: ScanConfig) -> PointCloud:
    """Map every present (frame, column, d_tiss) through the helix geometry, in (frame, column) order."""
    seen = set()
    for boundary in boundaries:
        if boundary.frame_index in seen:
            raise DomainError(f"duplicate boundary for frame {boundary.frame_index}")
        seen.add(boundary.frame_index)

    points, frames, columns = [], [], []
    for boundary in sorted(boundaries, key=lambda b: b.frame_index):
        if boundary.n_columns != cfg.n_columns:
            raise DomainError(
                f"frame {boundary.frame_index} has {boundary.n_columns} columns, expected {cfg.n_columns}"
            )
        boundary.check_range(cfg.d_max)
        present = np.flatnonzero(boundary.present)
        if present.size == 0:
            continue
        frame_ids = np.full(present.size, boundary.frame_index, dtype=np.int64)
        t = sample_times(frame_ids, present, cfg)
        r, theta, z = cylindrical_arrays(boundary.d_tiss[present], t, cfg)
        points.append(cartesian_arrays(r, theta, z))
        frames.append(frame_ids)
        columns.append(present.astype(np.int64))

    if not points:
        logger.warning("No present A-lines: the point cloud is empty")
        return PointCloud(np.zeros((0, 3)), np.zeros(0, dtype=np.int64), np.zeros(0, dtype=np.int64))

    cloud = PointCloud(np.concatenate(points), np.concatenate(frames), np.concatenate(columns))
    logger.debug(f"Point cloud: {len(cloud)} points from {len(boundaries)} frames")
    return cloud


def normalize_pointcloud(pc: PointCloud) -> Tuple[PointCloud, UnitTransform]:
    """Centre on the bounding-box centre and scale so the cloud sits inside the unit ball."""
    if len(pc) < 2:
        raise DomainError(f"need at least 2 points to normalize, got {len(pc)}")
    low, high = pc.bounding_box
    center = 0.5 * (low + high)
    radius = float(np.linalg.norm(pc.points - center, axis=1).max())
    if not radius > 0.0:
        raise DomainError("degenerate point cloud: all points coincide")
    transform = UnitTransform(tuple(float(c) for c in center), radius * NORMALIZATION_MARGIN)
    unit = PointCloud(transform.to_unit(pc.points), pc.frames.copy(), pc.columns.copy())
    return unit, transform
