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
Coordinate machinery of the helical pull-back.

The beam angle is theta(t) = omega*t (+ theta_offset), the catheter sits at
z_cath(t) = z_start + sign*v_cath*t, and a wall hit at line-of-sight distance d
lies at r = d*sin(phi), z = z_cath - d*cos(phi). Cartesian coordinates use
x = r*sin(theta), y = r*cos(theta): the transpose of the usual convention,
kept so that frames map onto the same axes the acquisition geometry uses.

Array versions do the work; the scalar operations wrap them.
"""

import math
from typing import Tuple

import numpy as np

from airway_recon.exceptions import DomainError, NoWallError
from airway_recon.geometry.types import ALineSample, CylPoint, Point3, ScanConfig

TWO_PI = 2.0 * math.pi


def sample_times(frames, columns, cfg: ScanConfig) -> np.ndarray:
    """Acquisition times of A-lines in raster order: (i*N + j) / f_samp."""
    frames = np.asarray(frames, dtype=np.int64)
    columns = np.asarray(columns, dtype=np.int64)
    if np.any(frames < 0) or np.any(frames >= cfg.n_frames):
        raise DomainError(f"frame index out of range [0, {cfg.n_frames})")
    if np.any(columns < 0) or np.any(columns >= cfg.n_columns):
        raise DomainError(f"column index out of range [0, {cfg.n_columns})")
    return (frames * cfg.n_columns + columns) / cfg.f_samp


def catheter_z(t, cfg: ScanConfig) -> np.ndarray:
    t = np.asarray(t, dtype=np.float64)
    if cfg.velocity_profile is not None:
        travel = np.asarray(cfg.velocity_profile(t), dtype=np.float64)
    else:
        travel = cfg.v_cath * t
    return cfg.z_start + cfg.pullback_sign * travel


def aline_poses(t, cfg: ScanConfig) -> Tuple[np.ndarray, np.ndarray]:
    """Beam angle in [0, 2*pi) and catheter z for each time."""
    t = np.asarray(t, dtype=np.float64)
    if np.any(t < 0):
        raise DomainError("sample time must be >= 0")
    theta = np.mod(cfg.omega * t + cfg.theta_offset, TWO_PI)
    return theta, catheter_z(t, cfg)


def ray_directions(theta, phi_cath: float) -> np.ndarray:
    """Unit beam directions (N, 3) consistent with r = d*sin(phi), dz = -d*cos(phi)."""
    theta = np.asarray(theta, dtype=np.float64)
    sin_phi = math.sin(phi_cath)
    return np.stack(
        [
            sin_phi * np.sin(theta),
            sin_phi * np.cos(theta),
            np.full_like(theta, -math.cos(phi_cath)),
        ],
        axis=-1,
    )


def cylindrical_arrays(d_tiss, t, cfg: ScanConfig):
    """(r, theta, z) arrays of wall hits at line-of-sight distances d_tiss."""
    d_tiss = np.asarray(d_tiss, dtype=np.float64)
    theta, z_cath = aline_poses(t, cfg)
    r = d_tiss * math.sin(cfg.phi_cath)
    z = z_cath - d_tiss * math.cos(cfg.phi_cath)
    return r, theta, z


def cartesian_arrays(r, theta, z) -> np.ndarray:
    r = np.asarray(r, dtype=np.float64)
    theta = np.asarray(theta, dtype=np.float64)
    return np.stack([r * np.sin(theta), r * np.cos(theta), np.asarray(z, dtype=np.float64)], axis=-1)


def cylindrical_from_cartesian(points) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
    points = np.asarray(points, dtype=np.float64)
    x, y, z = points[..., 0], points[..., 1], points[..., 2]
    return np.hypot(x, y), np.mod(np.arctan2(x, y), TWO_PI), z


def sample_time(sample: ALineSample, cfg: ScanConfig) -> float:
    return float(sample_times(sample.frame_index, sample.column_index, cfg))


def aline_pose(t: float, cfg: ScanConfig) -> Tuple[float, float]:
    theta, z_cath = aline_poses(t, cfg)
    return float(theta), float(z_cath)


def to_cylindrical(sample: ALineSample, cfg: ScanConfig) -> CylPoint:
    if sample.d_tiss is None or math.isnan(sample.d_tiss):
        raise NoWallError(
            f"frame {sample.frame_index} column {sample.column_index} has no wall"
        )
    if not (0.0 <= sample.d_tiss <= cfg.d_max):
        raise DomainError(f"d_tiss {sample.d_tiss} outside [0, {cfg.d_max}]")
    t = sample_time(sample, cfg)
    r, theta, z = cylindrical_arrays(sample.d_tiss, t, cfg)
    return CylPoint(float(r), float(theta), float(z))


def _require_finite(values, what: str) -> None:
    if not all(math.isfinite(v) for v in values):
        raise DomainError(f"{what} has a non-finite component: {tuple(values)}")


def to_cartesian(cyl: CylPoint) -> Point3:
    _require_finite(cyl, "cylindrical point")
    if cyl.r_tiss < 0.0:
        raise DomainError(f"r_tiss must be >= 0 (got {cyl.r_tiss})")
    x, y, z = cartesian_arrays(cyl.r_tiss, cyl.theta, cyl.z_tiss)
    return Point3(float(x), float(y), float(z))


def from_cartesian(point: Point3) -> CylPoint:
    _require_finite(point, "point")
    r, theta, z = cylindrical_from_cartesian(np.asarray(point, dtype=np.float64))
    return CylPoint(float(r), float(theta), float(z))
