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

"""Sphere tracing of signed-distance fields along A-line rays."""

import math
from typing import List, Optional, Sequence

import numpy as np
from celery.utils.log import get_task_logger

from airway_recon.exceptions import DomainError
from airway_recon.extract.boundary import SOURCE_RESAMPLED, ALineBoundary
from airway_recon.geometry.helix import aline_poses, ray_directions, sample_times
from airway_recon.geometry.types import ScanConfig
from airway_recon.neural.fields import SignedDistanceField

logger = get_task_logger(__name__)

HIT_EPSILON = 1e-4  # unit space
MAX_MARCH_STEPS = 1000
BISECTION_STEPS = 60


def raycast_batch(
    sdf: SignedDistanceField,
    origins,
    directions,
    d_max: float,
    eps: float = HIT_EPSILON,
) -> np.ndarray:
    """Hit distance (mm) per ray, NaN on a miss. Origins in mm, directions unit length."""
    origins = np.atleast_2d(np.asarray(origins, dtype=np.float64))
    directions = np.atleast_2d(np.asarray(directions, dtype=np.float64))
    if origins.shape != directions.shape:
        raise DomainError(f"origins {origins.shape} and directions {directions.shape} differ")
    if np.any(np.abs(np.linalg.norm(directions, axis=1) - 1.0) > 1e-9):
        raise DomainError("ray directions must have unit length")

    transform = sdf.unit_transform
    o = transform.to_unit(origins)
    limit = d_max / transform.scale
    n = len(o)
    t = np.zeros(n)
    prev_t = np.zeros(n)
    prev_f = np.full(n, np.nan)
    hit = np.full(n, np.nan)
    active = np.ones(n, dtype=bool)
    bracket = np.zeros(n, dtype=bool)

    for _ in range(MAX_MARCH_STEPS):
        idx = np.flatnonzero(active)
        if idx.size == 0:
            break
        f = sdf.evaluate(o[idx] + t[idx, None] * directions[idx])
        done = np.abs(f) < eps
        hit[idx[done]] = t[idx[done]]
        # A sign flip means the last step jumped over the surface.
        flipped = ~done & ~np.isnan(prev_f[idx]) & (np.sign(f) != np.sign(prev_f[idx]))
        bracket[idx[flipped]] = True
        finished = done | flipped
        active[idx[finished]] = False

        moving = idx[~finished]
        prev_t[moving] = t[moving]
        prev_f[moving] = f[~finished]
        t[moving] = t[moving] + np.abs(f[~finished])
        beyond = moving[t[moving] > limit]
        active[beyond] = False

    if active.any():
        logger.debug(f"{int(active.sum())} rays did not converge within {MAX_MARCH_STEPS} steps")

    rays = np.flatnonzero(bracket)
    if rays.size:
        lo, hi = prev_t[rays], t[rays]
        f_lo = prev_f[rays]
        mid = 0.5 * (lo + hi)
        for _ in range(BISECTION_STEPS):
            mid = 0.5 * (lo + hi)
            f_mid = sdf.evaluate(o[rays] + mid[:, None] * directions[rays])
            same = np.sign(f_mid) == np.sign(f_lo)
            lo = np.where(same, mid, lo)
            f_lo = np.where(same, f_mid, f_lo)
            hi = np.where(same, hi, mid)
            if float(np.max(np.abs(f_mid))) < eps:
                break
        hit[rays] = mid

    d = hit * transform.scale
    d[d > d_max] = np.nan
    return d


def raycast_sdf(sdf: SignedDistanceField, origin, direction, d_max: float, eps: float = HIT_EPSILON) -> Optional[float]:
    d = float(raycast_batch(sdf, [origin], [direction], d_max, eps)[0])
    return None if math.isnan(d) else d


def resample_frame(sdf: SignedDistanceField, frame_index: int, cfg: ScanConfig) -> ALineBoundary:
    """Cast every A-line of one frame from the catheter axis with the acquisition geometry."""
    columns = np.arange(cfg.n_columns)
    t = sample_times(np.full(cfg.n_columns, frame_index), columns, cfg)
    theta, z_cath = aline_poses(t, cfg)
    directions = ray_directions(theta, cfg.phi_cath)
    origins = np.stack([np.zeros_like(z_cath), np.zeros_like(z_cath), z_cath], axis=-1)
    d = raycast_batch(sdf, origins, directions, cfg.d_max)
    missing = int(np.isnan(d).sum())
    if missing:
        logger.warning(f"Frame {frame_index}: {missing} resampled A-lines missed the surface")
    return ALineBoundary(int(frame_index), d, SOURCE_RESAMPLED)


def resample_boundaries(
    sdf: SignedDistanceField, cfg: ScanConfig, frame_indices: Optional[Sequence[int]] = None
) -> List[ALineBoundary]:
    frame_indices = range(cfg.n_frames) if frame_indices is None else frame_indices
    return [resample_frame(sdf, int(i), cfg) for i in frame_indices]
