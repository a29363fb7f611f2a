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

import math

import numpy as np

from airway_recon.geometry.types import ScanConfig


def small_scan(n_columns: int = 64, n_frames: int = 4, frame_height: int = 64, **kwargs) -> ScanConfig:
    """A scan small enough for unit tests, with one frame per revolution."""
    return ScanConfig.from_rates(
        n_columns=n_columns, omega=2.0 * math.pi, n_frames=n_frames, frame_height=frame_height, **kwargs
    )


def brute_nearest(src: np.ndarray, dst: np.ndarray) -> np.ndarray:
    return np.linalg.norm(src[:, None, :] - dst[None, :, :], axis=2).min(axis=1)


def unit_sphere_points(n: int, seed: int = 0) -> np.ndarray:
    rng = np.random.default_rng(seed)
    v = rng.normal(size=(n, 3))
    return v / np.linalg.norm(v, axis=1, keepdims=True)
