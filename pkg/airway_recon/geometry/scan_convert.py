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

"""Rectangular (theta x depth) frames to Cartesian cross-section images."""

import math

import numpy as np
from scipy.ndimage import map_coordinates

from airway_recon.geometry.types import PolarFrame


def rectangular_to_cartesian_image(frame: PolarFrame, out_size: int = 0) -> np.ndarray:
    """
    Resample a rectangular frame onto a square image centred on the catheter.

    The image spans +-H rows of depth in both directions; pixel (row, col)
    sits at x = col - c, y = c - row, so theta = atan2(x, y) follows the
    scan's x = r*sin(theta), y = r*cos(theta) convention. Bilinear, with the
    angular axis wrapped and zeros outside the imaged disc.
    """
    data = np.asarray(frame.data, dtype=np.float64)
    height, width = data.shape
    size = out_size or 2 * height
    scale = 2.0 * height / size  # depth rows per output pixel
    c = size / 2.0 - 0.5

    rows, cols = np.mgrid[0:size, 0:size].astype(np.float64)
    x = (cols - c) * scale
    y = (c - rows) * scale
    radius = np.hypot(x, y)
    theta = np.mod(np.arctan2(x, y), 2.0 * math.pi)

    # duplicate column 0 at the end so interpolation wraps across theta = 2*pi
    wrapped = np.concatenate([data, data[:, :1]], axis=1)
    depth_index = radius - 0.5
    column_index = theta / (2.0 * math.pi) * width
    image = map_coordinates(
        wrapped, [depth_index, column_index], order=1, mode="nearest"
    )
    image[radius > height] = 0.0
    return image
