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

"""Signed-distance fields the mesher and ray caster can consume."""

from typing import Callable, Protocol, Tuple

import numpy as np

from airway_recon.extract.cloud import UnitTransform
from airway_recon.phantom.shape import Phantom, sdf_arrays

FINITE_DIFFERENCE_STEP = 1e-6


class SignedDistanceField(Protocol):
    """Values are in unit space: negative inside, positive outside."""

    unit_transform: UnitTransform

    def evaluate(self, points) -> np.ndarray:
        ...

    def evaluate_with_gradient(self, points) -> Tuple[np.ndarray, np.ndarray]:
        ...


class AnalyticField:
    """Wraps a world-space (mm) signed-distance function as a unit-space field."""

    def __init__(self, world_sdf: Callable[[np.ndarray], np.ndarray], unit_transform: UnitTransform = UnitTransform()):
        self.world_sdf = world_sdf
        self.unit_transform = unit_transform

    def evaluate(self, points) -> np.ndarray:
        points = np.atleast_2d(np.asarray(points, dtype=np.float64))
        world = self.unit_transform.to_world(points)
        return np.asarray(self.world_sdf(world), dtype=np.float64) / self.unit_transform.scale

    def evaluate_with_gradient(self, points) -> Tuple[np.ndarray, np.ndarray]:
        points = np.atleast_2d(np.asarray(points, dtype=np.float64))
        values = self.evaluate(points)
        grads = np.empty_like(points)
        h = FINITE_DIFFERENCE_STEP
        for axis in range(3):
            step = np.zeros(3)
            step[axis] = h
            grads[:, axis] = (self.evaluate(points + step) - self.evaluate(points - step)) / (2 * h)
        return values, grads


def sphere_field(radius: float, center=(0.0, 0.0, 0.0), unit_transform: UnitTransform = UnitTransform()):
    center = np.asarray(center, dtype=np.float64)
    return AnalyticField(lambda p: np.linalg.norm(p - center, axis=1) - radius, unit_transform)


def tube_field(radius: float, unit_transform: UnitTransform = UnitTransform()):
    """Infinite straight tube along z; negative inside the lumen."""
    return AnalyticField(lambda p: np.hypot(p[:, 0], p[:, 1]) - radius, unit_transform)


def phantom_field(phantom: Phantom, unit_transform: UnitTransform = UnitTransform()) -> AnalyticField:
    """Exact phantom SDF over catheter-frame points."""
    return AnalyticField(lambda p: sdf_arrays(phantom, phantom.from_catheter_frame(p)), unit_transform)
