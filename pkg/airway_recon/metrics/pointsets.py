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
Point-set distances.

Conventions: Chamfer is the symmetric sum of mean squared nearest-neighbour
distances; Hausdorff is unsquared; EMD is the mean matched Euclidean distance
of an exact one-to-one assignment between equal-size seeded subsamples.
"""

import numpy as np
from scipy.optimize import linear_sum_assignment
from scipy.spatial import cKDTree
from scipy.spatial.distance import cdist

from airway_recon.exceptions import DomainError
from airway_recon.neural.sampling import kdtree_workers

EMD_CAP = 256


def _as_points(points, name: str) -> np.ndarray:
    arr = np.asarray(points, dtype=np.float64)
    arr = arr.reshape(len(arr), -1) if arr.ndim == 1 else arr
    if arr.ndim != 2 or len(arr) == 0:
        raise DomainError(f"point set '{name}' must be a nonempty (n, k) array")
    return arr


def nearest_distances(src: np.ndarray, dst: np.ndarray) -> np.ndarray:
    """Distance from every src point to its nearest dst point."""
    _, idx = cKDTree(dst).query(src, k=1, workers=kdtree_workers())
    return np.linalg.norm(src - dst[idx], axis=1)


def chamfer(a, b) -> float:
    a, b = _as_points(a, "a"), _as_points(b, "b")
    d_ab = nearest_distances(a, b)
    d_ba = nearest_distances(b, a)
    return float(np.mean(d_ab**2) + np.mean(d_ba**2))


def hausdorff(a, b) -> float:
    a, b = _as_points(a, "a"), _as_points(b, "b")
    return float(max(nearest_distances(a, b).max(), nearest_distances(b, a).max()))


def subsample(points: np.ndarray, n: int, seed: int = 0) -> np.ndarray:
    """n rows drawn uniformly without replacement, seeded by (seed, len(points))."""
    if len(points) <= n:
        return points
    rng = np.random.default_rng([seed, len(points)])
    return points[np.sort(rng.choice(len(points), n, replace=False))]


def equalize(a: np.ndarray, b: np.ndarray, cap: int = EMD_CAP, seed: int = 0):
    """Uniform subsamples without replacement to min(|a|, |b|, cap) points each.

    Each set's draw depends only on its own size, so the pair is the same
    whichever argument comes first and under any rigid motion of the points.
    """
    n = min(len(a), len(b), cap)
    return subsample(a, n, seed), subsample(b, n, seed)


def emd(a, b, cap: int = EMD_CAP, seed: int = 0) -> float:
    a, b = _as_points(a, "a"), _as_points(b, "b")
    a, b = equalize(a, b, cap, seed)
    cost = cdist(a, b)
    rows, cols = linear_sum_assignment(cost)
    return float(cost[rows, cols].mean())
