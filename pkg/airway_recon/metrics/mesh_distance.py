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

"""Exact point-to-triangle-mesh distances with KD-tree pruning over triangle centroids."""

from dataclasses import dataclass, field
from typing import Dict

import numpy as np
from scipy.spatial import cKDTree

from airway_recon.exceptions import DomainError
from airway_recon.neural.sampling import kdtree_workers
from airway_recon.surface.marching import TriangleMesh

PERCENTILES = (50, 90, 95, 99)
POINT_CHUNK = 4096


def closest_points_on_triangles(points: np.ndarray, triangles: np.ndarray) -> np.ndarray:
    """Closest point on triangle k to point k, by Voronoi-region classification."""
    a, b, c = triangles[:, 0], triangles[:, 1], triangles[:, 2]
    ab, ac = b - a, c - a
    ap, bp, cp = points - a, points - b, points - c

    def dot(u, v):
        return np.einsum("ij,ij->i", u, v)

    d1, d2 = dot(ab, ap), dot(ac, ap)
    d3, d4 = dot(ab, bp), dot(ac, bp)
    d5, d6 = dot(ab, cp), dot(ac, cp)
    vc = d1 * d4 - d3 * d2
    vb = d5 * d2 - d1 * d6
    va = d3 * d6 - d5 * d4

    with np.errstate(divide="ignore", invalid="ignore"):
        on_ab = a + (d1 / (d1 - d3))[:, None] * ab
        on_ac = a + (d2 / (d2 - d6))[:, None] * ac
        on_bc = b + ((d4 - d3) / ((d4 - d3) + (d5 - d6)))[:, None] * (c - b)
        denom = 1.0 / (va + vb + vc)
        inside = a + (vb * denom)[:, None] * ab + (vc * denom)[:, None] * ac

    conditions = [
        (d1 <= 0) & (d2 <= 0),
        (d3 >= 0) & (d4 <= d3),
        (vc <= 0) & (d1 >= 0) & (d3 <= 0),
        (d6 >= 0) & (d5 <= d6),
        (vb <= 0) & (d2 >= 0) & (d6 <= 0),
        (va <= 0) & ((d4 - d3) >= 0) & ((d5 - d6) >= 0),
    ]
    choices = [a, b, on_ab, c, on_ac, on_bc]
    return np.select([cond[:, None] for cond in conditions], choices, default=inside)


def point_triangle_distances(points: np.ndarray, triangles: np.ndarray) -> np.ndarray:
    return np.linalg.norm(points - closest_points_on_triangles(points, triangles), axis=1)


@dataclass
class PointToMeshResult:
    mean: float
    max: float
    percentiles: Dict[int, float]
    distances: np.ndarray = field(repr=False)


def point_distances_to_mesh(points, mesh: TriangleMesh) -> np.ndarray:
    points = np.atleast_2d(np.asarray(points, dtype=np.float64))
    if len(points) == 0 or len(mesh.faces) == 0:
        raise DomainError("point-to-mesh distance needs points and triangles")
    triangles = mesh.triangles
    centroids = triangles.mean(axis=1)
    radii = np.linalg.norm(triangles - centroids[:, None, :], axis=2).max(axis=1)
    max_radius = float(radii.max())
    tree = cKDTree(centroids)
    workers = kdtree_workers()

    result = np.empty(len(points))
    for start in range(0, len(points), POINT_CHUNK):
        chunk = points[start : start + POINT_CHUNK]
        _, nearest = tree.query(chunk, k=1, workers=workers)
        bound = point_triangle_distances(chunk, triangles[nearest])
        # Any triangle closer than `bound` has its centroid within bound + its radius.
        reach = bound + max_radius + 1e-9 * (1.0 + bound + max_radius)
        candidates = tree.query_ball_point(chunk, reach, workers=workers)
        counts = np.array([len(c) for c in candidates])
        owner = np.repeat(np.arange(len(chunk)), counts)
        tri_idx = np.concatenate([np.asarray(c, dtype=np.int64) for c in candidates])
        dist = point_triangle_distances(chunk[owner], triangles[tri_idx])
        offsets = np.concatenate([[0], np.cumsum(counts)[:-1]])
        result[start : start + len(chunk)] = np.minimum.reduceat(dist, offsets)
    return result


def point_to_mesh(points, mesh: TriangleMesh) -> PointToMeshResult:
    distances = point_distances_to_mesh(points, mesh)
    return PointToMeshResult(
        mean=float(distances.mean()),
        max=float(distances.max()),
        percentiles={p: float(np.percentile(distances, p)) for p in PERCENTILES},
        distances=distances,
    )
