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

"""Zero-level-set meshing of a signed-distance field by marching cubes."""

from dataclasses import dataclass, field
from typing import List, Optional, Tuple

import numpy as np
import trimesh
from celery.utils.log import get_task_logger
from skimage.measure import marching_cubes

from airway_recon.exceptions import DomainError, EmptyMeshError
from airway_recon.neural.fields import SignedDistanceField

logger = get_task_logger(__name__)

DEGENERATE_AREA = 1e-12
# Grid points per field evaluation call.
EVALUATION_CHUNK = 1 << 16


@dataclass(frozen=True)
class GridSpec:
    resolution: Tuple[int, int, int] = (192, 192, 192)
    lower: Tuple[float, float, float] = (-1.05, -1.05, -1.05)
    upper: Tuple[float, float, float] = (1.05, 1.05, 1.05)

    def __post_init__(self):
        res = self.resolution
        if isinstance(res, (int, np.integer)):
            res = (int(res),) * 3
        object.__setattr__(self, "resolution", tuple(int(r) for r in res))
        for name in ("lower", "upper"):
            value = getattr(self, name)
            if isinstance(value, (int, float)):
                value = (float(value),) * 3
            object.__setattr__(self, name, tuple(float(v) for v in value))

    def diagnostics(self) -> List[str]:
        problems = []
        if len(self.resolution) != 3 or min(self.resolution) < 8:
            problems.append(f"grid.resolution must be >= 8 per axis (got {self.resolution})")
        if len(self.lower) != 3 or len(self.upper) != 3 or any(
            not hi > lo for lo, hi in zip(self.lower, self.upper)
        ):
            problems.append("grid bounds must satisfy lower < upper on every axis")
        return problems

    @property
    def spacing(self) -> np.ndarray:
        return (np.asarray(self.upper) - np.asarray(self.lower)) / (np.asarray(self.resolution) - 1)

    @property
    def cell_diagonal(self) -> float:
        return float(np.linalg.norm(self.spacing))

    def axes(self) -> List[np.ndarray]:
        return [np.linspace(lo, hi, n) for lo, hi, n in zip(self.lower, self.upper, self.resolution)]

    def to_dict(self):
        return {"resolution": list(self.resolution), "lower": list(self.lower), "upper": list(self.upper)}


@dataclass
class TriangleMesh:
    vertices: np.ndarray  # (V, 3), mm
    faces: np.ndarray  # (F, 3) vertex indices
    normals: Optional[np.ndarray] = field(default=None)

    def __post_init__(self):
        self.vertices = np.asarray(self.vertices, dtype=np.float64).reshape(-1, 3)
        self.faces = np.asarray(self.faces, dtype=np.int64).reshape(-1, 3)
        if self.faces.size and (self.faces.min() < 0 or self.faces.max() >= len(self.vertices)):
            raise DomainError("triangle index out of range")
        if not np.isfinite(self.vertices).all():
            raise DomainError("mesh vertices must be finite")

    @property
    def triangles(self) -> np.ndarray:
        """(F, 3, 3) corner coordinates."""
        return self.vertices[self.faces]

    def face_areas(self) -> np.ndarray:
        tri = self.triangles
        return 0.5 * np.linalg.norm(np.cross(tri[:, 1] - tri[:, 0], tri[:, 2] - tri[:, 0]), axis=1)

    def to_trimesh(self) -> trimesh.Trimesh:
        return trimesh.Trimesh(vertices=self.vertices, faces=self.faces, process=False)

    @classmethod
    def from_trimesh(cls, mesh: trimesh.Trimesh) -> "TriangleMesh":
        return cls(np.asarray(mesh.vertices), np.asarray(mesh.faces))

    def without_degenerate(self, min_area: float = DEGENERATE_AREA) -> "TriangleMesh":
        """Drop triangles of area <= min_area and the vertices nothing references any more."""
        keep = self.face_areas() > min_area
        faces = self.faces[keep]
        used, remap = np.unique(faces, return_inverse=True)
        normals = self.normals[used] if self.normals is not None else None
        return TriangleMesh(self.vertices[used], remap.reshape(-1, 3), normals)

    def sample_surface(self, count: int, seed: int = 0) -> np.ndarray:
        """Area-weighted uniform samples of the surface."""
        points, _ = trimesh.sample.sample_surface(self.to_trimesh(), count, seed=seed)
        return np.asarray(points)


def sample_grid(sdf: SignedDistanceField, grid: GridSpec) -> np.ndarray:
    """Field values on the grid, shape `grid.resolution`, in unit space."""
    problems = grid.diagnostics()
    if problems:
        raise DomainError("; ".join(problems))
    ax, ay, az = grid.axes()
    nx, ny, nz = grid.resolution
    values = np.empty(nx * ny * nz)
    plane = np.stack(np.meshgrid(ax, ay, indexing="ij"), axis=-1).reshape(-1, 2)
    slab = max(1, EVALUATION_CHUNK // len(plane))
    for start in range(0, nz, slab):
        zs = az[start : start + slab]
        pts = np.concatenate(
            [np.repeat(plane, len(zs), axis=0), np.tile(zs, len(plane))[:, None]], axis=1
        )
        chunk = sdf.evaluate(pts).reshape(nx * ny, len(zs))
        values.reshape(nx * ny, nz)[:, start : start + len(zs)] = chunk
    return values.reshape(nx, ny, nz)


def grid_lipschitz(values: np.ndarray, grid: GridSpec) -> float:
    """Largest finite-difference gradient norm of sampled field values."""
    grads = np.gradient(values, *grid.spacing)
    return float(np.sqrt(sum(g * g for g in grads)).max())


def extract_mesh(
    sdf: SignedDistanceField,
    grid: GridSpec = GridSpec(),
    z_crop: Optional[Tuple[float, float]] = None,
    values: Optional[np.ndarray] = None,
) -> TriangleMesh:
    """Mesh of {f = 0} in mm; `z_crop` (mm) trims the field's closures beyond the scanned interval."""
    if values is None:
        values = sample_grid(sdf, grid)
    if not (values.min() < 0.0 < values.max()):
        raise EmptyMeshError(
            f"field has no zero crossing in the grid (range [{values.min():.4g}, {values.max():.4g}])"
        )

    verts, faces, _, _ = marching_cubes(values, level=0.0, spacing=tuple(grid.spacing))
    verts = verts + np.asarray(grid.lower)
    mesh = TriangleMesh(sdf.unit_transform.to_world(verts), faces)

    if z_crop is not None:
        z_low, z_high = z_crop
        cropped = mesh.to_trimesh()
        cropped = cropped.slice_plane([0.0, 0.0, z_low], [0.0, 0.0, 1.0])
        cropped = cropped.slice_plane([0.0, 0.0, z_high], [0.0, 0.0, -1.0])
        mesh = TriangleMesh.from_trimesh(cropped)

    mesh = mesh.without_degenerate()
    if len(mesh.faces) == 0:
        raise EmptyMeshError("no triangles left after cropping")
    mesh.normals = np.asarray(mesh.to_trimesh().vertex_normals)
    logger.info(f"Extracted mesh: {len(mesh.vertices)} vertices, {len(mesh.faces)} triangles")
    return mesh
