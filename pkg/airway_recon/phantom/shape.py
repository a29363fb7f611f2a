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
Analytic airway phantoms.

A phantom is a tube around the z-axis of its own (lumen-centred) frame with
wall radius rho(z, theta) = base_radius * A(z) * e(theta), where A carries
Gaussian stenoses and e is an elliptic modulation. The catheter runs parallel
to the axis at `centerline_offset`; catheter-frame points are mapped into the
phantom frame by adding that offset.

Sign convention: negative inside the lumen (air column), positive in tissue.
"""

import math
from dataclasses import dataclass, field
from typing import Any, Dict, List, Tuple

import numpy as np

from airway_recon.exceptions import DomainError
from airway_recon.geometry.helix import TWO_PI

# Newton iterations of the foot-point projection.
_PROJECTION_ITERATIONS = 60
_PROJECTION_TOLERANCE = 1e-14


@dataclass(frozen=True)
class Stenosis:
    z0: float
    depth: float  # fractional radius reduction in [0, 1)
    width: float  # Gaussian sigma, mm

    def to_dict(self) -> Dict[str, float]:
        return {"z0": self.z0, "depth": self.depth, "width": self.width}


@dataclass(frozen=True)
class Phantom:
    base_radius: float = 3.0
    length: float = 60.0
    stenoses: Tuple[Stenosis, ...] = ()
    ellipticity: float = 1.0  # b/a in (0, 1]
    ellipse_angle: float = 0.0  # orientation of the major axis, rad
    centerline_offset: Tuple[float, float] = (0.0, 0.0)
    end_caps: bool = False

    @property
    def is_straight_circular(self) -> bool:
        return not self.stenoses and self.ellipticity == 1.0

    @property
    def offset(self) -> np.ndarray:
        return np.array([self.centerline_offset[0], self.centerline_offset[1], 0.0])

    def from_catheter_frame(self, points) -> np.ndarray:
        return np.asarray(points, dtype=np.float64) + self.offset

    def to_catheter_frame(self, points) -> np.ndarray:
        return np.asarray(points, dtype=np.float64) - self.offset

    # Profile pieces with first and second derivatives.

    def axial_profile(self, z) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
        z = np.asarray(z, dtype=np.float64)
        a = np.ones_like(z)
        da = np.zeros_like(z)
        dda = np.zeros_like(z)
        for sten in self.stenoses:
            u = z - sten.z0
            w2 = sten.width * sten.width
            g = sten.depth * np.exp(-(u * u) / (2.0 * w2))
            a = a - g
            da = da + g * u / w2
            dda = dda + g * (1.0 / w2 - (u * u) / (w2 * w2))
        return a, da, dda

    def elliptic_profile(self, theta) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
        psi = np.asarray(theta, dtype=np.float64) - self.ellipse_angle
        eps = self.ellipticity
        if eps == 1.0:
            ones = np.ones_like(psi)
            return ones, np.zeros_like(psi), np.zeros_like(psi)
        k = 1.0 - eps * eps
        q = eps * eps + k * np.sin(psi) ** 2
        dq = k * np.sin(2.0 * psi)
        ddq = 2.0 * k * np.cos(2.0 * psi)
        e = eps * q ** -0.5
        de = -0.5 * eps * q ** -1.5 * dq
        dde = 0.75 * eps * q ** -2.5 * dq * dq - 0.5 * eps * q ** -1.5 * ddq
        return e, de, dde

    def radius_arrays(self, z, theta) -> np.ndarray:
        a, _, _ = self.axial_profile(z)
        e, _, _ = self.elliptic_profile(theta)
        return self.base_radius * a * e

    def min_radius(self) -> float:
        """Smallest wall radius over the phantom (dense axial scan plus stenosis centres)."""
        zs = np.concatenate(
            [np.linspace(0.0, self.length, 4097), [s.z0 for s in self.stenoses]]
        )
        zs = zs[(zs >= 0.0) & (zs <= self.length)]
        a, _, _ = self.axial_profile(zs)
        return float(self.base_radius * a.min() * min(self.ellipticity, 1.0))

    def diagnostics(self) -> List[str]:
        problems = []
        if not self.base_radius > 0:
            problems.append(f"phantom.base_radius must be > 0 (got {self.base_radius})")
        if not self.length > 0:
            problems.append(f"phantom.length must be > 0 (got {self.length})")
        if not (0.0 < self.ellipticity <= 1.0):
            problems.append(f"phantom.ellipticity must lie in (0, 1] (got {self.ellipticity})")
        for i, sten in enumerate(self.stenoses):
            if not (0.0 <= sten.depth < 1.0):
                problems.append(f"phantom.stenoses[{i}].depth must lie in [0, 1) (got {sten.depth})")
            if not sten.width > 0:
                problems.append(f"phantom.stenoses[{i}].width must be > 0 (got {sten.width})")
        if problems:
            return problems
        min_rho = self.min_radius()
        if not min_rho > 0:
            problems.append("phantom wall radius must stay > 0 (combined stenosis depth too large)")
        elif math.hypot(*self.centerline_offset) >= min_rho:
            problems.append(
                f"phantom.centerline_offset {self.centerline_offset} leaves the lumen "
                f"(minimum wall radius {min_rho:.4f} mm)"
            )
        return problems

    def to_dict(self) -> Dict[str, Any]:
        return {
            "base_radius": self.base_radius,
            "length": self.length,
            "stenoses": [s.to_dict() for s in self.stenoses],
            "ellipticity": self.ellipticity,
            "ellipse_angle": self.ellipse_angle,
            "centerline_offset": list(self.centerline_offset),
            "end_caps": self.end_caps,
        }

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> "Phantom":
        data = dict(data)
        data["stenoses"] = tuple(Stenosis(**s) for s in data.get("stenoses", ()))
        if "centerline_offset" in data:
            data["centerline_offset"] = tuple(float(v) for v in data["centerline_offset"])
        return cls(**data)


def phantom_radius(ph: Phantom, z: float, theta: float) -> float:
    if not (0.0 <= z <= ph.length):
        raise DomainError(f"z={z} outside phantom [0, {ph.length}]")
    return float(ph.radius_arrays(z, theta))


def _project_to_wall(ph: Phantom, points: np.ndarray):
    """Foot points (theta, z) of `points` on the lateral wall by damped Newton."""
    px, py, pz = points[:, 0], points[:, 1], points[:, 2]
    theta = np.mod(np.arctan2(px, py), TWO_PI)
    z = np.clip(pz, 0.0, ph.length)
    b = ph.base_radius

    for _ in range(_PROJECTION_ITERATIONS):
        a, da, dda = ph.axial_profile(z)
        e, de, dde = ph.elliptic_profile(theta)
        rho, rho_t, rho_z = b * a * e, b * a * de, b * da * e
        rho_tt, rho_tz, rho_zz = b * a * dde, b * da * de, b * dda * e
        s, c = np.sin(theta), np.cos(theta)

        rx, ry, rz = rho * s - px, rho * c - py, z - pz
        st = (rho_t * s + rho * c, rho_t * c - rho * s)
        sz = (rho_z * s, rho_z * c)
        stt = (rho_tt * s + 2.0 * rho_t * c - rho * s, rho_tt * c - 2.0 * rho_t * s - rho * c)
        stz = (rho_tz * s + rho_z * c, rho_tz * c - rho_z * s)
        szz = (rho_zz * s, rho_zz * c)

        g_t = st[0] * rx + st[1] * ry
        g_z = sz[0] * rx + sz[1] * ry + rz
        j_tt = st[0] ** 2 + st[1] ** 2
        j_tz = st[0] * sz[0] + st[1] * sz[1]
        j_zz = sz[0] ** 2 + sz[1] ** 2 + 1.0
        h_tt = j_tt + stt[0] * rx + stt[1] * ry
        h_tz = j_tz + stz[0] * rx + stz[1] * ry
        h_zz = j_zz + szz[0] * rx + szz[1] * ry

        # Gauss-Newton matrix where the Newton Hessian is not positive definite
        det = h_tt * h_zz - h_tz * h_tz
        indefinite = (det <= 0.0) | (h_tt <= 0.0)
        h_tt = np.where(indefinite, j_tt, h_tt)
        h_tz = np.where(indefinite, j_tz, h_tz)
        h_zz = np.where(indefinite, j_zz, h_zz)
        det = h_tt * h_zz - h_tz * h_tz

        step_t = -(h_zz * g_t - h_tz * g_z) / det
        step_z = -(h_tt * g_z - h_tz * g_t) / det
        step_t = np.clip(step_t, -0.5, 0.5)
        step_z = np.clip(step_z, -b, b)

        theta = np.mod(theta + step_t, TWO_PI)
        z_next = np.clip(z + step_z, 0.0, ph.length)
        moved = np.maximum(np.abs(step_t) * b, np.abs(z_next - z))
        z = z_next
        if float(moved.max(initial=0.0)) < _PROJECTION_TOLERANCE * max(b, 1.0):
            break

    rho = ph.radius_arrays(z, theta)
    foot = np.stack([rho * np.sin(theta), rho * np.cos(theta), z], axis=-1)
    return foot


def sdf_arrays(ph: Phantom, points) -> np.ndarray:
    """Signed distance of phantom-frame points to the wall (negative in the lumen)."""
    points = np.atleast_2d(np.asarray(points, dtype=np.float64))
    r = np.hypot(points[:, 0], points[:, 1])
    z_clamped = np.clip(points[:, 2], 0.0, ph.length)
    dz = points[:, 2] - z_clamped

    if ph.is_straight_circular:
        radial = r - ph.base_radius
        distance = np.hypot(radial, dz)
        lateral = np.where(radial < 0.0, -distance, distance)
    else:
        theta = np.mod(np.arctan2(points[:, 0], points[:, 1]), TWO_PI)
        inside = r < ph.radius_arrays(z_clamped, theta)
        foot = _project_to_wall(ph, points)
        distance = np.linalg.norm(points - foot, axis=1)
        lateral = np.where(inside, -distance, distance)

    if ph.end_caps:
        return np.maximum(lateral, np.maximum(-points[:, 2], points[:, 2] - ph.length))
    return lateral


def phantom_sdf(ph: Phantom, p) -> float:
    return float(sdf_arrays(ph, np.asarray(p, dtype=np.float64).reshape(1, 3))[0])


def sample_phantom_surface(ph: Phantom, z_range, n: int, seed: int = 0) -> np.ndarray:
    """Uniform (theta, z) samples of the wall, returned in the catheter frame."""
    rng = np.random.default_rng(seed)
    z_low, z_high = max(z_range[0], 0.0), min(z_range[1], ph.length)
    z = rng.uniform(z_low, z_high, size=n)
    theta = rng.uniform(0.0, TWO_PI, size=n)
    rho = ph.radius_arrays(z, theta)
    wall = np.stack([rho * np.sin(theta), rho * np.cos(theta), z], axis=-1)
    return ph.to_catheter_frame(wall)
