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
Domain types of the helical pull-back geometry.

A scan is M frames of N A-lines each; frame i, column j was recorded at
t = (i*N + j) / f_samp while the beam rotated at omega and the catheter moved
along z at v_cath. Lengths are in mm, angles in rad, times in s.
"""

import math
from dataclasses import dataclass, field
from typing import Any, Callable, Dict, List, NamedTuple, Optional

import numpy as np

from airway_recon.exceptions import ConfigError

# Tolerance of the one-frame-per-revolution consistency check.
REVOLUTION_TOLERANCE = 1e-9


@dataclass(frozen=True)
class ScanConfig:
    """Physical parameters binding rectangular frames to 3D space."""

    v_cath: float = 0.5
    omega: float = 2.0 * math.pi
    phi_cath: float = math.pi / 2.0
    f_samp: float = 1024.0
    n_columns: int = 1024
    n_frames: int = 100
    d_max: float = 6.0
    frame_height: int = 1024
    z_start: float = 5.0
    pullback_sign: int = 1
    theta_offset: float = 0.0
    # Optional displacement profile z(t) - z_start (before pullback_sign) that
    # replaces the constant-speed integral. Never serialized.
    velocity_profile: Optional[Callable[[np.ndarray], np.ndarray]] = field(
        default=None, compare=False, repr=False
    )

    @classmethod
    def from_rates(cls, n_columns: int = 1024, omega: float = 2.0 * math.pi, **kwargs):
        """Build a config whose sampling rate gives exactly one revolution per frame."""
        f_samp = n_columns * omega / (2.0 * math.pi)
        return cls(n_columns=n_columns, omega=omega, f_samp=f_samp, **kwargs)

    @property
    def pixel_size(self) -> float:
        """Line-of-sight extent of one frame row, mm."""
        return self.d_max / self.frame_height

    @property
    def duration(self) -> float:
        """Acquisition time of the whole scan, s."""
        return self.n_frames * self.n_columns / self.f_samp

    @property
    def pullback_length(self) -> float:
        """Axial catheter travel over the scan, mm."""
        return self.v_cath * self.duration

    @property
    def z_range(self):
        """(low, high) catheter z covered by the scan."""
        z_end = self.z_start + self.pullback_sign * self.pullback_length
        return min(self.z_start, z_end), max(self.z_start, z_end)

    def diagnostics(self) -> List[str]:
        """Every violated invariant as a readable message; empty when runnable."""
        problems = []
        for name in ("v_cath", "omega", "f_samp", "d_max"):
            value = getattr(self, name)
            if not (math.isfinite(value) and value > 0):
                problems.append(f"scan.{name} must be finite and > 0 (got {value})")
        if self.n_columns < 4:
            problems.append(f"scan.n_columns must be >= 4 (got {self.n_columns})")
        if self.frame_height < 4:
            problems.append(f"scan.frame_height must be >= 4 (got {self.frame_height})")
        if self.n_frames < 1:
            problems.append(f"scan.n_frames must be >= 1 (got {self.n_frames})")
        if not (0.0 < self.phi_cath < math.pi):
            problems.append(
                f"scan.phi_cath must lie in the open interval (0, pi) (got {self.phi_cath})"
            )
        if self.pullback_sign not in (1, -1):
            problems.append(f"scan.pullback_sign must be +1 or -1 (got {self.pullback_sign})")
        if self.omega > 0 and self.f_samp > 0:
            revolutions = self.n_columns * self.omega / (2.0 * math.pi * self.f_samp)
            expected = round(2.0 * math.pi * self.f_samp / self.omega)
            if expected != self.n_columns or abs(revolutions - 1.0) >= REVOLUTION_TOLERANCE:
                problems.append(
                    "scan.n_columns must equal 2*pi*f_samp/omega (one frame per revolution); "
                    f"got N={self.n_columns}, 2*pi*f_samp/omega={2.0 * math.pi * self.f_samp / self.omega:.9g}"
                )
        return problems

    def validate(self) -> "ScanConfig":
        problems = self.diagnostics()
        if problems:
            raise ConfigError("; ".join(problems))
        return self

    def to_dict(self) -> Dict[str, Any]:
        return {
            "v_cath": self.v_cath,
            "omega": self.omega,
            "phi_cath": self.phi_cath,
            "f_samp": self.f_samp,
            "n_columns": self.n_columns,
            "n_frames": self.n_frames,
            "d_max": self.d_max,
            "frame_height": self.frame_height,
            "z_start": self.z_start,
            "pullback_sign": self.pullback_sign,
            "theta_offset": self.theta_offset,
        }

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> "ScanConfig":
        return cls(**data)


@dataclass(frozen=True)
class ALineSample:
    """One A-line: its raster position and the detected wall distance, if any."""

    frame_index: int
    column_index: int
    d_tiss: Optional[float] = None


class CylPoint(NamedTuple):
    r_tiss: float
    theta: float
    z_tiss: float


class Point3(NamedTuple):
    x: float
    y: float
    z: float

    def as_array(self) -> np.ndarray:
        return np.array([self.x, self.y, self.z], dtype=np.float64)


@dataclass
class PolarFrame:
    """Rectangular frame: rows are line-of-sight depth, columns are A-lines (theta)."""

    data: np.ndarray  # (H, N)
    frame_index: int = 0
    metadata: Dict[str, Any] = field(default_factory=dict)

    @property
    def height(self) -> int:
        return int(self.data.shape[0])

    @property
    def width(self) -> int:
        return int(self.data.shape[1])
