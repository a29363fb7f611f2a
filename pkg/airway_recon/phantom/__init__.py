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

from .shape import (
    Phantom,
    Stenosis,
    phantom_radius,
    phantom_sdf,
    sample_phantom_surface,
    sdf_arrays,
)
from .scanner import (
    GroundTruthScan,
    NoiseParams,
    cast_aline,
    cast_alines,
    coverage_diagnostics,
    render_frame,
    simulate_frames,
    simulate_scan,
)

__all__ = [
    "Phantom",
    "Stenosis",
    "phantom_radius",
    "phantom_sdf",
    "sample_phantom_surface",
    "sdf_arrays",
    "GroundTruthScan",
    "NoiseParams",
    "cast_aline",
    "cast_alines",
    "coverage_diagnostics",
    "render_frame",
    "simulate_frames",
    "simulate_scan",
]
