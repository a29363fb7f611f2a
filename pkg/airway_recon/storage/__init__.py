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

from .cloud_utils import read_ply, read_xyz, write_ply, write_xyz
from .csv_utils import (
    BOUNDARY_COLUMNS,
    boundaries_from_frame,
    boundaries_to_frame,
    read_boundaries,
    read_csv,
    write_boundaries,
    write_csv,
)
from .image_utils import frame_path, indexed_files, read_image, read_mask, read_masks, write_image, write_mask
from .ground_truth import GROUND_TRUTH_FORMAT_VERSION, write_frame_images, write_ground_truth, write_scan_metadata
from .mesh_utils import read_mesh, write_mesh

__all__ = [
    "read_ply",
    "read_xyz",
    "write_ply",
    "write_xyz",
    "BOUNDARY_COLUMNS",
    "boundaries_from_frame",
    "boundaries_to_frame",
    "read_boundaries",
    "read_csv",
    "write_boundaries",
    "write_csv",
    "GROUND_TRUTH_FORMAT_VERSION",
    "write_frame_images",
    "write_ground_truth",
    "write_scan_metadata",
    "frame_path",
    "indexed_files",
    "read_image",
    "read_mask",
    "read_masks",
    "write_image",
    "write_mask",
    "read_mesh",
    "write_mesh",
]
