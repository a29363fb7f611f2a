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

from pathlib import Path

import numpy as np
import trimesh

from airway_recon.exceptions import DomainError
from airway_recon.surface.marching import TriangleMesh


def write_mesh(path, mesh: TriangleMesh) -> Path:
    """OBJ or binary PLY, chosen by suffix."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    suffix = path.suffix.lower()
    if suffix == ".obj":
        data = trimesh.exchange.obj.export_obj(mesh.to_trimesh(), include_normals=False, include_texture=False)
        path.write_text(data)
    elif suffix == ".ply":
        path.write_bytes(trimesh.exchange.ply.export_ply(mesh.to_trimesh(), encoding="binary"))
    else:
        raise DomainError(f"unsupported mesh format '{suffix}'")
    return path


def read_mesh(path) -> TriangleMesh:
    loaded = trimesh.load(Path(path), process=False, force="mesh")
    return TriangleMesh(np.asarray(loaded.vertices), np.asarray(loaded.faces))
