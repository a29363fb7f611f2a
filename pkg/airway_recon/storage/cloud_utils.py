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

"""Point cloud files: ASCII PLY with frame/column provenance, and plain XYZ."""

from pathlib import Path

import numpy as np
import pandas as pd

from airway_recon.exceptions import DomainError
from airway_recon.extract.cloud import PointCloud

_PLY_HEADER = """ply
format ascii 1.0
element vertex {count}
property double x
property double y
property double z
property int frame
property int column
end_header
"""


def write_ply(path, cloud: PointCloud) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    table = pd.DataFrame(
        {
            "x": cloud.points[:, 0],
            "y": cloud.points[:, 1],
            "z": cloud.points[:, 2],
            "frame": cloud.frames.astype(np.int64),
            "column": cloud.columns.astype(np.int64),
        }
    )
    with open(path, "w", newline="\n") as fh:
        fh.write(_PLY_HEADER.format(count=len(cloud)))
        table.to_csv(fh, sep=" ", header=False, index=False, float_format="%.17g")
    return path


def read_ply(path) -> PointCloud:
    path = Path(path)
    with open(path) as fh:
        if fh.readline().strip() != "ply":
            raise DomainError(f"{path}: not a PLY file")
        header_lines = 1
        count = None
        for line in fh:
            header_lines += 1
            line = line.strip()
            if line.startswith("format") and "ascii" not in line:
                raise DomainError(f"{path}: only ASCII point clouds are supported")
            if line.startswith("element vertex"):
                count = int(line.split()[-1])
            if line == "end_header":
                break
    if count is None:
        raise DomainError(f"{path}: no vertex element")
    if count == 0:
        return PointCloud(np.zeros((0, 3)), np.zeros(0, dtype=np.int64), np.zeros(0, dtype=np.int64))
    table = pd.read_csv(
        path, sep=" ", header=None, skiprows=header_lines, nrows=count, names=["x", "y", "z", "frame", "column"]
    )
    return PointCloud(
        table[["x", "y", "z"]].to_numpy(dtype=np.float64),
        table["frame"].to_numpy(dtype=np.int64),
        table["column"].to_numpy(dtype=np.int64),
    )


def write_xyz(path, cloud: PointCloud) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    np.savetxt(path, cloud.points, fmt="%.17g")
    return path


def read_xyz(path) -> PointCloud:
    return PointCloud.from_points(np.loadtxt(path, ndmin=2))
