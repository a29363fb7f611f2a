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

"""PGM/PNG frame and mask files, named `<prefix>_NNNN.<ext>` by frame index."""

import re
from pathlib import Path
from typing import List

import imageio.v3 as iio
import numpy as np
from celery.utils.log import get_task_logger

from airway_recon.exceptions import DomainError, StageDependencyError
from airway_recon.extract.boundary import SegmentationMask

logger = get_task_logger(__name__)

MASK_THRESHOLD = 128
_INDEXED_NAME = re.compile(r"_(\d+)\.(pgm|png)$", re.IGNORECASE)


def frame_path(directory, prefix: str, index: int, ext: str = "pgm") -> Path:
    return Path(directory) / f"{prefix}_{index:04d}.{ext}"


def write_image(path, data: np.ndarray) -> Path:
    path = Path(path)
    data = np.asarray(data)
    if data.dtype != np.uint8:
        raise DomainError(f"{path.name}: images are stored as 8-bit, got {data.dtype}")
    path.parent.mkdir(parents=True, exist_ok=True)
    extension = ".pgm" if path.suffix.lower() == ".pgm" else ".png"
    iio.imwrite(path, data, extension=extension)
    return path


def read_image(path) -> np.ndarray:
    data = np.asarray(iio.imread(path))
    if data.ndim == 3:
        data = data[..., 0]
    return data


def write_mask(path, mask: SegmentationMask) -> Path:
    """Lumen written as 255, tissue as 0."""
    return write_image(path, np.where(mask.binary(), 255, 0).astype(np.uint8))


def read_mask(path, frame_index: int) -> SegmentationMask:
    data = read_image(path)
    return SegmentationMask((data >= MASK_THRESHOLD).astype(np.uint8), frame_index)


def indexed_files(directory, prefix: str = "") -> List[tuple]:
    """(frame index, path) for every `*_NNNN.pgm|png` in `directory`, sorted by index."""
    directory = Path(directory)
    if not directory.is_dir():
        raise StageDependencyError(f"image directory {directory} does not exist", "simulate")
    found = {}
    for path in sorted(directory.iterdir()):
        match = _INDEXED_NAME.search(path.name)
        if not match or (prefix and not path.name.startswith(prefix + "_")):
            continue
        index = int(match.group(1))
        if index in found:
            raise DomainError(f"two files for frame {index}: {found[index].name}, {path.name}")
        found[index] = path
    return sorted(found.items())


def read_masks(directory, prefix: str = "mask") -> List[SegmentationMask]:
    files = indexed_files(directory, prefix)
    if not files:
        raise StageDependencyError(f"no '{prefix}_NNNN' masks in {directory}", "simulate")
    logger.info(f"Reading {len(files)} masks from {directory}")
    return [read_mask(path, index) for index, path in files]
