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

"""Ground-truth scan files: frame and mask images, boundary CSV, scan.json."""

import json
from pathlib import Path
from typing import Any, Dict, List

import numpy as np
from celery.utils.log import get_task_logger

from airway_recon.extract.boundary import SegmentationMask
from airway_recon.storage.csv_utils import write_boundaries
from airway_recon.storage.image_utils import frame_path, write_image, write_mask

logger = get_task_logger(__name__)

GROUND_TRUTH_FORMAT_VERSION = 1


def write_frame_images(out_dir, index: int, frame: np.ndarray, mask: np.ndarray) -> List[Path]:
    """frames/frame_NNNN.pgm and masks/mask_NNNN.pgm for one frame."""
    out_dir = Path(out_dir)
    return [
        write_image(frame_path(out_dir / "frames", "frame", index), frame),
        write_mask(frame_path(out_dir / "masks", "mask", index), SegmentationMask(mask, index)),
    ]


def write_scan_metadata(
    path, scan: Dict[str, Any], phantom: Dict[str, Any], noise: Dict[str, Any], seed: int, frames: int
) -> Path:
    path = Path(path)
    payload = {
        "format_version": GROUND_TRUTH_FORMAT_VERSION,
        "scan": scan,
        "phantom": phantom,
        "noise": noise,
        "seed": seed,
        "frames": frames,
    }
    path.write_text(json.dumps(payload, indent=2, sort_keys=True) + "\n")
    return path


def write_ground_truth(scan, out_dir, noise: Dict[str, Any], seed: int) -> List[Path]:
    """
    Write an in-memory GroundTruthScan in the simulate stage's layout.

    Returns every written path: images in frame order, then boundaries.csv
    and scan.json.
    """
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    written: List[Path] = []
    for k, index in enumerate(scan.frame_indices):
        written += write_frame_images(out_dir, int(index), scan.frames[k], scan.masks[k])
    written.append(write_boundaries(out_dir / "boundaries.csv", scan.boundary_records(), scan.cfg))
    written.append(
        write_scan_metadata(
            out_dir / "scan.json", scan.cfg.to_dict(), scan.phantom.to_dict(), noise, seed, len(scan.frame_indices)
        )
    )
    logger.info(f"Wrote ground truth for {len(scan.frame_indices)} frames to {out_dir}")
    return written
