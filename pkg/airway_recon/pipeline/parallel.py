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

"""Frame-chunk Celery tasks for the simulate and resample stages."""

import math
from pathlib import Path
from typing import Dict, List, Optional, Sequence

import numpy as np
from celery import group, shared_task
from celery.utils.log import get_task_logger
from django.conf import settings

from airway_recon.geometry.types import ScanConfig
from airway_recon.neural.model_io import load_model
from airway_recon.phantom.scanner import NoiseParams, simulate_frames
from airway_recon.phantom.shape import Phantom
from airway_recon.storage.ground_truth import write_frame_images
from airway_recon.surface.raycast import resample_frame

logger = get_task_logger(__name__)


def _encode(values: np.ndarray) -> List[Optional[float]]:
    """JSON-safe row: NaN becomes None."""
    return [None if math.isnan(v) else float(v) for v in values]


def decode_rows(rows: Sequence[Sequence[Optional[float]]]) -> np.ndarray:
    return np.array([[np.nan if v is None else v for v in row] for row in rows], dtype=np.float64)


def frame_chunks(n_frames: int, chunk: Optional[int] = None) -> List[List[int]]:
    chunk = max(1, int(chunk or settings.AOCT_FRAME_CHUNK))
    return [list(range(start, min(start + chunk, n_frames))) for start in range(0, n_frames, chunk)]


@shared_task
def simulate_frames_task(
    phantom: Dict, scan: Dict, noise: Dict, seed: int, frames: List[int], out_dir: str
) -> Dict[str, List]:
    """
    Simulate a chunk of frames, write their frame and mask images, return exact boundaries.
    """
    logger.info(f"Simulating frames {frames[0]}..{frames[-1]}")
    try:
        ph = Phantom.from_dict(phantom)
        cfg = ScanConfig.from_dict(scan)
        images, masks, boundaries, _ = simulate_frames(ph, cfg, NoiseParams(**noise), seed, frames)
        out = Path(out_dir)
        for k, index in enumerate(frames):
            write_frame_images(out, index, images[k], masks[k])
        return {"frames": list(frames), "boundaries": [_encode(row) for row in boundaries]}
    except Exception as e:
        logger.error(f"Error simulating frames {frames[0]}..{frames[-1]}: {e}", exc_info=True)
        raise


@shared_task
def resample_frames_task(model_path: str, scan: Dict, frames: List[int]) -> Dict[str, List]:
    """
    Ray-cast a chunk of frames through a saved model.
    """
    logger.info(f"Resampling frames {frames[0]}..{frames[-1]}")
    try:
        net = load_model(model_path)
        cfg = ScanConfig.from_dict(scan)
        rows = [_encode(resample_frame(net, index, cfg).d_tiss) for index in frames]
        return {"frames": list(frames), "boundaries": rows}
    except Exception as e:
        logger.error(f"Error resampling frames {frames[0]}..{frames[-1]}: {e}", exc_info=True)
        raise


def run_chunks(signatures) -> List[Dict[str, List]]:
    """Run task signatures as a group; results come back in submission order."""
    if not signatures:
        return []
    result = group(signatures).apply_async()
    return result.get(disable_sync_subtasks=False)


def joined_boundaries(results: List[Dict[str, List]]):
    """(frame indices, (M, N) boundary array) in frame order."""
    frames: List[int] = []
    rows: List[List] = []
    for part in results:
        frames.extend(part["frames"])
        rows.extend(part["boundaries"])
    order = np.argsort(frames, kind="stable")
    return np.asarray(frames)[order], decode_rows(rows)[order]
