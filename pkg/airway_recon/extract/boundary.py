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
Per-column wall boundaries from segmentation masks or normalized frames.

A boundary is the far edge of the lumen along each A-line, reported at the
centre of the last lumen pixel: d_tiss = (row + 0.5) * d_max / H.
"""

from dataclasses import dataclass, field
from typing import Optional

import numpy as np
from celery.utils.log import get_task_logger
from scipy.ndimage import generic_filter

from airway_recon.exceptions import DomainError
from airway_recon.geometry.types import PolarFrame, ScanConfig

logger = get_task_logger(__name__)

SOURCE_MASK = "mask"
SOURCE_INTENSITY = "intensity"
SOURCE_RESAMPLED = "resampled"
SOURCE_GROUND_TRUTH = "ground_truth"


@dataclass
class SegmentationMask:
    data: np.ndarray  # (H, N), nonzero = lumen
    frame_index: int = 0

    @property
    def height(self) -> int:
        return int(self.data.shape[0])

    @property
    def width(self) -> int:
        return int(self.data.shape[1])

    def binary(self) -> np.ndarray:
        return np.asarray(self.data) != 0


@dataclass
class ALineBoundary:
    frame_index: int
    d_tiss: np.ndarray  # (N,), NaN = absent
    source: str = SOURCE_MASK
    low_confidence: Optional[np.ndarray] = field(default=None)

    def __post_init__(self):
        self.d_tiss = np.asarray(self.d_tiss, dtype=np.float64)
        if self.low_confidence is None:
            self.low_confidence = np.zeros(self.d_tiss.shape, dtype=bool)

    @property
    def n_columns(self) -> int:
        return int(self.d_tiss.shape[0])

    @property
    def present(self) -> np.ndarray:
        return ~np.isnan(self.d_tiss)

    def check_range(self, d_max: float) -> None:
        d = self.d_tiss[self.present]
        if d.size and (d.min() < 0.0 or d.max() > d_max):
            raise DomainError(f"frame {self.frame_index}: d_tiss outside [0, {d_max}]")


@dataclass(frozen=True)
class MaskParams:
    search_rows: Optional[int] = None  # K; defaults to H // 8
    max_gap: int = 3  # g


@dataclass(frozen=True)
class IntensityParams:
    threshold: float = 0.5  # tau
    min_run: int = 3  # l
    median_width: int = 0  # w across columns; 0 disables


def _column_runs(binary: np.ndarray):
    """Lumen runs per column as (column, start_row, end_row_exclusive), column-major."""
    height, width = binary.shape
    padded = np.zeros((width, height + 2), dtype=np.int8)
    padded[:, 1:-1] = binary.T
    edges = np.diff(padded, axis=1)
    start_cols, start_rows = np.nonzero(edges == 1)
    end_cols, end_rows = np.nonzero(edges == -1)
    return start_cols, start_rows, end_rows


def boundary_from_mask(
    mask: SegmentationMask, cfg: ScanConfig, params: Optional[MaskParams] = None
) -> ALineBoundary:
    """
    Per column, merge lumen runs separated by at most `max_gap` background rows,
    keep the longest merged run that starts within the first K rows (ties go to
    the one nearest the catheter) and report its far edge. Columns holding more
    than one merged run are flagged low-confidence.
    """
    params = params or MaskParams()
    binary = mask.binary()
    if binary.shape != (cfg.frame_height, cfg.n_columns):
        raise DomainError(
            f"mask {mask.frame_index} is {binary.shape[1]}x{binary.shape[0]}, "
            f"expected {cfg.n_columns}x{cfg.frame_height}"
        )
    search_rows = params.search_rows or max(cfg.frame_height // 8, 1)
    pixel = cfg.pixel_size

    d_tiss = np.full(cfg.n_columns, np.nan)
    low_confidence = np.zeros(cfg.n_columns, dtype=bool)
    cols, starts, ends = _column_runs(binary)
    if cols.size == 0:
        logger.warning(f"Mask {mask.frame_index} has no lumen pixels; all columns absent")
        return ALineBoundary(mask.frame_index, d_tiss, SOURCE_MASK, low_confidence)

    splits = np.flatnonzero(np.diff(cols)) + 1
    for col_runs in zip(np.split(cols, splits), np.split(starts, splits), np.split(ends, splits)):
        column = int(col_runs[0][0])
        merged = []
        for start, end in zip(col_runs[1], col_runs[2]):
            if merged and start - merged[-1][1] <= params.max_gap:
                merged[-1][1] = end
            else:
                merged.append([start, end])

        best = None
        for start, end in merged:
            if start >= search_rows:
                break
            if best is None or end - start > best[1] - best[0]:
                best = (start, end)
        if best is None:
            continue
        d_tiss[column] = (best[1] - 1 + 0.5) * pixel
        low_confidence[column] = len(merged) > 1

    absent = int(np.isnan(d_tiss).sum())
    if absent:
        logger.debug(f"Mask {mask.frame_index}: {absent} columns without a qualifying lumen run")
    return ALineBoundary(mask.frame_index, d_tiss, SOURCE_MASK, low_confidence)


def boundary_from_intensity(
    frame: PolarFrame, cfg: ScanConfig, params: Optional[IntensityParams] = None
) -> ALineBoundary:
    """
    Classical fallback segmenter on a normalized frame: the wall starts at the
    first row of the first run of at least `min_run` rows >= threshold. With
    threshold 0 that is row 0 of every column.
    """
    params = params or IntensityParams()
    data = np.asarray(frame.data, dtype=np.float64)
    height, width = data.shape
    above = (data >= params.threshold).astype(np.int64)

    run = max(int(params.min_run), 1)
    csum = np.concatenate([np.zeros((1, width), dtype=np.int64), np.cumsum(above, axis=0)])
    sustained = (csum[run:] - csum[:-run]) == run  # (H - run + 1, N)
    found = sustained.any(axis=0)
    first_row = np.argmax(sustained, axis=0)

    d_tiss = np.where(found, np.maximum(first_row - 0.5, 0.0) * cfg.d_max / height, np.nan)

    if params.median_width > 1 and found.any():
        filtered = generic_filter(d_tiss, np.nanmedian, size=params.median_width, mode="wrap")
        d_tiss = np.where(found, filtered, np.nan)

    return ALineBoundary(frame.frame_index, d_tiss, SOURCE_INTENSITY)


def boundary_to_mask(boundary: ALineBoundary, cfg: ScanConfig) -> SegmentationMask:
    """Rasterize a boundary with the simulator's rule: row is lumen iff row*d_max/H < d_tiss."""
    depth = (np.arange(cfg.frame_height, dtype=np.float64) * cfg.d_max / cfg.frame_height)[:, None]
    wall = np.where(boundary.present, boundary.d_tiss, -np.inf)[None, :]
    return SegmentationMask((depth < wall).astype(np.uint8), boundary.frame_index)
