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

"""Line-of-sight errors and per-frame segmentation metrics between boundary sets."""

from dataclasses import dataclass, field
from typing import Dict, List, Sequence

import numpy as np
import pandas as pd
from celery.utils.log import get_task_logger

from airway_recon.exceptions import DomainError, UndefinedMetricError
from airway_recon.extract.boundary import ALineBoundary, SegmentationMask, boundary_to_mask
from airway_recon.extract.cloud import pointcloud_from_scan
from airway_recon.geometry.types import ScanConfig
from airway_recon.metrics.overlap import dice
from airway_recon.metrics.pointsets import EMD_CAP, chamfer, emd, hausdorff

logger = get_task_logger(__name__)

FRAME_COLUMNS = ["frame", "mu_dist_mm", "max_dist_mm", "joint_columns", "coverage_deficit"]


@dataclass
class ALineErrors:
    mu_dist: float  # mean over frames of the per-frame mean error, mm
    max_dist: float  # mean over frames of the per-frame max error, mm
    mu_dist_std: float
    max_dist_std: float
    worst: float  # largest single-column error, mm
    coverage_deficit: int  # columns present on exactly one side
    per_frame: pd.DataFrame = field(repr=False)


def _pair_frames(gt: Sequence[ALineBoundary], pred: Sequence[ALineBoundary]) -> Dict[int, tuple]:
    gt_by_frame = {b.frame_index: b for b in gt}
    pred_by_frame = {b.frame_index: b for b in pred}
    if len(gt_by_frame) != len(gt) or len(pred_by_frame) != len(pred):
        raise DomainError("duplicate frame in boundary list")
    if set(gt_by_frame) != set(pred_by_frame):
        missing = sorted(set(gt_by_frame) ^ set(pred_by_frame))
        raise DomainError(f"boundary lists cover different frames: {missing[:10]}")
    pairs = {}
    for i in sorted(gt_by_frame):
        g, p = gt_by_frame[i], pred_by_frame[i]
        if g.n_columns != p.n_columns:
            raise DomainError(f"frame {i}: {g.n_columns} vs {p.n_columns} columns")
        pairs[i] = (g, p)
    return pairs


def aline_errors(gt: Sequence[ALineBoundary], pred: Sequence[ALineBoundary]) -> ALineErrors:
    rows = []
    worst = 0.0
    deficit = 0
    for i, (g, p) in _pair_frames(gt, pred).items():
        joint = g.present & p.present
        frame_deficit = int((g.present ^ p.present).sum())
        deficit += frame_deficit
        if joint.any():
            err = np.abs(g.d_tiss[joint] - p.d_tiss[joint])
            mu, mx = float(err.mean()), float(err.max())
            worst = max(worst, mx)
        else:
            mu = mx = float("nan")
            logger.warning(f"Frame {i}: no jointly present columns")
        rows.append(
            {
                "frame": i,
                "mu_dist_mm": mu,
                "max_dist_mm": mx,
                "joint_columns": int(joint.sum()),
                "coverage_deficit": frame_deficit,
            }
        )

    per_frame = pd.DataFrame(rows, columns=FRAME_COLUMNS)
    scored = per_frame.dropna(subset=["mu_dist_mm"])
    if scored.empty:
        raise UndefinedMetricError("no jointly present columns in any frame")
    return ALineErrors(
        mu_dist=float(scored["mu_dist_mm"].mean()),
        max_dist=float(scored["max_dist_mm"].mean()),
        mu_dist_std=float(scored["mu_dist_mm"].std(ddof=0)),
        max_dist_std=float(scored["max_dist_mm"].std(ddof=0)),
        worst=worst,
        coverage_deficit=deficit,
        per_frame=per_frame,
    )


def boundary_total_variation(boundary: ALineBoundary) -> float:
    """Sum of |d[j+1] - d[j]| over neighbouring columns that are both present."""
    d = boundary.d_tiss
    steps = np.abs(np.diff(d))
    return float(np.nansum(steps))


def frame_segmentation_metrics(
    gt: Sequence[ALineBoundary],
    pred: Sequence[ALineBoundary],
    cfg: ScanConfig,
    gt_masks: Sequence[SegmentationMask] = (),
    emd_cap: int = EMD_CAP,
    seed: int = 0,
) -> pd.DataFrame:
    """Per-frame CD, HD and EMD (mm) between wall points, and DICE against ground-truth masks."""
    masks = {m.frame_index: m for m in gt_masks}
    rows: List[dict] = []
    for i, (g, p) in _pair_frames(gt, pred).items():
        row = {"frame": i, "cd_mm2": np.nan, "hd_mm": np.nan, "emd_mm": np.nan, "dice": np.nan}
        gt_points = pointcloud_from_scan([g], cfg).points
        pred_points = pointcloud_from_scan([p], cfg).points
        if len(gt_points) and len(pred_points):
            row["cd_mm2"] = chamfer(gt_points, pred_points)
            row["hd_mm"] = hausdorff(gt_points, pred_points)
            row["emd_mm"] = emd(gt_points, pred_points, emd_cap, seed + i)
        if i in masks:
            row["dice"] = dice(masks[i], boundary_to_mask(p, cfg))
        rows.append(row)
    return pd.DataFrame(rows, columns=["frame", "cd_mm2", "hd_mm", "emd_mm", "dice"])
