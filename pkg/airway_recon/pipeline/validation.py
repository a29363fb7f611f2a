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
from typing import List, Optional, Sequence

from airway_recon.phantom.scanner import coverage_diagnostics
from airway_recon.pipeline.config import PipelineConfig


def validate_config(cfg: PipelineConfig, stages: Optional[Sequence[str]] = None) -> List[str]:
    """Every reason the configuration cannot run `stages` (default: its own); empty iff runnable."""
    stages = tuple(stages) if stages is not None else cfg.stages
    problems: List[str] = []
    scan_problems = cfg.scan.diagnostics()
    problems += scan_problems
    problems += cfg.noise.diagnostics()
    problems += cfg.extract.diagnostics()
    problems += [f"train: {p}" for p in cfg.train.validate()]
    problems += cfg.mesh.grid.diagnostics()
    if cfg.metrics.emd_cap < 1 or cfg.metrics.mesh_samples < 1:
        problems.append("metrics.emd_cap and metrics.mesh_samples must be >= 1")

    if cfg.phantom is not None:
        phantom_problems = cfg.phantom.diagnostics()
        problems += phantom_problems
        if not phantom_problems and not scan_problems:
            problems += coverage_diagnostics(cfg.phantom, cfg.scan)
    elif "simulate" in stages:
        problems.append("the simulate stage needs a [phantom] table")

    if "extract" in stages:
        if cfg.paths.mask_dir and not Path(cfg.paths.mask_dir).is_dir():
            problems.append(f"paths.mask_dir {cfg.paths.mask_dir} does not exist")
        if cfg.paths.frame_dir and not Path(cfg.paths.frame_dir).is_dir():
            problems.append(f"paths.frame_dir {cfg.paths.frame_dir} does not exist")
    return problems
