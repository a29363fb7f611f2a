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

"""CSV files of the pipeline; every file starts with a schema-version comment line."""

from pathlib import Path
from typing import List, Sequence

import numpy as np
import pandas as pd
from celery.utils.log import get_task_logger

from airway_recon.exceptions import DomainError
from airway_recon.extract.boundary import ALineBoundary
from airway_recon.geometry.helix import sample_times
from airway_recon.geometry.types import ScanConfig

logger = get_task_logger(__name__)

CSV_SCHEMA_VERSION = 1
BOUNDARY_COLUMNS = ["frame", "column", "t", "d_tiss_mm", "source", "low_confidence"]


def write_csv(path, frame: pd.DataFrame) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="") as fh:
        fh.write(f"# schema_version={CSV_SCHEMA_VERSION}\n")
        frame.to_csv(fh, index=False, float_format="%.17g", na_rep="")
    return path


def read_csv(path) -> pd.DataFrame:
    path = Path(path)
    with open(path) as fh:
        first = fh.readline().strip()
    if not first.startswith("# schema_version="):
        raise DomainError(f"{path}: missing schema-version line")
    version = int(first.split("=", 1)[1])
    if version != CSV_SCHEMA_VERSION:
        raise DomainError(f"{path}: unsupported schema version {version}")
    return pd.read_csv(path, comment="#")


def boundaries_to_frame(boundaries: Sequence[ALineBoundary], cfg: ScanConfig) -> pd.DataFrame:
    """Long-form table with one row per (frame, column); absent columns keep an empty d_tiss."""
    parts = []
    for b in sorted(boundaries, key=lambda b: b.frame_index):
        columns = np.arange(b.n_columns)
        parts.append(
            pd.DataFrame(
                {
                    "frame": np.full(b.n_columns, b.frame_index, dtype=np.int64),
                    "column": columns,
                    "t": sample_times(np.full(b.n_columns, b.frame_index), columns, cfg),
                    "d_tiss_mm": b.d_tiss,
                    "source": b.source,
                    "low_confidence": b.low_confidence.astype(np.int64),
                }
            )
        )
    if not parts:
        return pd.DataFrame(columns=BOUNDARY_COLUMNS)
    return pd.concat(parts, ignore_index=True)[BOUNDARY_COLUMNS]


def boundaries_from_frame(frame: pd.DataFrame, n_columns: int) -> List[ALineBoundary]:
    missing = set(BOUNDARY_COLUMNS) - set(frame.columns)
    if missing:
        raise DomainError(f"boundary table lacks columns {sorted(missing)}")
    boundaries = []
    for index, rows in frame.groupby("frame", sort=True):
        d = np.full(n_columns, np.nan)
        low = np.zeros(n_columns, dtype=bool)
        cols = rows["column"].to_numpy(dtype=np.int64)
        if cols.min() < 0 or cols.max() >= n_columns:
            raise DomainError(f"frame {index}: column index outside [0, {n_columns})")
        d[cols] = rows["d_tiss_mm"].to_numpy(dtype=np.float64)
        low[cols] = rows["low_confidence"].to_numpy(dtype=np.int64) != 0
        boundaries.append(ALineBoundary(int(index), d, str(rows["source"].iloc[0]), low))
    return boundaries


def write_boundaries(path, boundaries: Sequence[ALineBoundary], cfg: ScanConfig) -> Path:
    path = write_csv(path, boundaries_to_frame(boundaries, cfg))
    logger.info(f"Wrote {len(boundaries)} frames of boundaries to {path}")
    return path


def read_boundaries(path, cfg: ScanConfig) -> List[ALineBoundary]:
    return boundaries_from_frame(read_csv(path), cfg.n_columns)
