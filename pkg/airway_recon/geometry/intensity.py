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

import numpy as np
from celery.utils.log import get_task_logger

from airway_recon.exceptions import DomainError
from airway_recon.geometry.types import PolarFrame

logger = get_task_logger(__name__)


def normalize_intensity(frame: PolarFrame) -> PolarFrame:
    """
    Clamp a frame to (mean - std, mean + std) of its own pixels, then min-max
    rescale to [0, 1]. Constant frames come back as zeros with
    metadata["degenerate"] set.
    """
    data = np.asarray(frame.data, dtype=np.float64)
    if data.size == 0:
        raise DomainError("cannot normalize an empty frame")

    mu = float(data.mean())
    sigma = float(data.std())
    metadata = dict(frame.metadata, intensity_mean=mu, intensity_std=sigma)

    if sigma == 0.0:
        logger.warning(f"Frame {frame.frame_index}: constant intensity, emitting zeros")
        return PolarFrame(np.zeros_like(data), frame.frame_index, dict(metadata, degenerate=True))

    clamped = np.clip(data, mu - sigma, mu + sigma)
    low, high = float(clamped.min()), float(clamped.max())
    if high <= low:
        logger.warning(f"Frame {frame.frame_index}: flat after clamping, emitting zeros")
        return PolarFrame(np.zeros_like(data), frame.frame_index, dict(metadata, degenerate=True))

    normalized = (clamped - low) / (high - low)
    return PolarFrame(normalized, frame.frame_index, dict(metadata, degenerate=False))
