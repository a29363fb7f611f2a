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

from airway_recon.exceptions import DomainError
from airway_recon.extract.boundary import SegmentationMask


def dice(a: SegmentationMask, b: SegmentationMask) -> float:
    """2|A n B| / (|A| + |B|); two empty masks score 1.0."""
    mask_a = a.binary() if isinstance(a, SegmentationMask) else np.asarray(a).astype(bool)
    mask_b = b.binary() if isinstance(b, SegmentationMask) else np.asarray(b).astype(bool)
    if mask_a.shape != mask_b.shape:
        raise DomainError(f"mask shapes differ: {mask_a.shape} vs {mask_b.shape}")
    total = int(mask_a.sum()) + int(mask_b.sum())
    if total == 0:
        return 1.0
    return 2.0 * int(np.logical_and(mask_a, mask_b).sum()) / total
