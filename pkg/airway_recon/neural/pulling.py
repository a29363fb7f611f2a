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

"""Neural pulling: move a query along the field gradient onto the predicted surface."""

from dataclasses import dataclass
from typing import List, Tuple

import numpy as np

from airway_recon.exceptions import DegenerateGradientError, DomainError
from airway_recon.neural.mlp import MlpSdf
from airway_recon.neural.sampling import QueryBatch

GRADIENT_EPS = 1e-8


def pull(q, s: float, g, eps: float = GRADIENT_EPS) -> np.ndarray:
    """t' = q - s * g / |g|."""
    q = np.asarray(q, dtype=np.float64)
    g = np.asarray(g, dtype=np.float64)
    norm = float(np.linalg.norm(g))
    if not norm > eps:
        raise DegenerateGradientError(f"gradient norm {norm:.3g} at or below {eps:g}")
    return q - s * g / norm


@dataclass
class PullingStep:
    loss: float
    grad_w: List[np.ndarray]
    grad_b: List[np.ndarray]
    skipped: int  # queries dropped for a vanishing gradient
    mean_gradient_norm: float


def pull_loss(net: MlpSdf, batch: QueryBatch, eps: float = GRADIENT_EPS) -> PullingStep:
    """Mean squared distance between pulled queries and their target points, with exact gradients."""
    q = np.asarray(batch.queries, dtype=np.float64)
    targets = np.asarray(batch.targets, dtype=np.float64)
    if q.shape != targets.shape or q.ndim != 2 or q.shape[1] != 3:
        raise DomainError(f"queries {q.shape} and targets {targets.shape} must both be (I, 3)")

    s, g, cache = net.forward(q, keep=True)
    norms = np.linalg.norm(g, axis=1)
    valid = norms > eps
    count = int(valid.sum())
    if count == 0:
        raise DegenerateGradientError(f"all {len(q)} queries have a vanishing field gradient")

    safe = np.where(valid, norms, 1.0)
    u = g / safe[:, None]
    pulled = q - s[:, None] * u
    err = np.where(valid[:, None], pulled - targets, 0.0)
    loss = float((err**2).sum() / count)

    e_bar = 2.0 * err / count
    along = (e_bar * u).sum(axis=1)
    s_bar = -along
    g_bar = -(s / safe)[:, None] * (e_bar - along[:, None] * u)
    s_bar[~valid] = 0.0
    g_bar[~valid] = 0.0

    grad_w, grad_b = net.backward(cache, s_bar, g_bar)
    return PullingStep(loss, grad_w, grad_b, len(q) - count, float(norms[valid].mean()))


def pull_loss_value(net: MlpSdf, batch: QueryBatch, eps: float = GRADIENT_EPS) -> float:
    """Loss only; used for finite-difference checks and evaluation."""
    s, g = net.forward(batch.queries)
    norms = np.linalg.norm(g, axis=1)
    valid = norms > eps
    if not valid.any():
        raise DegenerateGradientError("all queries have a vanishing field gradient")
    u = g[valid] / norms[valid, None]
    pulled = batch.queries[valid] - s[valid, None] * u
    return float(((pulled - batch.targets[valid]) ** 2).sum() / valid.sum())


def pulled_points(net: MlpSdf, queries) -> Tuple[np.ndarray, np.ndarray]:
    """Pulled positions and a mask of queries whose gradient was usable."""
    q = np.atleast_2d(np.asarray(queries, dtype=np.float64))
    s, g = net.forward(q)
    norms = np.linalg.norm(g, axis=1)
    valid = norms > GRADIENT_EPS
    safe = np.where(valid, norms, 1.0)
    return q - s[:, None] * g / safe[:, None], valid
