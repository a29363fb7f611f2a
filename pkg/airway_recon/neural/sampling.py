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

"""Gaussian query sampling around the normalized cloud, with exact nearest-point targets."""

from dataclasses import dataclass
from typing import Iterator

import numpy as np
from celery.utils.log import get_task_logger
from django.conf import settings
from django.core.exceptions import ImproperlyConfigured
from scipy.spatial import cKDTree

from airway_recon.exceptions import DomainError
from airway_recon.extract.cloud import PointCloud

logger = get_task_logger(__name__)


def kdtree_workers() -> int:
    """Worker count for KD-tree queries, from settings.AOCT_THREADS (-1 means all cores).

    One worker when Django settings are not configured, e.g. library use outside manage.py.
    """
    try:
        return int(getattr(settings, "AOCT_THREADS", 1))
    except ImproperlyConfigured:
        return 1


@dataclass
class QueryBatch:
    queries: np.ndarray  # (I, 3)
    targets: np.ndarray  # (I, 3), nearest cloud point to each query


@dataclass
class QueryPool:
    """All queries drawn for a cloud; training draws batches from it uniformly."""

    queries: np.ndarray
    targets: np.ndarray
    sigmas: np.ndarray  # per cloud point

    def __len__(self) -> int:
        return int(self.queries.shape[0])

    def draw(self, batch_size: int, rng: np.random.Generator) -> QueryBatch:
        idx = rng.integers(0, len(self), size=batch_size)
        return QueryBatch(self.queries[idx], self.targets[idx])

    def batches(self, batch_size: int, rng: np.random.Generator) -> Iterator[QueryBatch]:
        while True:
            yield self.draw(batch_size, rng)


def local_sigmas(points: np.ndarray, knn: int, tree: cKDTree = None) -> np.ndarray:
    """Distance from each point to its knn-th nearest neighbour (self excluded)."""
    n = len(points)
    if n < 2:
        raise DomainError(f"need at least 2 points to sample queries, got {n}")
    k = min(int(knn), n - 1)
    if k < 1:
        raise DomainError("knn must be >= 1")
    tree = tree if tree is not None else cKDTree(points)
    dists, _ = tree.query(points, k=k + 1, workers=kdtree_workers())
    return dists[:, k]


def sample_queries(
    cloud: PointCloud, queries_per_point: int, knn: int, rng: np.random.Generator
) -> QueryPool:
    """Q queries per cloud point, drawn from N(p, sigma_p^2 I)."""
    points = np.asarray(cloud.points, dtype=np.float64)
    if queries_per_point < 1:
        raise DomainError("queries_per_point must be >= 1")
    tree = cKDTree(points)
    sigmas = local_sigmas(points, knn, tree)
    if not (sigmas > 0).any():
        logger.warning("All local scales are zero: queries coincide with cloud points")

    noise = rng.normal(size=(len(points), queries_per_point, 3))
    queries = (points[:, None, :] + sigmas[:, None, None] * noise).reshape(-1, 3)
    _, nearest = tree.query(queries, k=1, workers=kdtree_workers())
    logger.info(
        f"Sampled {len(queries)} queries around {len(points)} points "
        f"(median sigma {float(np.median(sigmas)):.4g})"
    )
    return QueryPool(queries, points[nearest], sigmas)
