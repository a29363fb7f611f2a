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

"""Pulling-loss training with Adam and a cosine learning-rate schedule."""

import math
from dataclasses import asdict, dataclass, fields
from typing import Any, Dict, List, Optional, Tuple

import numpy as np
import pandas as pd
from celery.utils.log import get_task_logger

from airway_recon.exceptions import (
    ConfigError,
    DegenerateGradientError,
    DomainError,
    NumericError,
    TrainingDivergedError,
)
from airway_recon.extract.cloud import PointCloud, UnitTransform
from airway_recon.neural.mlp import Activation, MlpSdf
from airway_recon.neural.pulling import GRADIENT_EPS, pull_loss
from airway_recon.neural.sampling import sample_queries

logger = get_task_logger(__name__)

UNIT_BALL_TOLERANCE = 1e-9
LOG_COLUMNS = ["step", "loss", "lr", "skipped", "grad_norm", "mean_field_gradient"]


@dataclass(frozen=True)
class TrainConfig:
    steps: int = 10000
    batch_size: int = 512
    learning_rate: float = 1e-3
    min_learning_rate: float = 1e-5
    queries_per_point: int = 8
    knn: int = 50
    beta1: float = 0.9
    beta2: float = 0.999
    adam_eps: float = 1e-8
    seed: int = 0
    gradient_eps: float = GRADIENT_EPS
    hidden_layers: int = 8
    hidden_width: int = 256
    skip_layer: Optional[int] = 4
    activation: str = "softplus"
    softplus_beta: float = 100.0
    init_radius: float = 0.5
    log_every: int = 500

    def validate(self) -> List[str]:
        problems = []
        if self.steps < 0:
            problems.append("steps must be >= 0")
        if self.batch_size < 1:
            problems.append("batch_size must be >= 1")
        if not self.learning_rate > 0:
            problems.append("learning_rate must be > 0")
        if not 0 <= self.min_learning_rate <= self.learning_rate:
            problems.append("min_learning_rate must lie in [0, learning_rate]")
        if self.queries_per_point < 1:
            problems.append("queries_per_point must be >= 1")
        if self.knn < 1:
            problems.append("knn must be >= 1")
        if not (0 <= self.beta1 < 1 and 0 <= self.beta2 < 1):
            problems.append("Adam betas must lie in [0, 1)")
        if self.hidden_layers < 0 or self.hidden_width < 4:
            problems.append("need hidden_layers >= 0 and hidden_width >= 4")
        if self.activation not in ("softplus", "relu"):
            problems.append(f"unknown activation '{self.activation}'")
        return problems

    def activation_spec(self) -> Activation:
        return Activation(self.activation, self.softplus_beta)

    def to_dict(self) -> Dict[str, Any]:
        return asdict(self)

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> "TrainConfig":
        known = {f.name for f in fields(cls)}
        unknown = set(data) - known
        if unknown:
            raise ConfigError(f"unknown training keys: {sorted(unknown)}")
        data = dict(data)
        # TOML has no null: a non-positive skip layer disables the skip connection
        if data.get("skip_layer") is not None and int(data["skip_layer"]) <= 0:
            data["skip_layer"] = None
        return cls(**data)


def cosine_learning_rate(step: int, cfg: TrainConfig) -> float:
    if cfg.steps <= 1:
        return cfg.learning_rate
    progress = step / (cfg.steps - 1)
    span = cfg.learning_rate - cfg.min_learning_rate
    return cfg.min_learning_rate + 0.5 * span * (1.0 + math.cos(math.pi * progress))


class Adam:
    """Adam over a flat parameter vector."""

    def __init__(self, size: int, beta1: float = 0.9, beta2: float = 0.999, eps: float = 1e-8):
        self.m = np.zeros(size)
        self.v = np.zeros(size)
        self.beta1 = beta1
        self.beta2 = beta2
        self.eps = eps
        self.t = 0

    def step(self, params: np.ndarray, grad: np.ndarray, lr: float) -> np.ndarray:
        self.t += 1
        self.m = self.beta1 * self.m + (1.0 - self.beta1) * grad
        self.v = self.beta2 * self.v + (1.0 - self.beta2) * grad * grad
        m_hat = self.m / (1.0 - self.beta1**self.t)
        v_hat = self.v / (1.0 - self.beta2**self.t)
        return params - lr * m_hat / (np.sqrt(v_hat) + self.eps)


def initial_network(cfg: TrainConfig, transform: UnitTransform = UnitTransform()) -> MlpSdf:
    return MlpSdf.geometric_init(
        hidden_layers=cfg.hidden_layers,
        hidden_width=cfg.hidden_width,
        skip_layer=cfg.skip_layer,
        radius=cfg.init_radius,
        activation=cfg.activation_spec(),
        rng=np.random.default_rng([cfg.seed, 0]),
        unit_transform=transform,
    )


def train_with_log(
    cloud: PointCloud,
    cfg: TrainConfig,
    transform: UnitTransform = UnitTransform(),
    init: Optional[MlpSdf] = None,
) -> Tuple[MlpSdf, pd.DataFrame]:
    """Fit an SDF to a unit-space cloud; returns the model and a per-step log."""
    problems = cfg.validate()
    if problems:
        raise ConfigError("; ".join(problems))
    points = np.asarray(cloud.points, dtype=np.float64)
    if len(points) < 2:
        raise DomainError(f"need at least 2 points to train, got {len(points)}")
    if np.linalg.norm(points, axis=1).max() > 1.0 + UNIT_BALL_TOLERANCE:
        raise DomainError("cloud is not normalized: points lie outside the unit ball")

    net = init if init is not None else initial_network(cfg, transform)
    net = net.with_transform(transform)
    rows: List[Dict[str, Any]] = []
    if cfg.steps == 0:
        return net, pd.DataFrame(rows, columns=LOG_COLUMNS)

    pool = sample_queries(cloud, cfg.queries_per_point, cfg.knn, np.random.default_rng([cfg.seed, 1]))
    batch_rng = np.random.default_rng([cfg.seed, 2])
    optimizer = Adam(net.n_parameters, cfg.beta1, cfg.beta2, cfg.adam_eps)
    params = net.get_flat_parameters()
    logger.info(f"Training {net.n_parameters} parameters for {cfg.steps} steps on {len(points)} points")

    for step in range(cfg.steps):
        batch = pool.draw(cfg.batch_size, batch_rng)
        try:
            result = pull_loss(net, batch, cfg.gradient_eps)
        except NumericError as exc:
            raise TrainingDivergedError(f"non-finite network output at step {step}: {exc}", net, step) from exc
        except DegenerateGradientError:
            logger.warning(f"Step {step}: every query had a vanishing gradient, step skipped")
            continue
        grad = net.flatten_gradients(result.grad_w, result.grad_b)
        if not (math.isfinite(result.loss) and np.isfinite(grad).all()):
            raise TrainingDivergedError(f"non-finite loss or gradient at step {step}", net, step)

        lr = cosine_learning_rate(step, cfg)
        candidate = optimizer.step(params, grad, lr)
        if not np.isfinite(candidate).all():
            raise TrainingDivergedError(f"non-finite parameters after step {step}", net, step)
        params = candidate
        net = net.with_flat_parameters(params)

        rows.append(
            {
                "step": step,
                "loss": result.loss,
                "lr": lr,
                "skipped": result.skipped,
                "grad_norm": float(np.linalg.norm(grad)),
                "mean_field_gradient": result.mean_gradient_norm,
            }
        )
        if result.skipped:
            logger.debug(f"Step {step}: skipped {result.skipped} degenerate queries")
        if cfg.log_every and (step % cfg.log_every == 0 or step == cfg.steps - 1):
            logger.info(f"Step {step}/{cfg.steps}: loss {result.loss:.6g}, lr {lr:.3g}")

    return net, pd.DataFrame(rows, columns=LOG_COLUMNS)


def train(cloud: PointCloud, cfg: TrainConfig, transform: UnitTransform = UnitTransform()) -> MlpSdf:
    net, _ = train_with_log(cloud, cfg, transform)
    return net
