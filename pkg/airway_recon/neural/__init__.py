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

from .fields import AnalyticField, SignedDistanceField, phantom_field, sphere_field, tube_field
from .mlp import Activation, MlpSdf, eval_with_gradient
from .model_io import export_json, import_json, load_model, save_model
from .pulling import pull, pull_loss, pull_loss_value, pulled_points
from .sampling import QueryBatch, QueryPool, sample_queries
from .training import Adam, TrainConfig, cosine_learning_rate, initial_network, train, train_with_log

__all__ = [
    "AnalyticField",
    "SignedDistanceField",
    "phantom_field",
    "sphere_field",
    "tube_field",
    "Activation",
    "MlpSdf",
    "eval_with_gradient",
    "export_json",
    "import_json",
    "load_model",
    "save_model",
    "pull",
    "pull_loss",
    "pull_loss_value",
    "pulled_points",
    "QueryBatch",
    "QueryPool",
    "sample_queries",
    "Adam",
    "TrainConfig",
    "cosine_learning_rate",
    "initial_network",
    "train",
    "train_with_log",
]
