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

"""Error types raised across the reconstruction pipeline."""

from typing import Any, Dict, List, Optional


class AoctError(Exception):
    """Base class for every pipeline error."""


class DomainError(AoctError, ValueError):
    """An input lies outside the domain of an operation."""


class ConfigError(AoctError, ValueError):
    """A configuration cannot be run as given."""


class NoWallError(AoctError):
    """An A-line carries no wall distance where a wall point is required."""


class DegenerateGradientError(AoctError):
    """The field gradient vanished, so no pulling direction exists."""


class EmptyMeshError(AoctError):
    """The field has no zero crossing inside the sampled grid."""


class NumericError(AoctError, ArithmeticError):
    """A non-finite value appeared while evaluating the network."""

    def __init__(self, message: str, diagnostics: Optional[List[Dict[str, Any]]] = None):
        super().__init__(message)
        self.diagnostics = diagnostics or []


class TrainingDivergedError(AoctError):
    """The pulling loss became non-finite; `checkpoint` is the last good model."""

    def __init__(self, message: str, checkpoint=None, step: int = -1):
        super().__init__(message)
        self.checkpoint = checkpoint
        self.step = step


class UndefinedMetricError(AoctError):
    """A metric has no defined value for the given inputs."""


class StageDependencyError(AoctError):
    """A stage input is missing; `producer` names the stage that writes it."""

    def __init__(self, message: str, producer: str):
        super().__init__(f"{message} (run the '{producer}' stage first)")
        self.producer = producer


class ModelFormatError(AoctError):
    """A model file is malformed or of an unsupported version."""
