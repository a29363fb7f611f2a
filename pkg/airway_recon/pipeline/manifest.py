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

"""
Run manifest and output-directory lock.

The manifest (`manifest.json`) records the tool version, the configuration
snapshot, sha256 digests of every stage input and output, per-stage wall-clock
time and warnings. Timing fields are the only non-reproducible content.
"""

import hashlib
import json
import os
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Dict, List

from airway_recon import __version__
from airway_recon.exceptions import ConfigError

MANIFEST_NAME = "manifest.json"
LOCK_NAME = ".aoct.lock"


def file_digest(path) -> str:
    sha = hashlib.sha256()
    with open(path, "rb") as fh:
        for block in iter(lambda: fh.read(1 << 20), b""):
            sha.update(block)
    return sha.hexdigest()


@dataclass
class StageRecord:
    """What one stage read and wrote; paths are relative to the output directory."""

    stage: str
    inputs: Dict[str, str] = field(default_factory=dict)
    outputs: Dict[str, str] = field(default_factory=dict)
    wall_clock_s: float = 0.0
    warnings: List[str] = field(default_factory=list)

    def to_dict(self) -> Dict[str, Any]:
        return {
            "stage": self.stage,
            "inputs": dict(sorted(self.inputs.items())),
            "outputs": dict(sorted(self.outputs.items())),
            "wall_clock_s": self.wall_clock_s,
            "warnings": list(self.warnings),
        }


@dataclass
class RunManifest:
    tool_version: str = __version__
    config: Dict[str, Any] = field(default_factory=dict)
    config_hash: str = ""
    stages: Dict[str, Dict[str, Any]] = field(default_factory=dict)

    @property
    def warnings(self) -> List[str]:
        return [w for record in self.stages.values() for w in record.get("warnings", [])]

    def digests(self) -> Dict[str, str]:
        files: Dict[str, str] = {}
        for record in self.stages.values():
            files.update(record.get("outputs", {}))
        return files

    def merge(self, record: StageRecord) -> None:
        self.stages[record.stage] = record.to_dict()

    def to_dict(self) -> Dict[str, Any]:
        return {
            "tool_version": self.tool_version,
            "config": self.config,
            "config_hash": self.config_hash,
            "stages": dict(self.stages),
        }

    def save(self, out_dir) -> Path:
        path = Path(out_dir) / MANIFEST_NAME
        path.write_text(json.dumps(self.to_dict(), indent=2, sort_keys=True) + "\n")
        return path

    @classmethod
    def load(cls, out_dir) -> "RunManifest":
        path = Path(out_dir) / MANIFEST_NAME
        if not path.is_file():
            return cls()
        data = json.loads(path.read_text())
        return cls(
            tool_version=data.get("tool_version", __version__),
            config=data.get("config", {}),
            config_hash=data.get("config_hash", ""),
            stages=data.get("stages", {}),
        )

    def verify(self, out_dir) -> List[str]:
        """Recorded output files whose current digest no longer matches."""
        out_dir = Path(out_dir)
        stale = []
        for rel, digest in sorted(self.digests().items()):
            path = out_dir / rel
            if not path.is_file() or file_digest(path) != digest:
                stale.append(rel)
        return stale


class OutputLock:
    """Exclusive ownership of an output directory while stages write into it."""

    def __init__(self, out_dir):
        self.path = Path(out_dir) / LOCK_NAME
        self._held = False

    def __enter__(self) -> "OutputLock":
        self.path.parent.mkdir(parents=True, exist_ok=True)
        try:
            fd = os.open(self.path, os.O_CREAT | os.O_EXCL | os.O_WRONLY)
        except FileExistsError:
            raise ConfigError(
                f"{self.path.parent} is locked by another run (remove {self.path} if that run is gone)"
            ) from None
        with os.fdopen(fd, "w") as fh:
            fh.write(f"{os.getpid()}\n")
        self._held = True
        return self

    def __exit__(self, *exc_info) -> None:
        if self._held:
            self.path.unlink(missing_ok=True)
            self._held = False
