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
Binary and JSON persistence for trained fields.

Binary layout (little endian):
    magic   b"AOCTSDF\\0"
    version <u4 (currently 1)
    length  <u4, byte length of the JSON descriptor that follows
    descriptor  UTF-8 JSON: widths, skip_layer, activation
    transform   4 x <f8: center x, y, z, scale (mm per unit)
    parameters  <f8, per layer W (row-major) then b
"""

import json
import struct
from pathlib import Path
from typing import Any, Dict

import numpy as np

from airway_recon.exceptions import ModelFormatError
from airway_recon.extract.cloud import UnitTransform
from airway_recon.neural.mlp import Activation, MlpSdf

MAGIC = b"AOCTSDF\0"
FORMAT_VERSION = 1
_HEADER = struct.Struct("<8sII")


def _from_descriptor(descriptor: Dict[str, Any], transform: UnitTransform, flat: np.ndarray) -> MlpSdf:
    try:
        activation = Activation(descriptor["activation"]["kind"], float(descriptor["activation"]["beta"]))
        widths = [int(w) for w in descriptor["widths"]]
        skip = descriptor.get("skip_layer")
    except (KeyError, TypeError, ValueError) as exc:
        raise ModelFormatError(f"bad model descriptor: {exc}") from exc
    skeleton_w, skeleton_b = [], []
    for l in range(len(widths) - 1):
        out_dim, in_dim = MlpSdf._layer_shape(widths, skip, l)
        skeleton_w.append(np.zeros((out_dim, in_dim)))
        skeleton_b.append(np.zeros(out_dim))
    skeleton = MlpSdf(widths, skeleton_w, skeleton_b, activation, skip, transform)
    if flat.size != skeleton.n_parameters:
        raise ModelFormatError(f"expected {skeleton.n_parameters} parameters, found {flat.size}")
    return skeleton.with_flat_parameters(flat)


def save_model(net: MlpSdf, path) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    descriptor = json.dumps(net.describe(), sort_keys=True).encode("utf-8")
    transform = np.array([*net.unit_transform.center, net.unit_transform.scale], dtype="<f8")
    with open(path, "wb") as fh:
        fh.write(_HEADER.pack(MAGIC, FORMAT_VERSION, len(descriptor)))
        fh.write(descriptor)
        fh.write(transform.tobytes())
        fh.write(net.get_flat_parameters().astype("<f8").tobytes())
    return path


def load_model(path) -> MlpSdf:
    raw = Path(path).read_bytes()
    if len(raw) < _HEADER.size:
        raise ModelFormatError(f"{path}: truncated header")
    magic, version, length = _HEADER.unpack_from(raw, 0)
    if magic != MAGIC:
        raise ModelFormatError(f"{path}: not a model file")
    if version != FORMAT_VERSION:
        raise ModelFormatError(f"{path}: unsupported model version {version}")
    offset = _HEADER.size
    try:
        descriptor = json.loads(raw[offset : offset + length].decode("utf-8"))
    except (UnicodeDecodeError, json.JSONDecodeError) as exc:
        raise ModelFormatError(f"{path}: bad descriptor") from exc
    offset += length
    rest = raw[offset:]
    if len(rest) < 32 or len(rest) % 8:
        raise ModelFormatError(f"{path}: truncated parameter block")
    values = np.frombuffer(rest, dtype="<f8").astype(np.float64)
    transform = UnitTransform(tuple(float(v) for v in values[:3]), float(values[3]))
    return _from_descriptor(descriptor, transform, values[4:])


def export_json(net: MlpSdf, path) -> Path:
    """Human-readable export: descriptor, transform, and per-layer weights."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    payload = {
        "format_version": FORMAT_VERSION,
        **net.describe(),
        "unit_transform": net.unit_transform.to_dict(),
        "layers": [{"weight": w.tolist(), "bias": b.tolist()} for w, b in zip(net.weights, net.biases)],
    }
    path.write_text(json.dumps(payload))
    return path


def import_json(path) -> MlpSdf:
    try:
        payload = json.loads(Path(path).read_text())
        layers = payload["layers"]
        flat = np.concatenate(
            [np.concatenate([np.asarray(l["weight"], dtype=np.float64).ravel(), l["bias"]]) for l in layers]
        )
        transform = UnitTransform.from_dict(payload["unit_transform"])
    except (KeyError, TypeError, ValueError) as exc:
        raise ModelFormatError(f"{path}: bad JSON model: {exc}") from exc
    return _from_descriptor(payload, transform, flat)
