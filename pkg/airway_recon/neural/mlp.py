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
Coordinate MLP signed-distance field with an exact second-order gradient path.

The forward pass carries each layer's value together with its Jacobian with
respect to the input point, so one pass yields s = f(q) and g = grad_q f(q).
`backward` pulls adjoints of (s, g) back to the parameters, which gives exact
parameter gradients of losses that depend on the spatial gradient itself.

Layer l maps a_in -> z = a_in W^T + b and J_in -> Z = J_in W^T; hidden layers
then apply a = act(z), J = act'(z) * Z. The skip layer consumes
concat(a, q) / sqrt(2) (and concat(J, I) / sqrt(2)).
"""

import math
from dataclasses import dataclass
from typing import Any, Dict, List, Optional, Sequence, Tuple

import numpy as np
from scipy.special import expit

from airway_recon.exceptions import DomainError, NumericError
from airway_recon.extract.cloud import UnitTransform

INPUT_DIM = 3
_SQRT2 = math.sqrt(2.0)


@dataclass(frozen=True)
class Activation:
    """Hidden nonlinearity: softplus(beta*z)/beta, or ReLU (derivatives defined a.e.)."""

    kind: str = "softplus"
    beta: float = 100.0

    def __post_init__(self):
        if self.kind not in ("softplus", "relu"):
            raise DomainError(f"unknown activation '{self.kind}'")
        if self.kind == "softplus" and not self.beta > 0:
            raise DomainError("softplus beta must be > 0")

    def value(self, z: np.ndarray) -> np.ndarray:
        if self.kind == "relu":
            return np.maximum(z, 0.0)
        return np.logaddexp(0.0, self.beta * z) / self.beta

    def derivatives(self, z: np.ndarray) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
        if self.kind == "relu":
            step = (z > 0.0).astype(z.dtype)
            return np.maximum(z, 0.0), step, np.zeros_like(z)
        sig = expit(self.beta * z)
        return self.value(z), sig, self.beta * sig * (1.0 - sig)

    def to_dict(self) -> Dict[str, Any]:
        return {"kind": self.kind, "beta": self.beta}


@dataclass
class ForwardCache:
    inputs: List[np.ndarray]  # a_in per layer (B, in)
    input_jacobians: List[np.ndarray]  # J_in per layer (B, 3, in)
    pre_jacobians: List[np.ndarray]  # Z per layer (B, 3, out)
    first: List[Optional[np.ndarray]]  # act'(z) per hidden layer
    second: List[Optional[np.ndarray]]  # act''(z) per hidden layer


class MlpSdf:
    """Immutable MLP f: unit-space R^3 -> R, bound to mm through `unit_transform`."""

    def __init__(
        self,
        widths: Sequence[int],
        weights: Sequence[np.ndarray],
        biases: Sequence[np.ndarray],
        activation: Activation = Activation(),
        skip_layer: Optional[int] = None,
        unit_transform: UnitTransform = UnitTransform(),
    ):
        widths = tuple(int(w) for w in widths)
        if len(widths) < 2 or widths[0] != INPUT_DIM or widths[-1] != 1:
            raise DomainError(f"widths must run from {INPUT_DIM} to 1, got {widths}")
        n_layers = len(widths) - 1
        if skip_layer is not None and not (1 <= skip_layer < n_layers):
            raise DomainError(f"skip layer {skip_layer} outside [1, {n_layers})")
        if len(weights) != n_layers or len(biases) != n_layers:
            raise DomainError("one weight matrix and one bias vector per layer required")

        frozen_w, frozen_b = [], []
        for l, (w, b) in enumerate(zip(weights, biases)):
            w = np.array(w, dtype=np.float64)
            b = np.array(b, dtype=np.float64)
            expected = self._layer_shape(widths, skip_layer, l)
            if w.shape != expected or b.shape != (expected[0],):
                raise DomainError(f"layer {l}: weight {w.shape} / bias {b.shape}, expected {expected}")
            if not (np.isfinite(w).all() and np.isfinite(b).all()):
                raise NumericError(f"layer {l} has non-finite parameters")
            w.setflags(write=False)
            b.setflags(write=False)
            frozen_w.append(w)
            frozen_b.append(b)

        self.widths = widths
        self.skip_layer = skip_layer
        self.activation = activation
        self.unit_transform = unit_transform
        self.weights: Tuple[np.ndarray, ...] = tuple(frozen_w)
        self.biases: Tuple[np.ndarray, ...] = tuple(frozen_b)

    @staticmethod
    def _layer_shape(widths, skip_layer, l) -> Tuple[int, int]:
        out_dim = widths[l + 1]
        if skip_layer is not None and l + 1 == skip_layer:
            out_dim -= INPUT_DIM
        in_dim = widths[l]
        return out_dim, in_dim

    @property
    def n_layers(self) -> int:
        return len(self.weights)

    @property
    def n_parameters(self) -> int:
        return sum(w.size + b.size for w, b in zip(self.weights, self.biases))

    # Construction

    @classmethod
    def geometric_init(
        cls,
        hidden_layers: int = 8,
        hidden_width: int = 256,
        skip_layer: Optional[int] = 4,
        radius: float = 0.5,
        activation: Activation = Activation(),
        rng: Optional[np.random.Generator] = None,
        unit_transform: UnitTransform = UnitTransform(),
    ) -> "MlpSdf":
        """Initialization under which f(q) approximates |q| - radius (negative inside)."""
        rng = rng if rng is not None else np.random.default_rng(0)
        widths = (INPUT_DIM,) + (hidden_width,) * hidden_layers + (1,)
        if skip_layer is not None and not (1 <= skip_layer <= hidden_layers):
            skip_layer = None
        weights, biases = [], []
        n_layers = len(widths) - 1
        for l in range(n_layers):
            out_dim, in_dim = cls._layer_shape(widths, skip_layer, l)
            if l == n_layers - 1:
                w = rng.normal(math.sqrt(math.pi) / math.sqrt(in_dim), 1e-4, size=(out_dim, in_dim))
                b = np.full(out_dim, -radius)
            else:
                w = rng.normal(0.0, math.sqrt(2.0) / math.sqrt(out_dim), size=(out_dim, in_dim))
                b = np.zeros(out_dim)
            weights.append(w)
            biases.append(b)
        return cls(widths, weights, biases, activation, skip_layer, unit_transform)

    @classmethod
    def random(
        cls,
        widths: Sequence[int],
        rng: np.random.Generator,
        activation: Activation = Activation(),
        skip_layer: Optional[int] = None,
        scale: float = 1.0,
    ) -> "MlpSdf":
        weights, biases = [], []
        for l in range(len(widths) - 1):
            out_dim, in_dim = cls._layer_shape(widths, skip_layer, l)
            weights.append(rng.normal(0.0, scale / math.sqrt(in_dim), size=(out_dim, in_dim)))
            biases.append(rng.normal(0.0, 0.1 * scale, size=out_dim))
        return cls(widths, weights, biases, activation, skip_layer)

    def with_parameters(self, weights, biases) -> "MlpSdf":
        return MlpSdf(self.widths, weights, biases, self.activation, self.skip_layer, self.unit_transform)

    def with_transform(self, unit_transform: UnitTransform) -> "MlpSdf":
        return MlpSdf(self.widths, self.weights, self.biases, self.activation, self.skip_layer, unit_transform)

    def get_flat_parameters(self) -> np.ndarray:
        return np.concatenate([np.concatenate([w.ravel(), b]) for w, b in zip(self.weights, self.biases)])

    def unflatten(self, flat: np.ndarray) -> Tuple[List[np.ndarray], List[np.ndarray]]:
        flat = np.asarray(flat, dtype=np.float64)
        if flat.size != self.n_parameters:
            raise DomainError(f"expected {self.n_parameters} parameters, got {flat.size}")
        weights, biases, offset = [], [], 0
        for w, b in zip(self.weights, self.biases):
            weights.append(flat[offset : offset + w.size].reshape(w.shape))
            offset += w.size
            biases.append(flat[offset : offset + b.size])
            offset += b.size
        return weights, biases

    def with_flat_parameters(self, flat: np.ndarray) -> "MlpSdf":
        return self.with_parameters(*self.unflatten(flat))

    # Evaluation

    def _check(self, z: np.ndarray, layer: int) -> None:
        if not np.isfinite(z).all():
            bad = int((~np.isfinite(z)).sum())
            raise NumericError(
                f"non-finite pre-activation in layer {layer}",
                [{"layer": layer, "non_finite": bad, "shape": list(z.shape)}],
            )

    def evaluate(self, points) -> np.ndarray:
        """f at unit-space points (B, 3) -> (B,)."""
        q = np.atleast_2d(np.asarray(points, dtype=np.float64))
        a = q
        last = self.n_layers - 1
        for l, (w, b) in enumerate(zip(self.weights, self.biases)):
            if l == self.skip_layer:
                a = np.concatenate([a, q], axis=1) / _SQRT2
            z = a @ w.T + b
            self._check(z, l)
            a = z if l == last else self.activation.value(z)
        return a[:, 0]

    def forward(self, points, keep: bool = False):
        """(s, g) at unit-space points, plus the cache `backward` needs when keep=True."""
        q = np.atleast_2d(np.asarray(points, dtype=np.float64))
        batch = q.shape[0]
        eye = np.broadcast_to(np.eye(INPUT_DIM), (batch, INPUT_DIM, INPUT_DIM))
        a, jac = q, eye
        cache = ForwardCache([], [], [], [], []) if keep else None
        last = self.n_layers - 1

        for l, (w, b) in enumerate(zip(self.weights, self.biases)):
            if l == self.skip_layer:
                a = np.concatenate([a, q], axis=1) / _SQRT2
                jac = np.concatenate([jac, eye], axis=2) / _SQRT2
            z = a @ w.T + b
            big_z = jac @ w.T
            self._check(z, l)
            if keep:
                cache.inputs.append(a)
                cache.input_jacobians.append(jac)
                cache.pre_jacobians.append(big_z)
            if l == last:
                a, jac = z, big_z
                if keep:
                    cache.first.append(None)
                    cache.second.append(None)
            else:
                a, d1, d2 = self.activation.derivatives(z)
                jac = big_z * d1[:, None, :]
                if keep:
                    cache.first.append(d1)
                    cache.second.append(d2)

        s = a[:, 0]
        g = jac[:, :, 0]
        if not np.isfinite(g).all():
            raise NumericError("non-finite spatial gradient", [{"layer": last, "output": "gradient"}])
        return (s, g, cache) if keep else (s, g)

    def evaluate_with_gradient(self, points) -> Tuple[np.ndarray, np.ndarray]:
        return self.forward(points)

    def backward(
        self, cache: ForwardCache, s_bar: np.ndarray, g_bar: np.ndarray
    ) -> Tuple[List[np.ndarray], List[np.ndarray]]:
        """Parameter gradients of sum(s_bar * s + g_bar . g) through the cached pass."""
        z_bar = np.asarray(s_bar, dtype=np.float64)[:, None]
        big_z_bar = np.asarray(g_bar, dtype=np.float64)[:, :, None]
        grad_w: List[np.ndarray] = [None] * self.n_layers
        grad_b: List[np.ndarray] = [None] * self.n_layers
        batch = z_bar.shape[0]

        for l in range(self.n_layers - 1, -1, -1):
            w = self.weights[l]
            if l != self.n_layers - 1:
                a_bar, jac_bar = z_bar, big_z_bar  # adjoints of this layer's outputs
                d1, d2 = cache.first[l], cache.second[l]
                big_z = cache.pre_jacobians[l]
                z_bar = a_bar * d1 + np.einsum("bko,bko->bo", jac_bar, big_z) * d2
                big_z_bar = jac_bar * d1[:, None, :]

            a_in = cache.inputs[l]
            jac_in = cache.input_jacobians[l]
            out_dim, in_dim = w.shape
            grad_w[l] = z_bar.T @ a_in + big_z_bar.reshape(batch * INPUT_DIM, out_dim).T @ jac_in.reshape(
                batch * INPUT_DIM, in_dim
            )
            grad_b[l] = z_bar.sum(axis=0)

            if l == 0:
                break
            z_bar = z_bar @ w
            big_z_bar = big_z_bar @ w
            if l == self.skip_layer:
                keep_dim = in_dim - INPUT_DIM
                z_bar = z_bar[:, :keep_dim] / _SQRT2
                big_z_bar = big_z_bar[:, :, :keep_dim] / _SQRT2

        return grad_w, grad_b

    def flatten_gradients(self, grad_w, grad_b) -> np.ndarray:
        return np.concatenate([np.concatenate([gw.ravel(), gb]) for gw, gb in zip(grad_w, grad_b)])

    def describe(self) -> Dict[str, Any]:
        return {
            "widths": list(self.widths),
            "skip_layer": self.skip_layer,
            "activation": self.activation.to_dict(),
        }


def eval_with_gradient(net: MlpSdf, q) -> Tuple[float, np.ndarray]:
    """Signed distance and spatial gradient at a single unit-space point."""
    q = np.asarray(q, dtype=np.float64).reshape(1, INPUT_DIM)
    if not np.isfinite(q).all():
        raise DomainError("query point must be finite")
    s, g = net.forward(q)
    return float(s[0]), g[0]
