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
Helical scan simulation over analytic phantoms.

Every A-line is cast as a ray from the catheter (at the phantom's
centerline offset, height z_cath(t)) along (sin(phi)sin(theta),
sin(phi)cos(theta), -cos(phi)), so that a hit at distance d reproduces
r = d*sin(phi) and z = z_cath - d*cos(phi) exactly.
"""

import math
from dataclasses import dataclass, field
from typing import Any, Dict, List, Optional, Sequence

import numpy as np
from celery.utils.log import get_task_logger

from airway_recon.exceptions import ConfigError, DomainError
from airway_recon.extract.boundary import SOURCE_GROUND_TRUTH, ALineBoundary, SegmentationMask
from airway_recon.geometry.helix import aline_poses, ray_directions, sample_times
from airway_recon.geometry.types import PolarFrame, ScanConfig
from airway_recon.phantom.shape import Phantom

logger = get_task_logger(__name__)

# Bracketing grid along each ray, then bisection to the residual tolerance.
_BRACKET_STEPS = 512
_BISECTION_ITERATIONS = 64
RESIDUAL_TOLERANCE = 1e-9


@dataclass(frozen=True)
class NoiseParams:
    speckle: bool = True
    speckle_looks: float = 4.0  # gamma shape; larger is milder
    background: float = 0.08
    band_thickness: float = 0.6  # mm
    decay_length: float = 0.35  # mm
    mask_jitter_px: float = 0.0
    mask_dropout: float = 0.0

    @classmethod
    def noiseless(cls) -> "NoiseParams":
        return cls(speckle=False)

    def diagnostics(self) -> List[str]:
        problems = []
        if self.speckle and not self.speckle_looks > 0:
            problems.append("noise.speckle_looks must be > 0")
        if not (0.0 <= self.background < 1.0):
            problems.append("noise.background must lie in [0, 1)")
        if not self.band_thickness > 0 or not self.decay_length > 0:
            problems.append("noise.band_thickness and noise.decay_length must be > 0")
        if self.mask_jitter_px < 0:
            problems.append("noise.mask_jitter_px must be >= 0")
        if not (0.0 <= self.mask_dropout < 1.0):
            problems.append("noise.mask_dropout must lie in [0, 1)")
        return problems

    def to_dict(self) -> Dict[str, Any]:
        return dict(self.__dict__)


@dataclass
class GroundTruthScan:
    """Simulated frames, masks and exact boundaries for frames `frame_indices`."""

    frames: np.ndarray  # (M, H, N) uint8 intensity
    masks: np.ndarray  # (M, H, N) uint8, 1 = lumen
    boundaries: np.ndarray  # (M, N) d_tiss mm, NaN = no wall
    times: np.ndarray  # (M, N) s
    phantom: Phantom
    cfg: ScanConfig
    frame_indices: np.ndarray = field(default=None)

    def __post_init__(self):
        if self.frame_indices is None:
            self.frame_indices = np.arange(self.boundaries.shape[0])

    def polar_frame(self, k: int) -> PolarFrame:
        return PolarFrame(
            self.frames[k].astype(np.float64) / 255.0, int(self.frame_indices[k])
        )

    def polar_frames(self) -> List[PolarFrame]:
        return [self.polar_frame(k) for k in range(len(self.frame_indices))]

    def segmentation_masks(self) -> List[SegmentationMask]:
        return [SegmentationMask(m, int(i)) for m, i in zip(self.masks, self.frame_indices)]

    def boundary_records(self) -> List[ALineBoundary]:
        return [
            ALineBoundary(int(i), d.copy(), SOURCE_GROUND_TRUTH)
            for d, i in zip(self.boundaries, self.frame_indices)
        ]


def coverage_diagnostics(ph: Phantom, cfg: ScanConfig) -> List[str]:
    """The pull-back plus the axial reach of the beam must stay inside the phantom."""
    margin = cfg.d_max * abs(math.cos(cfg.phi_cath))
    z_low, z_high = cfg.z_range
    problems = []
    if z_low - margin < 0.0 or z_high + margin > ph.length:
        problems.append(
            f"pull-back covers z in [{z_low:.3f}, {z_high:.3f}] mm (beam reach +-{margin:.3f} mm) "
            f"but the phantom spans [0, {ph.length}] mm"
        )
    return problems


def _wall_residual(ph: Phantom, points: np.ndarray):
    """Radial distance minus wall radius (phantom frame); invalid outside the phantom's z-span."""
    r = np.hypot(points[..., 0], points[..., 1])
    theta = np.arctan2(points[..., 0], points[..., 1])
    z = points[..., 2]
    valid = (z >= 0.0) & (z <= ph.length)
    rho = ph.radius_arrays(np.clip(z, 0.0, ph.length), theta)
    return r - rho, valid


def cast_alines(ph: Phantom, times, cfg: ScanConfig) -> np.ndarray:
    """Line-of-sight wall distance for each sample time; NaN where no wall lies within d_max."""
    times = np.atleast_1d(np.asarray(times, dtype=np.float64))
    theta, z_cath = aline_poses(times, cfg)
    directions = ray_directions(theta, cfg.phi_cath)
    origins = np.stack(
        [
            np.full_like(z_cath, ph.centerline_offset[0]),
            np.full_like(z_cath, ph.centerline_offset[1]),
            z_cath,
        ],
        axis=-1,
    )
    d_max = cfg.d_max
    sin_phi, cos_phi = math.sin(cfg.phi_cath), math.cos(cfg.phi_cath)

    if ph.is_straight_circular and ph.centerline_offset == (0.0, 0.0):
        d = np.full_like(times, ph.base_radius / sin_phi)
        hit_z = z_cath - d * cos_phi
        ok = (d <= d_max) & (hit_z >= 0.0) & (hit_z <= ph.length)
        return np.where(ok, d, np.nan)

    start, start_valid = _wall_residual(ph, origins)
    if np.any(start_valid & (start >= 0.0)):
        raise DomainError("catheter lies outside the lumen for some A-lines")

    # Bracket the first inside -> wall transition on a uniform grid.
    steps = np.linspace(0.0, d_max, _BRACKET_STEPS + 1)
    samples = origins[:, None, :] + steps[None, :, None] * directions[:, None, :]
    residual, valid = _wall_residual(ph, samples)
    crossed = valid & (residual >= 0.0)
    left_the_phantom = ~valid
    has_hit = crossed.any(axis=1)
    first_hit = np.argmax(crossed, axis=1)
    # A ray that leaves the phantom's z-span before meeting the wall is an open-end miss.
    first_exit = np.where(left_the_phantom.any(axis=1), np.argmax(left_the_phantom, axis=1), _BRACKET_STEPS + 1)
    has_hit &= first_hit < first_exit

    d = np.full(times.shape, np.nan)
    if not np.any(has_hit):
        return d

    rays = np.flatnonzero(has_hit)
    lo = steps[first_hit[rays] - 1]
    hi = steps[first_hit[rays]]
    o, u = origins[rays], directions[rays]
    for _ in range(_BISECTION_ITERATIONS):
        mid = 0.5 * (lo + hi)
        res, _ = _wall_residual(ph, o + mid[:, None] * u)
        outside = res >= 0.0
        hi = np.where(outside, mid, hi)
        lo = np.where(outside, lo, mid)
        if float(np.max(hi - lo)) < RESIDUAL_TOLERANCE * 1e-3:
            break
    d[rays] = 0.5 * (lo + hi)
    return d


def cast_aline(ph: Phantom, t: float, cfg: ScanConfig) -> Optional[float]:
    d = float(cast_alines(ph, [t], cfg)[0])
    return None if math.isnan(d) else d


def render_frame(d_tiss: np.ndarray, cfg: ScanConfig, noise: NoiseParams, rng) -> tuple:
    """Intensity (uint8) and lumen mask (uint8) for one frame of boundaries."""
    height = cfg.frame_height
    depth = (np.arange(height, dtype=np.float64) * cfg.d_max / height)[:, None]

    wall = np.where(np.isnan(d_tiss), np.inf, d_tiss)[None, :]
    beyond = depth - wall
    band = (beyond >= 0.0) & (beyond < noise.band_thickness)
    intensity = np.where(
        band,
        noise.background + (1.0 - noise.background) * np.exp(-np.clip(beyond, 0.0, None) / noise.decay_length),
        noise.background,
    )
    if noise.speckle:
        looks = noise.speckle_looks
        intensity = intensity * rng.gamma(looks, 1.0 / looks, size=intensity.shape)
    frame = np.round(np.clip(intensity, 0.0, 1.0) * 255.0).astype(np.uint8)

    mask_wall = np.where(np.isnan(d_tiss), -np.inf, d_tiss)
    if noise.mask_jitter_px > 0:
        mask_wall = mask_wall + rng.normal(0.0, noise.mask_jitter_px * cfg.pixel_size, size=mask_wall.shape)
    mask = (depth < mask_wall[None, :]).astype(np.uint8)
    if noise.mask_dropout > 0:
        dropped = rng.random(mask.shape[1]) < noise.mask_dropout
        mask[:, dropped] = 0
    return frame, mask


def simulate_frames(
    ph: Phantom,
    cfg: ScanConfig,
    noise: NoiseParams,
    seed: int,
    frame_indices: Sequence[int],
):
    """Simulate a subset of frames; each frame draws from its own (seed, frame) stream."""
    frame_indices = np.asarray(frame_indices, dtype=np.int64)
    n = cfg.n_columns
    columns = np.arange(n)
    frames = np.empty((len(frame_indices), cfg.frame_height, n), dtype=np.uint8)
    masks = np.empty_like(frames)
    boundaries = np.empty((len(frame_indices), n))
    times = np.empty((len(frame_indices), n))

    for k, i in enumerate(frame_indices):
        t = sample_times(np.full(n, i), columns, cfg)
        d = cast_alines(ph, t, cfg)
        missing = int(np.isnan(d).sum())
        if missing:
            logger.warning(f"Frame {i}: {missing} A-lines found no wall within d_max")
        rng = np.random.default_rng([int(seed), int(i)])
        frames[k], masks[k] = render_frame(d, cfg, noise, rng)
        boundaries[k] = d
        times[k] = t
        logger.debug(f"Simulated frame {i}: d_tiss in [{np.nanmin(d):.4f}, {np.nanmax(d):.4f}] mm")
    return frames, masks, boundaries, times


def simulate_scan(
    ph: Phantom,
    cfg: ScanConfig,
    noise: Optional[NoiseParams] = None,
    seed: int = 0,
) -> GroundTruthScan:
    noise = noise or NoiseParams()
    problems = cfg.diagnostics() + ph.diagnostics() + noise.diagnostics()
    if not problems:
        problems = coverage_diagnostics(ph, cfg)
    if problems:
        raise ConfigError("; ".join(problems))

    logger.info(
        f"Simulating {cfg.n_frames} frames of {cfg.n_columns} A-lines (seed {seed})"
    )
    indices = np.arange(cfg.n_frames)
    frames, masks, boundaries, times = simulate_frames(ph, cfg, noise, seed, indices)
    return GroundTruthScan(frames, masks, boundaries, times, ph, cfg, indices)
