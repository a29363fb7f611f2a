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

import math

import numpy as np
from django.test import SimpleTestCase

from airway_recon.exceptions import ConfigError, DomainError
from airway_recon.extract import SOURCE_GROUND_TRUTH, boundary_from_mask, pointcloud_from_scan
from airway_recon.geometry.helix import cartesian_arrays, catheter_z, cylindrical_arrays
from airway_recon.phantom import (
    NoiseParams,
    Phantom,
    Stenosis,
    cast_aline,
    cast_alines,
    coverage_diagnostics,
    phantom_radius,
    phantom_sdf,
    sample_phantom_surface,
    sdf_arrays,
    simulate_frames,
    simulate_scan,
)
from airway_recon.tests.helpers import small_scan


def irregular_phantom() -> Phantom:
    return Phantom(
        base_radius=3.0,
        length=40.0,
        stenoses=(Stenosis(z0=6.0, depth=0.35, width=1.5),),
        ellipticity=0.85,
        ellipse_angle=0.4,
        centerline_offset=(0.3, -0.2),
    )


class PhantomRadiusTests(SimpleTestCase):
    def test_plain_tube_is_constant(self):
        ph = Phantom(base_radius=3.0)
        for z, theta in ((0.0, 0.0), (12.5, 1.0), (60.0, 5.5)):
            self.assertEqual(phantom_radius(ph, z, theta), 3.0)

    def test_stenosis_waist(self):
        ph = Phantom(stenoses=(Stenosis(z0=20.0, depth=0.5, width=2.0),))
        self.assertAlmostEqual(phantom_radius(ph, 20.0, 0.7), 1.5, places=12)

    def test_stenosis_one_sigma_away(self):
        ph = Phantom(stenoses=(Stenosis(z0=20.0, depth=0.5, width=1.0),))
        expected = 3.0 * (1.0 - 0.5 * math.exp(-0.5))
        self.assertAlmostEqual(phantom_radius(ph, 21.0, 0.0), expected, places=12)
        self.assertAlmostEqual(expected, 2.0902, places=4)

    def test_elliptic_axes(self):
        ph = Phantom(ellipticity=0.8)
        self.assertAlmostEqual(phantom_radius(ph, 10.0, 0.0), 3.0, places=12)
        self.assertAlmostEqual(phantom_radius(ph, 10.0, math.pi / 2), 2.4, places=12)

    def test_outside_the_phantom(self):
        ph = Phantom(length=10.0)
        with self.assertRaises(DomainError):
            phantom_radius(ph, -0.1, 0.0)
        with self.assertRaises(DomainError):
            phantom_radius(ph, 10.1, 0.0)


class PhantomSdfTests(SimpleTestCase):
    def test_circular_tube_values(self):
        ph = Phantom(base_radius=3.0)
        self.assertAlmostEqual(phantom_sdf(ph, (0.0, 2.0, 10.0)), -1.0, places=12)
        self.assertAlmostEqual(phantom_sdf(ph, (3.0, 0.0, 10.0)), 0.0, places=12)
        self.assertAlmostEqual(phantom_sdf(ph, (0.0, -4.5, 10.0)), 1.5, places=12)

    def test_elliptic_minor_axis(self):
        ph = Phantom(ellipticity=0.8)
        self.assertAlmostEqual(phantom_sdf(ph, (2.9, 0.0, 10.0)), 0.5, delta=1e-6)
        self.assertAlmostEqual(phantom_sdf(ph, (2.2, 0.0, 10.0)), -0.2, delta=1e-6)

    def test_stenosis_waist_distances(self):
        ph = Phantom(stenoses=(Stenosis(z0=20.0, depth=0.5, width=3.0),))
        self.assertAlmostEqual(phantom_sdf(ph, (0.0, 1.0, 20.0)), -0.5, delta=1e-6)
        self.assertAlmostEqual(phantom_sdf(ph, (0.0, 2.0, 20.0)), 0.5, delta=1e-6)

    def test_wall_samples_are_zero_crossings(self):
        ph = irregular_phantom()
        wall = ph.from_catheter_frame(sample_phantom_surface(ph, (2.0, 12.0), 300, seed=3))
        self.assertLess(np.abs(sdf_arrays(ph, wall)).max(), 1e-6 * ph.base_radius)

    def test_open_ends_by_default(self):
        ph = Phantom(length=10.0)
        self.assertAlmostEqual(phantom_sdf(ph, (0.0, 1.0, -2.0)), -math.hypot(2.0, 2.0), places=12)
        capped = Phantom(length=10.0, end_caps=True)
        self.assertAlmostEqual(phantom_sdf(capped, (0.0, 1.0, -2.0)), 2.0, places=12)


class CastAlineTests(SimpleTestCase):
    def test_planar_rays(self):
        cfg = small_scan()
        self.assertAlmostEqual(cast_aline(Phantom(), 0.3, cfg), 3.0, places=12)

    def test_oblique_rays(self):
        cfg = small_scan(phi_cath=math.pi / 3)
        self.assertAlmostEqual(cast_aline(Phantom(), 0.3, cfg), 2.0 * math.sqrt(3.0), places=12)

    def test_stenosis_waist_by_bisection(self):
        cfg = small_scan()
        z0 = float(catheter_z(0.0, cfg))
        ph = Phantom(stenoses=(Stenosis(z0=z0, depth=0.5, width=2.0),))
        d = cast_aline(ph, 0.0, cfg)
        self.assertAlmostEqual(d, 1.5, delta=1e-8)
        self.assertAlmostEqual(d, phantom_radius(ph, z0, 0.0), delta=1e-8)

    def test_hits_lie_on_the_wall(self):
        ph = irregular_phantom()
        cfg = small_scan(phi_cath=1.3)
        frames = np.repeat(np.arange(cfg.n_frames), cfg.n_columns)
        columns = np.tile(np.arange(cfg.n_columns), cfg.n_frames)
        times = (frames * cfg.n_columns + columns) / cfg.f_samp
        d = cast_alines(ph, times, cfg)
        self.assertFalse(np.isnan(d).any())

        hits = cartesian_arrays(*cylindrical_arrays(d, times, cfg))
        residual = sdf_arrays(ph, ph.from_catheter_frame(hits))
        self.assertLess(np.abs(residual).max(), 1e-6)

    def test_beyond_reach_is_reported_not_raised(self):
        cfg = small_scan(phi_cath=math.pi / 6, d_max=5.0)
        self.assertIsNone(cast_aline(Phantom(), 0.0, cfg))

    def test_open_end_miss(self):
        cfg = small_scan(phi_cath=math.pi / 6, z_start=1.0)
        ph = Phantom(centerline_offset=(0.5, 0.0))
        self.assertIsNone(cast_aline(ph, 0.0, cfg))

    def test_catheter_outside_lumen(self):
        ph = Phantom(centerline_offset=(3.5, 0.0))
        with self.assertRaises(DomainError):
            cast_aline(ph, 0.0, small_scan())


class SimulateScanTests(SimpleTestCase):
    def test_noiseless_cylinder_masks(self):
        cfg = small_scan(n_columns=32, n_frames=3, frame_height=600, d_max=6.0)
        scan = simulate_scan(Phantom(base_radius=3.0), cfg, NoiseParams.noiseless(), seed=0)
        self.assertEqual(scan.masks.shape, (3, 600, 32))
        self.assertTrue(np.all(scan.masks.sum(axis=1) == 300))
        self.assertTrue(np.all(scan.boundaries == 3.0))

    def test_dimensions_follow_config(self):
        cfg = small_scan(n_columns=16, n_frames=5, frame_height=40)
        scan = simulate_scan(Phantom(), cfg, seed=1)
        self.assertEqual(scan.frames.shape, (5, 40, 16))
        self.assertEqual(scan.frames.dtype, np.uint8)
        self.assertEqual(scan.boundaries.shape, (5, 16))
        records = scan.boundary_records()
        self.assertEqual([r.frame_index for r in records], [0, 1, 2, 3, 4])
        self.assertTrue(all(r.source == SOURCE_GROUND_TRUTH for r in records))

    def test_stenosis_minimum_near_waist(self):
        cfg = small_scan(n_columns=32, n_frames=20)
        z0 = 10.2
        ph = Phantom(stenoses=(Stenosis(z0=z0, depth=0.4, width=2.0),))
        scan = simulate_scan(ph, cfg, NoiseParams.noiseless())
        k, j = np.unravel_index(np.argmin(scan.boundaries), scan.boundaries.shape)
        z_at_min = float(catheter_z(scan.times[k, j], cfg))
        self.assertLessEqual(abs(z_at_min - z0), cfg.v_cath / cfg.f_samp + 1e-12)

    def test_mask_boundary_duality(self):
        cfg = small_scan(n_columns=48, n_frames=3, frame_height=200)
        ph = irregular_phantom()
        scan = simulate_scan(ph, cfg, NoiseParams.noiseless())
        half_pixel = cfg.d_max / (2 * cfg.frame_height)
        for mask, truth in zip(scan.segmentation_masks(), scan.boundaries):
            recovered = boundary_from_mask(mask, cfg).d_tiss
            self.assertLessEqual(np.abs(recovered - truth).max(), half_pixel + 1e-12)

    def test_deterministic_for_a_seed(self):
        cfg = small_scan(n_columns=16, n_frames=3, frame_height=32)
        noise = NoiseParams(mask_jitter_px=1.0, mask_dropout=0.1)
        a = simulate_scan(Phantom(), cfg, noise, seed=11)
        b = simulate_scan(Phantom(), cfg, noise, seed=11)
        c = simulate_scan(Phantom(), cfg, noise, seed=12)
        np.testing.assert_array_equal(a.frames, b.frames)
        np.testing.assert_array_equal(a.masks, b.masks)
        self.assertFalse(np.array_equal(a.frames, c.frames))

    def test_frames_are_schedule_independent(self):
        cfg = small_scan(n_columns=16, n_frames=4, frame_height=32)
        noise = NoiseParams()
        full = simulate_scan(Phantom(), cfg, noise, seed=5)
        frames, masks, boundaries, _ = simulate_frames(Phantom(), cfg, noise, 5, [2])
        np.testing.assert_array_equal(frames[0], full.frames[2])
        np.testing.assert_array_equal(masks[0], full.masks[2])
        np.testing.assert_array_equal(boundaries[0], full.boundaries[2])

    def test_ground_truth_cloud_on_cylinder(self):
        cfg = small_scan(n_columns=32, n_frames=4)
        scan = simulate_scan(Phantom(), cfg, NoiseParams.noiseless())
        cloud = pointcloud_from_scan(scan.boundary_records(), cfg)
        self.assertEqual(len(cloud), 4 * 32)
        r = np.hypot(cloud.points[:, 0], cloud.points[:, 1])
        self.assertLess(np.abs(r - 3.0).max(), 1e-9)

    def test_short_phantom_is_a_config_error(self):
        cfg = small_scan()
        self.assertTrue(coverage_diagnostics(Phantom(length=6.0), cfg))
        with self.assertRaises(ConfigError):
            simulate_scan(Phantom(length=6.0), cfg)

    def test_invalid_phantom_is_a_config_error(self):
        with self.assertRaises(ConfigError):
            simulate_scan(Phantom(stenoses=(Stenosis(10.0, 1.2, 1.0),)), small_scan())
        with self.assertRaises(ConfigError):
            simulate_scan(Phantom(centerline_offset=(3.0, 0.0)), small_scan())
