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
from hypothesis import given
from hypothesis import strategies as st
from hypothesis.extra.django import SimpleTestCase as PropertyTestCase

from airway_recon.exceptions import ConfigError, DomainError, NoWallError
from airway_recon.geometry import (
    ALineSample,
    CylPoint,
    Point3,
    PolarFrame,
    ScanConfig,
    aline_pose,
    from_cartesian,
    normalize_intensity,
    rectangular_to_cartesian_image,
    sample_time,
    to_cartesian,
    to_cylindrical,
)


class SampleTimeTests(SimpleTestCase):
    def setUp(self):
        self.cfg = ScanConfig()

    def test_raster_order(self):
        self.assertEqual(sample_time(ALineSample(0, 0), self.cfg), 0.0)
        self.assertAlmostEqual(sample_time(ALineSample(0, 512), self.cfg), 0.5)
        self.assertAlmostEqual(sample_time(ALineSample(1, 0), self.cfg), 1.0)

    def test_out_of_range_indices(self):
        with self.assertRaises(DomainError):
            sample_time(ALineSample(0, 1024), self.cfg)
        with self.assertRaises(DomainError):
            sample_time(ALineSample(100, 0), self.cfg)
        with self.assertRaises(DomainError):
            sample_time(ALineSample(-1, 0), self.cfg)


class AlinePoseTests(SimpleTestCase):
    def test_quarter_revolution(self):
        theta, z = aline_pose(0.25, ScanConfig())
        self.assertAlmostEqual(theta, math.pi / 2)
        self.assertAlmostEqual(z, 5.0 + 0.125)

    def test_theta_wraps_each_revolution(self):
        theta, _ = aline_pose(1.25, ScanConfig())
        self.assertAlmostEqual(theta, math.pi / 2)

    def test_reverse_pullback_and_offset(self):
        cfg = ScanConfig(pullback_sign=-1, theta_offset=math.pi)
        theta, z = aline_pose(1.0, cfg)
        self.assertAlmostEqual(theta, math.pi)
        self.assertAlmostEqual(z, 4.5)

    def test_velocity_profile_replaces_constant_speed(self):
        cfg = ScanConfig(velocity_profile=lambda t: 2.0 * np.asarray(t) ** 2)
        _, z = aline_pose(1.0, cfg)
        self.assertAlmostEqual(z, 7.0)

    def test_negative_time(self):
        with self.assertRaises(DomainError):
            aline_pose(-0.1, ScanConfig())


class CylindricalTests(SimpleTestCase):
    def test_perpendicular_beam(self):
        cyl = to_cylindrical(ALineSample(0, 256, 3.0), ScanConfig())
        self.assertAlmostEqual(cyl.r_tiss, 3.0)
        self.assertAlmostEqual(cyl.theta, math.pi / 2)
        self.assertAlmostEqual(cyl.z_tiss, 5.125)

    def test_oblique_beam_moves_hit_down_the_axis(self):
        cfg = ScanConfig(phi_cath=math.pi / 3)
        cyl = to_cylindrical(ALineSample(0, 0, 2.0), cfg)
        self.assertAlmostEqual(cyl.r_tiss, 2.0 * math.sin(math.pi / 3))
        self.assertAlmostEqual(cyl.z_tiss, 5.0 - 2.0 * math.cos(math.pi / 3))

    def test_absent_wall(self):
        with self.assertRaises(NoWallError):
            to_cylindrical(ALineSample(0, 0, None), ScanConfig())
        with self.assertRaises(NoWallError):
            to_cylindrical(ALineSample(0, 0, float("nan")), ScanConfig())

    def test_distance_beyond_depth(self):
        with self.assertRaises(DomainError):
            to_cylindrical(ALineSample(0, 0, 6.5), ScanConfig())

    def test_cartesian_convention(self):
        p = to_cartesian(CylPoint(2.0, 0.0, 1.0))
        self.assertAlmostEqual(p.x, 0.0)
        self.assertAlmostEqual(p.y, 2.0)
        p = to_cartesian(CylPoint(2.0, math.pi / 2, 1.0))
        self.assertAlmostEqual(p.x, 2.0)
        self.assertAlmostEqual(p.y, 0.0, places=12)

    def test_conversions_reject_non_finite_points(self):
        for cyl in (CylPoint(math.nan, 0.0, 1.0), CylPoint(1.0, math.inf, 1.0), CylPoint(-0.5, 0.0, 1.0)):
            with self.assertRaises(DomainError):
                to_cartesian(cyl)
        for point in (Point3(0.0, math.nan, 1.0), Point3(1.0, 0.0, -math.inf)):
            with self.assertRaises(DomainError):
                from_cartesian(point)
        self.assertEqual(to_cartesian(CylPoint(0.0, 0.0, 4.0)), Point3(0.0, 0.0, 4.0))


class RoundTripProperties(PropertyTestCase):
    @given(
        r=st.floats(min_value=1e-3, max_value=10.0),
        theta=st.floats(min_value=0.0, max_value=2.0 * math.pi - 1e-6),
        z=st.floats(min_value=-100.0, max_value=100.0),
    )
    def test_cylindrical_cartesian_round_trip(self, r, theta, z):
        back = from_cartesian(to_cartesian(CylPoint(r, theta, z)))
        self.assertLess(abs(back.r_tiss - r), 1e-12 * max(1.0, r))
        self.assertLess(abs(back.theta - theta), 1e-12)
        self.assertEqual(back.z_tiss, z)


class ScanConfigTests(SimpleTestCase):
    def test_defaults_are_runnable(self):
        self.assertEqual(ScanConfig().diagnostics(), [])
        self.assertAlmostEqual(ScanConfig().pixel_size, 6.0 / 1024)
        self.assertAlmostEqual(ScanConfig().pullback_length, 50.0)

    def test_polar_angle_must_be_open_interval(self):
        problems = ScanConfig(phi_cath=0.0).diagnostics()
        self.assertTrue(any("(0, pi)" in p for p in problems))

    def test_columns_must_match_one_revolution(self):
        problems = ScanConfig(n_columns=512).diagnostics()
        self.assertTrue(any("one frame per revolution" in p for p in problems))
        with self.assertRaises(ConfigError):
            ScanConfig(n_columns=512).validate()

    def test_from_rates(self):
        cfg = ScanConfig.from_rates(n_columns=256, omega=4.0 * math.pi)
        self.assertAlmostEqual(cfg.f_samp, 512.0)
        self.assertEqual(cfg.diagnostics(), [])

    def test_dict_round_trip(self):
        cfg = ScanConfig(theta_offset=0.3, z_start=2.0)
        self.assertEqual(ScanConfig.from_dict(cfg.to_dict()), cfg)


class NormalizeIntensityTests(SimpleTestCase):
    def test_constant_frame_is_degenerate(self):
        out = normalize_intensity(PolarFrame(np.full((8, 8), 0.3), 2))
        self.assertTrue(out.metadata["degenerate"])
        self.assertFalse(out.data.any())
        self.assertEqual(out.frame_index, 2)

    def test_clamps_and_rescales(self):
        rng = np.random.default_rng(0)
        data = rng.normal(0.5, 0.1, size=(32, 32))
        data[0, 0] = 100.0
        out = normalize_intensity(PolarFrame(data))
        self.assertAlmostEqual(out.data.min(), 0.0)
        self.assertAlmostEqual(out.data.max(), 1.0)
        self.assertFalse(out.metadata["degenerate"])

    def test_two_level_frame(self):
        data = np.zeros((4, 4))
        data[:2] = 1.0
        out = normalize_intensity(PolarFrame(data))
        np.testing.assert_array_equal(out.data, data)

    def test_empty_frame(self):
        with self.assertRaises(DomainError):
            normalize_intensity(PolarFrame(np.zeros((0, 4))))


class ScanConversionTests(SimpleTestCase):
    def test_uniform_frame_fills_the_disc(self):
        image = rectangular_to_cartesian_image(PolarFrame(np.ones((16, 32))))
        self.assertEqual(image.shape, (32, 32))
        self.assertAlmostEqual(image[16, 16], 1.0)
        self.assertEqual(image[0, 0], 0.0)

    def test_angular_layout(self):
        # Columns [0, N/4) cover theta in [0, pi/2): the +x, +y quadrant.
        data = np.zeros((16, 64))
        data[:, :16] = 1.0
        image = rectangular_to_cartesian_image(PolarFrame(data))
        c = 16
        self.assertGreater(image[c - 6, c + 6], 0.9)  # x > 0, y > 0
        self.assertLess(image[c + 6, c - 6], 0.1)  # x < 0, y < 0
