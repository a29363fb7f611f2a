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
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.django import SimpleTestCase as PropertyTestCase

from airway_recon.exceptions import DomainError
from airway_recon.extract import (
    SOURCE_INTENSITY,
    SOURCE_MASK,
    ALineBoundary,
    IntensityParams,
    MaskParams,
    PointCloud,
    SegmentationMask,
    UnitTransform,
    boundary_from_intensity,
    boundary_from_mask,
    boundary_to_mask,
    normalize_pointcloud,
    pointcloud_from_scan,
)
from airway_recon.geometry import PolarFrame, normalize_intensity
from airway_recon.geometry.helix import catheter_z, sample_times
from airway_recon.phantom import NoiseParams, Phantom, simulate_scan
from airway_recon.tests.helpers import small_scan


def column_mask(height: int, width: int, rows_per_column) -> SegmentationMask:
    data = np.zeros((height, width), dtype=np.uint8)
    for column, rows in enumerate(rows_per_column):
        for start, stop in rows:
            data[start:stop, column] = 1
    return SegmentationMask(data, 0)


class BoundaryFromMaskTests(SimpleTestCase):
    def setUp(self):
        self.cfg = small_scan(n_columns=4, frame_height=600, d_max=6.0)

    def test_far_edge_at_pixel_centre(self):
        mask = column_mask(600, 4, [[(0, 300)]] * 4)
        boundary = boundary_from_mask(mask, self.cfg)
        self.assertEqual(boundary.source, SOURCE_MASK)
        np.testing.assert_allclose(boundary.d_tiss, 2.995, rtol=0, atol=1e-12)
        self.assertFalse(boundary.low_confidence.any())

    def test_empty_column_is_absent(self):
        mask = column_mask(600, 4, [[(0, 300)], [], [(0, 300)], []])
        boundary = boundary_from_mask(mask, self.cfg)
        np.testing.assert_array_equal(boundary.present, [True, False, True, False])

    def test_all_zero_mask(self):
        mask = SegmentationMask(np.zeros((600, 4), dtype=np.uint8), 3)
        boundary = boundary_from_mask(mask, self.cfg)
        self.assertEqual(boundary.frame_index, 3)
        self.assertFalse(boundary.present.any())

    def test_small_gap_is_merged(self):
        mask = column_mask(600, 4, [[(0, 100), (103, 300)]] * 4)
        boundary = boundary_from_mask(mask, self.cfg)
        np.testing.assert_allclose(boundary.d_tiss, 299.5 * 6.0 / 600, atol=1e-12)
        self.assertFalse(boundary.low_confidence.any())

    def test_wide_gap_splits_runs(self):
        mask = column_mask(600, 4, [[(0, 100), (104, 300)]] * 4)
        boundary = boundary_from_mask(mask, self.cfg)
        # the second run starts beyond the search window, so the first one wins
        np.testing.assert_allclose(boundary.d_tiss, 99.5 * 0.01, atol=1e-12)
        self.assertTrue(boundary.low_confidence.all())

    def test_longest_run_within_search_window(self):
        mask = column_mask(600, 4, [[(0, 10), (20, 200)]] * 4)
        boundary = boundary_from_mask(mask, self.cfg, MaskParams(search_rows=75))
        np.testing.assert_allclose(boundary.d_tiss, 199.5 * 0.01, atol=1e-12)
        self.assertTrue(boundary.low_confidence.all())

    def test_run_starting_late_is_ignored(self):
        mask = column_mask(600, 4, [[(100, 300)]] * 4)
        boundary = boundary_from_mask(mask, self.cfg)
        self.assertFalse(boundary.present.any())

    def test_wrong_shape(self):
        with self.assertRaises(DomainError):
            boundary_from_mask(SegmentationMask(np.zeros((600, 5))), self.cfg)

    def test_rasterized_boundary_round_trips(self):
        d = np.array([1.234, 2.5, np.nan, 5.99])
        mask = boundary_to_mask(ALineBoundary(0, d), self.cfg)
        recovered = boundary_from_mask(mask, self.cfg).d_tiss
        self.assertTrue(np.isnan(recovered[2]))
        present = ~np.isnan(d)
        self.assertLessEqual(np.abs(recovered[present] - d[present]).max(), 0.005 + 1e-12)


class QuantizationProperties(PropertyTestCase):
    @settings(max_examples=50, deadline=None)
    @given(st.lists(st.floats(0.05, 5.9), min_size=4, max_size=4))
    def test_half_pixel_bound(self, depths):
        cfg = small_scan(n_columns=4, frame_height=300, d_max=6.0)
        truth = np.array(depths)
        mask = boundary_to_mask(ALineBoundary(0, truth), cfg)
        recovered = boundary_from_mask(mask, cfg, MaskParams(search_rows=300)).d_tiss
        self.assertLessEqual(np.abs(recovered - truth).max(), cfg.d_max / (2 * cfg.frame_height) + 1e-12)


class BoundaryFromIntensityTests(SimpleTestCase):
    def test_simulated_band_frame(self):
        cfg = small_scan(n_columns=32, n_frames=2, frame_height=120)
        scan = simulate_scan(Phantom(ellipticity=0.9), cfg, NoiseParams.noiseless())
        for k in range(2):
            frame = normalize_intensity(scan.polar_frame(k))
            boundary = boundary_from_intensity(frame, cfg)
            self.assertEqual(boundary.source, SOURCE_INTENSITY)
            self.assertLessEqual(np.abs(boundary.d_tiss - scan.boundaries[k]).max(), cfg.pixel_size)

    def test_all_zero_frame(self):
        cfg = small_scan(n_columns=8, frame_height=32)
        boundary = boundary_from_intensity(PolarFrame(np.zeros((32, 8))), cfg)
        self.assertFalse(boundary.present.any())

    def test_zero_threshold_takes_first_row(self):
        cfg = small_scan(n_columns=8, frame_height=32)
        rng = np.random.default_rng(0)
        boundary = boundary_from_intensity(
            PolarFrame(rng.random((32, 8))), cfg, IntensityParams(threshold=0.0)
        )
        np.testing.assert_array_equal(boundary.d_tiss, np.zeros(8))

    def test_short_spike_is_not_sustained(self):
        cfg = small_scan(n_columns=4, frame_height=40)
        data = np.zeros((40, 4))
        data[5, :] = 1.0
        data[20:30, :] = 1.0
        boundary = boundary_from_intensity(PolarFrame(data), cfg, IntensityParams(min_run=3))
        np.testing.assert_allclose(boundary.d_tiss, 19.5 * cfg.pixel_size)

    def test_median_filter_across_columns(self):
        cfg = small_scan(n_columns=8, frame_height=40)
        data = np.zeros((40, 8))
        data[20:, :] = 1.0
        data[10:, 3] = 1.0
        raw = boundary_from_intensity(PolarFrame(data), cfg)
        smoothed = boundary_from_intensity(PolarFrame(data), cfg, IntensityParams(median_width=3))
        self.assertAlmostEqual(raw.d_tiss[3], 9.5 * cfg.pixel_size)
        np.testing.assert_allclose(smoothed.d_tiss, 19.5 * cfg.pixel_size)


class PointCloudTests(SimpleTestCase):
    def test_single_frame_circle(self):
        cfg = small_scan(n_columns=16)
        cloud = pointcloud_from_scan([ALineBoundary(0, np.full(16, 3.0))], cfg)
        self.assertEqual(len(cloud), 16)
        np.testing.assert_allclose(np.hypot(cloud.points[:, 0], cloud.points[:, 1]), 3.0, atol=1e-12)
        expected_z = catheter_z(sample_times(np.zeros(16, dtype=int), np.arange(16), cfg), cfg)
        np.testing.assert_allclose(cloud.points[:, 2], expected_z, atol=1e-12)

    def test_per_call_summary_is_debug_only(self):
        cfg = small_scan(n_columns=8)
        boundaries = [ALineBoundary(0, np.full(8, 2.0))]
        with self.assertNoLogs("airway_recon.extract.cloud", level="INFO"):
            pointcloud_from_scan(boundaries, cfg)
        with self.assertLogs("airway_recon.extract.cloud", level="DEBUG") as logs:
            pointcloud_from_scan(boundaries, cfg)
        self.assertIn("8 points from 1 frames", logs.output[0])

    def test_absent_columns_are_skipped(self):
        cfg = small_scan(n_columns=8)
        d = np.full(8, 2.0)
        d[[1, 5]] = np.nan
        cloud = pointcloud_from_scan([ALineBoundary(1, d)], cfg)
        self.assertEqual(len(cloud), 6)
        np.testing.assert_array_equal(cloud.columns, [0, 2, 3, 4, 6, 7])
        np.testing.assert_array_equal(cloud.frames, [1] * 6)

    def test_all_absent_gives_empty_cloud(self):
        cfg = small_scan(n_columns=8)
        cloud = pointcloud_from_scan([ALineBoundary(0, np.full(8, np.nan))], cfg)
        self.assertEqual(len(cloud), 0)
        with self.assertRaises(DomainError):
            normalize_pointcloud(cloud)

    def test_duplicate_frames(self):
        cfg = small_scan(n_columns=8)
        d = np.full(8, 2.0)
        with self.assertRaises(DomainError):
            pointcloud_from_scan([ALineBoundary(0, d), ALineBoundary(0, d)], cfg)

    def test_out_of_range_depth(self):
        cfg = small_scan(n_columns=8, d_max=6.0)
        with self.assertRaises(DomainError):
            pointcloud_from_scan([ALineBoundary(0, np.full(8, 6.5))], cfg)

    def test_frame_order_does_not_matter(self):
        cfg = small_scan(n_columns=8, n_frames=3)
        rng = np.random.default_rng(4)
        boundaries = [ALineBoundary(i, rng.uniform(1.0, 4.0, 8)) for i in range(3)]
        forward = pointcloud_from_scan(boundaries, cfg)
        backward = pointcloud_from_scan(boundaries[::-1], cfg)
        np.testing.assert_array_equal(forward.points, backward.points)
        pairs = set(zip(forward.frames.tolist(), forward.columns.tolist()))
        self.assertEqual(len(pairs), len(forward))


class NormalizePointCloudTests(SimpleTestCase):
    def test_antipodal_pair(self):
        _, transform = normalize_pointcloud(PointCloud.from_points([[5.0, 0, 0], [-5.0, 0, 0]]))
        np.testing.assert_allclose(transform.center, (0.0, 0.0, 0.0))
        self.assertAlmostEqual(transform.scale, 5.25)

    def test_near_identity(self):
        rng = np.random.default_rng(1)
        points = rng.uniform(-0.5, 0.5, size=(200, 3))
        points = np.vstack([points, [[0.6, 0.6, 0.6], [-0.6, -0.6, -0.6]]])
        unit, transform = normalize_pointcloud(PointCloud.from_points(points))
        np.testing.assert_allclose(transform.center, 0.0, atol=1e-12)
        self.assertAlmostEqual(transform.scale, math.sqrt(3 * 0.36) * 1.05)
        self.assertLessEqual(np.linalg.norm(unit.points, axis=1).max(), 1.0 + 1e-12)

    def test_cylinder_round_trip(self):
        cfg = small_scan(n_columns=32, n_frames=4)
        scan = simulate_scan(Phantom(), cfg, NoiseParams.noiseless())
        cloud = pointcloud_from_scan(scan.boundary_records(), cfg)
        unit, transform = normalize_pointcloud(cloud)
        self.assertLessEqual(np.linalg.norm(unit.points, axis=1).max(), 1.0 + 1e-12)
        np.testing.assert_allclose(transform.to_world(unit.points), cloud.points, rtol=0, atol=1e-12)
        np.testing.assert_array_equal(unit.frames, cloud.frames)

    def test_coincident_points(self):
        with self.assertRaises(DomainError):
            normalize_pointcloud(PointCloud.from_points([[1.0, 2.0, 3.0]] * 5))

    def test_transform_serialization(self):
        transform = UnitTransform((1.0, -2.0, 3.5), 4.25)
        self.assertEqual(UnitTransform.from_dict(transform.to_dict()), transform)
