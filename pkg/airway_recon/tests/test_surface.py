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

from airway_recon.exceptions import DomainError, EmptyMeshError
from airway_recon.extract import SOURCE_RESAMPLED, UnitTransform
from airway_recon.metrics import point_to_mesh
from airway_recon.neural import AnalyticField, MlpSdf, phantom_field, sphere_field, tube_field
from airway_recon.phantom import NoiseParams, Phantom, Stenosis, simulate_scan
from airway_recon.surface import (
    HIT_EPSILON,
    GridSpec,
    TriangleMesh,
    extract_mesh,
    grid_lipschitz,
    raycast_batch,
    raycast_sdf,
    resample_boundaries,
    sample_grid,
)
from airway_recon.tests.helpers import small_scan, unit_sphere_points


class GridSpecTests(SimpleTestCase):
    def test_scalars_expand_to_three_axes(self):
        grid = GridSpec(resolution=33, lower=-1.0, upper=1.0)
        self.assertEqual(grid.resolution, (33, 33, 33))
        np.testing.assert_allclose(grid.spacing, [2.0 / 32] * 3)
        self.assertAlmostEqual(grid.cell_diagonal, math.sqrt(3) * 2.0 / 32)
        self.assertEqual(grid.diagnostics(), [])

    def test_invalid_grid(self):
        self.assertTrue(GridSpec(resolution=4).diagnostics())
        self.assertTrue(GridSpec(lower=1.0, upper=-1.0).diagnostics())
        with self.assertRaises(DomainError):
            sample_grid(sphere_field(0.5), GridSpec(resolution=4))

    def test_sampling_order_matches_axes(self):
        grid = GridSpec(resolution=(9, 10, 11), lower=(-1, -2, -3), upper=(1, 2, 3))
        values = sample_grid(AnalyticField(lambda p: p[:, 0] + 10 * p[:, 1] + 100 * p[:, 2]), grid)
        ax, ay, az = grid.axes()
        expected = ax[:, None, None] + 10 * ay[None, :, None] + 100 * az[None, None, :]
        np.testing.assert_allclose(values, expected, atol=1e-12)


class ExtractMeshTests(SimpleTestCase):
    def test_sphere_vertices_near_the_surface(self):
        grid = GridSpec(resolution=128)
        mesh = extract_mesh(sphere_field(1.0), grid)
        radial = np.abs(np.linalg.norm(mesh.vertices, axis=1) - 1.0)
        self.assertLess(radial.max(), 2 * grid.cell_diagonal)
        self.assertEqual(mesh.normals.shape, mesh.vertices.shape)

    def test_vertices_come_back_in_millimetres(self):
        transform = UnitTransform((10.0, 0.0, -4.0), 5.0)
        grid = GridSpec(resolution=48)
        mesh = extract_mesh(sphere_field(3.0, center=(10.0, 0.0, -4.0), unit_transform=transform), grid)
        radial = np.abs(np.linalg.norm(mesh.vertices - [10.0, 0.0, -4.0], axis=1) - 3.0)
        self.assertLess(radial.max(), 2 * grid.cell_diagonal * transform.scale)

    def test_vertex_values_bounded_by_lipschitz_constant(self):
        rng = np.random.default_rng(0)
        net = MlpSdf.geometric_init(hidden_layers=2, hidden_width=32, skip_layer=None, rng=rng)
        grid = GridSpec(resolution=40)
        values = sample_grid(net, grid)
        mesh = extract_mesh(net, grid, values=values)
        bound = grid_lipschitz(values, grid) * grid.cell_diagonal
        self.assertLessEqual(np.abs(net.evaluate(mesh.vertices)).max(), bound)

    def test_constant_positive_field(self):
        field = AnalyticField(lambda p: np.ones(len(p)))
        with self.assertRaises(EmptyMeshError):
            extract_mesh(field, GridSpec(resolution=16))

    def test_crop_to_scanned_interval(self):
        mesh = extract_mesh(tube_field(0.5), GridSpec(resolution=40), z_crop=(-0.4, 0.3))
        self.assertGreaterEqual(mesh.vertices[:, 2].min(), -0.4 - 1e-9)
        self.assertLessEqual(mesh.vertices[:, 2].max(), 0.3 + 1e-9)
        r = np.hypot(mesh.vertices[:, 0], mesh.vertices[:, 1])
        self.assertLess(np.abs(r - 0.5).max(), 2 * GridSpec(resolution=40).cell_diagonal)


class TriangleMeshTests(SimpleTestCase):
    def test_degenerate_faces_are_dropped(self):
        vertices = [[0, 0, 0], [1, 0, 0], [0, 1, 0], [2, 0, 0], [9, 9, 9]]
        mesh = TriangleMesh(vertices, [[0, 1, 2], [0, 1, 3]]).without_degenerate()
        self.assertEqual(len(mesh.faces), 1)
        self.assertEqual(len(mesh.vertices), 3)
        self.assertAlmostEqual(float(mesh.face_areas().sum()), 0.5)

    def test_bad_index(self):
        with self.assertRaises(DomainError):
            TriangleMesh([[0, 0, 0], [1, 0, 0], [0, 1, 0]], [[0, 1, 3]])

    def test_surface_samples_lie_on_faces(self):
        mesh = TriangleMesh([[0, 0, 0], [1, 0, 0], [0, 1, 0]], [[0, 1, 2]])
        samples = mesh.sample_surface(200, seed=1)
        self.assertEqual(samples.shape, (200, 3))
        np.testing.assert_allclose(samples[:, 2], 0.0)
        self.assertTrue((samples[:, 0] + samples[:, 1] <= 1.0 + 1e-12).all())


class RaycastTests(SimpleTestCase):
    def test_from_sphere_centre(self):
        transform = UnitTransform((1.0, 2.0, 3.0), 5.0)
        field = sphere_field(3.0, center=(1.0, 2.0, 3.0), unit_transform=transform)
        directions = unit_sphere_points(40, seed=2)
        origins = np.tile([1.0, 2.0, 3.0], (40, 1))
        d = raycast_batch(field, origins, directions, d_max=6.0)
        np.testing.assert_allclose(d, 3.0, atol=HIT_EPSILON * transform.scale)

    def test_pointing_away_misses(self):
        self.assertIsNone(raycast_sdf(sphere_field(0.6), (0.0, 0.0, 2.0), (0.0, 0.0, 1.0), d_max=6.0))

    def test_beyond_reach_misses(self):
        self.assertIsNone(raycast_sdf(sphere_field(0.6), (0.0, 0.0, 0.0), (1.0, 0.0, 0.0), d_max=0.5))

    def test_overshoot_is_bisected(self):
        steep = AnalyticField(lambda p: 2.0 * (np.linalg.norm(p, axis=1) - 0.6))
        d = raycast_sdf(steep, (0.0, 0.0, 0.0), (0.0, 1.0, 0.0), d_max=6.0)
        self.assertAlmostEqual(d, 0.6, delta=HIT_EPSILON)

    def test_hits_lie_on_the_extracted_mesh(self):
        transform = UnitTransform((1.0, 2.0, 3.0), 5.0)
        sphere = sphere_field(3.0, center=(1.2, 1.8, 3.3), unit_transform=transform)
        net = MlpSdf.geometric_init(hidden_layers=3, hidden_width=256, skip_layer=2, rng=np.random.default_rng(0))
        directions = unit_sphere_points(200, seed=4)
        grid = GridSpec(resolution=48)
        for field, origin, reach, scale in ((sphere, (1.0, 2.0, 3.0), 6.0, 5.0), (net, (0.0, 0.0, 0.0), 1.0, 1.0)):
            origins = np.tile(origin, (len(directions), 1))
            d = raycast_batch(field, origins, directions, d_max=reach)
            hit = ~np.isnan(d)
            self.assertTrue(hit.all())
            points = origins[hit] + d[hit, None] * directions[hit]
            result = point_to_mesh(points, extract_mesh(field, grid))
            self.assertLess(result.max, grid.cell_diagonal * scale)

    def test_direction_must_be_unit(self):
        with self.assertRaises(DomainError):
            raycast_sdf(sphere_field(0.6), (0.0, 0.0, 0.0), (2.0, 0.0, 0.0), d_max=6.0)


class ResampleTests(SimpleTestCase):
    def test_cylinder_field_recovers_radius(self):
        transform = UnitTransform((0.0, 0.0, 6.0), 4.0)
        for phi, expected in ((math.pi / 2, 3.0), (math.pi / 3, 3.0 / math.sin(math.pi / 3))):
            cfg = small_scan(n_columns=32, n_frames=2, phi_cath=phi)
            boundaries = resample_boundaries(tube_field(3.0, transform), cfg)
            self.assertEqual([b.frame_index for b in boundaries], [0, 1])
            for boundary in boundaries:
                self.assertEqual(boundary.source, SOURCE_RESAMPLED)
                np.testing.assert_allclose(boundary.d_tiss, expected, atol=2 * HIT_EPSILON * transform.scale)

    def test_phantom_field_matches_simulated_boundaries(self):
        ph = Phantom(
            length=30.0,
            stenoses=(Stenosis(z0=6.0, depth=0.3, width=1.0),),
            ellipticity=0.85,
            centerline_offset=(0.3, -0.2),
        )
        cfg = small_scan(n_columns=32, n_frames=4)
        scan = simulate_scan(ph, cfg, NoiseParams.noiseless())
        field = phantom_field(ph, UnitTransform((0.0, 0.0, 6.0), 4.0))
        boundaries = resample_boundaries(field, cfg, frame_indices=[0, 2])
        for boundary, truth in zip(boundaries, scan.boundaries[[0, 2]]):
            self.assertFalse(np.isnan(boundary.d_tiss).any())
            np.testing.assert_allclose(boundary.d_tiss, truth, atol=2e-3)
