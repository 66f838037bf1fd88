import tempfile
from pathlib import Path

import numpy as np
from django.test import SimpleTestCase, tag

from core.io import read_csv
from stepper.methods import build_method
from .analysis import (
    amplification_matrix,
    coefficient_matrices,
    evaluate_point,
    is_stable,
    point_from_parameters,
    spectral_radius,
)
from .exceptions import NoAdmissibleSample, ParameterOutOfRange
from .plotting import export_scan
from .scan import cell_centered_grid, family_samples, maximize_area, scan
from .serializers import StabilityParametersSerializer, StabilityScanSummarySerializer


def _rk4_polynomial(w):
    return 1.0 + w + w ** 2 / 2.0 + w ** 3 / 6.0 + w ** 4 / 24.0


class ParameterMapTests(SimpleTestCase):
    def test_uncoupled_point(self):
        Z = point_from_parameters(1.0, -0.5, 0.0)
        np.testing.assert_allclose(Z, [[-1.0, 0.0], [0.0, -1.0]], atol=1e-15)

    def test_coupled_point(self):
        Z = point_from_parameters(10.0, -0.5, 1.0 / 3.0)
        np.testing.assert_allclose(Z, [[-1.0, np.sqrt(5.0)], [np.sqrt(5.0), -10.0]], rtol=1e-14)

    def test_negative_eta_flips_upper_coupling(self):
        Z = point_from_parameters(10.0, -0.5, -1.0 / 3.0)
        self.assertLess(Z[0, 1], 0.0)
        self.assertGreater(Z[1, 0], 0.0)
        self.assertAlmostEqual(Z[0, 1] * Z[1, 0], -10.0, places=12)

    def test_vectorised_map_matches_pointwise(self):
        xi = np.array([-0.9, -0.3, -0.01])
        eta = np.array([-0.5, 0.0, 0.8])
        stacked = coefficient_matrices(7.0, xi, eta)
        self.assertEqual(stacked.shape, (3, 2, 2))
        for k in range(3):
            np.testing.assert_array_equal(stacked[k], point_from_parameters(7.0, xi[k], eta[k]))

    def test_out_of_range(self):
        for args in [(0.0, -0.5, 0.0), (10.0, 0.0, 0.0), (10.0, -1.0, 0.0), (10.0, -0.5, 1.0), (10.0, -0.5, -1.2)]:
            with self.assertRaises(ParameterOutOfRange):
                point_from_parameters(*args)


class AmplificationTests(SimpleTestCase):
    @classmethod
    def setUpClass(cls):
        super().setUpClass()
        cls.rmis = build_method("rmis-38", m=10)
        cls.mis = build_method("mis-38", m=10)

    def test_zero_matrix_gives_identity(self):
        for spec in (self.rmis, self.mis, build_method("rmis-kw3", m=10)):
            np.testing.assert_array_equal(amplification_matrix(spec, np.zeros((2, 2))), np.eye(2))

    def test_fast_only_mis_is_product_of_substep_polynomials(self):
        z = -2.0
        S = amplification_matrix(self.mis, np.array([[z, 0.0], [0.0, 0.0]]))
        expected = np.prod([
            _rk4_polynomial(width * z / n) ** n
            for width, n in zip(self.mis.widths, self.mis.block_subcycles) if n > 0
        ])
        self.assertAlmostEqual(S[0, 0], expected, delta=1e-13)
        np.testing.assert_array_equal(S[:, 1], [0.0, 1.0])
        self.assertEqual(S[1, 0], 0.0)

    def test_slow_only_is_outer_polynomial(self):
        z = -1.5
        S = amplification_matrix(self.rmis, np.array([[0.0, 0.0], [0.0, z]]))
        self.assertAlmostEqual(S[1, 1], _rk4_polynomial(z), delta=1e-14)
        self.assertEqual(S[0, 0], 1.0)

    def test_documented_stable_point(self):
        point = evaluate_point(self.rmis, 10.0, -0.05, 0.0)
        self.assertLess(point.spectral_radius, 1.0)
        self.assertTrue(point.stable)


class SpectralRadiusTests(SimpleTestCase):
    def test_matches_eigenvalues(self):
        rng = np.random.default_rng(5)
        matrices = rng.normal(size=(50, 2, 2))
        expected = np.max(np.abs(np.linalg.eigvals(matrices)), axis=-1)
        np.testing.assert_allclose(spectral_radius(matrices), expected, rtol=1e-10)

    def test_rotation_has_unit_radius(self):
        angle = 0.3
        rotation = np.array([[np.cos(angle), -np.sin(angle)], [np.sin(angle), np.cos(angle)]])
        self.assertAlmostEqual(float(spectral_radius(rotation)), 1.0, places=14)
        self.assertFalse(is_stable(spectral_radius(rotation)))

    def test_non_finite_is_unstable(self):
        radius = spectral_radius(np.array([[np.nan, 0.0], [0.0, 0.5]]))
        self.assertEqual(float(radius), np.inf)
        self.assertFalse(is_stable(radius))


class ScanTests(SimpleTestCase):
    @classmethod
    def setUpClass(cls):
        super().setUpClass()
        cls.rmis_scan = scan(build_method("rmis-38", m=10), 10.0)

    def test_grid_shape(self):
        result = self.rmis_scan
        self.assertEqual(result.stable.shape, (200, 100))
        self.assertEqual(result.spectral_radius.shape, (200, 100))
        self.assertTrue(np.all((result.xi_grid > -1.0) & (result.xi_grid < 0.0)))
        self.assertTrue(np.all((result.eta_grid > -1.0) & (result.eta_grid < 1.0)))
        self.assertAlmostEqual(result.area_fraction, result.stable.sum() / 20000.0)

    def test_cell_centered_grid(self):
        np.testing.assert_allclose(cell_centered_grid(-1.0, 0.0, 4), [-0.875, -0.625, -0.375, -0.125])

    def test_stable_near_origin_unstable_when_stiff(self):
        self.assertTrue(self.rmis_scan.stable_at(-0.05, 0.0))
        self.assertFalse(self.rmis_scan.stable_at(-0.95, 0.0))
        self.assertGreater(self.rmis_scan.area_fraction, 0.0)
        self.assertLess(self.rmis_scan.area_fraction, 1.0)

    def test_similarity_leaves_stable_set_unchanged(self):
        scaled = scan(build_method("rmis-38", m=10), 10.0, coupling_scale=2.0)
        np.testing.assert_array_equal(scaled.stable, self.rmis_scan.stable)

    def test_mis_area_is_comparable(self):
        mis_scan = scan(build_method("mis-38", m=10), 10.0)
        self.assertTrue(mis_scan.stable_at(-0.05, 0.0))
        self.assertFalse(mis_scan.stable_at(-0.95, 0.0))
        self.assertLess(abs(mis_scan.area_fraction - self.rmis_scan.area_fraction), 0.15)

    def test_bad_kappa(self):
        with self.assertRaises(ParameterOutOfRange):
            scan(build_method("rmis-38", m=10), 0.0, n_xi=4, n_eta=4)

    def test_export(self):
        small = scan(build_method("rmis-38", m=10), 10.0, n_xi=10, n_eta=20)
        with tempfile.TemporaryDirectory() as tmp:
            csv_path, svg_path = export_scan(small, tmp, "rmis-38_k10")
            rows = read_csv(csv_path)
            self.assertEqual(len(rows), 200)
            self.assertEqual(list(rows[0]), ["xi", "eta", "spectral_radius", "stable"])
            self.assertIn(rows[0]["stable"], ("0", "1"))
            svg = Path(svg_path).read_text(encoding="utf-8")
            self.assertIn("<svg", svg)

    def test_summary_serializer(self):
        data = StabilityScanSummarySerializer(self.rmis_scan).data
        self.assertEqual(data["n_xi"], 100)
        self.assertEqual(data["n_eta"], 200)
        self.assertEqual(data["stable_cells"], int(self.rmis_scan.stable.sum()))

    def test_parameter_serializer(self):
        self.assertTrue(StabilityParametersSerializer(data={"kappa": 10, "xi": -0.5, "eta": 0.2}).is_valid())
        self.assertFalse(StabilityParametersSerializer(data={"kappa": 10, "xi": 0.0, "eta": 0.2}).is_valid())
        self.assertFalse(StabilityParametersSerializer(data={"kappa": -1, "xi": -0.5, "eta": 0.2}).is_valid())


class FamilySearchTests(SimpleTestCase):
    def test_samples_are_admissible_and_include_anchors(self):
        for family in ("mis", "rmis"):
            samples = family_samples(family, 20)
            self.assertIn((1.0 / 3.0, 2.0 / 3.0), samples)
            for c2, c3 in samples:
                self.assertTrue(0.0 < c2 < c3 < 1.0)
            self.assertEqual(samples, sorted(samples))

    def test_single_sample(self):
        params, result = maximize_area("rmis", 10.0, samples=[(1.0 / 3.0, 2.0 / 3.0)], n_xi=20, n_eta=40)
        self.assertEqual(params, (1.0 / 3.0, 2.0 / 3.0))
        self.assertEqual(result.meta["c2"], 1.0 / 3.0)

    def test_no_admissible_sample(self):
        with self.assertRaises(NoAdmissibleSample):
            maximize_area("mis", 10.0, samples=[(0.7, 0.2), (0.5, 0.9)])

    def test_unknown_family(self):
        with self.assertRaises(KeyError):
            maximize_area("imex", 10.0)

    def test_best_is_at_least_three_eighths(self):
        _, reference = maximize_area("rmis", 10.0, samples=[(1.0 / 3.0, 2.0 / 3.0)])
        _, best = maximize_area("rmis", 10.0, n_samples=8)
        self.assertGreaterEqual(best.area_fraction, reference.area_fraction)

    @tag("slow")
    def test_mis_and_rmis_families_are_comparable(self):
        _, rmis_best = maximize_area("rmis", 10.0, n_samples=100)
        _, mis_best = maximize_area("mis", 10.0, n_samples=100)
        self.assertLess(abs(mis_best.area_fraction - rmis_best.area_fraction), 0.15)


@tag("slow")
class StiffScanTests(SimpleTestCase):
    """RMIS-3/8 against MIS-3/8 at kappa = 100."""

    @classmethod
    def setUpClass(cls):
        super().setUpClass()
        cls.rmis_scan = scan(build_method("rmis-38", m=100), 100.0)
        cls.mis_scan = scan(build_method("mis-38", m=100), 100.0)

    def test_stable_near_origin_unstable_when_stiff(self):
        for result in (self.rmis_scan, self.mis_scan):
            with self.subTest(method=result.method):
                self.assertTrue(result.stable_at(-0.005, 0.0))
                self.assertFalse(result.stable_at(-0.95, 0.0))

    def test_areas_are_comparable(self):
        self.assertLess(abs(self.mis_scan.area_fraction - self.rmis_scan.area_fraction), 0.15)

    def test_stable_band_shrinks_with_kappa(self):
        moderate = scan(build_method("rmis-38", m=10), 10.0)
        row_10 = moderate.stable[moderate.nearest(-0.5, 0.0)[0]]
        row_100 = self.rmis_scan.stable[self.rmis_scan.nearest(-0.5, 0.0)[0]]
        self.assertLess(row_100.sum(), row_10.sum())
