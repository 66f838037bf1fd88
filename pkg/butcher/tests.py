import numpy as np
from django.test import SimpleTestCase

from core.exceptions import UnknownName
from .conditions import (
    classical_order,
    family_condition_curves,
    mis_curve_c3,
    rfsmr3_residual,
    rmis4_residual,
    rmis_curve_c2,
    rmis_v_vector,
)
from .exceptions import InvalidTable, SingularFamilyPoint
from .serializers import ButcherTableSerializer
from .tables import (
    ButcherTable,
    butcher_family,
    family_intersection_points,
    family_singularity,
    get_table,
    make_kw3,
    make_three_eighths,
)


def _well_inside(c2, c3, margin=0.05):
    return (
        margin < c2 < c3 - margin
        and c3 < 1.0 - margin
        and abs(2.0 * c2 - 1.0) > margin
        and abs(6.0 * c3 * c2 - 4.0 * c3 - 4.0 * c2 + 3.0) > margin
    )


class ButcherTableTests(SimpleTestCase):
    def test_shipped_orders(self):
        self.assertEqual(classical_order(make_three_eighths()), 4)
        self.assertEqual(classical_order(make_kw3()), 3)
        self.assertEqual(classical_order(get_table("euler")), 1)

    def test_unknown_table_name(self):
        with self.assertRaises(UnknownName):
            get_table("rk99")

    def test_row_sum_mismatch_rejected(self):
        with self.assertRaises(InvalidTable):
            ButcherTable(A=[[0.0, 0.0], [0.5, 0.0]], b=[0.5, 0.5], c=[0.0, 0.6])

    def test_shape_mismatch_rejected(self):
        with self.assertRaises(InvalidTable):
            ButcherTable(A=[[0.0, 0.0], [1.0, 0.0]], b=[1.0], c=[0.0, 1.0])

    def test_coefficients_are_read_only(self):
        table = make_three_eighths()
        with self.assertRaises(ValueError):
            table.A[1, 0] = 2.0

    def test_explicit_flags(self):
        table = make_kw3()
        self.assertTrue(table.explicit)
        self.assertTrue(table.explicit_first_stage)
        implicit = ButcherTable(A=[[0.5]], b=[1.0], c=[0.5])
        self.assertFalse(implicit.explicit)
        self.assertFalse(implicit.explicit_first_stage)


class ExtraConditionTests(SimpleTestCase):
    def test_kw3_satisfies_mis_condition(self):
        self.assertAlmostEqual(rfsmr3_residual(make_kw3()), 0.0, delta=1e-15)

    def test_three_eighths_satisfies_both_conditions(self):
        table = make_three_eighths()
        self.assertAlmostEqual(rfsmr3_residual(table), 0.0, delta=1e-15)
        self.assertAlmostEqual(rmis4_residual(table), 0.0, delta=1e-15)

    def test_kw3_fails_rmis_condition(self):
        self.assertAlmostEqual(rmis4_residual(make_kw3()), -1.0 / 72.0, delta=1e-15)

    def test_v_vector_of_three_eighths(self):
        table = make_three_eighths()
        np.testing.assert_allclose(
            rmis_v_vector(table.b, table.c), [0.0, 11.0 / 24.0, 5.0 / 24.0, 1.0 / 24.0], atol=1e-15
        )


class FamilyTests(SimpleTestCase):
    def test_three_eighths_is_a_family_member(self):
        member = butcher_family(1.0 / 3.0, 2.0 / 3.0)
        reference = make_three_eighths()
        np.testing.assert_allclose(member.A, reference.A, atol=1e-14)
        np.testing.assert_allclose(member.b, reference.b, atol=1e-14)
        np.testing.assert_allclose(member.c, reference.c, atol=1e-14)

    def test_singular_point_reports_denominator(self):
        with self.assertRaises(SingularFamilyPoint) as ctx:
            butcher_family(0.5, 0.7)
        self.assertEqual(ctx.exception.denominator, "2c2-1")
        self.assertEqual(family_singularity(0.3, 0.3), "c3-c2")
        self.assertIsNone(family_singularity(0.3, 0.7))

    def test_random_members_are_fourth_order(self):
        rng = np.random.default_rng(54)
        checked = 0
        while checked < 100:
            c2, c3 = rng.uniform(0.0, 1.0, size=2)
            if not _well_inside(c2, c3):
                continue
            self.assertEqual(classical_order(butcher_family(c2, c3)), 4, msg=f"{c2}, {c3}")
            checked += 1

    def test_curves_vanish_at_intersection_points(self):
        for c2, c3 in family_intersection_points():
            mis_curve, rmis_curve = family_condition_curves(c2, c3)
            self.assertLess(abs(mis_curve), 1e-10)
            self.assertLess(abs(rmis_curve), 1e-10)
            member = butcher_family(c2, c3)
            self.assertLess(abs(rfsmr3_residual(member)), 1e-12)
            self.assertLess(abs(rmis4_residual(member)), 1e-12)

    def test_rmis_residual_vanishes_on_rmis_curve(self):
        sampled = 0
        for c3 in np.linspace(0.05, 0.95, 91):
            for c2 in rmis_curve_c2(c3):
                if not _well_inside(c2, c3):
                    continue
                self.assertLess(abs(family_condition_curves(c2, c3)[1]), 1e-11)
                self.assertLess(abs(rmis4_residual(butcher_family(c2, c3))), 1e-9)
                sampled += 1
        self.assertGreater(sampled, 0)

    def test_mis_residual_vanishes_on_mis_curve(self):
        sampled = 0
        for c2 in np.linspace(0.05, 0.95, 91):
            for c3 in mis_curve_c3(c2):
                if not _well_inside(c2, c3):
                    continue
                self.assertLess(abs(rfsmr3_residual(butcher_family(c2, c3))), 1e-9)
                sampled += 1
        self.assertGreater(sampled, 0)

    def test_residuals_nonzero_away_from_curves(self):
        rng = np.random.default_rng(7)
        checked = 0
        while checked < 100:
            c2, c3 = rng.uniform(0.0, 1.0, size=2)
            if not _well_inside(c2, c3):
                continue
            member = butcher_family(c2, c3)
            mis_curve, rmis_curve = family_condition_curves(c2, c3)
            if abs(mis_curve) > 1e-3:
                self.assertGreater(abs(rfsmr3_residual(member)), 1e-9)
            if abs(rmis_curve) > 1e-3:
                self.assertGreater(abs(rmis4_residual(member)), 1e-9)
            checked += 1


class ButcherTableSerializerTests(SimpleTestCase):
    def test_export_includes_order(self):
        data = ButcherTableSerializer(make_kw3()).data
        self.assertEqual(data["name"], "kw3")
        self.assertEqual(data["order"], 3)
        self.assertEqual(len(data["A"]), 3)

    def test_import_builds_table(self):
        payload = ButcherTableSerializer(make_three_eighths()).data
        serializer = ButcherTableSerializer(data=payload)
        self.assertTrue(serializer.is_valid(), serializer.errors)
        table = serializer.save()
        np.testing.assert_array_equal(table.b, make_three_eighths().b)

    def test_import_rejects_inconsistent_rows(self):
        serializer = ButcherTableSerializer(
            data={"name": "bad", "A": [[0.0, 0.0], [0.4, 0.0]], "b": [0.5, 0.5], "c": [0.0, 0.5]}
        )
        self.assertFalse(serializer.is_valid())
