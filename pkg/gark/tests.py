import numpy as np
from django.test import SimpleTestCase, tag

from butcher.conditions import classical_order
from butcher.tables import ButcherTable, butcher_family, make_forward_euler, make_kw3, make_three_eighths
from stepper.methods import subcycle_inner
from .conditions import (
    check_conditions,
    condition_rows,
    fast_condition_system,
    lemma_identity_residuals,
    verify_lemma_identities,
)
from .exceptions import InnerNotExplicitFirstStage, InvalidOuter, NotInternallyConsistent, RankDeficient
from .optimize import optimize_fast_weights
from .serializers import ConditionReportSerializer, GarkTableauSerializer
from .tableau import assemble_mis, assemble_rmis

THREE_EIGHTHS = make_three_eighths()
KW3 = make_kw3()


class AssemblyTests(SimpleTestCase):
    def test_mis_sizes_and_weights(self):
        g = assemble_mis(THREE_EIGHTHS, THREE_EIGHTHS)
        self.assertEqual((g.s_f, g.s_s), (16, 4))
        expected = np.concatenate([THREE_EIGHTHS.b / 3.0] * 3 + [np.zeros(4)])
        np.testing.assert_allclose(g.b_f, expected, atol=1e-16)
        self.assertIsNone(g.b_f_embedded)
        np.testing.assert_array_equal(g.A_ss, THREE_EIGHTHS.A)
        np.testing.assert_array_equal(g.b_s, THREE_EIGHTHS.b)

    def test_rmis_weights_and_embedding(self):
        g = assemble_rmis(THREE_EIGHTHS, THREE_EIGHTHS, with_embedding=True)
        expected = np.zeros(16)
        expected[[0, 4, 8, 12]] = THREE_EIGHTHS.b
        np.testing.assert_array_equal(g.b_f, expected)
        np.testing.assert_allclose(g.b_f_embedded[:4], THREE_EIGHTHS.b / 3.0, atol=1e-16)

    def test_rmis_weights_sum_to_one_for_kw3(self):
        g = assemble_rmis(KW3, KW3)
        self.assertAlmostEqual(g.b_f.sum(), 1.0, delta=1e-15)

    def test_internal_consistency(self):
        for outer, inner in [
            (THREE_EIGHTHS, THREE_EIGHTHS),
            (KW3, KW3),
            (KW3, subcycle_inner(KW3, 5)),
            (butcher_family(0.4, 0.7), KW3),
        ]:
            self.assertLess(assemble_mis(outer, inner).consistency_residual(), 1e-13)

    def test_slow_fast_identity(self):
        for outer, inner in [(THREE_EIGHTHS, THREE_EIGHTHS), (KW3, subcycle_inner(KW3, 3))]:
            g = assemble_mis(outer, inner)
            np.testing.assert_allclose(g.A_sf @ g.c_f, g.c_s ** 2 / 2.0, atol=1e-13)

    def test_per_block_inner_tables(self):
        inners = [subcycle_inner(THREE_EIGHTHS, n) for n in (1, 2, 3)] + [THREE_EIGHTHS]
        g = assemble_rmis(THREE_EIGHTHS, inners)
        self.assertEqual(g.s_f, 4 + 8 + 12 + 4)
        self.assertEqual(g.block_sizes, (4, 8, 12, 4))
        self.assertLess(g.consistency_residual(), 1e-13)

    def test_invalid_outer(self):
        decreasing = ButcherTable(
            A=[[0.0, 0.0, 0.0], [0.6, 0.0, 0.0], [0.2, 0.2, 0.0]],
            b=[0.3, 0.3, 0.4],
            c=[0.0, 0.6, 0.4],
        )
        with self.assertRaises(InvalidOuter):
            assemble_mis(decreasing, KW3)

    def test_rmis_needs_explicit_first_stage(self):
        implicit = ButcherTable(A=[[0.5]], b=[1.0], c=[0.5], name="midpoint")
        with self.assertRaises(InnerNotExplicitFirstStage):
            assemble_rmis(KW3, implicit)
        # MIS itself accepts any one-step inner table.
        self.assertEqual(assemble_mis(KW3, implicit).s_f, 3)


class ConditionTests(SimpleTestCase):
    def test_report_has_28_conditions(self):
        report = check_conditions(assemble_rmis(THREE_EIGHTHS, THREE_EIGHTHS))
        self.assertEqual(len(report.residuals), 28)
        counts = {}
        for label in report.residuals:
            counts[label[0]] = counts.get(label[0], 0) + 1
        self.assertEqual(counts, {"1": 2, "2": 2, "3": 6, "4": 18})
        self.assertIn("4d:f,s,f", report.residuals)
        self.assertIn("3b:s,f", report.residuals)

    def test_rmis_three_eighths_is_fourth_order(self):
        for n in (1, 2, 34):
            report = check_conditions(assemble_rmis(THREE_EIGHTHS, subcycle_inner(THREE_EIGHTHS, n)))
            self.assertEqual(report.satisfied_order, 4, msg=f"n={n}: {report.failing()}")
            self.assertLess(report.max_residual(), 1e-12)

    def test_mis_methods_are_third_order(self):
        self.assertEqual(check_conditions(assemble_mis(THREE_EIGHTHS, THREE_EIGHTHS)).satisfied_order, 3)
        self.assertEqual(check_conditions(assemble_mis(KW3, KW3)).satisfied_order, 3)

    def test_rmis_kw3_is_third_order(self):
        # The outer table misses the extra fourth-order RMIS condition.
        self.assertEqual(check_conditions(assemble_rmis(KW3, KW3)).satisfied_order, 3)

    def test_rmis_on_family_curve_is_fourth_order(self):
        c2, c3 = 2502984374488603.0 / 9007199254740992.0, 2843567935040037.0 / 4503599627370496.0
        report = check_conditions(assemble_rmis(butcher_family(c2, c3), THREE_EIGHTHS))
        self.assertEqual(report.satisfied_order, 4)

    def test_rmis_off_family_curve_is_third_order(self):
        outer = butcher_family(0.4, 0.7)
        self.assertEqual(classical_order(outer), 4)
        report = check_conditions(assemble_rmis(outer, THREE_EIGHTHS))
        self.assertEqual(report.satisfied_order, 3)
        self.assertTrue(report.failing())
        self.assertTrue(all(label.startswith("4") for label in report.failing()))

    def test_residuals_are_magnitudes(self):
        g = assemble_mis(THREE_EIGHTHS, THREE_EIGHTHS)
        report = check_conditions(g)
        weights = {"f": g.b_f, "s": g.b_s}
        for sigma in ("f", "s"):
            for label, (row, target) in condition_rows(g, sigma).items():
                self.assertEqual(report.residuals[label], abs(float(weights[sigma] @ row - target)))
        self.assertTrue(all(value >= 0.0 for value in report.residuals.values()))
        self.assertGreater(report.max_residual(order=4, partition="f"), 1e-3)

    def test_slow_conditions_ignore_fast_weights(self):
        g = assemble_rmis(THREE_EIGHTHS, subcycle_inner(THREE_EIGHTHS, 2))
        corrupted = g.with_fast_weights(np.random.default_rng(3).normal(size=g.s_f))
        report = check_conditions(corrupted)
        self.assertLess(report.max_residual(partition="s"), 1e-12)
        self.assertGreater(report.max_residual(partition="f"), 1e-3)

    def test_inconsistent_tableau_rejected(self):
        g = assemble_mis(KW3, KW3)
        broken = GarkTableauSerializer(g).data
        broken["c_f"][1] += 1e-6
        serializer = GarkTableauSerializer(data=broken)
        self.assertTrue(serializer.is_valid(), serializer.errors)
        with self.assertRaises(NotInternallyConsistent):
            check_conditions(serializer.save())

    def test_v_outer_recorded(self):
        report = check_conditions(assemble_rmis(THREE_EIGHTHS, THREE_EIGHTHS))
        np.testing.assert_allclose(report.v_outer, [0.0, 11.0 / 24.0, 5.0 / 24.0, 1.0 / 24.0], atol=1e-15)

    def test_fast_rows_match_labels(self):
        g = assemble_rmis(KW3, KW3)
        matrix, targets, labels = fast_condition_system(g)
        self.assertEqual(matrix.shape, (14, g.s_f))
        self.assertEqual(labels, list(condition_rows(g, "f")))
        self.assertAlmostEqual(targets[labels.index("4d:f,s,f")], 1.0 / 24.0)

    def test_report_serializer(self):
        data = ConditionReportSerializer(check_conditions(assemble_mis(KW3, KW3))).data
        self.assertEqual(data["satisfied_order"], 3)
        self.assertEqual(len(data["residuals"]), 28)
        self.assertTrue(data["failing"])


class LemmaIdentityTests(SimpleTestCase):
    def test_identities_hold(self):
        for outer, inner in [
            (THREE_EIGHTHS, THREE_EIGHTHS),
            (KW3, KW3),
            (butcher_family(0.4, 0.7), KW3),
            (THREE_EIGHTHS, subcycle_inner(THREE_EIGHTHS, 34)),
        ]:
            self.assertLess(verify_lemma_identities(outer, inner, q_max=4), 1e-13)

    def test_identities_hold_on_random_family_members(self):
        inners = [THREE_EIGHTHS, KW3, subcycle_inner(THREE_EIGHTHS, 2), subcycle_inner(KW3, 3)]
        rng = np.random.default_rng(20)
        drawn = 0
        while drawn < 20:
            c2, c3 = np.sort(rng.uniform(0.1, 0.9, size=2))
            if c3 - c2 < 0.1 or abs(2.0 * c2 - 1.0) < 0.1 or abs(6.0 * c2 * c3 - 4.0 * c2 - 4.0 * c3 + 3.0) < 0.1:
                continue
            inner = inners[drawn % len(inners)]
            residual = verify_lemma_identities(butcher_family(c2, c3), inner, q_max=4)
            self.assertLess(residual, 1e-13, msg=f"c2={c2}, c3={c3}, inner {drawn % len(inners)}")
            drawn += 1

    def test_all_identity_families_reported(self):
        residuals = lemma_identity_residuals(KW3, KW3, q_max=2)
        self.assertEqual(len(residuals), 3 + 4)


class OptimizeTests(SimpleTestCase):
    def test_rmis_weights_are_feasible(self):
        g = assemble_rmis(THREE_EIGHTHS, subcycle_inner(THREE_EIGHTHS, 34))
        matrix, targets, _ = fast_condition_system(g)
        self.assertLess(np.max(np.abs(matrix @ g.b_f - targets)), 1e-12)

    @tag("slow")
    def test_subcycled_three_eighths(self):
        weights = optimize_fast_weights(THREE_EIGHTHS, subcycle_inner(THREE_EIGHTHS, 34))
        self.assertEqual(weights.shape, (408,))
        g = assemble_rmis(THREE_EIGHTHS, subcycle_inner(THREE_EIGHTHS, 34))
        matrix, targets, _ = fast_condition_system(g)
        full = g.scatter_active(weights)
        self.assertLess(np.max(np.abs(matrix @ full - targets)), 1e-11)

    def test_optimized_weights_keep_fourth_order(self):
        g = assemble_rmis(THREE_EIGHTHS, THREE_EIGHTHS)
        weights = optimize_fast_weights(THREE_EIGHTHS, THREE_EIGHTHS, include_collapsed=True)
        self.assertEqual(weights.shape, (16,))
        optimized = g.with_fast_weights(weights)
        report = check_conditions(optimized)
        self.assertEqual(report.satisfied_order, 4)
        np.testing.assert_array_equal(optimized.A_sf, g.A_sf)
        # Minimum norm: no longer than the structured feasible point.
        self.assertLessEqual(np.linalg.norm(weights), np.linalg.norm(g.b_f) + 1e-12)

    def test_too_few_stages_is_rank_deficient(self):
        # One Euler stage per interval: three unknowns against inconsistent fourth-order rows.
        with self.assertRaises(RankDeficient) as ctx:
            optimize_fast_weights(THREE_EIGHTHS, make_forward_euler())
        self.assertEqual(ctx.exception.unknowns, 3)
        self.assertLessEqual(ctx.exception.rank, 3)
        self.assertGreater(ctx.exception.independent, ctx.exception.rank)
        self.assertGreater(ctx.exception.residual, 1e-3)
