import tempfile
from pathlib import Path

import numpy as np
from django.test import SimpleTestCase, tag

from butcher.conditions import classical_order
from butcher.tables import ButcherTable, make_kw3, make_three_eighths
from core.io import read_csv, read_json
from gark.tableau import assemble_mis
from problems.benchmarks import brusselator, inverter_chain, linear_coupled, zero_problem
from .dense import dense_gark_step, stage_order
from .exceptions import InvalidMethod, NonFiniteState, NotExplicitlyOrderable
from .methods import METHOD_CATALOG, MethodKind, MethodSpec, build_method, default_subcycles, subcycle_inner
from .problem import MultirateProblem
from .stepping import integrate, step

THREE_EIGHTHS = make_three_eighths()
KW3 = make_kw3()


def _relative(a, b):
    return np.linalg.norm(a - b) / max(np.linalg.norm(b), 1e-300)


class SubcycleTests(SimpleTestCase):
    def test_single_substep_is_identity(self):
        self.assertIs(subcycle_inner(KW3, 1), KW3)

    def test_two_substeps_of_three_eighths(self):
        table = subcycle_inner(THREE_EIGHTHS, 2)
        self.assertEqual(table.s, 8)
        np.testing.assert_allclose(
            table.c, [0, 1 / 6, 1 / 3, 1 / 2, 1 / 2, 2 / 3, 5 / 6, 1], atol=1e-15
        )
        np.testing.assert_allclose(
            table.b, [1 / 16, 3 / 16, 3 / 16, 1 / 16] * 2, atol=1e-16
        )
        self.assertTrue(table.explicit_first_stage)

    def test_composition_keeps_order(self):
        table = subcycle_inner(THREE_EIGHTHS, 34)
        self.assertEqual(table.s, 136)
        self.assertEqual(classical_order(table), 4)
        self.assertEqual(classical_order(subcycle_inner(KW3, 7)), 3)


class MethodSpecTests(SimpleTestCase):
    def test_default_schedules(self):
        self.assertEqual(build_method("rmis-38").subcycles, (34, 34, 34))
        self.assertEqual(build_method("mis-kw3").subcycles, (35, 35, 35))
        self.assertEqual(default_subcycles(THREE_EIGHTHS, 10), (4, 4, 4))

    def test_calls_per_step(self):
        self.assertEqual(build_method("rmis-38").calls_per_step, 412)
        self.assertEqual(build_method("mis-kw3").calls_per_step, 318)

    def test_block_subcycles_mark_zero_width_interval(self):
        spec = build_method("mis-38", m=10)
        self.assertEqual(spec.block_subcycles, (4, 4, 4, 0))
        self.assertEqual(build_method("rmis-kw3", m=10).block_subcycles, (4, 4, 4))

    def test_wrong_schedule_length(self):
        with self.assertRaises(InvalidMethod):
            MethodSpec(MethodKind.MIS, THREE_EIGHTHS, THREE_EIGHTHS, (2, 2))

    def test_implicit_inner_rejected(self):
        implicit = ButcherTable(A=[[0.5]], b=[1.0], c=[0.5])
        with self.assertRaises(InvalidMethod):
            MethodSpec(MethodKind.MIS, KW3, implicit, (1, 1, 1))

    def test_optimized_method_has_no_collapsed_weights(self):
        spec = build_method("opt-38-minnorm", m=10)
        self.assertEqual(spec.tableau.s_f, 3 * 16 + 4)
        np.testing.assert_array_equal(spec.fast_weight_blocks[3], np.zeros((1, 4)))


class StepTests(SimpleTestCase):
    def test_zero_right_hand_side(self):
        problem = zero_problem(3)
        y = np.array([1.0, -2.0, 3.5])
        for name in METHOD_CATALOG:
            out = step(problem, build_method(name, m=4), 0.3, y, 0.1)
            np.testing.assert_array_equal(out.y_next, y)

    def test_call_counts_match_cost_table(self):
        out = step(linear_coupled(), build_method("rmis-38"), 0.0, np.array([1.0, 1.0]), 1e-3)
        self.assertEqual(out.n_slow_calls, 4)
        self.assertEqual(out.n_fast_calls, 408)
        self.assertEqual(out.n_fast_calls + out.n_slow_calls, 412)
        # b_4 of the outer table weights a fast evaluation at the last slow stage.
        self.assertEqual(out.n_aux_fast_calls, 1)

    def test_mis_kw3_call_counts(self):
        out = step(brusselator(), build_method("mis-kw3"), 0.0, brusselator().y0, 1e-2)
        self.assertEqual(out.n_slow_calls, 3)
        self.assertEqual(out.n_fast_calls, 315)
        self.assertEqual(out.n_aux_fast_calls, 0)

    def test_brusselator_matches_dense_without_subcycling(self):
        problem = brusselator()
        spec = MethodSpec(MethodKind.RMIS, THREE_EIGHTHS, THREE_EIGHTHS, (1, 1, 1))
        out = step(problem, spec, 0.0, problem.y0, 1e-3)
        dense = dense_gark_step(spec.tableau, problem, 0.0, problem.y0, 1e-3)
        self.assertLess(_relative(out.y_next, dense.y_next), 1e-12)

    def test_linearity(self):
        problem = linear_coupled()
        spec = build_method("rmis-38", m=10)
        y = np.array([0.3, -1.2])
        base = step(problem, spec, 0.0, y, 5e-3).y_next
        scaled = step(problem, spec, 0.0, 2.5 * y, 5e-3).y_next
        self.assertLess(_relative(scaled, 2.5 * base), 1e-13)

    def test_embedded_solution_is_the_mis_solution(self):
        problem = brusselator()
        y = problem.y0
        embedded = step(problem, build_method("rmis-38-emb", m=20), 0.5, y, 2e-2).y_embedded
        mis = step(problem, build_method("mis-38", m=20), 0.5, y, 2e-2).y_next
        self.assertLess(_relative(embedded, mis), 1e-14)

    def test_embedded_matches_dense(self):
        problem = brusselator()
        spec = build_method("rmis-kw3-emb", m=6)
        out = step(problem, spec, 1.0, problem.y0, 1e-2)
        dense = dense_gark_step(spec.tableau, problem, 1.0, problem.y0, 1e-2)
        self.assertLess(_relative(out.y_embedded, dense.y_embedded), 1e-12)
        self.assertLess(_relative(out.y_next, dense.y_next), 1e-12)

    def test_non_finite_state_reports_stage(self):
        problem = MultirateProblem(
            name="blowup",
            dim=1,
            f_fast=lambda t, y: np.full_like(y, np.inf),
            f_slow=lambda t, y: np.zeros_like(y),
            y0=[1.0],
            t_span=(0.0, 1.0),
        )
        with self.assertRaises(NonFiniteState) as ctx:
            step(problem, build_method("mis-kw3", m=3), 0.0, problem.y0, 0.1)
        self.assertIn("fast stage 1", ctx.exception.stage)

    def test_one_step_error_order(self):
        problem = linear_coupled()
        spec = build_method("rmis-38")
        hs = np.array([8e-3, 4e-3, 2e-3, 1e-3])
        errors = [
            np.linalg.norm(step(problem, spec, 0.0, problem.y0, h).y_next - problem.analytic(h))
            for h in hs
        ]
        slope = np.polyfit(np.log(hs), np.log(errors), 1)[0]
        self.assertGreaterEqual(slope, 4.7)


class OracleEquivalenceTests(SimpleTestCase):
    @classmethod
    def setUpClass(cls):
        super().setUpClass()
        cls.methods = {name: build_method(name) for name in METHOD_CATALOG}
        cls.orders = {name: stage_order(spec.tableau) for name, spec in cls.methods.items()}

    def _draws(self, problem, rng):
        t0, tf = problem.t_span
        for _ in range(10):
            h = rng.uniform(1e-3, 5e-3)
            t_n = rng.uniform(t0, tf - h)
            if problem.name == "inverter":
                y = rng.uniform(0.0, 5.0, size=problem.dim)
            elif problem.name == "brusselator":
                y = problem.y0 + 0.1 * rng.normal(size=3)
            else:
                y = rng.normal(size=problem.dim)
            yield t_n, y, h

    @tag("slow")
    def test_every_method_on_every_problem(self):
        rng = np.random.default_rng(2024)
        for problem in (linear_coupled(), brusselator(), inverter_chain()):
            for name, spec in self.methods.items():
                for t_n, y, h in self._draws(problem, rng):
                    out = step(problem, spec, t_n, y, h)
                    dense = dense_gark_step(spec.tableau, problem, t_n, y, h, order=self.orders[name])
                    self.assertLess(
                        _relative(out.y_next, dense.y_next), 1e-12,
                        msg=f"{name} on {problem.name} at t={t_n}, h={h}",
                    )


class DenseStepTests(SimpleTestCase):
    def test_zero_right_hand_side(self):
        problem = zero_problem(2)
        g = build_method("rmis-38", m=2).tableau
        y = np.array([0.25, 4.0])
        np.testing.assert_array_equal(dense_gark_step(g, problem, 0.0, y, 0.1).y_next, y)

    def test_implicit_stage_rejected(self):
        implicit = ButcherTable(A=[[0.5]], b=[1.0], c=[0.5], name="midpoint")
        with self.assertRaises(NotExplicitlyOrderable):
            stage_order(assemble_mis(KW3, implicit))


class IntegrateTests(SimpleTestCase):
    def test_point_count(self):
        trajectory = integrate(linear_coupled(), build_method("rmis-38", m=10), 0.01)
        self.assertEqual(trajectory.times.size, 101)
        self.assertAlmostEqual(trajectory.times[-1], 1.0, delta=1e-12)
        self.assertEqual(trajectory.steps, 100)

    def test_zero_problem_stays_put(self):
        problem = zero_problem(2)
        trajectory = integrate(problem, build_method("mis-kw3", m=3), 0.25)
        np.testing.assert_array_equal(trajectory.states, np.ones((5, 2)))

    def test_cumulative_slow_calls(self):
        trajectory = integrate(brusselator(), build_method("mis-kw3"), 1e-2, t_span=(0.0, 0.5))
        self.assertEqual(trajectory.steps, 50)
        self.assertEqual(trajectory.slow_calls, 3 * trajectory.steps)
        self.assertEqual(trajectory.fast_calls, 315 * trajectory.steps)

    def test_short_final_step(self):
        trajectory = integrate(zero_problem(1), build_method("rmis-kw3", m=3), 0.3)
        np.testing.assert_allclose(trajectory.times, [0.0, 0.3, 0.6, 0.9, 1.0], atol=1e-15)

    def test_blowup_reports_step_start(self):
        problem = MultirateProblem(
            name="late-blowup",
            dim=1,
            f_fast=lambda t, y: np.zeros_like(y) if t < 0.45 else np.full_like(y, np.nan),
            f_slow=lambda t, y: np.zeros_like(y),
            y0=[1.0],
            t_span=(0.0, 1.0),
        )
        with self.assertRaises(NonFiniteState) as ctx:
            integrate(problem, build_method("mis-kw3", m=3), 0.1)
        self.assertAlmostEqual(ctx.exception.t_n, 0.4, delta=1e-12)

    def test_trajectory_export(self):
        trajectory = integrate(linear_coupled(), build_method("rmis-38", m=4), 0.25)
        with tempfile.TemporaryDirectory() as tmp:
            csv_path, json_path = trajectory.write(Path(tmp) / "run.csv")
            rows = read_csv(csv_path)
            self.assertEqual(list(rows[0]), ["t", "y_1", "y_2"])
            self.assertEqual(len(rows), 5)
            sidecar = read_json(json_path)
            self.assertEqual(sidecar["steps"], 4)
            self.assertEqual(sidecar["slow_calls"], 16)
