import tempfile
from pathlib import Path

import numpy as np
from django.test import SimpleTestCase, tag

from core.exceptions import DomainError, UnknownName
from core.metrics import rms_error
from .benchmarks import (
    brusselator,
    build_problem,
    inverter_chain,
    linear_coupled,
    partition_rhs,
    zero_problem,
)
from .exceptions import InvalidParameters, NoConvergence
from .reference import ReferenceCache, compute_reference, grid_indices, reference_solution


class BenchmarkTests(SimpleTestCase):
    def test_inverter_initial_slope(self):
        problem = inverter_chain()
        y = problem.y0
        total = problem.f_fast(0.0, y) + problem.f_slow(0.0, y)
        np.testing.assert_array_equal(total, np.full(100, 5.0))
        self.assertTrue(np.all(problem.f_fast(0.0, y)[3:] == 0.0))
        self.assertTrue(np.all(problem.f_slow(0.0, y)[:3] == 0.0))

    def test_inverter_input_ramp(self):
        problem = build_problem("inverter", {"n_inverters": 2, "n_fast": 1})
        y = np.array([5.0, 0.0])
        before = problem.rhs(4.0, y)
        after = problem.rhs(6.5, y)
        # Gate of node 1 at 1.5 V opens its pull-down path: g = 0.5^2.
        self.assertAlmostEqual(before[0], 0.0)
        self.assertAlmostEqual(after[0], 5.0 - 5.0 - 100.0 * 0.25)

    def test_linear_split(self):
        problem = linear_coupled()
        y = np.array([1.0, 1.0])
        np.testing.assert_allclose(problem.f_fast(0.0, y), [-1905.0, 0.0])
        np.testing.assert_allclose(problem.f_slow(0.0, y), [0.0, -45.0])
        np.testing.assert_allclose(problem.analytic(0.0), [1.0, 1.0], atol=1e-15)

    def test_linear_analytic_solves_the_ode(self):
        problem = linear_coupled()
        t, delta = 0.137, 1e-6
        derivative = (problem.analytic(t + delta) - problem.analytic(t - delta)) / (2 * delta)
        np.testing.assert_allclose(derivative, problem.rhs(t, problem.analytic(t)), rtol=1e-6, atol=1e-6)

    def test_brusselator_at_initial_state(self):
        problem = brusselator()
        self.assertAlmostEqual(problem.f_slow(0.0, problem.y0)[0], 3.111, delta=1e-12)
        np.testing.assert_allclose(problem.f_fast(0.0, problem.y0), [0.0, 0.0, -30.0], atol=1e-12)

    def test_partition_adds_up(self):
        def rhs(t, y):
            return np.array([y[1], -y[0], t * y[2]])

        f_fast, f_slow = partition_rhs(rhs, [0, 2])
        y = np.array([1.0, 2.0, 3.0])
        np.testing.assert_array_equal(f_fast(2.0, y) + f_slow(2.0, y), rhs(2.0, y))
        np.testing.assert_array_equal(f_fast(2.0, y), [2.0, 0.0, 6.0])

    def test_overrides(self):
        problem = build_problem("brusselator", {"epsilon": 0.1, "t_span": [0, 2]})
        self.assertEqual(problem.t_span, (0.0, 2.0))
        self.assertAlmostEqual(problem.f_fast(0.0, problem.y0)[2], -3.0)

    def test_bad_overrides(self):
        with self.assertRaises(InvalidParameters):
            build_problem("brusselator", {"viscosity": 1.0})
        with self.assertRaises(InvalidParameters):
            build_problem("inverter", {"n_fast": 200})
        with self.assertRaises(UnknownName):
            build_problem("lorenz")


class ReferenceTests(SimpleTestCase):
    def test_linear_reference_matches_analytic(self):
        problem = linear_coupled()
        grid = np.linspace(0.0, 1.0, 101)
        states = reference_solution(problem, grid, 1e-11)
        exact = np.array([problem.analytic(t) for t in grid])
        self.assertLess(rms_error(states, exact), 1e-11)

    def test_zero_problem_converges_at_first_refinement(self):
        problem = zero_problem(2)
        result = compute_reference(problem, np.linspace(0.0, 1.0, 11))
        self.assertEqual(result.halvings, 1)
        np.testing.assert_array_equal(result.states, np.ones((11, 2)))

    def test_decoupled_inverters(self):
        problem = build_problem("inverter", {"gamma": 0.0, "n_inverters": 5, "n_fast": 1})
        grid = np.linspace(0.0, 7.0, 71)
        states = reference_solution(problem, grid)
        exact = 5.0 * (1.0 - np.exp(-grid))[:, None] * np.ones(5)
        self.assertLess(np.max(np.abs(states - exact)), 1e-10)

    def test_subsampled_grid(self):
        problem = zero_problem(1)
        indices, base = grid_indices(problem, [0.0, 0.1, 0.3, 0.4])
        np.testing.assert_array_equal(indices, [0, 1, 3, 4])
        self.assertAlmostEqual(base, 0.1)

    def test_grid_off_lattice(self):
        with self.assertRaises(DomainError):
            grid_indices(zero_problem(1), [0.0, 0.2, 0.3, 0.35001])
        with self.assertRaises(DomainError):
            grid_indices(zero_problem(1), [0.1, 0.2])

    def test_no_convergence(self):
        with self.assertRaises(NoConvergence) as ctx:
            compute_reference(linear_coupled(), np.linspace(0.0, 1.0, 11), 1e-14, max_halvings=1)
        self.assertEqual(ctx.exception.halvings, 1)

    def test_cache_round_trip(self):
        problem = build_problem("brusselator", {"t_span": [0.0, 0.5]})
        grid = np.linspace(0.0, 0.5, 11)
        with tempfile.TemporaryDirectory() as tmp:
            cache = ReferenceCache(tmp)
            first, key = cache.get_or_compute(problem, grid, 1e-9)
            self.assertTrue((Path(tmp) / f"{key}.npy").exists())
            self.assertTrue((Path(tmp) / f"{key}.json").exists())
            second, same_key = cache.get_or_compute(problem, grid, 1e-9)
            self.assertEqual(key, same_key)
            np.testing.assert_array_equal(first.states, second.states)
            other = ReferenceCache.key(build_problem("brusselator", {"t_span": [0.0, 0.5], "a": 1.0}), grid, 1e-9)
            self.assertNotEqual(key, other)


class LinearSpectrumTests(SimpleTestCase):
    def test_eigenvalues(self):
        matrix = np.array(linear_coupled().params["matrix"])
        eigenvalues = np.sort_complex(np.linalg.eigvals(matrix))
        expected = np.sort_complex(np.array([-27.5 - 2.5j * np.sqrt(1439.0), -27.5 + 2.5j * np.sqrt(1439.0)]))
        np.testing.assert_allclose(eigenvalues, expected, atol=1e-10)

    def test_linear_partition_on_random_states(self):
        problem = linear_coupled()
        rng = np.random.default_rng(11)
        for _ in range(5):
            y1, y2 = rng.uniform(-5.0, 5.0, size=2)
            np.testing.assert_allclose(problem.f_fast(0.0, np.array([y1, y2])), [-5.0 * y1 - 1900.0 * y2, 0.0])
            np.testing.assert_allclose(problem.f_slow(0.0, np.array([y1, y2])), [0.0, 5.0 * y1 - 50.0 * y2])


def _inverter_rhs(t, y, gamma=100.0, y_op=5.0, threshold=1.0, source=0.0):
    out = []
    for k, drain in enumerate(y):
        if k == 0:
            gate = 0.0 if t < 5.0 else t - 5.0
        else:
            gate = y[k - 1]
        current = max(gate - source - threshold, 0.0) ** 2 - max(gate - drain - threshold, 0.0) ** 2
        out.append(y_op - drain - gamma * current)
    return np.array(out)


def _brusselator_rhs(y, a=1.2, b=2.5, epsilon=1e-2):
    y1, y2, y3 = y
    return np.array([
        a - (y3 + 1.0) * y1 + y2 * y1 * y1,
        y3 * y1 - y2 * y1 * y1,
        (b - y3) / epsilon - y3 * y1,
    ])


class FullRightHandSideTests(SimpleTestCase):
    def test_inverter_chain(self):
        problem = inverter_chain()
        rng = np.random.default_rng(12)
        for t in (1.0, 5.5, 6.9):
            y = rng.uniform(0.0, 5.0, size=100)
            expected = _inverter_rhs(t, y)
            fast, slow = problem.f_fast(t, y), problem.f_slow(t, y)
            np.testing.assert_allclose(fast + slow, expected, rtol=1e-13, atol=1e-10)
            np.testing.assert_allclose(fast[:3], expected[:3], rtol=1e-13, atol=1e-10)
            self.assertTrue(np.all(fast[3:] == 0.0))
            self.assertTrue(np.all(slow[:3] == 0.0))

    def test_brusselator(self):
        problem = brusselator()
        rng = np.random.default_rng(13)
        for _ in range(5):
            y = rng.uniform(0.5, 4.0, size=3)
            expected = _brusselator_rhs(y)
            fast, slow = problem.f_fast(0.0, y), problem.f_slow(0.0, y)
            np.testing.assert_allclose(fast + slow, expected, rtol=1e-12, atol=1e-10)
            np.testing.assert_allclose(fast, [0.0, 0.0, (2.5 - y[2]) / 1e-2], rtol=1e-13)

    def test_uniform_chain_equilibrium(self):
        # Interior nodes with drain equal to gate settle where y_op - v = gamma (v - 1)^2.
        v = 1.0 + (np.sqrt(1601.0) - 1.0) / 200.0
        problem = inverter_chain()
        rhs = problem.f_fast(0.0, np.full(100, v)) + problem.f_slow(0.0, np.full(100, v))
        np.testing.assert_allclose(rhs[1:], 0.0, atol=1e-11)
        self.assertAlmostEqual(rhs[0], 5.0 - v, places=12)

    @tag("slow")
    def test_reference_chain_stays_between_rails(self):
        problem = inverter_chain()
        grid = np.linspace(0.0, 7.0, 71)
        states = reference_solution(problem, grid, 1e-6)
        self.assertTrue(np.all(np.isfinite(states)))
        self.assertGreaterEqual(states.min(), -1e-6)
        self.assertLessEqual(states.max(), 5.0 + 1e-6)
        # The input gate stays below threshold until t = 6, so the first node charges freely.
        for t in (5.0, 6.0):
            self.assertAlmostEqual(states[int(round(10 * t)), 0], 5.0 * (1.0 - np.exp(-t)), delta=1e-5)
