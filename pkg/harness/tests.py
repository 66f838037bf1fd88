import json
import math
import tempfile
from io import StringIO
from pathlib import Path
from unittest import mock

import numpy as np
from django.core.management import call_command
from django.core.management.base import CommandError
from django.test import SimpleTestCase, override_settings, tag

from core.exceptions import DomainError
from core.io import read_csv, read_json
from stepper.exceptions import NonFiniteState
from .services import (
    ConvergenceReport,
    ConvergenceStudyService,
    default_h_values,
    evaluate_convergence_point,
    fit_order,
    reference_grid,
)
from .tasks import run_convergence_point


class FitOrderTests(SimpleTestCase):
    def test_synthetic_third_order(self):
        h = np.array([1e-1, 5e-2, 2.5e-2, 1.25e-2])
        self.assertAlmostEqual(fit_order(h, 7.0 * h ** 3, (1e-9, 1.0)), 3.0, delta=1e-12)

    def test_points_outside_window_are_ignored(self):
        h = np.array([1.0, 0.5, 0.25, 0.125, 0.0625])
        errors = 0.01 * h ** 4
        errors[0] = 50.0
        errors[-1] = 1e-12
        self.assertAlmostEqual(fit_order(h, errors, (1e-9, 1.0)), 4.0, delta=1e-10)

    def test_undefined_order(self):
        self.assertTrue(math.isnan(fit_order([0.1, 0.05], [0.0, 0.0], (1e-9, 1.0))))
        self.assertTrue(math.isnan(fit_order([0.1, 0.05], [np.inf, 1e-3], (1e-9, 1.0))))

    def test_length_mismatch(self):
        with self.assertRaises(ValueError):
            fit_order([0.1, 0.05], [1e-3], (1e-9, 1.0))

    def test_default_window_from_settings(self):
        h = np.array([0.2, 0.1])
        self.assertAlmostEqual(fit_order(h, h ** 2), 2.0, delta=1e-12)


class ReferenceGridTests(SimpleTestCase):
    def test_finest_spacing_grid(self):
        grid = reference_grid((0.0, 1.0), [0.5, 0.25, 0.125])
        self.assertEqual(grid.size, 9)
        self.assertAlmostEqual(grid[-1], 1.0)

    def test_rejects_bad_lists(self):
        with self.assertRaises(DomainError):
            reference_grid((0.0, 1.0), [0.25, 0.5])
        with self.assertRaises(DomainError):
            reference_grid((0.0, 1.0), [0.3, 0.2])
        with self.assertRaises(DomainError):
            reference_grid((0.0, 1.0), [0.3])
        with self.assertRaises(DomainError):
            reference_grid((0.0, 1.0), [])

    def test_default_lists(self):
        linear = default_h_values("linear")
        self.assertEqual(len(linear), 7)
        self.assertAlmostEqual(linear[0], 2e-2)
        self.assertAlmostEqual(linear[-1], 2e-2 / 64)
        grid = reference_grid((0.0, 7.0), default_h_values("inverter"))
        self.assertEqual(grid.size, 4481)
        with self.assertRaises(DomainError):
            default_h_values("unknown")

    def test_report_lengths(self):
        with self.assertRaises(ValueError):
            ConvergenceReport("rmis-38", "zero", 100, [0.1, 0.05], [1e-3], [412, 824])


class ConvergenceServiceTests(SimpleTestCase):
    def setUp(self):
        self.tmp = tempfile.TemporaryDirectory()
        self.addCleanup(self.tmp.cleanup)

    def test_zero_problem_has_no_error(self):
        for use_workers in (True, False):
            service = ConvergenceStudyService(refcache=self.tmp.name, use_workers=use_workers)
            report = service.converge("rmis-38", "zero", [0.5, 0.25, 0.125], m=100)
            self.assertEqual(report.rms_errors, [0.0, 0.0, 0.0])
            self.assertEqual(report.total_calls, [824, 1648, 3296])
            self.assertEqual(report.steps, [2, 4, 8])
            self.assertTrue(math.isnan(report.fitted_order))

    def test_reference_is_cached(self):
        service = ConvergenceStudyService(refcache=self.tmp.name, use_workers=False)
        service.converge("mis-kw3", "zero", [0.5, 0.25], m=10)
        self.assertEqual(len(list(Path(self.tmp.name).glob("*.npy"))), 1)
        report = service.converge("rmis-kw3", "zero", [0.5, 0.25], m=10)
        self.assertEqual(len(list(Path(self.tmp.name).glob("*.npy"))), 1)
        self.assertEqual(report.reference["halvings"], 1)

    def test_unstable_point_is_reported(self):
        blowup = NonFiniteState("fast stage 1", 0.4, t_n=0.0)
        with mock.patch("harness.services.integrate", side_effect=blowup):
            point = evaluate_convergence_point("rmis-38", "zero", 0.5, 1, np.zeros((3, 2)), 0.5)
        self.assertTrue(point["unstable"])
        self.assertTrue(math.isinf(point["rms_error"]))
        self.assertEqual(point["total_calls"], 2 * (4 + 4 * 3))

    def test_large_errors_stay_out_of_the_fit(self):
        service = ConvergenceStudyService(refcache=self.tmp.name, use_workers=False)
        report = service.converge("rmis-38", "linear", [0.5, 0.25], m=1)
        self.assertGreater(report.rms_errors[0], 1.0)
        self.assertTrue(math.isnan(report.fitted_order))

    def test_missing_reference_in_task(self):
        outcome = run_convergence_point.delay(
            method="rmis-38", problem="zero", h=0.5, m=10, refcache=self.tmp.name,
            reference_key="missing", reference_spacing=0.5,
        ).get(timeout=10)
        self.assertFalse(outcome["success"])
        self.assertIn("not found", outcome["error"])

    def test_report_export(self):
        service = ConvergenceStudyService(refcache=self.tmp.name, use_workers=False)
        report = service.converge("rmis-38", "zero", [0.5, 0.25], m=10)
        csv_path, json_path = report.write(self.tmp.name)
        rows = read_csv(csv_path)
        self.assertEqual([row["h"] for row in rows], ["0.5", "0.25"])
        document = read_json(json_path)
        self.assertEqual(document["fitted_order"], "nan")
        self.assertEqual(document["fit_window"], [1e-9, 1.0])


class CommandTests(SimpleTestCase):
    def setUp(self):
        self.tmp = tempfile.TemporaryDirectory()
        self.addCleanup(self.tmp.cleanup)
        self.out = Path(self.tmp.name)

    def call(self, *args, **kwargs):
        stdout = StringIO()
        call_command(*args, stdout=stdout, **kwargs)
        return stdout.getvalue()

    def test_tableau_shipped(self):
        output = self.call("tableau", "38", json_out=str(self.out / "38.json"))
        self.assertIn("Classical order: 4", output)
        document = read_json(self.out / "38.json")
        self.assertEqual(document["order"], 4)
        self.assertAlmostEqual(document["rfsmr3"], 0.0, places=14)
        self.assertAlmostEqual(document["rmis4"], 0.0, places=14)

    def test_tableau_kw3(self):
        output = self.call("tableau", "kw3")
        self.assertIn("Classical order: 3", output)

    def test_tableau_family(self):
        output = self.call("tableau", family=[1.0 / 3.0, 2.0 / 3.0])
        self.assertIn("Classical order: 4", output)
        self.assertIn("RMIS family curve", output)

    def test_tableau_singular_family_point(self):
        with self.assertRaises(CommandError) as ctx:
            self.call("tableau", family=[0.5, 0.7])
        self.assertEqual(ctx.exception.returncode, 2)
        self.assertIn("2c2-1", str(ctx.exception))

    def test_tableau_from_file(self):
        path = self.out / "euler.json"
        path.write_text(json.dumps({"name": "euler", "A": [[0.0]], "b": [1.0], "c": [0.0]}))
        output = self.call("tableau", file=str(path))
        self.assertIn("Classical order: 1", output)

    def test_usage_errors(self):
        with self.assertRaises(CommandError) as ctx:
            self.call("tableau")
        self.assertEqual(ctx.exception.returncode, 1)
        with self.assertRaises(CommandError) as ctx:
            self.call("run", "--h", "abc")
        self.assertEqual(ctx.exception.returncode, 1)
        with self.assertRaises(CommandError) as ctx:
            self.call("converge", problem="zero")
        self.assertEqual(ctx.exception.returncode, 1)

    def test_unknown_names_are_domain_errors(self):
        with self.assertRaises(CommandError) as ctx:
            self.call("tableau", "rk4")
        self.assertEqual(ctx.exception.returncode, 2)
        with self.assertRaises(CommandError) as ctx:
            self.call("converge", method="rmis-99", problem="zero", h=[0.5], out=self.tmp.name, refcache=self.tmp.name)
        self.assertEqual(ctx.exception.returncode, 2)
        with self.assertRaises(CommandError) as ctx:
            self.call("converge", method="rmis-38", problem="zero", h=[0.25, 0.5], out=self.tmp.name, refcache=self.tmp.name)
        self.assertEqual(ctx.exception.returncode, 2)

    @override_settings(MULTIRATE_REF_MAX_HALVINGS=1)
    def test_reference_failure_is_numerical(self):
        with self.assertRaises(CommandError) as ctx:
            self.call("converge", method="rmis-38", problem="linear", h=[0.1], ref_tol=1e-30,
                      out=self.tmp.name, refcache=self.tmp.name, no_workers=True)
        self.assertEqual(ctx.exception.returncode, 3)

    def test_assemble(self):
        output = self.call("assemble", method="rmis-38", subcycles=[1, 1, 1], out=self.tmp.name)
        self.assertIn("Satisfied order: 4", output)
        document = read_json(self.out / "gark_rmis-38_m100.json")
        self.assertEqual(document["conditions"]["satisfied_order"], 4)
        self.assertEqual(len(document["tableau"]["b_s"]), 4)

    def test_run(self):
        output = self.call("run", method="rmis-38", problem="inverter", h=0.5, m=2,
                           assignments=["n_inverters=4", "n_fast=2", "gamma=0"], out=self.tmp.name)
        self.assertIn("14 steps", output)
        sidecar = read_json(self.out / "run_rmis-38_inverter_h0.5.json")
        self.assertEqual(sidecar["steps"], 14)
        self.assertEqual(sidecar["slow_calls"], 14 * 4)
        rows = read_csv(self.out / "run_rmis-38_inverter_h0.5.csv")
        self.assertEqual(len(rows), 15)
        self.assertEqual(list(rows[0]), ["t", "y_1", "y_2", "y_3", "y_4"])

    def test_run_with_custom_table(self):
        path = self.out / "38.json"
        self.call("tableau", "38", json_out=str(path))
        output = self.call("run", problem="zero", h=0.5, m=3, tableau_file=str(path), kind="mis", out=self.tmp.name)
        self.assertIn("2 steps", output)

    def test_converge_config_file(self):
        config = self.out / "study.json"
        config.write_text(json.dumps({"method": "rmis-38", "problem": "zero", "h": [0.5, 0.25], "m": 10}))
        output = self.call("converge", config=str(config), h=[1.0, 0.5], out=self.tmp.name, refcache=self.tmp.name)
        self.assertIn("fitted order undefined", output)
        document = read_json(self.out / "converge_rmis-38_zero.json")
        self.assertEqual(document["h_values"], [1.0, 0.5])
        self.assertEqual(document["m"], 10)

    def test_invalid_config_file(self):
        config = self.out / "bad.json"
        config.write_text(json.dumps({"m": -3}))
        with self.assertRaises(CommandError) as ctx:
            self.call("converge", config=str(config))
        self.assertEqual(ctx.exception.returncode, 1)

    def test_efficiency_call_counts(self):
        self.call("efficiency", methods=["rmis-38", "mis-kw3"], problem="zero", h=[1.0, 0.1],
                  out=self.tmp.name, refcache=self.tmp.name)
        rows = read_csv(self.out / "efficiency_zero.csv")
        calls = {(row["method"], row["h"]): int(row["total_calls"]) for row in rows}
        self.assertEqual(calls[("rmis-38", "1.0")], 412)
        self.assertEqual(calls[("rmis-38", "0.1")], 4120)
        self.assertEqual(calls[("mis-kw3", "1.0")], 318)
        self.assertEqual(calls[("mis-kw3", "0.1")], 3180)

    def test_stability(self):
        output = self.call("stability", method="rmis-38", kappa=10.0, out=self.tmp.name)
        self.assertIn("Stable area fraction", output)
        self.assertTrue((self.out / "stability_rmis-38_k10.csv").exists())
        self.assertTrue((self.out / "stability_rmis-38_k10.svg").exists())
        summary = read_json(self.out / "stability_rmis-38_k10.json")
        self.assertGreater(summary["area_fraction"], 0.0)
        self.assertLess(summary["area_fraction"], 1.0)

    def test_optimize(self):
        output = self.call("optimize", subcycles=[1, 1, 1], include_collapsed=True, out=self.tmp.name)
        self.assertIn("Satisfied order: 4", output)
        document = read_json(self.out / "opt-38-minnorm_m100.json")
        self.assertEqual(len(document["fast_weights"]), 16)

    def test_optimize_reads_config_file(self):
        config = self.out / "opt.json"
        config.write_text(json.dumps({"outer": "kw3", "inner": "38", "subcycles": [1, 1, 1], "include_collapsed": True}))
        output = self.call("optimize", config=str(config), outer="38", out=self.tmp.name)
        self.assertIn("Satisfied order: 4", output)
        document = read_json(self.out / "opt-38-minnorm_m100.json")
        self.assertEqual(document["outer"], "38")
        self.assertEqual(document["inner"], "38")
        self.assertTrue(document["include_collapsed"])
        self.assertEqual(len(document["fast_weights"]), 16)


# Expected fitted orders with m = 100 and the default step sizes.
EXPECTED_ORDERS = {
    "linear": {"rmis-38": 4.22, "rmis-kw3": 3.09, "mis-38": 3.18, "mis-kw3": 3.09},
    "brusselator": {"rmis-38": 4.16, "rmis-kw3": 3.30, "mis-38": 3.28, "mis-kw3": 3.02},
    "inverter": {"rmis-38": 4.07, "rmis-kw3": 2.93, "mis-38": 2.98, "mis-kw3": 2.98},
}
ORDER_TOLERANCE = 0.4


@tag("slow")
class ConvergenceOrderTests(SimpleTestCase):
    """Fitted orders of the shipped methods on the benchmark problems."""

    @classmethod
    def setUpClass(cls):
        super().setUpClass()
        cls.tmp = tempfile.TemporaryDirectory()
        cls.service = ConvergenceStudyService(refcache=cls.tmp.name, use_workers=False)

    @classmethod
    def tearDownClass(cls):
        cls.tmp.cleanup()
        super().tearDownClass()

    def assertOrders(self, problem):
        for method, expected in EXPECTED_ORDERS[problem].items():
            with self.subTest(method=method, problem=problem):
                report = self.service.converge(method, problem)
                self.assertAlmostEqual(report.fitted_order, expected, delta=ORDER_TOLERANCE)

    def test_linear_problem(self):
        self.assertOrders("linear")

    def test_brusselator(self):
        self.assertOrders("brusselator")

    def test_inverter_chain(self):
        self.assertOrders("inverter")

    def test_rmis_38_linear_band(self):
        report = self.service.converge("rmis-38", "linear")
        self.assertGreaterEqual(report.fitted_order, 3.9)
        self.assertLessEqual(report.fitted_order, 4.6)

    def test_mis_kw3_brusselator_band(self):
        report = self.service.converge("mis-kw3", "brusselator")
        self.assertGreaterEqual(report.fitted_order, 2.7)
        self.assertLessEqual(report.fitted_order, 3.4)

    def test_min_norm_method(self):
        report = self.service.converge("opt-38-minnorm", "linear")
        self.assertGreaterEqual(report.fitted_order, 3.8)
