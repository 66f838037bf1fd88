import json
import os
import tempfile
from pathlib import Path

import numpy as np
from django.test import SimpleTestCase

from .exceptions import (
    EXIT_DOMAIN,
    EXIT_NUMERICAL,
    DomainError,
    MultirateError,
    NumericalFailure,
    UnknownName,
)
from .io import atomic_write_text, read_csv, read_json, to_jsonable, write_csv, write_json
from .metrics import rms_error


class ExceptionTests(SimpleTestCase):
    def test_branches_and_exit_codes(self):
        self.assertTrue(issubclass(DomainError, ValueError))
        self.assertTrue(issubclass(NumericalFailure, ArithmeticError))
        self.assertEqual(DomainError.exit_code, EXIT_DOMAIN)
        self.assertEqual(NumericalFailure.exit_code, EXIT_NUMERICAL)

    def test_unknown_name_message(self):
        error = UnknownName("method", "rk4", ["mis-38", "rmis-38"])
        self.assertIsInstance(error, KeyError)
        self.assertIsInstance(error, MultirateError)
        self.assertEqual(str(error), "Unknown method 'rk4'. Known: mis-38, rmis-38")


class RmsErrorTests(SimpleTestCase):
    def test_skips_initial_point(self):
        computed = np.array([[5.0, 5.0], [1.0, 2.0], [3.0, 4.0]])
        reference = np.array([[0.0, 0.0], [1.0, 1.0], [3.0, 1.0]])
        self.assertAlmostEqual(rms_error(computed, reference), np.sqrt((1.0 + 9.0) / 4.0))
        self.assertAlmostEqual(rms_error(computed, reference, skip_initial=False), np.sqrt(60.0 / 6.0))

    def test_non_finite_is_infinite(self):
        computed = np.array([[0.0], [np.nan]])
        self.assertEqual(rms_error(computed, np.zeros((2, 1))), float("inf"))

    def test_shape_mismatch(self):
        with self.assertRaises(ValueError):
            rms_error(np.zeros((3, 2)), np.zeros((2, 2)))


class FileOutputTests(SimpleTestCase):
    def setUp(self):
        self.tmp = tempfile.TemporaryDirectory()
        self.addCleanup(self.tmp.cleanup)
        self.root = Path(self.tmp.name)

    def test_jsonable_values(self):
        document = to_jsonable({
            "array": np.arange(3),
            "nan": float("nan"),
            "inf": np.float64("-inf"),
            "flag": np.bool_(True),
            "path": Path("a/b"),
        })
        self.assertEqual(document, {"array": [0, 1, 2], "nan": "nan", "inf": "-inf", "flag": True, "path": "a/b"})
        json.dumps(document)

    def test_json_round_trip_creates_directories(self):
        path = write_json(self.root / "nested" / "report.json", {"order": np.int64(4), "h": np.float64(0.5)})
        self.assertEqual(read_json(path), {"order": 4, "h": 0.5})

    def test_csv_keeps_full_precision(self):
        path = write_csv(self.root / "table.csv", ["h", "error"], [(0.1, 1.0 / 3.0)])
        rows = read_csv(path)
        self.assertEqual(float(rows[0]["error"]), 1.0 / 3.0)
        self.assertEqual(rows[0]["h"], "0.1")

    def test_atomic_write_leaves_no_temporaries(self):
        atomic_write_text(self.root / "out.txt", "first")
        atomic_write_text(self.root / "out.txt", "second")
        self.assertEqual((self.root / "out.txt").read_text(), "second")
        self.assertEqual(os.listdir(self.root), ["out.txt"])
