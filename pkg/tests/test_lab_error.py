import unittest

from hypercyclic_lab.lab_error import ErrorCode, LabError, ProblemAccumulator
from tests.custom_assertions import CustomAssertions


class TestProblemAccumulator(unittest.TestCase, CustomAssertions):

    def test_no_problems_does_not_raise(self):
        ProblemAccumulator().raise_if_any()

    def test_collects_and_numbers_problems(self):
        acc = ProblemAccumulator()
        acc.add("targets", "must be >= 1")
        acc.add("radii.factor", "must be > 1")
        acc.add("targets", "too many")
        e = self.assert_lab_error(lambda: acc.raise_if_any("shift.nt"), ErrorCode.SEMANTIC_VALIDATION,
                                  "Found 3 config problem(s) in shift.nt", "1. targets: must be >= 1",
                                  "3. targets: too many")
        self.assertEqual(["targets", "radii.factor"], acc.keys)
        self.assertIsInstance(e, LabError)

    def test_capture_records_lab_errors_under_the_key(self):
        acc = ProblemAccumulator()

        def bad():
            raise LabError("broken", ErrorCode.DOMAIN)

        self.assertEqual("fallback", acc.capture("operator", bad, default="fallback"))
        self.assertEqual(7, acc.capture("operator", lambda: 7))
        self.assertEqual(["operator: broken"], acc.problems)

    def test_capture_lets_other_exceptions_through(self):
        acc = ProblemAccumulator()
        with self.assertRaises(KeyError):
            acc.capture("operator", lambda: {}['missing'])

    def test_error_code_is_int(self):
        self.assertEqual(8, LabError("x", ErrorCode.INVARIANT_FAILED).error_code)
