import json
import os
import tempfile
import unittest

from holonomic_optics.errors import InputError
from holonomic_optics.gadgets.verifier import (
    CHECKS,
    MUTATIONS,
    check_kerr_cutoff,
    check_non_abelian_witness,
    check_plaquette_anchor,
    failed_checks,
    run_suite,
    write_report,
)


class TestVerifier(unittest.TestCase):
    @classmethod
    def setUpClass(cls):
        cls.report = run_suite(0)

    def test_suite_passes(self):
        self.assertEqual(failed_checks(self.report), [])
        self.assertTrue(self.report["passed"])
        self.assertEqual(len(self.report["checks"]), len(CHECKS))
        for check in self.report["checks"]:
            self.assertIsNone(check["error"])

    def test_connection_sign_is_caught(self):
        self.assertIn("connection-sign", MUTATIONS)
        self.assertLess(check_plaquette_anchor(0, None), 1e-8)
        self.assertGreater(check_plaquette_anchor(0, "connection-sign"), 1e-3)
        report = run_suite(0, mutate="connection-sign")
        self.assertFalse(report["passed"])
        self.assertEqual(failed_checks(report), ["plaquette_anchor"])

    def test_unknown_mutation(self):
        with self.assertRaises(InputError):
            run_suite(0, mutate="drop-phase")

    def test_individual_checks(self):
        for seed in (1, 2):
            self.assertLess(check_kerr_cutoff(seed, None), 1e-6)
            self.assertGreater(check_non_abelian_witness(seed, None), 1e-3)

    def test_write_report(self):
        with tempfile.TemporaryDirectory() as tmp:
            path = os.path.join(tmp, "out", "report.json")
            write_report(path, self.report)
            with open(path) as handle:
                written = json.load(handle)
        self.assertEqual(written["seed"], 0)
        self.assertIsNone(written["mutate"])
        self.assertEqual([c["name"] for c in written["checks"]], [c[0] for c in CHECKS])


if __name__ == "__main__":
    unittest.main()
