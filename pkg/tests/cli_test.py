import contextlib
import io
import json
import os
import tempfile
import unittest

import numpy as np

import cli
from holonomic_optics.schedules import plaquette_schedule, pulse_schedule
from holonomic_optics.utils import matrix_to_json, write_json


class TestCli(unittest.TestCase):
    def setUp(self):
        self._tmp = tempfile.TemporaryDirectory()
        self.tmp = self._tmp.name
        self.out = os.path.join(self.tmp, "results")

    def tearDown(self):
        self._tmp.cleanup()

    def _config(self, task, inputs, **fields):
        for name, obj in inputs.items():
            write_json(os.path.join(self.tmp, name + ".json"), obj)
        config = dict(
            task=task, inputs={name: name + ".json" for name in inputs}, **fields
        )
        path = os.path.join(self.tmp, task + ".config.json")
        write_json(path, config)
        return path

    def _run(self, *argv):
        stdout = io.StringIO()
        with contextlib.redirect_stdout(stdout):
            code = cli.main(list(argv))
        return code, stdout.getvalue()

    def test_missing_config(self):
        code, _ = self._run("compile", "-c", os.path.join(self.tmp, "missing.json"))
        self.assertEqual(code, 2)

    def test_task_mismatch(self):
        path = self._config("lift", {"unitary": matrix_to_json(np.eye(2))})
        code, _ = self._run("compile", "-c", path)
        self.assertEqual(code, 2)

    def test_compile_identity(self):
        path = self._config("compile", {"target": matrix_to_json(np.eye(3))})
        code, out = self._run("compile", "-c", path, "-o", self.out)
        self.assertEqual(code, 0)
        self.assertEqual(out.strip(), "fidelity=1")
        with open(os.path.join(self.out, "program.json")) as handle:
            self.assertEqual(json.load(handle)["gates"], [])

    def test_compile_writes_schedules(self):
        U = np.array([[1, 1j], [1j, 1]]) / np.sqrt(2)
        path = self._config("compile", {"target": matrix_to_json(U)})
        code, out = self._run("compile", "-c", path, "-o", self.out)
        self.assertEqual(code, 0)
        self.assertGreaterEqual(float(out.strip().split("=")[1]), 1 - 1e-9)
        self.assertTrue(os.path.exists(os.path.join(self.out, "schedules", "loop_000.json")))

    def test_not_unitary(self):
        path = self._config("compile", {"target": matrix_to_json(np.diag([1.0, 2.0]))})
        code, _ = self._run("compile", "-c", path, "-o", self.out)
        self.assertEqual(code, 2)

    def test_delta_constraint(self):
        schedule = pulse_schedule(1.0, 0.0, 4, 1.0, delta_T=3.0)
        path = self._config("simulate", {"schedule": schedule.to_json()})
        code, _ = self._run("simulate", "-c", path, "-o", self.out, "--steps", "200")
        self.assertEqual(code, 3)

    def test_simulate_pulse(self):
        schedule = pulse_schedule(1.0, 0.4, 4, 1.0)
        path = self._config("simulate", {"schedule": schedule.to_json()})
        code, out = self._run("simulate", "-c", path, "-o", self.out, "--steps", "2000")
        self.assertEqual(code, 0)
        self.assertLess(float(out.strip().split("=")[1]), 1e-8)
        for name in ("propagator.json", "leakage.csv", "metric.csv"):
            self.assertTrue(os.path.exists(os.path.join(self.out, name)))
        with open(os.path.join(self.out, "leakage.csv")) as handle:
            self.assertEqual(handle.readline().strip(), "t,value")

    def test_simulate_bad_every(self):
        schedule = pulse_schedule(1.0, 0.4, 4, 1.0)
        for every in (0, -5, "ten"):
            path = self._config(
                "simulate", {"schedule": schedule.to_json()}, options={"every": every}
            )
            code, _ = self._run("simulate", "-c", path, "-o", self.out, "--steps", "200")
            self.assertEqual(code, 2)

    def test_holonomy_schedule(self):
        schedule = plaquette_schedule(0.2, 0.6, 0.6, 0.9, 0.0, 0.4, 4, 1.0)
        path = self._config("holonomy", {"schedule": schedule.to_json()})
        code, out = self._run("holonomy", "-c", path, "-o", self.out)
        self.assertEqual(code, 0)
        self.assertTrue(out.startswith("convergence="))
        with open(os.path.join(self.out, "holonomy.json")) as handle:
            self.assertEqual(json.load(handle)["rows"], 2)

    def test_lift(self):
        path = self._config("lift", {"unitary": matrix_to_json(np.eye(2))})
        code, out = self._run("lift", "-c", path, "-o", self.out)
        self.assertEqual(code, 0)
        self.assertEqual(out.strip(), "size=3")
        self.assertTrue(os.path.exists(os.path.join(self.out, "sector.basis.json")))

    def test_verify_unknown_mutation(self):
        code, _ = self._run("verify", "-o", self.out, "--mutate", "drop-phase")
        self.assertEqual(code, 2)

    def test_verify_mutation_fails(self):
        code, out = self._run("verify", "-o", self.out, "--mutate", "connection-sign")
        self.assertEqual(code, 1)
        self.assertTrue(out.startswith("passed="))
        with open(os.path.join(self.out, "report.json")) as handle:
            self.assertFalse(json.load(handle)["passed"])

    def test_no_subcommand(self):
        with contextlib.redirect_stderr(io.StringIO()):
            with self.assertRaises(NotImplementedError):
                cli.main([])


if __name__ == "__main__":
    unittest.main()
