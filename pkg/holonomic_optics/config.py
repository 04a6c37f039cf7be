"""
Tolerances, limits and the run configuration consumed by ``cli.py``.

A run configuration is a JSON document::

    {
        "task": "simulate",
        "inputs": {"schedule": "loop.json"},
        "out": "results",
        "steps": 4000,
        "seed": 7,
        "tolerances": {"HOLONOMY_TOL": 1e-9},
        "options": {"mode": "nonadiabatic"}
    }

Relative input paths are resolved against the directory of the config file.
"""
import json
import os
from collections import namedtuple

from .errors import InputError

# Exact arithmetic identities (Hermiticity, real diagonals)
STRUCTURE_TOL = 1e-12
# Derived orthonormality of frames
ORTHONORMAL_TOL = 1e-10
# Unitarity of holonomies and propagators
HOLONOMY_TOL = 1e-9
# Step-halving acceptance for path-ordered exponentials
REFINE_TOL = 1e-9
MAX_REFINEMENTS = 20
# Polar re-projection period of the integrator
REPROJECT_EVERY = 100
MIN_STEPS = 10
GAP_TOL = 1e-12
# Smallest singular value of consecutive frame overlaps
CONTINUITY_TOL = 0.5
SECTOR_LIMIT = 5000
CUTOFF_TOL = 1e-6
MULTISTART_ATTEMPTS = 50
SOLVER_TOL = 1e-8
DELTA_TOL = 1e-9

TASKS = ("simulate", "holonomy", "compile", "lift", "verify")

DEFAULTS = {
    "STRUCTURE_TOL": STRUCTURE_TOL,
    "ORTHONORMAL_TOL": ORTHONORMAL_TOL,
    "HOLONOMY_TOL": HOLONOMY_TOL,
    "REFINE_TOL": REFINE_TOL,
    "GAP_TOL": GAP_TOL,
    "CUTOFF_TOL": CUTOFF_TOL,
    "SOLVER_TOL": SOLVER_TOL,
    "DELTA_TOL": DELTA_TOL,
}


class RunConfig(
    namedtuple(
        "_RunConfig", ("task", "inputs", "out", "steps", "seed", "tolerances", "options")
    )
):
    @classmethod
    def create(
        cls, task, inputs=None, out=".", steps=4000, seed=0, tolerances=None, options=None
    ):
        if task not in TASKS:
            raise InputError("Unknown task: {}".format(task))
        merged = dict(DEFAULTS)
        for key, value in (tolerances or {}).items():
            if key not in DEFAULTS:
                raise InputError("Unknown tolerance: {}".format(key))
            merged[key] = float(value)
        if int(steps) < MIN_STEPS:
            raise InputError("steps must be >= {}, got {}".format(MIN_STEPS, steps))
        return cls(
            task, dict(inputs or {}), out, int(steps), int(seed), merged, dict(options or {})
        )

    @classmethod
    def load(cls, path, task=None, **overrides):
        """
        Reads a JSON config file; keyword overrides (out, steps, seed) that are
        not None win over file values.
        """
        try:
            with open(path) as handle:
                raw = json.load(handle)
        except OSError as e:
            raise InputError("Cannot read config {}: {}".format(path, e))
        except ValueError as e:
            raise InputError("Cannot parse config {}: {}".format(path, e))
        if not isinstance(raw, dict):
            raise InputError("Config {} must hold a JSON object".format(path))

        if task is not None:
            if raw.get("task", task) != task:
                raise InputError(
                    "Config task {!r} does not match sub-command {!r}".format(
                        raw.get("task"), task
                    )
                )
            raw["task"] = task
        base = os.path.dirname(os.path.abspath(path))
        inputs = {
            name: value if os.path.isabs(value) else os.path.join(base, value)
            for name, value in raw.get("inputs", {}).items()
        }
        for name, value in inputs.items():
            if not os.path.exists(value):
                raise InputError("Input {!r} not found: {}".format(name, value))

        fields = {
            key: raw[key] for key in ("out", "steps", "seed", "tolerances", "options")
            if key in raw
        }
        fields.update({k: v for k, v in overrides.items() if v is not None})
        try:
            return cls.create(raw.get("task"), inputs=inputs, **fields)
        except (TypeError, ValueError) as e:
            raise InputError("Invalid config {}: {}".format(path, e))

    def tol(self, name):
        return self.tolerances[name]

    def input(self, name):
        try:
            return self.inputs[name]
        except KeyError:
            raise InputError("Config lacks input {!r}".format(name))
