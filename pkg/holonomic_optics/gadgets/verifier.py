"""
Named invariant checks over the whole library, run by ``cli.py verify``.

Each check returns a scalar compared against its tolerance; the suite report
lists every check with its value so regressions are visible even when they
stay inside tolerance.
"""
import functools
import logging
from collections import namedtuple

import numpy as np
from scipy.linalg import expm

from ..compiler import recompose, reck_decompose
from ..config import CUTOFF_TOL, HOLONOMY_TOL, ORTHONORMAL_TOL
from ..connection import (
    ConnectionSample,
    FramePath,
    compose_loops,
    connection_along_path,
    gauge_transform,
    nonadiabatic_loop_matrix,
    path_ordered_exponential,
    plaquette_connection,
    plaquette_holonomy,
    plaquette_legs,
)
from ..dynamics import nonadiabatic_run
from ..errors import Error, InputError
from ..fock import (
    block_coupling_check,
    fock_basis,
    lift_hamiltonian,
    lift_unitary,
    mode_monomial_state,
    parallel_transport_identity_check,
)
from ..kerr import CirclePath, KerrParameters, projector_connection
from ..mode_algebra import (
    ModeFrame,
    double_commutator,
    geometric_condition_residual,
    random_coupling_matrix,
    random_frame,
    random_unitary,
)
from ..schedules import HamiltonianPath, pulse_schedule
from ..star_graph import (
    StarCouplings,
    bright_modes,
    dark_frame,
    plaquette_couplings,
    plaquette_frame,
    star_coupling_matrix,
)
from ..utils import write_json

logger = logging.getLogger(__name__)

MUTATIONS = ("connection-sign",)

CheckResult = namedtuple("CheckResult", ("name", "value", "tol", "passed", "error"))


def _random_couplings(rng, M):
    return StarCouplings(rng.standard_normal(M - 1) + 1j * rng.standard_normal(M - 1))


def check_unitarity(seed, mutate):
    U = random_unitary(4, seed)
    return max(U.defect(), lift_unitary(U, 2).defect())


def _rotating_frames(times, seed):
    rng = np.random.default_rng(seed)
    x = rng.standard_normal((4, 4)) + 1j * rng.standard_normal((4, 4))
    x = (x - x.conj().T) / 2
    start = random_unitary(4, seed).entries[:2]
    return [ModeFrame(start @ expm(t * x).T) for t in times]


def check_gauge_covariance(seed, mutate):
    """
    Closed gauge G(t) = G0 exp(sin(2 pi t) Y) on a rotating frame: the
    holonomy must turn into G0^dagger U G0.
    """
    rng = np.random.default_rng(seed)
    times = np.linspace(0.0, 1.0, 4097)
    samples = connection_along_path(FramePath(times, _rotating_frames(times, seed)))
    y = rng.standard_normal((2, 2)) + 1j * rng.standard_normal((2, 2))
    y = 0.2 * (y - y.conj().T) / 2
    g0 = random_unitary(2, seed + 1).entries
    gauge = [g0 @ expm(np.sin(2 * np.pi * t) * y) for t in times]
    U = path_ordered_exponential(samples, tol=1e-8).matrix
    transformed = path_ordered_exponential(gauge_transform(samples, gauge), tol=1e-8).matrix
    return float(np.max(np.abs(transformed - g0.conj().T @ U @ g0)))


def _plaquette_tuple(rng):
    return (
        rng.uniform(0.0, np.pi / 2),
        rng.uniform(np.pi / 2, np.pi),
        rng.uniform(0.2, 1.3),
        rng.uniform(0.2, 1.3),
        0.0,
        rng.uniform(0.3, 2.0),
    )


def _sampled_plaquette(params, mutate, samples=1025):
    s = np.linspace(0.0, 1.0, samples)
    holonomies = []
    for start, end in plaquette_legs(*params):
        path = FramePath(s, [plaquette_frame(*(start + x * (end - start)), 4) for x in s])
        connection = connection_along_path(path)
        if mutate == "connection-sign":
            connection = [ConnectionSample(c.time, -c.matrix) for c in connection]
        holonomies.append(path_ordered_exponential(connection))
    return compose_loops(holonomies).matrix


def check_plaquette_anchor(seed, mutate):
    rng = np.random.default_rng(seed)
    error = 0.0
    for _ in range(3):
        params = _plaquette_tuple(rng)
        expected = plaquette_holonomy(*params).entries
        error = max(error, float(np.max(np.abs(_sampled_plaquette(params, mutate) - expected))))
    return error


@functools.lru_cache(maxsize=4)
def _pulse_runs(seed):
    rng = np.random.default_rng(seed)
    runs = []
    for _ in range(2):
        theta, varphi = rng.uniform(0.1, np.pi - 0.1), rng.uniform(0.0, 2 * np.pi)
        result = nonadiabatic_run(pulse_schedule(theta, varphi, 4, 1.0), steps=2000)
        runs.append((theta, varphi, result.propagator.entries))
    return runs


def check_bst_anchor(seed, mutate):
    error = 0.0
    for theta, varphi, U in _pulse_runs(seed):
        expected = nonadiabatic_loop_matrix(theta, varphi).entries
        error = max(error, float(np.max(np.abs(U[:2, :2] - expected))))
    return error


def check_central_mode_phase(seed, mutate):
    return max(abs(U[3, 3] + 1) for _, _, U in _pulse_runs(seed))


def _frame_derivative(theta, vartheta, varphi, index, h=1e-5):
    point = np.array([theta, vartheta, varphi], dtype=float)
    step = np.zeros(3)
    step[index] = h
    plus = plaquette_frame(*(point + step), 4).coeffs
    minus = plaquette_frame(*(point - step), 4).coeffs
    return (plus - minus) / (2 * h)


def check_connection_formulas(seed, mutate):
    rng = np.random.default_rng(seed)
    error = 0.0
    for _ in range(20):
        point = (rng.uniform(0, np.pi), rng.uniform(0, np.pi), rng.uniform(0, 2 * np.pi))
        C = plaquette_frame(*point, 4).coeffs
        expected = plaquette_connection(point[1])
        for index in range(3):
            A = _frame_derivative(*point, index) @ C.conj().T
            error = max(error, float(np.max(np.abs(A - expected[index]))))
    return error


def check_geometric_condition(seed, mutate):
    sc = _random_couplings(np.random.default_rng(seed), 5)
    return geometric_condition_residual(star_coupling_matrix(sc), dark_frame(sc))


def check_double_commutator(seed, mutate):
    phi = random_coupling_matrix(4, seed)
    frame = random_frame(4, 2, seed + 1)
    elements = frame.matrix_elements(phi.entries)
    return max(
        abs(double_commutator(phi, frame, j, k) - elements[j, k])
        for j in range(2)
        for k in range(2)
    )


def check_fock_dark_states(seed, mutate):
    """
    Tripod, two photons: the three dark monomials and psi_+- = B_+ B_- |0>
    are annihilated by the lifted Hamiltonian.
    """
    sc = _random_couplings(np.random.default_rng(seed), 4)
    H = lift_hamiltonian(star_coupling_matrix(sc), 2)
    spectral = bright_modes(sc)
    states = [
        mode_monomial_state(spectral.dark, occ).amplitudes
        for occ in fock_basis(2, 2).occupations
    ]
    bright = ModeFrame(np.array([spectral.bright_plus, spectral.bright_minus]))
    states.append(mode_monomial_state(bright, (1, 1)).amplitudes)
    return max(float(np.linalg.norm(H @ s)) for s in states)


def _tripod_leg(theta0, dtheta, vartheta, varphi, duration):
    def theta(t):
        return theta0 + dtheta * np.sin(np.pi * t / (2 * duration)) ** 2

    def frame(t):
        sc = plaquette_couplings(theta(t), vartheta, varphi, 4)
        spectral = bright_modes(sc)
        dark = plaquette_frame(theta(t), vartheta, varphi, 4)
        return dark.stack(np.array([spectral.bright_plus, spectral.bright_minus]))

    phi_path = HamiltonianPath(
        lambda t: star_coupling_matrix(plaquette_couplings(theta(t), vartheta, varphi, 4)),
        duration,
    )
    return phi_path, frame


def check_psi_pm_decoupling(seed, mutate):
    rng = np.random.default_rng(seed)
    duration = 20.0
    phi_path, frame = _tripod_leg(
        rng.uniform(0.0, np.pi), 0.5, rng.uniform(0.3, 1.2), rng.uniform(0, 2 * np.pi), duration
    )
    path = FramePath.sample(frame, np.linspace(0.0, duration, 2049))
    dark = [(2, 0, 0, 0), (1, 1, 0, 0), (0, 2, 0, 0)]
    return block_coupling_check(phi_path, path, (dark, [(0, 0, 1, 1)]))


def check_parallel_transport_identity(seed, mutate):
    sc = _random_couplings(np.random.default_rng(seed), 4)
    phi = star_coupling_matrix(sc)
    frame = dark_frame(sc)
    return max(parallel_transport_identity_check(phi, frame, N) for N in (1, 2, 3))


def check_reck_recomposition(seed, mutate):
    U = random_unitary(4, seed).entries
    error = 0.0
    for special_unitary in (False, True):
        gates, phases = reck_decompose(U, special_unitary)
        error = max(error, float(np.max(np.abs(recompose(gates, phases) - U))))
    return error


def check_kerr_cutoff(seed, mutate):
    params = KerrParameters(CirclePath(1.0, 1.0), None, 30)
    t = np.random.default_rng(seed).uniform(0.0, 2 * np.pi)
    A = projector_connection(params, t, check=False)
    doubled = projector_connection(params.with_cutoff(60), t, check=False)
    return float(np.max(np.abs(A - doubled)))


def check_non_abelian_witness(seed, mutate):
    "Commutator norm of two plaquette holonomies; must stay away from zero."
    rng = np.random.default_rng(seed)
    U1 = plaquette_holonomy(*_plaquette_tuple(rng)).entries
    U2 = plaquette_holonomy(*_plaquette_tuple(rng)).entries
    return float(np.linalg.norm(U1 @ U2 - U2 @ U1))


# (name, check, tolerance, passes when the value is at most the tolerance)
CHECKS = (
    ("unitarity", check_unitarity, ORTHONORMAL_TOL, True),
    ("gauge_covariance", check_gauge_covariance, 1e-7, True),
    ("plaquette_anchor", check_plaquette_anchor, 1e-8, True),
    ("bst_anchor", check_bst_anchor, 1e-8, True),
    ("central_mode_phase", check_central_mode_phase, 1e-8, True),
    ("connection_formulas", check_connection_formulas, 1e-6, True),
    ("geometric_condition", check_geometric_condition, ORTHONORMAL_TOL, True),
    ("double_commutator", check_double_commutator, 1e-12, True),
    ("fock_dark_states", check_fock_dark_states, HOLONOMY_TOL, True),
    ("psi_pm_decoupling", check_psi_pm_decoupling, HOLONOMY_TOL, True),
    ("parallel_transport_identity", check_parallel_transport_identity, HOLONOMY_TOL, True),
    ("reck_recomposition", check_reck_recomposition, HOLONOMY_TOL, True),
    ("kerr_cutoff", check_kerr_cutoff, CUTOFF_TOL, True),
    ("non_abelian_witness", check_non_abelian_witness, 1e-3, False),
)


def _run_check(name, check, tol, at_most, seed, mutate):
    try:
        value = float(check(seed, mutate))
    except Error as e:
        logger.error("check %s raised: %s", name, e)
        return CheckResult(name, None, tol, False, str(e))
    passed = value <= tol if at_most else value >= tol
    log = logger.info if passed else logger.error
    log("%-28s %.3e (tol %.1e) %s", name, value, tol, "ok" if passed else "FAILED")
    return CheckResult(name, value, tol, passed, None)


def run_suite(seed=0, mutate=None):
    """
    Runs every check and returns the report dict.  mutate="connection-sign"
    negates the sampled connection wherever the suite path-orders it.
    """
    if mutate is not None and mutate not in MUTATIONS:
        raise InputError("Unknown mutation {!r}; expected one of {}".format(mutate, MUTATIONS))
    seed = int(seed)
    results = [
        _run_check(name, fn, tol, at_most, seed, mutate) for name, fn, tol, at_most in CHECKS
    ]
    return {
        "seed": seed,
        "mutate": mutate,
        "passed": all(r.passed for r in results),
        "checks": [
            {
                "name": r.name,
                "value": r.value,
                "tol": r.tol,
                "passed": r.passed,
                "error": r.error,
            }
            for r in results
        ],
    }


def failed_checks(report):
    return [c["name"] for c in report["checks"] if not c["passed"]]


def write_report(path, report):
    write_json(path, report)
