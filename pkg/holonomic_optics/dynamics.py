"""
Brute-force single-photon dynamics.

The mode amplitudes obey d alpha/dt = i Phi(t) alpha, so the single-photon
propagator is U = T exp(i int Phi dt).  Because the Hamiltonian is bilinear,
U determines the evolution of every multi-photon state (see fock.lift_unitary).

Overlaps with a transported frame are written O = conj(C(T)) U C(0)^T.  Under
adiabatic following O = conj(P exp int A) for A = dC/dt C^dagger, so holonomies
are extracted as conj(O) = C(T) conj(U) C(0)^dagger, which is directly
comparable with connection.path_ordered_exponential.
"""
import logging
from collections import namedtuple

import numpy as np
from scipy.integrate import simpson
from scipy.linalg import polar

from .config import DELTA_TOL, GAP_TOL, MIN_STEPS, REPROJECT_EVERY, SECTOR_LIMIT
from .connection import FramePath, compose_loops, transport
from .errors import (
    DeltaConstraintError,
    InputError,
    LevelCrossingError,
    NumericalError,
    ScheduleError,
)
from .fock import fock_basis, lift_unitary, mode_monomial_state
from .mode_algebra import ModeFrame, UnitaryMatrix
from .schedules import rescaled
from .star_graph import bright_modes

logger = logging.getLogger(__name__)

# Frame samples per schedule segment for holonomy predictions (2^k + 1)
SEGMENT_SAMPLES = 1025


class PropagationResult(
    namedtuple(
        "_PropagationResult",
        ("propagator", "leakage", "extracted_holonomy", "dynamical_phases", "series"),
    )
):
    """
    series holds (times, leakage(t)) at the recorded checkpoints, or None.
    """


def _phi(schedule, t):
    phi = schedule.phi(t).entries
    if not np.all(np.isfinite(phi)):
        raise NumericalError("Non-finite coupling matrix at t={}".format(t))
    return phi


def propagate_series(schedule, steps, t_start=0.0, t_end=None, every=None):
    """
    Classical fourth-order Runge-Kutta with fixed step (t_end - t_start)/steps.
    The propagator is polar-projected back onto the unitary group every
    REPROJECT_EVERY steps.  Returns (times, propagators) at every `every`-th
    step (the first and last always included).
    """
    if int(steps) < MIN_STEPS:
        raise InputError("steps must be >= {}, got {}".format(MIN_STEPS, steps))
    steps = int(steps)
    t_end = schedule.duration if t_end is None else float(t_end)
    h = (t_end - t_start) / steps
    dim = schedule.phi(t_start).dim
    U = np.eye(dim, dtype=complex)
    times, record = [t_start], [U.copy()]

    t = t_start
    gen_t = 1j * _phi(schedule, t)
    for step in range(1, steps + 1):
        gen_mid = 1j * _phi(schedule, t + h / 2)
        gen_next = 1j * _phi(schedule, t + h)
        k1 = gen_t @ U
        k2 = gen_mid @ (U + h / 2 * k1)
        k3 = gen_mid @ (U + h / 2 * k2)
        k4 = gen_next @ (U + h * k3)
        U = U + h / 6 * (k1 + 2 * k2 + 2 * k3 + k4)
        t = t_start + step * h
        gen_t = gen_next
        if step % REPROJECT_EVERY == 0 or step == steps:
            if not np.all(np.isfinite(U)):
                raise NumericalError("Propagator diverged at t={}".format(t))
            U = polar(U)[0]
        if (every and step % every == 0) or step == steps:
            times.append(t)
            record.append(U.copy())
    logger.debug("propagated %d steps of %.3e over [%g, %g]", steps, h, t_start, t_end)
    return np.array(times), record


def propagate(schedule, steps, t_start=0.0, t_end=None):
    _, record = propagate_series(schedule, steps, t_start, t_end)
    return UnitaryMatrix(record[-1])


def _leakage(frame_end, U, frame_start):
    "Spectral norm of (I - P_end) U P_start."
    outside = np.eye(U.shape[0]) - frame_end.projector()
    return float(np.linalg.norm(outside @ U @ frame_start.projector(), 2))


def extract_holonomy(frame_end, U, frame_start):
    "C(T) conj(U) C(0)^dagger."
    return frame_end.coeffs @ np.conj(U) @ frame_start.coeffs.conj().T


def dynamical_phase(schedule, steps):
    "Theta = int eps dt on the integrator grid."
    times = schedule.times(steps)
    eps = [schedule.couplings(t).epsilon for t in times]
    return float(simpson(eps, x=times))


def adiabatic_run(schedule, T=None, steps=4000, every=None):
    """
    Propagates a closed loop and reads off dark-space leakage, the extracted
    dark holonomy and the bright dynamical phases (+Theta, -Theta).
    """
    if T is not None and T != schedule.duration:
        schedule = rescaled(schedule, T)
    if not schedule.is_closed():
        raise ScheduleError("Adiabatic runs need a closed loop: kappa(0) != kappa(T)")
    times, record = propagate_series(schedule, steps, every=every)
    U = record[-1]
    start = schedule.frame(0.0)
    end = schedule.frame(schedule.duration)
    leakage = _leakage(end, U, start)
    series = None
    if every:
        series = (times, [_leakage(schedule.frame(t), V, start) for t, V in zip(times, record)])
    theta = dynamical_phase(schedule, steps)
    logger.info("adiabatic run T=%g: leakage %.3e, Theta %.6f", schedule.T, leakage, theta)
    return PropagationResult(
        UnitaryMatrix(U),
        min(leakage, 1.0),
        UnitaryMatrix(extract_holonomy(end, U, start)),
        (theta, -theta),
        series,
    )


def _proportional_area(schedule, steps):
    """
    Checks kappa(t) = Omega(t) g for one fixed direction g and returns the
    effective pulse area |g| delta(T), with Omega the envelope (1 without one).
    """
    g, weight = None, None
    for t in schedule.times(min(int(steps), 400)):
        kappas = schedule.couplings(t).kappas
        norm = np.linalg.norm(kappas)
        omega = 1.0 if schedule.envelope is None else schedule.envelope.value(t, schedule.T)
        if norm == 0 or omega == 0:
            continue
        direction = kappas / norm
        if g is None:
            g, weight = direction, norm / omega
        elif (
            np.max(np.abs(direction - g)) > 1e-9
            or abs(norm / omega - weight) > 1e-9 * weight
        ):
            raise ScheduleError(
                "Nonadiabatic runs need proportional couplings kappa(t) = Omega(t) g"
            )
    if g is None:
        raise ScheduleError("Couplings vanish over the whole pulse")
    if schedule.envelope is None:
        return weight * schedule.duration
    return weight * schedule.pulse_area(schedule.duration)


def nonadiabatic_run(schedule, steps=4000, every=None):
    """
    Proportional pulse with area pi: the bright subspace picks up -1, the dark
    modes are untouched, and the frame {D_j, B} returns to itself.
    """
    delta = _proportional_area(schedule, steps)
    if abs(delta - np.pi) > DELTA_TOL:
        raise DeltaConstraintError(delta)
    times, record = propagate_series(schedule, steps, every=every)
    U = record[-1]
    start = schedule.frame(0.0)
    end = schedule.frame(schedule.duration)
    series = None
    if every:
        series = (times, [_leakage(schedule.frame(t), V, start) for t, V in zip(times, record)])
    theta = dynamical_phase(schedule, steps)
    return PropagationResult(
        UnitaryMatrix(U),
        min(_leakage(end, U, start), 1.0),
        UnitaryMatrix(extract_holonomy(end, U, start)),
        (theta, -theta),
        series,
    )


def _clusters(values, scale):
    tol = 1e-9 * max(1.0, scale)
    groups = [[0]]
    for i in range(1, len(values)):
        if values[i] - values[i - 1] > tol:
            groups.append([i])
        else:
            groups[-1].append(i)
    return groups


def adiabaticity_metric(schedule, t, h=None):
    """
    max ||V_m^dagger dPhi/dt V_n|| over distinct eigenvalue clusters m != n,
    divided by the smallest gap between clusters.  dPhi/dt is a central
    difference with step 1e-6 T.
    """
    T = schedule.duration
    h = 1e-6 * T if h is None else h
    t_plus, t_minus = min(t + h, T), max(t - h, 0.0)
    phi = schedule.phi(t).entries
    dphi = (schedule.phi(t_plus).entries - schedule.phi(t_minus).entries) / (
        t_plus - t_minus
    )
    values, vectors = np.linalg.eigh(phi)
    groups = _clusters(values, np.linalg.norm(phi, 2))
    if len(groups) < 2:
        raise LevelCrossingError(0.0)
    centres = [values[g].mean() for g in groups]
    gap = float(np.min(np.diff(centres)))
    if gap < GAP_TOL:
        raise LevelCrossingError(gap)
    numerator = 0.0
    for m, gm in enumerate(groups):
        for n, gn in enumerate(groups):
            if m != n:
                block = vectors[:, gm].conj().T @ dphi @ vectors[:, gn]
                numerator = max(numerator, np.linalg.norm(block, 2))
    return float(numerator / gap)


def metric_series(schedule, times):
    return np.array([adiabaticity_metric(schedule, t) for t in times])


def schedule_holonomy(schedule, frame_fn=None, samples=SEGMENT_SAMPLES):
    """
    Geometric holonomy of the transported frame (the schedule's own frame by
    default), path-ordered segment by segment so corners are never
    differentiated across.
    """
    frame_fn = schedule.frame if frame_fn is None else frame_fn
    holonomy = compose_loops(
        transport(FramePath.sample(frame_fn, np.linspace(seg.t0, seg.t1, samples)))
        for seg in schedule.segments
    )
    return holonomy._replace(loop_closed=schedule.is_closed())


def predict_total_holonomy(schedule, steps=4000, samples=SEGMENT_SAMPLES):
    """
    Adiabatic prediction of the full propagator:

        U = sum_s C_s(T)^T X_s conj(C_s(0)),   s in {dark, +, -}
        X_0 = conj(P exp int A_0),   X_pm = e^{pm i Theta} conj(P exp int A_pm)
    """
    theta = dynamical_phase(schedule, steps)
    T = schedule.duration
    sectors = [(schedule.frame, 1.0)]
    for index, sign in ((1, 1.0), (2, -1.0)):
        sectors.append(
            (
                lambda t, i=index: ModeFrame(bright_modes(schedule.couplings(t))[i]),
                np.exp(1j * sign * theta),
            )
        )
    total = np.zeros((schedule.M, schedule.M), dtype=complex)
    for frame_fn, phase in sectors:
        x = phase * np.conj(schedule_holonomy(schedule, frame_fn, samples).matrix)
        total += frame_fn(T).coeffs.T @ x @ frame_fn(0.0).coeffs.conj()
    return total


def strong_theorem_check(phi_path, N, steps=4000, limit=SECTOR_LIMIT):
    """
    Largest amplitude |<n(T)| U_N |n'(0)>| between distinct eigenmode
    monomials with the same N-photon energy sum n . eps.
    """
    U = propagate(phi_path, steps).entries
    lifted = lift_unitary(U, N, limit).entries
    values, start_vectors = np.linalg.eigh(phi_path.phi(0.0).entries)
    _, end_vectors = np.linalg.eigh(phi_path.phi(phi_path.duration).entries)
    start = ModeFrame(start_vectors.T)
    end = ModeFrame(end_vectors.T)

    basis = fock_basis(len(values), N)
    energies = np.array([np.dot(n, values) for n in basis.occupations])
    tol = 1e-9 * max(1.0, float(np.max(np.abs(values))))
    pairs = [
        (a, b)
        for a in range(len(basis))
        for b in range(len(basis))
        if a != b and abs(energies[a] - energies[b]) <= tol
    ]
    if not pairs:
        raise InputError("No accidental {}-photon degeneracy in {}".format(N, values))

    coupling = 0.0
    for a, b in pairs:
        out = mode_monomial_state(end, basis.occupations[a]).amplitudes
        inp = mode_monomial_state(start, basis.occupations[b]).amplitudes
        coupling = max(coupling, abs(out.conj() @ lifted @ inp))
    logger.info("strong adiabatic check over %d degenerate pairs: %.3e", len(pairs), coupling)
    return float(coupling)
