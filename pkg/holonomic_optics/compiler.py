"""
Compilation of K x K mode unitaries into loop schedules on the star graph.

A target is first reduced by Givens nulling to two-mode gates on adjacent
pairs.  Each gate is then realized either

  * nonadiabatically, as two proportional pulses of area pi whose outer
    blocks M(theta, varphi) = I - 2 g^* g^T compose to the gate, or
  * adiabatically, as one (or two) plaquette loops on the three-parameter
    submanifold, anchored at the base point (theta, vartheta, varphi) =
    (pi, 0, 0) where only the ancilla couples to the centre.

At that base point the dark frame restricted to the gate pair has rows
(a_q, -a_p), so a frame holonomy U realizes the mode-basis gate
C_b^T conj(U) C_b.
"""
import logging
from collections import namedtuple

import numpy as np
from scipy.optimize import least_squares

from .config import HOLONOMY_TOL, MULTISTART_ATTEMPTS, SOLVER_TOL
from .connection import _rotation, _z, nonadiabatic_loop_matrix, plaquette_holonomy
from .dynamics import propagate
from .errors import DimensionError, InputError, NonUnitaryError, SolverError
from .mode_algebra import unitarity_defect
from .schedules import plaquette_schedule, pulse_schedule
from .star_graph import plaquette_frame
from .utils import matrix_from_json, matrix_to_json, trace_fidelity

logger = logging.getLogger(__name__)

MODES = ("adiabatic", "nonadiabatic")

GIVENS_TOL = 1e-15
GATE_TOL = 1e-10

BASE_THETA = np.pi
BASE_VARTHETA = 0.0
BASE_VARPHI = 0.0

_PAULI = (
    np.array([[0, 1], [1, 0]], dtype=complex),
    np.array([[0, -1j], [1j, 0]], dtype=complex),
    np.array([[1, 0], [0, -1]], dtype=complex),
)


class TwoModeGate(namedtuple("_TwoModeGate", ("mode_pair", "matrix", "phase"))):
    """
    2 x 2 unitary acting on the 1-based modes (j, k); phase = arg(det) / 2.
    """

    def __new__(cls, mode_pair, matrix, phase=None):
        j, k = (int(m) for m in mode_pair)
        if j < 1 or k < 1 or j == k:
            raise InputError("Invalid mode pair {}".format(mode_pair))
        matrix = np.array(matrix, dtype=complex)
        if matrix.shape != (2, 2):
            raise DimensionError("Gate matrix must be 2x2, got {}".format(matrix.shape))
        defect = unitarity_defect(matrix)
        if defect > GATE_TOL:
            raise NonUnitaryError(defect, GATE_TOL)
        if phase is None:
            phase = float(np.angle(np.linalg.det(matrix)) / 2)
        return super(TwoModeGate, cls).__new__(cls, (j, k), matrix, float(phase))

    def embed(self, K):
        "The gate as a K x K matrix acting trivially on the other modes."
        j, k = self.mode_pair
        if max(j, k) > K:
            raise DimensionError("Gate on {} does not fit {} modes".format(self.mode_pair, K))
        full = np.eye(K, dtype=complex)
        idx = [j - 1, k - 1]
        full[np.ix_(idx, idx)] = self.matrix
        return full

    def to_json(self):
        return {"pair": list(self.mode_pair), "matrix": matrix_to_json(self.matrix)}


class CompiledProgram(
    namedtuple(
        "_CompiledProgram",
        ("mode", "modes", "gates", "loops", "residual_phase", "fidelity_estimate"),
    )
):
    """
    gates are in application order; loops[i] lists the loop parameters that
    realize gates[i] (first loop applied first).  The loops reproduce the
    target up to the global phase e^{i residual_phase}.
    """

    def to_json(self):
        return {
            "mode": self.mode,
            "modes": self.modes,
            "gates": [
                dict(gate.to_json(), loops=[dict(loop) for loop in loops])
                for gate, loops in zip(self.gates, self.loops)
            ],
            "residual_phase": self.residual_phase,
            "fidelity_estimate": self.fidelity_estimate,
        }

    @classmethod
    def from_json(cls, obj):
        try:
            mode = obj["mode"]
            gates, loops = [], []
            for entry in obj["gates"]:
                gates.append(TwoModeGate(entry["pair"], matrix_from_json(entry["matrix"])))
                loops.append([{k: float(v) for k, v in loop.items()} for loop in entry["loops"]])
            modes = int(obj.get("modes", max([max(g.mode_pair) for g in gates] + [2])))
            program = cls(
                mode,
                modes,
                gates,
                loops,
                float(obj.get("residual_phase", 0.0)),
                float(obj.get("fidelity_estimate", float("nan"))),
            )
        except (KeyError, TypeError, ValueError, AttributeError) as e:
            raise InputError("Malformed program JSON: {}".format(e))
        if mode not in MODES:
            raise InputError("Unknown compilation mode {!r}".format(mode))
        return program


def _givens(x, y):
    "SU(2) rotation T with T (x, y)^T = (r, 0)^T, r >= 0."
    r = np.hypot(abs(x), abs(y))
    return np.array([[np.conj(x), np.conj(y)], [-y, x]]) / r


def reck_decompose(target, special_unitary=False):
    """
    Givens elimination column by column, each column nulled from the last
    row upwards.  Returns (gates, phases) in application order with

        target = G_n ... G_1 diag(phases).

    By default each diagonal phase is folded into the first gate touching
    its mode, so only untouched modes keep a phase in `phases`.  With
    special_unitary the gates are SU(2), the diagonal is split into K - 1
    gates diag(e^{ib}, e^{-ib}) applied first, and `phases` is the uniform
    global phase e^{i arg(det)/K}.
    """
    U = np.array(getattr(target, "entries", target), dtype=complex)
    if U.ndim != 2 or U.shape[0] != U.shape[1]:
        raise DimensionError("Target must be square, got {}".format(U.shape))
    defect = unitarity_defect(U)
    if defect > HOLONOMY_TOL:
        raise NonUnitaryError(defect, HOLONOMY_TOL)
    K = U.shape[0]
    W = U.copy()
    rotations = []
    for col in range(K - 1):
        for row in range(K - 1, col, -1):
            if abs(W[row, col]) < GIVENS_TOL:
                continue
            T = _givens(W[row - 1, col], W[row, col])
            W[[row - 1, row], :] = T @ W[[row - 1, row], :]
            rotations.append(((row, row + 1), T))
    # U = T_1^dagger ... T_n^dagger W with W diagonal
    gates = [TwoModeGate(pair, T.conj().T) for pair, T in reversed(rotations)]
    diagonal = np.diag(W).copy()
    diagonal /= np.abs(diagonal)

    if special_unitary:
        chi = np.angle(np.linalg.det(U)) / K
        psi = np.angle(diagonal * np.exp(-1j * chi))
        betas = np.cumsum(psi)[:-1]
        phase_gates = [
            TwoModeGate((j + 1, j + 2), np.diag([np.exp(1j * b), np.exp(-1j * b)]))
            for j, b in enumerate(betas)
            if abs(np.sin(b)) > GIVENS_TOL or np.cos(b) < 0
        ]
        return phase_gates + gates, np.full(K, np.exp(1j * chi))

    folded = []
    for gate in gates:
        idx = [m - 1 for m in gate.mode_pair]
        phases = diagonal[idx]
        matrix = gate.matrix @ np.diag(phases)
        diagonal[idx] = 1.0
        folded.append(TwoModeGate(gate.mode_pair, matrix))
    return folded, diagonal


def recompose(gates, phases):
    "G_n ... G_1 diag(phases)."
    K = len(phases)
    total = np.diag(np.asarray(phases, dtype=complex))
    for gate in gates:
        total = gate.embed(K) @ total
    return total


def _su2_coordinates(matrix):
    "(a0, a) with matrix = a0 I + i a . sigma for matrix in SU(2)."
    a0 = float(np.trace(matrix).real / 2)
    a = np.array([np.trace(matrix @ p).imag / 2 for p in _PAULI])
    return a0, a


def _angles(n):
    "Loop (theta, varphi) with M(theta, varphi) = n . sigma."
    n = n / np.linalg.norm(n)
    theta = float(np.arccos(np.clip(n[2], -1.0, 1.0)))
    if np.hypot(n[0], n[1]) < GATE_TOL:
        return theta, 0.0
    varphi = float((np.arctan2(n[1], n[0]) - np.pi) % (2 * np.pi))
    return theta, varphi


def synthesize_nonadiabatic(gate):
    """
    Two loops with M(theta_2, varphi_2) M(theta_1, varphi_1) = e^{-i chi} G,
    chi = arg(det G) / 2.  Each M is n . sigma for a unit vector n, and

        (n_2 . sigma)(n_1 . sigma) = n_2 . n_1 + i (n_2 x n_1) . sigma,

    so n_1 is taken orthogonal to the rotation axis and n_2 is n_1 turned by
    the rotation angle about it.  Returns (loop_1, loop_2, chi).
    """
    matrix = np.asarray(getattr(gate, "matrix", gate), dtype=complex)
    chi = float(np.angle(np.linalg.det(matrix)) / 2)
    a0, a = _su2_coordinates(np.exp(-1j * chi) * matrix)
    norm = np.linalg.norm(a)
    alpha = np.arctan2(norm, a0)
    if norm < GATE_TOL:
        # +-I: any axis will do; the z axis keeps both loops at theta = 0 or pi
        m = np.array([1.0, 0.0, 0.0])
        n1 = np.array([0.0, 0.0, 1.0])
    else:
        m = -a / norm
        helper = np.array([1.0, 0.0, 0.0]) if abs(m[0]) < 0.9 else np.array([0.0, 1.0, 0.0])
        n1 = np.cross(m, helper)
        n1 /= np.linalg.norm(n1)
    n2 = np.cos(alpha) * n1 - np.sin(alpha) * np.cross(n1, m)
    loop1, loop2 = _angles(n1), _angles(n2)
    realized = nonadiabatic_loop_matrix(*loop2).entries @ nonadiabatic_loop_matrix(*loop1).entries
    assert np.allclose(np.exp(1j * chi) * realized, matrix, atol=1e-9), "two-loop synthesis"
    return loop1, loop2, chi


def base_frame(pair=(1, 2), M=4, ancilla=3):
    "Dark-frame rows on the gate pair at the base point."
    rows = plaquette_frame(BASE_THETA, BASE_VARTHETA, BASE_VARPHI, M, pair, ancilla).coeffs
    idx = [m - 1 for m in pair]
    return rows[:2][:, idx].real


def gate_from_holonomy(holonomy):
    "Mode-basis gate realized by a frame holonomy at the base point."
    C = base_frame()
    return C.T @ np.conj(np.asarray(getattr(holonomy, "entries", holonomy))) @ C


def holonomy_for_gate(matrix):
    "Frame holonomy that realizes the mode-basis gate."
    C = base_frame()
    return np.conj(C @ np.asarray(matrix) @ C.T)


def plaquette_params(dtheta, dphi, vartheta0, vartheta1):
    "Absolute loop parameters of a plaquette anchored at the base point."
    return {
        "theta0": BASE_THETA,
        "theta1": BASE_THETA + float(dtheta),
        "vartheta0": float(vartheta0),
        "vartheta1": float(vartheta1),
        "varphi0": BASE_VARPHI,
        "varphi1": BASE_VARPHI + float(dphi),
    }


def phase_plaquette(zeta):
    """
    Plaquette with frame holonomy diag(1, e^{i zeta}): only the varphi legs at
    vartheta = pi/2 contribute, so the mode-basis gate is diag(e^{-i zeta}, 1).
    """
    return plaquette_params(0.0, zeta, np.pi / 2, 0.0)


def loop_holonomy(loop):
    return plaquette_holonomy(
        loop["theta0"],
        loop["theta1"],
        loop["vartheta0"],
        loop["vartheta1"],
        loop["varphi0"],
        loop["varphi1"],
    ).entries


def _holonomy_of(x):
    dtheta, dphi, v0, v1 = x
    return plaquette_holonomy(0.0, dtheta, v0, v1, 0.0, dphi).entries


def _jacobian_of(x):
    """
    Analytic derivative of Z(-s1 dphi) R(c1 dtheta) Z(s0 dphi) R(-c0 dtheta)
    with respect to (dtheta, dphi, vartheta0, vartheta1).
    """
    dtheta, dphi, v0, v1 = x
    s0, s1 = np.sin(v0) ** 2, np.sin(v1) ** 2
    c0, c1 = np.cos(v0), np.cos(v1)
    factors = [_z(-s1 * dphi), _rotation(c1 * dtheta), _z(s0 * dphi), _rotation(-c0 * dtheta)]
    z_gen = np.diag([0.0, 1j])
    r_gen = np.array([[0, -1], [1, 0]], dtype=complex)
    generators = [z_gen, r_gen, z_gen, r_gen]
    partials = []
    for i in range(4):
        left = np.eye(2, dtype=complex)
        for f in factors[: i + 1]:
            left = left @ f
        right = np.eye(2, dtype=complex)
        for f in factors[i + 1:]:
            right = right @ f
        partials.append(left @ generators[i] @ right)
    # d(argument_i)/d(parameter), argument order as in factors
    d_args = np.array(
        [
            [0.0, -s1, 0.0, -np.sin(2 * v1) * dphi],
            [c1, 0.0, 0.0, -np.sin(v1) * dtheta],
            [0.0, s0, np.sin(2 * v0) * dphi, 0.0],
            [-c0, 0.0, np.sin(v0) * dtheta, 0.0],
        ]
    )
    columns = [sum(d_args[i, p] * partials[i] for i in range(4)) for p in range(4)]
    return np.array([np.concatenate([c.real.ravel(), c.imag.ravel()]) for c in columns]).T


def _solve_plaquette(target, rng, attempts):
    def residual(x):
        diff = _holonomy_of(x) - target
        return np.concatenate([diff.real.ravel(), diff.imag.ravel()])

    starts = [_seed(target)] + [
        np.array(
            [
                rng.uniform(-2 * np.pi, 2 * np.pi),
                rng.uniform(-4 * np.pi, 4 * np.pi),
                rng.uniform(0.0, np.pi),
                rng.uniform(0.0, np.pi),
            ]
        )
        for _ in range(attempts - 1)
    ]
    best_x, best = None, np.inf
    for attempt, x0 in enumerate(starts):
        fit = least_squares(residual, x0, jac=_jacobian_of, method="lm", xtol=1e-15, ftol=1e-15)
        error = float(np.max(np.abs(_holonomy_of(fit.x) - target)))
        logger.debug("plaquette attempt %d: residual %.3e", attempt, error)
        if error < best:
            best_x, best = fit.x, error
        if best <= SOLVER_TOL:
            break
    return best_x, best


def _seed(target):
    """
    Starting point from target ~ Z(a) R(b) Z(c): vartheta0 = pi/2 removes the
    first rotation, the remaining factors match up to a global phase.
    """
    gamma = np.angle(target[0, 0]) if abs(target[0, 0]) > 1e-6 else 0.0
    b = np.arctan2(abs(target[1, 0]), abs(target[0, 0]))
    a = np.angle(target[1, 0]) - gamma if abs(target[1, 0]) > 1e-6 else 0.0
    c = np.angle(-target[0, 1]) - gamma if abs(target[0, 1]) > 1e-6 else 0.0
    dphi = c % (2 * np.pi) + 2 * np.pi
    s1 = ((-a) % (2 * np.pi)) / dphi
    c1 = np.sqrt(1 - s1)
    return np.array([b / c1, dphi, np.pi / 2, np.arcsin(np.sqrt(s1))])


def _is_rotation(matrix):
    if np.max(np.abs(matrix.imag)) > GATE_TOL or np.linalg.det(matrix).real < 0:
        return None
    return float(np.arctan2(matrix[1, 0].real, matrix[0, 0].real))


def synthesize_adiabatic(gate, seed=0, attempts=MULTISTART_ATTEMPTS):
    """
    Plaquette loops whose composed holonomy realizes the gate exactly.

    The rotation R(x) and the identity have closed forms; otherwise the
    four plaquette parameters are fitted by Levenberg-Marquardt from a
    closed-form seed plus random restarts.  If no single plaquette reaches
    SOLVER_TOL, a phase plaquette is prepended and the remainder refitted.
    Returns the list of loop parameter dicts, first loop first.
    """
    matrix = np.asarray(getattr(gate, "matrix", gate), dtype=complex)
    target = holonomy_for_gate(matrix)
    if np.max(np.abs(target - np.eye(2))) <= GATE_TOL:
        return [plaquette_params(0.0, 0.0, 0.0, 0.0)]
    angle = _is_rotation(target)
    if angle is not None:
        return [plaquette_params(-angle, 0.0, 0.0, np.pi / 2)]

    rng = np.random.default_rng(seed)
    x, residual = _solve_plaquette(target, rng, attempts)
    if residual <= SOLVER_TOL:
        logger.info("single plaquette fit: residual %.3e", residual)
        return [plaquette_params(*x)]

    logger.warning(
        "single plaquette stalled at %.3e; falling back to two plaquettes", residual
    )
    best = residual
    for _ in range(attempts):
        zeta = rng.uniform(0.5, 2 * np.pi - 0.5)
        first = phase_plaquette(zeta)
        remainder = target @ loop_holonomy(first).conj().T
        x, residual = _solve_plaquette(remainder, rng, max(1, attempts // 10))
        best = min(best, residual)
        if residual <= SOLVER_TOL:
            return [first, plaquette_params(*x)]
    raise SolverError("Plaquette synthesis failed", best)


def _realized_gate(mode, loops):
    if mode == "nonadiabatic":
        total = np.eye(2, dtype=complex)
        for loop in loops:
            total = nonadiabatic_loop_matrix(loop["theta"], loop["varphi"]).entries @ total
        return total
    holonomy = np.eye(2, dtype=complex)
    for loop in loops:
        holonomy = loop_holonomy(loop) @ holonomy
    return gate_from_holonomy(holonomy)


def compile_unitary(target, mode="nonadiabatic", seed=0):
    """
    Reck decomposition into SU(2) gates followed by per-gate loop synthesis.
    The returned fidelity_estimate recomposes the loops analytically.
    """
    if mode not in MODES:
        raise InputError("Unknown compilation mode {!r}; expected one of {}".format(mode, MODES))
    U = np.asarray(getattr(target, "entries", target), dtype=complex)
    gates, phases = reck_decompose(U, special_unitary=True)
    residual_phase = float(np.angle(phases[0]))
    loops = []
    for i, gate in enumerate(gates):
        if mode == "nonadiabatic":
            first, second, chi = synthesize_nonadiabatic(gate)
            residual_phase += chi
            loops.append(
                [
                    {"theta": first[0], "varphi": first[1]},
                    {"theta": second[0], "varphi": second[1]},
                ]
            )
        else:
            loops.append(synthesize_adiabatic(gate, seed=seed + i))
    K = U.shape[0]
    realized = np.eye(K, dtype=complex)
    for gate, gate_loops in zip(gates, loops):
        realized = TwoModeGate(gate.mode_pair, _realized_gate(mode, gate_loops)).embed(K) @ realized
    residual_phase = float(np.angle(np.exp(1j * residual_phase)))
    fidelity = trace_fidelity(U, realized)
    logger.info(
        "compiled %dx%d target into %d gates (%s), fidelity %.12f",
        K,
        K,
        len(gates),
        mode,
        fidelity,
    )
    return CompiledProgram(mode, K, gates, loops, residual_phase, fidelity)


def default_modes(program):
    "Star size used when none is given: one extra mode per ancilla."
    return program.modes + (2 if program.mode == "adiabatic" else 1)


def emit_schedule(program, M=None, T_per_loop=1.0, kappa=1.0):
    """
    One LoopSchedule per loop.  Adiabatic gates use ancilla M - 1 and the
    base point with couplings (0, ..., 0, kappa); nonadiabatic gates use
    pulses of area pi on the pair.
    """
    M = default_modes(program) if M is None else int(M)
    limit = M - 2 if program.mode == "adiabatic" else M - 1
    schedules = []
    for gate, gate_loops in zip(program.gates, program.loops):
        if max(gate.mode_pair) > limit:
            raise InputError(
                "Gate pair {} out of range 1..{} for {} mode on {} modes".format(
                    gate.mode_pair, limit, program.mode, M
                )
            )
        for loop in gate_loops:
            if program.mode == "nonadiabatic":
                schedules.append(
                    pulse_schedule(
                        loop["theta"], loop["varphi"], M, T_per_loop, pair=gate.mode_pair
                    )
                )
            else:
                schedules.append(
                    plaquette_schedule(
                        loop["theta0"],
                        loop["theta1"],
                        loop["vartheta0"],
                        loop["vartheta1"],
                        loop["varphi0"],
                        loop["varphi1"],
                        M,
                        T_per_loop,
                        kappa=kappa,
                        pair=gate.mode_pair,
                        ancilla=M - 1,
                        base_vartheta=BASE_VARTHETA,
                    )
                )
    return schedules


def simulate_program(program, M=None, T_per_loop=1.0, steps_per_loop=4000, kappa=1.0):
    """
    Propagates every emitted schedule and returns the block of the composed
    propagator on the program's modes (not re-projected, so leakage shows).
    """
    M = default_modes(program) if M is None else int(M)
    total = np.eye(M, dtype=complex)
    for schedule in emit_schedule(program, M, T_per_loop, kappa):
        total = propagate(schedule, steps_per_loop).entries @ total
    K = program.modes
    return total[:K, :K]


def program_fidelity(program, target, simulated):
    "Trace fidelity of the simulated block against the target."
    return trace_fidelity(np.asarray(getattr(target, "entries", target)), simulated)
