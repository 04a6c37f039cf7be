"""
Projector-based parallel transport in a single truncated bosonic mode.

The zero-energy eigenspace of the Kerr Hamiltonian H0 = n(n - 1) is the
corner {|0>, |1>}.  Dressing it with W(alpha, xi) = D(alpha) S(xi) and moving
(alpha, xi) slowly transports the corner with the connection

    A_t = Pi W^dagger dW/dt Pi,    Pi = |0><0| + |1><1|,

evaluated here on a Fock space truncated to `cutoff` levels.  Every quantity
is checked against a second evaluation at twice the cutoff.
"""
import logging
from collections import namedtuple

import numpy as np
from scipy.linalg import expm

from .config import CUTOFF_TOL, ORTHONORMAL_TOL
from .connection import ConnectionSample, path_ordered_exponential
from .errors import CutoffError, DimensionError, InputError
from .mode_algebra import UnitaryMatrix
from .utils import read_json

logger = logging.getLogger(__name__)

READINGS = ("last-term", "whole")

# Central-difference step for path derivatives
DIFF_STEP = 1e-5


class TruncatedOperator(namedtuple("_TruncatedOperator", ("cutoff", "matrix"))):
    """
    Operator on Fock levels 0..cutoff-1.  The top level is a truncation
    artifact: [a, a^dagger] = I holds on the first cutoff - 1 levels only.
    """

    @classmethod
    def annihilation(cls, cutoff):
        return cls(cutoff, np.diag(np.sqrt(np.arange(1, cutoff)), 1).astype(complex))

    @classmethod
    def creation(cls, cutoff):
        return cls(cutoff, cls.annihilation(cutoff).matrix.conj().T)

    @classmethod
    def number(cls, cutoff):
        return cls(cutoff, np.diag(np.arange(cutoff)).astype(complex))

    @property
    def dagger(self):
        return TruncatedOperator(self.cutoff, self.matrix.conj().T)

    def corner(self):
        "Block on {|0>, |1>}."
        return self.matrix[:2, :2]

    def lower_defect(self):
        "Unitarity defect on the lower half of the levels."
        half = self.cutoff // 2
        block = (self.matrix.conj().T @ self.matrix)[:half, :half]
        return float(np.max(np.abs(block - np.eye(half))))


def kerr_hamiltonian(cutoff):
    "a^dagger a (a^dagger a - 1)."
    n = np.arange(cutoff)
    return TruncatedOperator(cutoff, np.diag(n * (n - 1)).astype(complex))


def corner_projector(cutoff):
    p = np.zeros((cutoff, cutoff), dtype=complex)
    p[0, 0] = p[1, 1] = 1.0
    return TruncatedOperator(cutoff, p)


class CirclePath(namedtuple("_CirclePath", ("r", "omega", "phase", "center"))):
    "center + r exp(i (omega t + phase))."

    def __new__(cls, r, omega, phase=0.0, center=0.0):
        return super(CirclePath, cls).__new__(
            cls, float(r), float(omega), float(phase), complex(center)
        )

    def value(self, t):
        return self.center + self.r * np.exp(1j * (self.omega * t + self.phase))

    def to_json(self):
        return {
            "r": self.r,
            "omega": self.omega,
            "phase": self.phase,
            "center": [self.center.real, self.center.imag],
        }


class SampledPath(namedtuple("_SampledPath", ("times", "values"))):
    "Piecewise-linear interpolation of complex samples; constant outside."

    def __new__(cls, times, values):
        times = np.asarray(times, dtype=float)
        values = np.asarray(values, dtype=complex)
        if times.ndim != 1 or times.shape != values.shape or len(times) < 2:
            raise InputError("A sampled path needs at least two (t, value) samples")
        if np.any(np.diff(times) <= 0):
            raise InputError("Sample times must be strictly increasing")
        return super(SampledPath, cls).__new__(cls, times, values)

    def value(self, t):
        re = np.interp(t, self.times, self.values.real)
        im = np.interp(t, self.times, self.values.imag)
        return complex(re + 1j * im)

    def to_json(self):
        return {
            "samples": [
                [float(t), float(z.real), float(z.imag)]
                for t, z in zip(self.times, self.values)
            ]
        }


def constant_path(value=0.0):
    return CirclePath(0.0, 0.0, 0.0, value)


def path_from_json(obj):
    if obj is None:
        return constant_path()
    try:
        if "samples" in obj:
            samples = [(float(t), complex(float(re), float(im))) for t, re, im in obj["samples"]]
            return SampledPath([s[0] for s in samples], [s[1] for s in samples])
        center = obj.get("center", [0.0, 0.0])
        return CirclePath(
            obj["r"],
            obj["omega"],
            obj.get("phase", 0.0),
            complex(float(center[0]), float(center[1])),
        )
    except (KeyError, TypeError, ValueError) as e:
        raise InputError("Malformed path JSON: {}".format(e))


def heuristic_cutoff(alpha, xi):
    "4 (|alpha|^2 + e^{2|xi|}), rounded up."
    return int(np.ceil(4 * (abs(alpha) ** 2 + np.exp(2 * abs(xi)))))


class KerrParameters(namedtuple("_KerrParameters", ("alpha", "xi", "cutoff"))):
    def __new__(cls, alpha, xi=None, cutoff=40):
        xi = constant_path() if xi is None else xi
        if int(cutoff) < 4:
            raise InputError("cutoff must be >= 4, got {}".format(cutoff))
        return super(KerrParameters, cls).__new__(cls, alpha, xi, int(cutoff))

    def at(self, t):
        return self.alpha.value(t), self.xi.value(t)

    def derivative(self, t, h=DIFF_STEP):
        a_plus, x_plus = self.at(t + h)
        a_minus, x_minus = self.at(t - h)
        return (a_plus - a_minus) / (2 * h), (x_plus - x_minus) / (2 * h)

    def with_cutoff(self, cutoff):
        return self._replace(cutoff=int(cutoff))

    def check_cutoff(self, times):
        "Logs a warning where the cutoff heuristic fails; returns whether it held."
        worst = max(heuristic_cutoff(*self.at(t)) for t in times)
        if self.cutoff < worst:
            logger.warning(
                "cutoff %d below the convergence heuristic %d", self.cutoff, worst
            )
            return False
        return True

    def to_json(self):
        return {
            "alpha_path": self.alpha.to_json(),
            "xi_path": self.xi.to_json(),
            "cutoff": self.cutoff,
        }

    @classmethod
    def from_json(cls, obj):
        try:
            cutoff = int(obj["cutoff"])
        except (KeyError, TypeError, ValueError) as e:
            raise InputError("Kerr parameters need an integer cutoff: {}".format(e))
        alpha = path_from_json(obj.get("alpha_path"))
        return cls(alpha, path_from_json(obj.get("xi_path")), cutoff)

    @classmethod
    def load(cls, path):
        return cls.from_json(read_json(path))


def displacement_squeeze(alpha, xi, cutoff):
    """
    W = exp(alpha a^dagger - alpha^* a) exp(xi^*/2 a^2 - xi/2 a^dagger^2) on the
    truncated space, exponentials taken in that order.
    """
    if cutoff < 4:
        raise InputError("cutoff must be >= 4, got {}".format(cutoff))
    needed = heuristic_cutoff(alpha, xi)
    if cutoff < needed:
        raise InputError(
            "cutoff {} too small for alpha={}, xi={} (need >= {})".format(
                cutoff, alpha, xi, needed
            )
        )
    a = TruncatedOperator.annihilation(cutoff).matrix
    ad = a.conj().T
    displacement = expm(alpha * ad - np.conj(alpha) * a)
    squeeze = expm(np.conj(xi) / 2 * (a @ a) - xi / 2 * (ad @ ad))
    return TruncatedOperator(cutoff, displacement @ squeeze)


def _corner_connection(params, t, cutoff, h):
    w = displacement_squeeze(*params.at(t), cutoff).matrix
    w_plus = displacement_squeeze(*params.at(t + h), cutoff).matrix
    w_minus = displacement_squeeze(*params.at(t - h), cutoff).matrix
    block = (w.conj().T @ (w_plus - w_minus))[:2, :2] / (2 * h)
    return (block - block.conj().T) / 2


def projector_connection(params, t, h=DIFF_STEP, check=True):
    """
    The {|0>, |1>} block of W^dagger dW/dt (central differences), projected
    onto its anti-Hermitian part.  With check, the block is recomputed at
    twice the cutoff and CutoffError is raised if they disagree.
    """
    A = _corner_connection(params, t, params.cutoff, h)
    if check:
        doubled = _corner_connection(params, t, 2 * params.cutoff, h)
        disagreement = float(np.max(np.abs(doubled - A)))
        if disagreement > CUTOFF_TOL:
            raise CutoffError(disagreement, params.cutoff)
    return A


def _corner_state(state):
    c = np.asarray(getattr(state, "amplitudes", state), dtype=complex).reshape(-1)
    if len(c) < 2:
        raise DimensionError("A corner state needs two amplitudes, got {}".format(len(c)))
    if len(c) > 2 and np.max(np.abs(c[2:])) > ORTHONORMAL_TOL:
        raise InputError("State has support outside the {|0>, |1>} corner")
    c = c[:2]
    if abs(np.linalg.norm(c) - 1) > ORTHONORMAL_TOL:
        raise InputError("Corner state is not normalized: |c| = {}".format(np.linalg.norm(c)))
    return c


def kerr_adiabatic_rhs(params, state, t, h=DIFF_STEP, check=True):
    """
    d<a>/dt = <[a, A_t]> on the transported corner.  The bare mode operator
    has no explicit time dependence, so only the commutator contributes.
    """
    c = _corner_state(state)
    a = TruncatedOperator.annihilation(2).matrix
    A = projector_connection(params, t, h, check)
    return complex(c.conj() @ (a @ A - A @ a) @ c)


def displacement_rhs(params, state, t, h=DIFF_STEP):
    """
    Closed form of kerr_adiabatic_rhs for pure displacement (xi = 0), where
    the corner connection is [[i b, -alpha'^*], [alpha', i b]]:

        d<a>/dt = alpha' (1 - 2 <n>)
    """
    c = _corner_state(state)
    alpha_dot, _ = params.derivative(t, h)
    return complex(alpha_dot * (1 - 2 * abs(c[1]) ** 2))


def printed_rhs(params, state, t, reading="last-term", h=DIFF_STEP):
    """
    (alpha'^* alpha - alpha' alpha^*) <a> + alpha' (mu - nu^*) <n> - c.c.,
    mu = cosh|xi|, nu = e^{i arg xi} sinh|xi|.

    "last-term" conjugates only the second term, "whole" conjugates the full
    expression.  Expectations are taken on the corner state.
    """
    if reading not in READINGS:
        raise InputError("Unknown reading {!r}; expected one of {}".format(reading, READINGS))
    c = _corner_state(state)
    alpha, xi = params.at(t)
    alpha_dot, _ = params.derivative(t, h)
    mu = np.cosh(abs(xi))
    nu = np.exp(1j * np.angle(xi)) * np.sinh(abs(xi))
    mean_a = np.conj(c[0]) * c[1]
    mean_n = abs(c[1]) ** 2
    first = (np.conj(alpha_dot) * alpha - alpha_dot * np.conj(alpha)) * mean_a
    second = alpha_dot * (mu - np.conj(nu)) * mean_n
    if reading == "whole":
        return complex(first + second - np.conj(first + second))
    return complex(first + second - np.conj(second))


class ReadingComparison(namedtuple("_ReadingComparison", ("deviations", "selected"))):
    "deviations maps each reading to its largest |printed - transport|."

    def to_json(self):
        return {"deviations": dict(self.deviations), "selected": self.selected}


def compare_readings(params, state, times, h=DIFF_STEP):
    oracle = [kerr_adiabatic_rhs(params, state, t, h) for t in times]
    deviations = {}
    for reading in READINGS:
        printed = [printed_rhs(params, state, t, reading, h) for t in times]
        deviations[reading] = float(np.max(np.abs(np.subtract(printed, oracle))))
    selected = min(READINGS, key=lambda r: deviations[r])
    logger.info(
        "printed equation of motion: last-term %.3e, whole %.3e",
        deviations["last-term"],
        deviations["whole"],
    )
    return ReadingComparison(deviations, selected)


def corner_holonomy(params, T, samples=1025, tol=1e-6, check=True):
    """
    Ordered exponential of the corner connection over [0, T].  With check,
    the holonomy is recomputed at twice the cutoff.
    """
    times = np.linspace(0.0, T, samples)
    params.check_cutoff(times)

    def holonomy(p):
        connection = [
            ConnectionSample(t, projector_connection(p, t, check=False)) for t in times
        ]
        return path_ordered_exponential(connection, tol=tol).matrix

    U = holonomy(params)
    if check:
        disagreement = float(np.max(np.abs(holonomy(params.with_cutoff(2 * params.cutoff)) - U)))
        if disagreement > CUTOFF_TOL:
            raise CutoffError(disagreement, params.cutoff)
        logger.info("corner holonomy: cutoff doubling changes it by %.3e", disagreement)
    return UnitaryMatrix(U)
