"""
Loop schedules: piecewise time series of star couplings kappa(t).

A schedule is a list of contiguous segments covering [0, T].  Each segment
interpolates named parameters from a start to an end value, either linearly
or with the sin^2 ramp u -> sin^2(pi u / 2) (zero speed at both ends).
Three parameter families are understood:

    plaquette   theta, vartheta, varphi on the three-parameter submanifold
    pulse       theta, varphi of fixed weights g, driven as kappa = Omega(t) g
    star        re_k, im_k of every coupling kappa_k (generic sampled paths)

File format::

    {"M": 4, "T": 300.0, "family": "plaquette",
     "segments": [{"t0": 0, "t1": 50, "params": {"theta": [a, b], ...},
                   "interp": "smoothstep"}, ...],
     "envelope": {"shape": "sin2", "delta_T": 3.141592653589793},
     "options": {"kappa": 2.0, "pair": [1, 2], "ancilla": 3}}
"""
import bisect
import logging
from collections import namedtuple

import numpy as np

from .connection import plaquette_legs
from .errors import ScheduleError
from .mode_algebra import CouplingMatrix
from .star_graph import (
    StarCouplings,
    dark_frame,
    nonadiabatic_couplings,
    nonadiabatic_frame,
    plaquette_couplings,
    plaquette_frame,
    star_coupling_matrix,
)

logger = logging.getLogger(__name__)

FAMILIES = ("plaquette", "pulse", "star")
REQUIRED = {
    "plaquette": ("theta", "vartheta", "varphi"),
    "pulse": ("theta", "varphi"),
    "star": (),
}
INTERPOLATIONS = ("linear", "smoothstep")
SHAPES = ("sin2", "const")
# Allowed jump of any coupling across a segment boundary
JUMP_TOL = 1e-9


Segment = namedtuple("Segment", ("t0", "t1", "params", "interp"))


class Envelope(namedtuple("_Envelope", ("shape", "delta_T"))):
    """Pulse envelope Omega(t) on [0, T] with area delta_T."""

    def __new__(cls, shape="sin2", delta_T=None):
        if shape not in SHAPES:
            raise ScheduleError("Unknown envelope shape: {}".format(shape))
        delta_T = np.pi if delta_T is None else float(delta_T)
        return super(Envelope, cls).__new__(cls, shape, delta_T)

    def value(self, t, T):
        if self.shape == "const":
            return self.delta_T / T
        return 2.0 * self.delta_T / T * np.sin(np.pi * t / T) ** 2

    def area(self, t, T):
        "delta(t), the integral of Omega from 0 to t."
        if self.shape == "const":
            return self.delta_T * t / T
        return self.delta_T * (t / T - np.sin(2 * np.pi * t / T) / (2 * np.pi))


def _ramp(u, interp):
    if interp == "linear":
        return u
    return np.sin(np.pi * u / 2.0) ** 2


class LoopSchedule(
    namedtuple(
        "_LoopSchedule", ("M", "duration", "family", "segments", "envelope", "options")
    )
):
    def __new__(cls, M, duration, family, segments, envelope=None, options=None):
        if family not in FAMILIES:
            raise ScheduleError("Unknown schedule family: {}".format(family))
        if family == "pulse" and envelope is None:
            raise ScheduleError("Pulse schedules need an envelope")
        duration = float(duration)
        if not duration > 0:
            raise ScheduleError("Schedule duration must be positive")
        segments = tuple(
            Segment(
                float(s.t0),
                float(s.t1),
                {k: (float(v[0]), float(v[1])) for k, v in s.params.items()},
                s.interp,
            )
            for s in segments
        )
        _check_segments(segments, duration)
        for i, seg in enumerate(segments):
            missing = [k for k in REQUIRED[family] if k not in seg.params]
            if missing:
                raise ScheduleError(
                    "Segment {} lacks parameters {}".format(i, ", ".join(missing))
                )
        self = super(LoopSchedule, cls).__new__(
            cls, int(M), duration, family, segments, envelope, dict(options or {})
        )
        self._check_continuity()
        return self

    @property
    def T(self):
        return self.duration

    @property
    def kappa(self):
        return float(self.options.get("kappa", 1.0))

    @property
    def pair(self):
        return tuple(self.options.get("pair", (1, 2)))

    @property
    def ancilla(self):
        return int(self.options.get("ancilla", 3))

    @property
    def sigma(self):
        return float(self.options.get("sigma", 0.0))

    def _segment_at(self, t):
        starts = [s.t0 for s in self.segments]
        i = max(0, min(bisect.bisect_right(starts, t) - 1, len(self.segments) - 1))
        return self.segments[i]

    def params(self, t):
        "Interpolated parameter values at time t."
        seg = self._segment_at(t)
        u = min(max((t - seg.t0) / (seg.t1 - seg.t0), 0.0), 1.0)
        r = _ramp(u, seg.interp)
        return {k: a + r * (b - a) for k, (a, b) in seg.params.items()}

    def pulse_area(self, t):
        if self.envelope is None:
            return 0.0
        return self.envelope.area(t, self.duration)

    def couplings(self, t):
        return self._couplings_from(self.params(t), t)

    def _star_weights(self, p):
        return np.array(
            [
                complex(p.get("re{}".format(k), 0.0), p.get("im{}".format(k), 0.0))
                for k in range(1, self.M)
            ]
        )

    def _couplings_from(self, p, t):
        M = self.M
        if self.family == "plaquette":
            return plaquette_couplings(
                p["theta"],
                p["vartheta"],
                p["varphi"],
                M,
                self.kappa,
                self.pair,
                self.ancilla,
            )
        if self.family == "pulse":
            g = nonadiabatic_couplings(p["theta"], p["varphi"], M, self.pair)
            return StarCouplings(self.envelope.value(t, self.duration) * g, M)
        kappas = self._star_weights(p)
        if self.envelope is not None:
            kappas = self.envelope.value(t, self.duration) * kappas
        return StarCouplings(kappas, M)

    def phi(self, t):
        return star_coupling_matrix(self.couplings(t), self.sigma)

    def frame(self, t):
        """
        Frame the evolution is expected to transport: the explicit plaquette
        dark frame, the nonadiabatic frame {D_j, Psi(delta(t))}, or the
        orthonormalized dark frame of a generic star path.  A star path with
        an envelope is a pulse on its envelope-free weights g and gets the
        nonadiabatic frame with area |g| delta(t).
        """
        p = self.params(t)
        if self.family == "plaquette":
            return plaquette_frame(
                p["theta"], p["vartheta"], p["varphi"], self.M, self.pair, self.ancilla
            )
        if self.family == "pulse":
            g = nonadiabatic_couplings(p["theta"], p["varphi"], self.M, self.pair)
            return nonadiabatic_frame(g, self.pulse_area(t))
        if self.envelope is not None:
            g = self._star_weights(p)
            return nonadiabatic_frame(g, np.linalg.norm(g) * self.pulse_area(t))
        return dark_frame(self.couplings(t))

    def times(self, steps):
        return np.linspace(0.0, self.duration, int(steps) + 1)

    def is_closed(self, tol=1e-10):
        start = self.couplings(0.0).kappas
        end = self.couplings(self.duration).kappas
        return bool(np.max(np.abs(start - end)) <= tol)

    def _check_continuity(self):
        for left, right in zip(self.segments[:-1], self.segments[1:]):
            before = {k: b for k, (a, b) in left.params.items()}
            after = {k: a for k, (a, b) in right.params.items()}
            jump = np.max(
                np.abs(
                    self._couplings_from(before, left.t1).kappas
                    - self._couplings_from(after, right.t0).kappas
                )
            )
            if jump > JUMP_TOL * max(1.0, self.kappa):
                raise ScheduleError(
                    "Couplings jump by {:.3e} at t={}".format(jump, right.t0)
                )

    def to_json(self):
        return {
            "M": self.M,
            "T": self.duration,
            "family": self.family,
            "segments": [
                {
                    "t0": s.t0,
                    "t1": s.t1,
                    "params": {k: list(v) for k, v in s.params.items()},
                    "interp": s.interp,
                }
                for s in self.segments
            ],
            "envelope": None
            if self.envelope is None
            else {"shape": self.envelope.shape, "delta_T": self.envelope.delta_T},
            "options": _json_options(self.options),
        }

    @classmethod
    def from_json(cls, obj):
        try:
            envelope = obj.get("envelope")
            if envelope is not None:
                envelope = Envelope(envelope.get("shape", "sin2"), envelope.get("delta_T"))
            segments = [
                Segment(s["t0"], s["t1"], s["params"], s.get("interp", "linear"))
                for s in obj["segments"]
            ]
            return cls(
                obj["M"],
                obj["T"],
                obj.get("family", "plaquette"),
                segments,
                envelope,
                obj.get("options"),
            )
        except (KeyError, TypeError, ValueError, AttributeError) as e:
            raise ScheduleError("Malformed schedule JSON: {!r}".format(e))


def _json_options(options):
    return {k: list(v) if isinstance(v, tuple) else v for k, v in options.items()}


def _check_segments(segments, duration):
    if not segments:
        raise ScheduleError("Schedule has no segments")
    if abs(segments[0].t0) > 1e-12 or abs(segments[-1].t1 - duration) > 1e-9 * duration:
        raise ScheduleError("Segments must cover [0, {}]".format(duration))
    for i, seg in enumerate(segments):
        if not seg.t1 > seg.t0:
            raise ScheduleError("Segment {} has non-positive length".format(i))
        if seg.interp not in INTERPOLATIONS:
            raise ScheduleError("Unknown interpolation: {}".format(seg.interp))
        if i and abs(seg.t0 - segments[i - 1].t1) > 1e-9 * duration:
            raise ScheduleError(
                "Segments {} and {} are not contiguous".format(i - 1, i)
            )


def plaquette_schedule(
    theta0,
    theta1,
    vartheta0,
    vartheta1,
    varphi0,
    varphi1,
    M,
    T,
    kappa=1.0,
    pair=(1, 2),
    ancilla=3,
    base_vartheta=None,
    sigma=0.0,
):
    """
    Plaquette loop traversed by arclength: each leg gets a share of T
    proportional to its length in (theta, vartheta, varphi) and is ramped
    with sin^2 so the speed vanishes at every corner.
    """
    legs = plaquette_legs(
        theta0, theta1, vartheta0, vartheta1, varphi0, varphi1, base_vartheta
    )
    options = {"kappa": float(kappa), "pair": list(pair), "ancilla": int(ancilla)}
    if sigma:
        options["sigma"] = float(sigma)
    if not legs:
        point = {
            "theta": (theta0, theta0),
            "vartheta": (vartheta0, vartheta0),
            "varphi": (varphi0, varphi0),
        }
        return LoopSchedule(
            M, T, "plaquette", [Segment(0.0, T, point, "linear")], None, options
        )
    lengths = np.array([np.linalg.norm(end - start) for start, end in legs])
    bounds = np.concatenate([[0.0], np.cumsum(lengths) / lengths.sum() * T])
    bounds[-1] = T
    segments = []
    for (start, end), t0, t1 in zip(legs, bounds[:-1], bounds[1:]):
        params = {
            name: (start[i], end[i])
            for i, name in enumerate(("theta", "vartheta", "varphi"))
        }
        segments.append(Segment(t0, t1, params, "smoothstep"))
    return LoopSchedule(M, T, "plaquette", segments, None, options)


def pulse_schedule(theta, varphi, M, T, shape="sin2", delta_T=None, pair=(1, 2)):
    "Proportional pulse kappa(t) = Omega(t) g(theta, varphi) with area delta_T (pi by default)."
    params = {"theta": (theta, theta), "varphi": (varphi, varphi)}
    return LoopSchedule(
        M,
        T,
        "pulse",
        [Segment(0.0, T, params, "linear")],
        Envelope(shape, delta_T),
        {"pair": list(pair)},
    )


def sampled_schedule(times, kappas, M=None, interp="linear", sigma=0.0):
    """
    Generic star path through the given coupling samples, interpolated
    segment by segment.  times must start at 0.
    """
    times = np.asarray(times, dtype=float)
    kappas = np.asarray(kappas, dtype=complex)
    if kappas.ndim != 2 or len(kappas) != len(times) or len(times) < 2:
        raise ScheduleError("Need at least two coupling samples, one per time")
    M = kappas.shape[1] + 1 if M is None else M
    segments = []
    for i in range(len(times) - 1):
        params = {}
        for k in range(M - 1):
            a, b = kappas[i, k], kappas[i + 1, k]
            params["re{}".format(k + 1)] = (a.real, b.real)
            params["im{}".format(k + 1)] = (a.imag, b.imag)
        segments.append(Segment(times[i], times[i + 1], params, interp))
    options = {"sigma": float(sigma)} if sigma else {}
    return LoopSchedule(M, times[-1], "star", segments, None, options)


def rescaled(schedule, T):
    "Same loop traversed in time T."
    factor = T / schedule.duration
    segments = [
        Segment(s.t0 * factor, s.t1 * factor, s.params, s.interp)
        for s in schedule.segments
    ]
    return LoopSchedule(
        schedule.M,
        T,
        schedule.family,
        segments,
        schedule.envelope,
        schedule.options,
    )


class HamiltonianPath(namedtuple("_HamiltonianPath", ("phi_fn", "duration"))):
    """Any callable t -> CouplingMatrix over [0, duration]."""

    def phi(self, t):
        phi = self.phi_fn(t)
        return phi if isinstance(phi, CouplingMatrix) else CouplingMatrix(phi)

    @property
    def M(self):
        return self.phi(0.0).dim
