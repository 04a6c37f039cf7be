"""
Connections and holonomies of frame paths.

For a path of orthonormal frames C(t) the connection is A = dC/dt C^dagger,
i.e. A_jk = <c_k|dc_j/dt>, and the holonomy of the path is the time-ordered
exponential with later factors applied on the left,

    U = lim prod_i exp(A(t_i) dt_i) = ... exp(A_2 dt) exp(A_1 dt).

Under this convention the closed forms for plaquette loops on the
three-parameter star submanifold

    A_theta    = [[0, cos(vartheta)], [-cos(vartheta), 0]]
    A_vartheta = 0
    A_varphi   = diag(0, i sin^2(vartheta))

compose exactly to

    U = Z(-s_1 dphi) R(c_1 dtheta) Z(s_0 dphi) R(-c_0 dtheta)

with Z(a) = diag(1, e^{ia}), R(x) the planar rotation by x, s_i = sin^2(vartheta_i)
and c_i = cos(vartheta_i).

Re-mixing the frame rows C -> G(t)^{-1} C transforms the connection as

    A -> G^{-1} A G - G^{-1} dG/dt

and the holonomy as U -> G(T)^{-1} U G(0).
"""
import logging
from collections import namedtuple

import numpy as np
from scipy.interpolate import CubicSpline
from scipy.linalg import expm, polar

from .config import (
    CONTINUITY_TOL,
    MAX_REFINEMENTS,
    ORTHONORMAL_TOL,
    REFINE_TOL,
    STRUCTURE_TOL,
)
from .errors import ConvergenceError, DimensionError, InputError
from .mode_algebra import UnitaryMatrix
from .star_graph import nonadiabatic_frame, plaquette_frame
from .utils import matrix_to_json

logger = logging.getLogger(__name__)


class FramePath(namedtuple("_FramePath", ("times", "frames"))):
    def __new__(cls, times, frames):
        times = np.array(times, dtype=float)
        frames = list(frames)
        if len(times) < 2 or len(times) != len(frames):
            raise InputError(
                "A frame path needs at least 2 samples with one frame per time"
            )
        if np.any(np.diff(times) <= 0):
            raise InputError("Frame path times must be strictly ascending")
        shape = frames[0].coeffs.shape
        for i, frame in enumerate(frames):
            if frame.coeffs.shape != shape:
                raise DimensionError(
                    "Frame {} has shape {}, expected {}".format(
                        i, frame.coeffs.shape, shape
                    )
                )
            if not frame.is_orthonormal(ORTHONORMAL_TOL):
                raise InputError(
                    "Frame {} is not orthonormal (defect {:.3e})".format(
                        i, frame.orthonormality_defect()
                    )
                )
        for i in range(len(frames) - 1):
            overlap = frames[i + 1].matrix_elements(np.eye(shape[1]), frames[i])
            smallest = np.linalg.svd(overlap, compute_uv=False).min()
            if smallest <= CONTINUITY_TOL:
                raise InputError(
                    "Frame path jumps between samples {} and {} "
                    "(overlap singular value {:.3f})".format(i, i + 1, smallest)
                )
        times.setflags(write=False)
        return super(FramePath, cls).__new__(cls, times, tuple(frames))

    @classmethod
    def sample(cls, frame_fn, times):
        "Evaluates frame_fn at each time."
        return cls(times, [frame_fn(t) for t in times])

    def coeff_array(self):
        return np.array([f.coeffs for f in self.frames])

    def is_closed(self, tol=ORTHONORMAL_TOL):
        "True when the end points span the same subspace."
        start, end = self.frames[0].projector(), self.frames[-1].projector()
        return bool(np.max(np.abs(start - end)) <= tol)


ConnectionSample = namedtuple("ConnectionSample", ("time", "matrix"))


class Holonomy(
    namedtuple(
        "_Holonomy", ("unitary", "loop_closed", "step_count", "convergence_estimate")
    )
):
    @property
    def matrix(self):
        return self.unitary.entries

    def to_json(self):
        out = matrix_to_json(self.matrix)
        out.update(
            {
                "loop_closed": bool(self.loop_closed),
                "steps": int(self.step_count),
                "convergence": float(self.convergence_estimate),
            }
        )
        return out


def time_derivative(times, values):
    """
    d/dt along the first axis.  Uniform grids use fourth-order central
    differences in the interior (off-centred fourth-order stencils one sample
    in from either end) and second-order one-sided differences at the ends;
    non-uniform grids fall back to second order throughout.
    """
    times = np.asarray(times, dtype=float)
    values = np.asarray(values)
    S = len(times)
    if S < 3:
        raise InputError("Finite differences need at least 3 samples, got {}".format(S))
    steps = np.diff(times)
    h = steps.mean()
    if np.max(np.abs(steps - h)) > 1e-9 * h:
        return np.gradient(values, times, axis=0, edge_order=2)

    out = np.empty_like(values)
    out[0] = (-3 * values[0] + 4 * values[1] - values[2]) / (2 * h)
    out[-1] = (3 * values[-1] - 4 * values[-2] + values[-3]) / (2 * h)
    if S < 5:
        out[1:-1] = (values[2:] - values[:-2]) / (2 * h)
        return out
    out[1] = (
        -3 * values[0] - 10 * values[1] + 18 * values[2] - 6 * values[3] + values[4]
    ) / (12 * h)
    out[-2] = (
        3 * values[-1] + 10 * values[-2] - 18 * values[-3] + 6 * values[-4] - values[-5]
    ) / (12 * h)
    out[2:-2] = (
        -values[4:] + 8 * values[3:-1] - 8 * values[1:-3] + values[:-4]
    ) / (12 * h)
    return out


def _anti_hermitian(a):
    return (a - np.swapaxes(a.conj(), -1, -2)) / 2


def connection_along_path(path, derivative=None):
    """
    Samples A(t_i) = dC/dt C^dagger.  derivative, if given, maps t to the
    analytic dC/dt and replaces the finite differences.
    """
    coeffs = path.coeff_array()
    if derivative is None:
        if len(path.times) < 3:
            raise InputError("connection_along_path needs at least 3 samples")
        dc = time_derivative(path.times, coeffs)
    else:
        dc = np.array([derivative(t) for t in path.times], dtype=complex)
        if dc.shape != coeffs.shape:
            raise DimensionError(
                "Analytic derivative has shape {}, expected {}".format(
                    dc.shape[1:], coeffs.shape[1:]
                )
            )
    a = _anti_hermitian(dc @ np.swapaxes(coeffs.conj(), -1, -2))
    return [ConnectionSample(float(t), m) for t, m in zip(path.times, a)]


def gauge_transform(samples, g_path):
    "A -> G^{-1} A G - G^{-1} dG/dt, with dG/dt from time_derivative."
    if len(samples) != len(g_path):
        raise DimensionError(
            "{} connection samples but {} gauge matrices".format(
                len(samples), len(g_path)
            )
        )
    times = np.array([s.time for s in samples])
    a = np.array([s.matrix for s in samples])
    g = np.array([getattr(m, "entries", m) for m in g_path], dtype=complex)
    if g.shape != a.shape:
        raise DimensionError(
            "Gauge matrices have shape {}, connection {}".format(g.shape[1:], a.shape[1:])
        )
    g_inv = np.swapaxes(g.conj(), -1, -2)
    dg = time_derivative(times, g)
    transformed = _anti_hermitian(g_inv @ a @ g - g_inv @ dg)
    return [ConnectionSample(float(t), m) for t, m in zip(times, transformed)]


def _sample_arrays(samples):
    if len(samples) < 2:
        raise InputError("Path-ordered exponential needs at least 2 samples")
    times = np.array([s.time for s in samples], dtype=float)
    mats = np.array([s.matrix for s in samples], dtype=complex)
    if mats.ndim != 3 or mats.shape[1] != mats.shape[2]:
        raise DimensionError("Connection samples must be square matrices of one size")
    return times, mats


def _midpoint_product(spline, grid):
    "Ordered product of exp(A(t_mid) dt) over the cells of grid."
    mids = (grid[:-1] + grid[1:]) / 2
    generators = _anti_hermitian(spline(mids))
    factors = expm(generators * np.diff(grid)[:, None, None])
    product = np.eye(generators.shape[1], dtype=complex)
    for factor in factors:
        product = factor @ product
    return product


def _refined_grid(times, level):
    "Every sample interval split into 2**level equal cells."
    fractions = np.arange(2 ** level) / 2 ** level
    inner = times[:-1, None] + np.diff(times)[:, None] * fractions
    return np.append(inner.ravel(), times[-1])


def path_ordered_exponential(
    samples, tol=REFINE_TOL, max_refinements=MAX_REFINEMENTS, closed=False
):
    """
    Ordered exponential of sampled connection values.

    The samples are interpolated by a cubic spline.  Midpoint products are
    formed on the sample grid and then with the step halved repeatedly;
    successive products are Richardson-combined, (4 P_fine - P_coarse)/3, and
    refinement stops once two successive combined products differ by at most
    tol (Frobenius).  More than max_refinements halvings raise
    ConvergenceError.
    """
    times, mats = _sample_arrays(samples)
    scale = max(1.0, float(np.max(np.abs(mats))))
    if np.max(np.abs(mats - mats[0])) <= STRUCTURE_TOL * scale:
        product = expm(mats[0] * (times[-1] - times[0]))
        return Holonomy(UnitaryMatrix(polar(product)[0]), closed, 1, 0.0)

    spline = CubicSpline(times, mats, axis=0)
    products, combined = [], []
    estimate = np.inf
    for level in range(max_refinements + 1):
        products.append(_midpoint_product(spline, _refined_grid(times, level)))
        if level >= 1:
            combined.append((4 * products[-1] - products[-2]) / 3)
        if len(combined) >= 2:
            estimate = float(np.linalg.norm(combined[-1] - combined[-2]))
        logger.debug("level %d: estimate %.3e", level, estimate)
        if estimate <= tol:
            break
    if estimate > tol:
        raise ConvergenceError(estimate, max_refinements)

    steps = (len(times) - 1) * 2 ** level
    return Holonomy(UnitaryMatrix(polar(combined[-1])[0]), closed, steps, estimate)


def transport(path, derivative=None, tol=REFINE_TOL):
    "Holonomy of a sampled frame path."
    samples = connection_along_path(path, derivative)
    return path_ordered_exponential(samples, tol=tol, closed=path.is_closed())


def compose_loops(holonomies):
    "Ordered product, later loops on the left."
    holonomies = list(holonomies)
    if not holonomies:
        raise InputError("compose_loops needs at least one holonomy")
    dim = holonomies[0].unitary.dim
    product = np.eye(dim, dtype=complex)
    for hol in holonomies:
        if hol.unitary.dim != dim:
            raise DimensionError(
                "Cannot compose {}x{} with {}x{} holonomies".format(
                    dim, dim, hol.unitary.dim, hol.unitary.dim
                )
            )
        product = hol.matrix @ product
    return Holonomy(
        UnitaryMatrix(product),
        all(h.loop_closed for h in holonomies),
        sum(h.step_count for h in holonomies),
        max(h.convergence_estimate for h in holonomies),
    )


def _z(angle):
    return np.diag([1.0, np.exp(1j * angle)])


def _rotation(angle):
    c, s = np.cos(angle), np.sin(angle)
    return np.array([[c, -s], [s, c]], dtype=complex)


def plaquette_holonomy(theta0, theta1, vartheta0, vartheta1, varphi0, varphi1):
    dtheta = theta1 - theta0
    dphi = varphi1 - varphi0
    s0, s1 = np.sin(vartheta0) ** 2, np.sin(vartheta1) ** 2
    c0, c1 = np.cos(vartheta0), np.cos(vartheta1)
    return UnitaryMatrix(
        _z(-s1 * dphi) @ _rotation(c1 * dtheta) @ _z(s0 * dphi) @ _rotation(-c0 * dtheta)
    )


def plaquette_connection(vartheta, K=2):
    """
    (A_theta, A_vartheta, A_varphi) on the plaquette submanifold, zero-padded
    to K x K (the tail modes never move).
    """
    a_theta = np.zeros((K, K), dtype=complex)
    a_theta[0, 1] = np.cos(vartheta)
    a_theta[1, 0] = -np.cos(vartheta)
    a_varphi = np.zeros((K, K), dtype=complex)
    a_varphi[1, 1] = 1j * np.sin(vartheta) ** 2
    return a_theta, np.zeros((K, K), dtype=complex), a_varphi


def plaquette_legs(
    theta0, theta1, vartheta0, vartheta1, varphi0, varphi1, base_vartheta=None
):
    """
    Corner-to-corner legs (start, end) of the plaquette loop in
    (theta, vartheta, varphi), entered and left along vartheta from the base
    (theta0, base_vartheta, varphi0).  Zero-length legs are dropped.
    """
    base = (theta0, vartheta0 if base_vartheta is None else base_vartheta, varphi0)
    corners = [
        base,
        (theta0, vartheta0, varphi0),
        (theta1, vartheta0, varphi0),
        (theta1, vartheta0, varphi1),
        (theta1, vartheta1, varphi1),
        (theta0, vartheta1, varphi1),
        (theta0, vartheta1, varphi0),
        base,
    ]
    legs = []
    for start, end in zip(corners[:-1], corners[1:]):
        if start != end:
            legs.append((np.array(start, dtype=float), np.array(end, dtype=float)))
    return legs


def plaquette_wilson_line(
    theta0,
    theta1,
    vartheta0,
    vartheta1,
    varphi0,
    varphi1,
    M=4,
    samples=1025,
    base_vartheta=None,
    pair=(1, 2),
    ancilla=3,
):
    """
    Numerical holonomy of the plaquette loop: each leg is sampled through
    plaquette_frame, differentiated and path-ordered; legs are composed.
    """
    holonomies = []
    for start, end in plaquette_legs(
        theta0, theta1, vartheta0, vartheta1, varphi0, varphi1, base_vartheta
    ):
        s = np.linspace(0.0, 1.0, samples)
        path = FramePath(
            s,
            [
                plaquette_frame(*(start + x * (end - start)), M, pair, ancilla)
                for x in s
            ],
        )
        holonomies.append(transport(path))
    if not holonomies:
        return Holonomy(UnitaryMatrix.identity(M - 2), True, 0, 0.0)
    return compose_loops(holonomies)


def nonadiabatic_loop_matrix(theta, varphi):
    c, s = np.cos(theta), np.sin(theta)
    return UnitaryMatrix(
        [
            [c, -np.exp(-1j * varphi) * s],
            [-np.exp(1j * varphi) * s, -c],
        ]
    )


def nonadiabatic_gauge_holonomy(g):
    """
    Mode-basis action on the outer modes of the cyclic proportional pulse:
    the frame holonomy diag(1, ..., 1, -1) rotated back from {D_j, B},
    equal to I - 2 g^* g^T.
    """
    frame = nonadiabatic_frame(g, 0.0).coeffs[:, :-1]
    signs = np.ones(frame.shape[0])
    signs[-1] = -1.0
    return UnitaryMatrix(frame.T @ np.diag(signs) @ frame.conj())
