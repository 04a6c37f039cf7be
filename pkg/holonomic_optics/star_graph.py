"""
Star-graph networks: M-1 outer modes coupled only to the central mode M.

    H = sum_k kappa_k a_M^dagger a_k + h.c.,   i.e. Phi[M, k] = kappa_k

The spectrum is {-eps, 0 (M-2 times), +eps} with eps = sqrt(sum |kappa_k|^2).
The M-2 zero modes (dark modes) span the geometrically protected subspace,

    D_j^dagger = kappa_{j+1} a_1^dagger - kappa_1 a_{j+1}^dagger,

and the bright modes

    B_pm^dagger = (sum_j kappa_j^* a_j^dagger +- eps a_M^dagger) / (sqrt(2) eps)

carry the dynamical phases.  Indices in docstrings are 1-based, arrays are
0-based.
"""
import logging
from collections import namedtuple

import numpy as np

from .config import ORTHONORMAL_TOL
from .errors import DimensionError, InputError
from .mode_algebra import ModeFrame, build_coupling_matrix, orthonormalize
from .utils import complex_array, complex_list

logger = logging.getLogger(__name__)

# |kappa_1| below this is treated as zero when choosing the dark-mode recipe
PIVOT_TOL = 1e-12


class StarCouplings(namedtuple("_StarCouplings", ("kappas", "dim"))):
    def __new__(cls, kappas, dim=None):
        kappas = np.array(kappas, dtype=complex).reshape(-1)
        dim = len(kappas) + 1 if dim is None else int(dim)
        if len(kappas) != dim - 1:
            raise DimensionError(
                "Star graph with M={} needs {} couplings, got {}".format(
                    dim, dim - 1, len(kappas)
                )
            )
        kappas.setflags(write=False)
        return super(StarCouplings, cls).__new__(cls, kappas, dim)

    @property
    def epsilon(self):
        return float(np.linalg.norm(self.kappas))

    def is_zero(self):
        return not np.any(np.abs(self.kappas) > 0)

    def to_json(self):
        return {"M": self.dim, "kappa": complex_list(self.kappas)}

    @classmethod
    def from_json(cls, obj):
        try:
            return cls(complex_array(obj["kappa"]), obj["M"])
        except KeyError as e:
            raise InputError("StarCouplings JSON lacks {}".format(e))


class SpectralFrames(
    namedtuple("_SpectralFrames", ("dark", "bright_plus", "bright_minus", "energy"))
):
    def eigenbasis(self):
        "Rows: dark modes, B_+, B_-.  Forms an M x M unitary."
        return np.vstack([self.dark.coeffs, self.bright_plus, self.bright_minus])


def star_coupling_matrix(sc, sigma=0.0, outer_sigma=()):
    """
    Phi of the star graph.  sigma is an onsite term on the central mode (only
    shifts the bright energies); outer_sigma holds 1-based (k, sigma_k) onsite
    terms on outer modes, which break the dark-mode degeneracy.
    """
    M = sc.dim
    if M < 3:
        raise DimensionError("A star graph needs M >= 3, got {}".format(M))
    couplings = [(M, k + 1, kappa) for k, kappa in enumerate(sc.kappas)]
    onsite = list(outer_sigma)
    if sigma:
        onsite.append((M, sigma))
    return build_coupling_matrix(couplings, onsite, M)


def _require_nonzero(sc):
    if sc.is_zero():
        raise InputError("All couplings vanish: dark and bright modes are undefined")


def dark_frame(sc):
    """
    Orthonormal dark frame (M-2 rows).  For kappa_1 != 0 the raw modes
    D_j = kappa_{j+1} a_1 - kappa_1 a_{j+1} are Gram-Schmidt orthonormalized.
    Otherwise the kernel projector of Phi, taken from its eigendecomposition,
    is applied to a_1, a_2, ... in ascending order and orthonormalized; each
    row is then rotated so that its first nonzero component is real-positive.
    """
    _require_nonzero(sc)
    M = sc.dim
    kappa = sc.kappas
    if abs(kappa[0]) > PIVOT_TOL:
        raw = np.zeros((M - 2, M), dtype=complex)
        raw[:, 0] = kappa[1:]
        raw[np.arange(M - 2), np.arange(1, M - 1)] = -kappa[0]
        return orthonormalize(ModeFrame(raw))

    logger.debug("kappa_1 = 0: dark frame from the kernel projector")
    phi = star_coupling_matrix(sc)
    values, vectors = phi.eigh()
    kernel = vectors[:, np.abs(values) <= ORTHONORMAL_TOL * max(1.0, sc.epsilon)]
    assert kernel.shape[1] == M - 2, "star kernel has dimension {}".format(
        kernel.shape[1]
    )
    projector = kernel @ kernel.conj().T
    rows = []
    for mode in range(M):
        v = projector[:, mode].copy()
        for _ in range(2):
            for q in rows:
                v = v - (q.conj() @ v) * q
        norm = np.linalg.norm(v)
        if norm > 1e-6:
            rows.append(v / norm)
        if len(rows) == M - 2:
            break
    return ModeFrame(np.array([_real_positive(r) for r in rows]))


def _real_positive(row):
    lead = row[np.flatnonzero(np.abs(row) > PIVOT_TOL)[0]]
    return row * (abs(lead) / lead)


def bright_modes(sc):
    _require_nonzero(sc)
    eps = sc.epsilon
    outer = np.append(sc.kappas.conj(), 0.0)
    central = np.zeros(sc.dim, dtype=complex)
    central[-1] = eps
    plus = (outer + central) / (np.sqrt(2) * eps)
    minus = (outer - central) / (np.sqrt(2) * eps)
    return SpectralFrames(dark_frame(sc), plus, minus, eps)


def perturbed_gap(eps, sigma):
    "Bright energies sigma/2 +- sqrt(eps^2 + sigma^2/4) with an onsite sigma on the centre."
    root = np.sqrt(eps ** 2 + sigma ** 2 / 4.0)
    return (sigma / 2.0 + root, sigma / 2.0 - root)


def _pair_indices(M, pair, ancilla):
    p, q = pair
    indices = (p, q, ancilla)
    if len(set(indices)) != 3 or not all(1 <= i <= M - 1 for i in indices):
        raise InputError(
            "Pair {} and ancilla {} must be distinct outer modes of M={}".format(
                pair, ancilla, M
            )
        )
    return p - 1, q - 1, ancilla - 1


def plaquette_couplings(theta, vartheta, varphi, M, kappa=1.0, pair=(1, 2), ancilla=3):
    """
    Three-parameter submanifold of the coupling space:

        kappa_p = kappa cos(theta) sin(vartheta) e^{i varphi}
        kappa_q = kappa sin(theta) sin(vartheta) e^{i varphi}
        kappa_a = kappa cos(vartheta),   all other couplings zero
    """
    if M < 4:
        raise DimensionError("Plaquette loops need M >= 4, got {}".format(M))
    p, q, a = _pair_indices(M, pair, ancilla)
    kappas = np.zeros(M - 1, dtype=complex)
    phase = np.exp(1j * varphi)
    kappas[p] = kappa * np.cos(theta) * np.sin(vartheta) * phase
    kappas[q] = kappa * np.sin(theta) * np.sin(vartheta) * phase
    kappas[a] = kappa * np.cos(vartheta)
    return StarCouplings(kappas, M)


def plaquette_frame(theta, vartheta, varphi, M, pair=(1, 2), ancilla=3):
    """
    Explicit dark frame over the plaquette submanifold:

        D_1 = sin(theta) a_p - cos(theta) a_q
        D_2 = cos(vartheta) (cos(theta) a_p + sin(theta) a_q)
              - sin(vartheta) e^{i varphi} a_a
        D_3.. = the remaining outer modes in ascending order
    """
    if M < 4:
        raise DimensionError("Plaquette frames need M >= 4, got {}".format(M))
    p, q, a = _pair_indices(M, pair, ancilla)
    rows = np.zeros((M - 2, M), dtype=complex)
    rows[0, p] = np.sin(theta)
    rows[0, q] = -np.cos(theta)
    rows[1, p] = np.cos(vartheta) * np.cos(theta)
    rows[1, q] = np.cos(vartheta) * np.sin(theta)
    rows[1, a] = -np.sin(vartheta) * np.exp(1j * varphi)
    rest = [m for m in range(M - 1) if m not in (p, q, a)]
    for row, mode in enumerate(rest, start=2):
        rows[row, mode] = 1.0
    return ModeFrame(rows)


def nonadiabatic_couplings(theta, varphi, M, pair=(1, 2)):
    "g_p = sin(theta/2) e^{i varphi}, g_q = cos(theta/2); normalized by construction."
    p, q = pair
    if p == q or not (1 <= p <= M - 1 and 1 <= q <= M - 1):
        raise InputError("Pair {} must hold two distinct outer modes of M={}".format(pair, M))
    g = np.zeros(M - 1, dtype=complex)
    g[p - 1] = np.sin(theta / 2.0) * np.exp(1j * varphi)
    g[q - 1] = np.cos(theta / 2.0)
    return g


def nonadiabatic_frame(g, delta):
    """
    Frame transported by a proportional pulse kappa(t) = Omega(t) g after a
    pulse area delta: the (constant) dark modes of g followed by

        Psi = e^{i delta} (cos(delta) B - i sin(delta) a_M),   B = sum_j g_j^* a_j
    """
    g = np.asarray(g, dtype=complex)
    norm = np.linalg.norm(g)
    if norm == 0:
        raise InputError("Pulse weights vanish")
    g = g / norm
    dark = dark_frame(StarCouplings(g))
    b = np.append(g.conj(), 0.0)
    centre = np.zeros(len(g) + 1, dtype=complex)
    centre[-1] = 1.0
    psi = np.exp(1j * delta) * (np.cos(delta) * b - 1j * np.sin(delta) * centre)
    return dark.stack(psi)
