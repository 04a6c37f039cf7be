"""
Single-photon representation of bilinear bosonic Hamiltonians.

A Hamiltonian H = sum_jk Phi_jk a_j^dagger a_k is carried by its M x M
coupling matrix Phi (off-diagonal couplings kappa_jk, onsite terms sigma_k).
A set of K orthonormal modes Psi_j^dagger = sum_l C_jl a_l^dagger is carried by
the K x M coefficient matrix C, one row per mode.  Rows are treated as kets,
so the matrix element between modes j and k of any single-photon operator X is
conj(C_j) . X . C_k^T.

Commutators of bilinear operators with creation operators never change the
photon number, which makes every statement about parallel transport checkable
on these coefficient vectors alone:

    [H, Psi_k^dagger]             = sum_a (Phi C_k^T)_a a_a^dagger
    [Psi_j, [H, Psi_k^dagger]]    = conj(C_j) . Phi . C_k^T

The evolution is purely geometric on the span of the frame iff the second
line vanishes for all j, k.
"""
import logging
from collections import namedtuple

import numpy as np

from .config import ORTHONORMAL_TOL, STRUCTURE_TOL
from .errors import (
    DimensionError,
    DuplicateCouplingError,
    InputError,
    NonUnitaryError,
    RankDeficiencyError,
)

logger = logging.getLogger(__name__)


class CouplingMatrix(namedtuple("_CouplingMatrix", ("entries",))):
    def __new__(cls, entries):
        entries = np.array(entries, dtype=complex)
        if entries.ndim != 2 or entries.shape[0] != entries.shape[1]:
            raise DimensionError(
                "Coupling matrix must be square, got {}".format(entries.shape)
            )
        if not np.all(np.isfinite(entries)):
            raise InputError("Coupling matrix holds non-finite entries")
        defect = np.max(np.abs(entries - entries.conj().T), initial=0.0)
        if defect > STRUCTURE_TOL * max(1.0, np.max(np.abs(entries), initial=0.0)):
            raise InputError("Coupling matrix is not Hermitian (defect {:.3e})".format(defect))
        entries.setflags(write=False)
        return super(CouplingMatrix, cls).__new__(cls, entries)

    @classmethod
    def zero(cls, dim):
        return cls(np.zeros((dim, dim), dtype=complex))

    @property
    def dim(self):
        return self.entries.shape[0]

    def eigh(self):
        "Ascending real eigenvalues and eigenvectors (columns)."
        return np.linalg.eigh(self.entries)

    def __add__(self, other):
        return CouplingMatrix(self.entries + other.entries)

    def scale(self, factor):
        return CouplingMatrix(float(factor) * self.entries)


class ModeFrame(namedtuple("_ModeFrame", ("coeffs",))):
    """
    K orthonormal modes over M bosonic modes.  Construction does not check
    orthonormality so that raw frames can be handed to orthonormalize();
    use is_orthonormal() / check() where the invariant matters.
    """

    def __new__(cls, coeffs):
        coeffs = np.array(np.atleast_2d(coeffs), dtype=complex)
        if coeffs.ndim != 2:
            raise DimensionError("Frame must be a K x M matrix")
        if coeffs.shape[0] > coeffs.shape[1]:
            raise DimensionError(
                "Frame has more rows ({}) than modes ({})".format(*coeffs.shape)
            )
        coeffs.setflags(write=False)
        return super(ModeFrame, cls).__new__(cls, coeffs)

    @classmethod
    def identity(cls, n_modes, rows=None):
        rows = range(n_modes) if rows is None else rows
        return cls(np.eye(n_modes, dtype=complex)[list(rows)])

    @property
    def n_modes(self):
        return self.coeffs.shape[1]

    @property
    def n_frame(self):
        return self.coeffs.shape[0]

    def gram(self):
        return self.coeffs.conj() @ self.coeffs.T

    def orthonormality_defect(self):
        return float(np.max(np.abs(self.gram() - np.eye(self.n_frame)), initial=0.0))

    def is_orthonormal(self, tol=ORTHONORMAL_TOL):
        return self.orthonormality_defect() <= tol

    def projector(self):
        "Single-photon projector onto the span of the frame kets."
        return self.coeffs.T @ self.coeffs.conj()

    def mix(self, g):
        "Unitary re-mixing of the rows, C -> G C."
        return ModeFrame(np.asarray(g) @ self.coeffs)

    def stack(self, other):
        return ModeFrame(np.vstack([self.coeffs, np.atleast_2d(other)]))

    def matrix_elements(self, operator, other=None):
        "conj(C_a) . X . C_b^T for the frames a = self and b = other."
        other = self if other is None else other
        return self.coeffs.conj() @ np.asarray(operator) @ other.coeffs.T


class UnitaryMatrix(namedtuple("_UnitaryMatrix", ("entries",))):
    def __new__(cls, entries, tol=None):
        entries = np.array(np.atleast_2d(entries), dtype=complex)
        if entries.ndim != 2 or entries.shape[0] != entries.shape[1]:
            raise DimensionError("Unitary must be square, got {}".format(entries.shape))
        if tol is not None:
            defect = unitarity_defect(entries)
            if defect > tol:
                raise NonUnitaryError(defect, tol)
        entries.setflags(write=False)
        return super(UnitaryMatrix, cls).__new__(cls, entries)

    @classmethod
    def identity(cls, dim):
        return cls(np.eye(dim, dtype=complex))

    @property
    def dim(self):
        return self.entries.shape[0]

    def defect(self):
        return unitarity_defect(self.entries)

    def dagger(self):
        return UnitaryMatrix(self.entries.conj().T)


def unitarity_defect(matrix):
    matrix = np.asarray(matrix)
    return float(np.max(np.abs(matrix @ matrix.conj().T - np.eye(matrix.shape[0]))))


def build_coupling_matrix(couplings, onsite, dim):
    """
    Assembles Phi from 1-based (j, k, kappa) couplings and (j, sigma) onsite
    terms: kappa at (j, k), conj(kappa) at (k, j), sigma_j on the diagonal.
    """
    if dim < 1:
        raise DimensionError("dim must be positive, got {}".format(dim))
    phi = np.zeros((dim, dim), dtype=complex)
    seen = set()
    for j, k, kappa in couplings:
        _check_index(j, dim)
        _check_index(k, dim)
        if j == k:
            raise InputError("Coupling ({}, {}) is onsite; use onsite terms".format(j, k))
        pair = frozenset((j, k))
        if pair in seen:
            raise DuplicateCouplingError("Duplicate coupling pair ({}, {})".format(j, k))
        seen.add(pair)
        phi[j - 1, k - 1] = complex(kappa)
        phi[k - 1, j - 1] = np.conj(complex(kappa))

    sites = set()
    for j, sigma in onsite:
        _check_index(j, dim)
        if j in sites:
            raise DuplicateCouplingError("Duplicate onsite term for mode {}".format(j))
        sites.add(j)
        if abs(np.imag(sigma)) > 0:
            raise InputError("Onsite term for mode {} must be real".format(j))
        phi[j - 1, j - 1] = float(np.real(sigma))
    return CouplingMatrix(phi)


def _check_index(j, dim):
    if not (isinstance(j, (int, np.integer)) and 1 <= j <= dim):
        raise InputError("Mode index {} out of range 1..{}".format(j, dim))


def orthonormalize(frame):
    """
    Classical Gram-Schmidt in ascending row order with one reorthogonalization
    pass.  Row space is preserved and the output is deterministic.
    """
    coeffs = frame.coeffs
    out = np.zeros_like(coeffs)
    for i, row in enumerate(coeffs):
        v = row.copy()
        for _ in range(2):
            if i:
                v = v - (out[:i].conj() @ v) @ out[:i]
        norm = np.linalg.norm(v)
        scale = max(1.0, np.linalg.norm(row))
        if norm <= ORTHONORMAL_TOL * scale:
            raise RankDeficiencyError(i, norm)
        out[i] = v / norm
    return ModeFrame(out)


def geometric_condition_residual(phi, frame):
    "max_jk |conj(C_j) Phi C_k^T|; zero iff the frame evolves purely geometrically."
    if frame.n_modes != phi.dim:
        raise DimensionError(
            "Frame spans {} modes but Phi has dimension {}".format(frame.n_modes, phi.dim)
        )
    return float(np.max(np.abs(frame.matrix_elements(phi.entries)), initial=0.0))


def double_commutator(phi, frame, j, k):
    """
    [Psi_j, [H, Psi_k^dagger]] by explicit index sums over the creation
    operators produced by the inner commutator.
    """
    if frame.n_modes != phi.dim:
        raise DimensionError("Frame and Phi dimensions differ")
    c = frame.coeffs
    inner = [sum(phi.entries[a, b] * c[k, b] for b in range(phi.dim)) for a in range(phi.dim)]
    return complex(sum(np.conj(c[j, a]) * inner[a] for a in range(phi.dim)))


def random_unitary(dim, seed=None):
    "Haar-distributed unitary from the QR decomposition of a complex Ginibre matrix."
    rng = np.random.default_rng(seed)
    z = (rng.standard_normal((dim, dim)) + 1j * rng.standard_normal((dim, dim))) / np.sqrt(2)
    q, r = np.linalg.qr(z)
    d = np.diag(r)
    return UnitaryMatrix(q * (d / np.abs(d)))


def random_frame(n_modes, n_frame, seed=None):
    return ModeFrame(random_unitary(n_modes, seed).entries[:n_frame])


def random_coupling_matrix(dim, seed=None, onsite=True):
    rng = np.random.default_rng(seed)
    z = rng.standard_normal((dim, dim)) + 1j * rng.standard_normal((dim, dim))
    phi = (z + z.conj().T) / 2
    if not onsite:
        np.fill_diagonal(phi, 0.0)
    return CouplingMatrix(phi)
