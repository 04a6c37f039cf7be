"""
N-photon Fock sectors of M bosonic modes.

A single-photon mode unitary U (a_j^dagger -> sum_i U_ij a_i^dagger) acts on
the N-photon sector through permanents,

    <m|U_N|n> = Per(U[m, n]) / sqrt(prod_i m_i! prod_j n_j!),

where U[m, n] repeats row i m_i times and column j n_j times.  Monomials of
frame modes prod_j (Psi_j^dagger)^{n_j} / sqrt(n_j!) |0> expand the same way
with the frame coefficients in place of U.

Bases list occupations in descending lexicographic order, e.g. for M = N = 2:
(2, 0), (1, 1), (0, 2).
"""
import itertools
import logging
import math
import os
from collections import namedtuple

import numpy as np

from .config import HOLONOMY_TOL, SECTOR_LIMIT
from .connection import time_derivative
from .errors import DimensionError, InputError, NonUnitaryError, SectorSizeError
from .mode_algebra import UnitaryMatrix, unitarity_defect
from .utils import matrix_to_json, write_json

logger = logging.getLogger(__name__)


def sector_size(n_modes, n_photons):
    return math.comb(n_photons + n_modes - 1, n_photons)


def _occupations(n_modes, n_photons):
    if n_modes == 1:
        yield (n_photons,)
        return
    for first in range(n_photons, -1, -1):
        for rest in _occupations(n_modes - 1, n_photons - first):
            yield (first,) + rest


class FockBasis(namedtuple("_FockBasis", ("n_modes", "n_photons", "occupations"))):
    def __new__(cls, n_modes, n_photons, limit=SECTOR_LIMIT):
        if n_modes < 1 or n_photons < 0:
            raise InputError(
                "Invalid sector: M={}, N={}".format(n_modes, n_photons)
            )
        size = sector_size(n_modes, n_photons)
        if size > limit:
            raise SectorSizeError(size, limit)
        occupations = tuple(_occupations(n_modes, n_photons))
        assert len(occupations) == size
        self = super(FockBasis, cls).__new__(cls, n_modes, n_photons, occupations)
        self._index = {occ: i for i, occ in enumerate(occupations)}
        return self

    def __len__(self):
        return len(self.occupations)

    def index(self, occupation):
        try:
            return self._index[tuple(int(n) for n in occupation)]
        except KeyError:
            raise InputError("{} is not in the {}-photon sector".format(occupation, self.n_photons))

    def to_json(self):
        return {
            "M": self.n_modes,
            "N": self.n_photons,
            "occupations": [list(occ) for occ in self.occupations],
        }


def fock_basis(n_modes, n_photons, limit=SECTOR_LIMIT):
    return FockBasis(n_modes, n_photons, limit)


class FockVector(namedtuple("_FockVector", ("basis", "amplitudes"))):
    def norm(self):
        return float(np.linalg.norm(self.amplitudes))

    def inner(self, other):
        "<self|other>"
        return complex(np.vdot(self.amplitudes, other.amplitudes))

    def expectation(self, operator):
        return complex(self.amplitudes.conj() @ operator @ self.amplitudes)


def permanent(matrix):
    """
    Ryser's formula, subsets visited in Gray-code order so each step adds or
    removes one column from the running row sums.  Below 4 x 4 the permutation
    expansion is used.
    """
    a = np.asarray(matrix, dtype=complex)
    n = a.shape[0]
    if a.shape != (n, n):
        raise DimensionError("Permanent of a non-square {} matrix".format(a.shape))
    if n == 0:
        return 1.0 + 0j
    if n < 4:
        return complex(
            sum(
                np.prod(a[np.arange(n), list(p)])
                for p in itertools.permutations(range(n))
            )
        )
    row_sums = np.zeros(n, dtype=complex)
    total = 0j
    for k in range(1, 2 ** n):
        j = (k & -k).bit_length() - 1
        gray = k ^ (k >> 1)
        if gray >> j & 1:
            row_sums += a[:, j]
        else:
            row_sums -= a[:, j]
        sign = -1 if bin(gray).count("1") % 2 else 1
        total += sign * np.prod(row_sums)
    return complex((-1) ** n * total)


def _modes(occupation):
    return [i for i, n in enumerate(occupation) for _ in range(n)]


def _norm(occupation):
    return np.prod([math.factorial(n) for n in occupation])


def transition_amplitude(matrix, out_occupation, in_occupation):
    "Per(matrix[out, in]) / sqrt(prod out! prod in!)."
    sub = np.asarray(matrix)[np.ix_(_modes(out_occupation), _modes(in_occupation))]
    return permanent(sub) / np.sqrt(_norm(out_occupation) * _norm(in_occupation))


def lift_unitary(U, N, limit=SECTOR_LIMIT):
    "Sector matrix of the single-photon unitary U on N photons."
    U = np.asarray(getattr(U, "entries", U), dtype=complex)
    defect = unitarity_defect(U)
    if defect > HOLONOMY_TOL:
        raise NonUnitaryError(defect, HOLONOMY_TOL)
    basis = fock_basis(U.shape[0], N, limit)
    lifted = np.empty((len(basis), len(basis)), dtype=complex)
    for col, n in enumerate(basis.occupations):
        for row, m in enumerate(basis.occupations):
            lifted[row, col] = transition_amplitude(U, m, n)
    logger.debug("lifted %dx%d unitary to %d states", U.shape[0], U.shape[0], len(basis))
    return UnitaryMatrix(lifted)


def lift_hamiltonian(phi, N, limit=SECTOR_LIMIT):
    "Matrix of H = sum_jk Phi_jk a_j^dagger a_k on the N-photon sector."
    entries = np.asarray(getattr(phi, "entries", phi), dtype=complex)
    M = entries.shape[0]
    basis = fock_basis(M, N, limit)
    H = np.zeros((len(basis), len(basis)), dtype=complex)
    for col, n in enumerate(basis.occupations):
        for k in range(M):
            if n[k] == 0:
                continue
            lowered = list(n)
            lowered[k] -= 1
            for j in range(M):
                if entries[j, k] == 0:
                    continue
                raised = list(lowered)
                raised[j] += 1
                amplitude = np.sqrt(n[k]) * np.sqrt(raised[j])
                H[basis.index(raised), col] += entries[j, k] * amplitude
    return H


def mode_monomial_state(frame, occupation, limit=SECTOR_LIMIT):
    """
    prod_j (Psi_j^dagger)^{n_j} / sqrt(n_j!) |0> expanded in the Fock basis of
    the underlying modes.
    """
    occupation = tuple(int(n) for n in occupation)
    if len(occupation) != frame.n_frame:
        raise DimensionError(
            "Occupation has {} entries for a {}-mode frame".format(
                len(occupation), frame.n_frame
            )
        )
    basis = fock_basis(frame.n_modes, sum(occupation), limit)
    creators = frame.coeffs.T
    amplitudes = np.array(
        [transition_amplitude(creators, m, occupation) for m in basis.occupations]
    )
    return FockVector(basis, amplitudes)


def restrict(operator, states):
    "S^dagger X S for the states as columns of S."
    S = np.column_stack([s.amplitudes for s in states])
    return S.conj().T @ np.asarray(getattr(operator, "entries", operator)) @ S


def block_coupling_check(phi_path, frame_path, partition, limit=SECTOR_LIMIT):
    """
    Largest coupling between two groups of frame monomials along a path:
    either a lifted-Hamiltonian element <u|H|v> or an adiabatic-connection
    element <u|dv/dt> (finite differences over the frame path samples).
    """
    group_a, group_b = partition
    if not group_a or not group_b:
        raise InputError("Both occupation groups must be non-empty")
    N = sum(group_a[0])
    if any(sum(occ) != N for occ in list(group_a) + list(group_b)):
        raise InputError("All occupations must lie in the same photon sector")

    hamiltonian = 0.0
    states_a, states_b = [], []
    for t, frame in zip(frame_path.times, frame_path.frames):
        a = [mode_monomial_state(frame, occ, limit).amplitudes for occ in group_a]
        b = [mode_monomial_state(frame, occ, limit).amplitudes for occ in group_b]
        H = lift_hamiltonian(phi_path.phi(t), N, limit)
        cross = np.array(a).conj() @ H @ np.array(b).T
        hamiltonian = max(hamiltonian, float(np.max(np.abs(cross))))
        states_a.append(a)
        states_b.append(b)

    states_a = np.array(states_a)
    states_b = np.array(states_b)
    connection = 0.0
    if len(frame_path.times) >= 3:
        db = time_derivative(frame_path.times, states_b)
        cross = np.einsum("tai,tbi->tab", states_a.conj(), db)
        connection = float(np.max(np.abs(cross)))
    logger.info(
        "block coupling: hamiltonian %.3e, connection %.3e", hamiltonian, connection
    )
    return max(hamiltonian, connection)


def parallel_transport_identity_check(phi, frame, N, limit=SECTOR_LIMIT):
    """
    max |<psi_n|H|psi_m>| over all N-photon monomials of the frame modes;
    vanishes whenever the single-photon geometric condition holds.
    """
    H = lift_hamiltonian(phi, N, limit)
    states = [
        mode_monomial_state(frame, occ, limit).amplitudes
        for occ in fock_basis(frame.n_frame, N, limit).occupations
    ]
    S = np.column_stack(states)
    return float(np.max(np.abs(S.conj().T @ H @ S)))


def write_sector(path, matrix, basis):
    """
    Writes the sector matrix to path and the basis manifest next to it
    (<stem>.basis.json).  Returns both paths.
    """
    stem, _ = os.path.splitext(path)
    manifest = stem + ".basis.json"
    write_json(path, matrix_to_json(matrix))
    write_json(manifest, basis.to_json())
    return path, manifest
