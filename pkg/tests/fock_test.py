import itertools
import json
import math
import os
import tempfile
import unittest

import numpy as np
from scipy.linalg import expm

from holonomic_optics.dynamics import nonadiabatic_run
from holonomic_optics.errors import InputError, NonUnitaryError, SectorSizeError
from holonomic_optics.fock import (
    FockBasis,
    FockVector,
    block_coupling_check,
    fock_basis,
    lift_hamiltonian,
    lift_unitary,
    mode_monomial_state,
    parallel_transport_identity_check,
    permanent,
    restrict,
    sector_size,
    transition_amplitude,
    write_sector,
)
from holonomic_optics.mode_algebra import ModeFrame, random_coupling_matrix, random_unitary
from holonomic_optics.schedules import pulse_schedule
from holonomic_optics.star_graph import (
    StarCouplings,
    bright_modes,
    dark_frame,
    star_coupling_matrix,
)

TRIPOD = StarCouplings([0.8, 0.3 + 0.5j, -0.4j])


def _brute_permanent(a):
    n = a.shape[0]
    return sum(np.prod(a[np.arange(n), list(p)]) for p in itertools.permutations(range(n)))


class TestFockBasis(unittest.TestCase):
    def test_size_and_order(self):
        self.assertEqual(sector_size(4, 2), 10)
        basis = fock_basis(2, 2)
        self.assertEqual(basis.occupations, ((2, 0), (1, 1), (0, 2)))
        self.assertEqual(basis.index((1, 1)), 1)
        self.assertEqual(len(fock_basis(5, 3)), sector_size(5, 3))

    def test_limit(self):
        with self.assertRaises(SectorSizeError) as ctx:
            FockBasis(6, 4, limit=100)
        self.assertEqual(ctx.exception.size, 126)

    def test_bad_sector(self):
        with self.assertRaises(InputError):
            fock_basis(0, 2)
        with self.assertRaises(InputError):
            fock_basis(2, 2).index((3, 0))

    def test_json(self):
        out = fock_basis(2, 1).to_json()
        self.assertEqual(out, {"M": 2, "N": 1, "occupations": [[1, 0], [0, 1]]})


class TestPermanent(unittest.TestCase):
    def test_ones(self):
        for n in range(0, 7):
            self.assertAlmostEqual(permanent(np.ones((n, n))), math.factorial(n), places=8)

    def test_against_permutations(self):
        rng = np.random.default_rng(3)
        for n in (2, 4, 5, 6):
            a = rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))
            self.assertAlmostEqual(permanent(a), _brute_permanent(a), places=9)


class TestLift(unittest.TestCase):
    def test_single_photon(self):
        U = random_unitary(3, 1)
        np.testing.assert_allclose(lift_unitary(U, 1).entries, U.entries, atol=1e-14)

    def test_identity(self):
        np.testing.assert_allclose(lift_unitary(np.eye(3), 3).entries, np.eye(10), atol=1e-14)

    def test_hong_ou_mandel(self):
        U = np.array([[1, 1j], [1j, 1]]) / np.sqrt(2)
        lifted = lift_unitary(U, 2).entries
        self.assertAlmostEqual(abs(lifted[1, 1]), 0.0, places=14)
        self.assertAlmostEqual(abs(transition_amplitude(U, (2, 0), (1, 1))) ** 2, 0.5, places=14)

    def test_homomorphism(self):
        U = random_unitary(4, 2).entries
        V = random_unitary(4, 3).entries
        lifted = lift_unitary(U @ V, 2).entries
        np.testing.assert_allclose(
            lifted, lift_unitary(U, 2).entries @ lift_unitary(V, 2).entries, atol=1e-12
        )
        self.assertLess(lift_unitary(U, 3).defect(), 1e-9)

    def test_not_unitary(self):
        with self.assertRaises(NonUnitaryError):
            lift_unitary(np.diag([1.0, 2.0]), 2)

    def test_hamiltonian(self):
        phi = random_coupling_matrix(3, 5)
        np.testing.assert_allclose(lift_hamiltonian(phi, 1), phi.entries, atol=1e-15)
        H = lift_hamiltonian(phi, 2)
        np.testing.assert_allclose(H, H.conj().T, atol=1e-12)
        np.testing.assert_allclose(
            expm(1j * H), lift_unitary(expm(1j * phi.entries), 2).entries, atol=1e-10
        )

    def test_diagonal_hamiltonian(self):
        sigma = np.array([0.5, -1.0, 2.0])
        H = lift_hamiltonian(np.diag(sigma), 2)
        basis = fock_basis(3, 2)
        np.testing.assert_allclose(
            H, np.diag([np.dot(n, sigma) for n in basis.occupations]), atol=1e-15
        )

    def test_tripod_spectrum(self):
        values = np.linalg.eigvalsh(lift_hamiltonian(star_coupling_matrix(TRIPOD), 2))
        eps = TRIPOD.epsilon
        single = [-eps, 0.0, 0.0, eps]
        expected = sorted(
            single[i] + single[j] for i in range(4) for j in range(i, 4)
        )
        np.testing.assert_allclose(values, expected, atol=1e-12)


class TestDarkStates(unittest.TestCase):
    def test_monomial_of_modes(self):
        frame = ModeFrame.identity(3)
        state = mode_monomial_state(frame, (1, 0, 1))
        expected = np.zeros(len(state.basis))
        expected[state.basis.index((1, 0, 1))] = 1
        np.testing.assert_allclose(state.amplitudes, expected, atol=1e-15)

    def test_dark_monomials(self):
        phi = star_coupling_matrix(TRIPOD)
        frame = dark_frame(TRIPOD)
        H = lift_hamiltonian(phi, 2)
        states = [mode_monomial_state(frame, occ) for occ in fock_basis(2, 2).occupations]
        for state in states:
            self.assertAlmostEqual(state.norm(), 1.0, places=12)
            self.assertLess(np.linalg.norm(H @ state.amplitudes), 1e-12)
        gram = np.array([[a.inner(b) for b in states] for a in states])
        np.testing.assert_allclose(gram, np.eye(3), atol=1e-12)

    def test_psi_pm(self):
        spectral = bright_modes(TRIPOD)
        bright = ModeFrame(np.array([spectral.bright_plus, spectral.bright_minus]))
        psi = mode_monomial_state(bright, (1, 1))
        H = lift_hamiltonian(star_coupling_matrix(TRIPOD), 2)
        self.assertLess(np.linalg.norm(H @ psi.amplitudes), 1e-12)
        self.assertAlmostEqual(psi.expectation(H).real, 0.0, places=12)

    def test_parallel_transport_identity(self):
        phi = star_coupling_matrix(TRIPOD)
        frame = dark_frame(TRIPOD)
        for N in (1, 2, 3):
            self.assertLess(parallel_transport_identity_check(phi, frame, N), 1e-12)
        generic = ModeFrame(random_unitary(4, 9).entries[:2])
        self.assertGreater(parallel_transport_identity_check(phi, generic, 2), 1e-3)

    def test_block_coupling_groups(self):
        with self.assertRaises(InputError):
            block_coupling_check(None, None, ([], [(1, 1)]))
        with self.assertRaises(InputError):
            block_coupling_check(None, None, ([(2, 0)], [(1, 0)]))


class TestNonadiabaticSubspaces(unittest.TestCase):
    "Two photons through the cyclic pulse: outer-mode and central-mode sectors close."

    @classmethod
    def setUpClass(cls):
        result = nonadiabatic_run(pulse_schedule(1.1, 0.7, 4, 1.0), steps=2000)
        cls.lifted = lift_unitary(result.propagator, 2)
        cls.basis = fock_basis(4, 2)

    def _block(self, occupations):
        states = []
        for occ in occupations:
            amplitudes = np.zeros(len(self.basis), dtype=complex)
            amplitudes[self.basis.index(occ)] = 1.0
            states.append(FockVector(self.basis, amplitudes))
        return restrict(self.lifted, states)

    def test_outer_modes(self):
        outer = [occ for occ in self.basis.occupations if occ[3] == 0]
        self.assertEqual(len(outer), 6)
        block = self._block(outer)
        np.testing.assert_allclose(block @ block.conj().T, np.eye(6), atol=1e-8)

    def test_central_times_outer(self):
        mixed = [(1, 0, 0, 1), (0, 1, 0, 1), (0, 0, 1, 1)]
        block = self._block(mixed)
        np.testing.assert_allclose(block @ block.conj().T, np.eye(3), atol=1e-8)


class TestWriteSector(unittest.TestCase):
    def test_files(self):
        basis = fock_basis(2, 2)
        with tempfile.TemporaryDirectory() as tmp:
            path, manifest = write_sector(os.path.join(tmp, "sector.json"), np.eye(3), basis)
            self.assertEqual(manifest, os.path.join(tmp, "sector.basis.json"))
            with open(manifest) as handle:
                self.assertEqual(json.load(handle)["occupations"], [[2, 0], [1, 1], [0, 2]])
            with open(path) as handle:
                self.assertEqual(json.load(handle)["rows"], 3)


if __name__ == "__main__":
    unittest.main()
