import unittest

import numpy as np
from hypothesis import given, settings
from hypothesis import strategies as st

from holonomic_optics.errors import DimensionError, InputError
from holonomic_optics.mode_algebra import geometric_condition_residual
from holonomic_optics.star_graph import (
    StarCouplings,
    bright_modes,
    dark_frame,
    nonadiabatic_couplings,
    nonadiabatic_frame,
    perturbed_gap,
    plaquette_couplings,
    plaquette_frame,
    star_coupling_matrix,
)


def _couplings(seed, M):
    rng = np.random.default_rng(seed)
    return StarCouplings(rng.standard_normal(M - 1) + 1j * rng.standard_normal(M - 1))


class TestStarGraph(unittest.TestCase):
    def test_orientation(self):
        phi = star_coupling_matrix(StarCouplings([1.0, 2j]))
        self.assertEqual(phi.entries[2, 1], 2j)
        self.assertEqual(phi.entries[1, 2], -2j)
        self.assertEqual(phi.entries[0, 1], 0)

    @settings(deadline=None, max_examples=20)
    @given(st.integers(min_value=3, max_value=7), st.integers(min_value=0, max_value=10 ** 6))
    def test_spectrum(self, M, seed):
        sc = _couplings(seed, M)
        values = np.linalg.eigvalsh(star_coupling_matrix(sc).entries)
        expected = np.concatenate([[-sc.epsilon], np.zeros(M - 2), [sc.epsilon]])
        np.testing.assert_allclose(values, expected, atol=1e-12)

    @settings(deadline=None, max_examples=20)
    @given(st.integers(min_value=3, max_value=7), st.integers(min_value=0, max_value=10 ** 6))
    def test_dark_frame(self, M, seed):
        sc = _couplings(seed, M)
        frame = dark_frame(sc)
        self.assertEqual(frame.coeffs.shape, (M - 2, M))
        self.assertTrue(frame.is_orthonormal())
        phi = star_coupling_matrix(sc).entries
        self.assertLess(np.max(np.abs(phi @ frame.coeffs.T)), 1e-12)

    def test_dark_frame_without_first_coupling(self):
        sc = StarCouplings([0.0, 1.0, 2j, 0.5])
        frame = dark_frame(sc)
        self.assertTrue(frame.is_orthonormal())
        phi = star_coupling_matrix(sc).entries
        self.assertLess(np.max(np.abs(phi @ frame.coeffs.T)), 1e-12)
        # a_1 decouples, so it is the first dark row
        np.testing.assert_allclose(frame.coeffs[0], [1, 0, 0, 0, 0], atol=1e-12)
        for row in frame.coeffs:
            lead = row[np.flatnonzero(np.abs(row) > 1e-12)[0]]
            self.assertAlmostEqual(lead.imag, 0.0, places=12)
            self.assertGreater(lead.real, 0.0)

    def test_bright_modes(self):
        sc = _couplings(5, 5)
        spectral = bright_modes(sc)
        phi = star_coupling_matrix(sc).entries
        np.testing.assert_allclose(
            phi @ spectral.bright_plus, sc.epsilon * spectral.bright_plus, atol=1e-12
        )
        np.testing.assert_allclose(
            phi @ spectral.bright_minus, -sc.epsilon * spectral.bright_minus, atol=1e-12
        )
        basis = spectral.eigenbasis()
        np.testing.assert_allclose(basis @ basis.conj().T, np.eye(5), atol=1e-12)

    def test_zero_couplings(self):
        with self.assertRaises(InputError):
            dark_frame(StarCouplings([0, 0, 0]))
        with self.assertRaises(InputError):
            bright_modes(StarCouplings([0, 0]))

    def test_small_graph(self):
        with self.assertRaises(DimensionError):
            star_coupling_matrix(StarCouplings([1.0]))
        with self.assertRaises(DimensionError):
            StarCouplings([1.0, 2.0], dim=5)

    def test_perturbed_gap(self):
        sc = _couplings(2, 4)
        sigma = 0.7
        values = np.linalg.eigvalsh(star_coupling_matrix(sc, sigma=sigma).entries)
        upper, lower = perturbed_gap(sc.epsilon, sigma)
        self.assertAlmostEqual(values[-1], upper, places=12)
        self.assertAlmostEqual(values[0], lower, places=12)

    def test_json(self):
        sc = _couplings(3, 4)
        again = StarCouplings.from_json(sc.to_json())
        np.testing.assert_array_equal(again.kappas, sc.kappas)
        with self.assertRaises(InputError):
            StarCouplings.from_json({"M": 4})


class TestPlaquetteSubmanifold(unittest.TestCase):
    @settings(deadline=None, max_examples=30)
    @given(
        st.floats(min_value=0, max_value=2 * np.pi),
        st.floats(min_value=0, max_value=np.pi),
        st.floats(min_value=0, max_value=2 * np.pi),
    )
    def test_frame_is_dark(self, theta, vartheta, varphi):
        sc = plaquette_couplings(theta, vartheta, varphi, 5, kappa=2.0)
        self.assertAlmostEqual(sc.epsilon, 2.0, places=12)
        frame = plaquette_frame(theta, vartheta, varphi, 5)
        self.assertTrue(frame.is_orthonormal())
        self.assertLess(geometric_condition_residual(star_coupling_matrix(sc), frame), 1e-12)

    def test_pair_and_ancilla(self):
        sc = plaquette_couplings(0.0, np.pi / 2, 0.0, 5, pair=(2, 4), ancilla=1)
        np.testing.assert_allclose(sc.kappas, [0, 1, 0, 0], atol=1e-15)
        with self.assertRaises(InputError):
            plaquette_couplings(0.0, 0.0, 0.0, 4, pair=(1, 3), ancilla=3)
        with self.assertRaises(DimensionError):
            plaquette_frame(0.0, 0.0, 0.0, 3)


class TestNonadiabaticFrame(unittest.TestCase):
    def test_weights(self):
        g = nonadiabatic_couplings(1.1, 0.4, 4)
        self.assertAlmostEqual(np.linalg.norm(g), 1.0, places=14)
        self.assertEqual(g[2], 0)
        with self.assertRaises(InputError):
            nonadiabatic_couplings(1.1, 0.4, 4, pair=(1, 4))

    def test_frame(self):
        g = nonadiabatic_couplings(1.1, 0.4, 4)
        for delta in (0.0, 0.3, np.pi / 2, np.pi):
            frame = nonadiabatic_frame(g, delta)
            self.assertEqual(frame.coeffs.shape, (3, 4))
            self.assertTrue(frame.is_orthonormal())
        bright = np.append(g.conj(), 0.0)
        np.testing.assert_allclose(nonadiabatic_frame(g, np.pi).coeffs[-1], bright, atol=1e-15)
        np.testing.assert_allclose(nonadiabatic_frame(g, 0.0).coeffs[-1], bright, atol=1e-15)
        halfway = nonadiabatic_frame(g, np.pi / 2).coeffs[-1]
        np.testing.assert_allclose(np.abs(halfway), [0, 0, 0, 1], atol=1e-15)


if __name__ == "__main__":
    unittest.main()
