import unittest

import numpy as np
from scipy.integrate import simpson

from holonomic_optics.errors import InputError, ScheduleError
from holonomic_optics.mode_algebra import CouplingMatrix
from holonomic_optics.schedules import (
    Envelope,
    HamiltonianPath,
    LoopSchedule,
    Segment,
    plaquette_schedule,
    pulse_schedule,
    rescaled,
    sampled_schedule,
)
from holonomic_optics.star_graph import nonadiabatic_frame, plaquette_couplings, plaquette_frame


class TestEnvelope(unittest.TestCase):
    def test_area(self):
        t = np.linspace(0.0, 2.0, 4001)
        for shape in ("sin2", "const"):
            envelope = Envelope(shape, np.pi)
            values = [envelope.value(x, 2.0) for x in t]
            self.assertAlmostEqual(simpson(values, x=t), np.pi, places=9)
            self.assertAlmostEqual(envelope.area(2.0, 2.0), np.pi, places=14)
            self.assertAlmostEqual(envelope.area(0.0, 2.0), 0.0, places=14)

    def test_default_area(self):
        self.assertEqual(Envelope().delta_T, np.pi)
        with self.assertRaises(ScheduleError):
            Envelope("gauss")


class TestLoopSchedule(unittest.TestCase):
    def setUp(self):
        self.schedule = plaquette_schedule(0.2, 1.0, 0.4, 1.1, 0.0, 0.9, 4, 30.0, kappa=2.0)

    def test_plaquette_schedule(self):
        s = self.schedule
        self.assertEqual(len(s.segments), 6)
        self.assertEqual(s.segments[0].t0, 0.0)
        self.assertEqual(s.segments[-1].t1, 30.0)
        self.assertTrue(s.is_closed())
        self.assertEqual(s.kappa, 2.0)
        # corners are reached exactly
        p = s.params(s.segments[1].t0)
        self.assertAlmostEqual(p["theta"], 1.0, places=12)
        self.assertAlmostEqual(p["vartheta"], 0.4, places=12)

    def test_frame_and_couplings(self):
        s = self.schedule
        t = 11.3
        p = s.params(t)
        expected = plaquette_couplings(p["theta"], p["vartheta"], p["varphi"], 4, 2.0)
        np.testing.assert_array_equal(s.couplings(t).kappas, expected.kappas)
        np.testing.assert_array_equal(
            s.frame(t).coeffs,
            plaquette_frame(p["theta"], p["vartheta"], p["varphi"], 4).coeffs,
        )
        self.assertEqual(s.phi(t).dim, 4)

    def test_zero_speed_at_corners(self):
        s = self.schedule
        seg = s.segments[2]
        h = 1e-6
        before = s.params(seg.t0 + h)
        at = s.params(seg.t0)
        self.assertLess(abs(before["vartheta"] - at["vartheta"]), 1e-9)

    def test_base_legs(self):
        s = plaquette_schedule(0.2, 1.0, 0.4, 1.1, 0.0, 0.9, 4, 30.0, base_vartheta=0.0)
        self.assertEqual(len(s.segments), 7)
        np.testing.assert_allclose(s.couplings(0.0).kappas, [0, 0, 1], atol=1e-15)

    def test_degenerate_loop(self):
        s = plaquette_schedule(0.2, 0.2, 0.4, 0.4, 0.0, 0.0, 4, 5.0)
        self.assertEqual(len(s.segments), 1)
        self.assertTrue(s.is_closed())

    def test_json(self):
        again = LoopSchedule.from_json(self.schedule.to_json())
        self.assertEqual(again.to_json(), self.schedule.to_json())
        np.testing.assert_array_equal(
            again.couplings(7.0).kappas, self.schedule.couplings(7.0).kappas
        )

    def test_malformed_json(self):
        with self.assertRaises(InputError):
            LoopSchedule.from_json({"M": 4, "T": 1.0})
        with self.assertRaises(InputError):
            LoopSchedule.from_json({"M": 4, "T": 1.0, "segments": [{"t0": 0.0}]})
        obj = self.schedule.to_json()
        obj["segments"][0]["params"]["theta"] = ["start", "end"]
        with self.assertRaises(ScheduleError):
            LoopSchedule.from_json(obj)
        obj = self.schedule.to_json()
        obj["T"] = "long"
        with self.assertRaises(ScheduleError):
            LoopSchedule.from_json(obj)

    def test_segment_errors(self):
        point = {"theta": (0, 0), "vartheta": (0.5, 0.5), "varphi": (0, 0)}
        with self.assertRaises(ScheduleError):
            LoopSchedule(4, 1.0, "plaquette", [])
        with self.assertRaises(ScheduleError):
            LoopSchedule(4, 1.0, "plaquette", [Segment(0.0, 0.5, point, "linear")])
        with self.assertRaises(ScheduleError):
            LoopSchedule(
                4,
                1.0,
                "plaquette",
                [Segment(0.0, 0.4, point, "linear"), Segment(0.5, 1.0, point, "linear")],
            )
        with self.assertRaises(ScheduleError):
            LoopSchedule(4, 1.0, "plaquette", [Segment(0.0, 1.0, point, "cubic")])
        with self.assertRaises(ScheduleError):
            LoopSchedule(4, 1.0, "plaquette", [Segment(0.0, 1.0, {"theta": (0, 1)}, "linear")])
        with self.assertRaises(ScheduleError):
            LoopSchedule(4, 1.0, "ring", [Segment(0.0, 1.0, point, "linear")])
        with self.assertRaises(ScheduleError):
            LoopSchedule(4, 0.0, "plaquette", [Segment(0.0, 0.0, point, "linear")])

    def test_jump(self):
        first = {"theta": (0, 0), "vartheta": (0.5, 0.5), "varphi": (0, 0)}
        second = {"theta": (0.1, 0.1), "vartheta": (0.5, 0.5), "varphi": (0, 0)}
        with self.assertRaises(ScheduleError):
            LoopSchedule(
                4,
                1.0,
                "plaquette",
                [Segment(0.0, 0.5, first, "linear"), Segment(0.5, 1.0, second, "linear")],
            )

    def test_rescaled(self):
        longer = rescaled(self.schedule, 90.0)
        self.assertEqual(longer.T, 90.0)
        np.testing.assert_allclose(
            longer.couplings(3 * 11.3).kappas, self.schedule.couplings(11.3).kappas, atol=1e-13
        )


class TestPulseSchedule(unittest.TestCase):
    def test_pulse(self):
        s = pulse_schedule(1.0, 0.5, 4, 2.0)
        self.assertAlmostEqual(s.pulse_area(2.0), np.pi, places=14)
        self.assertTrue(s.is_closed())
        kappas = s.couplings(0.7).kappas
        direction = kappas / np.linalg.norm(kappas)
        np.testing.assert_allclose(
            direction, [np.sin(0.5) * np.exp(0.5j), np.cos(0.5), 0], atol=1e-15
        )
        self.assertTrue(s.frame(0.0).is_orthonormal())
        np.testing.assert_allclose(s.frame(2.0).projector(), s.frame(0.0).projector(), atol=1e-12)

    def test_needs_envelope(self):
        params = {"theta": (1, 1), "varphi": (0, 0)}
        with self.assertRaises(ScheduleError):
            LoopSchedule(4, 1.0, "pulse", [Segment(0.0, 1.0, params, "linear")])


class TestSampledSchedule(unittest.TestCase):
    def test_samples(self):
        times = [0.0, 1.0, 3.0]
        kappas = [[1.0, 0.5j, 0.2], [0.8, 0.6, 0.1j], [1.0, 0.5j, 0.2]]
        s = sampled_schedule(times, kappas)
        self.assertEqual(s.M, 4)
        self.assertTrue(s.is_closed())
        np.testing.assert_allclose(s.couplings(1.0).kappas, kappas[1], atol=1e-15)
        np.testing.assert_allclose(
            s.couplings(2.0).kappas, (np.array(kappas[1]) + np.array(kappas[2])) / 2, atol=1e-15
        )
        self.assertTrue(s.frame(2.0).is_orthonormal())

    def test_enveloped_star_frame(self):
        "Couplings vanish at the pulse edges; the frame comes from the weights."
        base = sampled_schedule([0.0, 1.0], [[0.6, 0.8j, 0.0], [0.6, 0.8j, 0.0]])
        s = LoopSchedule(base.M, base.duration, "star", base.segments, Envelope("sin2", np.pi))
        self.assertEqual(np.linalg.norm(s.couplings(0.0).kappas), 0.0)
        g = np.array([0.6, 0.8j, 0.0])
        np.testing.assert_allclose(
            s.frame(0.0).coeffs, nonadiabatic_frame(g, 0.0).coeffs, atol=1e-15
        )
        np.testing.assert_allclose(
            s.frame(0.5).coeffs, nonadiabatic_frame(g, np.pi / 2).coeffs, atol=1e-14
        )
        self.assertTrue(s.frame(1.0).is_orthonormal())

    def test_too_few(self):
        with self.assertRaises(ScheduleError):
            sampled_schedule([0.0], [[1.0, 1.0]])


class TestHamiltonianPath(unittest.TestCase):
    def test_wraps_arrays(self):
        path = HamiltonianPath(lambda t: np.array([[0, t], [t, 0]]), 1.0)
        self.assertIsInstance(path.phi(0.5), CouplingMatrix)
        self.assertEqual(path.M, 2)


if __name__ == "__main__":
    unittest.main()
