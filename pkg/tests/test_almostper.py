import math

import numpy as np
import pytest

from beurling.almostper import (
    TrigPoly, affine_residual_floor, bohr_coefficient, constant_trigpoly, decompose_ap_w,
    epsilon_periods, eval_trigpoly, example_7_13, series_lower_bound, reduce_frequency,
    series_tails, series_upper_bound, _series,
)
from beurling.polycalc import Signal


def sig_z(f, lo, hi):
    return Signal.from_function(lambda n: f(n.astype(float)), "Z", lo, hi)


def zeta_euler_maclaurin(s, K=1000):
    k = np.arange(1, K, dtype=float)
    return (np.sum(k ** -s) + K ** (1 - s) / (s - 1) + 0.5 * K ** -s + s * K ** (-s - 1) / 12
            - s * (s + 1) * (s + 2) * K ** (-s - 3) / 720)


class TestTrigPoly:
    def test_eval_examples(self):
        c = TrigPoly([(0, [[2 + 1j]])], "R")
        assert eval_trigpoly(c, 17.3)[0] == 2 + 1j
        np.testing.assert_allclose(eval_trigpoly(TrigPoly([(2, [1.0])], "R"), math.pi / 4)[0], 1j,
                                   atol=1e-15)
        np.testing.assert_allclose(eval_trigpoly(TrigPoly([(1, [[0], [1]])], "R"), 2.0)[0],
                                   2 * np.exp(2j), rtol=1e-15)

    def test_reduction_and_merging(self):
        tp = TrigPoly([(0.5, [1.0]), (0.5 + 2 * math.pi, [2.0]), (1.0, [0.0])], "Z")
        assert tp.frequencies == [pytest.approx(0.5)]
        np.testing.assert_allclose(tp.terms[0][1].coeffs, [[3.0]])
        assert reduce_frequency(-math.pi, "Z") == math.pi
        assert reduce_frequency(7.0, "R") == 7.0
        assert TrigPoly([(1.0, [1.0]), (1.0, [-1.0])], "R").is_zero()

    def test_json_round_trip(self):
        tp = TrigPoly([(0.3, [[1, 2j], [0, 1]]), (-1.1, [[0.5, 0]])], "R")
        tp2 = TrigPoly.from_dict(tp.to_dict())
        t = np.linspace(-3, 3, 7)
        np.testing.assert_allclose(tp2(t), tp(t))


class TestBohr:
    def test_examples(self):
        phi = sig_z(lambda n: np.cos(2 * n), -10**4, 10**4)
        assert abs(bohr_coefficient(phi, 2, 10**4)[0] - 0.5) <= 1e-3
        assert abs(bohr_coefficient(phi, 1, 10**4)[0]) <= 1e-3
        c = sig_z(lambda n: 0 * n + 2.5, -50, 50)
        assert bohr_coefficient(c, 0, 50)[0] == pytest.approx(2.5)

    def test_insufficient_window(self):
        with pytest.raises(ValueError):
            bohr_coefficient(sig_z(np.cos, -10, 10), 1, 20)

    def test_separation_bound(self):
        rng = np.random.default_rng(42)
        L = 10**4
        for _ in range(5):
            freqs = np.sort(rng.uniform(-3, 3, 3))
            if np.min(np.diff(freqs)) < 0.2:
                continue
            coeffs = rng.uniform(0.5, 2, 3) * np.exp(1j * rng.uniform(0, 2 * np.pi, 3))
            tp = constant_trigpoly(dict(zip(freqs, coeffs)), "Z")
            phi = tp.sample(-L, 1, 2 * L + 1)
            for s, c in zip(freqs, coeffs):
                assert abs(bohr_coefficient(phi, s, L)[0] - c) <= 1e-2
                assert abs(bohr_coefficient(phi, s + 0.1, L)[0]) <= 1e-2

    def test_real_line(self):
        phi = Signal.from_function(lambda t: np.exp(1.5j * t), "R", -500, 500, step=0.01)
        assert abs(bohr_coefficient(phi, 1.5, 500)[0] - 1) <= 1e-12


class TestDecompose:
    T = 300.0

    def sig(self, f):
        return Signal.from_function(f, "R", -self.T, self.T, step=0.05)

    def test_sine_plus_decay(self):
        dec = decompose_ap_w(self.sig(lambda t: t * np.sin(t) + np.exp(-np.abs(t))), 1)
        assert len(dec.psi.terms) == 2
        for (s, p), (s_ref, c_ref) in zip(dec.psi.terms, [(-1, 0.5j), (1, -0.5j)]):
            assert abs(s - s_ref) <= 1e-6
            assert abs(p.coeffs[0, 0] - c_ref) <= 1e-2
        assert dec.xi_tail_sup <= 1e-2

    def test_pure_residual(self):
        dec = decompose_ap_w(self.sig(lambda t: (1 + np.abs(t)) * np.exp(-np.abs(t) / 20)), 1)
        assert dec.psi.is_zero()
        assert dec.xi_tail_sup <= 1e-3

    def test_two_pairs_above_threshold(self):
        dec = decompose_ap_w(self.sig(lambda t: t * np.sin(t) + 0.5 * t * np.cos(np.sqrt(2) * t)),
                             1, threshold=0.1)
        np.testing.assert_allclose(dec.psi.frequencies, [-np.sqrt(2), -1, 1, np.sqrt(2)], atol=1e-6)

    def test_synthesis_class(self):
        delta = 1e-3
        coeffs = {0.8: 1.0, -0.8: 1.0, 2.1: 0.5j, -2.1: -0.5j}
        tp = constant_trigpoly(coeffs, "R")
        for N in (0, 1, 2):
            def f(t):
                residual = delta * np.exp(-np.abs(t) / 100) * np.cos(5 * t)
                return t ** N * tp(t)[:, 0] + (1 + np.abs(t)) ** N * residual

            dec = decompose_ap_w(self.sig(f), N)
            assert len(dec.psi.terms) == 4
            for s, p in dec.psi.terms:
                ref = coeffs[min(coeffs, key=lambda x: abs(x - s))]
                assert abs(p.coeffs[0, 0] - ref) <= 3 * delta + 2 / self.T
            # the finite window sees |t|^N / (1+|t|)^N <= 1 - O(N/T), hence the slack
            assert dec.psi_sup <= dec.phi_wn_sup * (1 + N / self.T) + 3 * delta

    def test_preconditions(self):
        phi = Signal.from_function(np.sin, "R", -10, 20, step=0.1)
        with pytest.raises(ValueError):
            decompose_ap_w(phi, 1)
        phi = Signal.from_function(np.sin, "R", -20, 20, step=0.1)
        with pytest.raises(ValueError):
            decompose_ap_w(phi, 1, tail_start=0.0)


class TestEpsilonPeriods:
    def test_exact_period(self):
        periods, gap = epsilon_periods(sig_z(lambda n: np.cos(2 * np.pi * n / 5), 0, 200), 1e-9)
        assert periods == list(range(0, 101, 5)) and gap == 5

    def test_constant(self):
        periods, gap = epsilon_periods(sig_z(lambda n: 0 * n + 3, 0, 50), 0.1)
        assert periods == list(range(26)) and gap == 1

    def test_quasi_periodic(self):
        phi = sig_z(lambda n: np.cos(n) + np.cos(np.sqrt(2) * n), 0, 10**5)
        periods, gap = epsilon_periods(phi, 0.3, max_shift=20000)
        assert len(periods) > 1 and math.isfinite(gap)
        # every returned period is a genuine 0.3-period on the overlap
        v = phi.values[:, 0]
        for k in periods[:10]:
            assert np.abs(v[k:] - v[:len(v) - k]).max() <= 0.3

    def test_monotone_in_eps(self):
        phi = sig_z(lambda n: np.cos(n) + 0.5 * np.cos(np.sqrt(3) * n), 0, 20000)
        small, _ = epsilon_periods(phi, 0.2, max_shift=5000)
        large, _ = epsilon_periods(phi, 0.4, max_shift=5000)
        assert set(small) <= set(large)

    def test_eps_positive(self):
        with pytest.raises(ValueError):
            epsilon_periods(sig_z(np.cos, 0, 10), 0.0)


class TestSeries:
    def test_psi_at_zero(self):
        psi, _, _, _ = example_7_13(T=6.0, K=10**5, grid_step=1.0)
        assert psi.values[0, 0].real == pytest.approx(3.601, abs=1e-3)
        assert psi.values[0, 0].real == pytest.approx(zeta_euler_maclaurin(4 / 3), abs=1e-9)

    def test_tail_enclosures_contain_longer_sums(self):
        t = np.linspace(-6, 6, 13)
        short, long = _series(t, 10**4), _series(t, 2 * 10**5)
        tails_short, tails_long = series_tails(t, 10**4), series_tails(t, 2 * 10**5)
        for key in ("psi", "P", "P2"):
            lo = short[key] + tails_short[key][0]
            hi = short[key] + tails_short[key][1]
            assert np.all(long[key] + tails_long[key][0] >= lo - 1e-10)
            assert np.all(long[key] + tails_long[key][1] <= hi + 1e-10)

    def test_closed_forms_are_primitives(self):
        # P psi and P^2 psi agree with trapezoid primitives of the truncated series
        t = np.linspace(0, 4, 4001)
        s = _series(t, 2000)
        cum = np.concatenate([[0], np.cumsum(0.5 * np.diff(t) * (s["psi"][1:] + s["psi"][:-1]))])
        np.testing.assert_allclose(cum, s["P"], atol=1e-5)
        cum2 = np.concatenate([[0], np.cumsum(0.5 * np.diff(t) * (s["P"][1:] + s["P"][:-1]))])
        np.testing.assert_allclose(cum2, s["P2"], atol=1e-5)

    def test_bounds_formulae(self):
        assert series_upper_bound(3.0) == 36.0
        np.testing.assert_allclose(series_lower_bound(np.pi),
                                   6 * np.pi ** 2 / (2 ** (1 / 3) * np.pi ** (4 / 3)), rtol=1e-14)

    def test_preconditions(self):
        with pytest.raises(ValueError):
            example_7_13(T=20, K=1000)
        with pytest.raises(ValueError):
            example_7_13(T=200, K=10**4)

    def test_affine_floor(self):
        t = np.linspace(1, 2, 11)
        best, a = affine_residual_floor(t, 3 * t, np.arange(0, 6.001, 0.5), "sup")
        assert a == 3.0 and best == 0.0
        # |1 + (3 - a) t| / (1 + t) on [1, 2]: a = 3.5 zeroes it at t = 2, sup 1/4 at t = 1
        best, a = affine_residual_floor(t, 3 * t + 1, np.arange(0, 6.001, 0.5), "sup")
        assert a == 3.5 and best == pytest.approx(0.25)
