import math

import numpy as np
import pytest
from scipy.optimize import minimize_scalar

from beurling.almostper import TrigPoly
from beurling.evolution import (
    DiffOp, MatrixOp, RecurrenceOp, char_fn_diff, char_fn_recurrence, gelfand_hille_check,
    group_nilpotency_check, homogeneous_solutions, kt_check, matrix_spectrum, operator_from_dict,
    poly_roots, recurrence_residual, resonance_set, resonance_set_diff, resonance_set_recurrence,
    solve_recurrence,
)
from beurling.polycalc import Signal, sum_S
from beurling.spectrum import sp_of_trigpoly

EX84_B = DiffOp((-1, 2j, 1))
EX84_A = MatrixOp([[2, -6], [3, -7]])


def jordan(n, lam):
    return np.eye(n) * lam + np.eye(n, k=1)


def forcing(f, lo, hi, dim=1):
    n = np.arange(lo, hi + 1, dtype=float)
    v = np.asarray(f(n), dtype=complex).reshape(n.size, -1)
    return Signal("Z", lo, 1, np.broadcast_to(v, (n.size, dim)).copy())


class TestCharacteristicFunctions:
    def test_recurrence_examples(self):
        assert char_fn_recurrence(RecurrenceOp(((1, 1),)), 1j) == 1j
        assert char_fn_recurrence(RecurrenceOp(((1, 1), (-1, 0))), 1) == 0
        B = RecurrenceOp(((1, 2), (2j, 1), (-1, 0)))
        assert char_fn_recurrence(B, 1) == 2j
        th = 0.37
        z = np.exp(1j * th)
        assert char_fn_recurrence(B, z) == pytest.approx(z ** 2 + 2j * z - 1, abs=1e-15)

    def test_recurrence_negative_shift_at_zero(self):
        with pytest.raises(ValueError):
            char_fn_recurrence(RecurrenceOp(((1, -1),)), 0)

    def test_diff_examples(self):
        assert char_fn_diff(EX84_B, 1) == -4
        assert char_fn_diff(EX84_B, 0) == -1
        D = DiffOp((0, 1))
        for s in (-2.5, 0.0, 3.0):
            assert char_fn_diff(D, s) == 1j * s

    def test_operator_validation(self):
        with pytest.raises(ValueError):
            RecurrenceOp(((1, 1), (2, 1)))
        with pytest.raises(ValueError):
            RecurrenceOp(())
        with pytest.raises(ValueError):
            DiffOp((1, 0))

    def test_json_round_trip(self):
        for op in (RecurrenceOp(((1, 2), (2j, 1), (-1, 0))), EX84_B):
            assert operator_from_dict(op.to_dict()) == op
        back = MatrixOp.from_dict(EX84_A.to_dict())
        np.testing.assert_array_equal(back.entries, EX84_A.entries)


class TestMatrixSpectrum:
    def test_examples(self):
        np.testing.assert_allclose(sorted(matrix_spectrum([[2, -6], [3, -7]]), key=lambda z: z.real),
                                   [-4, -1], atol=1e-12)
        assert MatrixOp(np.eye(3)).spectrum == [(1, 3)]
        (lam, m), = MatrixOp(jordan(3, 1.0)).spectrum
        assert m == 3 and abs(lam - 1) <= 1e-8

    def test_eigen_residuals(self):
        rng = np.random.default_rng(42)
        for d in (1, 2, 4, 8):
            a = rng.standard_normal((d, d)) + 1j * rng.standard_normal((d, d))
            op = MatrixOp(a)
            assert sum(m for _, m in op.spectrum) == d
            for lam, _ in op.spectrum:
                v = op.eigenvectors(lam)
                assert np.linalg.norm(a @ v - lam * v) <= 1e-8 * np.linalg.norm(a, 2)

    def test_dimension_cap(self):
        with pytest.raises(ValueError):
            MatrixOp(np.eye(65))

    def test_poly_roots_against_numpy(self):
        rng = np.random.default_rng(42)
        for deg in range(1, 9):
            c = rng.standard_normal(deg + 1) + 1j * rng.standard_normal(deg + 1)
            ours = np.sort_complex(poly_roots(c))
            ref = np.sort_complex(np.roots(c[::-1]))
            np.testing.assert_allclose(ours, ref, atol=1e-8)


class TestResonance:
    def test_example_8_4(self):
        rs = resonance_set_diff(EX84_B, EX84_A)
        assert rs.kind == "real_frequencies"
        np.testing.assert_allclose(rs.values, [-3, -2, 0, 1], atol=1e-9)
        # -(s+1)^2 = -1 or -4
        for s in rs.values:
            assert min(abs(-(s + 1) ** 2 + 1), abs(-(s + 1) ** 2 + 4)) <= 1e-9

    def test_recurrence_examples(self):
        shift = RecurrenceOp(((1, 1),))
        assert resonance_set_recurrence(shift, MatrixOp([[1]])).values == [0.0]
        np.testing.assert_allclose(resonance_set_recurrence(shift, MatrixOp([[1j]])).values,
                                   [np.pi / 2], atol=1e-12)
        assert resonance_set_recurrence(shift, MatrixOp([[2]])).values == []

    def test_diff_examples(self):
        D = DiffOp((0, 1))
        assert resonance_set_diff(D, MatrixOp([[0]])).values == [0.0]
        assert resonance_set_diff(D, MatrixOp([[1]])).values == []

    def test_degenerate(self):
        with pytest.raises(ValueError):
            resonance_set_recurrence(RecurrenceOp(((2, 0),)), MatrixOp([[1]]))
        with pytest.raises(ValueError):
            resonance_set_diff(DiffOp((3,)), MatrixOp([[1]]))

    def test_negative_shifts(self):
        # p_B(z) = z + 1/z = 2 cos(theta); eigenvalue 1 gives theta = +-pi/3
        B = RecurrenceOp(((1, 1), (1, -1)))
        np.testing.assert_allclose(resonance_set(B, MatrixOp([[1]])).values,
                                   [-np.pi / 3, np.pi / 3], atol=1e-12)

    def test_random_recurrence_oracle(self):
        rng = np.random.default_rng(42)
        scan = np.linspace(-np.pi, np.pi, 20001)
        for _ in range(100):
            k = rng.integers(1, 5)
            shifts = rng.choice(np.arange(-3, 4), size=k, replace=False)
            if k == 1 and shifts[0] == 0:
                shifts[0] = 1
            b = rng.standard_normal(k) + 1j * rng.standard_normal(k)
            B = RecurrenceOp(tuple(zip(b, shifts)))
            d = rng.integers(1, 5)
            planted = rng.uniform(-np.pi, np.pi, rng.integers(0, d + 1))
            lams = [char_fn_recurrence(B, np.exp(1j * th)) for th in planted]
            lams += list(rng.standard_normal(d - len(lams)) * 3 + 1j * rng.standard_normal(d - len(lams)))
            q = rng.standard_normal((d, d)) + 1j * rng.standard_normal((d, d))
            A = MatrixOp(q @ np.diag(lams) @ np.linalg.inv(q))
            rs = resonance_set_recurrence(B, A)
            scale = np.abs(b).sum()
            eig = [lam for lam, _ in A.spectrum]
            for th in rs.values:
                p = char_fn_recurrence(B, np.exp(1j * th))
                assert min(abs(p - lam) for lam in eig) <= 1e-7 * max(1.0, scale)
            for th in planted:
                assert min(abs(np.angle(np.exp(1j * (th - s)))) for s in rs.values) <= 1e-6
            # dense scan for roots the polynomial solver could have missed
            zs = np.exp(1j * scan)
            for lam in eig:
                f = np.abs(sum(bj * zs ** int(nj) for bj, nj in B.terms) - lam)
                for i in np.flatnonzero((f[1:-1] <= f[:-2]) & (f[1:-1] <= f[2:])) + 1:
                    r = minimize_scalar(
                        lambda x: abs(char_fn_recurrence(B, np.exp(1j * x)) - lam),
                        bounds=(scan[i - 1], scan[i + 1]), method="bounded",
                        options={"xatol": 1e-13})
                    if r.fun <= 1e-7 * max(1.0, scale):
                        assert min(abs(np.angle(np.exp(1j * (r.x - s)))) for s in rs.values) <= 1e-5

    def test_random_diff_oracle(self):
        rng = np.random.default_rng(7)
        for _ in range(50):
            order = rng.integers(1, 5)
            c = rng.standard_normal(order + 1) + 1j * rng.standard_normal(order + 1)
            B = DiffOp(tuple(c))
            d = rng.integers(1, 4)
            planted = rng.uniform(-3, 3, rng.integers(0, d + 1))
            lams = [char_fn_diff(B, s) for s in planted]
            lams += list(rng.standard_normal(d - len(lams)) + 5j)
            A = MatrixOp(np.diag(lams))
            rs = resonance_set_diff(B, A)
            for s in planted:
                assert min(abs(s - x) for x in rs.values) <= 1e-6
            for x in rs.values:
                p = char_fn_diff(B, x)
                assert min(abs(p - lam) for lam in lams) <= 1e-7 * max(1.0, np.abs(c).sum() * (1 + abs(x)) ** order)


class TestSolver:
    def test_geometric(self):
        B = RecurrenceOp(((1, 1),))
        phi = solve_recurrence(B, MatrixOp([[0.5]]), forcing(lambda n: 0 * n, 0, 30), [1.0])
        np.testing.assert_allclose(phi.values[:, 0], 0.5 ** np.arange(32), rtol=1e-15)

    def test_telescoping(self):
        B = RecurrenceOp(((1, 1),))
        phi = solve_recurrence(B, MatrixOp([[1]]), forcing(lambda n: 0 * n + 1, 0, 50), [0.0])
        np.testing.assert_array_equal(phi.values[:, 0], np.arange(52))

    def test_matches_sum(self):
        B = RecurrenceOp(((1, 1), (-1, 0)))
        psi = forcing(np.cos, 0, 500)
        phi = solve_recurrence(B, MatrixOp([[0]]), psi, [0.0])
        ref = sum_S(Signal.from_function(np.cos, "Z", 0, 501))
        np.testing.assert_allclose(phi.values, ref.values, atol=1e-10)
        assert np.abs(phi.values).max() <= 1 / abs(math.sin(0.5)) + 1e-9

    def test_residual_random(self):
        rng = np.random.default_rng(42)
        for _ in range(20):
            d = 2
            B = RecurrenceOp(((1.0, 2), (0.3j, 1), (0.2, -1)))
            A = MatrixOp(0.3 * (rng.standard_normal((d, d)) + 1j * rng.standard_normal((d, d))))
            psi = Signal("Z", 0, 1, rng.standard_normal((60, d)) + 0j)
            init = rng.standard_normal((3, d))
            phi = solve_recurrence(B, A, psi, init)
            assert phi.start == -1 and len(phi) == 60 + 3
            scale = max(1.0, np.abs(phi.values).max())
            assert recurrence_residual(B, A, phi, psi) <= 1e-10 * scale

    def test_errors(self):
        B = RecurrenceOp(((1, 1),))
        with pytest.raises(ValueError):
            solve_recurrence(B, MatrixOp([[1]]), forcing(np.cos, 0, 5), [0.0, 1.0])
        with pytest.raises(ValueError):
            solve_recurrence(RecurrenceOp(((0, 1), (1, 0))), MatrixOp([[1]]), forcing(np.cos, 0, 5),
                             [0.0])


class TestHomogeneous:
    def test_example_8_4(self):
        sols = homogeneous_solutions(EX84_B, EX84_A)
        assert len(sols) == 4
        pairs = {round(s.frequency): tuple(np.round(s.vector.real, 12)) for s in sols}
        assert pairs == {-3: (1.0, 1.0), 1: (1.0, 1.0), -2: (2.0, 1.0), 0: (2.0, 1.0)}
        assert max(s.residual for s in sols) <= 1e-9

    def test_constant_solutions(self):
        sols = homogeneous_solutions(DiffOp((0, 1)), MatrixOp([[0]]))
        assert len(sols) == 1 and sols[0].frequency == 0.0
        np.testing.assert_allclose(sols[0].solution(np.array([-3.0, 5.0])), [[1], [1]])

    def test_shift_power(self):
        sols = homogeneous_solutions(RecurrenceOp(((1, 1),)), MatrixOp([[1j]]))
        (sol,) = sols
        n = np.arange(-5, 6)
        np.testing.assert_allclose(sol.solution(n)[:, 0], 1j ** n.astype(float), atol=1e-12)
        assert sol.residual <= 1e-12

    def test_spectrum_in_resonance_set(self):
        rng = np.random.default_rng(3)
        for _ in range(20):
            B = RecurrenceOp(((1, 2), (rng.standard_normal(), 1), (-1, 0)))
            lams = [char_fn_recurrence(B, np.exp(1j * th)) for th in rng.uniform(-3, 3, 2)]
            A = MatrixOp(np.diag(lams))
            rs = resonance_set(B, A)
            for sol in homogeneous_solutions(B, A):
                assert set(sp_of_trigpoly(sol.solution)) <= set(rs.values)

    def test_declines_defective(self):
        with pytest.raises(ValueError):
            homogeneous_solutions(DiffOp((0, 1)), MatrixOp(jordan(2, 0.0)))


class TestGelfandHille:
    @pytest.mark.parametrize("N", [0, 1, 2, 3])
    def test_jordan_blocks(self, N):
        r = gelfand_hille_check(jordan(N + 1, 1.0), N, horizon=2000)
        assert r["dominated"] and r["spectrum_is_one"] and r["nilpotent"] and r["consistent"]
        assert r["nilpotent_norm"] == 0.0
        assert r["sharpness_norm"] > 0 and r["sharp"]

    def test_jordan_power_norms(self):
        # ||J_3(1)^n|| is asymptotic to n^2/2 by the binomial expansion
        r = gelfand_hille_check(jordan(3, 1.0), 2, horizon=1000)
        n = 1000
        ref = np.linalg.norm(np.array([[1, n, n * (n - 1) / 2], [0, 1, n], [0, 0, 1]]), 2)
        assert r["forward_norms"][n] == pytest.approx(ref, rel=1e-12)

    def test_identity(self):
        r = gelfand_hille_check(np.eye(2), 0, horizon=1000)
        np.testing.assert_allclose(r["forward_norms"], 1.0)
        assert r["premises_hold"] and r["nilpotent_norm"] == 0.0

    def test_geometric_growth_flagged(self):
        r = gelfand_hille_check(jordan(2, 1 + 1e-3), 1, horizon=10**4)
        assert not r["dominated"] and not r["premises_hold"] and r["consistent"]

    def test_short_horizon(self):
        with pytest.raises(ValueError):
            gelfand_hille_check(np.eye(2), 0, horizon=100)


class TestKatznelsonTzafriri:
    def test_case_empty(self):
        x = np.diag([0.9 * np.exp(1j * np.pi / 3), 0.5])
        r = kt_check(x, horizon=1000)
        assert r["case"] == "empty" and r["asserted"] and r["decayed"] and r["passed"]
        assert r["decay_index"] <= 400
        n = np.arange(1001)
        np.testing.assert_allclose(r["power_curve"], 0.9 ** n, rtol=1e-9)

    def test_case_one(self):
        r = kt_check(np.diag([1.0, 0.5]), horizon=1000)
        assert r["case"] == "one" and r["decayed"] and r["decay_index"] <= 25
        n = np.arange(1001)
        np.testing.assert_allclose(r["difference_curve"], 0.5 ** (n + 1), rtol=1e-9)

    def test_case_one_rate(self):
        r = 0.8
        curve = kt_check(np.diag([1.0, r]), horizon=1000)["difference_curve"]
        rates = curve[101:201] / curve[100:200]
        assert np.all(np.abs(rates - r) <= 0.01 * r)

    def test_other(self):
        r = kt_check(np.diag([np.exp(1j * np.pi / 4)]), horizon=1000)
        assert r["case"] == "other" and not r["asserted"]
        np.testing.assert_allclose(r["difference_curve"], abs(np.exp(1j * np.pi / 4) - 1), rtol=1e-12)
        assert abs(np.exp(1j * np.pi / 4) - 1) == pytest.approx(0.765, abs=1e-3)

    def test_weighted_sequence(self):
        a = (1.0 + np.arange(1002)) ** 0.5
        r = kt_check(np.diag([1.0, 0.5]), a, horizon=1000)
        assert r["passed"]

    def test_ratio_condition(self):
        with pytest.raises(ValueError):
            kt_check(np.eye(1), 2.0 ** np.arange(1002), horizon=1000)
        with pytest.raises(ValueError):
            kt_check(np.eye(1), np.ones(10), horizon=1000)


class TestGroupNilpotency:
    def test_shifted_jordan(self):
        A = 2j * np.eye(3) + jordan(3, 0.0)
        r = group_nilpotency_check(A, 2, 2.0, horizon=1e3)
        t = r["times"]
        assert np.all(r["norms"] <= 1.01 * (1 + np.abs(t) + t ** 2 / 2))
        assert r["nilpotent_norm"] == 0.0 and r["dominated"] and r["premises_hold"]

    def test_scalar(self):
        r = group_nilpotency_check(1.5j * np.eye(2), 0, 1.5, horizon=100)
        np.testing.assert_allclose(r["norms"], 1.0, atol=1e-12)
        assert r["nilpotent_norm"] <= 1e-15

    def test_two_points(self):
        r = group_nilpotency_check(np.diag([2j, 3j]), 0, 2.0, horizon=100)
        assert not r["premises_hold"]

    def test_real_part_breaks_domination(self):
        r = group_nilpotency_check(np.diag([0.1 + 1j, -0.1 + 1j]), 0, 1.0, horizon=100)
        assert not r["dominated"]
