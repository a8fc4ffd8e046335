import math

import numpy as np

from .helper import TestHelper
from cylphase import star
from cylphase.core import AngleGrid, density_from_pure, embed_matrix, superposition
from cylphase.errors import BandLimitError, ConfigError, SeriesConvergenceError, WindowOverflowError
from cylphase.star import CylSymbol, Rule, apply_correspondence, star_product, symbol_of


class TestSymbols(TestHelper):
    def test_symbol_operator_round_trip(self):
        for _ in range(5):
            a = self.random_operator(7)
            a = a + a.conj().T
            op, window = star.operator_of(symbol_of(a, (-3, 3)))
            self.assertEqual(window, (-3, 3))
            self.assertAllClose(op, a, 1e-10)

    def test_identity_symbol_is_constant(self):
        s = symbol_of(np.eye(5), (-2, 2))
        values = s.sample((-2, 2), AngleGrid(16))
        self.assertAllClose(values, 1 / (2 * math.pi), 1e-12)

    def test_projector_symbol_is_eigenstate_wigner(self):
        s = symbol_of(np.diag([0, 1, 0]), (1, 3))
        values = s.sample((0, 4), AngleGrid(8))
        expected = np.zeros((5, 8))
        expected[2] = 1 / (2 * math.pi)
        self.assertAllClose(values, expected, 1e-12)

    def test_hermitian_operators_give_real_symbols(self):
        a = self.random_operator(4)
        s = symbol_of(a + a.conj().T, (0, 3))
        self.assertLess(s.conj().max_abs_diff(s), 1e-15)
        values = s.evaluate(np.linspace(-1, 4, 11), np.linspace(-3, 3, 11))
        self.assertAllClose(values.imag, 0, 1e-12)

    def test_evaluate_agrees_with_sample_at_integers(self):
        s = symbol_of(self.random_operator(4), (-1, 2))
        grid = AngleGrid(8)
        sampled = s.sample((-2, 3), grid)
        ell, phi = np.meshgrid(np.arange(-2, 4), grid.points, indexing='ij')
        self.assertAllClose(s.evaluate(ell, phi), sampled, 1e-12)

    def test_phase_space_inner_is_scaled_trace(self):
        a, b = self.random_operator(5), self.random_operator(5)
        inner = symbol_of(a, (0, 4)).phase_space_inner(symbol_of(b, (0, 4)))
        self.assertAlmostEqual(inner, np.trace(a @ b) / (2 * math.pi), places=12)

    def test_band_limit_errors(self):
        a = self.random_operator(4)
        self.assertRaises(BandLimitError, symbol_of, a, (0, 3), 1)
        self.assertRaises(BandLimitError, symbol_of(a, (0, 3)).padded, 0, 1)
        diag = symbol_of(np.diag([1.0, 2.0, 3.0]), (0, 2), band_limit=0)
        self.assertEqual(diag.band_limit, 0)
        self.assertEqual(diag.padded(2, 3).band_limit, 3)

    def test_shape_errors(self):
        self.assertRaises(ConfigError, symbol_of, np.eye(3), (0, 3))
        self.assertRaises(ConfigError, CylSymbol, 0, np.zeros((2, 3)))

    def test_stray_coefficients(self):
        coeffs = np.zeros((3, 2), dtype=complex)
        # mode 1 at the last half-lattice site would need row 2 of a 2x2 matrix
        coeffs[2, 1] = 1.0
        s = CylSymbol(0, coeffs)
        self.assertRaises(WindowOverflowError, star.operator_of, s)
        self.assertEqual(np.abs(s.truncated().coeffs).max(), 0.0)

    def test_alignment(self):
        a = symbol_of(self.random_operator(2), (0, 1))
        b = symbol_of(self.random_operator(3), (3, 5))
        x, y = star.align(a, b)
        self.assertEqual(x.window, (0, 5))
        self.assertEqual(y.window, (0, 5))
        self.assertEqual(x.band_limit, 2)
        self.assertRaises(WindowOverflowError, a.on_window, (1, 5))


class TestDeltaShift(TestHelper):
    def test_zero_shift_is_identity(self):
        f = self.rng.normal(size=9) + 0j
        self.assertAllClose(star.delta_ell_shift(f, 0), f, 0)

    def test_integer_shift_brings_in_zeros(self):
        self.assertAllClose(star.delta_ell_shift([1, 2, 3, 4], 1), [2, 3, 4, 0], 1e-15)
        self.assertAllClose(star.delta_ell_shift([1, 2, 3, 4], -2), [0, 0, 1, 2], 1e-15)
        self.assertAllClose(star.delta_ell_shift([1, 2, 3, 4], 5), 0, 0)

    def test_fractional_shift_is_sinc_sum(self):
        f = self.rng.normal(size=7) + 1j * self.rng.normal(size=7)
        j = np.arange(7)
        expected = np.array([np.sum(f * np.sinc(k + 0.3 - j)) for k in j])
        self.assertAllClose(star.delta_ell_shift(f, 0.3), expected, 1e-14)

    def test_half_shift_matches_symbol_interpolant(self):
        projector = np.zeros((9, 9))
        projector[4, 4] = 1.0
        s = symbol_of(projector, (-4, 4))
        ells = np.arange(-4, 5)
        expected = s.mode_values(ells + 0.5)[s.band_limit]
        self.assertAllClose(star.delta_ell_shift(s.mode(0), 0.5), expected, 1e-15)

    def test_half_shift_of_wigner_row(self):
        # exp(delta_l / 2) W(l, phi) = W(l + 1/2, phi)
        rho = density_from_pure(superposition(0, 2, 0.4))
        s = symbol_of(rho.matrix, rho.window)
        window, grid = (-3, 5), AngleGrid(8)
        rows = s.sample(window, grid)
        ells = np.arange(window[0], window[1] + 1) + 0.5
        for k, phi in enumerate(grid.points):
            expected = s.evaluate(ells, phi)
            self.assertAllClose(star.delta_ell_shift(rows[:, k], 0.5), expected, 1e-14)

    def test_series_matches_integer_shift(self):
        f = self.rng.normal(size=8) + 0j
        for lam in (1, -2):
            series = star.exp_delta_series(f, lam, order=40, pad=2)
            self.assertAllClose(series, star.delta_ell_shift(f, lam), 1e-10)

    def test_series_reports_non_convergence(self):
        f = self.rng.normal(size=8) + 0j
        self.assertRaises(SeriesConvergenceError, star.exp_delta_series, f, 2.0, 4)


class TestStarProduct(TestHelper):
    def test_operator_product(self):
        for _ in range(5):
            a, b = self.random_operator(5), self.random_operator(5)
            product = star_product(symbol_of(a, (-2, 2)), symbol_of(b, (-2, 2)))
            self.assertLess(product.max_abs_diff(symbol_of(a @ b, (-2, 2))), 1e-8)

    def test_identity_is_unit(self):
        a = symbol_of(self.random_operator(4), (0, 3))
        unit = symbol_of(np.eye(4), (0, 3))
        self.assertLess(star_product(a, unit).max_abs_diff(a), 1e-12)
        self.assertLess(star_product(unit, a).max_abs_diff(a), 1e-12)

    def test_associativity(self):
        window = (-3, 2)
        a, b, c = (symbol_of(self.random_operator(6), window) for _ in range(3))
        left = star_product(star_product(a, b), c)
        right = star_product(a, star_product(b, c))
        self.assertLess(left.max_abs_diff(right), 1e-8)

    def test_diagonal_operators_multiply_pointwise(self):
        a = symbol_of(np.diag([1.0, -2.0, 0.5]), (0, 2))
        b = symbol_of(np.diag([3.0, 1.0, 4.0]), (0, 2))
        product = star_product(a, b)
        self.assertAllClose(product.mode(0), 2 * math.pi * a.mode(0) * b.mode(0), 1e-12)
        self.assertAllClose(np.delete(product.coeffs, product.band_limit, axis=0), 0, 1e-14)

    def test_differential_matches_integral(self):
        for _ in range(3):
            a = symbol_of(self.random_operator(3), (0, 2))
            b = symbol_of(self.random_operator(3), (0, 2))
            exact = star_product(a, b)
            series = star_product(a, b, 'differential', order=40)
            self.assertLess(series.max_abs_diff(exact), 1e-10)
            self.assertLess(star_product(a, b, star.Mode.DIFFERENTIAL).max_abs_diff(exact), 1e-6)

    def test_differential_with_wider_window(self):
        a = symbol_of(np.diag([1.0, 2.0, 3.0, 4.0]) + np.eye(4, k=1), (-1, 2), band_limit=1)
        b = symbol_of(np.eye(4, k=-1) * 0.5, (-1, 2), band_limit=1)
        exact = star_product(a, b)
        self.assertLess(star_product(a, b, 'differential', order=40).max_abs_diff(exact), 1e-10)

    def test_differential_order_too_low(self):
        a = symbol_of(self.random_operator(3), (0, 2))
        self.assertRaises(SeriesConvergenceError, star_product, a, a, 'differential', 3)

    def test_unknown_mode(self):
        a = symbol_of(np.eye(2), (0, 1))
        self.assertRaises(ValueError, star_product, a, a, 'sampled')


class TestMoyalBracket(TestHelper):
    def test_antisymmetry(self):
        a = symbol_of(self.random_operator(4), (0, 3))
        self.assertEqual(np.abs(star.moyal_bracket(a, a).coeffs).max(), 0.0)

    def test_commuting_operators(self):
        ells = np.arange(-3, 4, dtype=float)
        l1 = symbol_of(np.diag(ells), (-3, 3))
        l2 = symbol_of(np.diag(ells ** 2), (-3, 3))
        self.assertLess(np.abs(star.moyal_bracket(l1, l2).coeffs).max(), 1e-14)

    def test_matches_commutator(self):
        for _ in range(5):
            a, b = self.random_operator(6), self.random_operator(6)
            bracket = star.moyal_bracket(symbol_of(a, (0, 5)), symbol_of(b, (0, 5)))
            expected = symbol_of((a @ b - b @ a) / 1j, (0, 5))
            self.assertLess(bracket.max_abs_diff(expected), 1e-8)

    def test_jacobi_identity(self):
        window = (-2, 1)
        a, b, c = (symbol_of(self.random_operator(4), window) for _ in range(3))
        self.assertLess(star.jacobi_residue(a, b, c), 1e-6)


class TestCorrespondence(TestHelper):
    window = (0, 3)
    wide = (-1, 4)

    def lowering(self):
        # E|l> = |l - 1> on the padded window
        return np.eye(6, k=1)

    def assertRule(self, rule, build):
        a = self.random_operator(4)
        expected = symbol_of(build(embed_matrix(a, self.window, self.wide)), self.wide)
        got = apply_correspondence(rule, symbol_of(a, self.window))
        self.assertLess(got.max_abs_diff(expected), 1e-12, rule)

    def test_l_rules(self):
        ells = np.diag(np.arange(0, 4, dtype=float))
        a = self.random_operator(4)
        s = symbol_of(a, self.window)
        self.assertLess(apply_correspondence(Rule.L_LEFT, s).max_abs_diff(symbol_of(ells @ a, self.window)), 1e-12)
        self.assertLess(apply_correspondence('L_right', s).max_abs_diff(symbol_of(a @ ells, self.window)), 1e-12)
        commutator = apply_correspondence(Rule.L_LEFT, s) - apply_correspondence(Rule.L_RIGHT, s)
        self.assertLess(commutator.max_abs_diff(symbol_of(ells @ a - a @ ells, self.window)), 1e-12)

    def test_l_rule_on_eigenstate(self):
        s = symbol_of(np.array([[1.0]]), (5, 5))
        self.assertLess(apply_correspondence(Rule.L_LEFT, s).max_abs_diff(s * 5), 1e-15)

    def test_e_rules(self):
        e = self.lowering()
        self.assertRule(Rule.E_LEFT, lambda a: e @ a)
        self.assertRule(Rule.E_RIGHT, lambda a: a @ e)
        self.assertRule(Rule.ED_LEFT, lambda a: e.T @ a)
        self.assertRule(Rule.ED_RIGHT, lambda a: a @ e.T)

    def test_e_rule_lowers_eigenstate(self):
        s = symbol_of(np.array([[1.0]]), (2, 2))
        expected = symbol_of(np.array([[0, 1.0], [0, 0]]), (1, 2))
        self.assertLess(apply_correspondence(Rule.E_LEFT, s).max_abs_diff(expected), 1e-15)

    def test_unknown_rule(self):
        s = symbol_of(np.eye(2), (0, 1))
        self.assertRaises(ValueError, apply_correspondence, 'X_left', s)
