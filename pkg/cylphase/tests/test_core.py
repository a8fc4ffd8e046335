import math

import numpy as np

from .helper import TestHelper
from cylphase import core
from cylphase.core import (
    AngleGrid, CylDensity, CylState, DisplacementLabel, displace, displacement_matrix,
    parity_reflect, superposition,
)
from cylphase.errors import ConfigError, NumericalValidationError, WindowOverflowError
from cylphase.special import coherent_state


class TestAngles(TestHelper):
    def test_reduce_angle_lands_in_canonical_range(self):
        self.assertAlmostEqual(core.reduce_angle(3 * math.pi), math.pi)
        self.assertAlmostEqual(core.reduce_angle(-math.pi), math.pi)
        self.assertAlmostEqual(core.reduce_angle(0.25 + 4 * math.pi), 0.25)
        values = core.reduce_angle(np.linspace(-10, 10, 41))
        self.assertTrue(np.all(values > -math.pi))
        self.assertTrue(np.all(values <= math.pi))

    def test_angle_grid_is_midpoint_rule(self):
        grid = AngleGrid(8)
        self.assertEqual(len(grid.points), 8)
        self.assertAlmostEqual(grid.points[0], -math.pi + math.pi / 8)
        self.assertAlmostEqual(grid.weight * 8, 2 * math.pi)
        self.assertRaises(ConfigError, AngleGrid, 1)

    def test_displacement_label_reduces_phi(self):
        label = DisplacementLabel(2, 2 * math.pi + 0.5)
        self.assertAlmostEqual(label.phi, 0.5)
        self.assertEqual(label.inverse().ell, -2)


class TestStates(TestHelper):
    def test_from_dict_fills_gaps(self):
        state = CylState.from_dict({-1: 1.0, 2: 1j})
        self.assertEqual(state.window, (-1, 2))
        self.assertEqual(state.amplitude(0), 0j)
        self.assertEqual(state.amplitude(2), 1j)
        self.assertEqual(state.amplitude(7), 0j)

    def test_normalized(self):
        state = CylState(0, [3.0, 4.0]).normalized()
        self.assertTrue(state.is_normalized())
        self.assertRaises(NumericalValidationError, CylState(0, [0.0]).normalized)

    def test_on_window_pads_and_rejects_cuts(self):
        state = superposition(0, 2)
        wide = state.on_window((-3, 5))
        self.assertEqual(len(wide.amplitudes), 9)
        self.assertEqual(wide.amplitude(2), state.amplitude(2))
        self.assertRaises(WindowOverflowError, state.on_window, (0, 1))

    def test_superposition_rejects_equal_momenta(self):
        self.assertRaises(ConfigError, superposition, 3, 3)
        self.assertRaises(ValueError, superposition, 3, 3)

    def test_angle_wavefunction_matches_fourier_series(self):
        state = self.random_state((-2, 2))
        phi = 0.37
        expected = sum(state.amplitude(e) * np.exp(1j * e * phi) for e in range(-2, 3)) / math.sqrt(2 * math.pi)
        self.assertAlmostEqual(core.angle_wavefunction(state, phi), expected)

    def test_angle_distribution_integrates_to_one(self):
        rho = self.random_density((-3, 3))
        grid = AngleGrid(32)
        total = grid.weight * np.sum(core.angle_distribution(rho, grid.points))
        self.assertAlmostEqual(total, 1.0, places=12)


class TestDensity(TestHelper):
    def test_rejects_non_hermitian(self):
        self.assertRaises(NumericalValidationError, CylDensity, 0, [[1, 1], [0, 0]])
        self.assertRaises(ConfigError, CylDensity, 0, [[1, 0, 0]])

    def test_validate(self):
        self.random_mixed((-2, 2)).validate()
        self.assertRaises(NumericalValidationError, CylDensity(0, [[2.0]]).validate)
        self.assertRaises(NumericalValidationError, CylDensity(0, np.diag([1.5, -0.5])).validate)
        self.assertRaises(NumericalValidationError, CylDensity(0, [[np.nan]]).validate)

    def test_on_window_keeps_trace(self):
        rho = self.random_density((0, 2))
        grown = rho.on_window((-2, 4))
        self.assertAlmostEqual(grown.trace(), 1.0)
        self.assertEqual(grown.element(1, 2), rho.element(1, 2))
        self.assertRaises(WindowOverflowError, rho.on_window, (0, 1))

    def test_mixed_density(self):
        rho = core.mixed_density([1, 3], [core.momentum_eigenstate(0), core.momentum_eigenstate(2)])
        self.assertEqual(rho.window, (0, 2))
        self.assertAlmostEqual(core.momentum_distribution(rho)[2], 0.75)
        self.assertRaises(ConfigError, core.mixed_density, [1], [])

    def test_trace_product_and_fidelity(self):
        a, b = self.random_state((-2, 1)), self.random_state((0, 3))
        overlap = core.trace_product(core.density_from_pure(a), core.density_from_pure(b))
        self.assertAlmostEqual(overlap.real, core.fidelity(a, b))
        self.assertAlmostEqual(overlap.imag, 0.0)


class TestDisplacements(TestHelper):
    def test_displacement_phase_convention(self):
        label = DisplacementLabel(1, 0.3)
        d, padded = displacement_matrix(label, (-2, 2), auto_pad=True)
        self.assertEqual(padded, (-2, 3))
        # D(l, phi)|m> = e^{-i l phi/2} e^{-i m phi} |m + l>
        self.assertAlmostEqual(d[3, 2], np.exp(-0.15j))
        self.assertAlmostEqual(d[4, 3], np.exp(-0.15j) * np.exp(-0.3j))

    def test_weyl_composition(self):
        a, b = DisplacementLabel(1, 0.4), DisplacementLabel(2, -0.9)
        db, after_b = displacement_matrix(b, (-6, 6), auto_pad=True)
        da, window = displacement_matrix(a, after_b, auto_pad=True)
        self.assertEqual(window, (-6, 9))
        product = da @ core.embed_matrix(db, after_b, window)
        both = core._raw_displacement(3, -0.5, window)
        phase = np.exp(0.5j * (a.ell * b.phi - b.ell * a.phi))
        # columns over the source window (-6, 6)
        self.assertAllClose(product[:, :13], (phase * both)[:, :13], 1e-12)

    def test_adjoint_is_inverse_label(self):
        label = DisplacementLabel(3, 0.4)
        d, padded = displacement_matrix(label, (-5, 5), auto_pad=True)
        self.assertAllClose(d.conj().T, core._raw_displacement(-3, -0.4, padded), 1e-14)
        self.assertEqual(label.inverse().ell, -3)
        self.assertAlmostEqual(label.inverse().phi, -0.4, places=14)

    def test_angle_seam_sign(self):
        window = (-4, 4)
        for ell in (1, 2, -3):
            shifted = core._raw_displacement(ell, 0.7 + 2 * math.pi, window)
            self.assertAllClose(shifted, (-1) ** ell * core._raw_displacement(ell, 0.7, window), 1e-12)
        # labels reduce phi, so the public constructor has period 2 pi
        once = displacement_matrix(DisplacementLabel(1, 0.7), window, auto_pad=True)[0]
        wrapped = displacement_matrix(DisplacementLabel(1, 0.7 + 2 * math.pi), window, auto_pad=True)[0]
        self.assertAllClose(once, wrapped, 1e-12)

    def test_displacement_trace_orthogonality(self):
        window = (-10, 10)
        d = displacement_matrix(DisplacementLabel(0, 0.7), window)
        self.assertAlmostEqual(abs(np.trace(d)), abs(np.sum(np.exp(-0.7j * np.arange(-10, 11)))))
        shifted = displacement_matrix(DisplacementLabel(2, 0.7), window, auto_pad=True)[0]
        self.assertAlmostEqual(abs(np.trace(shifted)), 0.0)

    def test_displace_moves_support(self):
        state = superposition(0, 1)
        moved = displace(state, DisplacementLabel(3, 0.2))
        self.assertEqual(moved.window, (3, 4))
        self.assertAlmostEqual(moved.norm(), 1.0)
        self.assertRaises(WindowOverflowError, displace, state, DisplacementLabel(3, 0.0), (0, 2))
        with self.assertLogs('cylphase.core', 'WARNING'):
            padded = displace(state, DisplacementLabel(3, 0.0), (0, 2), auto_pad=True)
        self.assertEqual(padded.window, (0, 4))

    def test_displace_round_trip(self):
        state = CylState.from_dict({-1: 0.5, 0: 1j, 2: -0.3 + 0.2j}).normalized()
        label = DisplacementLabel(4, -1.1)
        back = displace(displace(state, label), label.inverse())
        self.assertEqual(back.window, state.window)
        self.assertAllClose(back.amplitudes, state.amplitudes, 1e-14)

    def test_displacement_leaving_window(self):
        self.assertRaises(WindowOverflowError, displacement_matrix, DisplacementLabel(5, 0.0), (0, 4))
        self.assertRaises(WindowOverflowError, displacement_matrix, DisplacementLabel(1, 0.3), (0, 2))
        d, padded = displacement_matrix(DisplacementLabel(1, 0.3), (0, 2), auto_pad=True)
        self.assertEqual(padded, (0, 3))
        columns = d[:, :3]
        self.assertAllClose(columns.conj().T @ columns, np.eye(3), 1e-14)

    def test_parity_reflect(self):
        state = CylState.from_dict({1: 1.0, 3: 2.0})
        flipped = parity_reflect(state)
        self.assertEqual(flipped.window, (-3, -1))
        self.assertEqual(flipped.amplitude(-3), 2.0)
        rho = parity_reflect(core.density_from_pure(state))
        self.assertEqual(rho.window, (-3, -1))
        self.assertRaises(TypeError, parity_reflect, 3)

    def test_parity_is_involution(self):
        state = CylState.from_dict({-2: 0.3j, 1: 1.0, 3: 2.0 - 1j})
        twice = parity_reflect(parity_reflect(state))
        self.assertEqual(twice.window, state.window)
        self.assertAllClose(twice.amplitudes, state.amplitudes, 0.0)
        rho = core.density_from_pure(state)
        self.assertAllClose(parity_reflect(parity_reflect(rho)).matrix, rho.matrix, 0.0)

    def test_parity_of_coherent_state(self):
        for ell0, phi0 in ((2, 0.3), (-1, 1.2), (0, -2.5)):
            flipped = parity_reflect(coherent_state(ell0, phi0))
            self.assertAlmostEqual(core.fidelity(flipped, coherent_state(-ell0, -phi0)), 1.0, places=12)
