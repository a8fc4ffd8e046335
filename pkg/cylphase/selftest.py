"""In-process invariant suite behind ``cylphase selftest``"""
from typing import Callable
import logging
import math
import time

import numpy as np

from cylphase.core import (
    AngleGrid, DisplacementLabel, angle_distribution, density_from_pure,
    momentum_eigenstate, random_pure_state, superposition, trace_product,
)
from cylphase.dynamics import PendulumConfig, evolve_schrodinger, evolve_wigner_transport
from cylphase.errors import CylPhaseError
from cylphase.special import FIDUCIAL_NOME, coherent_state, theta3
from cylphase.star import star_product, symbol_of
from cylphase.tomography import density_from_char, reconstruct_char, required_zetas, simulate_tomograms
from cylphase.wigner import (
    closed_form_superposition_wigner, density_from_wigner, marginal_angle, marginal_momentum,
    quantizer_matrix, traciality, wigner_grid,
)

logger = logging.getLogger(__name__)

Check = Callable[[np.random.Generator], float]


def _eigenstates(rng) -> float:
    grid = AngleGrid(256)
    worst = 0.0
    for ell0 in (-3, 0, 4):
        w = wigner_grid(momentum_eigenstate(ell0), (ell0 - 16, ell0 + 16), grid)
        expected = np.where(w.ells[:, None] == ell0, 1 / (2 * math.pi), 0.0)
        worst = max(worst, float(np.max(np.abs(w.values - expected))))
    return worst


def _superpositions(rng) -> float:
    grid = AngleGrid(64)
    worst = 0.0
    for ell1, ell2 in ((3, -3), (4, -3), (0, 1)):
        w = wigner_grid(superposition(ell1, ell2), (-8, 8), grid)
        ell, phi = np.meshgrid(w.ells, w.phis, indexing='ij')
        closed = closed_form_superposition_wigner(ell1, ell2, 0.0, ell, phi)
        worst = max(worst, float(np.max(np.abs(w.values - closed))))
    return worst


def _coherent_marginal(rng) -> float:
    w = wigner_grid(coherent_state(0, 0.0, l_max=10), (-10, 10), AngleGrid(64))
    return abs(marginal_momentum(w)[10] - 1 / theta3(0, FIDUCIAL_NOME).real)


def _marginals(rng) -> float:
    worst = 0.0
    grid = AngleGrid(32)
    for _ in range(10):
        rho = density_from_pure(random_pure_state(rng, (-4, 4)))
        w = wigner_grid(rho, rho.window, grid)
        worst = max(worst,
                    abs(w.normalization() - 1),
                    float(np.max(np.abs(marginal_angle(w) - angle_distribution(rho, w.phis)))),
                    float(np.max(np.abs(marginal_momentum(w) - np.diag(rho.matrix).real))))
    return worst


def _traciality(rng) -> float:
    worst = 0.0
    for _ in range(10):
        a = density_from_pure(random_pure_state(rng, (-3, 3)))
        b = density_from_pure(random_pure_state(rng, (-2, 4)))
        worst = max(worst, abs(traciality(a, b, check=False) - trace_product(a, b).real))
    return worst


def _round_trip(rng) -> float:
    worst = 0.0
    for _ in range(5):
        rho = density_from_pure(random_pure_state(rng, (-3, 3)))
        back = density_from_wigner(wigner_grid(rho, rho.window, AngleGrid(16)))
        worst = max(worst, float(np.max(np.abs(back.matrix - rho.matrix))))
    return worst


def _quantizer(rng) -> float:
    label = DisplacementLabel(2, 0.7)
    kernel = quantizer_matrix(label, (-5, 5))
    return abs(kernel.trace() - 1 / (2 * math.pi))


def _star(rng) -> float:
    window = (0, 4)
    a = rng.normal(size=(5, 5)) + 1j * rng.normal(size=(5, 5))
    b = rng.normal(size=(5, 5)) + 1j * rng.normal(size=(5, 5))
    product = star_product(symbol_of(a, window), symbol_of(b, window))
    return product.max_abs_diff(symbol_of(a @ b, window))


def _star_differential(rng) -> float:
    window = (0, 2)
    a = symbol_of(rng.normal(size=(3, 3)) + 1j * rng.normal(size=(3, 3)), window)
    b = symbol_of(rng.normal(size=(3, 3)) + 1j * rng.normal(size=(3, 3)), window)
    return star_product(a, b, 'differential', order=40).max_abs_diff(star_product(a, b))


def _transport(rng) -> float:
    state = coherent_state(0, 0.0, l_max=5)
    config = PendulumConfig(lam=0.5, window=(-9, 9), dt=1e-3, t_final=0.1)
    grid = wigner_grid(state, config.window, AngleGrid(40))
    moved = evolve_wigner_transport(grid, config)
    exact = wigner_grid(evolve_schrodinger(state, config), config.window, AngleGrid(40))
    return moved.max_abs_diff(exact)


def _tomography(rng) -> float:
    rho = density_from_pure(superposition(0, 1, math.pi / 3))
    grid = AngleGrid(8)
    tomograms = simulate_tomograms(rho, required_zetas((-1, 1), grid), grid)
    back = density_from_char(reconstruct_char(tomograms, (-1, 1)))
    return float(np.max(np.abs(back.matrix - rho.matrix)))


CHECKS: list[tuple[str, Check, float]] = [
    ('eigenstate_wigner', _eigenstates, 1e-12),
    ('superposition_closed_form', _superpositions, 1e-10),
    ('coherent_momentum_marginal', _coherent_marginal, 1e-9),
    ('normalization_and_marginals', _marginals, 1e-8),
    ('traciality', _traciality, 1e-8),
    ('density_wigner_round_trip', _round_trip, 1e-8),
    ('quantizer_trace', _quantizer, 1e-10),
    ('star_operator_product', _star, 1e-8),
    ('star_differential_series', _star_differential, 1e-8),
    ('wigner_transport', _transport, 1e-4),
    ('tomography_round_trip', _tomography, 1e-8),
]


def run_selftest(seed: int = 0, checks: list[tuple[str, Check, float]] | None = None) -> dict:
    results = []
    for name, check, tol in checks or CHECKS:
        rng = np.random.default_rng(seed)
        started = time.perf_counter()
        try:
            value = float(check(rng))
            error = None
        except CylPhaseError as exc:
            value, error = math.inf, exc.msg
        passed = value <= tol
        entry = {
            'name': name,
            'passed': passed,
            'value': value if math.isfinite(value) else None,
            'tolerance': tol,
            'seconds': round(time.perf_counter() - started, 3),
        }
        if error:
            entry['error'] = error
        if not passed:
            logger.warning("selftest %s failed: %s > %s", name, value, tol)
        results.append(entry)
    return {'passed': all(r['passed'] for r in results), 'checks': results}
