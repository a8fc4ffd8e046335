import shutil
import tempfile
from pathlib import Path
from unittest import TestCase

import numpy as np

from cylphase.core import AngleGrid, CylDensity, CylState, density_from_pure, random_pure_state
from cylphase.special import coherent_state


class TestHelper(TestCase):

    def setUp(self):
        self.rng = np.random.default_rng(1234)

    def temp_dir(self) -> Path:
        path = Path(tempfile.mkdtemp(prefix='cylphase-test-'))
        self.addCleanup(shutil.rmtree, path, ignore_errors=True)
        return path

    def grid(self, n_phi: int = 64) -> AngleGrid:
        return AngleGrid(n_phi)

    def random_state(self, window: tuple[int, int] = (-3, 3), support: int | None = None) -> CylState:
        return random_pure_state(self.rng, window, support)

    def random_density(self, window: tuple[int, int] = (-3, 3)) -> CylDensity:
        return density_from_pure(self.random_state(window))

    def random_mixed(self, window: tuple[int, int] = (-3, 3), n_states: int = 3) -> CylDensity:
        states = [self.random_state(window) for _ in range(n_states)]
        weights = self.rng.uniform(0.1, 1.0, size=n_states)
        matrix = sum(w * density_from_pure(s).matrix for w, s in zip(weights / weights.sum(), states))
        return CylDensity(window[0], matrix)

    def random_operator(self, n: int) -> np.ndarray:
        return self.rng.normal(size=(n, n)) + 1j * self.rng.normal(size=(n, n))

    def coherent(self, ell0: int = 0, phi0: float = 0.0, l_max: int = 8) -> CylState:
        return coherent_state(ell0, phi0, l_max=l_max)

    def assertAllClose(self, actual, expected, atol: float = 1e-12, msg: str | None = None):
        actual, expected = np.asarray(actual), np.asarray(expected)
        gap = float(np.max(np.abs(actual - expected), initial=0.0))
        self.assertLessEqual(gap, atol, msg or f"max deviation {gap:.3e} exceeds {atol:.1e}")
