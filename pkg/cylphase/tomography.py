"""Free-rotor tomography: L^2 rotations followed by angle projections.

A tomogram is p(phi, zeta) = <phi| U rho U^dagger |phi> with
U = exp(i zeta L^2 / 2). Its Fourier coefficient of order l taken at
zeta = phi/l gives the characteristic coefficient

    rho(l, phi) = Tr[rho D^dagger(l, phi)] / 2pi
                = (1/2pi) sum_q <q + l| rho |q> e^{i (q + l/2) phi},

exactly, for every l != 0. The l = 0 row is the Fourier transform of the
angular-momentum spectrum, which travels with the tomograms.
"""
from dataclasses import dataclass, field
from pathlib import Path
import logging

import numpy as np

from cylphase.core import (
    TWO_PI, AngleGrid, CylDensity, CylState, Window, angle_distribution,
    density_from_pure, window_size,
)
from cylphase.errors import ConfigError, CoverageError, NumericalValidationError, ResolutionError
from cylphase.utils import parallel_map, read_csv, write_csv
from cylphase.wigner import WignerGrid, wigner_grid

logger = logging.getLogger(__name__)

ZETA_TOL = 1e-12
# zeta read back from a 12-digit file must still find its slice
MATCH_TOL = 1e-11
SLICE_TOL = 1e-8
NEGATIVE_TOL = 1e-12
HERMITIAN_TOL = 1e-10
TOMOGRAM_HEADER = ('zeta', 'phi', 'p')
SPECTRUM_HEADER = ('ell', 'p')
CHAR_HEADER = ('ell', 'phi', 're', 'im')


@dataclass(frozen=True, eq=False)
class TomogramSet:
    zeta_values: np.ndarray = field(repr=False)
    phi_grid: AngleGrid
    probabilities: np.ndarray = field(repr=False)
    window: Window | None = None
    spectrum: np.ndarray | None = field(default=None, repr=False)

    def __post_init__(self):
        zetas = np.asarray(self.zeta_values, dtype=float).reshape(-1)
        p = np.asarray(self.probabilities, dtype=float)
        if p.shape != (zetas.size, self.phi_grid.n_phi):
            raise ConfigError(
                f"Tomograms need shape {(zetas.size, self.phi_grid.n_phi)}, got {p.shape}")
        if self.spectrum is not None:
            if self.window is None or len(self.spectrum) != window_size(self.window):
                raise ConfigError("A spectrum needs a window of matching size")
            object.__setattr__(self, 'spectrum', np.asarray(self.spectrum, dtype=float))
        object.__setattr__(self, 'zeta_values', zetas)
        object.__setattr__(self, 'probabilities', p)

    def validate(self) -> 'TomogramSet':
        lowest = float(self.probabilities.min(initial=0.0))
        if lowest < -NEGATIVE_TOL:
            raise NumericalValidationError(f"Tomogram entry {lowest:.3e} is negative")
        sums = self.phi_grid.weight * self.probabilities.sum(axis=1)
        worst = float(np.max(np.abs(sums - 1.0), initial=0.0))
        if worst > SLICE_TOL:
            raise NumericalValidationError(f"Tomogram slice integrates to 1 +- {worst:.3e}")
        return self

    def slice_index(self, zeta: float) -> int | None:
        hits = np.flatnonzero(np.abs(self.zeta_values - zeta) <= MATCH_TOL * max(1.0, abs(zeta)))
        return int(hits[0]) if hits.size else None

    def to_csv(self, path: str | Path) -> Path:
        phis = self.phi_grid.points
        rows = (
            (z, phis[k], self.probabilities[i, k])
            for i, z in enumerate(self.zeta_values)
            for k in range(len(phis))
        )
        return write_csv(path, TOMOGRAM_HEADER, rows)

    def spectrum_to_csv(self, path: str | Path) -> Path:
        if self.spectrum is None:
            raise ConfigError("Tomogram set carries no angular-momentum spectrum")
        ells = range(self.window[0], self.window[1] + 1)
        return write_csv(path, SPECTRUM_HEADER, zip(ells, self.spectrum))

    @classmethod
    def from_csv(cls, path: str | Path, spectrum_path: str | Path | None = None) -> 'TomogramSet':
        rows = np.array(read_csv(path, TOMOGRAM_HEADER), dtype=float)
        if rows.size == 0:
            raise ConfigError(f"{path}: empty tomogram file")
        _, first = np.unique(rows[:, 0], return_index=True)
        zetas = rows[np.sort(first), 0]
        n_phi = rows.shape[0] // zetas.size
        if rows.shape[0] != n_phi * zetas.size:
            raise ConfigError(f"{path}: slices do not share one angle grid")
        window, spectrum = None, None
        if spectrum_path is not None:
            spec_rows = np.array(read_csv(spectrum_path, SPECTRUM_HEADER), dtype=float)
            ells = spec_rows[:, 0].astype(int)
            window = (int(ells.min()), int(ells.max()))
            spectrum = np.zeros(window_size(window))
            spectrum[ells - window[0]] = spec_rows[:, 1]
        return cls(zetas, AngleGrid(n_phi), rows[:, 2].reshape(zetas.size, n_phi), window, spectrum)


@dataclass(frozen=True, eq=False)
class CharCoeffs:
    """rho(l, phi_k) over an l window and an angle grid; ``support`` is the
    window of the density the coefficients came from"""
    ell_window: Window
    angle_grid: AngleGrid
    values: np.ndarray = field(repr=False)
    support: Window | None = None

    @property
    def ells(self) -> np.ndarray:
        return np.arange(self.ell_window[0], self.ell_window[1] + 1)

    def row(self, ell: int) -> np.ndarray:
        if not self.ell_window[0] <= ell <= self.ell_window[1]:
            return np.zeros(self.angle_grid.n_phi, dtype=complex)
        return self.values[ell - self.ell_window[0]]

    def hermiticity_residue(self) -> float:
        """max |rho(-l, -phi) - conj rho(l, phi)| over rows present with their mirror"""
        worst = 0.0
        for ell in self.ells:
            if self.ell_window[0] <= -ell <= self.ell_window[1]:
                gap = self.row(-ell)[::-1] - np.conj(self.row(ell))
                worst = max(worst, float(np.max(np.abs(gap))))
        return worst

    def to_csv(self, path: str | Path) -> Path:
        phis = self.angle_grid.points
        rows = (
            (int(ell), phis[k], self.values[i, k].real, self.values[i, k].imag)
            for i, ell in enumerate(self.ells)
            for k in range(len(phis))
        )
        return write_csv(path, CHAR_HEADER, rows)


def _rho_of(source: CylDensity | CylState) -> CylDensity:
    return density_from_pure(source) if isinstance(source, CylState) else source


def required_zetas(ell_window: Window, angle_grid: AngleGrid) -> np.ndarray:
    """Sorted rotation parameters zeta = phi_k / l for every l != 0, plus zeta = 0"""
    ells = np.array([e for e in range(ell_window[0], ell_window[1] + 1) if e != 0], dtype=float)
    zetas = np.concatenate([[0.0], np.divide.outer(angle_grid.points, ells).ravel()])
    zetas.sort()
    keep = np.concatenate([[True], np.diff(zetas) > ZETA_TOL])
    return zetas[keep]


def _slice(rho: CylDensity, zeta: float, phis: np.ndarray) -> np.ndarray:
    ells = rho.ells.astype(float)
    phase = np.exp(0.5j * zeta * ells ** 2)
    rotated = CylDensity(rho.ell_min, phase[:, None] * rho.matrix * phase.conj()[None, :])
    return angle_distribution(rotated, phis)


def simulate_tomograms(
    rho: CylDensity | CylState,
    zeta_values,
    phi_grid: AngleGrid,
    counts: int | None = None,
    rng: np.random.Generator | None = None,
    threads: int | None = None
) -> TomogramSet:
    """Tomograms for each zeta; with ``counts`` every slice (and the
    spectrum) is replaced by a multinomial histogram of that many shots"""
    rho = _rho_of(rho)
    zetas = np.asarray(zeta_values, dtype=float).reshape(-1)
    phis = phi_grid.points
    slices = parallel_map(lambda z: _slice(rho, z, phis), list(zetas), threads)
    probabilities = np.array(slices).reshape(zetas.size, phi_grid.n_phi)
    spectrum = np.diag(rho.matrix).real.copy()

    if counts is not None:
        if counts <= 0:
            raise ConfigError(f"counts must be positive, got {counts}")
        rng = rng or np.random.default_rng()
        # drawn in slice order so a fixed seed gives fixed data
        weights = np.clip(probabilities * phi_grid.weight, 0, None)
        weights /= weights.sum(axis=1, keepdims=True)
        hist = np.array([rng.multinomial(counts, w) for w in weights])
        probabilities = hist / (counts * phi_grid.weight)
        clipped = np.clip(spectrum, 0, None)
        spectrum = rng.multinomial(counts, clipped / clipped.sum()) / counts
        logger.debug("simulated %d noisy slices with %d counts", zetas.size, counts)
    return TomogramSet(zetas, phi_grid, probabilities, rho.window, spectrum)


def char_coeff_zero(source: CylDensity | CylState | TomogramSet, phi) -> np.ndarray:
    """rho(0, phi) = (1/2pi) sum_l e^{i l phi} <l|rho|l>"""
    phi = np.asarray(phi, dtype=float)
    if isinstance(source, TomogramSet):
        if source.spectrum is None:
            raise ConfigError("The l = 0 row needs the angular-momentum spectrum")
        ells, weights = np.arange(source.window[0], source.window[1] + 1), source.spectrum
    else:
        rho = _rho_of(source)
        ells, weights = rho.ells, np.diag(rho.matrix).real
    return np.exp(1j * np.multiply.outer(phi, ells)) @ weights / TWO_PI


def char_coeffs_direct(
    rho: CylDensity | CylState,
    ell_window: Window,
    angle_grid: AngleGrid
) -> CharCoeffs:
    """Tr[rho D^dagger(l, phi)] / 2pi straight from the matrix"""
    rho = _rho_of(rho)
    phis = angle_grid.points
    n = window_size(rho.window)
    values = np.zeros((window_size(ell_window), phis.size), dtype=complex)
    for i, ell in enumerate(range(ell_window[0], ell_window[1] + 1)):
        if abs(ell) >= n:
            continue
        q = np.arange(max(0, -ell), min(n, n - ell))
        elems = rho.matrix[q + ell, q]
        absolute = rho.ell_min + q
        values[i] = np.exp(1j * np.multiply.outer(phis, absolute + ell / 2)) @ elems / TWO_PI
    return CharCoeffs(ell_window, angle_grid, values, rho.window)


def missing_pairs(tomograms: TomogramSet, ell_window: Window) -> list[tuple[int, float]]:
    phis = tomograms.phi_grid.points
    missing = []
    for ell in range(ell_window[0], ell_window[1] + 1):
        if ell == 0:
            continue
        for phi in phis:
            if tomograms.slice_index(phi / ell) is None:
                missing.append((ell, float(phi)))
    return missing


def reconstruct_char(tomograms: TomogramSet, ell_window: Window | None = None) -> CharCoeffs:
    """rho(l, phi_k) = (1/2pi) int e^{-i l phi'} p(phi', phi_k / l) dphi' on the grid"""
    grid = tomograms.phi_grid
    if ell_window is None:
        if tomograms.window is None:
            raise ConfigError("reconstruct_char needs an l window")
        width = window_size(tomograms.window) - 1
        ell_window = (-width, width)
    missing = missing_pairs(tomograms, ell_window)
    if missing:
        raise CoverageError(
            f"{len(missing)} (l, phi) pairs have no tomogram at zeta = phi/l", missing)
    if tomograms.window is not None:
        width = window_size(tomograms.window) - 1
        reach = max(abs(ell_window[0]), abs(ell_window[1]))
        if grid.n_phi <= width + reach:
            raise ResolutionError(
                f"n_phi = {grid.n_phi} aliases: need more than {width + reach} angle samples")

    phis = grid.points
    values = np.zeros((window_size(ell_window), phis.size), dtype=complex)
    for i, ell in enumerate(range(ell_window[0], ell_window[1] + 1)):
        if ell == 0:
            values[i] = char_coeff_zero(tomograms, phis)
            continue
        rows = [tomograms.slice_index(phi / ell) for phi in phis]
        p = tomograms.probabilities[rows]
        values[i] = grid.weight * (p @ np.exp(-1j * ell * phis)) / TWO_PI
    logger.debug("reconstructed %d char rows from %d slices", len(values), tomograms.zeta_values.size)
    return CharCoeffs(ell_window, grid, values, tomograms.window)


def density_from_char(coeffs: CharCoeffs, window: Window | None = None) -> CylDensity:
    """rho_{q+l, q} by a DFT of 2pi e^{-i l phi/2} rho(l, phi) over the grid.

    Noisy coefficients give a matrix that is only Hermitian on average; it
    is replaced by its Hermitian part.
    """
    window = window or coeffs.support
    if window is None:
        raise ConfigError("density_from_char needs the support window")
    n = window_size(window)
    grid = coeffs.angle_grid
    if grid.n_phi < n:
        raise ResolutionError(
            f"n_phi = {grid.n_phi} cannot resolve a window of {n} modes")
    phis = grid.points
    q_abs = np.arange(window[0], window[1] + 1)
    matrix = np.zeros((n, n), dtype=complex)
    for ell in range(-(n - 1), n):
        g = TWO_PI * np.exp(-0.5j * ell * phis) * coeffs.row(ell)
        q = np.arange(max(0, -ell), min(n, n - ell))
        matrix[q + ell, q] = np.exp(-1j * np.multiply.outer(q_abs[q], phis)) @ g / grid.n_phi
    residue = float(np.max(np.abs(matrix - matrix.conj().T)))
    if residue > HERMITIAN_TOL:
        logger.debug("density_from_char: Hermitian residue %.3e projected away", residue)
    return CylDensity(window[0], 0.5 * (matrix + matrix.conj().T))


def wigner_from_char(
    coeffs: CharCoeffs,
    ell_window: Window | None = None,
    angle_grid: AngleGrid | None = None
) -> WignerGrid:
    """W(l, phi) = (1/2pi) sum_l' int e^{i(l' phi - l phi')} rho(l', phi') dphi'.

    The phi' integral carries half-integer frequencies, so it is carried out
    exactly through the density the coefficients determine.
    """
    rho = density_from_char(coeffs)
    return wigner_grid(rho, ell_window or rho.window, angle_grid or coeffs.angle_grid)
