"""Wigner functions on the discrete cylinder.

The quantizer used throughout is

    <m| w(l, phi) |n> = (2 pi)^-2 e^{-i (m - n) phi} K(2l - m - n),

with K(t) = int_{-pi}^{pi} e^{i t theta / 2} d theta: 2 pi at t = 0, zero
for every other even t and 4 (-1)^k / t for odd t = 2k + 1. Even t gives
the anti-diagonal part W+, odd t the slowly decaying part W-.
"""
from dataclasses import dataclass, field
from pathlib import Path
import json
import logging
import math

import numpy as np
from numpy.polynomial.legendre import leggauss

from cylphase.core import (
    TWO_PI, AngleGrid, CylDensity, CylState, DisplacementLabel, Window,
    angle_wavefunction, density_from_pure, displacement_matrix, trace_product,
    window_size,
)
from cylphase.errors import ConfigError, NumericalValidationError, ResolutionError
from cylphase.schemas import WignerGridFile
from cylphase.special import FIDUCIAL_NOME, theta3
from cylphase.star import CylSymbol, interp_kernel, operator_of, symbol_of
from cylphase.utils import fmt, parallel_map, read_csv, write_csv

logger = logging.getLogger(__name__)

IMAG_TOL = 1e-10
AGREEMENT_TOL = 1e-10
TRACIALITY_TOL = 1e-8
CLOSED_FORM_TOL = 1e-14
GRID_HEADER = ('ell', 'phi', 'w')


def angle_kernel(t) -> np.ndarray:
    """K(t) for integer t (twice the offset l - (m + n)/2)"""
    t = np.asarray(t, dtype=np.int64)
    out = np.zeros(t.shape, dtype=float)
    out[t == 0] = TWO_PI
    odd = (t % 2) != 0
    k = (t[odd] - 1) // 2
    out[odd] = np.where(k % 2 == 0, 4.0, -4.0) / t[odd]
    return out


@dataclass(frozen=True, eq=False)
class WignerGrid:
    """Samples W(l, phi_k) over an integer window and an AngleGrid.

    ``tail`` holds, per angle sample, the sum of W over every l outside the
    window. It is zero for the even part but not for W-, whose 1/l decay
    reaches past any finite window.
    """
    ell_window: Window
    angle_grid: AngleGrid
    values: np.ndarray = field(repr=False)
    tail: np.ndarray | None = field(default=None, repr=False)

    def __post_init__(self):
        v = np.array(self.values, dtype=float)
        shape = (window_size(self.ell_window), self.angle_grid.n_phi)
        if v.shape != shape:
            raise ConfigError(f"Wigner grid values need shape {shape}, got {v.shape}")
        v.setflags(write=False)
        object.__setattr__(self, 'ell_window', (int(self.ell_window[0]), int(self.ell_window[1])))
        object.__setattr__(self, 'values', v)
        if self.tail is not None:
            t = np.array(self.tail, dtype=float).reshape(-1)
            if t.size != shape[1]:
                raise ConfigError("Wigner grid tail needs one value per angle sample")
            t.setflags(write=False)
            object.__setattr__(self, 'tail', t)

    @property
    def ells(self) -> np.ndarray:
        return np.arange(self.ell_window[0], self.ell_window[1] + 1)

    @property
    def phis(self) -> np.ndarray:
        return self.angle_grid.points

    def normalization(self) -> float:
        total = self.values.sum()
        if self.tail is not None:
            total += self.tail.sum()
        return float(self.angle_grid.weight * total)

    def max_abs_diff(self, other: 'WignerGrid') -> float:
        if self.ell_window != other.ell_window or self.angle_grid != other.angle_grid:
            raise ConfigError("Wigner grids live on different windows or angle grids")
        return float(np.max(np.abs(self.values - other.values)))

    def to_csv(self, path: str | Path) -> Path:
        phis = self.phis
        rows = (
            (int(ell), phis[k], self.values[i, k])
            for i, ell in enumerate(self.ells)
            for k in range(len(phis))
        )
        return write_csv(path, GRID_HEADER, rows)

    def to_json(self, path: str | Path) -> Path:
        doc = WignerGridFile(
            ell_window=self.ell_window,
            phi_samples=[float(fmt(p)) for p in self.phis],
            values=[[float(fmt(x)) for x in row] for row in self.values],
            tail=None if self.tail is None else [float(fmt(x)) for x in self.tail],
        )
        path = Path(path)
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text(doc.model_dump_json(exclude_none=True) + "\n")
        return path

    @classmethod
    def from_csv(cls, path: str | Path) -> 'WignerGrid':
        rows = np.array(read_csv(path, GRID_HEADER), dtype=float)
        if rows.size == 0:
            raise ConfigError(f"{path}: empty Wigner grid")
        ells = rows[:, 0].astype(int)
        lo, hi = int(ells.min()), int(ells.max())
        n_phi = int(np.sum(ells == lo))
        if rows.shape[0] != n_phi * (hi - lo + 1):
            raise ConfigError(f"{path}: rows do not form a full l x phi grid")
        return cls((lo, hi), AngleGrid(n_phi), rows[:, 2].reshape(hi - lo + 1, n_phi))

    @classmethod
    def from_json(cls, path: str | Path) -> 'WignerGrid':
        try:
            doc = WignerGridFile.model_validate(json.loads(Path(path).read_text()))
        except (ValueError, OSError) as exc:
            raise ConfigError(f"{path}: not a Wigner grid file ({exc})")
        return cls(tuple(doc.ell_window), AngleGrid(len(doc.phi_samples)), doc.values, doc.tail)


@dataclass(frozen=True, eq=False)
class QuantizerKernel:
    label: DisplacementLabel
    window: Window
    matrix: np.ndarray = field(repr=False)

    def trace(self) -> complex:
        return complex(np.trace(self.matrix))

    def is_hermitian(self, tol: float = AGREEMENT_TOL) -> bool:
        return bool(np.max(np.abs(self.matrix - self.matrix.conj().T)) <= tol)


def _kernel_direct(label: DisplacementLabel, window: Window) -> np.ndarray:
    ells = np.arange(window[0], window[1] + 1)
    m, n = np.meshgrid(ells, ells, indexing='ij')
    phase = np.exp(-1j * (m - n) * label.phi)
    return phase * angle_kernel(2 * label.ell - m - n) / TWO_PI ** 2


def _kernel_covariant(label: DisplacementLabel, window: Window) -> np.ndarray:
    # w(l, phi) = D w(0, 0) D^dagger; rows of ``window`` are images of the
    # source window shifted back by l, which the padded matrix holds whole
    source = (window[0] - label.ell, window[1] - label.ell)
    d, wide = displacement_matrix(label, source, auto_pad=True)
    w00 = _kernel_direct(DisplacementLabel(0, 0.0), wide)
    full = d @ w00 @ d.conj().T
    start, n = window[0] - wide[0], window_size(window)
    return full[start:start + n, start:start + n]


def quantizer_matrix(
    label: DisplacementLabel,
    window: Window,
    method: str = 'direct',
    check: bool = True
) -> QuantizerKernel:
    """Matrix of w(l, phi) over ``window``.

    With ``check`` both the direct double sum and the covariant conjugation
    of w(0, 0) are built, and they must agree to 1e-10.
    """
    if method not in ('direct', 'covariant'):
        raise ConfigError(f"Unknown quantizer method {method!r}")
    direct = _kernel_direct(label, window) if method == 'direct' or check else None
    covariant = _kernel_covariant(label, window) if method == 'covariant' or check else None
    if check:
        gap = float(np.max(np.abs(direct - covariant)))
        if gap > AGREEMENT_TOL:
            raise NumericalValidationError(
                f"Quantizer constructions disagree by {gap:.3e} at {label}")
    matrix = direct if method == 'direct' else covariant
    return QuantizerKernel(label, (int(window[0]), int(window[1])), matrix)


def _check_imag(values: np.ndarray, where: str) -> np.ndarray:
    residue = float(np.max(np.abs(np.imag(values)), initial=0.0))
    if residue > IMAG_TOL:
        raise NumericalValidationError(
            f"Imaginary residue {residue:.3e} in {where} exceeds {IMAG_TOL}")
    return np.real(values)


def wigner_parts(rho: CylDensity, ell: int, phi) -> tuple[np.ndarray, np.ndarray]:
    """(W+, W-) at integer ``ell``, vectorized over ``phi``, still complex"""
    phi = np.atleast_1d(np.asarray(phi, dtype=float))
    lo, hi = rho.window
    r = rho.matrix

    # W+ = (1/2pi) sum_l' e^{-2i l' phi} <l - l'| rho |l + l'>
    reach = min(ell - lo, hi - ell)
    plus = np.zeros(phi.shape, dtype=complex)
    if reach >= 0:
        lp = np.arange(-reach, reach + 1)
        elems = r[ell - lp - lo, ell + lp - lo]
        plus = np.exp(-2j * np.multiply.outer(phi, lp)) @ elems / TWO_PI

    # W-: every pair with odd t = 2l - m - n, weighted by K(t) / (2pi)^2
    ells = np.arange(lo, hi + 1)
    m, n = np.meshgrid(ells, ells, indexing='ij')
    t = 2 * ell - m - n
    odd = (t % 2) != 0
    minus = np.zeros(phi.shape, dtype=complex)
    if np.any(odd):
        weights = angle_kernel(t[odd]) / TWO_PI ** 2 * r[n[odd] - lo, m[odd] - lo]
        diffs = (m - n)[odd]
        minus = np.exp(-1j * np.multiply.outer(phi, diffs)) @ weights
    return plus, minus


def _wigner_row(rho: CylDensity, ell: int, phi: np.ndarray) -> np.ndarray:
    plus, minus = wigner_parts(rho, ell, phi)
    return plus + minus


def wigner_point(rho: CylDensity, ell: int, phi: float) -> float:
    """W(l, phi) = Tr[rho w(l, phi)] as the finite even/odd sums"""
    value = _wigner_row(rho, int(ell), np.array([float(phi)]))
    return float(_check_imag(value, f"W({ell}, {phi})")[0])


def _gauss_nodes(n: int) -> tuple[np.ndarray, np.ndarray]:
    x, w = leggauss(n)
    return math.pi * x, math.pi * w


def wigner_point_angle_rep(psi: CylState, ell: int, phi: float, nodes: int | None = None) -> float:
    """(1/2pi) int e^{i l phi'} Psi(phi - phi'/2) Psi*(phi + phi'/2) dphi'.

    The integrand carries half-integer frequencies, so it is not periodic
    in phi' and is integrated by Gauss-Legendre on [-pi, pi].
    """
    width = psi.ell_max - psi.ell_min
    reach = abs(ell) + max(abs(psi.ell_min), abs(psi.ell_max)) + width
    n = nodes or max(64, 4 * reach + 32)
    x, w = _gauss_nodes(n)
    left = angle_wavefunction(psi, phi - x / 2)
    right = np.conj(angle_wavefunction(psi, phi + x / 2))
    value = np.sum(w * np.exp(1j * ell * x) * left * right) / TWO_PI
    return float(_check_imag(np.array([value]), f"angle representation at ({ell}, {phi})")[0])


def _rho_of(source: CylDensity | CylState) -> CylDensity:
    return density_from_pure(source) if isinstance(source, CylState) else source


def wigner_symbol(rho: CylDensity | CylState) -> CylSymbol:
    rho = _rho_of(rho)
    return symbol_of(rho.matrix, rho.window)


def wigner_grid(
    rho: CylDensity | CylState,
    ell_window: Window | None = None,
    angle_grid: AngleGrid | None = None,
    threads: int | None = None
) -> WignerGrid:
    """Evaluate W row by row on a grid, plus the out-of-window tail"""
    rho = _rho_of(rho)
    ell_window = rho.window if ell_window is None else (int(ell_window[0]), int(ell_window[1]))
    angle_grid = angle_grid or AngleGrid(256)
    phis = angle_grid.points
    ells = list(range(ell_window[0], ell_window[1] + 1))
    rows = parallel_map(lambda ell: _wigner_row(rho, ell, phis), ells, threads)
    values = _check_imag(np.array(rows), "Wigner grid")

    everywhere = wigner_symbol(rho).ell_sum(phis)
    tail = _check_imag(everywhere, "Wigner tail") - values.sum(axis=0)
    logger.debug("wigner_grid: %d x %d on %s", len(ells), angle_grid.n_phi, ell_window)
    return WignerGrid(ell_window, angle_grid, values, tail)


def marginal_angle(source: WignerGrid | CylDensity | CylState, phi=None) -> np.ndarray:
    """sum_l W(l, phi): the angle distribution <phi|rho|phi>"""
    if isinstance(source, WignerGrid):
        tail = source.tail if source.tail is not None else 0.0
        return source.values.sum(axis=0) + tail
    if phi is None:
        raise ConfigError("marginal_angle of a density needs angle samples")
    values = wigner_symbol(source).ell_sum(np.asarray(phi, dtype=float))
    return _check_imag(values, "angle marginal")


def marginal_momentum(source: WignerGrid | CylDensity | CylState) -> np.ndarray:
    """int W dphi: the angular-momentum distribution over the source window"""
    if isinstance(source, WignerGrid):
        return source.angle_grid.weight * source.values.sum(axis=1)
    symbol = wigner_symbol(source)
    return _check_imag(TWO_PI * symbol.mode(0), "momentum marginal")


def symbol_from_grid(grid: WignerGrid) -> CylSymbol:
    """Recover the half-lattice symbol from grid samples.

    Angular modes come from a DFT over the grid; the odd-mode values sit
    between integers and are solved for by least squares against the
    interpolation kernel. The source density must live inside the grid
    window, and n_phi >= 2 * (window width) + 1 keeps modes from aliasing.
    """
    lo, hi = grid.ell_window
    n = window_size(grid.ell_window)
    band = n - 1
    n_phi = grid.angle_grid.n_phi
    if n_phi < 2 * band + 1:
        raise ResolutionError(
            f"n_phi = {n_phi} is below 2 * {band} + 1 for window {grid.ell_window}",
            [{'loc': ['grid', 'n_phi'], 'msg': f'need at least {2 * band + 1}'}])
    modes = np.arange(-band, band + 1)
    phis = grid.phis
    c = grid.values @ np.exp(-1j * np.multiply.outer(phis, modes)) / n_phi

    ells = np.arange(lo, hi + 1)
    coeffs = np.zeros((2 * band + 1, n), dtype=complex)
    for row, m in enumerate(modes):
        s = m % 2
        half = abs(m) / 2
        x = ells + s / 2
        keep = (x >= lo + half) & (x <= hi - half)
        if not np.any(keep):
            continue
        kernel = interp_kernel(ells[:, None] - x[keep][None, :])
        solution, *_ = np.linalg.lstsq(kernel, c[:, row], rcond=None)
        coeffs[row, np.flatnonzero(keep)] = solution
    return CylSymbol(lo, coeffs)


def density_from_wigner(grid: WignerGrid) -> CylDensity:
    """rho = 2 pi sum_l int w(l, phi) W(l, phi) dphi"""
    op, window = operator_of(symbol_from_grid(grid))
    return CylDensity(window[0], op)


def closed_form_superposition_wigner(ell1: int, ell2: int, phi0: float, ell, phi):
    """W of (|l1> + e^{i phi0}|l2>)/sqrt2 from its printed closed form.

    Two rings of height 1/(4 pi) at l1 and l2; an interference row
    (1/2pi) cos(phi0 + (l2 - l1) phi) at the midpoint when l1 + l2 is even;
    otherwise a term (1/pi^2) cos(...) (-1)^k / t at every l, t = 2l - l1 - l2.
    """
    if ell1 == ell2:
        raise ConfigError(f"Degenerate superposition: ell1 == ell2 == {ell1}")
    ell_arr, phi_arr = np.broadcast_arrays(np.asarray(ell, dtype=np.int64), np.asarray(phi, dtype=float))
    rings = ((ell_arr == ell1) | (ell_arr == ell2)) / (4 * math.pi)
    fringe = np.cos(phi0 + (ell2 - ell1) * phi_arr)
    t = 2 * ell_arr - ell1 - ell2
    if (ell1 + ell2) % 2 == 0:
        cross = np.where(t == 0, fringe / TWO_PI, 0.0)
    else:
        k = (t - 1) // 2
        cross = fringe * np.where(k % 2 == 0, 1.0, -1.0) / (math.pi ** 2 * t)
    out = rings + cross
    return float(out) if out.ndim == 0 else out


def _odd_series_ell(x) -> np.ndarray:
    """sum over odd t of (-1)^{(t-1)/2} e^{-(2x - t)^2/4} / t"""
    x = np.asarray(x, dtype=float)
    reach = 2 * math.ceil(math.sqrt(-4 * math.log(CLOSED_FORM_TOL))) + 1
    centre = np.rint(2 * x).astype(np.int64)
    total = np.zeros(x.shape, dtype=float)
    for offset in range(-reach, reach + 1):
        t = centre + offset
        t = np.where(t % 2 == 0, 0, t)
        sign = np.where(((t - 1) // 2) % 2 == 0, 1.0, -1.0)
        safe = np.where(t == 0, 1, t)
        term = np.where(t == 0, 0.0, sign * np.exp(-(2 * x - t) ** 2 / 4) / safe)
        total += term
    return total


def _odd_series_phi(phi) -> np.ndarray:
    """2 sum_{d odd > 0} e^{-d^2/4} cos(d phi)"""
    phi = np.asarray(phi, dtype=float)
    total = np.zeros(phi.shape, dtype=float)
    d = 1
    while math.exp(-d * d / 4) >= CLOSED_FORM_TOL:
        total += 2 * math.exp(-d * d / 4) * np.cos(d * phi)
        d += 2
    return total


def closed_form_coherent_wigner(ell0: int, phi0: float, ell, phi, parts: bool = False):
    """W of the coherent state |l0, phi0> from its theta-function closed form.

    W+ = e^{-(l - l0)^2} theta3(phi - phi0 | 1/e) / (2 pi theta3(0 | 1/e)) and
    W- separates into an l-series times an angle series; both are summed
    until terms fall below 1e-14.
    """
    ell_arr, phi_arr = np.broadcast_arrays(np.asarray(ell, dtype=float), np.asarray(phi, dtype=float))
    norm = theta3(0, FIDUCIAL_NOME).real
    shifted = ell_arr - ell0
    plus = np.exp(-shifted ** 2) * np.real(theta3(phi_arr - phi0, FIDUCIAL_NOME)) / (TWO_PI * norm)
    minus = _odd_series_ell(shifted) * _odd_series_phi(phi_arr - phi0) / (math.pi ** 2 * norm)
    if parts:
        return plus, minus
    out = plus + minus
    return float(out) if out.ndim == 0 else out


def closed_form_angle_wigner(phi0: float, ell, phi, width: int):
    """Regularised W of the angle state |phi0>: (1/2pi) times the Dirichlet
    kernel of half-width ``width`` in place of the 2pi-periodic delta"""
    _, phi_arr = np.broadcast_arrays(np.asarray(ell, dtype=float), np.asarray(phi, dtype=float))
    d = np.arange(-width, width + 1)
    comb = np.real(np.exp(1j * np.multiply.outer(phi_arr - phi0, d)).sum(axis=-1)) / TWO_PI
    out = comb / TWO_PI
    return float(out) if out.ndim == 0 else out


def traciality(rho_a: CylDensity | CylState, rho_b: CylDensity | CylState, check: bool = True) -> float:
    """2 pi sum_l int W_a W_b dphi, which must equal Tr(rho_a rho_b)"""
    rho_a, rho_b = _rho_of(rho_a), _rho_of(rho_b)
    overlap = TWO_PI * wigner_symbol(rho_a).phase_space_inner(wigner_symbol(rho_b))
    value = float(_check_imag(np.array([overlap]), "traciality")[0])
    if check:
        expected = trace_product(rho_a, rho_b).real
        if abs(value - expected) > TRACIALITY_TOL:
            raise NumericalValidationError(
                f"Traciality mismatch: phase space {value!r} vs trace {expected!r}")
    return value


@dataclass(frozen=True)
class NegativityReport:
    minimum: float
    maximum: float
    negative_volume: float
    negative_cells: list[tuple[int, float]]


def negativity_report(grid: WignerGrid, tol: float = 1e-12) -> NegativityReport:
    """Minimum, maximum, the volume int (|W| - W)/2 and the cells below -tol"""
    v = grid.values
    volume = grid.angle_grid.weight * float(np.sum(np.abs(v) - v)) / 2
    rows, cols = np.nonzero(v < -tol)
    phis = grid.phis
    cells = [(int(grid.ell_window[0] + i), float(phis[k])) for i, k in zip(rows, cols)]
    return NegativityReport(float(v.min()), float(v.max()), volume, cells)
