"""Phase-space symbols, the star product and the Moyal bracket on the cylinder.

A symbol a(l, phi) = Tr[A w(l, phi)] is stored by angular Fourier mode m,
a(l, phi) = sum_m c_m(l) e^{i m phi}. The matrix element A_{pq} feeds mode
m = p - q at the midpoint x = (p + q)/2, so mode m naturally lives on the
half-lattice x in Z + (m mod 2)/2. ``CylSymbol.coeffs[m, j]`` holds that
half-lattice value at x = ell_min + j + (m mod 2)/2; values at integer l
are its band-limited interpolant, the same interpolant exp(lambda delta_l)
is built on.
"""
from dataclasses import dataclass, field
from enum import Enum
from functools import lru_cache
import logging
import math

import numpy as np

from cylphase.core import TWO_PI, AngleGrid, Window, common_window, window_size
from cylphase.errors import (
    BandLimitError, ConfigError, SeriesConvergenceError, WindowOverflowError,
)

logger = logging.getLogger(__name__)

# Order 12 leaves a tail near pi^13/13! for unit shifts of a full-band
# sequence; 24 brings it below 1e-12.
DEFAULT_ORDER = 24
SERIES_REL_TOL = 1e-6
BAND_TOL = 1e-14


def interp_kernel(d: np.ndarray) -> np.ndarray:
    """sin(pi d)/(pi d), exact on the integer/half-integer lattice"""
    d = np.asarray(d, dtype=float)
    twice = 2.0 * d
    rounded = np.rint(twice)
    if not np.all(np.abs(twice - rounded) < 1e-12):
        return np.sinc(d)
    t = rounded.astype(np.int64)
    out = np.zeros(d.shape, dtype=float)
    out[t == 0] = 1.0
    odd = (t % 2) != 0
    k = (t[odd] - 1) // 2
    out[odd] = np.where(k % 2 == 0, 1.0, -1.0) * 2.0 / (math.pi * t[odd])
    return out


@dataclass(frozen=True, eq=False)
class CylSymbol:
    ell_min: int
    coeffs: np.ndarray = field(repr=False)

    def __post_init__(self):
        c = np.array(self.coeffs, dtype=complex)
        if c.ndim != 2 or c.shape[0] % 2 != 1 or c.shape[1] == 0:
            raise ConfigError(f"Symbol coefficients need shape (2M+1, n), got {c.shape}")
        c.setflags(write=False)
        object.__setattr__(self, 'ell_min', int(self.ell_min))
        object.__setattr__(self, 'coeffs', c)

    @property
    def band_limit(self) -> int:
        return (self.coeffs.shape[0] - 1) // 2

    @property
    def modes(self) -> np.ndarray:
        return np.arange(-self.band_limit, self.band_limit + 1)

    @property
    def n_ell(self) -> int:
        return self.coeffs.shape[1]

    @property
    def window(self) -> Window:
        return self.ell_min, self.ell_min + self.n_ell - 1

    def positions(self, m: int) -> np.ndarray:
        return self.ell_min + np.arange(self.n_ell) + (m % 2) / 2

    def mode(self, m: int) -> np.ndarray:
        if abs(m) > self.band_limit:
            return np.zeros(self.n_ell, dtype=complex)
        return self.coeffs[m + self.band_limit]

    def padded(self, by: int = 0, band_limit: int | None = None) -> 'CylSymbol':
        """Zero-extend the window by ``by`` on each side and the band to ``band_limit``"""
        band = self.band_limit if band_limit is None else int(band_limit)
        if band < self.band_limit:
            extra = np.abs(self.coeffs[:self.band_limit - band]).max(initial=0.0)
            extra = max(extra, np.abs(self.coeffs[self.band_limit + band + 1:]).max(initial=0.0))
            if extra > BAND_TOL:
                raise BandLimitError(
                    f"Cropping to band limit {band} drops coefficients of size {extra:.3e}")
        out = np.zeros((2 * band + 1, self.n_ell + 2 * by), dtype=complex)
        keep = min(band, self.band_limit)
        out[band - keep:band + keep + 1, by:by + self.n_ell] = \
            self.coeffs[self.band_limit - keep:self.band_limit + keep + 1]
        return CylSymbol(self.ell_min - by, out)

    def on_window(self, window: Window, band_limit: int | None = None) -> 'CylSymbol':
        if window[0] > self.ell_min or window[1] < self.window[1]:
            raise WindowOverflowError(f"Symbol window {self.window} does not fit in {window}")
        grown = self.padded(0, band_limit)
        out = np.zeros((grown.coeffs.shape[0], window_size(window)), dtype=complex)
        start = self.ell_min - window[0]
        out[:, start:start + self.n_ell] = grown.coeffs
        return CylSymbol(window[0], out)

    def restricted(self, window: Window, band_limit: int) -> 'CylSymbol':
        """Cut to a sub-window and band, discarding whatever lies outside"""
        if window[0] < self.ell_min or window[1] > self.window[1] or band_limit > self.band_limit:
            raise WindowOverflowError(f"Cannot restrict symbol on {self.window} to {window}")
        start = window[0] - self.ell_min
        rows = slice(self.band_limit - band_limit, self.band_limit + band_limit + 1)
        return CylSymbol(window[0], self.coeffs[rows, start:start + window_size(window)])

    def truncated(self) -> 'CylSymbol':
        """Zero every coefficient whose matrix element (p, q) leaves the window"""
        _, _, valid = _matrix_positions(self.modes, self.n_ell)
        return CylSymbol(self.ell_min, np.where(valid, self.coeffs, 0))

    def mode_values(self, ell) -> np.ndarray:
        """c_m(l) for every mode, shape (2M+1, len(ell)); l may be real"""
        ell = np.atleast_1d(np.asarray(ell, dtype=float))
        out = np.empty((self.coeffs.shape[0], ell.size), dtype=complex)
        for parity in (0, 1):
            kernel = interp_kernel(ell[:, None] - self.positions(parity)[None, :])
            rows = np.flatnonzero(self.modes % 2 == parity)
            out[rows] = self.coeffs[rows] @ kernel.T
        return out

    def evaluate(self, ell, phi) -> np.ndarray:
        """a(l, phi) at paired points (broadcast); l may be non-integer"""
        ell_b, phi_b = np.broadcast_arrays(np.asarray(ell, dtype=float),
                                           np.asarray(phi, dtype=float))
        flat_ell, flat_phi = ell_b.reshape(-1), phi_b.reshape(-1)
        values = self.mode_values(flat_ell)
        phases = np.exp(1j * np.multiply.outer(self.modes, flat_phi))
        return np.sum(values * phases, axis=0).reshape(ell_b.shape)

    def sample(self, ell_window: Window, angle_grid: AngleGrid) -> np.ndarray:
        """Values on integer ell_window x angle grid, shape (n_ell, n_phi)"""
        ells = np.arange(ell_window[0], ell_window[1] + 1)
        values = self.mode_values(ells)
        phases = np.exp(1j * np.multiply.outer(self.modes, angle_grid.points))
        return values.T @ phases

    def ell_sum(self, phi) -> np.ndarray:
        """sum over all integer l of a(l, phi); the interpolant sums each sample once"""
        phi = np.asarray(phi, dtype=float)
        totals = self.coeffs.sum(axis=1)
        return np.exp(1j * np.multiply.outer(phi, self.modes)) @ totals

    def phase_space_inner(self, other: 'CylSymbol') -> complex:
        """sum_l int a(l,phi) b(l,phi) dphi over the whole cylinder"""
        a, b = align(self, other)
        return complex(TWO_PI * np.sum(a.coeffs * b.coeffs[::-1]))

    def conj(self) -> 'CylSymbol':
        return CylSymbol(self.ell_min, self.coeffs[::-1].conj())

    def _combine(self, other: 'CylSymbol', sign: float) -> 'CylSymbol':
        a, b = align(self, other)
        return CylSymbol(a.ell_min, a.coeffs + sign * b.coeffs)

    def __add__(self, other: 'CylSymbol') -> 'CylSymbol':
        return self._combine(other, 1.0)

    def __sub__(self, other: 'CylSymbol') -> 'CylSymbol':
        return self._combine(other, -1.0)

    def __mul__(self, scalar: complex) -> 'CylSymbol':
        return CylSymbol(self.ell_min, self.coeffs * scalar)

    __rmul__ = __mul__

    def max_abs_diff(self, other: 'CylSymbol') -> float:
        a, b = align(self, other)
        return float(np.max(np.abs(a.coeffs - b.coeffs), initial=0.0))


def align(*symbols: CylSymbol) -> list[CylSymbol]:
    window = common_window(*(s.window for s in symbols))
    band = max(s.band_limit for s in symbols)
    return [s.on_window(window, band) for s in symbols]


def _lattice_indices(n: int):
    i, k = np.indices((n, n))
    m = i - k
    j = (i + k - (m % 2)) // 2
    return i, k, m, j


def symbol_of(op: np.ndarray, window: Window, band_limit: int | None = None) -> CylSymbol:
    """Symbol Tr[A w(l, phi)] of a matrix over ``window``"""
    op = np.asarray(op, dtype=complex)
    n = window_size(window)
    if op.shape != (n, n):
        raise ConfigError(f"Operator shape {op.shape} does not match window {window}")
    full = n - 1
    band = full if band_limit is None else int(band_limit)
    i, k, m, j = _lattice_indices(n)
    outside = np.abs(m) > band
    if np.any(outside) and np.max(np.abs(op[outside])) > BAND_TOL:
        raise BandLimitError(
            f"Operator has off-diagonal width beyond band limit {band}")
    coeffs = np.zeros((2 * band + 1, n), dtype=complex)
    inside = ~outside
    coeffs[m[inside] + band, j[inside]] = op[inside] / TWO_PI
    return CylSymbol(window[0], coeffs)


def _matrix_positions(modes: np.ndarray, n: int):
    """Row and column (p, q) fed by each half-lattice coefficient, and whether
    both fall inside a window of size n"""
    m = modes[:, None]
    j = np.arange(n)[None, :]
    s = m % 2
    p = j + (s + m) // 2
    q = j + (s - m) // 2
    valid = (p >= 0) & (p < n) & (q >= 0) & (q < n)
    return p, q, valid


def operator_of(symbol: CylSymbol) -> tuple[np.ndarray, Window]:
    """Inverse of symbol_of: A = 2 pi sum_l int a w dphi, on the symbol window"""
    n, band = symbol.n_ell, symbol.band_limit
    p, q, valid = _matrix_positions(symbol.modes, n)
    stray = np.max(np.abs(symbol.coeffs[~valid]), initial=0.0)
    if stray > 1e-12:
        raise WindowOverflowError(
            f"Symbol reaches outside window {symbol.window} (|c| = {stray:.3e})")
    op = np.zeros((n, n), dtype=complex)
    pv, qv = np.broadcast_to(p, valid.shape)[valid], np.broadcast_to(q, valid.shape)[valid]
    op[pv, qv] = TWO_PI * symbol.coeffs[valid]
    logger.debug("operator_of: %dx%d from band %d", n, n, band)
    return op, symbol.window


def delta_ell_shift(f: np.ndarray, lam: float) -> np.ndarray:
    """exp(lam delta_l) f(l) = sum_l' f(l') sinc(l + lam - l').

    ``f`` (last axis) holds samples on consecutive integers and vanishes
    outside them, so integer shifts bring in zeros. This is the interpolant
    ``CylSymbol`` evaluates between lattice sites.
    """
    f = np.asarray(f, dtype=complex)
    if lam == 0:
        return f.copy()
    j = np.arange(f.shape[-1])
    kernel = interp_kernel(j[:, None] + lam - j[None, :])
    return f @ kernel.T


def exp_delta_series(f: np.ndarray, lam: float, order: int = DEFAULT_ORDER, pad: int = 0) -> np.ndarray:
    """Taylor series sum_{n<=order} (lam delta_l)^n f / n!, delta_l acting spectrally.

    The sum runs on ``f`` zero-padded by ``pad`` on each side; for integer
    ``lam`` with ``pad >= |lam|`` it converges to ``delta_ell_shift(f, lam)``.
    """
    f = np.asarray(f, dtype=complex)
    if lam == 0:
        return f.copy()
    if pad:
        f = np.pad(f, (pad, pad))
    theta = TWO_PI * np.fft.fftfreq(f.size)
    spectrum = np.fft.fft(f)
    term = spectrum.copy()
    total = spectrum.copy()
    norms = [float(np.linalg.norm(term))]
    for n in range(1, order + 1):
        term = term * (1j * lam * theta) / n
        total += term
        norms.append(float(np.linalg.norm(term)))
    scale = max(float(np.linalg.norm(total)), 1e-300)
    tail = norms[-3:]
    if norms[-1] / scale > SERIES_REL_TOL or any(b > a for a, b in zip(tail, tail[1:])):
        raise SeriesConvergenceError(
            f"delta_l series at order {order} not converged for shift {lam} "
            f"(last term {norms[-1] / scale:.2e} relative)")
    out = np.fft.ifft(total)
    return out[pad:out.size - pad] if pad else out


class Mode(str, Enum):
    INTEGRAL = 'integral'
    DIFFERENTIAL = 'differential'


def star_product(
    a: CylSymbol,
    b: CylSymbol,
    mode: Mode | str = Mode.INTEGRAL,
    order: int = DEFAULT_ORDER
) -> CylSymbol:
    """Symbol of the operator product, (a * b)(l, phi)"""
    mode = Mode(mode)
    a, b = align(a, b)
    if mode is Mode.INTEGRAL:
        op_a, window = operator_of(a)
        op_b, _ = operator_of(b)
        return symbol_of(op_a @ op_b, window)
    return _star_differential(a, b, order)


def _star_differential(a: CylSymbol, b: CylSymbol, order: int) -> CylSymbol:
    # exp(-(i/2) P) on Fourier modes is a joint shift: a moves by m2/2 and
    # b by -m1/2, which on the half-lattices are whole-index shifts.
    n = a.n_ell
    band = min(a.band_limit + b.band_limit, n - 1)
    out = np.zeros((2 * band + 1, n), dtype=complex)
    pad = band + 1

    @lru_cache(maxsize=None)
    def shifted(which: str, m: int, lam: int) -> np.ndarray:
        src = a if which == 'a' else b
        return exp_delta_series(src.mode(m), lam, order, pad)

    for m1 in a.modes:
        if not np.any(a.mode(m1)):
            continue
        for m2 in b.modes:
            m = m1 + m2
            if abs(m) > band or not np.any(b.mode(m2)):
                continue
            s, s1, s2 = m % 2, m1 % 2, m2 % 2
            lam_a = (s + m2 - s1) // 2
            lam_b = (s - m1 - s2) // 2
            out[m + band] += TWO_PI * shifted('a', int(m1), int(lam_a)) * shifted('b', int(m2), int(lam_b))
    return CylSymbol(a.ell_min, out)


def moyal_bracket(
    a: CylSymbol,
    b: CylSymbol,
    mode: Mode | str = Mode.INTEGRAL,
    order: int = DEFAULT_ORDER
) -> CylSymbol:
    """{a, b}_M = (a * b - b * a) / i"""
    return (star_product(a, b, mode, order) - star_product(b, a, mode, order)) * (-1j)


class Rule(str, Enum):
    L_LEFT = 'L_left'
    L_RIGHT = 'L_right'
    E_LEFT = 'E_left'
    E_RIGHT = 'E_right'
    ED_LEFT = 'Ed_left'
    ED_RIGHT = 'Ed_right'


def apply_correspondence(rule: Rule | str, w: CylSymbol) -> CylSymbol:
    """Symbol of L rho, rho L, E rho, rho E (and the E^dagger pair) from that of rho.

    L acts as (l -+ (i/2) d/dphi) and E as e^{-i phi} e^{+-delta_l/2}, with
    unit prefactor; the half-lattice makes the delta_l/2 shifts exact.
    """
    rule = Rule(rule)
    if rule in (Rule.L_LEFT, Rule.L_RIGHT):
        sign = 1 if rule is Rule.L_LEFT else -1
        out = np.array([(w.positions(m) + sign * m / 2) * w.mode(m) for m in w.modes])
        return CylSymbol(w.ell_min, out)

    # E lowers l by one: room for one more row and mode on each side
    src = w.padded(1, w.band_limit + 1)
    band = src.band_limit
    # E: mode m+1 evaluated at x +- 1/2;  E^dagger: mode m-1 at x -+ 1/2
    step, half = {
        Rule.E_LEFT: (1, 1),
        Rule.E_RIGHT: (1, -1),
        Rule.ED_LEFT: (-1, -1),
        Rule.ED_RIGHT: (-1, 1),
    }[rule]
    out = np.zeros_like(src.coeffs)
    for m in src.modes:
        m_src = m + step
        if abs(m_src) > band:
            continue
        lam = ((m % 2) + half - (m_src % 2)) // 2
        out[m + band] = delta_ell_shift(src.mode(m_src), lam)
    return CylSymbol(src.ell_min, out)


def jacobi_residue(a: CylSymbol, b: CylSymbol, c: CylSymbol) -> float:
    """max |{a,{b,c}} + {b,{c,a}} + {c,{a,b}}| over coefficients"""
    total = (moyal_bracket(a, moyal_bracket(b, c))
             + moyal_bracket(b, moyal_bracket(c, a))
             + moyal_bracket(c, moyal_bracket(a, b)))
    return float(np.max(np.abs(total.coeffs), initial=0.0))
