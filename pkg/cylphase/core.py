"""States, density matrices and displacement operators on the discrete cylinder.

Everything is expressed in the angular-momentum basis |l>, truncated to an
integer window ``(ell_min, ell_max)``. Angles live in the canonical range
(-pi, pi].
"""
from dataclasses import dataclass, field
from typing import Sequence
import logging
import math

import numpy as np

from cylphase.errors import ConfigError, NumericalValidationError, WindowOverflowError

logger = logging.getLogger(__name__)

Window = tuple[int, int]

TWO_PI = 2.0 * math.pi
NORM_TOL = 1e-12
HERMITIAN_TOL = 1e-10
EIGEN_TOL = 1e-10


def reduce_angle(phi):
    """Map any angle (scalar or array) onto (-pi, pi]"""
    reduced = math.pi - np.mod(math.pi - np.asarray(phi, dtype=float), TWO_PI)
    return float(reduced) if np.ndim(reduced) == 0 else reduced


def window_size(window: Window) -> int:
    return window[1] - window[0] + 1


def common_window(*windows: Window) -> Window:
    return min(w[0] for w in windows), max(w[1] for w in windows)


def _check_window(window: Window) -> Window:
    lo, hi = int(window[0]), int(window[1])
    if hi < lo:
        raise ConfigError(f"Empty window {window}")
    return lo, hi


def embed_matrix(matrix: np.ndarray, window: Window, target: Window) -> np.ndarray:
    if target[0] > window[0] or target[1] < window[1]:
        raise WindowOverflowError(f"Window {window} does not fit in {target}")
    out = np.zeros((window_size(target),) * 2, dtype=complex)
    start = window[0] - target[0]
    n = matrix.shape[0]
    out[start:start + n, start:start + n] = matrix
    return out


@dataclass(frozen=True)
class AngleGrid:
    """Uniform midpoint samples of (-pi, pi); the seam itself is never hit"""
    n_phi: int

    def __post_init__(self):
        if int(self.n_phi) < 2:
            raise ConfigError(f"AngleGrid needs n_phi >= 2, got {self.n_phi}")
        object.__setattr__(self, 'n_phi', int(self.n_phi))

    @property
    def points(self) -> np.ndarray:
        k = np.arange(self.n_phi)
        return -math.pi + TWO_PI * (k + 0.5) / self.n_phi

    @property
    def weight(self) -> float:
        return TWO_PI / self.n_phi


@dataclass(frozen=True)
class DisplacementLabel:
    ell: int
    phi: float = 0.0

    def __post_init__(self):
        object.__setattr__(self, 'ell', int(self.ell))
        object.__setattr__(self, 'phi', reduce_angle(self.phi))

    def inverse(self) -> 'DisplacementLabel':
        return DisplacementLabel(-self.ell, -self.phi)


@dataclass(frozen=True, eq=False)
class CylState:
    """Pure state with finite support over ``[ell_min, ell_min + len - 1]``"""
    ell_min: int
    amplitudes: np.ndarray = field(repr=False)

    def __post_init__(self):
        amps = np.array(self.amplitudes, dtype=complex).reshape(-1)
        if amps.size == 0:
            raise ConfigError("A state needs at least one amplitude")
        amps.setflags(write=False)
        object.__setattr__(self, 'ell_min', int(self.ell_min))
        object.__setattr__(self, 'amplitudes', amps)

    @classmethod
    def from_dict(cls, amplitudes: dict[int, complex]) -> 'CylState':
        if not amplitudes:
            raise ConfigError("A state needs at least one amplitude")
        lo, hi = min(amplitudes), max(amplitudes)
        values = np.zeros(hi - lo + 1, dtype=complex)
        for ell, amp in amplitudes.items():
            values[ell - lo] = amp
        return cls(lo, values)

    @property
    def ell_max(self) -> int:
        return self.ell_min + len(self.amplitudes) - 1

    @property
    def window(self) -> Window:
        return self.ell_min, self.ell_max

    @property
    def ells(self) -> np.ndarray:
        return np.arange(self.ell_min, self.ell_max + 1)

    def amplitude(self, ell: int) -> complex:
        if self.ell_min <= ell <= self.ell_max:
            return complex(self.amplitudes[ell - self.ell_min])
        return 0j

    def norm(self) -> float:
        return float(np.linalg.norm(self.amplitudes))

    def is_normalized(self, tol: float = NORM_TOL) -> bool:
        return abs(self.norm() ** 2 - 1.0) <= tol

    def normalized(self) -> 'CylState':
        n = self.norm()
        if n == 0:
            raise NumericalValidationError("Cannot normalize the zero vector")
        return CylState(self.ell_min, self.amplitudes / n)

    def on_window(self, window: Window) -> 'CylState':
        """Same state, re-expressed on a window that contains its support"""
        window = _check_window(window)
        lo, hi = self.support()
        if window[0] > lo or window[1] < hi:
            raise WindowOverflowError(
                f"Support {(lo, hi)} does not fit in window {window}")
        values = np.zeros(window_size(window), dtype=complex)
        for ell in range(max(window[0], self.ell_min), min(window[1], self.ell_max) + 1):
            values[ell - window[0]] = self.amplitudes[ell - self.ell_min]
        return CylState(window[0], values)

    def support(self) -> Window:
        nonzero = np.flatnonzero(self.amplitudes)
        if nonzero.size == 0:
            return self.window
        return self.ell_min + int(nonzero[0]), self.ell_min + int(nonzero[-1])


@dataclass(frozen=True, eq=False)
class CylDensity:
    """Density matrix over ``[ell_min, ell_min + n - 1]``"""
    ell_min: int
    matrix: np.ndarray = field(repr=False)

    def __post_init__(self):
        m = np.array(self.matrix, dtype=complex)
        if m.ndim != 2 or m.shape[0] != m.shape[1] or m.shape[0] == 0:
            raise ConfigError(f"Density matrix must be square, got {m.shape}")
        residue = np.max(np.abs(m - m.conj().T))
        if residue > HERMITIAN_TOL:
            raise NumericalValidationError(
                f"Density matrix is not Hermitian (residue {residue:.3e})")
        # Hermitian to the last bit from here on
        m = 0.5 * (m + m.conj().T)
        m.setflags(write=False)
        object.__setattr__(self, 'ell_min', int(self.ell_min))
        object.__setattr__(self, 'matrix', m)

    @property
    def ell_max(self) -> int:
        return self.ell_min + self.matrix.shape[0] - 1

    @property
    def window(self) -> Window:
        return self.ell_min, self.ell_max

    @property
    def ells(self) -> np.ndarray:
        return np.arange(self.ell_min, self.ell_max + 1)

    def element(self, ell_a: int, ell_b: int) -> complex:
        lo, hi = self.window
        if lo <= ell_a <= hi and lo <= ell_b <= hi:
            return complex(self.matrix[ell_a - lo, ell_b - lo])
        return 0j

    def trace(self) -> float:
        return float(np.trace(self.matrix).real)

    def validate(self) -> 'CylDensity':
        if not np.all(np.isfinite(self.matrix)):
            raise NumericalValidationError("Density has non-finite entries")
        tr = self.trace()
        if abs(tr - 1.0) > NORM_TOL * max(1, self.matrix.shape[0]):
            raise NumericalValidationError(f"Density has trace {tr!r}, expected 1")
        lowest = float(np.linalg.eigvalsh(self.matrix)[0])
        if lowest < -EIGEN_TOL:
            raise NumericalValidationError(
                f"Density has negative eigenvalue {lowest:.3e}")
        return self

    def on_window(self, window: Window) -> 'CylDensity':
        window = _check_window(window)
        if window[0] <= self.ell_min and window[1] >= self.ell_max:
            return CylDensity(window[0], embed_matrix(self.matrix, self.window, window))
        lo, hi = self.window
        keep_lo, keep_hi = max(lo, window[0]), min(hi, window[1])
        dropped = self.trace() - sum(
            self.matrix[i - lo, i - lo].real for i in range(keep_lo, keep_hi + 1))
        if abs(dropped) > NORM_TOL:
            raise WindowOverflowError(
                f"Window {window} cuts population {dropped:.3e} of density on {self.window}")
        out = np.zeros((window_size(window),) * 2, dtype=complex)
        s, t = keep_lo - lo, keep_lo - window[0]
        n = keep_hi - keep_lo + 1
        if n > 0:
            out[t:t + n, t:t + n] = self.matrix[s:s + n, s:s + n]
        return CylDensity(window[0], out)


def angle_wavefunction(state: CylState, phi):
    """Psi(phi) = (2 pi)^{-1/2} sum_l e^{i l phi} Psi_l"""
    phi_arr = np.asarray(phi, dtype=float)
    phases = np.exp(1j * np.multiply.outer(phi_arr, state.ells))
    value = phases @ state.amplitudes / math.sqrt(TWO_PI)
    return complex(value) if phi_arr.ndim == 0 else value


def momentum_eigenstate(ell0: int) -> CylState:
    return CylState(int(ell0), [1.0])


def superposition(ell1: int, ell2: int, phi0: float = 0.0) -> CylState:
    """(|l1> + e^{i phi0} |l2>) / sqrt(2)"""
    if int(ell1) == int(ell2):
        raise ConfigError(f"Degenerate superposition: ell1 == ell2 == {ell1}")
    amp = 1 / math.sqrt(2)
    return CylState.from_dict({
        int(ell1): amp,
        int(ell2): amp * complex(math.cos(phi0), math.sin(phi0)),
    })


def rotation_matrix(phi: float, window: Window) -> np.ndarray:
    """U(phi) = exp(-i phi L): diagonal in |l>"""
    ells = np.arange(window[0], window[1] + 1)
    return np.diag(np.exp(-1j * ells * phi))


def shift_matrix(ell: int, window: Window) -> np.ndarray:
    """V(l): |l'> -> |l' + l>, truncated to the window"""
    return np.eye(window_size(window), k=-int(ell), dtype=complex)


def _raw_displacement(ell: int, phi: float, window: Window) -> np.ndarray:
    # No range reduction here: the phase exp(-i l phi / 2) is only valid
    # for phi inside the canonical window.
    return np.exp(-0.5j * ell * phi) * shift_matrix(ell, window) @ rotation_matrix(phi, window)


def displacement_matrix(
    label: DisplacementLabel,
    window: Window,
    auto_pad: bool = False
) -> np.ndarray | tuple[np.ndarray, Window]:
    """Matrix of D(l, phi) = e^{-i l phi/2} V(l) U(phi) acting on states over ``window``.

    A nonzero shift carries edge columns out of a finite window, so it raises
    ``WindowOverflowError`` unless ``auto_pad`` is set. With ``auto_pad`` the
    window is widened to hold the image of every column of ``window`` and the
    pair ``(matrix, padded_window)`` is returned; the columns over the original
    window are then exactly isometric.
    """
    window = _check_window(window)
    if not auto_pad:
        if label.ell != 0:
            raise WindowOverflowError(
                f"Shift by {label.ell} carries columns out of window {window}")
        return _raw_displacement(label.ell, label.phi, window)
    padded = common_window(window, (window[0] + label.ell, window[1] + label.ell))
    if padded != window:
        logger.debug("padding displacement window %s to %s", window, padded)
    return _raw_displacement(label.ell, label.phi, padded), padded


def displace(
    state: CylState,
    label: DisplacementLabel,
    window: Window | None = None,
    auto_pad: bool = False
) -> CylState:
    """Apply D(l, phi); the support moves by ``label.ell``.

    When ``window`` is given the result is expressed on it, and a shifted
    support that does not fit raises unless ``auto_pad`` widens the window.
    """
    ells = state.ells
    amps = np.exp(-0.5j * label.ell * label.phi) * np.exp(-1j * ells * label.phi) * state.amplitudes
    moved = CylState(state.ell_min + label.ell, amps)
    if window is None:
        return moved
    lo, hi = moved.support()
    if window[0] > lo or window[1] < hi:
        if not auto_pad:
            raise WindowOverflowError(
                f"Displaced support {(lo, hi)} leaves window {tuple(window)}")
        logger.warning("auto-padding window %s to cover %s", window, (lo, hi))
        window = common_window(tuple(window), (lo, hi))
    return moved.on_window(window)


def parity_reflect(x: CylState | CylDensity) -> CylState | CylDensity:
    """|l> -> |-l>; the window is negated"""
    if isinstance(x, CylState):
        return CylState(-x.ell_max, x.amplitudes[::-1])
    if isinstance(x, CylDensity):
        return CylDensity(-x.ell_max, x.matrix[::-1, ::-1])
    raise TypeError(f"Cannot reflect {type(x).__name__}")


def density_from_pure(state: CylState) -> CylDensity:
    return CylDensity(state.ell_min, np.outer(state.amplitudes, state.amplitudes.conj()))


def trace_product(a: CylDensity, b: CylDensity) -> complex:
    window = common_window(a.window, b.window)
    ma = embed_matrix(a.matrix, a.window, window)
    mb = embed_matrix(b.matrix, b.window, window)
    return complex(np.einsum('ij,ji->', ma, mb))


def angle_distribution(rho: CylDensity, phi):
    """<phi|rho|phi>, computed directly from the matrix"""
    phi_arr = np.asarray(phi, dtype=float)
    bras = np.exp(1j * np.multiply.outer(phi_arr, rho.ells))
    values = np.einsum('...p,pq,...q->...', bras, rho.matrix, bras.conj()).real / TWO_PI
    return float(values) if phi_arr.ndim == 0 else values


def momentum_distribution(rho: CylDensity) -> dict[int, float]:
    diag = np.diag(rho.matrix).real
    return {int(ell): float(p) for ell, p in zip(rho.ells, diag)}


def fidelity(a: CylState, b: CylState) -> float:
    """|<a|b>|^2 for pure states on arbitrary windows"""
    lo, hi = common_window(a.window, b.window)
    va = a.on_window((lo, hi)).amplitudes
    vb = b.on_window((lo, hi)).amplitudes
    return float(abs(np.vdot(va, vb)) ** 2)


def random_pure_state(
    rng: np.random.Generator,
    window: Window,
    support: int | None = None
) -> CylState:
    """Random normalized state on ``support`` distinct modes of the window"""
    n = window_size(window)
    support = n if support is None else min(int(support), n)
    picks = np.sort(rng.choice(n, size=support, replace=False))
    amps = np.zeros(n, dtype=complex)
    amps[picks] = rng.normal(size=support) + 1j * rng.normal(size=support)
    return CylState(window[0], amps).normalized()


def mixed_density(weights: Sequence[float], states: Sequence[CylState]) -> CylDensity:
    if len(weights) != len(states) or not states:
        raise ConfigError("weights and states must have the same non-zero length")
    w = np.asarray(weights, dtype=float)
    if np.any(w < 0):
        raise ConfigError("Mixture weights must be nonnegative")
    w = w / w.sum()
    window = common_window(*(s.window for s in states))
    matrix = np.zeros((window_size(window),) * 2, dtype=complex)
    for weight, state in zip(w, states):
        v = state.on_window(window).amplitudes
        matrix += weight * np.outer(v, v.conj())
    return CylDensity(window[0], matrix)
