"""Jacobi theta-3 and the theta-function coherent states of the cylinder"""
import logging
import math

import numpy as np

from cylphase import L_MAX
from cylphase.core import (
    CylState, DisplacementLabel, Window, displace, window_size,
)
from cylphase.errors import ConfigError, WindowOverflowError

logger = logging.getLogger(__name__)

SERIES_TOL = 1e-14
# Nome of the fiducial normalization: theta3(0 | e^{-1}) = sum_l e^{-l^2}
FIDUCIAL_NOME = math.exp(-1.0)


def theta3(z, q: complex):
    """Third Jacobi theta function in the nome convention.

    theta3(z | q) = 1 + 2 sum_{k>=1} q^{k^2} cos(2 k z), summed until the
    next term's magnitude bound |q|^{k^2} e^{2k|Im z|} drops below 1e-14.
    ``z`` may be a scalar or an array.
    """
    q = complex(q)
    if abs(q) >= 1:
        raise ConfigError(f"theta3 needs |q| < 1, got |q| = {abs(q)}")
    z_arr = np.asarray(z, dtype=complex)
    total = np.ones_like(z_arr)
    if q == 0:
        return complex(total) if z_arr.ndim == 0 else total

    log_q = math.log(abs(q))
    y = float(np.max(np.abs(z_arr.imag))) if z_arr.size else 0.0
    # the bound is a concave quadratic in k; never stop before its peak
    k_peak = y / -log_q
    k = 1
    while True:
        total = total + 2 * q ** (k * k) * np.cos(2 * k * z_arr)
        k += 1
        bound = math.exp(k * k * log_q + 2 * k * y)
        if k > k_peak and bound < SERIES_TOL:
            break
    logger.debug("theta3 summed %d terms (q=%s)", k - 1, q)
    return complex(total) if z_arr.ndim == 0 else total


def fiducial_state(l_max: int = L_MAX) -> CylState:
    """Theta-function fiducial: <l|Psi0> = e^{-l^2/2} / sqrt(theta3(0|1/e))"""
    ells = np.arange(-l_max, l_max + 1)
    norm = math.sqrt(theta3(0, FIDUCIAL_NOME).real)
    return CylState(-l_max, np.exp(-0.5 * ells.astype(float) ** 2) / norm)


def coherent_state(
    ell0: int,
    phi0: float = 0.0,
    window: Window | None = None,
    l_max: int = L_MAX
) -> CylState:
    """|l0, phi0> = D(l0, phi0)|Psi0>, supported on [l0 - l_max, l0 + l_max].

    When ``window`` is given it must cover that support.
    """
    if l_max < 1:
        raise ConfigError(f"l_max must be positive, got {l_max}")
    state = displace(fiducial_state(l_max), DisplacementLabel(ell0, phi0))
    if window is None:
        return state
    if window[0] > state.ell_min or window[1] < state.ell_max:
        raise WindowOverflowError(
            f"Window {tuple(window)} (size {window_size(window)}) does not cover "
            f"coherent support {state.window}")
    return state.on_window(window)
