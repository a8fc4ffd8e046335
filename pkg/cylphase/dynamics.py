"""Quantum pendulum H = L^2/2 + (lambda/2)(E + E^dagger) on the cylinder.

Three integrators share one configuration: the exact propagator in the
angular-momentum basis, the exact Wigner transport

    dW/dt = -l dW/dphi - lambda sin(phi) [W(l + 1/2, phi) - W(l - 1/2, phi)],

stepped with RK4 on half-lattice symbols, and the semiclassical transport
along classical characteristics phi' = l, l' = lambda sin(phi), which keep
l^2/2 + lambda cos(phi) constant.
"""
from dataclasses import dataclass, field
from pathlib import Path
from typing import Annotated, Iterator, Literal
import logging
import math

import numpy as np
from pydantic import AfterValidator, BaseModel, ConfigDict, Field
from scipy.linalg import expm

from cylphase.core import (
    CylState, Window, density_from_pure, reduce_angle, window_size,
)
from cylphase.errors import BoundaryLeakError, NumericalValidationError, StepSizeError
from cylphase.schemas import is_finite, is_ordered
from cylphase.star import CylSymbol, Rule, apply_correspondence
from cylphase.utils import write_csv
from cylphase.wigner import WignerGrid, symbol_from_grid, wigner_grid, wigner_symbol

logger = logging.getLogger(__name__)

LEAK_TOL = 1e-8
NORM_TOL = 1e-10
ENERGY_TOL = 1e-10
DRIFT_TOL = 1e-8
TRAJECTORY_HEADER = ('t', 'ell', 'phi')
SERIES_HEADER = ('t', 'ell', 'phi', 'w')


class PendulumConfig(BaseModel):
    model_config = ConfigDict(frozen=True, extra='forbid', populate_by_name=True)

    lam: Annotated[float, AfterValidator(is_finite)] = Field(0.0, alias='lambda')
    window: Annotated[tuple[int, int], AfterValidator(is_ordered)]
    dt: Annotated[float, Field(gt=0), AfterValidator(is_finite)] = 1e-3
    t_final: Annotated[float, Field(ge=0), AfterValidator(is_finite)] = 1.0
    method: Literal['schrodinger', 'wigner_exact', 'semiclassical'] = 'schrodinger'
    save_every: Annotated[int, Field(gt=0)] = 100

    @property
    def n_steps(self) -> int:
        return max(0, math.ceil(self.t_final / self.dt - 1e-9))

    @property
    def step(self) -> float:
        """dt, shrunk so that a whole number of steps lands on t_final"""
        return self.t_final / self.n_steps if self.n_steps else self.dt

    def save_steps(self) -> list[int]:
        steps = list(range(0, self.n_steps, self.save_every))
        steps.append(self.n_steps)
        return steps


@dataclass(frozen=True, eq=False)
class Trajectory:
    times: np.ndarray = field(repr=False)
    ell: np.ndarray = field(repr=False)
    phi: np.ndarray = field(repr=False)

    def __post_init__(self):
        object.__setattr__(self, 'phi', np.asarray(reduce_angle(self.phi), dtype=float))

    def to_csv(self, path: str | Path) -> Path:
        return write_csv(path, TRAJECTORY_HEADER, zip(self.times, self.ell, self.phi))


def hamiltonian_matrix(config: PendulumConfig) -> np.ndarray:
    """Tridiagonal: l^2/2 on the diagonal, lambda/2 next to it"""
    ells = np.arange(config.window[0], config.window[1] + 1).astype(float)
    n = ells.size
    off = np.full(n - 1, config.lam / 2)
    return np.diag(ells ** 2 / 2).astype(complex) + np.diag(off, 1) + np.diag(off, -1)


def energy_expectation(state: CylState, config: PendulumConfig) -> float:
    v = state.on_window(config.window).amplitudes
    return float(np.vdot(v, hamiltonian_matrix(config) @ v).real)


def _edge_population(v: np.ndarray) -> float:
    return float(abs(v[0]) ** 2 + abs(v[-1]) ** 2)


def schrodinger_run(state: CylState, config: PendulumConfig) -> Iterator[tuple[float, CylState]]:
    """Yield (t, state) at every save step of the exact evolution"""
    v = state.on_window(config.window).amplitudes.copy()
    h = hamiltonian_matrix(config)
    step = config.step
    propagator = expm(-1j * h * step)
    norm0 = float(np.vdot(v, v).real)
    energy0 = float(np.vdot(v, h @ v).real)
    saves = set(config.save_steps())
    lo = config.window[0]

    for n in range(config.n_steps + 1):
        if n:
            v = propagator @ v
            leak = _edge_population(v)
            if leak > LEAK_TOL:
                raise BoundaryLeakError(
                    f"Edge population {leak:.3e} at t = {n * step:.6g} on window {config.window}")
        if n in saves:
            yield n * step, CylState(lo, v.copy())

    norm_drift = abs(float(np.vdot(v, v).real) - norm0)
    energy_drift = abs(float(np.vdot(v, h @ v).real) - energy0)
    if norm_drift > NORM_TOL or energy_drift > ENERGY_TOL * max(1.0, abs(energy0)):
        raise NumericalValidationError(
            f"Exact evolution drifted: norm {norm_drift:.3e}, energy {energy_drift:.3e}")
    logger.debug("schrodinger: %d steps of %.3g", config.n_steps, step)


def evolve_schrodinger(state: CylState, config: PendulumConfig) -> CylState:
    """State at t_final; the reference every other integrator is checked against"""
    last = state.on_window(config.window)
    for _, last in schrodinger_run(state, config):
        pass
    return last


def transport_generator(w: CylSymbol, lam: float) -> CylSymbol:
    """Symbol of -i[H, rho], kept on the window and band of ``w``"""
    kinetic = (apply_correspondence(Rule.L_LEFT, apply_correspondence(Rule.L_LEFT, w))
               - apply_correspondence(Rule.L_RIGHT, apply_correspondence(Rule.L_RIGHT, w))) * 0.5
    out = kinetic
    if lam:
        hopping = (apply_correspondence(Rule.E_LEFT, w)
                   - apply_correspondence(Rule.E_RIGHT, w)
                   + apply_correspondence(Rule.ED_LEFT, w)
                   - apply_correspondence(Rule.ED_RIGHT, w))
        out = out + hopping * (lam / 2)
    return (out * -1j).restricted(w.window, w.band_limit).truncated()


def spectral_radius(window: Window, band_limit: int, lam: float) -> float:
    """Upper estimate of |eigenvalue| of the transport generator"""
    return max(abs(window[0]), abs(window[1])) * band_limit + 2 * abs(lam)


def _rk4(f, y, dt):
    k1 = f(y)
    k2 = f(y + k1 * (dt / 2))
    k3 = f(y + k2 * (dt / 2))
    k4 = f(y + k3 * dt)
    return y + (k1 + k2 * 2 + k3 * 2 + k4) * (dt / 6)


def transport_run(w: CylSymbol, config: PendulumConfig) -> Iterator[tuple[float, CylSymbol]]:
    """Yield (t, symbol) at every save step of the exact Wigner transport"""
    band = window_size(config.window) - 1
    w = w.on_window(config.window, max(band, w.band_limit)).restricted(config.window, band).truncated()
    step = config.step
    radius = spectral_radius(config.window, band, config.lam)
    if radius * step > 1:
        raise StepSizeError(
            f"dt = {step:.3g} too large: generator radius {radius:.3g} gives {radius * step:.3g} > 1")

    def generator(y: CylSymbol) -> CylSymbol:
        return transport_generator(y, config.lam)

    mass0 = complex(np.sum(w.mode(0)))
    saves = set(config.save_steps())
    for n in range(config.n_steps + 1):
        if n:
            w = _rk4(generator, w, step)
            diag = w.mode(0)
            # the diagonal of rho sits at mode 0; keep it off the edges
            leak = float(2 * math.pi * (abs(diag[0]) + abs(diag[-1])))
            if leak > LEAK_TOL:
                raise BoundaryLeakError(
                    f"Edge population {leak:.3e} at t = {n * step:.6g} on window {config.window}")
        if n in saves:
            yield n * step, w

    drift = abs(complex(np.sum(w.mode(0))) - mass0) * 2 * math.pi
    if drift > DRIFT_TOL * max(1.0, config.t_final):
        raise NumericalValidationError(f"Wigner normalization drifted by {drift:.3e}")
    logger.debug("transport: %d RK4 steps, radius*dt = %.3g", config.n_steps, radius * step)


def _sample_like(w: CylSymbol, grid: WignerGrid) -> WignerGrid:
    values = w.sample(grid.ell_window, grid.angle_grid)
    everywhere = w.ell_sum(grid.phis)
    return WignerGrid(grid.ell_window, grid.angle_grid, values.real,
                      everywhere.real - values.real.sum(axis=0))


def evolve_wigner_transport(grid: WignerGrid, config: PendulumConfig) -> WignerGrid:
    """Transport a sampled Wigner function to t_final on the same grid"""
    w = symbol_from_grid(grid)
    for _, w in transport_run(w, config):
        pass
    return _sample_like(w, grid)


def classical_energy(ell, phi, lam: float):
    return np.asarray(ell) ** 2 / 2 + lam * np.cos(phi)


def _flow(ell: np.ndarray, phi: np.ndarray, lam: float, dt: float, n_steps: int):
    def f(y):
        return np.stack([lam * np.sin(y[1]), y[0]])

    y = np.stack([np.asarray(ell, dtype=float), np.asarray(phi, dtype=float)])
    for _ in range(n_steps):
        y = _rk4(f, y, dt)
    return y[0], y[1]


def _check_drift(e0: np.ndarray, e1: np.ndarray, t: float):
    drift = float(np.max(np.abs(e1 - e0), initial=0.0))
    if drift > DRIFT_TOL * max(abs(t), 1.0):
        raise StepSizeError(
            f"Classical energy drifted by {drift:.3e} over t = {t:.6g}; reduce dt",
            [{'loc': ['dynamics', 'dt'], 'msg': 'energy drift above 1e-8 per unit time'}])


def classical_trajectory(ell0: float, phi0: float, config: PendulumConfig) -> Trajectory:
    """RK4 solution of phi' = l, l' = lambda sin(phi), sampled at save steps"""
    step = config.step
    saves = config.save_steps()
    ell, phi = np.array([float(ell0)]), np.array([float(phi0)])
    e0 = classical_energy(ell, phi, config.lam)
    times, ells, phis = [0.0], [ell[0]], [phi[0]]
    done = 0
    for target in saves[1:]:
        ell, phi = _flow(ell, phi, config.lam, step, target - done)
        done = target
        times.append(target * step)
        ells.append(ell[0])
        phis.append(phi[0])
    _check_drift(e0, classical_energy(ell, phi, config.lam), config.t_final)
    return Trajectory(np.array(times), np.array(ells), np.array(phis))


def semiclassical_at(w0: CylSymbol, grid: WignerGrid, lam: float, t: float, n_steps: int) -> WignerGrid:
    """W0 pulled back along characteristics: W(l, phi, t) = W0(flow_{-t}(l, phi))"""
    ell, phi = np.meshgrid(grid.ells.astype(float), grid.phis, indexing='ij')
    if n_steps:
        back_ell, back_phi = _flow(ell.ravel(), phi.ravel(), lam, -t / n_steps, n_steps)
        _check_drift(classical_energy(ell.ravel(), phi.ravel(), lam),
                     classical_energy(back_ell, back_phi, lam), t)
    else:
        back_ell, back_phi = ell.ravel(), phi.ravel()
    values = w0.evaluate(back_ell, back_phi).real.reshape(ell.shape)
    return WignerGrid(grid.ell_window, grid.angle_grid, values)


def evolve_semiclassical(grid: WignerGrid, config: PendulumConfig) -> WignerGrid:
    """Classical-characteristics approximation, meant for |l0| >> 1"""
    w0 = symbol_from_grid(grid)
    return semiclassical_at(w0, grid, config.lam, config.t_final, config.n_steps)


def wigner_snapshots(state: CylState, grid: WignerGrid, config: PendulumConfig) -> list[tuple[float, WignerGrid]]:
    """(t, W) at every save step with the configured method"""
    if config.method == 'schrodinger':
        return [(t, wigner_grid(s, grid.ell_window, grid.angle_grid))
                for t, s in schrodinger_run(state, config)]
    if config.method == 'wigner_exact':
        w = wigner_symbol(density_from_pure(state))
        return [(t, _sample_like(s, grid)) for t, s in transport_run(w, config)]
    w0 = symbol_from_grid(grid)
    step = config.step
    return [(n * step, semiclassical_at(w0, grid, config.lam, n * step, n))
            for n in config.save_steps()]


def write_time_series(path: str | Path, snapshots: list[tuple[float, WignerGrid]]) -> Path:
    def rows():
        for t, grid in snapshots:
            phis = grid.phis
            for i, ell in enumerate(grid.ells):
                for k, phi in enumerate(phis):
                    yield t, int(ell), phi, grid.values[i, k]

    return write_csv(path, SERIES_HEADER, rows())
