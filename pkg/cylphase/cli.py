"""Command line driver: ``cylphase {wigner,evolve,tomo,selftest}``.

Every command writes plot-ready CSV (or JSON) files under ``--output`` and
prints a short summary. Exit codes: 0 ok, 2 configuration, 3 numerical
validation, 4 tomographic coverage.
"""
from pathlib import Path
from typing import Sequence
import argparse
import json
import logging
import sys

import numpy as np
from pydantic import ValidationError

from cylphase import LOG_LEVEL, __version__
from cylphase.core import (
    AngleGrid, CylState, Window, density_from_pure, momentum_eigenstate, superposition,
)
from cylphase.dynamics import PendulumConfig, classical_trajectory, wigner_snapshots, write_time_series
from cylphase.errors import CylPhaseError, ConfigError, NumericalValidationError
from cylphase.schemas import ExperimentConfig, load_config
from cylphase.special import coherent_state
from cylphase.tomography import (
    density_from_char, reconstruct_char, required_zetas, simulate_tomograms, wigner_from_char,
)
from cylphase.utils import config_error_from_validation, fmt, make_error, read_csv, write_csv
from cylphase.wigner import marginal_angle, marginal_momentum, negativity_report, wigner_grid

logger = logging.getLogger(__name__)

STATE_HEADER = ('ell', 're', 'im')
SHOWN_CELLS = 10


def read_state_csv(path: str | Path) -> CylState:
    rows = read_csv(path, STATE_HEADER)
    if not rows:
        raise ConfigError(f"{path}: no amplitudes", [make_error(['state'], 'path', 'Empty state file')])
    state = CylState.from_dict({int(r[0]): complex(r[1], r[2]) for r in rows}).normalized()
    density_from_pure(state).validate()
    return state


def build_state(config: ExperimentConfig) -> CylState:
    spec = config.state
    if spec.kind == 'eigenstate':
        return momentum_eigenstate(spec.l0)
    if spec.kind == 'coherent':
        return coherent_state(spec.l0, spec.phi0, l_max=config.l_max)
    if spec.kind == 'superposition':
        return superposition(spec.l1, spec.l2, spec.theta)
    return read_state_csv(spec.path)


def build_window(config: ExperimentConfig, state: CylState) -> Window:
    center = config.grid.center
    if center is None:
        center = (state.ell_min + state.ell_max) // 2
    half = config.grid.half_width
    return center - half, center + half


def _write_grid(grid, out: Path, name: str, fmt_name: str) -> Path:
    if fmt_name == 'json':
        return grid.to_json(out / f"{name}.json")
    return grid.to_csv(out / f"{name}.csv")


def cmd_wigner(config: ExperimentConfig) -> int:
    state = build_state(config)
    window = build_window(config, state)
    rho = density_from_pure(state.on_window(window))
    grid = wigner_grid(rho, window, AngleGrid(config.grid.n_phi))
    out = Path(config.output)
    _write_grid(grid, out, 'wigner', config.format)
    write_csv(out / 'marginal_angle.csv', ('phi', 'p'), zip(grid.phis, marginal_angle(grid)))
    momentum = marginal_momentum(grid)
    write_csv(out / 'marginal_momentum.csv', ('ell', 'p'), zip(grid.ells.tolist(), momentum))

    report = negativity_report(grid)
    peak = int(grid.ells[int(np.argmax(momentum))])
    print(f"min W = {fmt(report.minimum)}")
    print(f"max W = {fmt(report.maximum)}")
    print(f"normalization = {fmt(grid.normalization())}")
    print(f"momentum marginal peak: ell = {peak}, p = {fmt(momentum.max())}")
    print(f"negative cells: {len(report.negative_cells)} (volume {fmt(report.negative_volume)})")
    for ell, phi in report.negative_cells[:SHOWN_CELLS]:
        print(f"  ell = {ell}, phi = {fmt(phi)}")
    return 0


def _pendulum_config(config: ExperimentConfig, window: Window) -> PendulumConfig:
    dyn = config.dynamics
    try:
        return PendulumConfig(lam=dyn.lam, window=window, dt=dyn.dt, t_final=dyn.t_final,
                              method=dyn.method, save_every=dyn.save_every)
    except ValidationError as exc:
        raise config_error_from_validation(exc, ['dynamics'])


def cmd_evolve(config: ExperimentConfig) -> int:
    state = build_state(config)
    window = build_window(config, state)
    pendulum = _pendulum_config(config, window)
    start = wigner_grid(state.on_window(window), window, AngleGrid(config.grid.n_phi))
    snapshots = wigner_snapshots(state, start, pendulum)
    out = Path(config.output)
    write_time_series(out / 'evolution.csv', snapshots)

    if config.state.kind in ('eigenstate', 'coherent'):
        trajectory = classical_trajectory(config.state.l0, config.state.phi0, pendulum)
        trajectory.to_csv(out / 'trajectory.csv')
    final_t, final = snapshots[-1]
    print(f"method = {pendulum.method}, steps = {pendulum.n_steps}, snapshots = {len(snapshots)}")
    print(f"t = {fmt(final_t)}: normalization = {fmt(final.normalization())}")
    drift = max(float(np.max(np.abs(g.values - snapshots[0][1].values))) for _, g in snapshots)
    print(f"max change from t = 0: {fmt(drift)}")
    return 0


def cmd_tomo(config: ExperimentConfig) -> int:
    state = build_state(config)
    rho = density_from_pure(state)
    width = rho.ell_max - rho.ell_min
    n_phi = config.tomography.n_phi or max(2 * width + 1, 16)
    grid = AngleGrid(n_phi)
    ell_window = (-width, width)
    zetas = required_zetas(ell_window, grid)
    rng = np.random.default_rng(config.seed)
    tomograms = simulate_tomograms(rho, zetas, grid, config.tomography.counts, rng)
    coeffs = reconstruct_char(tomograms, ell_window)
    estimate = density_from_char(coeffs)
    if config.tomography.counts is None:
        estimate.validate()
    else:
        # finite counts may leave small negative eigenvalues
        try:
            estimate.validate()
        except NumericalValidationError as e:
            logger.warning("sampled estimate is not a density: %s", e)
    rebuilt = wigner_from_char(coeffs)

    out = Path(config.output)
    tomograms.to_csv(out / 'tomograms.csv')
    tomograms.spectrum_to_csv(out / 'spectrum.csv')
    coeffs.to_csv(out / 'char.csv')
    _write_grid(rebuilt, out, 'wigner_reconstructed', config.format)
    print(f"zeta slices = {zetas.size}, n_phi = {n_phi}, l window = {ell_window}")

    if config.tomography.roundtrip:
        density_error = float(np.max(np.abs(estimate.matrix - rho.matrix)))
        reference = wigner_grid(rho, rebuilt.ell_window, rebuilt.angle_grid)
        print(f"max density reconstruction error = {fmt(density_error)}")
        print(f"max reconstruction error = {fmt(rebuilt.max_abs_diff(reference))}")
    return 0


def cmd_selftest(config: ExperimentConfig) -> int:
    from cylphase.selftest import run_selftest

    summary = run_selftest(seed=config.seed)
    print(json.dumps(summary, indent=2, sort_keys=True))
    return 0 if summary['passed'] else 3


COMMANDS = {
    'wigner': cmd_wigner,
    'evolve': cmd_evolve,
    'tomo': cmd_tomo,
    'selftest': cmd_selftest,
}


def _state_flags(parser: argparse.ArgumentParser):
    g = parser.add_argument_group('state')
    g.add_argument('--state', dest='kind', choices=['eigenstate', 'coherent', 'superposition', 'file'])
    g.add_argument('--l0', type=int)
    g.add_argument('--phi0', type=float)
    g.add_argument('--l1', type=int)
    g.add_argument('--l2', type=int)
    g.add_argument('--theta', type=float)
    g.add_argument('--state-file', dest='path')
    g.add_argument('--l-max', dest='l_max', type=int, help='coherent-state half width')
    g = parser.add_argument_group('grid')
    g.add_argument('--half-width', type=int)
    g.add_argument('--center', type=int)
    g.add_argument('--n-phi', type=int)


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument('--config', help='JSON file with ExperimentConfig fields')
    common.add_argument('--output', '-o')
    common.add_argument('--format', choices=['csv', 'json'])
    common.add_argument('--seed', type=int)
    common.add_argument('--verbose', '-v', action='store_true')

    parser = argparse.ArgumentParser(prog='cylphase', description='Phase-space tools for the discrete cylinder')
    parser.add_argument('--version', action='version', version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest='command', required=True)

    p = sub.add_parser('wigner', parents=[common], help='Wigner grid and marginals of a state')
    _state_flags(p)

    p = sub.add_parser('evolve', parents=[common], help='quantum pendulum evolution')
    _state_flags(p)
    p.add_argument('--lambda', dest='lam', type=float)
    p.add_argument('--dt', type=float)
    p.add_argument('--t', dest='t_final', type=float)
    p.add_argument('--method', choices=['schrodinger', 'wigner_exact', 'semiclassical'])
    p.add_argument('--save-every', type=int)

    p = sub.add_parser('tomo', parents=[common], help='simulate and invert free-rotor tomograms')
    _state_flags(p)
    p.add_argument('--counts', type=int, help='shots per slice; noiseless when omitted')
    p.add_argument('--roundtrip', action='store_true', default=None)

    sub.add_parser('selftest', parents=[common], help='run the invariant suite')
    return parser


def overrides_from_args(args: argparse.Namespace) -> dict:
    def pick(*names):
        return {n: getattr(args, n) for n in names if getattr(args, n, None) is not None}

    n_phi = getattr(args, 'n_phi', None)
    overrides = {
        'command': args.command,
        **pick('output', 'format', 'seed', 'l_max'),
        'state': pick('kind', 'l0', 'phi0', 'l1', 'l2', 'theta', 'path'),
        'grid': pick('half_width', 'center'),
        'dynamics': pick('dt', 't_final', 'method', 'save_every'),
        'tomography': pick('counts', 'roundtrip'),
    }
    if getattr(args, 'lam', None) is not None:
        overrides['dynamics']['lambda'] = args.lam
    if n_phi is not None:
        target = 'tomography' if args.command == 'tomo' else 'grid'
        overrides[target]['n_phi'] = n_phi
    return overrides


def main(argv: Sequence[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(
        level=logging.DEBUG if args.verbose else LOG_LEVEL,
        format='%(asctime)s %(levelname)s %(name)s: %(message)s',
        stream=sys.stderr,
    )
    try:
        config = load_config(args.config, overrides_from_args(args))
        logger.debug("running %s with %s", config.command, config.model_dump())
        return COMMANDS[config.command](config)
    except CylPhaseError as exc:
        print(f"error: {exc.msg}", file=sys.stderr)
        for detail in exc.details[:SHOWN_CELLS]:
            print(f"  {detail}", file=sys.stderr)
        return exc.exit_code


if __name__ == '__main__':
    sys.exit(main())
