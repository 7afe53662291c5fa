# Command line front end

# Copyright (c) 2026 dnflow developers.
#
# This is free software released under the MIT License.  See `LICENSE`
# for details.


import argparse
import concurrent.futures
import logging
import os
import sys

import numpy as np

from . import __version__
from . import config
from . import mesh as meshes
from . import optimal
from . import output
from . import targets
from . import verify
from .state import BlowupError, BlowupReport, solve_state


# Export public API
__all__ = (
    'EXIT_BLOWUP',
    'EXIT_CHECK_FAILED',
    'EXIT_INFEASIBLE',
    'EXIT_NOT_CONVERGED',
    'EXIT_OK',
    'EXIT_USAGE',
    'cmd_gradient_check',
    'cmd_mesh',
    'cmd_optimize',
    'cmd_solve',
    'cmd_verify',
    'main',
)


logger = logging.getLogger(__name__)


# Exit codes
EXIT_OK = 0
EXIT_CHECK_FAILED = 1
EXIT_USAGE = 2
EXIT_BLOWUP = 3
EXIT_INFEASIBLE = 4
EXIT_NOT_CONVERGED = 5


def _out(args, name):
    os.makedirs(args.out, exist_ok=True)
    return os.path.join(args.out, name)


def _load(args):
    return (config.load(args.config) if args.config is not None
            else config.RunConfig())


def _control(cfg, disc, grid, path=None):
    values = None
    path = path if path is not None else cfg.control.file
    if path is not None:
        values = output.read_control_csv(path, grid, disc.n_segments)
    return cfg.initial_control(grid, values)


def _vtk_callback(args, cfg, disc):
    every = args.vtk_every if args.vtk_every is not None \
        else cfg.outputs.vtk_every
    if not every:
        return None

    def dump(n, t, u, p):
        if n % every == 0:
            output.write_vtk(_out(args, '{}.{:05d}.vtk'.format(
                cfg.outputs.vtk_prefix, n)), disc, u, p, t)
    return dump


def cmd_mesh(args, cfg):
    """Writes the configured channel mesh."""
    mesh = cfg.build_mesh()
    geom = cfg.build_geometry()
    path = _out(args, cfg.outputs.mesh)
    meshes.write_mesh(mesh, path)
    logger.info('Mesh: %d vertices, %d triangles, area %.6f (exact %.6f)',
                mesh.n_vertices, mesh.n_triangles, mesh.area(), geom.area())
    print(path)
    return EXIT_OK


def cmd_solve(args, cfg):
    """
    Solves the state equation and writes the flowrate trajectory.  Exits
    with `EXIT_BLOWUP` after writing the rows up to the blowup.
    """
    disc = cfg.build_discretization()
    grid = cfg.build_grid()
    q = _control(cfg, disc, grid, args.control)
    u0 = cfg.initial_velocity(disc)
    outcome = solve_state(disc, grid, q, u0, cfg.physics,
                          _vtk_callback(args, cfg, disc))
    path = _out(args, cfg.outputs.flowrate)
    if isinstance(outcome, BlowupReport):
        traj = outcome.trajectory
        output.write_flowrate_csv(path, traj.times, traj.flowrates(),
                                  outcome.t_star)
        print('Blowup at t = {} ({})'.format(outcome.t_star,
                                             outcome.trigger))
        return EXIT_BLOWUP
    output.write_flowrate_csv(path, outcome.times, outcome.flowrates())
    print('Final flowrate: {!r}'.format(outcome.flowrates()[-1]))
    return EXIT_OK


def _optimize(args, cfg):
    disc = cfg.build_discretization()
    grid = cfg.build_grid()
    problem = optimal.ControlProblem(disc, grid, cfg.initial_velocity(disc),
                                     cfg.objective_data(grid), cfg.physics)
    q0 = _control(cfg, disc, grid, args.control)
    q, log = optimal.optimize(problem, q0, cfg.optimizer)
    output.write_control_csv(_out(args, cfg.outputs.control), grid, q)
    output.write_iterations_csv(_out(args, cfg.outputs.iterations), log)
    output.write_flowrate_csv(
        _out(args, cfg.outputs.target_flowrate), grid.times,
        targets.target_flowrates(problem.data.target, grid, disc))
    final = log.final_report
    output.write_flowrate_csv(_out(args, cfg.outputs.flowrate),
                              final.trajectory.times,
                              final.trajectory.flowrates())
    callback = _vtk_callback(args, cfg, disc)
    if callback is not None:
        traj = final.trajectory
        for n, t in enumerate(traj.times):
            callback(n, t, traj.u[n], traj.p[n])
    print('{}: j = {!r} after {} iterations (alpha = {!r})'.format(
        log.status, final.j, len(log) - 1, cfg.objective.alpha))
    if not log.converged:
        # Outputs hold the last accepted iterate
        print('dnflow: optimizer stopped ({}) with stationarity {:.3e} > '
              'tol {!r} (alpha = {!r})'.format(
                  log.status, log.records[-1].stationarity,
                  cfg.optimizer.tol, cfg.objective.alpha), file=sys.stderr)
        return EXIT_NOT_CONVERGED
    return EXIT_OK


def _sweep_task(args, cfg, alpha):
    # Each value gets its own output directory
    sub = argparse.Namespace(**vars(args))
    sub.out = os.path.join(args.out, 'alpha={!r}'.format(alpha))
    try:
        return _optimize(sub, cfg.with_alpha(alpha))
    except optimal.InfeasibleStartError as error:
        print(error, file=sys.stderr)
        return EXIT_INFEASIBLE


def _parse_sweep(text):
    name, _, values = text.partition('=')
    if name.strip() != 'alpha' or not values:
        raise config.ConfigError(
            'Bad sweep: {!r} (expected alpha=<v1>,<v2>,...)'.format(text))
    try:
        alphas = [float(v) for v in values.split(',')]
    except ValueError:
        raise config.ConfigError('Bad sweep values: {!r}'.format(
            values)) from None
    if not all(a > 0 and np.isfinite(a) for a in alphas):
        raise config.ConfigError('Bad sweep values: {!r}'.format(values))
    return alphas


def cmd_optimize(args, cfg):
    """
    Solves the optimal control problem and writes the optimal control,
    its flowrate, the target flowrate, and the iteration log.  Exits
    with `EXIT_NOT_CONVERGED` when the optimizer stops short of its
    tolerance.  With `--sweep` the regularization weights run in
    separate processes.
    """
    if args.sweep is None:
        return _optimize(args, cfg)
    alphas = _parse_sweep(args.sweep)
    with concurrent.futures.ProcessPoolExecutor() as pool:
        codes = list(pool.map(_sweep_task, [args] * len(alphas),
                              [cfg] * len(alphas), alphas))
    return max(codes)


def cmd_gradient_check(args, cfg):
    """
    Finite difference test of the gradient at the configured control
    along a random direction; fails when the smallest relative error
    exceeds 1e-6.
    """
    disc = cfg.build_discretization()
    grid = cfg.build_grid()
    problem = optimal.ControlProblem(disc, grid, cfg.initial_velocity(disc),
                                     cfg.objective_data(grid), cfg.physics)
    q = _control(cfg, disc, grid, args.control)
    rng = np.random.default_rng(args.seed)
    dq = rng.standard_normal(q.values.shape)
    rows = verify.gradient_sweep(problem, q, dq)
    print('{:>8} {:>22} {:>22} {:>10}'.format(
        'eps', 'difference quotient', 'directional', 'rel error'))
    for eps, quotient, directional, error in rows:
        print('{:8.0e} {:22.14e} {:22.14e} {:10.2e}'.format(
            eps, quotient, directional, error))
    best = min(row[3] for row in rows)
    passed = best <= 1e-6
    print('{}: minimum relative error {:.2e}'.format(
        'PASS' if passed else 'FAIL', best))
    return EXIT_OK if passed else EXIT_CHECK_FAILED


def cmd_verify(args, cfg):
    """Runs a verification profile and writes `verify.csv`."""
    results = verify.run_all(args.profile, _out(args, 'verify.csv'))
    for result in results:
        print('{:<22} {:<4} value {:10.3e}  threshold {:10.3e}  {:7.1f} s'
              .format(result.name, 'pass' if result.passed else 'FAIL',
                      result.value, result.threshold, result.seconds))
    return (EXIT_OK if all(r.passed for r in results)
            else EXIT_CHECK_FAILED)


def _parser():
    parser = argparse.ArgumentParser(
        prog='dnflow', description=(
            'Channel flow with Do-Nothing open boundaries: state solves, '
            'blowup detection, and boundary pressure control.'))
    parser.add_argument('--version', action='version',
                        version='%(prog)s ' + __version__)
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument('--config', help='JSON run configuration')
    common.add_argument('--out', default='.', help='Output directory')
    common.add_argument('-v', '--verbose', action='count', default=0)
    common.add_argument('-q', '--quiet', action='store_true')
    commands = parser.add_subparsers(dest='command', required=True)
    commands.add_parser('mesh', parents=[common],
                        help='Write the channel mesh')
    for name, text in (('solve', 'Solve the state equation'),
                       ('optimize', 'Solve the optimal control problem'),
                       ('gradient-check', 'Test the gradient')):
        sub = commands.add_parser(name, parents=[common], help=text)
        sub.add_argument('--control',
                         help='Control CSV (time,q1,...) on the time grid')
        if name != 'gradient-check':
            sub.add_argument('--vtk-every', type=int, metavar='K',
                             help='Write VTK files every K steps')
    commands.choices['optimize'].add_argument(
        '--sweep', metavar='alpha=LIST',
        help='Comma separated regularization weights to run concurrently')
    commands.choices['gradient-check'].add_argument(
        '--seed', type=int, default=0, help='Seed of the direction')
    sub = commands.add_parser('verify', parents=[common],
                              help='Run the verification checks')
    sub.add_argument('--profile', choices=('quick', 'full'),
                     default='quick')
    return parser


_COMMANDS = {
    'mesh': cmd_mesh,
    'solve': cmd_solve,
    'optimize': cmd_optimize,
    'gradient-check': cmd_gradient_check,
    'verify': cmd_verify,
}


def main(argv=None):
    args = _parser().parse_args(argv)
    level = (logging.ERROR if args.quiet else
             logging.DEBUG if args.verbose > 1 else
             logging.INFO if args.verbose else logging.WARNING)
    logging.basicConfig(
        level=level, format='%(asctime)s %(name)s %(levelname)s: %(message)s')
    try:
        cfg = _load(args)
        if getattr(args, 'vtk_every', None) is not None \
                and args.vtk_every < 0:
            raise config.ConfigError(
                'Bad VTK interval: {!r}'.format(args.vtk_every))
        return _COMMANDS[args.command](args, cfg)
    except (config.ConfigError, meshes.MeshError) as error:
        print('dnflow: {}'.format(error), file=sys.stderr)
        return EXIT_USAGE
    except (OSError, ValueError) as error:
        print('dnflow: {}'.format(error), file=sys.stderr)
        return EXIT_USAGE
    except optimal.InfeasibleStartError as error:
        print('dnflow: {}'.format(error), file=sys.stderr)
        return EXIT_INFEASIBLE
    except BlowupError as error:
        print('dnflow: gradient undefined: {}'.format(error),
              file=sys.stderr)
        return EXIT_INFEASIBLE
