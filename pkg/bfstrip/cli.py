import functools
import sys
from dataclasses import replace
import click
from bfstrip import *
from bfstrip.config import load_config
from bfstrip.interface_constants import alpha
from bfstrip.model import ConfigError, derive_constants
from bfstrip.sweep import Sweep
from bfstrip.utils import num2string


def _config_option(f):
    return click.option('--config', 'config_path', required=True, type=click.Path(exists=True, dir_okay=False),
                        help='YAML run configuration')(f)


def _sweep_options(f):
    options = [
        click.option('--out', type=click.Path(file_okay=False), default=None, help='Output directory'),
        click.option('--k-points', type=int, default=None, help='Number of K values over [0, pi/a]'),
        click.option('--omega-max', type=float, default=None, help='Upper end of the frequency window in rad/s'),
        click.option('--grid-scale', type=float, default=None, help='Refine (>1) or coarsen (<1) the oracle grid'),
        click.option('--jobs', type=int, default=1, show_default=True, help='Worker processes for the K sweep'),
        click.option('--plot', is_flag=True, help='Also write PNG dispersion diagrams'),
    ]
    for option in reversed(options):
        f = option(f)
    return _config_option(f)


def _guarded(f):
    """ Map ConfigError to exit code 2 and other numerical failures to exit code 1 """
    @functools.wraps(f)
    def wrapper(*args, **kwargs):
        try:
            return f(*args, **kwargs)
        except ConfigError as e:
            click.echo(str(e), err=True)
            sys.exit(2)
        except BfstripError as e:
            click.echo(f'error: {e}', err=True)
            sys.exit(1)
    return wrapper


def _sweep(command, config_path, out, k_points, omega_max, grid_scale, jobs, plot):
    config = load_config(config_path).override(out, k_points, omega_max, grid_scale)
    if plot:
        config = replace(config, plot=True)
    return Sweep(config, command=f'{command} --config {config_path}', jobs=jobs)


def _finish(sweep, failed=False):
    status = 'failed' if failed or sweep.failures else 'ok'
    sweep.write_manifest(status)
    if sweep.failures:
        click.echo(f"{len(sweep.failures)} K values failed, see {sweep.out_dir}/manifest.yaml", err=True)
    if status != "ok":
        sys.exit(1)


@click.group()
def cli():
    """ Bloch-Floquet dispersion of thin bi-material strips with periodic interfacial cracks """
    pass


@cli.command()
@_config_option
@_guarded
def constants(config_path):
    """ Print the derived constants and the interface constant alpha """
    config = load_config(config_path)
    consts = derive_constants(config.strip)
    for key, value in consts.as_dict().items():
        click.echo(f'{key}={num2string(value)}')
    click.echo(f'interface={consts.kind.value}')
    a = alpha(consts, config.quadrature)
    name = 'alpha_P' if consts.kind.value == 'perfect' else 'alpha_I'
    click.echo(f'{name}={num2string(a.value)}')
    click.echo(f'{name}_error={num2string(a.estimated_error)}')


@cli.command()
@_sweep_options
@_guarded
def dispersion(config_path, out, k_points, omega_max, grid_scale, jobs, plot):
    """ Zero order dispersion branches """
    sweep = _sweep('dispersion', config_path, out, k_points, omega_max, grid_scale, jobs, plot)
    table = sweep.dispersion()
    click.echo(f'{len(table)} branch points written to {sweep.res_dir}/dispersion.csv')
    _finish(sweep)


@cli.command()
@_sweep_options
@_guarded
def correct(config_path, out, k_points, omega_max, grid_scale, jobs, plot):
    """ Zero order branches with their first order correction """
    sweep = _sweep('correct', config_path, out, k_points, omega_max, grid_scale, jobs, plot)
    table = sweep.correct()
    flagged = int((table.df.flag != '').sum())
    click.echo(f'{len(table)} branch points written to {sweep.res_dir}/corrected.csv, {flagged} flagged')
    _finish(sweep)


@cli.command()
@_sweep_options
@click.option('--convergence', is_flag=True, help='Also solve on half and double resolution grids and report the order')
@_guarded
def oracle(config_path, out, k_points, omega_max, grid_scale, jobs, plot, convergence):
    """ Finite difference reference spectra """
    sweep = _sweep('oracle', config_path, out, k_points, omega_max, grid_scale, jobs, plot)
    table, _ = sweep.oracle()
    click.echo(f'{len(table)} eigenfrequencies written to {sweep.res_dir}/oracle.csv')
    if convergence:
        study = sweep.convergence()
        orders = ', '.join(f'{p:.2f}' for p in study.order[:4])
        click.echo(f'observed order at K={study.K:.6g}: {orders}, see {sweep.res_dir}/convergence.csv')
    _finish(sweep)


@cli.command()
@_sweep_options
@click.option('--strict', is_flag=True, help='Exit with code 1 when branches are unmatched')
@_guarded
def compare(config_path, out, k_points, omega_max, grid_scale, jobs, plot, strict):
    """ Model against oracle discrepancy report """
    sweep = _sweep('compare', config_path, out, k_points, omega_max, grid_scale, jobs, plot)
    _, _, unmatched, report = sweep.compare()
    click.echo(report)
    if unmatched:
        warn(f'{unmatched} unmatched branches, the low dimensional model may not apply.')
    _finish(sweep, failed=strict and unmatched > 0)
