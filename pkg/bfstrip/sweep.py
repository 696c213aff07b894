from datetime import datetime
from functools import partial
import pandas as pd
import yaml
from mpire import WorkerPool
from shlib import to_path, mkdir
from tqdm import tqdm
from bfstrip import *
from bfstrip.fd_oracle import (
    GridError, build_grid, compare, convergence_study, count_branches, eigenfrequencies,
    extrapolated_frequencies,
)
from bfstrip.first_order import correct_point
from bfstrip.interface_constants import alpha
from bfstrip.model import derive_constants
from bfstrip.table import DispersionTable
from bfstrip.utils import digest
from bfstrip.zero_order import BranchClass, BranchPoint, find_branches


def _dispersion_task(K, consts, sweep):
    try:
        return K, find_branches(K, sweep.omega_max, consts, root_tol=sweep.root_tol,
                                points_per_spacing=sweep.points_per_spacing), None
    except BfstripError as e:
        return K, [], str(e)


def _correct_task(row, consts, alpha_value, epsilon):
    point = BranchPoint(
        K=row['K'], omega0=row['omega0'], varpi0=row['omega0'] / consts.d1,
        classification=BranchClass(row['class']), residual=row['residual'],
        branch_index=int(row['branch_index']),
    )
    try:
        outcome = correct_point(point, consts, alpha_value, epsilon)
    except BfstripError as e:
        return dict(flag=type(e).__name__, error=str(e))
    return dict(
        omega1_sq=outcome.schur.omega1_sq,
        omega_corrected=outcome.omega_corrected,
        tip_shift=outcome.tip_shift,
        conditioning=outcome.schur.conditioning,
        method=outcome.schur.method.value + ('+eigen' if outcome.eigen else ''),
        flag='',
        **{'class': outcome.classification.value},
    )


def _oracle_task(K, strip, n_lowest, grid, coarse=None):
    try:
        if coarse is None:
            return K, eigenfrequencies(strip, K, n_lowest, grid), None
        return K, extrapolated_frequencies(strip, K, n_lowest, grid, coarse), None
    except BfstripError as e:
        return K, None, str(e)


class Sweep:
    """
    One run of the model or the oracle over the K grid of a configuration

    Parameters:
        config: RunConfig
        command: str
            Recorded in the manifest
        jobs: int
            Number of worker processes for the per-K tasks

    Output goes to <out_dir>/results, the log file to <out_dir>/logs/main.log and the run
    manifest to <out_dir>/manifest.yaml.
    """
    def __init__(self, config, command='', jobs=1):
        self.config = config
        self.command = command
        self.jobs = max(int(jobs), 1)
        self.consts = derive_constants(config.strip)
        self.failures = []

        # keep all paths and directories at the same place
        self.out_dir = to_path(config.out_dir)
        self.log_dir = to_path(self.out_dir, 'logs')
        self.res_dir = to_path(self.out_dir, 'results')
        mkdir(self.log_dir, self.res_dir)

        informer.set_logfile(to_path(self.log_dir, 'main.log'))
        log(f'bfstrip run {config.name}: {command}')

    def _map(self, task, items, desc):
        if self.jobs > 1 and len(items) > 1:
            with WorkerPool(n_jobs=self.jobs) as pool:
                # single-element tuples, mpire unpacks dicts into keyword arguments
                return pool.map(task, [(item,) for item in items], progress_bar=True, progress_bar_options={'desc': desc})
        return [task(item) for item in tqdm(items, desc=desc, leave=False)]

    def _result(self, name):
        return to_path(self.res_dir, name)

    def alpha(self):
        return alpha(self.consts, self.config.quadrature)

    def dispersion(self):
        task = partial(_dispersion_task, consts=self.consts, sweep=self.config.sweep)
        points = []
        for K, found, failure in self._map(task, list(self.config.k_values()), 'dispersion'):
            if failure:
                self.failures.append(dict(stage='dispersion', K=float(K), error=failure))
                error(f'K={K:.6g}: {failure}')
            points += found
        table = DispersionTable.from_points(points)
        if len(table) == 0:
            warn(f'no branch below omega_max = {self.config.sweep.omega_max:g} rad/s.')
        self.write(table, 'dispersion')
        return table

    def correct(self, table=None):
        table = self.dispersion() if table is None else table
        a = self.alpha()
        display(f'alpha_{self.consts.kind.name[0]} = {a.value:.12g} +- {a.estimated_error:.2g}')
        task = partial(_correct_task, consts=self.consts, alpha_value=a.value,
                       epsilon=self.config.strip.epsilon)
        rows = table.df.to_dict('records')
        df = table.df.copy()
        for i, result in enumerate(self._map(task, rows, 'correct')):
            if 'error' in result:
                warn(f"K={rows[i]['K']:.6g}, omega0={rows[i]['omega0']:.6g} flagged: {result.pop('error')}")
            for key, value in result.items():
                df.at[i, key] = value
        corrected = DispersionTable(df)
        self.write(corrected, 'corrected')
        return corrected

    def _grids(self):
        """ Oracle grid and, when extrapolating, the same grid at half resolution """
        strip = self.config.strip
        g = self.config.grid
        grid = build_grid(strip, g.nx, g.ny1, g.ny2, g.tip_refinement, g.grid_scale)
        coarse = None
        if g.extrapolate:
            try:
                coarse = build_grid(strip, g.nx, g.ny1, g.ny2, g.tip_refinement, g.grid_scale / 2)
            except GridError as e:
                warn(f'no extrapolation, the half resolution grid is invalid: {e}')
        return grid, coarse

    def oracle(self):
        strip = self.config.strip
        g = self.config.grid
        grid, coarse = self._grids()
        display(f'oracle grid: {grid.columns} columns, {g.ny1} + {g.ny2} rows per column'
                + (', extrapolated from half resolution' if coarse else ''))
        task = partial(_oracle_task, strip=strip, n_lowest=g.n_lowest, grid=grid, coarse=coarse)
        spectra = []
        for K, spectrum, failure in self._map(task, list(self.config.k_values()), 'oracle'):
            if failure:
                self.failures.append(dict(stage='oracle', K=float(K), error=failure))
                error(f'K={K:.6g}: {failure}')
            else:
                spectra.append(spectrum)
        table = DispersionTable.from_spectra(spectra)
        self.write(table, 'oracle')
        return table, spectra

    def convergence(self, K=None, scales=(0.5, 1.0, 2.0)):
        """ Grid convergence study at K, by default the middle of the K sweep """
        g = self.config.grid
        if K is None:
            k_values = self.config.k_values()
            K = k_values[len(k_values) // 2]
        scales = tuple(g.grid_scale * s for s in scales)
        study = convergence_study(self.config.strip, K, g.n_lowest, g.nx, g.ny1, g.ny2,
                                  g.tip_refinement, scales)
        df = study.table()
        df.to_csv(self._result('convergence.csv'), index=False, float_format='%.17g', lineterminator='\n')
        for index, order in zip(df['index'], study.order):
            log(f'K={K:.6g}, eigenvalue {index}: observed order {order:.3g}')
        return study

    def compare(self):
        model = self.correct()
        oracle, spectra = self.oracle()
        omega_max = self.config.sweep.omega_max
        rows, summary, unmatched = compare(model, spectra, omega_max)
        counts = count_branches(model, oracle, omega_max)
        differ = counts[counts.model != counts.oracle]
        for K, row in differ.iterrows():
            warn(f'K={K:.6g}: {row.model} model branches against {row.oracle} oracle eigenvalues.')
        report = self.report(rows, summary, unmatched, counts)
        with open(self._result('compare.txt'), 'w') as f:
            f.write(report)
        rows.to_csv(self._result('compare.csv'), index=False, float_format='%.17g', lineterminator='\n')
        if self.config.plot:
            model.plot(self._result('compare.png'), oracle)
        return rows, summary, unmatched, report

    def report(self, rows, summary, unmatched, counts=None):
        lines = [f'Discrepancy report for {self.config.name}\n\n']
        with pd.option_context('display.width', 200, 'display.max_rows', None):
            lines.append(rows.to_string(index=False, float_format=lambda v: f'{v:.6g}') + '\n\n')
            lines.append('Absolute relative discrepancy per branch class\n')
            lines.append(summary.to_string(float_format=lambda v: f'{v:.3%}') + '\n\n')
            if counts is not None:
                lines.append('Branches per K\n')
                lines.append(counts.to_string() + '\n\n')
        lines.append(f'Unmatched: {unmatched}\n')
        return ''.join(lines)

    def write(self, table, stem):
        comments = [f'bfstrip {stem} table for {self.config.name}', f'source={stem}']
        table.write_csv(self._result(f'{stem}.csv'), comments)
        table.write_dat(self._result(f'{stem}.dat'))
        if self.config.plot and stem != 'oracle':
            table.plot(self._result(f'{stem}.png'))

    def write_manifest(self, status):
        manifest = dict(
            name=self.config.name,
            command=self.command,
            timestamp=str(datetime.now()),
            config_digest=digest(self.config.text),
            status=status,
            failures=self.failures,
        )
        with open(to_path(self.out_dir, 'manifest.yaml'), 'w') as f:
            yaml.safe_dump(manifest, f, sort_keys=False)
