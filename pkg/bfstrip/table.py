import math
import pandas as pd
from bfstrip import *
from bfstrip.utils import num2string


COLUMNS = ['K', 'branch_index', 'class', 'omega0', 'omega1_sq', 'omega_corrected',
           'residual', 'conditioning', 'source', 'method', 'flag', 'tip_shift']
TEXT_COLUMNS = ('class', 'source', 'method', 'flag')


class DispersionTable:
    """
    Dispersion branches as a pandas DataFrame, one row per (K, branch)

    Parameters:
        df: pd.DataFrame
            Rows with the columns of COLUMNS, missing columns are filled with NaN or ''
    """
    def __init__(self, df=None):
        df = pd.DataFrame(columns=COLUMNS) if df is None else df.copy()
        for col in COLUMNS:
            if col not in df:
                df[col] = '' if col in TEXT_COLUMNS else math.nan
        for col in COLUMNS:
            if col in TEXT_COLUMNS:
                df[col] = df[col].fillna('').astype(str)
            elif col != 'branch_index':
                df[col] = df[col].astype(float)
        df['branch_index'] = df['branch_index'].astype(int)
        self.df = df[COLUMNS].sort_values(['K', 'omega0'], kind='mergesort').reset_index(drop=True)

    def __len__(self):
        return len(self.df)

    @classmethod
    def from_points(cls, points, source='model'):
        records = [dict(
            K=p.K, branch_index=p.branch_index, **{'class': p.classification.value},
            omega0=p.omega0, residual=p.residual, source=source,
        ) for p in points]
        return cls(pd.DataFrame.from_records(records, columns=COLUMNS))

    @classmethod
    def from_spectra(cls, spectra):
        records = []
        for spectrum in spectra:
            for i, (omega, residual) in enumerate(zip(spectrum.frequencies, spectrum.residuals)):
                records.append(dict(
                    K=spectrum.K, branch_index=i, **{'class': 'oracle'},
                    omega0=omega, residual=residual, source='oracle',
                ))
        return cls(pd.DataFrame.from_records(records, columns=COLUMNS))

    def write_csv(self, filename, comments=()):
        """ Write with 17 significant digits, comment lines prefixed with '#' """
        with open(filename, 'w') as f:
            for comment in comments:
                f.write(f'# {comment}\n')
            self.df.to_csv(f, index=False, float_format='%.17g', lineterminator='\n')

    @classmethod
    def read_csv(cls, filename):
        df = pd.read_csv(filename, comment='#', float_precision='round_trip',
                         keep_default_na=False, na_values=[''])
        return cls(df)

    def write_dat(self, filename):
        """
        Gnuplot data file: one block per branch index, blocks separated by two blank lines
        Columns are K, omega0 and omega_corrected.
        """
        lines = ['# K omega0 omega_corrected\n']
        for index, block in self.df.groupby('branch_index'):
            lines.append(f'# branch {index}\n')
            for row in block.itertuples():
                lines.append(f'{num2string(row.K)} {num2string(row.omega0)} {num2string(row.omega_corrected)}\n')
            lines.append('\n\n')
        with open(filename, 'w') as f:
            f.writelines(lines)

    def plot(self, filename, oracle=None):
        """ Static dispersion diagram, oracle in black, zero order as red crosses, corrected as blue circles """
        import matplotlib
        matplotlib.use('Agg')
        import matplotlib.pyplot as plt

        fig, ax = plt.subplots(figsize=(6, 4.5))
        if oracle is not None:
            for _, block in oracle.df.groupby('branch_index'):
                ax.plot(block.K, block.omega0, 'k-', lw=1)
        ax.plot(self.df.K, self.df.omega0, 'rx', ms=4, label='zero order')
        corrected = self.df[self.df.omega_corrected.notna()]
        if len(corrected):
            ax.plot(corrected.K, corrected.omega_corrected, 'o', mfc='none', mec='b', ms=4, label='first order')
        ax.set_xlabel('K [1/m]')
        ax.set_ylabel('omega [rad/s]')
        ax.legend()
        fig.tight_layout()
        fig.savefig(filename, dpi=150)
        plt.close(fig)

    def branch_counts(self, omega_max=None):
        """ Rows per K, restricted to omega0 in (0, omega_max] when omega_max is given """
        df = self.df
        if omega_max is not None:
            df = df[(df.omega0 > 1e-6 * omega_max) & (df.omega0 <= omega_max)]
        return df.groupby('K').size()
