import math
import numpy as np
import pandas as pd
import pytest
from bfstrip.table import COLUMNS, DispersionTable
from bfstrip.zero_order import BranchClass, BranchPoint


@pytest.fixture
def table():
    rng = np.random.default_rng(11)
    points = []
    for K in (0.2, 0.0, 0.1):
        omegas = np.sort(rng.uniform(100, 11000, 3))
        for i, omega in enumerate(omegas):
            points.append(BranchPoint(
                K=K, omega0=omega, varpi0=omega / 3000, residual=rng.uniform(0, 1e-9),
                classification=BranchClass.Standing if i == 1 else BranchClass.Propagating,
                branch_index=i,
            ))
    t = DispersionTable.from_points(points)
    t.df.loc[0, 'omega1_sq'] = -1 / 3
    t.df.loc[0, 'omega_corrected'] = math.pi * 1000
    t.df.loc[1, 'flag'] = 'NearDefectiveError'
    return t


def test_rows_are_sorted(table):
    assert list(table.df.columns) == COLUMNS
    keys = list(zip(table.df.K, table.df.omega0))
    assert keys == sorted(keys)
    assert len(table) == 9
    assert list(table.branch_counts()) == [3, 3, 3]


def test_csv_round_trip_is_exact(table, tmp_path):
    path = tmp_path / 'dispersion.csv'
    table.write_csv(path, comments=['bfstrip test table', 'source=model'])
    text = path.read_text()
    assert text.startswith('# bfstrip test table\n# source=model\nK,branch_index,class,')
    again = DispersionTable.read_csv(path)
    pd.testing.assert_frame_equal(again.df, table.df)
    assert again.df.omega1_sq[0] == -1 / 3


def test_gnuplot_blocks(table, tmp_path):
    path = tmp_path / 'dispersion.dat'
    table.write_dat(path)
    blocks = [b for b in path.read_text().split('\n\n\n') if b.strip()]
    assert len(blocks) == 3
    first = blocks[0].splitlines()
    assert first[0] == '# K omega0 omega_corrected'
    assert first[1] == '# branch 0'
    assert len(first) == 5
    K, omega0, corrected = first[2].split()
    assert float(K) == 0.0
    assert float(omega0) == table.df.omega0[0]
    assert float(corrected) == math.pi * 1000


def test_oracle_rows():
    from bfstrip.fd_oracle import DiscreteSpectrum
    spectra = [DiscreteSpectrum(0.5, np.array([1.0, 2.0]), None, np.zeros(2)),
               DiscreteSpectrum(0.0, np.array([0.5]), None, np.zeros(1))]
    t = DispersionTable.from_spectra(spectra)
    assert list(t.df.K) == [0.0, 0.5, 0.5]
    assert set(t.df['class']) == {'oracle'}
    assert list(t.df.branch_index) == [0, 0, 1]


def test_plot(table, tmp_path):
    path = tmp_path / 'dispersion.png'
    table.plot(path, oracle=table)
    assert path.stat().st_size > 0
