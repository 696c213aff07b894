import math
import numpy as np
import pandas as pd
import pytest
from bfstrip import fd_oracle
from bfstrip.fd_oracle import (
    DiscreteSpectrum, EigenSolverError, GridError, assemble_operator, build_grid, compare,
    convergence_study, count_branches, eigenfrequencies, extrapolated_frequencies, oracle_table,
    richardson,
)
from bfstrip.model import MATERIALS, derive_constants
from bfstrip.zero_order import BranchClass, find_branches
from bfstrip.table import DispersionTable
from conftest import strip

A = 6.0
K4 = math.pi / (4 * A)


def small_grid(cfg):
    return build_grid(cfg, nx=121, ny1=5, ny2=5)


def test_operator_is_hermitian(feal_cfg):
    cfg = feal_cfg.with_kappa_star(2.88)
    A_, mass = assemble_operator(cfg, 0.37, small_grid(cfg))
    diff = abs(A_ - A_.conj().T).max()
    assert diff <= 1e-12 * abs(A_).max()
    assert np.all(mass > 0)


@pytest.mark.parametrize('kappa_star', [None, 2.88])
def test_lumped_mass_is_total_mass(kappa_star):
    cfg = strip(MATERIALS['aluminium'], MATERIALS['iron'], 0.01, 0.14, kappa_star=kappa_star)
    _, mass = assemble_operator(cfg, K4, small_grid(cfg))
    expected = A * (cfg.upper.density * cfg.thickness_upper + cfg.lower.density * cfg.thickness_lower)
    assert mass.sum() == pytest.approx(expected, rel=1e-12)


@pytest.mark.parametrize('K', [0.0, 0.3])
def test_uncracked_homogeneous_strip(iron_cfg, K):
    spectrum = eigenfrequencies(iron_cfg, K, n_lowest=5, grid=small_grid(iron_cfg), cracked=False)
    c = iron_cfg.upper.wavespeed
    exact = np.sort([c * abs(K + 2 * math.pi * n / A) for n in range(-3, 4)])[:5]
    if K == 0:
        assert spectrum.frequencies[0] < 1.0
        np.testing.assert_allclose(spectrum.frequencies[1:], exact[1:], rtol=1e-3)
    else:
        np.testing.assert_allclose(spectrum.frequencies, exact, rtol=1e-3)


def test_spectrum_properties(feal_cfg):
    spectrum = eigenfrequencies(feal_cfg, K4, n_lowest=8, grid=small_grid(feal_cfg))
    assert spectrum.K == K4
    assert len(spectrum.frequencies) == 8
    assert np.all(np.diff(spectrum.frequencies) >= 0)
    assert np.all(spectrum.residuals <= 1e-8)


def test_spectrum_symmetries(feal_cfg):
    grid = small_grid(feal_cfg)
    base = eigenfrequencies(feal_cfg, 0.21, n_lowest=8, grid=grid).frequencies
    mirrored = eigenfrequencies(feal_cfg, -0.21, n_lowest=8, grid=grid).frequencies
    shifted = eigenfrequencies(feal_cfg, 0.21 + 2 * math.pi / A, n_lowest=8, grid=grid).frequencies
    np.testing.assert_allclose(mirrored, base, rtol=1e-9)
    np.testing.assert_allclose(shifted, base, rtol=1e-9)


def test_softer_interface_lowers_frequencies(feal_cfg):
    grid = small_grid(feal_cfg)
    perfect = eigenfrequencies(feal_cfg, K4, 10, grid).frequencies
    imperfect = eigenfrequencies(feal_cfg.with_kappa_star(2.88), K4, 10, grid).frequencies
    highly = eigenfrequencies(feal_cfg.with_kappa_star(28.8), K4, 10, grid).frequencies
    assert np.all(imperfect <= perfect * (1 + 1e-9))
    assert np.all(highly <= imperfect * (1 + 1e-9))
    assert np.any(highly < 0.999 * perfect)


def test_stiff_springs_approach_perfect_bond(feal_cfg):
    grid = small_grid(feal_cfg)
    perfect = eigenfrequencies(feal_cfg, K4, 6, grid).frequencies
    stiff = eigenfrequencies(feal_cfg.with_kappa_star(1e-3), K4, 6, grid).frequencies
    np.testing.assert_allclose(stiff, perfect, rtol=1e-3)


def test_sparse_and_dense_solvers_agree(feal_cfg, monkeypatch):
    grid = small_grid(feal_cfg)
    dense = eigenfrequencies(feal_cfg, K4, 6, grid).frequencies
    monkeypatch.setattr(fd_oracle, 'DENSE_LIMIT', 0)
    sparse = eigenfrequencies(feal_cfg, K4, 6, grid)
    np.testing.assert_allclose(sparse.frequencies, dense, rtol=1e-8)
    assert np.all(sparse.residuals <= 1e-8)


def test_grid_must_resolve_the_crack(iron_cfg):
    with pytest.raises(GridError):
        build_grid(iron_cfg, nx=101)
    with pytest.raises(GridError):
        build_grid(iron_cfg, nx=31)


def test_grid_is_refined_at_the_tips(iron_cfg):
    grid = build_grid(iron_cfg, nx=121, ny1=5, ny2=5, tip_refinement=4)
    x = grid.x
    assert x[0] == -A / 2 and x[-1] == A / 2
    for tip in (-1.0, 1.0):
        i = int(np.argmin(np.abs(x - tip)))
        assert x[i] == tip
        assert x[i + 1] - x[i] == pytest.approx(grid.hx / 4)
    assert grid.columns == len(x) - 1
    assert grid.hy1 == pytest.approx(0.075 / 4)


def test_grid_scale(iron_cfg):
    grid = build_grid(iron_cfg, nx=121, ny1=5, ny2=5, grid_scale=2)
    assert grid.nx == 241
    assert grid.ny1 == 9


def test_oracle_table(iron_cfg):
    table, spectra = oracle_table(iron_cfg, [0.0, K4], n_lowest=4, grid=small_grid(iron_cfg))
    assert len(table) == 8
    assert set(table.df.source) == {'oracle'}
    assert [s.K for s in spectra] == [0.0, K4]


def model_table(K, omegas):
    return DispersionTable(pd.DataFrame(dict(
        K=K, branch_index=range(len(omegas)), omega0=omegas, omega_corrected=math.nan,
        **{'class': 'propagating'},
    )))


def test_compare_matches_one_to_one():
    spectrum = DiscreteSpectrum(0.1, np.array([0.0, 100.0, 205.0, 400.0]), None, np.zeros(4))
    rows, summary, unmatched = compare(model_table(0.1, [101.0, 200.0]), [spectrum], omega_max=300)
    assert unmatched == 0
    assert list(rows.omega_oracle) == [100.0, 205.0]
    assert rows.discrepancy_zero.iloc[0] == pytest.approx(0.01)
    assert summary.loc['propagating', ('zero', 'max')] == pytest.approx(5 / 205)


def test_compare_counts_missing_branches():
    spectrum = DiscreteSpectrum(0.1, np.array([100.0, 150.0, 205.0, 400.0]), None, np.zeros(4))
    rows, _, unmatched = compare(model_table(0.1, [101.0, 200.0]), [spectrum], omega_max=300)
    assert unmatched == 1
    assert rows.matched.all()

    spectrum = DiscreteSpectrum(0.1, np.array([100.0, 400.0]), None, np.zeros(2))
    rows, _, unmatched = compare(model_table(0.1, [101.0, 200.0]), [spectrum], omega_max=300)
    assert unmatched == 1
    assert list(rows.matched) == [True, False]


def test_uncracked_homogeneous_strip_on_default_grid(iron_cfg):
    grid = build_grid(iron_cfg, tip_refinement=1)
    spectrum = eigenfrequencies(iron_cfg, K4, n_lowest=6, grid=grid, cracked=False)
    c = iron_cfg.upper.wavespeed
    exact = np.sort([c * abs(K4 + 2 * math.pi * n / A) for n in range(-4, 5)])[:6]
    np.testing.assert_allclose(spectrum.frequencies, exact, rtol=5e-4)


def test_richardson_removes_first_order_error():
    exact = np.array([100.0, 250.0, 400.0])
    fine = np.sqrt(exact**2 * (1 + 0.002))
    coarse = np.sqrt(exact**2 * (1 + 0.004))
    np.testing.assert_allclose(richardson(fine, coarse), exact, rtol=1e-12)
    np.testing.assert_allclose(richardson(fine, np.sqrt(exact**2 * (1 + 0.008)), order=2), exact, rtol=1e-12)


def test_richardson_pairs_across_reordering():
    fine = np.array([100.2, 199.0, 300.3])
    coarse = np.array([300.6, 100.4, 198.5])
    out = richardson(fine, coarse)
    assert out[0] == pytest.approx(math.sqrt(2 * 100.2**2 - 100.4**2))
    assert out[1] == pytest.approx(math.sqrt(2 * 199.0**2 - 198.5**2))
    assert np.all(np.diff(out) >= 0)


def test_richardson_leaves_unpaired_values():
    out = richardson(np.array([100.0, 200.0]), np.array([100.1, 260.0]))
    assert out[1] == 200.0
    assert out[0] < 100.0


def test_extrapolated_frequencies_stay_near_the_fine_grid(iron_cfg):
    fine = build_grid(iron_cfg, nx=241, ny1=9, ny2=9)
    coarse = build_grid(iron_cfg, nx=241, ny1=9, ny2=9, grid_scale=0.5)
    spectrum = extrapolated_frequencies(iron_cfg, K4, 6, fine, coarse)
    on_fine = eigenfrequencies(iron_cfg, K4, 6, fine)
    assert spectrum.grid is fine
    assert len(spectrum.residuals) == 6 and np.all(spectrum.residuals <= 1e-8)
    np.testing.assert_allclose(spectrum.frequencies, on_fine.frequencies, rtol=0.01)


def test_solver_failure_reports_iterations_and_residual(feal_cfg, monkeypatch):
    def no_convergence(S, k, **kwargs):
        n = S.shape[0]
        raise fd_oracle.spla.ArpackNoConvergence('no convergence', np.array([1.0]), np.ones((n, 1)))

    monkeypatch.setattr(fd_oracle, 'DENSE_LIMIT', 0)
    monkeypatch.setattr(fd_oracle.spla, 'eigsh', no_convergence)
    grid = small_grid(feal_cfg)
    with pytest.raises(EigenSolverError) as info:
        eigenfrequencies(feal_cfg, K4, 6, grid)
    e = info.value
    assert e.K == K4
    assert e.iterations > 0
    assert math.isfinite(e.best_residual) and e.best_residual > 0
    assert 'iterations' in str(e) and 'best residual' in str(e)
    assert '1 of 6' in str(e)


def test_count_branches_per_K():
    model = DispersionTable(pd.DataFrame(dict(
        K=[0.0, 0.0, 0.0, 0.1, 0.1], branch_index=[0, 1, 2, 0, 1],
        omega0=[0.0, 100.0, 900.0, 50.0, 120.0], **{'class': 'propagating'},
    )))
    spectrum = DiscreteSpectrum(0.1, np.array([51.0, 119.0, 180.0, 950.0]), None, np.zeros(4))
    oracle = DispersionTable.from_spectra([DiscreteSpectrum(0.0, np.array([0.0, 99.0]), None, np.zeros(2)), spectrum])
    counts = count_branches(model, oracle, omega_max=500)
    assert list(counts.index) == [0.0, 0.1]
    assert list(counts.model) == [1, 2]
    assert list(counts.oracle) == [1, 3]


@pytest.mark.slow
def test_halving_the_grid_changes_the_first_standing_mode_little(iron_cfg):
    consts = derive_constants(iron_cfg)
    standing = [p for p in find_branches(K4, 8000, consts) if p.classification == BranchClass.Standing]
    study = convergence_study(iron_cfg, K4, n_lowest=12, scales=(1.0, 2.0, 4.0))
    frequencies = study.frequencies
    i = int(np.nanargmin(np.abs(frequencies[-1] - standing[0].omega0)))
    change = abs(frequencies[-1, i] - frequencies[-2, i]) / frequencies[-1, i]
    assert change < 5e-4
    assert study.order[i] > 0.5
    table = study.table()
    assert list(table.columns[:2]) == ['K', 'index']
    assert 'extrapolated_4' in table


@pytest.mark.slow
def test_almg_branch_count_matches_oracle(almg_cfg):
    consts = derive_constants(almg_cfg)
    omega_max = 8000.0
    k_values = [math.pi / (8 * A), K4, math.pi / (3 * A)]
    points = [p for K in k_values for p in find_branches(K, omega_max, consts)]
    model = DispersionTable.from_points(points)
    oracle, _ = oracle_table(almg_cfg, k_values, n_lowest=16)
    counts = count_branches(model, oracle, omega_max)
    assert len(counts) == 3
    assert (counts.model == counts.oracle).all()
