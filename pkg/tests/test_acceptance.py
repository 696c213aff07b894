"""
End to end checks of the model against closed forms and the finite difference oracle.
Tests marked slow solve the oracle on full size grids, run them with `pytest -m slow`.
"""
import math
import numpy as np
import pandas as pd
import pytest
from bfstrip.config import load_config
from bfstrip.fd_oracle import build_grid, compare, extrapolated_frequencies
from bfstrip.first_order import (
    HYBRID_SHIFT_TOL, IllConditionedError, NearDefectiveError, NegativeRadicandError, assemble_N,
    correct_point, junction_vectors, omega1_eigen, omega1_schur,
)
from bfstrip.interface_constants import alpha
from bfstrip.model import derive_constants
from bfstrip.table import DispersionTable
from bfstrip.zero_order import (
    BranchClass, _assemble_stack, assemble_M, derivative_jump, dispersion_coefficients, find_branches,
    null_vector,
)
from conftest import CONFIGS

A = 6.0
K4 = math.pi / (4 * A)


def case(name):
    cfg = load_config(CONFIGS / f'{name}.yaml')
    return cfg, derive_constants(cfg.strip)


def model_table(cfg, consts, K):
    a = alpha(consts, cfg.quadrature).value
    records = []
    for point in find_branches(K, cfg.sweep.omega_max, consts):
        classification = point.classification
        try:
            outcome = correct_point(point, consts, a, cfg.strip.epsilon)
            corrected, classification = outcome.omega_corrected, outcome.classification
        except NearDefectiveError:
            corrected = math.nan
        records.append(dict(K=K, branch_index=point.branch_index, omega0=point.omega0,
                            omega_corrected=corrected, **{'class': classification.value}))
    return DispersionTable(pd.DataFrame.from_records(records))


def oracle_rows(name, K=K4):
    cfg, consts = case(name)
    g = cfg.grid
    grid = build_grid(cfg.strip, g.nx, g.ny1, g.ny2, g.tip_refinement, g.grid_scale)
    coarse = build_grid(cfg.strip, g.nx, g.ny1, g.ny2, g.tip_refinement, g.grid_scale / 2)
    spectrum = extrapolated_frequencies(cfg.strip, K, g.n_lowest, grid, coarse)
    rows, _, unmatched = compare(model_table(cfg, consts, K), [spectrum], cfg.sweep.omega_max)
    return consts, cfg, rows, unmatched


def test_determinant_structure(feal_asym_consts):
    rng = np.random.default_rng(2024)
    varpi = rng.uniform(0.01, 6, 1000)
    K = rng.uniform(-math.pi / A, math.pi / A, 1000)
    for v, k in zip(varpi, K):
        det = np.linalg.det(_assemble_stack(v, k, feal_asym_consts)[0])
        reduced = np.exp(1j * k * A) * det
        assert abs(reduced.imag) <= 1e-10 * (1 + abs(det))
    for v, k in zip(varpi[:50], K[:50]):
        A_, B_ = dispersion_coefficients(v, feal_asym_consts)
        det = np.linalg.det(_assemble_stack(v, k, feal_asym_consts)[0])
        direct = (np.exp(1j * k * A) * det).real
        assert direct == pytest.approx(2 * A_ * math.cos(k * A) + B_, rel=1e-9, abs=1e-9 * (abs(A_) + abs(B_)))


def test_standing_branch_is_flat_for_equal_wavespeeds(equal_speed_consts):
    omega = math.pi * equal_speed_consts.d1 / 2.0
    found = []
    for K in np.linspace(0, math.pi / A, 7)[:-1]:
        points = find_branches(K, 6000, equal_speed_consts)
        found.append(min(points, key=lambda p: abs(p.omega0 - omega)).omega0)
    assert (max(found) - min(found)) / omega < 1e-6


@pytest.mark.parametrize('name', ['almg_imperfect_medium_asym', 'feal_perfect_short_sym'])
def test_mode_residuals(name):
    cfg, consts = case(name)
    for point in find_branches(K4, cfg.sweep.omega_max, consts):
        v = null_vector(point, consts).entries
        M = assemble_M(point.varpi0, point.K, consts).entries
        assert np.linalg.norm(M @ v) <= 1e-8 * np.linalg.norm(M) * np.linalg.norm(v)


def test_propagating_corrections_are_tiny():
    checked = 0
    for path in sorted(CONFIGS.glob('*.yaml')):
        cfg, consts = case(path.stem)
        a = alpha(consts, cfg.quadrature).value
        for K in (K4, math.pi / (3 * A)):
            for point in find_branches(K, cfg.sweep.omega_max, consts):
                if point.classification is not BranchClass.Propagating:
                    continue
                try:
                    outcome = correct_point(point, consts, a, cfg.strip.epsilon)
                except (NearDefectiveError, NegativeRadicandError):
                    continue
                if outcome.classification is not BranchClass.Propagating:
                    assert outcome.tip_shift > HYBRID_SHIFT_TOL
                    continue
                change = abs(outcome.omega_corrected - point.omega0) / point.omega0
                assert change <= 1e-5, f'{path.stem}: K={K:.4g}, omega0={point.omega0:.6g}'
                checked += 1
    assert checked > 20


@pytest.mark.slow
def test_schur_and_eigen_agree_on_bundled_configs():
    for path in sorted(CONFIGS.glob('*.yaml')):
        cfg, consts = case(path.stem)
        a = alpha(consts, cfg.quadrature).value
        jv = junction_vectors(a, consts)
        for point in find_branches(K4, cfg.sweep.omega_max, consts):
            A0 = null_vector(point, consts)
            M = assemble_M(point.varpi0, point.K, consts)
            N = assemble_N(point.varpi0, point.K, consts)
            dA = derivative_jump(A0, consts.xA, consts)
            dB = derivative_jump(A0, consts.xB, consts)
            try:
                schur = omega1_schur(M, N, A0, jv, dA, dB, consts)
                eigen = omega1_eigen(M, N, A0, jv, dA, dB, consts)
            except (NearDefectiveError, IllConditionedError):
                continue
            scale = point.omega0 * consts.d1
            assert schur.omega1_sq == pytest.approx(eigen.omega1_sq, rel=1e-8, abs=1e-8 * scale), path.stem
            assert schur.imag_residual <= 1e-8


@pytest.mark.slow
@pytest.mark.parametrize('name, zero_band, corrected_max', [
    ('iron_perfect_medium_sym', (0.025, 0.05), 0.006),
    ('almg_perfect_medium_sym', (0.025, 0.055), 0.008),
    ('almg_perfect_short_sym', (0.08, 0.16), 0.02),
    ('almg_perfect_long_sym', (0.007, 0.02), 0.001),
])
def test_first_standing_wave_against_oracle(name, zero_band, corrected_max):
    consts, cfg, rows, _ = oracle_rows(name)
    guess = math.pi * consts.d1 / cfg.strip.l
    row = rows.iloc[(rows.omega0 - guess).abs().argmin()]
    assert row.matched
    assert zero_band[0] <= abs(row.discrepancy_zero) <= zero_band[1]
    assert abs(row.discrepancy_corrected) < corrected_max
    # the zero order model overshoots, the correction brings the frequency down
    assert row.omega_corrected < row.omega0


@pytest.mark.slow
def test_highly_imperfect_bond_is_flagged():
    _, _, _, unmatched = oracle_rows('feal_highly_imperfect_medium_sym')
    assert unmatched > 0
