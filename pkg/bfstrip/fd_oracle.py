"""
Finite difference reference solver for the full two dimensional cell problem.

The anti-plane displacement u solves mu_j Laplace(u) + rho_j omega^2 u = 0 in each layer,
with traction free outer faces and crack faces, a perfect or spring-type interface on
y = 0 outside the crack and the Bloch-Floquet condition u(x + a) = e^{iKa} u(x).

Discretisation is vertex centred: every node owns a control cell, stiffness comes from
the mu-weighted flux through the control cell faces and mass is lumped. Boundary nodes
own half cells, which is equivalent to a symmetric ghost node Neumann closure. Crack and
imperfect interface nodes are doubled, one copy per layer.
"""
import math
from dataclasses import dataclass
import numpy as np
import pandas as pd
import scipy.linalg as sla
import scipy.sparse as sp
import scipy.sparse.linalg as spla
from scipy.optimize import linear_sum_assignment
from bfstrip import *


class GridError(BfstripError):
    pass


class EigenSolverError(BfstripError):
    def __init__(self, K, iterations, converged, wanted, best_residual):
        self.K = K
        self.iterations = iterations
        self.best_residual = best_residual
        super().__init__(
            f'eigen solver did not converge at K={K:.6g} within {iterations} iterations, '
            f'{converged} of {wanted} eigenvalues found, best residual {best_residual:.3g}'
        )


DENSE_LIMIT = 2000
RESIDUAL_TOL = 1e-8
MATCH_TOL = 0.25


@dataclass(frozen=True)
class GridSpec:
    """
    Parameters:
        x: np.ndarray
            Node abscissae from -a/2 to a/2 inclusive, the last node is the Bloch image of the first
        nx: int
            Nodes of the uniform base grid along x
        ny1, ny2: int
            Nodes across the upper and lower layer, interface line included
        hy1, hy2: float
            Node spacing across the layers
    """
    x: np.ndarray
    nx: int
    ny1: int
    ny2: int
    hy1: float
    hy2: float

    @property
    def hx(self):
        return (self.x[-1] - self.x[0]) / (self.nx - 1)

    @property
    def columns(self):
        return len(self.x) - 1


@dataclass(frozen=True)
class DiscreteSpectrum:
    K: float
    frequencies: np.ndarray
    grid: GridSpec
    residuals: np.ndarray


def build_grid(cfg, nx=601, ny1=13, ny2=13, tip_refinement=4, grid_scale=1.0):
    """
    Crack aligned grid, with base cells within l/10 of a crack tip split in tip_refinement parts
    """
    cells = int(round((nx - 1) * grid_scale))
    nx = cells + 1
    ny1 = max(int(round((ny1 - 1) * grid_scale)) + 1, 4)
    ny2 = max(int(round((ny2 - 1) * grid_scale)) + 1, 4)
    if nx < 64:
        raise GridError(f'nx = {nx} is below the minimum of 64 nodes')
    if ny1 < 4 or ny2 < 4:
        raise GridError(f'ny1 = {ny1}, ny2 = {ny2}, at least 4 nodes per layer are required')

    a, l = cfg.a, cfg.l
    for name, length in (('crack length l', l), ('ligament (a - l)/2', (a - l) / 2)):
        n = length / a * cells
        if abs(n - round(n)) > 1e-9 * cells:
            raise GridError(f'{name} = {length:.6g} is not a multiple of hx = {a/cells:.6g}, choose another nx')

    base = np.linspace(-a / 2, a / 2, nx)
    xA, xB = -l / 2, l / 2
    x = [base[0]]
    for lo, hi in zip(base[:-1], base[1:]):
        mid = (lo + hi) / 2
        near_tip = min(abs(mid - xA), abs(mid - xB)) < l / 10
        parts = tip_refinement if near_tip else 1
        x += list(np.linspace(lo, hi, parts + 1)[1:])
    x = np.array(x)
    # snap the tips so that the crack test below is exact
    for tip in (xA, xB):
        x[np.argmin(np.abs(x - tip))] = tip

    return GridSpec(x, nx, ny1, ny2, cfg.thickness_upper / (ny1 - 1), cfg.thickness_lower / (ny2 - 1))


def _numbering(cfg, grid, cracked):
    """ DOF indices of the upper and lower nodes of every column, shape (columns, ny) """
    nc = grid.columns
    x = grid.x[:nc]
    tol = 1e-12 * cfg.a
    inside = (x > -cfg.l / 2 + tol) & (x < cfg.l / 2 - tol) if cracked else np.zeros(nc, bool)
    merged = ~inside if cfg.kappa == 0 else np.zeros(nc, bool)

    up = np.arange(nc * grid.ny1).reshape(nc, grid.ny1)
    count = nc * grid.ny1
    lo = np.empty((nc, grid.ny2), dtype=int)
    for i in range(nc):
        if merged[i]:
            lo[i, 0] = up[i, 0]
            lo[i, 1:] = count + np.arange(grid.ny2 - 1)
            count += grid.ny2 - 1
        else:
            lo[i] = count + np.arange(grid.ny2)
            count += grid.ny2
    return up, lo, count


def assemble_operator(cfg, K, grid, cracked=True):
    """
    Stiffness and lumped mass of the cell at Bloch parameter K

    Returns (A, B): A is Hermitian in CSR format, B the diagonal mass as a 1D array.
    """
    nc = grid.columns
    x = grid.x
    hx = np.diff(x)
    # control widths, the cell left of column 0 is the last one by periodicity
    wx = (hx + np.roll(hx, 1)) / 2
    z = np.exp(1j * K * cfg.a)

    up, lo, n = _numbering(cfg, grid, cracked)
    rows, cols, vals = [], [], []
    mass = np.zeros(n)

    def edge(p, q, c, phase=1.0):
        rows.extend([p, q, p, q])
        cols.extend([p, q, q, p])
        vals.extend([c, c, -c * phase, -c * np.conj(phase)])

    layers = (
        (cfg.upper, grid.hy1, grid.ny1, up),
        (cfg.lower, grid.hy2, grid.ny2, lo),
    )
    for material, hy, ny, index in layers:
        mu, rho = material.shear_modulus, material.density
        ly = np.full(ny, hy)
        ly[0] = ly[-1] = hy / 2
        for i in range(nc):
            j_next = (i + 1) % nc
            phase = z if i == nc - 1 else 1.0
            for j in range(ny):
                edge(index[i, j], index[j_next, j], mu * ly[j] / hx[i], phase)
                mass[index[i, j]] += rho * wx[i] * ly[j]
            for j in range(ny - 1):
                edge(index[i, j], index[i, j + 1], mu * wx[i] / hy)

    if cfg.kappa > 0:
        # springs of stiffness 1/(eps kappa) per unit length, over the bonded part of each control cell
        xA, xB = (-cfg.l / 2, cfg.l / 2) if cracked else (0.0, 0.0)
        left = x[:nc] - np.roll(hx, 1) / 2
        right = x[:nc] + hx / 2
        overlap = np.clip(np.minimum(right, xB) - np.maximum(left, xA), 0, None)
        bonded = wx - overlap
        stiffness = 1 / (cfg.epsilon * cfg.kappa)
        for i in np.nonzero(bonded > 1e-14 * cfg.a)[0]:
            edge(up[i, 0], lo[i, 0], stiffness * bonded[i])

    A = sp.coo_matrix((np.array(vals, dtype=complex), (rows, cols)), shape=(n, n)).tocsr()
    return A, mass


def _residuals(A, mass, lam, U):
    norm = abs(A).sum(axis=0).max()
    R = A @ U - (mass[:, None] * U) * lam[None, :]
    return np.linalg.norm(R, axis=0) / (norm * np.linalg.norm(U, axis=0))


def eigenfrequencies(cfg, K, n_lowest=12, grid=None, cracked=True):
    """
    The n_lowest eigenfrequencies of the cell problem at Bloch parameter K

    Small problems are solved densely, larger ones by shift-invert Lanczos around a
    small negative shift in the mass-normalised form.
    """
    if n_lowest < 1:
        raise ValueError('n_lowest must be at least 1')
    grid = grid or build_grid(cfg)
    A, mass = assemble_operator(cfg, K, grid, cracked)
    n = A.shape[0]
    scaling = sp.diags(1 / np.sqrt(mass))
    S = (scaling @ A @ scaling).tocsc()

    if n <= DENSE_LIMIT:
        lam, V = sla.eigh(S.toarray(), subset_by_index=[0, min(n_lowest, n) - 1])
    else:
        c_min = min(cfg.upper.wavespeed, cfg.lower.wavespeed)
        sigma = -(0.05 * math.pi * c_min / cfg.a)**2
        maxiter = 10 * n
        try:
            lam, V = spla.eigsh(S, k=n_lowest, sigma=sigma, which='LM', maxiter=maxiter)
        except spla.ArpackNoConvergence as e:
            best = math.inf
            if len(e.eigenvalues):
                norm = abs(S).sum(axis=0).max()
                R = S @ e.eigenvectors - e.eigenvectors * np.real(e.eigenvalues)[None, :]
                best = float(np.min(np.linalg.norm(R, axis=0) / (norm * np.linalg.norm(e.eigenvectors, axis=0))))
            raise EigenSolverError(K, maxiter, len(e.eigenvalues), n_lowest, best)
        lam = np.real(lam)

    order = np.argsort(lam)
    lam, V = lam[order], V[:, order]
    residuals = _residuals(A, mass, lam, V / np.sqrt(mass)[:, None])
    worst = residuals.max()
    if worst > RESIDUAL_TOL:
        warn(f'eigen solver residual {worst:.3g} at K={K:.6g} exceeds {RESIDUAL_TOL:g}.')
    return DiscreteSpectrum(K, np.sqrt(np.clip(lam, 0, None)), grid, residuals)


def _pair(reference, values, max_change):
    """ values reordered onto reference by a one to one assignment, NaN where nothing lies within max_change """
    reference, values = np.asarray(reference), np.asarray(values)
    out = np.full(len(reference), math.nan)
    if len(reference) == 0 or len(values) == 0:
        return out
    cost = np.abs(reference[:, None]**2 - values[None, :]**2)
    rows, cols = linear_sum_assignment(cost)
    for r, c in zip(rows, cols):
        if cost[r, c] <= max_change * reference[r]**2:
            out[r] = values[c]
    return out


def richardson(fine, coarse, order=1, ratio=2, max_change=0.01):
    """
    Extrapolate squared eigenfrequencies of two grids to zero spacing

    Parameters:
        fine, coarse: array
            Eigenfrequencies on grids whose spacings differ by ratio
        order: float
            Convergence order of the squared frequencies, 1 when crack tips are present
            (square root singularity) and 2 on smooth problems
        max_change: float
            Fine eigenvalues with no coarse partner within this relative distance are
            returned unchanged
    """
    fine = np.asarray(fine, dtype=float)
    partner = _pair(fine, coarse, max_change)
    lam = fine**2
    paired = ~np.isnan(partner)
    lam[paired] += (lam[paired] - partner[paired]**2) / (ratio**order - 1)
    return np.sort(np.sqrt(np.clip(lam, 0, None)))


def extrapolated_frequencies(cfg, K, n_lowest, fine, coarse, cracked=True):
    """
    Richardson extrapolated spectrum from a grid and the same grid at half resolution

    The residuals reported are those of the fine grid.
    """
    on_fine = eigenfrequencies(cfg, K, n_lowest, fine, cracked)
    on_coarse = eigenfrequencies(cfg, K, n_lowest, coarse, cracked)
    frequencies = richardson(on_fine.frequencies, on_coarse.frequencies,
                             order=1 if cracked else 2, ratio=coarse.hx / fine.hx)
    return DiscreteSpectrum(K, frequencies, fine, on_fine.residuals)


@dataclass(frozen=True)
class ConvergenceStudy:
    """
    Eigenfrequencies on successively halved grids

    Parameters:
        frequencies: np.ndarray
            Shape (scales, n), row i on grid_scale scales[i], paired onto the finest grid
        extrapolated: np.ndarray
            Shape (scales - 1, n), Richardson values of consecutive grid pairs
        order: np.ndarray
            Observed convergence order of the squared frequencies from the three finest grids
    """
    K: float
    scales: tuple
    frequencies: np.ndarray
    extrapolated: np.ndarray
    order: np.ndarray

    def table(self):
        df = pd.DataFrame(self.frequencies.T, columns=[f'omega_scale_{s:g}' for s in self.scales])
        for i in range(len(self.extrapolated)):
            df[f'extrapolated_{self.scales[i + 1]:g}'] = self.extrapolated[i]
        df['order'] = self.order
        df.insert(0, 'index', np.arange(len(df)))
        df.insert(0, 'K', self.K)
        return df


def convergence_study(cfg, K, n_lowest=12, nx=601, ny1=13, ny2=13, tip_refinement=4,
                      scales=(0.5, 1.0, 2.0), cracked=True):
    """ Solve on grid_scale = scales, each twice the previous, and measure the convergence order """
    if len(scales) < 3:
        raise ValueError('a convergence study needs at least three grids')
    grids = [build_grid(cfg, nx, ny1, ny2, tip_refinement, s) for s in scales]
    spectra = [eigenfrequencies(cfg, K, n_lowest, grid, cracked).frequencies for grid in grids]
    finest = spectra[-1]
    frequencies = np.array([_pair(finest, s, 0.05) for s in spectra[:-1]] + [finest])
    p = 1 if cracked else 2
    lam = frequencies**2
    extrapolated = np.sqrt(np.clip(lam[1:] + (lam[1:] - lam[:-1]) / (2**p - 1), 0, None))
    with np.errstate(divide='ignore', invalid='ignore'):
        order = np.log2(np.abs(lam[-3] - lam[-2]) / np.abs(lam[-2] - lam[-1]))
    return ConvergenceStudy(K, tuple(scales), frequencies, extrapolated, order)


def oracle_table(cfg, k_values, n_lowest=12, grid=None, cracked=True):
    from bfstrip.table import DispersionTable
    grid = grid or build_grid(cfg)
    spectra = [eigenfrequencies(cfg, K, n_lowest, grid, cracked) for K in k_values]
    return DispersionTable.from_spectra(spectra), spectra


def count_branches(table, oracle, omega_max):
    """ Number of model and oracle branches per K inside (0, omega_max] """
    counts = pd.DataFrame({
        'model': table.branch_counts(omega_max),
        'oracle': oracle.branch_counts(omega_max),
    }).fillna(0).astype(int)
    counts.index.name = 'K'
    return counts


def _match(model, oracle):
    """ One to one assignment of model frequencies to oracle frequencies, by log distance """
    if len(model) == 0 or len(oracle) == 0:
        return {}
    cost = np.abs(np.log(np.asarray(model)[:, None] / np.asarray(oracle)[None, :]))
    rows, cols = linear_sum_assignment(cost)
    return dict(zip(rows, cols))


def compare(table, spectra, omega_max=None):
    """
    Discrepancies of the model against the oracle spectra

    Model rows are matched one to one to oracle eigenvalues at the same K, on the
    corrected frequency where available. Rows with no oracle eigenvalue within 25%, and
    oracle eigenvalues inside the window left without a model branch, are reported as
    unmatched.

    Returns (rows, summary, unmatched): a DataFrame with one row per model branch point,
    a DataFrame of min/median/max absolute discrepancy per branch class and the number
    of unmatched items.
    """
    df = table.df
    records = []
    unmatched = 0
    for spectrum in spectra:
        at_k = df[np.isclose(df.K, spectrum.K, rtol=0, atol=1e-12 * (1 + abs(spectrum.K)))]
        at_k = at_k.sort_values('omega0')
        top = omega_max if omega_max else (at_k.omega0.max() if len(at_k) else 0)
        freqs = spectrum.frequencies
        window = freqs[(freqs > 1e-6 * max(top, 1)) & (freqs <= top)]
        if len(freqs) and freqs[-1] <= top:
            warn(f'oracle at K={spectrum.K:.6g} computed no eigenvalue above the window, raise n_lowest.')

        target = at_k.omega_corrected.where(at_k.omega_corrected.notna(), at_k.omega0).to_numpy()
        assignment = _match(target, window)
        for r, (_, row) in enumerate(at_k.iterrows()):
            ref = window[assignment[r]] if r in assignment else math.nan
            matched = not math.isnan(ref) and abs(target[r] - ref) <= MATCH_TOL * ref
            if not matched:
                unmatched += 1
                warn(f'unmatched branch at K={row.K:.6g}: model {target[r]:.6g} rad/s has no oracle counterpart.')
            records.append(dict(
                K=row.K, branch_index=row.branch_index, **{'class': row['class']},
                omega0=row.omega0, omega_corrected=row.omega_corrected, omega_oracle=ref,
                discrepancy_zero=(row.omega0 - ref) / ref,
                discrepancy_corrected=(row.omega_corrected - ref) / ref,
                matched=matched,
            ))
        for c in sorted(set(range(len(window))) - set(assignment.values())):
            unmatched += 1
            warn(f'unmatched oracle eigenvalue {window[c]:.6g} rad/s at K={spectrum.K:.6g}, '
                 'the model has no branch there.')

    rows = pd.DataFrame.from_records(records, columns=[
        'K', 'branch_index', 'class', 'omega0', 'omega_corrected', 'omega_oracle',
        'discrepancy_zero', 'discrepancy_corrected', 'matched',
    ])
    summary = (
        rows[rows.matched]
        .assign(zero=lambda d: d.discrepancy_zero.abs(), corrected=lambda d: d.discrepancy_corrected.abs())
        .groupby('class')[['zero', 'corrected']]
        .agg(['min', 'median', 'max'])
    )
    return rows, summary, unmatched
