"""
Zero order low dimensional model: dispersion matrix, branches and modes.

The cell is split into four segments, left of the crack (1), the upper and lower crack
faces (2, 3) and right of the crack (4). On segment m the zero order mode is
v_m(x) = A_m sin(omega0 x/d_m) + B_m cos(omega0 x/d_m), and the eight coefficients
[A1, B1, A2, B2, A3, B3, A4, B4] solve M A = 0, M being assembled here.
"""
import enum
import math
from dataclasses import dataclass, replace
import numpy as np
from scipy.optimize import brentq, minimize_scalar
from bfstrip import *


class RootFindingError(BfstripError):
    pass


class NullVectorError(BfstripError):
    pass


class SegmentError(BfstripError, ValueError):
    pass


class BranchClass(enum.Enum):
    Standing = 'standing'
    Propagating = 'propagating'
    Unclassified = 'unclassified'


@dataclass(frozen=True)
class BranchPoint:
    K: float
    omega0: float
    varpi0: float
    classification: BranchClass
    residual: float
    slope: float = math.nan
    branch_index: int = 0


@dataclass(frozen=True)
class ModeCoefficients:
    order: int
    entries: np.ndarray
    K: float
    omega0: float


@dataclass(frozen=True)
class DispersionMatrix:
    entries: np.ndarray
    K: float
    varpi0: float


# Default classification thresholds, as fractions of d1
SLOPE_TOL = 1e-3
PROPAGATING_TOL = 1e-1
# Bound on |f(r+h)| / |f(r+2h)| below which a sign change is a triple root (simple: 1/2, triple: 1/8)
TRIPLE_RATIO = 0.25


def _assemble_stack(varpi0, K, consts):
    """ M for every entry of the 1D array varpi0, shape (n, 8, 8) """
    varpi0 = np.atleast_1d(np.asarray(varpi0, dtype=float))
    d1 = consts.d1
    a = consts.config.a
    psi1, psi2 = consts.psi
    xB = consts.xB

    theta = [d1 / dm * varpi0 * xB for dm in consts.d]
    S = [np.sin(th) for th in theta]
    C = [np.cos(th) for th in theta]
    S1, S2, S3, S4 = S
    C1, C2, C3, C4 = C
    Sa = np.sin(varpi0 * a / 2)
    Ca = np.cos(varpi0 * a / 2)
    Z = np.exp(-1j * K * a)

    M = np.zeros((len(varpi0), 8, 8), dtype=complex)
    # v2 = v4 and v3 = v4 at xB
    M[:, 0, 2], M[:, 0, 3], M[:, 0, 6], M[:, 0, 7] = S2, C2, -S4, -C4
    M[:, 1, 4], M[:, 1, 5], M[:, 1, 6], M[:, 1, 7] = S3, C3, -S4, -C4
    # flux balance at xB
    M[:, 2, 2], M[:, 2, 3] = psi1 * C2, -psi1 * S2
    M[:, 2, 4], M[:, 2, 5] = psi2 * C3, -psi2 * S3
    M[:, 2, 6], M[:, 2, 7] = -C4, S4
    # v2 = v1 and v3 = v1 at xA = -xB
    M[:, 3, 0], M[:, 3, 1], M[:, 3, 2], M[:, 3, 3] = S1, -C1, -S2, C2
    M[:, 4, 0], M[:, 4, 1], M[:, 4, 4], M[:, 4, 5] = S1, -C1, -S3, C3
    # flux balance at xA
    M[:, 5, 0], M[:, 5, 1] = -C1, -S1
    M[:, 5, 2], M[:, 5, 3] = psi1 * C2, psi1 * S2
    M[:, 5, 4], M[:, 5, 5] = psi2 * C3, psi2 * S3
    # Bloch-Floquet conditions between x = -a/2 and x = a/2
    M[:, 6, 0], M[:, 6, 1], M[:, 6, 6], M[:, 6, 7] = -Sa, Ca, -Z * Sa, -Z * Ca
    M[:, 7, 0], M[:, 7, 1], M[:, 7, 6], M[:, 7, 7] = Ca, Sa, -Z * Ca, Z * Sa
    return M


def assemble_M(varpi0, K, consts):
    return DispersionMatrix(_assemble_stack(varpi0, K, consts)[0], K, varpi0)


def junction_rows(trace, varpi0, K, consts):
    """
    Apply the eight junction and Bloch functionals behind the rows of M to a basis.

    Parameters:
        trace: callable
            trace(m, x) returns (values, slopes), two arrays of length 2 holding the
            basis functions of the A_m and B_m columns of segment m and their x
            derivatives at x
        varpi0: float
        K: float
        consts: DerivedConstants

    With the basis sin, cos this reproduces M. Flux and slope rows are divided by
    varpi0, the same normalisation as M.
    """
    a = consts.config.a
    xA, xB = consts.xA, consts.xB
    w1, w2 = consts.flux_weights
    Z = np.exp(-1j * K * a)
    rows = np.zeros((8, 8), dtype=complex)

    def put(row, m, x, weight, slope=False):
        values, slopes = trace(m, x)
        rows[row, 2*(m - 1):2*m] += weight * np.asarray(slopes if slope else values)

    put(0, 2, xB, 1)
    put(0, 4, xB, -1)
    put(1, 3, xB, 1)
    put(1, 4, xB, -1)
    put(2, 2, xB, w1 / varpi0, True)
    put(2, 3, xB, w2 / varpi0, True)
    put(2, 4, xB, -1 / varpi0, True)
    put(3, 2, xA, 1)
    put(3, 1, xA, -1)
    put(4, 3, xA, 1)
    put(4, 1, xA, -1)
    put(5, 2, xA, w1 / varpi0, True)
    put(5, 3, xA, w2 / varpi0, True)
    put(5, 1, xA, -1 / varpi0, True)
    put(6, 1, -a / 2, 1)
    put(6, 4, a / 2, -Z)
    put(7, 1, -a / 2, 1 / varpi0, True)
    put(7, 4, a / 2, -Z / varpi0, True)
    return rows


def _reduced_stack(varpi0, K, consts):
    det = np.linalg.det(_assemble_stack(varpi0, K, consts))
    reduced = np.exp(1j * K * consts.config.a) * det
    assert np.all(np.abs(reduced.imag) <= 1e-10 * (1 + np.abs(det))), \
        f'reduced determinant is not real at K={K}: assembly of M is inconsistent'
    return reduced.real


def reduced_determinant(varpi0, K, consts):
    """ Re(e^{iKa} det M) = 2 A cos(Ka) + B """
    return float(_reduced_stack(varpi0, K, consts)[0])


def dispersion_coefficients(varpi0, consts):
    """ (A, B) of the reduced determinant 2 A cos(Ka) + B at varpi0 """
    a = consts.config.a
    f0 = _reduced_stack(varpi0, 0.0, consts)
    fq = _reduced_stack(varpi0, math.pi / (2 * a), consts)
    A = (f0 - fq) / 2
    if np.ndim(varpi0) == 0:
        return float(A[0]), float(fq[0])
    return A, fq


def slope_amplitude(omega0, K, consts):
    """
    |2 a A| / |df/domega| at omega0, in m/s

    The group velocity of the branch through (K, omega0) is this amplitude times |sin Ka|.
    """
    d1 = consts.d1
    a = consts.config.a
    varpi = omega0 / d1
    A, _ = dispersion_coefficients(varpi, consts)
    h = 1e-6 * varpi
    fp, fm = _reduced_stack(np.array([varpi + h, varpi - h]), K, consts)
    dfdomega = (fp - fm) / (2 * h * d1)
    if dfdomega == 0:
        return math.inf
    return abs(2 * a * A) / abs(dfdomega)


def classify(amplitude, consts, slope_tol=SLOPE_TOL, propagating_tol=PROPAGATING_TOL):
    if amplitude < slope_tol * consts.d1:
        return BranchClass.Standing
    if amplitude > propagating_tol * consts.d1:
        return BranchClass.Propagating
    return BranchClass.Unclassified


def _tangent_root(fun, lo, hi, sign):
    """ Minimum of sign*f on [lo, hi], where f keeps its sign """
    res = minimize_scalar(lambda w: sign * fun(w), bounds=(lo, hi), method='bounded',
                          options={'xatol': 1e-12 * hi})
    return res.x, abs(res.fun)


def _odd_multiplicity(fun, root, h):
    """ 3 if f flattens like (w - root)^3 around a sign change, else 1 """
    near = abs(fun(root + h)) + abs(fun(root - h))
    far = abs(fun(root + 2*h)) + abs(fun(root - 2*h))
    if far == 0:
        return 1
    return 3 if near / far < TRIPLE_RATIO else 1


def find_branches(K, omega_range, consts, root_tol=1e-8, points_per_spacing=2000,
                  slope_tol=SLOPE_TOL, propagating_tol=PROPAGATING_TOL):
    """
    All roots of the reduced determinant in (0, omega_max] at Bloch parameter K

    Parameters:
        K: float
        omega_range: float or (float, float)
            omega_max, or a pair whose second entry is omega_max
        consts: DerivedConstants
        root_tol: float
            Bound on |f(root)| relative to the largest |f| seen by the scan
        points_per_spacing: int
            Scan density per expected branch spacing pi*min(d)/a

    Folded branches meet at K = 0 and K = pi/a. A tangential root, where f touches zero
    without changing sign, is found from the local minima of |f| and listed twice. A sign
    change where f is flat is a triple root and is listed three times. Multiple roots are
    Unclassified since their slope is undefined. The trivial root omega = 0 is never
    reported.
    """
    omega_max = omega_range[1] if np.ndim(omega_range) else omega_range
    d1 = consts.d1
    a = consts.config.a
    spacing = math.pi * min(consts.d) / a
    step = spacing / points_per_spacing
    if omega_max <= step:
        return []

    n = int(math.ceil((omega_max - step) / step)) + 1
    omega = np.linspace(step, omega_max, n)
    f = _reduced_stack(omega / d1, K, consts)
    scale = np.max(np.abs(f))
    if scale == 0:
        raise RootFindingError(f'reduced determinant vanishes on the whole scan at K={K}')

    fun = lambda w: reduced_determinant(w / d1, K, consts)
    roots = []
    for i in np.nonzero(np.sign(f[:-1]) * np.sign(f[1:]) <= 0)[0]:
        if f[i] == 0 and i > 0:
            # already bracketed by the previous interval
            continue
        lo, hi = omega[i], omega[i + 1]
        if f[i] == 0:
            root = lo
        elif f[i + 1] == 0:
            root = hi
        else:
            root = brentq(fun, lo, hi, xtol=1e-13 * hi, rtol=4 * np.finfo(float).eps)
        residual = abs(fun(root)) / scale
        if residual > root_tol:
            warn(f'root near {root:.6g} rad/s at K={K:.6g} has residual {residual:.3g}, dropped.')
            continue
        roots.append([root, residual, 1])

    # tangential roots: local minima of |f| between scan points of one sign
    absf = np.abs(f)
    candidates = (absf[1:-1] <= absf[:-2]) & (absf[1:-1] <= absf[2:]) & (absf[1:-1] < 1e-3 * scale)
    for i in np.nonzero(candidates)[0] + 1:
        sign = np.sign(f[i])
        if sign == 0 or np.sign(f[i - 1]) != sign or np.sign(f[i + 1]) != sign:
            continue
        root, value = _tangent_root(fun, omega[i - 1], omega[i + 1], sign)
        residual = value / scale
        if residual > root_tol or root < 2 * step:
            continue
        roots.append([root, residual, 2])
    roots.sort()

    h = 10 * step
    for j, entry in enumerate(roots):
        root = entry[0]
        isolated = all(abs(other[0] - root) > 2 * h for k, other in enumerate(roots) if k != j)
        if entry[2] == 1 and isolated and root > 2 * h:
            entry[2] = _odd_multiplicity(fun, root, h)
        if entry[2] > 1:
            kind = {2: 'double', 3: 'triple'}[entry[2]]
            warn(f'{kind} root at {root:.6g} rad/s at K={K:.6g}, branches are crossing.')
        elif j and root - roots[j - 1][0] < h:
            warn(f'double root near {root:.6g} rad/s at K={K:.6g}, branches are crossing.')

    points = []
    for root, residual, multiplicity in roots:
        if multiplicity == 1:
            amplitude = slope_amplitude(root, K, consts)
            classification = classify(amplitude, consts, slope_tol, propagating_tol)
        else:
            amplitude, classification = math.nan, BranchClass.Unclassified
        for _ in range(multiplicity):
            points.append(BranchPoint(
                K=K, omega0=root, varpi0=root / d1, classification=classification,
                residual=residual, slope=amplitude, branch_index=len(points),
            ))
    return points


def crack_sensitivity(point, consts, rel_step=1e-5):
    """
    |d ln omega0 / d ln l| of the branch through point

    Implicit differentiation of f(omega, l) = 0 at fixed K. Standing waves on the crack
    faces give values near 1, modes that do not feel the crack give values near 0.
    Multiple roots give inf.
    """
    l = consts.config.l
    varpi = point.varpi0

    def at_length(length):
        cfg = replace(consts.config, l=length)
        return replace(consts, xA=-length / 2, xB=length / 2, config=cfg)

    dl = rel_step * l
    longer, shorter = at_length(l + dl), at_length(l - dl)
    df_dl = (reduced_determinant(varpi, point.K, longer)
             - reduced_determinant(varpi, point.K, shorter)) / (2 * dl)
    dw = rel_step * point.omega0
    df_domega = (reduced_determinant((point.omega0 + dw) / consts.d1, point.K, consts)
                 - reduced_determinant((point.omega0 - dw) / consts.d1, point.K, consts)) / (2 * dw)
    if df_domega == 0:
        return math.inf
    return abs(l / point.omega0 * df_dl / df_domega)


def sweep_branches(k_values, omega_max, consts, **kwargs):
    points = []
    for K in k_values:
        points += find_branches(K, omega_max, consts, **kwargs)
    return points


def null_vector(point, consts, null_tol=1e-8):
    M = assemble_M(point.varpi0, point.K, consts).entries
    _, s, Vh = np.linalg.svd(M)
    if s[-1] > null_tol * s[0]:
        raise NullVectorError(
            f'no null direction at K={point.K:.6g}, omega0={point.omega0:.6g}: '
            f'smallest singular value {s[-1]:.3g} against norm {s[0]:.3g}'
        )
    if s[-2] < 1e3 * s[-1]:
        warn(f'degenerate root at K={point.K:.6g}, omega0={point.omega0:.6g}: '
             f'singular values {s[-2]:.3g} and {s[-1]:.3g}.')
    v = Vh[-1].conj()
    v = v / v[np.argmax(np.abs(v))]
    return ModeCoefficients(0, v, point.K, point.omega0)


def segment_bounds(m, consts):
    a = consts.config.a
    return {
        1: (-a / 2, consts.xA),
        2: (consts.xA, consts.xB),
        3: (consts.xA, consts.xB),
        4: (consts.xB, a / 2),
    }[m]


def check_segment(m, x, consts):
    if m not in (1, 2, 3, 4):
        raise SegmentError(f'segment {m} does not exist, expected 1 to 4')
    lo, hi = segment_bounds(m, consts)
    tol = 1e-12 * consts.config.a
    x = np.asarray(x, dtype=float)
    if np.any(x < lo - tol) or np.any(x > hi + tol):
        raise SegmentError(f'x outside segment {m} = [{lo:.6g}, {hi:.6g}]')


def eval_mode0(coeffs, m, x, consts, derivative=False):
    check_segment(m, x, consts)
    A, B = coeffs.entries[2*(m - 1)], coeffs.entries[2*m - 1]
    k = coeffs.omega0 / consts.d[m - 1]
    x = np.asarray(x, dtype=float)
    if derivative:
        return k * (A * np.cos(k * x) - B * np.sin(k * x))
    return A * np.sin(k * x) + B * np.cos(k * x)


def derivative_jump(coeffs, x, consts):
    """ v2'(x) - v3'(x) at a crack tip """
    if not any(math.isclose(x, tip, abs_tol=1e-12 * consts.config.a) for tip in (consts.xA, consts.xB)):
        raise SegmentError(f'derivative jump is defined at the crack tips only, got x={x}')
    return complex(eval_mode0(coeffs, 2, x, consts, True) - eval_mode0(coeffs, 3, x, consts, True))
