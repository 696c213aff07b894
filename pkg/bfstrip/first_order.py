"""
First order correction of the eigenfrequencies.

At first order the coefficients solve M A1 = varpi1^2 N A0 + B_A delta_A + B_B delta_B,
where delta is the jump v2' - v3' of the zero order mode at a crack tip. M is singular,
so the right hand side must be orthogonal to the left null vector y of M, which fixes
varpi1^2 = omega1^2/d1^2. The Schur route takes y from an ordered Schur form of M^T,
the eigen route from the inverse eigenvector matrix of M.
"""
import enum
import math
from dataclasses import dataclass
import numpy as np
import scipy.linalg as sla
from bfstrip import *
from bfstrip.zero_order import (
    BranchClass, ModeCoefficients, assemble_M, check_segment, crack_sensitivity, derivative_jump,
    junction_rows, null_vector,
)


class NearDefectiveError(BfstripError):
    pass


class SmallDenominatorError(BfstripError):
    pass


class IllConditionedError(BfstripError):
    pass


class NegativeRadicandError(BfstripError):
    def __init__(self, omega0, omega1_sq, epsilon):
        self.omega0 = omega0
        self.omega1_sq = omega1_sq
        super().__init__(
            f'omega0^2 = {omega0**2:.6g} and eps*omega1^2 = {epsilon*omega1_sq:.6g} '
            'give a negative squared frequency, the correction is outside its validity'
        )


class NotSymmetricError(BfstripError):
    pass


class CorrectionMethod(enum.Enum):
    Schur = 'schur'
    Eigen = 'eigen'
    AnalyticSymmetric = 'analytic'


@dataclass(frozen=True)
class CorrectionResult:
    omega1_sq: float
    method: CorrectionMethod
    conditioning: float
    imag_residual: float


@dataclass(frozen=True)
class FirstOrderMatrix:
    entries: np.ndarray
    K: float
    varpi0: float


@dataclass(frozen=True)
class JunctionVectors:
    B_A: np.ndarray
    B_B: np.ndarray


@dataclass(frozen=True)
class CorrectionOutcome:
    """ Everything computed for one branch point """
    coeffs0: ModeCoefficients
    delta_A: complex
    delta_B: complex
    schur: CorrectionResult
    eigen: CorrectionResult
    omega_corrected: float
    classification: BranchClass = BranchClass.Unclassified
    tip_shift: float = math.nan


NULL_TOL = 1e-10
MIN_CONDITIONING = 10
MAX_EIGEN_CONDITION = 1e12
IMAG_TOL = 1e-8
# Relative frequency shift from moving both crack tips by |alpha|*eps, above which a
# propagating point is a hybrid with the crack face modes
HYBRID_SHIFT_TOL = 5e-6


def particular_trace(omega0, consts):
    """ Values and slopes of x cos(kx)/(2 d_m omega0) and -x sin(kx)/(2 d_m omega0) """
    def trace(m, x):
        dm = consts.d[m - 1]
        k = omega0 / dm
        s, c = math.sin(k * x), math.cos(k * x)
        scale = 2 * dm * omega0
        values = (x * c / scale, -x * s / scale)
        slopes = ((c - k * x * s) / scale, -(s + k * x * c) / scale)
        return values, slopes
    return trace


def assemble_N(varpi0, K, consts):
    d1 = consts.d1
    rows = junction_rows(particular_trace(varpi0 * d1, consts), varpi0, K, consts)
    return FirstOrderMatrix(-d1**2 * rows, K, varpi0)


def junction_vectors(alpha, consts):
    value = float(alpha)
    w1, w2 = consts.flux_weights
    B_A = np.zeros(8, dtype=complex)
    B_B = np.zeros(8, dtype=complex)
    B_B[0], B_B[1] = -value * w2, value * w1
    B_A[3], B_A[4] = value * w2, -value * w1
    return JunctionVectors(B_A, B_B)


def _entries(matrix):
    return matrix.entries if hasattr(matrix, 'entries') else np.asarray(matrix)


def _solvability(y, M, N, A0, jv, delta_A, delta_B, consts, method, conditioning):
    rhs = jv.B_A * delta_A + jv.B_B * delta_B
    a0 = A0.entries
    den = y @ (N @ a0)
    if abs(den) < 1e-12 * np.linalg.norm(N) * np.linalg.norm(a0):
        raise SmallDenominatorError(f'solvability denominator {abs(den):.3g} is too small')
    varpi1_sq = -(y @ rhs) / den
    omega1_sq = consts.d1**2 * varpi1_sq
    imag_residual = abs(omega1_sq.imag) / (1 + abs(omega1_sq))
    if imag_residual > IMAG_TOL:
        warn(f'omega1^2 has imaginary residual {imag_residual:.3g} at K={A0.K:.6g}.')
    return CorrectionResult(float(omega1_sq.real), method, conditioning, imag_residual)


def _conditioning(diagonal, null_tol):
    mags = np.sort(np.abs(diagonal))
    return mags[1] / (mags[0] + null_tol)


def omega1_schur(M, N, A0, jv, delta_A, delta_B, consts, null_tol=NULL_TOL):
    M, N = _entries(M), _entries(N)
    mags = np.sort(np.abs(np.linalg.eigvals(M)))
    cut = math.sqrt(max(mags[0], np.finfo(float).eps * mags[-1]) * mags[1])
    # zero eigenvalue first on the diagonal
    U, Q, sdim = sla.schur(M.T, output='complex', sort=lambda z: abs(z) <= cut)
    conditioning = _conditioning(np.diag(U), null_tol)
    if sdim != 1 or conditioning < MIN_CONDITIONING:
        raise NearDefectiveError(
            f'near-defective root at K={A0.K:.6g}, omega0={A0.omega0:.6g} '
            f'(conditioning {conditioning:.3g}), correction untrusted'
        )
    return _solvability(Q[:, 0], M, N, A0, jv, delta_A, delta_B, consts,
                        CorrectionMethod.Schur, conditioning)


def omega1_eigen(M, N, A0, jv, delta_A, delta_B, consts, null_tol=NULL_TOL):
    M, N = _entries(M), _entries(N)
    w, V = sla.eig(M)
    cond = np.linalg.cond(V)
    if not cond <= MAX_EIGEN_CONDITION:
        raise IllConditionedError(f'eigenvector matrix of M has condition number {cond:.3g}')
    conditioning = _conditioning(w, null_tol)
    if conditioning < MIN_CONDITIONING:
        raise NearDefectiveError(
            f'near-defective root at K={A0.K:.6g}, omega0={A0.omega0:.6g} '
            f'(conditioning {conditioning:.3g}), correction untrusted'
        )
    y = np.linalg.inv(V)[np.argmin(np.abs(w))]
    return _solvability(y, M, N, A0, jv, delta_A, delta_B, consts,
                        CorrectionMethod.Eigen, conditioning)


def omega1_symmetric_analytic(omega0, alpha, consts):
    """
    Closed form -4 pi omega0 alpha d1 / l^2 for a homogeneous strip with equal layers

    omega0 must be the first standing wave pi d1 / l.
    """
    if not consts.config.is_homogeneous_symmetric():
        raise NotSymmetricError('the closed form needs equal materials and equal layer thicknesses')
    l = consts.config.l
    value = -4 * math.pi * omega0 * float(alpha) * consts.d1 / l**2
    return CorrectionResult(value, CorrectionMethod.AnalyticSymmetric, math.inf, 0.0)


def corrected_omega(omega0, omega1_sq, epsilon):
    radicand = omega0**2 + epsilon * omega1_sq
    if radicand <= 0:
        raise NegativeRadicandError(omega0, omega1_sq, epsilon)
    return math.sqrt(radicand)


def first_order_coefficients(M, N, A0, jv, delta_A, delta_B, varpi1_sq, rcond=1e-8):
    """
    Minimum norm solution A1 of the consistent singular first order system

    Singular values below rcond times the largest are dropped, so the component of A1
    along the zero order mode is left out.
    """
    M, N = _entries(M), _entries(N)
    rhs = varpi1_sq * (N @ A0.entries) + jv.B_A * delta_A + jv.B_B * delta_B
    entries = np.linalg.lstsq(M, rhs, rcond=rcond)[0]
    return ModeCoefficients(1, entries, A0.K, A0.omega0)


def eval_mode1(coeffs1, coeffs0, omega1_sq, m, x, consts, derivative=False):
    check_segment(m, x, consts)
    i = 2 * (m - 1)
    A1, B1 = coeffs1.entries[i], coeffs1.entries[i + 1]
    A0, B0 = coeffs0.entries[i], coeffs0.entries[i + 1]
    omega0 = coeffs0.omega0
    dm = consts.d[m - 1]
    k = omega0 / dm
    x = np.asarray(x, dtype=float)
    s, c = np.sin(k * x), np.cos(k * x)
    g = A0 * c - B0 * s
    if derivative:
        dg = -k * (A0 * s + B0 * c)
        return k * (A1 * c - B1 * s) + omega1_sq * (g + x * dg) / (2 * dm * omega0)
    return A1 * s + B1 * c + omega1_sq * x * g / (2 * dm * omega0)


def tip_shift(point, consts, alpha, epsilon):
    """
    Relative change of omega0 when both crack tips move outward by |alpha|*eps

    The first order correction equals this shift with the sign of alpha, so it is known
    before the correction is computed.
    """
    S = crack_sensitivity(point, consts)
    return 2 * abs(float(alpha)) * epsilon / consts.config.l * S


def correct_point(point, consts, alpha, epsilon, null_tol=NULL_TOL, cross_check=True,
                  hybrid_tol=HYBRID_SHIFT_TOL):
    """
    Full first order pipeline at one branch point

    The Schur route is authoritative, the eigen route is a cross-check that is skipped
    with a warning when its eigenvector matrix is ill-conditioned. A point classed
    Propagating whose tip shift exceeds hybrid_tol is reclassified Unclassified: it
    lies where a propagating branch hybridises with a standing wave on the crack faces.
    """
    A0 = null_vector(point, consts)
    M = assemble_M(point.varpi0, point.K, consts)
    N = assemble_N(point.varpi0, point.K, consts)
    jv = junction_vectors(alpha, consts)
    delta_A = derivative_jump(A0, consts.xA, consts)
    delta_B = derivative_jump(A0, consts.xB, consts)

    schur = omega1_schur(M, N, A0, jv, delta_A, delta_B, consts, null_tol)
    eigen = None
    if cross_check:
        try:
            eigen = omega1_eigen(M, N, A0, jv, delta_A, delta_B, consts, null_tol)
        except IllConditionedError as e:
            warn(f'eigen route skipped at K={point.K:.6g}: {e}')
        else:
            if abs(eigen.omega1_sq - schur.omega1_sq) > 1e-8 * (1 + abs(schur.omega1_sq)):
                warn(f'Schur and eigen routes disagree at K={point.K:.6g}, '
                     f'omega0={point.omega0:.6g}: {schur.omega1_sq:.10g} vs {eigen.omega1_sq:.10g}.')

    omega = corrected_omega(point.omega0, schur.omega1_sq, epsilon)
    classification, shift = point.classification, math.nan
    if classification == BranchClass.Propagating:
        shift = tip_shift(point, consts, alpha, epsilon)
        if shift > hybrid_tol:
            log(f'K={point.K:.6g}, omega0={point.omega0:.6g}: tip shift {shift:.3g} marks a '
                'hybrid with the crack face modes, reclassified unclassified.')
            classification = BranchClass.Unclassified
    return CorrectionOutcome(A0, delta_A, delta_B, schur, eigen, omega, classification, shift)
