"""
Interface constants alpha_P and alpha_I.

Both constants enter the first order junction conditions at the crack tips. They are
defined by improper integrals over (0, inf) of functions that are regular at the origin
but whose naive expressions cancel catastrophically there, and that either decay
exponentially (perfect bond) or like t^-3 (imperfect bond) at infinity.

The default scheme integrates (t_min, t_max) with adaptive Gauss-Kronrod quadrature
(scipy.integrate.quad), uses the t -> 0 limit of the integrand on (0, t_min] and adds a
tail beyond t_max. A double exponential scheme on the mapped range (t_min, inf) is
available as an independent cross-check.
"""
import math
from dataclasses import dataclass
import numpy as np
from scipy import integrate
from scipy.special import xlogy
from bfstrip import *
from bfstrip.model import ConfigError, InterfaceKind, Violation


class QuadratureError(BfstripError):
    """
    Raised when a quadrature does not reach its tolerance

    Parameters:
        message: str
        value: float
            Partial value of the integral
        error: float
            Achieved error estimate
    """
    def __init__(self, message, value, error):
        self.value = value
        self.error = error
        super().__init__(f'{message} (partial value {value:.17g}, error estimate {error:.3g})')


@dataclass(frozen=True)
class QuadratureSettings:
    abs_tol: float = 1e-13
    rel_tol: float = 1e-10
    t_min: float = 1e-4
    t_max: float = 200.0
    max_subdivisions: int = 1000000
    scheme: str = 'adaptive'

    def violations(self):
        found = []
        if not 0 < self.t_min < 1:
            found.append(Violation('quadrature.t_min', '0 < t_min < 1', self.t_min))
        if not self.t_max > 1:
            found.append(Violation('quadrature.t_max', 't_max > 1', self.t_max))
        if not self.abs_tol > 0:
            found.append(Violation('quadrature.abs_tol', 'abs_tol > 0', self.abs_tol))
        if not self.rel_tol > 0:
            found.append(Violation('quadrature.rel_tol', 'rel_tol > 0', self.rel_tol))
        if not self.max_subdivisions >= 1:
            found.append(Violation('quadrature.max_subdivisions', 'max_subdivisions >= 1', self.max_subdivisions))
        if self.scheme not in ('adaptive', 'tanh-sinh'):
            found.append(Violation('quadrature.scheme', "scheme in {'adaptive', 'tanh-sinh'}", self.scheme))
        return found


@dataclass(frozen=True)
class AlphaResult:
    value: float
    estimated_error: float
    kind: InterfaceKind

    def __float__(self):
        return float(self.value)


# Series-safe elementary functions

def _sinhc_m1(y):
    """ sinh(y)/y - 1, accurate for small |y| """
    y = np.asarray(y, dtype=float)
    out = np.empty_like(y)
    small = np.abs(y) < 0.5
    ys = y[small]**2
    out[small] = ys * (1/6 + ys * (1/120 + ys * (1/5040 + ys * (1/362880 + ys / 39916800))))
    yl = y[~small]
    out[~small] = np.sinh(yl) / yl - 1
    return out


def _xcoth_m1(x):
    """ x*coth(x) - 1, accurate for small |x| """
    x = np.asarray(x, dtype=float)
    out = np.empty_like(x)
    small = np.abs(x) < 0.5
    xs = x[small]**2
    out[small] = xs * (1/3 + xs * (-1/45 + xs * (2/945 + xs * (-1/4725 + xs * 2/93555))))
    xl = x[~small]
    out[~small] = xl / np.tanh(xl) - 1
    return out


def _scalar_or_array(fn):
    def wrapper(t, *args):
        scalar = np.ndim(t) == 0
        out = fn(np.atleast_1d(np.asarray(t, dtype=float)), *args)
        return float(out[0]) if scalar else out
    wrapper.__name__ = fn.__name__
    wrapper.__doc__ = fn.__doc__
    return wrapper


# Perfect interface

@_scalar_or_array
def perfect_integrand(t, mu_star, H_star):
    """
    f(t) = (H* - tanh(tH*) coth t) / ((sinh t + mu* sinh(tH*)) t), for t > 0
    """
    out = np.empty_like(t)
    small = t <= 1

    # H* - tanh(tH*)coth(t) rewritten through sinh(y)/y - 1 to remove the cancellation
    ts = t[small]
    jump = _sinhc_m1(ts * (1 - H_star)) - _sinhc_m1(ts * (1 + H_star))
    num = (1 - H_star**2) * ts * jump / 2
    den = np.cosh(ts * H_star) * np.sinh(ts) * ts * (np.sinh(ts) + mu_star * np.sinh(ts * H_star))
    out[small] = num / den

    # Scaled by e^-t so that nothing overflows for large t
    tl = t[~small]
    num = H_star - np.tanh(tl * H_star) / np.tanh(tl)
    scaled = -np.expm1(-2 * tl) + mu_star * (np.exp(-tl * (1 - H_star)) - np.exp(-tl * (1 + H_star)))
    out[~small] = 2 * np.exp(-tl) * num / (tl * scaled)
    return out


def perfect_integrand_limit(mu_star, H_star):
    """ f(0+) """
    return -H_star * (1 - H_star**2) / (3 * (1 + mu_star * H_star))


def perfect_log_term(H_star):
    """ ln[((1+H*)/2)^((1+H*)/2) ((1-H*)/2)^((1-H*)/2)] """
    b = (1 + H_star) / 2
    c = (1 - H_star) / 2
    return float(xlogy(b, b) + xlogy(c, c))


# Imperfect interface

def _imperfect_parameters(consts):
    mu, H, ks = consts.mu_star, consts.H_star, consts.kappa_star
    p = 2 / (ks * (1 + mu))
    q = 2 / (ks * (1 - mu))
    b = (1 + H) / 2
    c = (1 - H) / 2
    return p, q, b, c, consts.lambda_star**2


def imperfect_g(t, consts):
    """ g(t) = t (t + p coth(bt) + q coth(ct)) / (lambda*^2 + t^2), direct evaluation """
    p, q, b, c, lam2 = _imperfect_parameters(consts)
    t = np.asarray(t, dtype=float)
    return t * (t + p / np.tanh(b * t) + q / np.tanh(c * t)) / (lam2 + t**2)


def imperfect_g_limit(consts):
    """ g(0+), equal to one when lambda*^2 = p/b + q/c """
    p, q, b, c, lam2 = _imperfect_parameters(consts)
    return (p / b + q / c) / lam2


@_scalar_or_array
def imperfect_integrand(t, consts):
    """ ln g(t) / t^2, with g - 1 formed without cancellation """
    p, q, b, c, lam2 = _imperfect_parameters(consts)
    g_m1 = (p / b * _xcoth_m1(b * t) + q / c * _xcoth_m1(c * t)) / (lam2 + t**2)
    return np.log1p(g_m1) / t**2


def imperfect_integrand_limit(consts):
    p, q, b, c, lam2 = _imperfect_parameters(consts)
    return (p * b + q * c) / (3 * lam2)


def imperfect_tail(consts, t_max):
    """
    Integral of ln g / t^2 over (t_max, inf) with coth replaced by one

    Returns the value and a bound on the neglected, exponentially small remainder.
    """
    p, q, b, c, lam2 = _imperfect_parameters(consts)
    s = p + q
    lam = math.sqrt(lam2)
    U = 1 / t_max
    su = s * U
    upper = ((1 + su) * math.log1p(su) - su) / s
    lower = U * math.log1p(lam2 * U**2) - 2 * U + 2 / lam * math.atan(lam * U)
    remainder = 2 * s * math.exp(-2 * min(b, c) * t_max) / t_max**2
    return upper - lower, remainder


# Quadrature schemes

def _adaptive(fn, q):
    result = integrate.quad(
        fn, q.t_min, q.t_max, epsabs=q.abs_tol, epsrel=q.rel_tol,
        limit=q.max_subdivisions, full_output=1,
    )
    value, abserr = result[0], result[1]
    if len(result) > 3:
        raise QuadratureError(f'adaptive quadrature failed: {result[3].strip()}', value, abserr)
    return value, abserr


def _exp_sinh(fn, q, tau_max=4.0, max_levels=12):
    """
    Double exponential quadrature of fn over (t_min, inf)

    Uses t = t_min + exp(pi/2 sinh(tau)), halving the step in tau until two successive
    levels agree.
    """
    def nodes(tau):
        e = np.exp(np.pi / 2 * np.sinh(tau))
        return q.t_min + e, np.pi / 2 * np.cosh(tau) * e

    h = 0.5
    tau = np.arange(-tau_max, tau_max + h / 2, h)
    t, w = nodes(tau)
    total = np.sum(w * fn(t))
    estimate = h * total
    for level in range(max_levels):
        h /= 2
        tau = np.arange(-tau_max + h, tau_max, 2 * h)
        t, w = nodes(tau)
        total += np.sum(w * fn(t))
        refined = h * total
        change = abs(refined - estimate)
        estimate = refined
        if level >= 2 and change <= max(q.abs_tol, q.rel_tol * abs(estimate)):
            return estimate, change
    raise QuadratureError('tanh-sinh quadrature did not converge', estimate, change)


def _integrate(fn, f0, q, tail=None):
    """
    Integral of fn over (0, inf): limit value on (0, t_min], quadrature beyond.

    tail, if given, is a callable returning (value, error) of the range beyond t_max,
    otherwise fn must decay fast enough to be negligible there.
    """
    head = f0 * q.t_min
    head_error = q.t_min**3 * (abs(f0) + 1)
    if q.scheme == 'tanh-sinh':
        body, body_error = _exp_sinh(fn, q)
        return head + body, head_error + body_error
    body, body_error = _adaptive(fn, q)
    rest, rest_error = tail() if tail else (0.0, 0.0)
    return head + body + rest, head_error + body_error + rest_error


def _checked(q):
    violations = q.violations()
    if violations:
        raise ConfigError(violations)


def alpha_perfect(consts, q=None):
    q = q or QuadratureSettings()
    _checked(q)
    if consts.kind is not InterfaceKind.Perfect:
        raise ConfigError('alpha_perfect requires a perfect interface (kappa = 0)')
    cfg = consts.config
    mu, H = consts.mu_star, consts.H_star
    scale = (cfg.H1 + cfg.H2) / math.pi

    if mu == 0 or H == 0:
        # f vanishes identically when H* = 0, the integral drops out when mu* = 0
        integral, error = 0.0, 0.0
    else:
        fn = lambda t: perfect_integrand(t, mu, H)
        # f decays like e^-t, beyond t_max it is far below any tolerance
        tail = lambda: (0.0, 4 * math.exp(-q.t_max * (1 - abs(H))) / q.t_max)
        integral, error = _integrate(fn, perfect_integrand_limit(mu, H), q, tail)

    value = scale * (mu * integral - perfect_log_term(H))
    return AlphaResult(value, scale * abs(mu) * error, InterfaceKind.Perfect)


def alpha_imperfect(consts, q=None):
    q = q or QuadratureSettings()
    _checked(q)
    cfg = consts.config
    if not cfg.kappa > 0:
        raise ConfigError([Violation('kappa', 'kappa > 0 for an imperfect interface', cfg.kappa)])

    fn = lambda t: imperfect_integrand(t, consts)
    tail = lambda: imperfect_tail(consts, q.t_max)
    integral, error = _integrate(fn, imperfect_integrand_limit(consts), q, tail)

    scale = cfg.H1 + cfg.H2
    value = scale * (integral / math.pi + 1 / consts.lambda_star)
    return AlphaResult(value, scale * error / math.pi, InterfaceKind.Imperfect)


def alpha(consts, q=None):
    """ alpha_P or alpha_I, depending on the interface of the configuration """
    if consts.kind is InterfaceKind.Imperfect:
        return alpha_imperfect(consts, q)
    return alpha_perfect(consts, q)
