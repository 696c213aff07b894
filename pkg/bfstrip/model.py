"""
Physical description of a cracked bi-material strip and the constants derived from it.

The strip has an upper layer of material 1 with thickness eps*H1 and a lower layer of
material 2 with thickness eps*H2. One elementary cell has length a and holds a centred
interfacial crack of length l. The interface outside the crack is perfect (kappa = 0)
or imperfect (kappa > 0).
"""
import enum
import math
from dataclasses import dataclass, field, replace
from bfstrip import *


class InterfaceKind(enum.Enum):
    Perfect = 'perfect'
    Imperfect = 'imperfect'


class ConfigError(BfstripError):
    """
    Raised for an invalid strip or run configuration

    Parameters:
        violations: list of Violation or str
            Every problem found, reported one per line
    """
    def __init__(self, violations):
        if isinstance(violations, str):
            violations = [violations]
        self.violations = list(violations)
        lines = '\n'.join(f'    {v}' for v in self.violations)
        super().__init__(f'Invalid configuration:\n{lines}')


@dataclass(frozen=True)
class Violation:
    field: str
    constraint: str
    actual: object

    def __str__(self):
        return f'{self.field}: must satisfy {self.constraint} (got {self.actual})'


@dataclass(frozen=True)
class Material:
    """
    Isotropic elastic material in anti-plane shear

    Parameters:
        shear_modulus: float
            Shear modulus in Pa
        density: float
            Mass density in kg/m^3
        name: str
            Used in reports only
    """
    shear_modulus: float
    density: float
    name: str = ''

    @property
    def wavespeed(self):
        return math.sqrt(self.shear_modulus / self.density)


MATERIALS = {
    'iron': Material(82e9, 7860.0, 'iron'),
    'magnesium': Material(17e9, 1738.0, 'magnesium'),
    'aluminium': Material(26e9, 2700.0, 'aluminium'),
    'epoxy': Material(2.5e9, 1850.0, 'epoxy'),
    # Highly imperfect bond: epoxy with its shear modulus divided by ten
    'soft_epoxy': Material(2.5e8, 1850.0, 'soft_epoxy'),
}


@dataclass(frozen=True)
class StripConfig:
    """
    Parameters:
        upper: Material
            Material 1, occupying 0 < y < eps*H1
        lower: Material
            Material 2, occupying -eps*H2 < y < 0
        H1, H2: float
            Unscaled layer thicknesses
        epsilon: float
            Thinness parameter
        a: float
            Cell length in m
        l: float
            Crack length in m
        kappa: float
            Interface imperfection, the displacement jump is eps*kappa times the traction
    """
    upper: Material
    lower: Material
    H1: float
    H2: float
    epsilon: float
    a: float
    l: float
    kappa: float = 0.0

    @classmethod
    def from_thicknesses(cls, upper, lower, thickness_upper, thickness_lower, epsilon, a, l, kappa=0.0):
        """ Build a config from the physical layer thicknesses eps*H1, eps*H2 """
        return cls(upper, lower, thickness_upper / epsilon, thickness_lower / epsilon, epsilon, a, l, kappa)

    @property
    def kind(self):
        return interface_kind(self)

    @property
    def thickness_upper(self):
        return self.epsilon * self.H1

    @property
    def thickness_lower(self):
        return self.epsilon * self.H2

    def swapped(self):
        """ Mirror the strip about y = 0, exchanging materials and thicknesses """
        return replace(self, upper=self.lower, lower=self.upper, H1=self.H2, H2=self.H1)

    def with_kappa_star(self, kappa_star):
        return replace(self, kappa=kappa_from_kappa_star(kappa_star, self))

    def is_homogeneous_symmetric(self, rtol=1e-12):
        close = lambda x, y: math.isclose(x, y, rel_tol=rtol)
        return (close(self.upper.shear_modulus, self.lower.shear_modulus)
                and close(self.upper.density, self.lower.density)
                and close(self.H1, self.H2))


@dataclass(frozen=True)
class DerivedConstants:
    """
    Constants of the low dimensional model

    d = (d1, d2, d3, d4) are the wavespeeds of the four segments of a cell: left of the
    crack, upper crack face, lower crack face and right of the crack.
    """
    c1: float
    c2: float
    d1: float
    d2: float
    d3: float
    d4: float
    mu_star: float
    H_star: float
    kappa_star: float
    lambda_star: float
    xA: float
    xB: float
    config: StripConfig = field(repr=False)

    @property
    def d(self):
        return (self.d1, self.d2, self.d3, self.d4)

    @property
    def kind(self):
        return self.config.kind

    @property
    def flux_weights(self):
        """ (mu1*H1, mu2*H2) divided by their sum """
        cfg = self.config
        f1 = cfg.upper.shear_modulus * cfg.H1
        f2 = cfg.lower.shear_modulus * cfg.H2
        return f1 / (f1 + f2), f2 / (f1 + f2)

    @property
    def psi(self):
        w1, w2 = self.flux_weights
        return w1 * self.d1 / self.d2, w2 * self.d1 / self.d3

    def as_dict(self):
        return dict(
            c1=self.c1, c2=self.c2, d1=self.d1, d2=self.d2, d3=self.d3, d4=self.d4,
            mu_star=self.mu_star, H_star=self.H_star,
            kappa_star=self.kappa_star, lambda_star=self.lambda_star,
            xA=self.xA, xB=self.xB,
        )


def interface_kind(cfg):
    return InterfaceKind.Imperfect if cfg.kappa > 0 else InterfaceKind.Perfect


def kappa_from_kappa_star(kappa_star, cfg):
    mu1, mu2 = cfg.upper.shear_modulus, cfg.lower.shear_modulus
    return kappa_star * (cfg.H1 + cfg.H2) / (mu1 + mu2)


def kappa_star_from_kappa(kappa, cfg):
    mu1, mu2 = cfg.upper.shear_modulus, cfg.lower.shear_modulus
    return kappa * (mu1 + mu2) / (cfg.H1 + cfg.H2)


def validate_config(cfg):
    """ Return the list of violated invariants, empty if cfg is valid """
    violations = []

    def check(ok, name, constraint, actual):
        if not (isinstance(actual, (int, float)) and math.isfinite(actual) and ok):
            violations.append(Violation(name, constraint, actual))

    for prefix, mat in (('upper', cfg.upper), ('lower', cfg.lower)):
        check(mat.shear_modulus > 0, f'{prefix}.shear_modulus', 'shear_modulus > 0', mat.shear_modulus)
        check(mat.density > 0, f'{prefix}.density', 'density > 0', mat.density)
    check(cfg.H1 > 0, 'H1', 'H1 > 0', cfg.H1)
    check(cfg.H2 > 0, 'H2', 'H2 > 0', cfg.H2)
    check(cfg.epsilon > 0, 'epsilon', 'epsilon > 0', cfg.epsilon)
    check(cfg.a > 0, 'a', 'a > 0', cfg.a)
    check(cfg.l > 0, 'l', 'l > 0', cfg.l)
    if cfg.l > 0 and cfg.a > 0 and cfg.l >= cfg.a:
        violations.append(Violation('l', 'l < a', cfg.l))
    check(cfg.kappa >= 0, 'kappa', 'kappa >= 0', cfg.kappa)
    return violations


def derive_constants(cfg):
    violations = validate_config(cfg)
    if violations:
        raise ConfigError(violations)

    mu1, mu2 = cfg.upper.shear_modulus, cfg.lower.shear_modulus
    H1, H2 = cfg.H1, cfg.H2
    c1, c2 = cfg.upper.wavespeed, cfg.lower.wavespeed
    flux = mu1 * H1 + mu2 * H2
    d1 = c1 * c2 * math.sqrt(flux / (mu1 * H1 * c2**2 + mu2 * H2 * c1**2))

    if cfg.kappa > 0:
        kappa_star = kappa_star_from_kappa(cfg.kappa, cfg)
        lambda_star = (H1 + H2) * math.sqrt(flux / (mu1 * mu2 * H1 * H2 * cfg.kappa))
    else:
        kappa_star = 0.0
        lambda_star = math.inf

    return DerivedConstants(
        c1=c1, c2=c2, d1=d1, d2=c1, d3=c2, d4=d1,
        mu_star=(mu1 - mu2) / (mu1 + mu2),
        H_star=(H1 - H2) / (H1 + H2),
        kappa_star=kappa_star,
        lambda_star=lambda_star,
        xA=-cfg.l / 2,
        xB=cfg.l / 2,
        config=cfg,
    )
