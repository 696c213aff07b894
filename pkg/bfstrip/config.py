"""
Run configuration, read from YAML.

Example:

    materials:
      upper: iron
      lower: {shear_modulus: 26 GPa, density: 2700 kg/m^3}
    geometry:
      a: 6 m
      l: 2 m
      epsilon: 0.025
      thickness_upper: 0.075 m
      thickness_lower: 0.075 m
    interface:
      kind: imperfect
      kappa_star: 2.88
    sweep:
      k_points: 61
      omega_max: 11000
"""
import math
from dataclasses import dataclass, field, replace
import numpy as np
import yaml
from bfstrip import *
from bfstrip.interface_constants import QuadratureSettings
from bfstrip.model import MATERIALS, ConfigError, Material, StripConfig, Violation, validate_config
from bfstrip.utils import cat, to_si


SECTIONS = {
    'name': None,
    'materials': {'upper', 'lower'},
    'geometry': {'a', 'l', 'epsilon', 'thickness_upper', 'thickness_lower', 'H1', 'H2'},
    'interface': {'kind', 'kappa', 'kappa_star'},
    'sweep': {'k_points', 'omega_max', 'full_zone', 'root_tol', 'points_per_spacing'},
    'quadrature': {'abs_tol', 'rel_tol', 't_min', 't_max', 'max_subdivisions', 'scheme'},
    'grid': {'nx', 'ny1', 'ny2', 'tip_refinement', 'n_lowest', 'grid_scale', 'extrapolate'},
    'output': {'dir', 'plot'},
}


@dataclass(frozen=True)
class SweepSettings:
    k_points: int = 61
    omega_max: float = 11000.0
    full_zone: bool = False
    root_tol: float = 1e-8
    points_per_spacing: int = 2000


@dataclass(frozen=True)
class GridSettings:
    nx: int = 601
    ny1: int = 13
    ny2: int = 13
    tip_refinement: int = 4
    n_lowest: int = 12
    grid_scale: float = 1.0
    extrapolate: bool = True


@dataclass(frozen=True)
class RunConfig:
    strip: StripConfig
    name: str = 'bfstrip'
    sweep: SweepSettings = field(default_factory=SweepSettings)
    quadrature: QuadratureSettings = field(default_factory=QuadratureSettings)
    grid: GridSettings = field(default_factory=GridSettings)
    out_dir: str = 'bfstrip_out'
    plot: bool = False
    text: str = ''

    def k_values(self):
        a = self.strip.a
        if self.sweep.full_zone:
            return np.linspace(-math.pi / a, math.pi / a, self.sweep.k_points)
        return np.linspace(0, math.pi / a, self.sweep.k_points)

    def override(self, out_dir=None, k_points=None, omega_max=None, grid_scale=None):
        """ Apply command line overrides """
        cfg = self
        if out_dir is not None:
            cfg = replace(cfg, out_dir=str(out_dir))
        if k_points is not None:
            cfg = replace(cfg, sweep=replace(cfg.sweep, k_points=k_points))
        if omega_max is not None:
            cfg = replace(cfg, sweep=replace(cfg.sweep, omega_max=omega_max))
        if grid_scale is not None:
            cfg = replace(cfg, grid=replace(cfg.grid, grid_scale=grid_scale))
        violations = cfg.violations()
        if violations:
            raise ConfigError(violations)
        return cfg

    def violations(self):
        found = validate_config(self.strip) + self.quadrature.violations()
        if self.sweep.k_points < 1:
            found.append(Violation('sweep.k_points', 'k_points >= 1', self.sweep.k_points))
        if not self.sweep.omega_max > 0:
            found.append(Violation('sweep.omega_max', 'omega_max > 0', self.sweep.omega_max))
        if not self.sweep.root_tol > 0:
            found.append(Violation('sweep.root_tol', 'root_tol > 0', self.sweep.root_tol))
        if self.grid.n_lowest < 1:
            found.append(Violation('grid.n_lowest', 'n_lowest >= 1', self.grid.n_lowest))
        if not self.grid.grid_scale > 0:
            found.append(Violation('grid.grid_scale', 'grid_scale > 0', self.grid.grid_scale))
        return found


def _check_keys(doc):
    if not isinstance(doc, dict):
        raise ConfigError('configuration must be a mapping of sections')
    for section, value in doc.items():
        if section not in SECTIONS:
            raise ConfigError(f"unknown section '{section}'")
        allowed = SECTIONS[section]
        if allowed is None:
            continue
        if not isinstance(value, dict):
            raise ConfigError(f"section '{section}' must be a mapping")
        for key in value:
            if key not in allowed:
                raise ConfigError(f"unknown key '{key}' in section '{section}'")


def _material(entry, where):
    if isinstance(entry, str):
        if entry not in MATERIALS:
            raise ConfigError(f"{where}: unknown material '{entry}', choose from {', '.join(MATERIALS)}")
        return MATERIALS[entry]
    if isinstance(entry, dict):
        unknown = set(entry) - {'shear_modulus', 'density', 'name'}
        if unknown:
            raise ConfigError(f"unknown key '{sorted(unknown)[0]}' in {where}")
        try:
            return Material(to_si(entry['shear_modulus'], 'Pa'), to_si(entry['density'], 'kg/m^3'),
                            entry.get('name', ''))
        except KeyError as e:
            raise ConfigError(f'{where}: missing {e.args[0]}')
    raise ConfigError(f'{where}: expected a material name or mapping')


def _si(section, key, unit, default=None):
    value = section.get(key, default)
    if value is None:
        return None
    try:
        return to_si(value, unit)
    except Exception as e:
        raise ConfigError(f"cannot read '{key}' = {value!r} as {unit or 'a number'}: {e}")


def parse_config(doc, text=''):
    _check_keys(doc)
    materials = doc.get('materials', {})
    geometry = doc.get('geometry', {})
    interface = doc.get('interface', {})
    if 'upper' not in materials or 'lower' not in materials:
        raise ConfigError("section 'materials' needs both 'upper' and 'lower'")
    upper = _material(materials['upper'], 'materials.upper')
    lower = _material(materials['lower'], 'materials.lower')

    for key in ('a', 'l', 'epsilon'):
        if key not in geometry:
            raise ConfigError(f"section 'geometry' needs '{key}'")
    a = _si(geometry, 'a', 'm')
    l = _si(geometry, 'l', 'm')
    epsilon = _si(geometry, 'epsilon', '')
    if 'H1' in geometry or 'H2' in geometry:
        H1, H2 = _si(geometry, 'H1', '', math.nan), _si(geometry, 'H2', '', math.nan)
        strip = StripConfig(upper, lower, H1, H2, epsilon, a, l)
    else:
        t1 = _si(geometry, 'thickness_upper', 'm', math.nan)
        t2 = _si(geometry, 'thickness_lower', 'm', math.nan)
        strip = StripConfig.from_thicknesses(upper, lower, t1, t2, epsilon, a, l)

    kind = interface.get('kind', 'perfect')
    if kind == 'perfect':
        if interface.get('kappa') or interface.get('kappa_star'):
            raise ConfigError("a perfect interface takes no 'kappa' or 'kappa_star'")
    elif kind == 'imperfect':
        if 'kappa_star' in interface:
            strip = strip.with_kappa_star(_si(interface, 'kappa_star', ''))
        elif 'kappa' in interface:
            strip = replace(strip, kappa=_si(interface, 'kappa', 'm^3/N'))
        else:
            raise ConfigError("an imperfect interface needs 'kappa' or 'kappa_star'")
        if not strip.kappa > 0:
            raise ConfigError([Violation('kappa', 'kappa > 0 for an imperfect interface', strip.kappa)])
    else:
        raise ConfigError(f"interface.kind must be 'perfect' or 'imperfect', got '{kind}'")

    sweep = doc.get('sweep', {})
    quadrature = doc.get('quadrature', {})
    grid = doc.get('grid', {})
    output = doc.get('output', {})
    try:
        cfg = RunConfig(
            strip=strip,
            name=str(doc.get('name', 'bfstrip')),
            sweep=SweepSettings(**{k: (_si(sweep, k, 'rad/s') if k == 'omega_max' else v)
                                   for k, v in sweep.items()}),
            quadrature=QuadratureSettings(**quadrature),
            grid=GridSettings(**grid),
            out_dir=str(output.get('dir', 'bfstrip_out')),
            plot=bool(output.get('plot', False)),
            text=text,
        )
    except TypeError as e:
        raise ConfigError(str(e))

    violations = cfg.violations()
    if violations:
        raise ConfigError(violations)
    return cfg


def load_config(filename):
    text = cat(filename)
    if text is None:
        raise ConfigError(f'cannot read {filename}')
    try:
        doc = yaml.safe_load(text)
    except yaml.YAMLError as e:
        raise ConfigError(f'{filename} is not valid YAML: {e}')
    return parse_config(doc or {}, text)
