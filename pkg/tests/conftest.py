from pathlib import Path
import pytest
from bfstrip.model import MATERIALS, Material, StripConfig, derive_constants

CONFIGS = Path(__file__).resolve().parent.parent / 'configs'


def strip(upper, lower, t1=0.075, t2=0.075, l=2.0, kappa_star=None):
    cfg = StripConfig.from_thicknesses(upper, lower, t1, t2, epsilon=0.025, a=6.0, l=l)
    return cfg.with_kappa_star(kappa_star) if kappa_star else cfg


@pytest.fixture
def configs_dir():
    return CONFIGS


@pytest.fixture
def iron_cfg():
    return strip(MATERIALS['iron'], MATERIALS['iron'])


@pytest.fixture
def iron_consts(iron_cfg):
    return derive_constants(iron_cfg)


@pytest.fixture
def feal_cfg():
    return strip(MATERIALS['aluminium'], MATERIALS['iron'])


@pytest.fixture
def feal_consts(feal_cfg):
    return derive_constants(feal_cfg)


@pytest.fixture
def feal_asym_consts():
    return derive_constants(strip(MATERIALS['aluminium'], MATERIALS['iron'], 0.01, 0.14))


@pytest.fixture
def feal_epoxy_consts():
    return derive_constants(strip(MATERIALS['aluminium'], MATERIALS['iron'], kappa_star=2.88))


@pytest.fixture
def almg_cfg():
    return strip(MATERIALS['aluminium'], MATERIALS['magnesium'])


@pytest.fixture
def equal_speed_consts():
    """ Two layers of different stiffness but equal wavespeed """
    iron = MATERIALS['iron']
    half = Material(iron.shear_modulus / 2, iron.density / 2, 'half iron')
    return derive_constants(strip(iron, half))
