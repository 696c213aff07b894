import hashlib
from bfstrip import *


def num2string(val, digits=17):
    """ Format a float so that it reads back bit-identically """
    if val is None:
        return ''
    if isinstance(val, str):
        return val
    return f'{val:.{digits}g}'


def to_si(value, unit):
    """
    Convert value to a float in SI units.

    Parameters:
        value: number or str
            Plain numbers are taken as SI already, strings such as '82 GPa' are parsed by pint
        unit: str
            Unit the value is expected in, e.g. 'Pa', 'kg/m^3', 'm'
    """
    if isinstance(value, (int, float)) and not isinstance(value, bool):
        return float(value)
    quantity = Q_(value)
    if quantity.dimensionless:
        return float(quantity.to('dimensionless').magnitude)
    return float(quantity.to(unit or 'dimensionless').magnitude)


def digest(text):
    """ Short sha256 digest of text """
    return hashlib.sha256(text.encode('utf-8')).hexdigest()[:16]


# File handling

def cat(filename):
    """ Get content of file """

    try:
        with open(filename) as f:
            content = f.read()
        return content
    except FileNotFoundError:
        return None
