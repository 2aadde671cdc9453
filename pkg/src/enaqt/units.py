"""Unit constants.

Internally every energy, rate and kernel decay is a frequency in cm^-1 with
hbar = 1, so time is measured in cm (1/cm^-1).  Interfaces take site energies
in cm^-1, temperatures in K, rates in ps^-1 and distances in Angstrom.

Rates and times in ps are mapped onto the internal scale with one of two
conventions:

``linear``
    1 cm^-1 corresponds to c = 0.0299792458 ps^-1 (the ordinary-frequency
    mapping; 1 cm^-1 <-> 33.36 ps).  Default.
``angular``
    1 cm^-1 corresponds to 2*pi*c = 0.188365 rad/ps.
"""

from __future__ import annotations

KB_CM1_PER_K = 0.695035
"""Boltzmann constant in cm^-1 / K."""

_PS_INV_PER_CM1 = {
    "linear": 0.0299792458,
    "angular": 0.188365,
}

DEFAULT_CONVENTION = "linear"
CONVENTIONS = tuple(_PS_INV_PER_CM1)


def _factor(convention: str) -> float:
    try:
        return _PS_INV_PER_CM1[convention]
    except KeyError:
        raise ValueError(
            f"unknown time convention {convention!r}; expected one of {CONVENTIONS}"
        ) from None


def rate_to_internal(rate_ps: float, convention: str = DEFAULT_CONVENTION) -> float:
    """Rate in ps^-1 -> internal frequency units (cm^-1)."""
    return rate_ps / _factor(convention)


def time_to_internal(t_ps, convention: str = DEFAULT_CONVENTION):
    """Time in ps -> internal time units (cm)."""
    return t_ps * _factor(convention)


def time_from_internal(t, convention: str = DEFAULT_CONVENTION):
    return t / _factor(convention)


def kT(temperature_K: float) -> float:
    """Thermal energy k_B T in cm^-1."""
    return KB_CM1_PER_K * temperature_K
