"""Physical constants and the unit conversions used by the simulator.

All user-facing parameters are given in spectroscopic units (eV, Debye,
THz, fs, nm, V/m); the engine runs in SI. Conversion happens only at
configuration parse time and when writing outputs. THz rates are
interpreted as 1e12 s^-1 directly, with no 2*pi factor: they enter the
equations of motion as exponential decay rates, not as spectroscopic
frequencies.

Not a general units library: only the conversions this simulator needs.
"""

from __future__ import annotations

from dataclasses import dataclass


class DimensionMismatchError(ValueError):
    """Raised when a conversion is requested between incompatible units."""


@dataclass(frozen=True)
class PhysicalConstants:
    """Fundamental constants (CODATA 2018), SI.

    mu0 is derived from c and eps0 so that c**2 * eps0 * mu0 == 1 holds to
    machine precision; the derived value agrees with CODATA to ~1e-10.
    """

    c: float = 299792458.0            # vacuum light speed (m/s)
    eps0: float = 8.8541878128e-12    # vacuum permittivity (F/m)
    hbar: float = 1.054571817e-34     # reduced Planck constant (J*s)
    debye: float = 3.33564e-30        # 1 D in C*m
    ev: float = 1.602176634e-19       # 1 eV in J

    @property
    def mu0(self) -> float:
        """Vacuum permeability (H/m), derived from c and eps0."""
        return 1.0 / (self.c ** 2 * self.eps0)

    def __post_init__(self):
        for name in ("c", "eps0", "hbar", "debye", "ev"):
            if getattr(self, name) <= 0:
                raise ValueError(f"constant {name} must be positive")


CONSTANTS = PhysicalConstants()

# unit tag -> (dimension, factor to the dimension's SI base unit)
_UNITS = {
    "J": ("energy", 1.0),
    "eV": ("energy", CONSTANTS.ev),
    "rad/s": ("angular_frequency", 1.0),
    "1/s": ("rate", 1.0),
    "THz": ("rate", 1e12),
    "s": ("time", 1.0),
    "fs": ("time", 1e-15),
    "m": ("length", 1.0),
    "nm": ("length", 1e-9),
    "um": ("length", 1e-6),
    "C*m": ("dipole", 1.0),
    "D": ("dipole", CONSTANTS.debye),
    "V/m": ("field", 1.0),
}

# Explicit cross-dimension bridges: factor applied to the SI base value of
# the source dimension to obtain the SI base value of the target dimension.
# Energy <-> angular frequency via hbar (E = hbar * omega).
_BRIDGES = {
    ("energy", "angular_frequency"): 1.0 / CONSTANTS.hbar,
    ("angular_frequency", "energy"): CONSTANTS.hbar,
}


def convert(value: float, from_unit: str, to_unit: str) -> float:
    """Convert ``value`` between unit tags.

    eV <-> rad/s (energy to angular frequency via hbar) is the only
    cross-dimension conversion and is applied explicitly.
    """
    try:
        dim_from, f_from = _UNITS[from_unit]
    except KeyError:
        raise DimensionMismatchError(f"unknown unit tag {from_unit!r}") from None
    try:
        dim_to, f_to = _UNITS[to_unit]
    except KeyError:
        raise DimensionMismatchError(f"unknown unit tag {to_unit!r}") from None

    base = value * f_from
    if dim_from != dim_to:
        bridge = _BRIDGES.get((dim_from, dim_to))
        if bridge is None:
            raise DimensionMismatchError(
                f"cannot convert {from_unit} ({dim_from}) to {to_unit} ({dim_to})"
            )
        base = base * bridge
    return base / f_to


__all__ = ["PhysicalConstants", "CONSTANTS", "convert", "DimensionMismatchError"]
