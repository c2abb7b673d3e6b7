"""Shared fixtures: the production emitter parameters and preset runs.

Preset simulations are expensive (seconds each), so the acceptance tests
share one cached run per preset via the session-scoped ``preset_runs``
factory defined here.
"""

import pathlib

import pytest

from nanolayer.quantum import EmitterParams
from nanolayer.units import CONSTANTS


@pytest.fixture(scope="session")
def params() -> EmitterParams:
    """Production emitter: 2 eV transition, 4 D dipole, 10/1 THz rates."""
    return EmitterParams(
        omega_b=2.0 * CONSTANTS.ev / CONSTANTS.hbar,
        mu_x=4.0 * CONSTANTS.debye,
        gamma_star=1e13,
        big_gamma=1e12,
    )


@pytest.fixture(scope="session")
def preset_runs(tmp_path_factory):
    """Factory returning (bundle-dict, out_dir) for a preset, cached per
    session so every acceptance criterion reuses the same four runs."""
    from nanolayer.scenario import execute, preset

    cache: dict[str, tuple] = {}
    base = tmp_path_factory.mktemp("preset-runs")

    def get(name: str):
        if name not in cache:
            out = base / name
            bundle = execute(preset(name), out)
            cache[name] = (bundle, pathlib.Path(out))
        return cache[name]

    return get
