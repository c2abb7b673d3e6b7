"""Reading and validating nanolayer run directories.

A run directory is the output of ``nanolayer run``: a ``manifest.json``
with the resolved configuration and its ``config_hash``, a
``diagnostics.json``, and per-backend CSV files whose first line repeats
the config hash.  Everything here is read-only.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

__all__ = [
    "FigureDataError",
    "RunDir",
    "PRESET_KEYS",
    "load_run",
    "discover",
]


class FigureDataError(Exception):
    """Bad, missing, or inconsistent run-directory input."""


# The four standard scenarios are identified by their defining
# configuration values (peak field in V/m, interaction parameter eta).
PRESET_KEYS = {
    "weak-field-weak-int": (1.0, 1.3e-7),
    "weak-field-strong-int": (1.0, 1.3),
    "strong-field-weak-int": (1e10, 1.3e-7),
    "strong-field-strong-int": (1e10, 1.3),
}


def _read_csv(path: Path, expected_hash: str) -> dict[str, np.ndarray]:
    """Read one run CSV into named columns, checking the hash comment."""
    if not path.exists():
        raise FigureDataError(f"missing input file: {path}")
    with open(path) as fh:
        first = fh.readline().strip()
        header = fh.readline().strip()
        try:
            data = np.loadtxt(fh, delimiter=",", ndmin=2)
        except ValueError as exc:
            raise FigureDataError(f"unreadable data in {path}: {exc}") from exc
    prefix = "# config_hash: "
    if not first.startswith(prefix):
        raise FigureDataError(f"{path} has no config-hash line")
    got = first[len(prefix):]
    if got != expected_hash:
        raise FigureDataError(
            f"config hash mismatch in {path}: file has {got}, "
            f"manifest has {expected_hash}")
    names = header.split(",")
    if data.shape[1] != len(names):
        raise FigureDataError(f"{path}: header/data column count mismatch")
    return {name: data[:, i] for i, name in enumerate(names)}


@dataclass(frozen=True)
class RunDir:
    """One validated run directory."""

    path: Path
    preset: str
    config_hash: str
    manifest: dict
    backends: tuple[str, ...]

    def _table(self, kind: str, backend: str,
               columns: tuple[str, ...]) -> dict[str, np.ndarray]:
        cols = _read_csv(self.path / f"{kind}_{backend}.csv",
                         self.config_hash)
        for name in columns:
            if name not in cols:
                raise FigureDataError(
                    f"column '{name}' missing from "
                    f"{self.path / f'{kind}_{backend}.csv'}")
        return cols

    def spectrum(self, backend: str) -> dict[str, np.ndarray]:
        return self._table("spectrum", backend, ("delta", "R", "T", "A"))

    def probe(self, backend: str) -> dict[str, np.ndarray]:
        return self._table("probe", backend,
                           ("t_gamma", "rho11", "rho22", "abs_rho12"))

    def coherr(self, backend: str) -> dict[str, np.ndarray]:
        return self._table("coherr", backend, ("t_gamma", "delta_rho12"))

    def diagnostics(self, backend: str) -> dict:
        path = self.path / "diagnostics.json"
        if not path.exists():
            raise FigureDataError(f"missing input file: {path}")
        diag = json.loads(path.read_text())
        try:
            return diag["backends"][backend]
        except KeyError as exc:
            raise FigureDataError(
                f"no diagnostics for backend '{backend}' in {path}") from exc


def load_run(path) -> RunDir:
    """Validate a run directory and identify which scenario produced it."""
    path = Path(path)
    manifest_path = path / "manifest.json"
    if not manifest_path.exists():
        raise FigureDataError(f"{path} is not a run directory "
                              f"(no manifest.json)")
    manifest = json.loads(manifest_path.read_text())
    try:
        config_hash = manifest["config_hash"]
        items = manifest["config_items"]
        e0 = float(items["pulse.e0_v_per_m"])
        eta = float(manifest["si"]["eta"])
        backends = tuple(manifest["backends"])
    except (KeyError, TypeError, ValueError) as exc:
        raise FigureDataError(f"malformed manifest in {path}: {exc}") from exc

    preset = next(
        (name for name, (pe0, peta) in PRESET_KEYS.items()
         if np.isclose(e0, pe0, rtol=1e-9) and np.isclose(eta, peta,
                                                          rtol=1e-6)),
        None)
    if preset is None:
        raise FigureDataError(
            f"{path}: run (e0={e0:g} V/m, eta={eta:g}) does not match any "
            f"standard scenario")
    return RunDir(path=path, preset=preset, config_hash=config_hash,
                  manifest=manifest, backends=backends)


def discover(paths) -> dict[str, RunDir]:
    """Map run directories to scenario names; duplicates are an error."""
    runs: dict[str, RunDir] = {}
    for p in paths:
        run = load_run(p)
        if run.preset in runs:
            raise FigureDataError(
                f"two run directories for scenario '{run.preset}': "
                f"{runs[run.preset].path} and {run.path}")
        runs[run.preset] = run
    return runs
