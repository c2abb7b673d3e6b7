"""Scenario configuration, presets, run orchestration and output writing.

A scenario is described by a flat key=value config (dotted sections,
user-facing units); four presets reproduce the published weak/strong field
and weak/strong interaction cases. ``execute`` runs the vacuum reference
once, then one medium run per requested backend, and writes flat numeric
tables plus a manifest into the output directory:

    manifest.json            resolved parameters, grid layout, config hash
    spectrum_<backend>.csv   delta, R, T, A
    probe_<backend>.csv      t_gamma, rho11, rho22, abs_rho12, gamma1, gamma2, norm
    coherr_<backend>.csv     t_gamma, delta_rho12   (NH backends, needs bloch)
    diagnostics.json         pole events, norm drift, runtime
"""

from __future__ import annotations

import hashlib
import json
import math
import time
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import em, spectra
from .em import PulseSpec, SimulationSetup, SolverAbortError, StepperConfig
from .quantum import BACKENDS, EmitterParams
from .spectra import DetectorTrace, SpectrumSet
from .units import CONSTANTS, convert

PRESETS = (
    "weak-field-weak-int",
    "weak-field-strong-int",
    "strong-field-weak-int",
    "strong-field-strong-int",
)

# 1 atomic unit of field strength, V/m (informational check only)
_AU_FIELD = 5.14220675e11


class ConfigError(ValueError):
    pass


# key -> default (None = required or derived); values are strings as they
# would appear in a config file.
_DEFAULTS = {
    "emitter.omega_b_ev": "2.0",
    "emitter.mu_x_debye": "4.0",
    "emitter.gamma_star_thz": "10.0",
    "emitter.big_gamma_thz": "1.0",
    "slab.thickness_nm": "600.0",
    "slab.eta": None,
    "slab.density_per_m3": None,      # optional override of eta
    "pulse.e0_v_per_m": None,
    "pulse.omega0_ev": None,          # default: resonant with the transition
    "pulse.tau_fwhm_fs": "10.0",
    "pulse.t0_fs": None,              # default: 5 * tau
    "probe.depth_nm": "290.0",
    "grid.dz_nm": "1.0",
    "grid.gap_nm": "1000.0",
    "grid.sf_region_nm": "300.0",
    "grid.margin_nm": "100.0",
    "stepper.courant": "0.5",
    "stepper.boundary": "mur1",
    "stepper.pole_guard": "1e-6",
    "stepper.pole_warn": "1e-2",
    "stepper.record_stride": "8",
    "stepper.hard_cap_fs": "2000.0",
    "stepper.ringdown_factor": "5.0",
    "run.backends": "bloch,nh1,nh2",
    "run.output_dir": "runs/scenario",
}


def density_from_eta(eta: float, params: EmitterParams) -> float:
    """Emitter density n = 9 hbar eps0 gamma eta / mu_x^2 realizing a
    target cooperativity eta = n mu_x^2 / (9 hbar eps0 gamma)."""
    if eta < 0:
        raise ConfigError("eta must be non-negative")
    return 9.0 * CONSTANTS.hbar * CONSTANTS.eps0 * params.gamma * eta / params.mu_x ** 2


def eta_from_density(n: float, params: EmitterParams) -> float:
    return n * params.mu_x ** 2 / (9.0 * CONSTANTS.hbar * CONSTANTS.eps0 * params.gamma)


@dataclass(frozen=True)
class ScenarioConfig:
    """Fully resolved scenario (SI units), plus the raw config items that
    produced it (the canonical input for hashing and round-trips)."""

    emitter: EmitterParams
    slab_thickness: float
    eta: float
    density: float
    pulse: PulseSpec
    backends: tuple
    probe_depth: float
    stepper: StepperConfig
    output_dir: str
    dz: float
    gap: float
    sf_region: float
    margin: float
    items: dict = field(default_factory=dict, compare=False)

    def config_hash(self) -> str:
        canon = "\n".join(f"{k}={self.items[k]}" for k in sorted(self.items))
        return hashlib.sha256(canon.encode()).hexdigest()[:16]


def parse_config_text(text: str) -> dict:
    """Parse flat key=value lines; '#' starts a comment; blank lines skipped."""
    items = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"line {lineno}: expected key = value, got {raw!r}")
        key, value = (part.strip() for part in line.split("=", 1))
        if key in items:
            raise ConfigError(f"line {lineno}: duplicate key {key!r}")
        items[key] = value
    return items


def _as_float(items, key):
    try:
        return float(items[key])
    except ValueError:
        raise ConfigError(f"{key}: not a number: {items[key]!r}") from None


def config_from_items(items: dict) -> ScenarioConfig:
    """Validate raw config items and resolve everything into SI."""
    unknown = set(items) - set(_DEFAULTS)
    if unknown:
        raise ConfigError(f"unknown config keys: {', '.join(sorted(unknown))}")
    merged = {k: v for k, v in _DEFAULTS.items() if v is not None}
    merged.update(items)

    for req in ("slab.eta", "pulse.e0_v_per_m"):
        if req not in merged and not (
                req == "slab.eta" and "slab.density_per_m3" in merged):
            raise ConfigError(f"missing required key {req}")

    try:
        emitter = EmitterParams(
            omega_b=convert(_as_float(merged, "emitter.omega_b_ev"), "eV", "rad/s"),
            mu_x=convert(_as_float(merged, "emitter.mu_x_debye"), "D", "C*m"),
            gamma_star=convert(_as_float(merged, "emitter.gamma_star_thz"), "THz", "1/s"),
            big_gamma=convert(_as_float(merged, "emitter.big_gamma_thz"), "THz", "1/s"),
        )
    except ValueError as exc:
        raise ConfigError(str(exc)) from None

    if "slab.density_per_m3" in merged:
        density = _as_float(merged, "slab.density_per_m3")
        if density < 0:
            raise ConfigError("slab.density_per_m3 must be non-negative")
        eta = eta_from_density(density, emitter)
    else:
        eta = _as_float(merged, "slab.eta")
        if eta <= 0:
            raise ConfigError("slab.eta must be positive")
        density = density_from_eta(eta, emitter)

    tau = convert(_as_float(merged, "pulse.tau_fwhm_fs"), "fs", "s")
    # default arrival at 5*tau: the envelope is ~1e-15 of e0 at t=0, so the
    # truncated turn-on radiates nothing measurable either way
    t0 = convert(_as_float(merged, "pulse.t0_fs"), "fs", "s") \
        if "pulse.t0_fs" in merged else 5.0 * tau
    omega0 = convert(_as_float(merged, "pulse.omega0_ev"), "eV", "rad/s") \
        if "pulse.omega0_ev" in merged else emitter.omega_b
    try:
        pulse = PulseSpec(
            e0=_as_float(merged, "pulse.e0_v_per_m"),
            omega0=omega0, tau_fwhm=tau, t0=t0,
        )
        stepper = StepperConfig(
            courant=_as_float(merged, "stepper.courant"),
            boundary=merged["stepper.boundary"],
            pole_guard=_as_float(merged, "stepper.pole_guard"),
            pole_warn=_as_float(merged, "stepper.pole_warn"),
            record_stride=int(merged["stepper.record_stride"]),
            hard_cap=convert(_as_float(merged, "stepper.hard_cap_fs"), "fs", "s"),
            ringdown_factor=_as_float(merged, "stepper.ringdown_factor"),
        )
    except ValueError as exc:
        raise ConfigError(str(exc)) from None

    backends = tuple(b.strip() for b in merged["run.backends"].split(",") if b.strip())
    if not backends:
        raise ConfigError("run.backends must not be empty")
    if len(set(backends)) != len(backends):
        raise ConfigError("duplicate backends requested")
    for b in backends:
        if b not in BACKENDS:
            raise ConfigError(f"unknown backend {b!r}; expected one of {BACKENDS}")

    thickness = convert(_as_float(merged, "slab.thickness_nm"), "nm", "m")
    probe_depth = convert(_as_float(merged, "probe.depth_nm"), "nm", "m")
    if not 0 < probe_depth < thickness:
        raise ConfigError("probe.depth_nm must lie inside the slab")

    return ScenarioConfig(
        emitter=emitter,
        slab_thickness=thickness,
        eta=eta,
        density=density,
        pulse=pulse,
        backends=backends,
        probe_depth=probe_depth,
        stepper=stepper,
        output_dir=merged["run.output_dir"],
        dz=convert(_as_float(merged, "grid.dz_nm"), "nm", "m"),
        gap=convert(_as_float(merged, "grid.gap_nm"), "nm", "m"),
        sf_region=convert(_as_float(merged, "grid.sf_region_nm"), "nm", "m"),
        margin=convert(_as_float(merged, "grid.margin_nm"), "nm", "m"),
        items=dict(merged),
    )


def load_config(path) -> ScenarioConfig:
    return config_from_items(parse_config_text(Path(path).read_text()))


def preset(name: str, overrides: dict | None = None) -> ScenarioConfig:
    """Published scenarios: resonant 10 fs pulse on a 600 nm layer of
    2 eV / 4 D emitters with gamma* = 10 THz, Gamma = 1 THz; amplitude and
    cooperativity per preset."""
    table = {
        "weak-field-weak-int": {"pulse.e0_v_per_m": "1.0", "slab.eta": "1.3e-7"},
        "weak-field-strong-int": {"pulse.e0_v_per_m": "1.0", "slab.eta": "1.3"},
        "strong-field-weak-int": {"pulse.e0_v_per_m": "1e10", "slab.eta": "1.3e-7"},
        "strong-field-strong-int": {"pulse.e0_v_per_m": "1e10", "slab.eta": "1.3"},
    }
    if name not in table:
        raise ConfigError(
            f"unknown preset {name!r}; available: {', '.join(PRESETS)}")
    items = dict(table[name])
    items["run.output_dir"] = f"runs/{name}"
    if overrides:
        items.update({k: str(v) for k, v in overrides.items()})
    return config_from_items(items)


@dataclass(frozen=True)
class GridLayout:
    nz: int
    i_reflected: int
    i_source: int
    slab_start: int
    slab_stop: int
    i_transmitted: int
    i_probe: int


def build_layout(config: ScenarioConfig) -> GridLayout:
    dz = config.dz
    cells = lambda length: int(round(length / dz))
    i_refl = cells(config.margin)
    i_src = i_refl + cells(config.sf_region)
    slab_start = i_src + cells(config.gap)
    slab_stop = slab_start + cells(config.slab_thickness)
    i_trans = slab_stop + cells(config.gap)
    nz = i_trans + cells(config.margin) + 1
    return GridLayout(
        nz=nz, i_reflected=i_refl, i_source=i_src,
        slab_start=slab_start, slab_stop=slab_stop, i_transmitted=i_trans,
        i_probe=slab_start + cells(config.probe_depth),
    )


def build_setup(config: ScenarioConfig, model: str | None) -> SimulationSetup:
    lay = build_layout(config)
    return SimulationSetup(
        dz=config.dz, nz=lay.nz,
        i_reflected=lay.i_reflected, i_source=lay.i_source,
        slab_start=lay.slab_start, slab_stop=lay.slab_stop,
        i_transmitted=lay.i_transmitted, i_probe=lay.i_probe,
        density=config.density, params=config.emitter, pulse=config.pulse,
        stepper=config.stepper, model=model,
    )


def build_manifest(config: ScenarioConfig) -> dict:
    lay = build_layout(config)
    par = config.emitter
    eta_check = eta_from_density(config.density, par)
    e0_au = config.pulse.e0 / _AU_FIELD
    return {
        "config_hash": config.config_hash(),
        "config_items": dict(config.items),
        "si": {
            "omega_b_rad_per_s": par.omega_b,
            "mu_x_cm": par.mu_x,
            "gamma_star_per_s": par.gamma_star,
            "big_gamma_per_s": par.big_gamma,
            "gamma_per_s": par.gamma,
            "density_per_m3": config.density,
            "eta": config.eta,
            "eta_recomputed": eta_check,
            "slab_thickness_m": config.slab_thickness,
            "pulse_e0_v_per_m": config.pulse.e0,
            "pulse_e0_au": e0_au,
            "pulse_omega0_rad_per_s": config.pulse.omega0,
            "pulse_tau_fwhm_s": config.pulse.tau_fwhm,
            "pulse_t0_s": config.pulse.t0,
            "dz_m": config.dz,
            "dt_s": config.stepper.courant * config.dz / CONSTANTS.c,
        },
        "grid": {
            "nz": lay.nz,
            "i_reflected": lay.i_reflected,
            "i_source": lay.i_source,
            "slab_start": lay.slab_start,
            "slab_stop": lay.slab_stop,
            "i_transmitted": lay.i_transmitted,
            "i_probe": lay.i_probe,
        },
        "backends": list(config.backends),
        "format_version": 1,
    }


def _trace(records: em.RawRecords, which: str) -> DetectorTrace:
    if which == "reflected":
        return DetectorTrace(records.t, records.refl_ex, records.refl_hy, "reflected")
    return DetectorTrace(records.t, records.trans_ex, records.trans_hy,
                         "transmitted" if which == "transmitted" else "reference")


def _write_csv(path: Path, header: str, columns, config_hash: str) -> None:
    data = np.column_stack(columns)
    with open(path, "w") as fh:
        fh.write(f"# config_hash: {config_hash}\n")
        fh.write(header + "\n")
        np.savetxt(fh, data, delimiter=",", fmt="%.12e")


@dataclass
class RunBundle:
    """In-memory results of one execute() call."""

    config: ScenarioConfig
    manifest: dict
    vacuum: em.RawRecords
    records: dict            # backend -> RawRecords
    spectra: dict            # backend -> SpectrumSet
    coherence_errors: dict   # backend -> (t, error) for NH backends
    out_dir: Path


def execute(config: ScenarioConfig, out_dir=None) -> RunBundle:
    """Run the vacuum reference and one medium run per backend; write the
    artifact files. On a solver abort, partial outputs are kept next to a
    FAILED marker and the abort is re-raised."""
    out = Path(out_dir if out_dir is not None else config.output_dir)
    out.mkdir(parents=True, exist_ok=True)
    manifest = build_manifest(config)
    chash = manifest["config_hash"]
    (out / "manifest.json").write_text(json.dumps(manifest, indent=2, sort_keys=True))

    gamma = config.emitter.gamma
    diagnostics = {"config_hash": chash, "backends": {}}
    records = {}
    spectra_by_backend = {}
    coherr = {}
    try:
        t_start = time.perf_counter()
        vacuum = em.run(build_setup(config, None))
        diagnostics["vacuum"] = dict(vacuum.diagnostics,
                                     runtime_s=time.perf_counter() - t_start)
        ref = _trace(vacuum, "reference")

        for backend in config.backends:
            t_start = time.perf_counter()
            rec = em.run(build_setup(config, backend))
            records[backend] = rec
            spec = spectra.assemble(_trace(rec, "reflected"),
                                    _trace(rec, "transmitted"), ref,
                                    config.emitter)
            spectra_by_backend[backend] = spec
            _write_csv(
                out / f"spectrum_{backend}.csv",
                "delta,R,T,A",
                (spec.delta, spec.r, spec.t, spec.a), chash)
            _write_csv(
                out / f"probe_{backend}.csv",
                "t_gamma,rho11,rho22,abs_rho12,gamma1,gamma2,norm",
                (rec.t * gamma, rec.probe_rho11, rec.probe_rho22,
                 np.abs(rec.probe_rho12), rec.probe_gamma1,
                 rec.probe_gamma2, rec.probe_norm), chash)
            diagnostics["backends"][backend] = dict(
                rec.diagnostics,
                runtime_s=time.perf_counter() - t_start,
                spectrum_truncated=spec.truncated,
                min_abs_denominator=(
                    None if not np.isfinite(rec.diagnostics["min_abs_denominator"])
                    else rec.diagnostics["min_abs_denominator"]),
            )

        if "bloch" in records:
            bloch = records["bloch"]
            for backend in config.backends:
                if backend == "bloch":
                    continue
                n = min(len(bloch.t), len(records[backend].t))
                err = spectra.coherence_error(
                    bloch.probe_rho12[:n], records[backend].probe_rho12[:n])
                coherr[backend] = (bloch.t[:n], err)
                _write_csv(out / f"coherr_{backend}.csv",
                           "t_gamma,delta_rho12",
                           (bloch.t[:n] * gamma, err), chash)
    except SolverAbortError as exc:
        (out / "FAILED").write_text(str(exc))
        diagnostics["failed"] = str(exc)
        (out / "diagnostics.json").write_text(json.dumps(diagnostics, indent=2))
        raise

    (out / "diagnostics.json").write_text(json.dumps(diagnostics, indent=2))
    return RunBundle(config=config, manifest=manifest, vacuum=vacuum,
                     records=records, spectra=spectra_by_backend,
                     coherence_errors=coherr, out_dir=out)


def config_from_manifest(path) -> ScenarioConfig:
    """Rebuild the scenario from a previously written manifest."""
    manifest = json.loads(Path(path).read_text())
    return config_from_items(manifest["config_items"])


__all__ = [
    "PRESETS", "ConfigError", "ScenarioConfig", "GridLayout", "RunBundle",
    "density_from_eta", "eta_from_density", "parse_config_text",
    "config_from_items", "load_config", "preset", "build_layout",
    "build_setup", "build_manifest", "execute", "config_from_manifest",
]
