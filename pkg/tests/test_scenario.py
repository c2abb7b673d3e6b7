"""Configuration, presets, orchestration, output files and the CLI.

The density regression value was computed by an independent constant
folding of n = 9 hbar eps0 gamma eta / mu_x^2 and frozen before wiring
the module.
"""

import json
import math
from pathlib import Path

import numpy as np
import pytest

from nanolayer.cli import main as cli_main
from nanolayer.quantum import EmitterParams
from nanolayer.scenario import (
    PRESETS,
    ConfigError,
    build_layout,
    build_manifest,
    build_setup,
    config_from_items,
    config_from_manifest,
    density_from_eta,
    eta_from_density,
    execute,
    load_config,
    parse_config_text,
    preset,
)
from nanolayer.units import CONSTANTS

# overrides producing a small, fast scenario (sub-second per backend)
TINY = {
    "slab.thickness_nm": "100.0",
    "probe.depth_nm": "50.0",
    "grid.gap_nm": "200.0",
    "grid.sf_region_nm": "100.0",
    "grid.margin_nm": "50.0",
    "stepper.hard_cap_fs": "400.0",
}


# ------------------------------------------------------- derived density

def test_density_from_eta_zero():
    p = preset("weak-field-weak-int").emitter
    assert density_from_eta(0.0, p) == 0.0


def test_density_from_eta_linearity():
    p = preset("weak-field-weak-int").emitter
    assert density_from_eta(2.6, p) == pytest.approx(
        2 * density_from_eta(1.3, p), rel=1e-15)


def test_density_regression_value():
    """Frozen oracle: eta = 1.3 with the production parameters."""
    p = preset("weak-field-strong-int").emitter
    assert density_from_eta(1.3, p) == pytest.approx(
        6.443498364227958e+26, rel=1e-12)


def test_eta_round_trip():
    p = preset("weak-field-weak-int").emitter
    assert eta_from_density(density_from_eta(1.3e-7, p), p) == pytest.approx(
        1.3e-7, rel=1e-12)


def test_negative_eta_rejected():
    p = preset("weak-field-weak-int").emitter
    with pytest.raises(ConfigError):
        density_from_eta(-1.0, p)


# ------------------------------------------------------------- parsing

def test_parse_config_text():
    items = parse_config_text(
        "# comment\n"
        "slab.eta = 1.3   # inline comment\n"
        "\n"
        "pulse.e0_v_per_m=1.0\n")
    assert items == {"slab.eta": "1.3", "pulse.e0_v_per_m": "1.0"}


def test_parse_rejects_duplicates():
    with pytest.raises(ConfigError):
        parse_config_text("a = 1\na = 2\n")


def test_parse_rejects_missing_equals():
    with pytest.raises(ConfigError):
        parse_config_text("just words\n")


@pytest.mark.parametrize("items,msg", [
    ({"slab.eta": "1.3", "pulse.e0_v_per_m": "1.0", "bogus.key": "1"}, "unknown"),
    ({"pulse.e0_v_per_m": "1.0"}, "missing"),
    ({"slab.eta": "1.3"}, "missing"),
    ({"slab.eta": "abc", "pulse.e0_v_per_m": "1.0"}, "number"),
    ({"slab.eta": "-1", "pulse.e0_v_per_m": "1.0"}, "positive"),
    ({"slab.eta": "1.3", "pulse.e0_v_per_m": "1.0",
      "run.backends": "bloch,warp"}, "backend"),
    ({"slab.eta": "1.3", "pulse.e0_v_per_m": "1.0",
      "run.backends": "bloch,bloch"}, "duplicate"),
    ({"slab.eta": "1.3", "pulse.e0_v_per_m": "1.0",
      "run.backends": ","}, "empty"),
    ({"slab.eta": "1.3", "pulse.e0_v_per_m": "1.0",
      "probe.depth_nm": "700"}, "probe"),
    ({"slab.eta": "1.3", "pulse.e0_v_per_m": "1.0",
      "stepper.courant": "1.5"}, "courant"),
])
def test_config_validation_errors(items, msg):
    with pytest.raises(ConfigError, match=msg):
        config_from_items(items)


def test_density_override_takes_precedence():
    cfg = config_from_items({"pulse.e0_v_per_m": "1.0",
                             "slab.density_per_m3": "1e26"})
    assert cfg.density == 1e26
    assert cfg.eta == pytest.approx(eta_from_density(1e26, cfg.emitter))


# -------------------------------------------------------------- presets

def test_preset_names():
    assert set(PRESETS) == {
        "weak-field-weak-int", "weak-field-strong-int",
        "strong-field-weak-int", "strong-field-strong-int"}
    with pytest.raises(ConfigError):
        preset("medium-field")


# frozen table of published scenario values
_PRESET_TABLE = {
    "weak-field-weak-int": (1.0, 1.3e-7),
    "weak-field-strong-int": (1.0, 1.3),
    "strong-field-weak-int": (1e10, 1.3e-7),
    "strong-field-strong-int": (1e10, 1.3),
}


@pytest.mark.parametrize("name", PRESETS)
def test_preset_fidelity(name):
    cfg = preset(name)
    e0, eta = _PRESET_TABLE[name]
    assert cfg.pulse.e0 == e0
    assert cfg.eta == pytest.approx(eta, rel=1e-15)
    # shared published parameters
    assert cfg.emitter.omega_b == pytest.approx(
        2.0 * CONSTANTS.ev / CONSTANTS.hbar, rel=1e-15)
    assert cfg.emitter.mu_x == pytest.approx(4.0 * CONSTANTS.debye, rel=1e-15)
    assert cfg.emitter.gamma_star == 1e13
    assert cfg.emitter.big_gamma == 1e12
    assert cfg.slab_thickness == pytest.approx(600e-9)
    assert cfg.pulse.tau_fwhm == pytest.approx(10e-15)
    assert cfg.pulse.omega0 == cfg.emitter.omega_b   # resonant carrier
    assert cfg.probe_depth == pytest.approx(290e-9)
    assert cfg.backends == ("bloch", "nh1", "nh2")


def test_strong_field_is_about_0p02_au():
    cfg = preset("strong-field-strong-int")
    m = build_manifest(cfg)
    assert m["si"]["pulse_e0_au"] == pytest.approx(0.0194, rel=0.01)


# ----------------------------------------------------- layout + manifest

def test_layout_ordering():
    cfg = preset("weak-field-weak-int")
    lay = build_layout(cfg)
    assert 0 < lay.i_reflected < lay.i_source < lay.slab_start \
        < lay.i_probe < lay.slab_stop < lay.i_transmitted < lay.nz - 1
    assert lay.slab_stop - lay.slab_start == 600     # 600 nm at 1 nm cells
    assert lay.i_probe - lay.slab_start == 290


def test_manifest_eta_recomputed():
    cfg = preset("weak-field-strong-int")
    m = build_manifest(cfg)
    assert m["si"]["eta_recomputed"] == pytest.approx(cfg.eta, rel=1e-12)


def test_config_hash_sensitivity():
    a = preset("weak-field-weak-int")
    b = preset("weak-field-weak-int", {"pulse.e0_v_per_m": "2.0"})
    assert a.config_hash() != b.config_hash()
    assert a.config_hash() == preset("weak-field-weak-int").config_hash()


def test_load_config_round_trip(tmp_path):
    path = tmp_path / "case.cfg"
    path.write_text("slab.eta = 1.3\npulse.e0_v_per_m = 1.0\n")
    cfg = load_config(path)
    assert cfg.eta == 1.3


# ------------------------------------------------------------ execution

def _tiny_config(backends="bloch", out="runs/tiny", extra=None):
    items = dict(TINY, **{"slab.eta": "1.3e-7", "pulse.e0_v_per_m": "1.0",
                          "run.backends": backends, "run.output_dir": out})
    if extra:
        items.update(extra)
    return config_from_items(items)


def test_execute_writes_artifacts(tmp_path):
    cfg = _tiny_config(backends="bloch,nh2")
    bundle = execute(cfg, tmp_path / "out")
    for name in ("manifest.json", "diagnostics.json",
                 "spectrum_bloch.csv", "spectrum_nh2.csv",
                 "probe_bloch.csv", "probe_nh2.csv", "coherr_nh2.csv"):
        assert (tmp_path / "out" / name).exists(), name
    assert not (tmp_path / "out" / "coherr_bloch.csv").exists()
    # csv format: hash comment, header, numeric rows
    lines = (tmp_path / "out" / "spectrum_bloch.csv").read_text().splitlines()
    assert lines[0] == f"# config_hash: {cfg.config_hash()}"
    assert lines[1] == "delta,R,T,A"
    assert len(lines) > 10


def test_execute_without_bloch_skips_coherr(tmp_path):
    bundle = execute(_tiny_config(backends="nh1"), tmp_path / "out")
    assert list(bundle.records) == ["nh1"]
    assert bundle.coherence_errors == {}
    assert not (tmp_path / "out" / "coherr_nh1.csv").exists()


def test_execute_deterministic(tmp_path):
    cfg = _tiny_config(backends="bloch,nh1")
    execute(cfg, tmp_path / "a")
    execute(cfg, tmp_path / "b")
    for name in ("spectrum_bloch.csv", "spectrum_nh1.csv",
                 "probe_bloch.csv", "probe_nh1.csv", "coherr_nh1.csv"):
        assert (tmp_path / "a" / name).read_bytes() == \
            (tmp_path / "b" / name).read_bytes(), name


def test_manifest_round_trip(tmp_path):
    cfg = _tiny_config(backends="bloch")
    execute(cfg, tmp_path / "a")
    cfg2 = config_from_manifest(tmp_path / "a" / "manifest.json")
    assert cfg2.config_hash() == cfg.config_hash()
    execute(cfg2, tmp_path / "b")
    assert (tmp_path / "a" / "spectrum_bloch.csv").read_bytes() == \
        (tmp_path / "b" / "spectrum_bloch.csv").read_bytes()


def test_execute_abort_leaves_failed_marker(tmp_path):
    from nanolayer.em import SolverAbortError

    cfg = _tiny_config(backends="bloch",
                       extra={"pulse.e0_v_per_m": "1e300"})
    with pytest.raises(SolverAbortError):
        execute(cfg, tmp_path / "out")
    assert (tmp_path / "out" / "FAILED").exists()
    assert (tmp_path / "out" / "diagnostics.json").exists()


# ------------------------------------------------------------------ CLI

def test_cli_presets(capsys):
    assert cli_main(["presets"]) == 0
    out = capsys.readouterr().out
    for name in PRESETS:
        assert name in out


def test_cli_validate(tmp_path, capsys):
    good = tmp_path / "good.cfg"
    good.write_text("slab.eta = 1.3\npulse.e0_v_per_m = 1.0\n")
    assert cli_main(["validate", "--config", str(good)]) == 0
    bad = tmp_path / "bad.cfg"
    bad.write_text("slab.eta = 1.3\nnot.a.key = 1\n")
    assert cli_main(["validate", "--config", str(bad)]) == 2
    assert cli_main(["validate", "--config", str(tmp_path / "nope.cfg")]) == 2


def test_cli_run_config(tmp_path):
    cfg = tmp_path / "case.cfg"
    cfg.write_text(
        "slab.eta = 1.3e-7\npulse.e0_v_per_m = 1.0\n"
        + "".join(f"{k} = {v}\n" for k, v in TINY.items()))
    out = tmp_path / "out"
    code = cli_main(["run", "--config", str(cfg), "--backends", "bloch",
                     "--out", str(out)])
    assert code == 0
    assert (out / "spectrum_bloch.csv").exists()


def test_cli_run_bad_override(tmp_path):
    code = cli_main(["run", "--preset", "weak-field-weak-int",
                     "--override", "bogus.key=1",
                     "--out", str(tmp_path / "x")])
    assert code == 2


def test_cli_run_solver_abort(tmp_path):
    args = ["run", "--preset", "weak-field-weak-int",
            "--backends", "bloch", "--out", str(tmp_path / "x"),
            "--override", "pulse.e0_v_per_m=1e300"]
    for k, v in TINY.items():
        args += ["--override", f"{k}={v}"]
    assert cli_main(args) == 3
    assert (tmp_path / "x" / "FAILED").exists()
