"""Fixtures: small synthetic run directories in the on-disk format
``nanolayer run`` produces, fast enough for unit tests."""

import json

import numpy as np
import pytest

HASHES = {
    "weak-field-weak-int": "aaaa000011112222",
    "weak-field-strong-int": "bbbb000011112222",
    "strong-field-weak-int": "cccc000011112222",
    "strong-field-strong-int": "dddd000011112222",
}
PRESET_VALUES = {
    "weak-field-weak-int": (1.0, 1.3e-7),
    "weak-field-strong-int": (1.0, 1.3),
    "strong-field-weak-int": (1e10, 1.3e-7),
    "strong-field-strong-int": (1e10, 1.3),
}
BACKENDS = ("bloch", "nh1", "nh2")


def _write_csv(path, header, columns, config_hash):
    rows = np.column_stack(columns)
    with open(path, "w") as fh:
        fh.write(f"# config_hash: {config_hash}\n{header}\n")
        np.savetxt(fh, rows, delimiter=",", fmt="%.12e")


def write_fake_run(base, name):
    """One synthetic run directory for the named scenario."""
    out = base / name
    out.mkdir(parents=True)
    e0, eta = PRESET_VALUES[name]
    h = HASHES[name]
    strong = e0 > 1e3

    manifest = {
        "format_version": 1,
        "config_hash": h,
        "backends": list(BACKENDS),
        "config_items": {"pulse.e0_v_per_m": e0, "slab.eta": eta},
        "si": {"eta": eta},
    }
    (out / "manifest.json").write_text(json.dumps(manifest))
    (out / "diagnostics.json").write_text(json.dumps({
        "config_hash": h,
        "backends": {
            "bloch": {"pole_events": 0},
            "nh1": {"pole_events": 250 if strong else 0},
            "nh2": {"pole_events": 0},
        },
    }))

    delta = np.linspace(-40.0, 40.0, 81)
    r = 0.5 * np.exp(-(delta / 8.0) ** 2)
    t = 1.0 - r
    for b in BACKENDS:
        _write_csv(out / f"spectrum_{b}.csv", "delta,R,T,A",
                   (delta, r, t, 1.0 - r - t), h)

    tg = np.linspace(0.0, 2.0, 400)
    peak = 0.9 if strong else 0.05
    rho22 = peak * np.exp(-((tg - 0.6) / 0.25) ** 2)
    coh = 0.4 * np.exp(-((tg - 0.6) / 0.3) ** 2)
    for b in BACKENDS:
        wob = (0.02 * np.sin(200 * tg) * (tg > 0.55)
               if (strong and b == "nh1") else 0.0)
        _write_csv(out / f"probe_{b}.csv",
                   "t_gamma,rho11,rho22,abs_rho12,gamma1,gamma2,norm",
                   (tg, 1.0 - rho22, rho22 + wob, coh,
                    np.zeros_like(tg), np.zeros_like(tg),
                    np.ones_like(tg)), h)

    # coherence errors: nh1 large after the inversion approach, nh2
    # small everywhere
    onset = tg >= 0.55 if strong else tg >= 10.0
    err1 = np.where(onset, 0.3, 1e-5) * np.exp(-((tg - 0.8) / 0.5) ** 2)
    err2 = np.full_like(tg, 2e-4)
    _write_csv(out / "coherr_nh1.csv", "t_gamma,delta_rho12",
               (tg, err1), h)
    _write_csv(out / "coherr_nh2.csv", "t_gamma,delta_rho12",
               (tg, err2), h)
    return out


@pytest.fixture()
def fake_runs(tmp_path):
    """All four synthetic run directories; returns their paths."""
    base = tmp_path / "fake-runs"
    return [write_fake_run(base, name) for name in PRESET_VALUES]
