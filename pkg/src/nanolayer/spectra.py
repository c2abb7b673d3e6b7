"""Post-processing of detector time series into incident-normalized
reflection/transmission/absorption spectra versus relative detuning.

The spectral flux is S(omega) = |Ex~(omega) * Hy~(omega)|, the product of
the Fourier magnitudes. For a unidirectional wave recorded in vacuum this
agrees in magnitude with Re(Ex~ Hy~*). Traces decay to zero by
construction, so no window function is applied (a window would distort
the narrow collective resonance); zero padding (4x) refines the frequency
sampling.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .quantum import EmitterParams


class SpectrumError(ValueError):
    pass


@dataclass
class DetectorTrace:
    """Uniformly sampled E/H record at one detector plane."""

    t: np.ndarray
    ex: np.ndarray
    hy: np.ndarray
    location: str = "reference"   # reflected | transmitted | reference

    def __post_init__(self):
        if not (len(self.t) == len(self.ex) == len(self.hy)):
            raise SpectrumError("t, ex, hy must have equal length")
        if len(self.t) < 16:
            raise SpectrumError("trace too short")
        steps = np.diff(self.t)
        med = np.median(steps)
        # slack of a few ulps of the time axis: float64 cannot represent a
        # ~1e5-sample axis with tighter step uniformity than that
        tol = 1e-12 * med + 8 * np.finfo(float).eps * np.max(np.abs(self.t))
        if np.max(np.abs(steps - med)) >= tol:
            raise SpectrumError("trace sampling is not uniform")

    @property
    def dt(self) -> float:
        return float(np.median(np.diff(self.t)))

    def capture_ok(self, frac: float = 0.01, level: float = 1e-5) -> bool:
        """True when the first and last ``frac`` of samples stay below
        ``level`` of the peak field (trace fully captured)."""
        peak = np.max(np.abs(self.ex))
        if peak == 0:
            return True
        n = max(1, int(frac * len(self.ex)))
        head = np.max(np.abs(self.ex[:n]))
        tail = np.max(np.abs(self.ex[-n:]))
        return head < level * peak and tail < level * peak


@dataclass
class SpectrumSet:
    """R/T/A versus relative detuning delta = (omega - omega_b)/gamma."""

    delta: np.ndarray
    r: np.ndarray
    t: np.ndarray
    a: np.ndarray
    truncated: bool = False

    def __post_init__(self):
        if np.any(self.r < 0) or np.any(self.t < 0):
            raise SpectrumError("negative reflectivity/transmissivity")


def _padded_length(n: int, factor: int = 4) -> int:
    m = factor * n
    # round up to the next power of two for cheap FFTs
    return 1 << (m - 1).bit_length()


def poynting_spectrum(trace: DetectorTrace, pad_factor: int = 4,
                      nfft: int | None = None):
    """Spectral flux S(omega) = |Ex~ * Hy~| of a detector trace.

    Returns (omega, s, truncated) where ``truncated`` flags a violated
    capture invariant (warning, not an error). ``nfft`` overrides the
    transform length so traces of different durations can share one
    frequency axis.
    """
    n = nfft if nfft is not None else _padded_length(len(trace.t), pad_factor)
    if n < len(trace.t):
        raise SpectrumError("nfft shorter than the trace")
    dt = trace.dt
    e_w = np.fft.rfft(trace.ex, n) * dt
    h_w = np.fft.rfft(trace.hy, n) * dt
    omega = 2.0 * np.pi * np.fft.rfftfreq(n, dt)
    return omega, np.abs(e_w * h_w), not trace.capture_ok()


def normalize(spec: np.ndarray, reference: np.ndarray,
              floor: float = 1e-4) -> np.ndarray:
    """Elementwise ratio to the incident (vacuum-run) flux.

    NaN where the reference is below ``floor`` of its peak, i.e. where the
    normalization is ill-conditioned.
    """
    if spec.shape != reference.shape:
        raise SpectrumError("spectrum and reference axes differ")
    mask = reference >= floor * np.max(reference)
    out = np.full_like(spec, np.nan)
    out[mask] = spec[mask] / reference[mask]
    return out


def assemble(r_trace: DetectorTrace, t_trace: DetectorTrace,
             ref_trace: DetectorTrace, params: EmitterParams,
             delta_max: float = 60.0) -> SpectrumSet:
    """Build the R/T/A spectrum set from the three detector traces.

    All traces must come from runs with identical pulse and grid. The
    frequency axis is reported as relative detuning and restricted to the
    band where the incident spectrum is well conditioned, intersected with
    |delta| <= delta_max.
    """
    dts = [r_trace.dt, t_trace.dt, ref_trace.dt]
    if max(dts) - min(dts) > 1e-9 * min(dts):
        raise SpectrumError("traces have mismatched sampling intervals")
    nfft = max(_padded_length(len(tr.t))
               for tr in (r_trace, t_trace, ref_trace))
    om_r, s_r, tr1 = poynting_spectrum(r_trace, nfft=nfft)
    om_t, s_t, tr2 = poynting_spectrum(t_trace, nfft=nfft)
    om_0, s_0, tr3 = poynting_spectrum(ref_trace, nfft=nfft)

    r = normalize(s_r, s_0)
    t = normalize(s_t, s_0)
    delta = (om_0 - params.omega_b) / params.gamma
    keep = np.isfinite(r) & np.isfinite(t) & (np.abs(delta) <= delta_max)
    if not np.any(keep):
        raise SpectrumError("empty spectrum: no well-conditioned band")
    r, t, delta = r[keep], t[keep], delta[keep]
    return SpectrumSet(delta=delta, r=r, t=t, a=1.0 - t - r,
                       truncated=tr1 or tr2 or tr3)


def coherence_error(bloch_trace: np.ndarray, nh_trace: np.ndarray) -> np.ndarray:
    """|rho12(t) - rho12_s(t)| for semilog model-error diagnostics."""
    bloch_trace = np.asarray(bloch_trace)
    nh_trace = np.asarray(nh_trace)
    if bloch_trace.shape != nh_trace.shape:
        raise SpectrumError("coherence traces have different lengths")
    return np.abs(bloch_trace - nh_trace)


__all__ = [
    "DetectorTrace", "SpectrumSet", "SpectrumError",
    "poynting_spectrum", "normalize", "assemble", "coherence_error",
]
