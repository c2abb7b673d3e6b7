"""Two-level emitter dynamics: exact Bloch equations and the two
non-Hermitian wavepacket backends (NH1: norm-conserving rates with a pole
at population inversion; NH2: pole-free rates).

All three backends expose the same stepping interface and are advanced by
classical RK4. States hold numpy arrays so a whole slab of cells is
stepped at once; scalars broadcast as 0-d arrays. All functions are pure:
per-cell stepping is embarrassingly parallel with no shared mutable state.

Conventions (fixed once, here):
  - Rabi frequency Omega = -mu_x * E_loc / hbar (standard -mu.E coupling).
  - Energy origin omega_1 = 0, omega_2 = omega_b.
  - The coherence that carries the dipole is rho12 (Bloch) and
    rho12_s = c1 * conj(c2) (NH backends); the pairing is verified by a
    unit test differentiating c_i c_j* against the wavepacket equations.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Union

import numpy as np

from .units import CONSTANTS

ArrayLike = Union[float, complex, np.ndarray]

BACKENDS = ("bloch", "nh1", "nh2")

DEFAULT_POLE_GUARD = 1e-6
# Population-difference magnitude below which an NH1 step is counted as a
# pole-proximity event. Distinct from the clamp: the dynamics self-repel
# from the pole at |D| ~ gamma/Omega (~4e-3 for the strong-field presets),
# so the 1e-6 clamp itself is a numerical backstop that is never reached.
DEFAULT_POLE_WARN = 1e-2


class InvalidStateError(ValueError):
    """Raised for states outside a backend's admissible set."""


@dataclass(frozen=True)
class EmitterParams:
    """Parameters of one two-level species (SI units)."""

    omega_b: float      # transition angular frequency (rad/s)
    mu_x: float         # transition dipole (C*m)
    gamma_star: float   # pure dephasing rate (1/s)
    big_gamma: float    # nonradiative decay rate of |2> (1/s)

    def __post_init__(self):
        if self.omega_b <= 0 or self.mu_x <= 0:
            raise ValueError("omega_b and mu_x must be positive")
        if self.gamma_star < 0 or self.big_gamma < 0:
            raise ValueError("rates must be non-negative")

    @property
    def gamma(self) -> float:
        """Total decoherence rate gamma = gamma* + Gamma/2 (1/s)."""
        return self.gamma_star + self.big_gamma / 2


@dataclass
class BlochState:
    """Density-matrix state; rho21 is stored implicitly as conj(rho12)."""

    rho11: np.ndarray
    rho22: np.ndarray
    rho12: np.ndarray  # complex

    @classmethod
    def ground(cls, shape=()) -> "BlochState":
        return cls(
            rho11=np.ones(shape),
            rho22=np.zeros(shape),
            rho12=np.zeros(shape, dtype=complex),
        )

    def validate(self, eps: float = 1e-9) -> None:
        r11, r22, r12 = self.rho11, self.rho22, self.rho12
        if np.any(r11 < -eps) or np.any(r11 > 1 + eps) \
                or np.any(r22 < -eps) or np.any(r22 > 1 + eps):
            raise InvalidStateError("populations outside [0, 1]")
        if np.any(np.abs(r11 + r22 - 1.0) > eps):
            raise InvalidStateError("trace not preserved")
        if np.any(np.abs(r12) ** 2 > r11 * r22 + eps):
            raise InvalidStateError("density matrix not positive")


@dataclass
class WaveCoeffs:
    """Wavepacket amplitudes of |1> and |2> for the NH backends."""

    c1: np.ndarray  # complex
    c2: np.ndarray  # complex

    @classmethod
    def ground(cls, shape=()) -> "WaveCoeffs":
        return cls(c1=np.ones(shape, dtype=complex),
                   c2=np.zeros(shape, dtype=complex))

    @property
    def norm(self) -> np.ndarray:
        return np.abs(self.c1) ** 2 + np.abs(self.c2) ** 2


@dataclass(frozen=True)
class QuantumObservables:
    pop_excited: ArrayLike      # rho22 or |c2|^2
    coherence: ArrayLike        # rho12 or c1*conj(c2), complex
    dipole_expect: ArrayLike    # <mu_x> = 2 * mu_x * Re(coherence), C*m


@dataclass
class StepDiagnostics:
    """Mutable per-run counters threaded through NH1 stepping."""

    pole_events: int = 0
    min_abs_denominator: float = np.inf


def rabi_frequency(e_local: ArrayLike, params: EmitterParams) -> ArrayLike:
    """Instantaneous Rabi frequency Omega = -mu_x * E_loc / hbar (rad/s)."""
    return -params.mu_x * np.asarray(e_local) / CONSTANTS.hbar


def bloch_rhs(state: BlochState, omega: ArrayLike, params: EmitterParams) -> BlochState:
    """Time derivatives of the optical Bloch equations.

    d rho11/dt = i*Omega*(rho12 - rho21) + Gamma*rho22
    d rho12/dt = i*Omega*(rho11 - rho22) + (i*omega_b - gamma)*rho12
    d rho22/dt = i*Omega*(rho21 - rho12) - Gamma*rho22

    with rho21 = conj(rho12); the trace derivative vanishes identically.
    """
    g = params.gamma
    G = params.big_gamma
    # i*(z - conj(z)) = -2*Im(z)
    pump = 2.0 * np.asarray(omega) * np.imag(state.rho12)
    d11 = -pump + G * state.rho22
    d22 = pump - G * state.rho22
    d12 = (1j * np.asarray(omega)) * (state.rho11 - state.rho22) \
        + (1j * params.omega_b - g) * state.rho12
    return BlochState(rho11=d11, rho22=d22, rho12=d12)


def nh1_rates(
    c: WaveCoeffs,
    params: EmitterParams,
    pole_guard: float = DEFAULT_POLE_GUARD,
    pole_warn: float = DEFAULT_POLE_WARN,
    diagnostics: StepDiagnostics | None = None,
):
    """Norm-conserving NH1 gain/decay rates.

    gamma1 = 2*gamma*|c2|^2 / (|c1|^2 - |c2|^2)
    gamma2 = 2*gamma*|c1|^2 / (|c1|^2 - |c2|^2)

    The denominator has a pole at population inversion. It is clamped
    (sign-preserving) at +-pole_guard so the dynamics stay bounded; steps
    with |denominator| < pole_warn are counted as pole-proximity events in
    ``diagnostics``. Always satisfies gamma2 - gamma1 = 2*gamma.
    """
    p1 = np.abs(c.c1) ** 2
    p2 = np.abs(c.c2) ** 2
    denom = p1 - p2
    if diagnostics is not None:
        near = np.abs(denom) < pole_warn
        diagnostics.pole_events += int(np.count_nonzero(near))
        m = float(np.min(np.abs(denom))) if np.size(denom) else np.inf
        diagnostics.min_abs_denominator = min(diagnostics.min_abs_denominator, m)
    sign = np.where(denom >= 0, 1.0, -1.0)
    denom = np.where(np.abs(denom) < pole_guard, sign * pole_guard, denom)
    tg = 2.0 * params.gamma
    return tg * p2 / denom, tg * p1 / denom


def nh2_rates(c: WaveCoeffs, params: EmitterParams):
    """Pole-free NH2 gain/decay rates.

    gamma1 = (Gamma - 2*gamma*) * |c2|^2 / (|c1|^2 + |c2|^2)
    gamma2 = (2*gamma*|c1|^2 + 2*Gamma*|c2|^2) / (|c1|^2 + |c2|^2)

    Finite for every c != 0; satisfies gamma2 - gamma1 = 2*gamma and the
    population-difference condition
    gamma1*|c1|^2 + gamma2*|c2|^2 = 2*Gamma*|c2|^2.
    gamma1 may be negative when Gamma < 2*gamma*; that is expected.
    """
    p1 = np.abs(c.c1) ** 2
    p2 = np.abs(c.c2) ** 2
    norm = p1 + p2
    if np.any(norm <= 0):
        raise InvalidStateError("NH2 rates undefined for c = (0, 0)")
    g1 = (params.big_gamma - 2.0 * params.gamma_star) * p2 / norm
    g2 = (2.0 * params.gamma * p1 + 2.0 * params.big_gamma * p2) / norm
    return g1, g2


def nh_rhs(c: WaveCoeffs, omega: ArrayLike, rates, params: EmitterParams) -> WaveCoeffs:
    """Wavepacket equations of motion with complex diagonal energies.

    i d/dt (c1, c2) = [[omega_1 + i*gamma1/2, Omega],
                       [Omega, omega_2 - i*gamma2/2]] (c1, c2)

    with omega_1 = 0 and omega_2 = omega_b.
    """
    g1, g2 = rates
    om = np.asarray(omega)
    dc1 = 0.5 * g1 * c.c1 - 1j * om * c.c2
    dc2 = -1j * om * c.c1 + (-1j * params.omega_b - 0.5 * g2) * c.c2
    return WaveCoeffs(c1=dc1, c2=dc2)


def _rhs_for(model: str, params, pole_guard, pole_warn, diagnostics) -> Callable:
    if model == "bloch":
        def rhs(state, omega):
            return bloch_rhs(state, omega, params)
    elif model == "nh1":
        def rhs(state, omega):
            rates = nh1_rates(state, params, pole_guard, pole_warn, diagnostics)
            return nh_rhs(state, omega, rates, params)
    elif model == "nh2":
        def rhs(state, omega):
            return nh_rhs(state, omega, nh2_rates(state, params), params)
    else:
        raise ValueError(f"unknown backend {model!r}; expected one of {BACKENDS}")
    return rhs


def _axpy(state, dt, deriv):
    """state + dt * deriv, preserving the state type."""
    if isinstance(state, BlochState):
        return BlochState(
            rho11=state.rho11 + dt * deriv.rho11,
            rho22=state.rho22 + dt * deriv.rho22,
            rho12=state.rho12 + dt * deriv.rho12,
        )
    return WaveCoeffs(c1=state.c1 + dt * deriv.c1, c2=state.c2 + dt * deriv.c2)


def rk4_step(
    state,
    field_sampler: Callable[[float], ArrayLike],
    t: float,
    dt: float,
    model: str,
    params: EmitterParams,
    pole_guard: float = DEFAULT_POLE_GUARD,
    pole_warn: float = DEFAULT_POLE_WARN,
    diagnostics: StepDiagnostics | None = None,
):
    """One classical RK4 step of the chosen backend.

    ``field_sampler(t)`` returns the local electric field (V/m) and must be
    defined at t, t + dt/2 and t + dt. For the NH backends the rates are
    re-evaluated at every sub-stage from the sub-stage coefficients;
    freezing them at the step start would degrade accuracy to first order
    near inversion.
    """
    if dt <= 0:
        raise ValueError("dt must be positive")
    rhs = _rhs_for(model, params, pole_guard, pole_warn, diagnostics)
    om_0 = rabi_frequency(field_sampler(t), params)
    om_h = rabi_frequency(field_sampler(t + dt / 2), params)
    om_1 = rabi_frequency(field_sampler(t + dt), params)
    k1 = rhs(state, om_0)
    k2 = rhs(_axpy(state, dt / 2, k1), om_h)
    k3 = rhs(_axpy(state, dt / 2, k2), om_h)
    k4 = rhs(_axpy(state, dt, k3), om_1)
    out = _axpy(state, dt / 6, k1)
    out = _axpy(out, dt / 3, k2)
    out = _axpy(out, dt / 3, k3)
    return _axpy(out, dt / 6, k4)


def observables(state, params: EmitterParams) -> QuantumObservables:
    """Excited population, coherence and dipole expectation of a state."""
    if isinstance(state, BlochState):
        coh = state.rho12
        pop = state.rho22
    elif isinstance(state, WaveCoeffs):
        coh = state.c1 * np.conj(state.c2)
        pop = np.abs(state.c2) ** 2
    else:
        raise TypeError(f"unsupported state type {type(state).__name__}")
    return QuantumObservables(
        pop_excited=pop,
        coherence=coh,
        dipole_expect=2.0 * params.mu_x * np.real(coh),
    )


__all__ = [
    "BACKENDS", "DEFAULT_POLE_GUARD", "DEFAULT_POLE_WARN",
    "EmitterParams", "BlochState", "WaveCoeffs", "QuantumObservables",
    "StepDiagnostics", "InvalidStateError",
    "rabi_frequency", "bloch_rhs", "nh1_rates", "nh2_rates", "nh_rhs",
    "rk4_step", "observables",
]
