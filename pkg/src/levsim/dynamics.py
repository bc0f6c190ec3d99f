"""Drift and diffusion fields for the coupled-nanoparticle models.

Two levels of description are implemented:

* slow flow -- first-order stochastic equations for the four slowly varying
  quadratures (Q1, P1, Q2, P2) in a frame rotating at the trap frequency.
  Particle 2 carries the parametric drive (squeezing strength r), linear
  feedback heating (gamma_a) and cubic feedback cooling (gamma_f); particle 1
  is a damped rotator driven unidirectionally by particle 2 at rate s.
* full oscillation -- the underlying second-order Langevin equations for the
  dimensionless positions (Q_z1, Q_z2) at the trap frequency omega0, used as
  a cross-check of the averaging step.

Particle 2's slow-flow drift is the negative gradient of a rotationally
structured potential, which is what makes its exact stationary density
available in closed form (see the stationary-density module).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .params import (BOLTZMANN, HBAR, CouplingCoefficients, ScenarioParams)

__all__ = [
    "QuadratureState", "OscillatorState", "NoiseSpec",
    "slow_flow_drift", "full_oscillation_drift", "slow_flow_diffusion",
    "quadrature_potential", "quadrature_potential_gradient",
]


# ----------------------------------------------------------------------------
# state containers
# ----------------------------------------------------------------------------

@dataclass
class QuadratureState:
    """Slowly varying quadrature amplitudes of both particles (dimensionless)."""

    Q1: float
    P1: float
    Q2: float
    P2: float

    def as_array(self) -> np.ndarray:
        return np.array([self.Q1, self.P1, self.Q2, self.P2], dtype=float)

    @classmethod
    def from_array(cls, arr) -> "QuadratureState":
        q1, p1, q2, p2 = np.asarray(arr, dtype=float)
        return cls(q1, p1, q2, p2)

    def is_finite(self) -> bool:
        return bool(np.all(np.isfinite(self.as_array())))


@dataclass
class OscillatorState:
    """Dimensionless positions and velocities of both particles plus time."""

    Q_z1: float
    V_z1: float
    Q_z2: float
    V_z2: float
    t: float = 0.0

    def as_array(self) -> np.ndarray:
        return np.array([self.Q_z1, self.V_z1, self.Q_z2, self.V_z2], dtype=float)


@dataclass(frozen=True)
class NoiseSpec:
    """Noise amplitudes for both models.

    ``diffusion`` holds the four slow-flow Fokker-Planck diffusion
    coefficients (each A_t/4 by default); the corresponding SDE amplitude per
    quadrature is sqrt(2 * diffusion).  ``thermal_amplitude_*`` is the
    quadrature-level environmental amplitude sqrt(2 kB T gamma_g / hbar omega)
    and ``scattering_amplitude_*`` the trap-light amplitude sqrt(D_t); the
    second-order model multiplies both by omega0 to convert them into
    acceleration noise.  All channels are independent, zero-mean and
    delta-correlated.
    """

    diffusion: tuple[float, float, float, float]
    thermal_amplitude_1: float
    thermal_amplitude_2: float
    scattering_amplitude_1: float
    scattering_amplitude_2: float

    def __post_init__(self) -> None:
        if any(d < 0.0 for d in self.diffusion):
            raise ValueError("diffusion coefficients must be >= 0")
        for a in (self.thermal_amplitude_1, self.thermal_amplitude_2,
                  self.scattering_amplitude_1, self.scattering_amplitude_2):
            if a < 0.0:
                raise ValueError("noise amplitudes must be >= 0")

    @property
    def sde_amplitudes(self) -> np.ndarray:
        """Per-quadrature white-noise amplitudes for the slow-flow SDE."""
        return np.sqrt(2.0 * np.asarray(self.diffusion, dtype=float))


# ----------------------------------------------------------------------------
# slow-flow model
# ----------------------------------------------------------------------------

def _state_array(state) -> np.ndarray:
    if isinstance(state, QuadratureState):
        return state.as_array()
    return np.asarray(state, dtype=float)


def slow_flow_drift(state, sp: ScenarioParams) -> np.ndarray:
    """Deterministic part of the slow-flow equations, (dQ1,dP1,dQ2,dP2)/dt.

    dQ1/dt = -gamma_g1 Q1 + s P1 - s P2
    dP1/dt = -gamma_g1 P1 - s Q1 + s Q2
    dQ2/dt = -(gamma_g2 (1 - r) - gamma_a + 6 gamma_f (Q2^2+P2^2)) Q2
    dP2/dt = -(gamma_g2 (1 + r) - gamma_a + 6 gamma_f (Q2^2+P2^2)) P2

    ``state`` may be a QuadratureState or any array with the four quadratures
    on the last axis; the drift is evaluated componentwise.
    """
    x = _state_array(state)
    q1, p1, q2, p2 = (x[..., 0], x[..., 1], x[..., 2], x[..., 3])
    n2 = q2 * q2 + p2 * p2
    out = np.empty_like(x)
    out[..., 0] = -sp.gamma_g1 * q1 + sp.s * p1 - sp.s * p2
    out[..., 1] = -sp.gamma_g1 * p1 - sp.s * q1 + sp.s * q2
    out[..., 2] = -(sp.gamma_g2 * (1.0 - sp.r) - sp.gamma_a
                    + 6.0 * sp.gamma_f * n2) * q2
    out[..., 3] = -(sp.gamma_g2 * (1.0 + sp.r) - sp.gamma_a
                    + 6.0 * sp.gamma_f * n2) * p2
    return out


def quadrature_potential(q2, p2, sp: ScenarioParams):
    """Potential U(Q2, P2) whose negative gradient is particle 2's drift.

    U = 1/2 (gamma_g2(1-r) - gamma_a) Q2^2 + 1/2 (gamma_g2(1+r) - gamma_a) P2^2
        + (3 gamma_f / 2) (Q2^2 + P2^2)^2
    """
    q2 = np.asarray(q2, dtype=float)
    p2 = np.asarray(p2, dtype=float)
    c_q = sp.gamma_g2 * (1.0 - sp.r) - sp.gamma_a
    c_p = sp.gamma_g2 * (1.0 + sp.r) - sp.gamma_a
    n = q2 * q2 + p2 * p2
    return 0.5 * c_q * q2 * q2 + 0.5 * c_p * p2 * p2 + 1.5 * sp.gamma_f * n * n


def quadrature_potential_gradient(q2, p2, sp: ScenarioParams):
    """Analytic gradient (dU/dQ2, dU/dP2) of ``quadrature_potential``."""
    q2 = np.asarray(q2, dtype=float)
    p2 = np.asarray(p2, dtype=float)
    c_q = sp.gamma_g2 * (1.0 - sp.r) - sp.gamma_a
    c_p = sp.gamma_g2 * (1.0 + sp.r) - sp.gamma_a
    n = q2 * q2 + p2 * p2
    return (c_q * q2 + 6.0 * sp.gamma_f * n * q2,
            c_p * p2 + 6.0 * sp.gamma_f * n * p2)


def slow_flow_diffusion(sp: ScenarioParams) -> NoiseSpec:
    """Noise specification implied by the scenario rates.

    Each slow-flow quadrature receives an independent white noise whose
    Fokker-Planck diffusion coefficient is A_t/4 (SDE amplitude
    sqrt(A_t/2)).  When the optional thermal block is enabled, the
    environmental force of quadrature-level amplitude
    th = sqrt(2 kB T gamma_g / (hbar omega0)) adds th^2/4 to each diffusion
    coefficient -- the demodulated image of the same force in the
    second-order model, keeping the two descriptions consistent.
    """
    base = sp.D_t / 4.0
    th1 = th2 = 0.0
    if sp.temperature is not None and sp.temperature > 0.0:
        gas1 = sp.gas_damping if sp.gas_damping is not None else sp.gamma_g1
        gas2 = sp.gas_damping if sp.gas_damping is not None else sp.gamma_g2
        th1 = 2.0 * BOLTZMANN * sp.temperature * gas1 / (HBAR * sp.omega0)
        th2 = 2.0 * BOLTZMANN * sp.temperature * gas2 / (HBAR * sp.omega0)
    diffusion = (base + th1 / 4.0, base + th1 / 4.0,
                 base + th2 / 4.0, base + th2 / 4.0)
    return NoiseSpec(
        diffusion=diffusion,
        thermal_amplitude_1=np.sqrt(th1),
        thermal_amplitude_2=np.sqrt(th2),
        scattering_amplitude_1=np.sqrt(sp.D_t),
        scattering_amplitude_2=np.sqrt(sp.D_t),
    )


# ----------------------------------------------------------------------------
# full second-order model
# ----------------------------------------------------------------------------

def full_oscillation_drift(state, sp: ScenarioParams,
                           coeffs: CouplingCoefficients,
                           t: float | None = None) -> np.ndarray:
    """Accelerations (d2Q_z1, d2Q_z2)/dt2 of the second-order model.

    d2Q_z1 = -w0^2 Q_z1 - 2 gamma_g1 V_z1 - w0 S1 Q_z1 + w0 S12 Q_z2
    d2Q_z2 = -w0^2 Q_z2 - 2 (gamma_g2 - gamma_a + 6 gamma_f Q_z2^2) V_z2
             - f w0 sin(2 w0 t) Q_z2 - w0 S2 Q_z2 + w0 S21 Q_z1

    Both trap frequencies are taken equal to omega0.  ``state`` may be an
    OscillatorState (in which case its own time is used) or an array
    (..., 4) of (Q_z1, V_z1, Q_z2, V_z2) with ``t`` passed explicitly.
    """
    if isinstance(state, OscillatorState):
        if t is None:
            t = state.t
        x = state.as_array()
    else:
        x = np.asarray(state, dtype=float)
        if t is None:
            t = 0.0
    w0 = sp.omega0
    qz1, vz1, qz2, vz2 = (x[..., 0], x[..., 1], x[..., 2], x[..., 3])
    acc = np.empty(x.shape[:-1] + (2,), dtype=float)
    acc[..., 0] = (-w0 * w0 * qz1 - 2.0 * sp.gamma_g1 * vz1
                   - w0 * coeffs.S1 * qz1 + w0 * coeffs.S12 * qz2)
    feedback = sp.gamma_g2 - sp.gamma_a + 6.0 * sp.gamma_f * qz2 * qz2
    acc[..., 1] = (-w0 * w0 * qz2 - 2.0 * feedback * vz2
                   - sp.f_effective * w0 * np.sin(2.0 * w0 * t) * qz2
                   - w0 * coeffs.S2 * qz2 + w0 * coeffs.S21 * qz1)
    return acc
