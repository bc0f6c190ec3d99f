"""Physical parameters and optical-binding coupling algebra.

Two nanoparticles held in separate optical tweezers interact through the light
each one scatters toward the other.  The interaction enters the equations of
motion through four rate coefficients (S1, S2, S12, S21) built from a single
modulating constant g, the dimensionless trap separation k*d0 and the relative
beam phase dphi.  At special operating points the backward coefficients vanish
exactly and the coupling becomes unidirectional: particle 1 feels particle 2
but not vice versa.

This module also defines the scenario-level rate sets (damping, noise,
parametric drive, feedback rates) consumed by the dynamics and integrator
modules, together with the preset parameter sets for the three standard
scenarios (squeeze / coherent / bistable).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

# ----------------------------------------------------------------------------
# physical constants (SI)
# ----------------------------------------------------------------------------

SPEED_OF_LIGHT = 299_792_458.0          # m / s
VACUUM_PERMITTIVITY = 8.8541878128e-12  # F / m
BOLTZMANN = 1.380649e-23                # J / K
HBAR = 1.054571817e-34                  # J s

VALID_SCENARIOS = ("squeeze", "coherent", "bistable", "custom")


class InvalidParameterError(ValueError):
    """Raised when a physical parameter violates its documented constraints."""


# ----------------------------------------------------------------------------
# optical setup and coupling coefficients
# ----------------------------------------------------------------------------

@dataclass(frozen=True)
class OpticalSetup:
    """Trap geometry and beam parameters feeding the coupling algebra.

    Lengths in metres, powers in watts, phases in radians, polarizability in
    C m^2 / V.  Beam powers may be zero (which switches the coupling off);
    all length scales must be strictly positive.
    """

    polarizability: float          # alpha
    wave_vector: float             # k
    rayleigh_range: float          # z_R
    power_1: float                 # P1
    power_2: float                 # P2
    beam_waist: float              # w_b
    inter_particle_distance: float  # d0
    phase_1: float = 0.0
    phase_2: float = 0.0
    c: float = SPEED_OF_LIGHT
    epsilon_0: float = VACUUM_PERMITTIVITY

    def __post_init__(self) -> None:
        for name in ("wave_vector", "rayleigh_range", "beam_waist",
                     "inter_particle_distance"):
            if getattr(self, name) <= 0.0:
                raise InvalidParameterError(
                    f"OpticalSetup.{name} must be strictly positive, "
                    f"got {getattr(self, name)!r}")
        for name in ("power_1", "power_2"):
            if getattr(self, name) < 0.0:
                raise InvalidParameterError(
                    f"OpticalSetup.{name} must be non-negative, "
                    f"got {getattr(self, name)!r}")
        if self.polarizability == 0.0:
            raise InvalidParameterError("OpticalSetup.polarizability must be nonzero")
        if self.wave_vector * self.inter_particle_distance <= 0.0:
            raise InvalidParameterError("k * d0 must be strictly positive")

    @property
    def kd0(self) -> float:
        """Dimensionless separation k * d0."""
        return self.wave_vector * self.inter_particle_distance

    @property
    def dphi(self) -> float:
        """Relative beam phase phase_1 - phase_2."""
        return self.phase_1 - self.phase_2


@dataclass(frozen=True)
class CouplingCoefficients:
    """Optical-binding rate coefficients (all in 1/s).

    S1 and S2 shift the two trap frequencies; S12 drives particle 1 with
    particle 2's position and S21 the reverse.  The identities S1 = g1 + g2
    and S2 = g1 - g2 hold exactly by construction.
    """

    g: float
    g1: float
    g2: float
    S1: float
    S2: float
    S12: float
    S21: float


def modulating_constant(setup: OpticalSetup) -> float:
    """Overall coupling scale g from the trap and beam parameters.

    g = alpha^2 k^3 (k - 1/z_R)^2 sqrt(P1 P2) / (2 c w_b^2 pi^2 eps0^2)
    """
    if setup.power_1 < 0.0 or setup.power_2 < 0.0:
        raise InvalidParameterError("beam powers must be non-negative")
    if setup.beam_waist <= 0.0:
        raise InvalidParameterError("beam waist must be strictly positive")
    alpha = setup.polarizability
    k = setup.wave_vector
    numer = (alpha ** 2 * k ** 3 * (k - 1.0 / setup.rayleigh_range) ** 2
             * math.sqrt(setup.power_1 * setup.power_2))
    denom = (2.0 * setup.c * setup.beam_waist ** 2
             * math.pi ** 2 * setup.epsilon_0 ** 2)
    return numer / denom


def coupling_coefficients(g: float, kd0: float, dphi: float) -> CouplingCoefficients:
    """Populate all seven coupling coefficients at separation kd0 and phase dphi.

    g1 = g cos(kd0) cos(dphi) / kd0      g2 = g sin(kd0) sin(dphi) / kd0
    S12 = g cos(kd0 - dphi) / kd0        S21 = g cos(kd0 + dphi) / kd0
    S1 = g1 + g2                         S2 = g1 - g2
    """
    if kd0 <= 0.0:
        raise InvalidParameterError(f"kd0 must be strictly positive, got {kd0!r}")
    g1 = g * math.cos(kd0) * math.cos(dphi) / kd0
    g2 = g * math.sin(kd0) * math.sin(dphi) / kd0
    S12 = g * math.cos(kd0 - dphi) / kd0
    S21 = g * math.cos(kd0 + dphi) / kd0
    return CouplingCoefficients(g=g, g1=g1, g2=g2,
                                S1=g1 + g2, S2=g1 - g2, S12=S12, S21=S21)


def is_unidirectional(coeffs: CouplingCoefficients, tol: float = 1e-6) -> str:
    """Classify the coupling direction: 'none', 'one_to_two' or 'two_to_one'.

    'two_to_one' means energy flows from particle 2 into particle 1 only
    (the backward drive S21 and the frequency shift S2 both vanish to within
    tol relative to the surviving coefficients).
    """
    if tol <= 0.0:
        raise InvalidParameterError(f"tol must be positive, got {tol!r}")
    if coeffs.g == 0.0:
        return "none"
    two_to_one = (abs(coeffs.S21) <= tol * abs(coeffs.S12)
                  and abs(coeffs.S2) <= tol * max(abs(coeffs.S1), abs(coeffs.g)))
    one_to_two = (abs(coeffs.S12) <= tol * abs(coeffs.S21)
                  and abs(coeffs.S1) <= tol * max(abs(coeffs.S2), abs(coeffs.g)))
    if two_to_one and not one_to_two:
        return "two_to_one"
    if one_to_two and not two_to_one:
        return "one_to_two"
    return "none"


def coupling_rate_s(coeffs: CouplingCoefficients) -> float:
    """Slow-flow coupling rate s implied by the coefficients: s = S12 / 2.

    Standard averaging of the second-order model at the unidirectional point
    (where S1 = S12) maps the position coupling onto a quadrature rotation at
    S1/2 and a drive at S12/2; both reduce to the single rate s.
    """
    return 0.5 * coeffs.S12


# ----------------------------------------------------------------------------
# scenario-level rates
# ----------------------------------------------------------------------------

@dataclass(frozen=True)
class ScenarioParams:
    """Rates entering the stochastic equations of motion.

    All first-order rates (gamma_*, A_t, D_p, s) are plain 1/s; omega0 is
    angular (rad/s).  ``f`` is the dimensionless parametric-drive amplitude
    and ``r`` the resulting squeezing strength; when both are given they must
    satisfy r = f * omega0 / gamma_g2.  The optional thermal block
    (temperature, gas_damping) feeds the environmental Langevin force and
    defaults to off.
    """

    scenario: str = "custom"
    omega0: float = 2.0 * math.pi * 127e3   # rad/s
    gamma_g1: float = 1.0                   # 1/s
    gamma_g2: float = 1.0                   # 1/s
    A_t: float = 1000.0                     # 1/s
    D_p: float = 0.0                        # 1/s
    gamma_a: float = 0.0                    # 1/s
    gamma_f: float = 0.0                    # 1/s
    r: float = 0.0                          # dimensionless
    f: float | None = None                  # dimensionless
    s: float = 100.0                        # 1/s
    temperature: float | None = None        # K
    gas_damping: float | None = None        # 1/s

    def __post_init__(self) -> None:
        if self.scenario not in VALID_SCENARIOS:
            raise InvalidParameterError(
                f"unknown scenario tag {self.scenario!r}; "
                f"expected one of {VALID_SCENARIOS}")
        if self.A_t < 0.0:
            raise InvalidParameterError(f"A_t must be >= 0, got {self.A_t!r}")
        if self.D_p < 0.0:
            raise InvalidParameterError(f"D_p must be >= 0, got {self.D_p!r}")
        if self.gamma_f < 0.0:
            raise InvalidParameterError(f"gamma_f must be >= 0, got {self.gamma_f!r}")
        if self.omega0 <= 0.0:
            raise InvalidParameterError(f"omega0 must be > 0, got {self.omega0!r}")
        if self.gamma_g1 < 0.0 or self.gamma_g2 < 0.0:
            raise InvalidParameterError("gamma_g rates must be >= 0")
        if self.temperature is not None and self.temperature < 0.0:
            raise InvalidParameterError("temperature must be >= 0")
        if self.f is not None and self.gamma_g2 > 0.0:
            implied_r = self.f * self.omega0 / self.gamma_g2
            scale = max(1.0, abs(self.r), abs(implied_r))
            if abs(implied_r - self.r) > 1e-9 * scale:
                raise InvalidParameterError(
                    f"inconsistent parametric drive: r = {self.r!r} but "
                    f"f*omega0/gamma_g2 = {implied_r!r} "
                    "(the consistency relation is r = f*omega0/gamma_g2)")

    @property
    def D_t(self) -> float:
        """Total position-noise rate: scattering A_t plus pointing noise D_p."""
        return self.A_t + self.D_p

    @property
    def f_effective(self) -> float:
        """Parametric amplitude, deriving f from r when not given explicitly."""
        if self.f is not None:
            return self.f
        if self.gamma_g2 == 0.0:
            return 0.0
        return self.r * self.gamma_g2 / self.omega0


def scenario_defaults(tag: str) -> dict:
    """Preset rate set for one of the named scenarios (plain-dict form).

    squeeze  - parametric drive only: thermal squeezed state on particle 2.
    coherent - linear feedback heating balanced by cubic feedback cooling:
               phase-space ring (random-phase coherent state).
    bistable - strong parametric drive plus cubic feedback on a stiffer trap.
    """
    base = dict(omega0=2.0 * math.pi * 127e3, gamma_g1=1.0, gamma_g2=1.0,
                A_t=1000.0, D_p=0.0, gamma_a=0.0, gamma_f=0.0,
                r=0.0, s=100.0)
    if tag == "squeeze":
        base.update(r=0.8)
    elif tag == "coherent":
        base.update(gamma_a=20.0, gamma_f=1e-4)
    elif tag == "bistable":
        base.update(gamma_g2=20.0, r=0.9, gamma_f=2e-4)
    elif tag != "custom":
        raise InvalidParameterError(
            f"unknown scenario tag {tag!r}; expected one of {VALID_SCENARIOS}")
    base["scenario"] = tag
    return base


def scenario_params(tag: str, **overrides) -> ScenarioParams:
    """ScenarioParams preset for ``tag`` with keyword overrides applied."""
    values = scenario_defaults(tag)
    values.update(overrides)
    return ScenarioParams(**values)
