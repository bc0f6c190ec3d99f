"""Stochastic integration of the coupled-particle models.

Two integration schemes are provided (Euler-Maruyama and stochastic Heun)
together with ensemble drivers for the two dynamical models:

* ``slow_flow`` -- the four coupled quadrature SDEs with additive noise,
* ``full_oscillation`` -- the underlying second-order oscillator equations
  driven at twice the trap frequency, with additive force noise.

The reference steppers (:func:`step_euler_maruyama`, :func:`step_heun`)
operate on plain arrays and a drift callable; they define the arithmetic
that the compiled production kernels reproduce.  Ensembles are advanced in
fixed-size chunks by numba kernels that loop over trajectories with
per-trajectory scalar state, so each trajectory's floating-point history is
independent of how many others run alongside it.

Reproducibility contract: trajectory ``i`` of an ensemble consumes the
stream ``SFC64(SeedSequence([master_seed, i]))``, drawing first the four
standard normals of the initial condition (when the initial kind is random)
and then the per-step Gaussian increments in simulation order.  The same
trajectory re-run alone through :func:`simulate_trajectory` is bit-identical
to the ensemble member.
"""

from __future__ import annotations

import hashlib
import json
import warnings
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numba
import numpy as np

from .dynamics import NoiseSpec, slow_flow_diffusion
from .params import CouplingCoefficients, InvalidParameterError, ScenarioParams

__all__ = [
    "InitialState",
    "SimConfig",
    "Trajectory",
    "Ensemble",
    "IntegratorBlowupError",
    "step_euler_maruyama",
    "step_heun",
    "simulate_trajectory",
    "run_ensemble",
    "full_oscillation_noise_amplitudes",
]

# Models and initial-condition kinds accepted by SimConfig.
VALID_MODELS = ("slow_flow", "full_oscillation")
VALID_METHODS = ("heun", "euler")
VALID_INITIAL_KINDS = ("thermal", "gaussian", "point")

# Chunked advancement: noise for K steps at a time is pre-drawn into one
# buffer.  The chunk length is chosen so the buffer stays modest (~64 MB)
# regardless of ensemble size; chunking never affects results because each
# trajectory's draw sequence and arithmetic are chunk-independent.
_CHUNK_BUDGET_DOUBLES = 8_388_608


class IntegratorBlowupError(RuntimeError):
    """A trajectory left the finite range during integration.

    Attributes
    ----------
    time : float or None
        Simulation time by which the non-finite value was detected.
    trajectory_indices : tuple of int
        Ensemble indices of the offending trajectories (empty when raised
        from a bare stepper call, which has no ensemble context).
    """

    def __init__(self, message, time=None, trajectory_indices=()):
        super().__init__(message)
        self.time = time
        self.trajectory_indices = tuple(trajectory_indices)


# ---------------------------------------------------------------------------
# configuration containers
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class InitialState:
    """Initial-condition specification for the quadrature vector.

    kind = 'thermal'   draw each particle from its own Gaussian steady state
                       under damping alone, variance A_t / (4 gamma_gj) per
                       quadrature (zero for an undamped particle);
    kind = 'gaussian'  draw from N(mean, diag(variance));
    kind = 'point'     start every trajectory at ``values`` exactly.

    ``offset`` is added to the drawn state afterwards in every case, which
    lets perturbation studies shift one particle while reusing the identical
    random draws of an unperturbed ensemble.
    """

    kind: str = "thermal"
    mean: tuple = (0.0, 0.0, 0.0, 0.0)
    variance: tuple = (0.0, 0.0, 0.0, 0.0)
    values: tuple = (0.0, 0.0, 0.0, 0.0)
    offset: tuple = (0.0, 0.0, 0.0, 0.0)

    def __post_init__(self):
        if self.kind not in VALID_INITIAL_KINDS:
            raise InvalidParameterError(
                "initial kind must be one of %s, got %r"
                % (", ".join(VALID_INITIAL_KINDS), self.kind))
        for name in ("mean", "variance", "values", "offset"):
            vec = tuple(float(v) for v in getattr(self, name))
            if len(vec) != 4:
                raise InvalidParameterError(
                    "initial %s must have 4 components, got %d"
                    % (name, len(vec)))
            if not np.all(np.isfinite(vec)):
                raise InvalidParameterError(
                    "initial %s must be finite" % name)
            object.__setattr__(self, name, vec)
        if self.kind == "gaussian" and any(v < 0.0 for v in self.variance):
            raise InvalidParameterError(
                "initial variance components must be non-negative")


@dataclass(frozen=True)
class SimConfig:
    """Integration-run configuration.

    ``burn_in`` is discarded: samples are recorded at global steps
    ``burn_steps + j * record_stride`` for j = 1, 2, ... so the first
    recorded time is ``burn_in + record_stride * dt`` and the edge case
    ``burn_in = t_end - dt`` (stride 1) records exactly one sample.
    """

    dt: float = 1e-4
    t_end: float = 10.0
    burn_in: float = 0.0
    n_trajectories: int = 100
    master_seed: int = 0
    record_stride: int = 1
    model: str = "slow_flow"
    method: str = "heun"
    initial: InitialState = field(default_factory=InitialState)

    def __post_init__(self):
        if not (np.isfinite(self.dt) and self.dt > 0.0):
            raise InvalidParameterError("dt must be finite and positive")
        if not (np.isfinite(self.t_end) and self.t_end > 0.0):
            raise InvalidParameterError("t_end must be finite and positive")
        if not (np.isfinite(self.burn_in) and self.burn_in >= 0.0):
            raise InvalidParameterError("burn_in must be non-negative")
        if self.burn_in >= self.t_end:
            raise InvalidParameterError(
                "burn_in (%g) must be smaller than t_end (%g)"
                % (self.burn_in, self.t_end))
        if self.n_trajectories < 1:
            raise InvalidParameterError("n_trajectories must be >= 1")
        if self.record_stride < 1:
            raise InvalidParameterError("record_stride must be >= 1")
        if not (0 <= int(self.master_seed) < 2 ** 63):
            raise InvalidParameterError(
                "master_seed must be a non-negative 63-bit integer")
        if self.model not in VALID_MODELS:
            raise InvalidParameterError(
                "model must be one of %s, got %r"
                % (", ".join(VALID_MODELS), self.model))
        if self.method not in VALID_METHODS:
            raise InvalidParameterError(
                "method must be one of %s, got %r"
                % (", ".join(VALID_METHODS), self.method))
        if self.n_steps - self.burn_steps < self.record_stride:
            raise InvalidParameterError(
                "no samples recorded: t_end - burn_in (%g) spans fewer than "
                "record_stride (%d) steps of dt = %g"
                % (self.t_end - self.burn_in, self.record_stride, self.dt))

    @property
    def n_steps(self) -> int:
        return int(round(self.t_end / self.dt))

    @property
    def burn_steps(self) -> int:
        return int(round(self.burn_in / self.dt))

    @property
    def n_recorded(self) -> int:
        return (self.n_steps - self.burn_steps) // self.record_stride

    @property
    def recorded_times(self) -> np.ndarray:
        j = np.arange(1, self.n_recorded + 1)
        return (self.burn_steps + j * self.record_stride) * self.dt


# ---------------------------------------------------------------------------
# results containers
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class Trajectory:
    """One recorded trajectory on the shared time grid.

    ``samples`` has shape (n_recorded, 4) holding (Q1, P1, Q2, P2); for the
    full-oscillation model these are the demodulated quadratures unless the
    ensemble was run with ``demodulate=False``, in which case they are
    (Q_z1, V_z1, Q_z2, V_z2).
    """

    times: np.ndarray
    samples: np.ndarray
    sub_seed: tuple

    def __post_init__(self):
        if self.samples.shape != (self.times.shape[0], 4):
            raise InvalidParameterError(
                "samples shape %s does not match %d recorded times"
                % (self.samples.shape, self.times.shape[0]))


@dataclass(frozen=True)
class Ensemble:
    """A batch of trajectories sharing one time grid and configuration.

    ``data`` has shape (n_trajectories, n_recorded, 4).  ``trajectories``
    builds lightweight per-trajectory views on demand.
    """

    times: np.ndarray
    data: np.ndarray
    config: SimConfig
    params: ScenarioParams
    parameter_hash: str

    @property
    def n_trajectories(self) -> int:
        return self.data.shape[0]

    @property
    def trajectories(self) -> list:
        return [
            Trajectory(self.times, self.data[i],
                       (self.config.master_seed, i))
            for i in range(self.data.shape[0])
        ]

    def __iter__(self):
        return iter(self.trajectories)


def parameter_hash(cfg: SimConfig, sp: ScenarioParams,
                   coeffs: CouplingCoefficients | None = None) -> str:
    """Short stable digest of everything that determines an ensemble."""
    payload = {
        "config": {
            "dt": cfg.dt, "t_end": cfg.t_end, "burn_in": cfg.burn_in,
            "n_trajectories": cfg.n_trajectories,
            "master_seed": int(cfg.master_seed),
            "record_stride": cfg.record_stride,
            "model": cfg.model, "method": cfg.method,
            "initial": {
                "kind": cfg.initial.kind, "mean": cfg.initial.mean,
                "variance": cfg.initial.variance,
                "values": cfg.initial.values, "offset": cfg.initial.offset,
            },
        },
        "params": {
            "scenario": sp.scenario, "omega0": sp.omega0,
            "gamma_g1": sp.gamma_g1, "gamma_g2": sp.gamma_g2,
            "A_t": sp.A_t, "D_p": sp.D_p, "gamma_a": sp.gamma_a,
            "gamma_f": sp.gamma_f, "r": sp.r, "f": sp.f, "s": sp.s,
            "temperature": sp.temperature, "gas_damping": sp.gas_damping,
        },
    }
    if coeffs is not None:
        payload["coupling"] = {
            "g": coeffs.g, "S1": coeffs.S1, "S2": coeffs.S2,
            "S12": coeffs.S12, "S21": coeffs.S21,
        }
    blob = json.dumps(payload, sort_keys=True).encode()
    return hashlib.sha256(blob).hexdigest()[:16]


# ---------------------------------------------------------------------------
# reference steppers
# ---------------------------------------------------------------------------

def _amplitude_array(noise_spec) -> np.ndarray:
    if isinstance(noise_spec, NoiseSpec):
        return noise_spec.sde_amplitudes
    amps = np.asarray(noise_spec, dtype=float)
    if np.any(amps < 0.0):
        raise InvalidParameterError("noise amplitudes must be non-negative")
    return amps


def step_euler_maruyama(state: np.ndarray,
                        drift: Callable[[np.ndarray], np.ndarray],
                        noise_spec,
                        dt: float,
                        increments: np.ndarray) -> np.ndarray:
    """One Euler-Maruyama step ``x + f(x) dt + amp sqrt(dt) dW``.

    ``increments`` are standard-normal draws, one per state component;
    ``noise_spec`` is either a :class:`NoiseSpec` or a per-component SDE
    amplitude array.
    """
    state = np.asarray(state, dtype=float)
    amps = _amplitude_array(noise_spec)
    w = amps * np.sqrt(dt) * np.asarray(increments, dtype=float)
    out = state + np.asarray(drift(state), dtype=float) * dt + w
    if not np.all(np.isfinite(out)):
        raise IntegratorBlowupError(
            "non-finite state after Euler-Maruyama step")
    return out


def step_heun(state: np.ndarray,
              drift: Callable[[np.ndarray], np.ndarray],
              noise_spec,
              dt: float,
              increments: np.ndarray) -> np.ndarray:
    """One stochastic Heun step (predictor-corrector, shared increment).

    Predictor: x_p = x + f(x) dt + w
    Corrector: x'  = x + (f(x) + f(x_p)) dt / 2 + w
    with the same additive noise increment w = amp sqrt(dt) dW in both
    stages, which keeps the scheme weak order 1 with much better damping of
    fast rotations than Euler-Maruyama.
    """
    state = np.asarray(state, dtype=float)
    amps = _amplitude_array(noise_spec)
    w = amps * np.sqrt(dt) * np.asarray(increments, dtype=float)
    f0 = np.asarray(drift(state), dtype=float)
    predictor = state + f0 * dt + w
    f1 = np.asarray(drift(predictor), dtype=float)
    out = state + 0.5 * (f0 + f1) * dt + w
    if not np.all(np.isfinite(out)):
        raise IntegratorBlowupError("non-finite state after Heun step")
    return out


# ---------------------------------------------------------------------------
# compiled chunk kernels
# ---------------------------------------------------------------------------
# Each kernel advances every trajectory through `n_sub` steps using the
# pre-drawn standard normals in `noise` (n_traj, n_sub, n_channels) scaled
# by sqrt(dt) outside.  `k0` is the number of globally completed steps at
# entry; recording happens at global steps g = burn_steps + j * stride.

@numba.njit(cache=True)
def _slow_flow_heun_chunk(states, noise, amps, dt, k0, n_sub,
                          burn_steps, stride, rec,
                          g1, g2lo, g2hi, ga, gf6, s):
    n_traj = states.shape[0]
    a0, a1, a2, a3 = amps[0], amps[1], amps[2], amps[3]
    for i in range(n_traj):
        q1 = states[i, 0]
        p1 = states[i, 1]
        q2 = states[i, 2]
        p2 = states[i, 3]
        for k in range(n_sub):
            w0 = a0 * noise[i, k, 0]
            w1 = a1 * noise[i, k, 1]
            w2 = a2 * noise[i, k, 2]
            w3 = a3 * noise[i, k, 3]
            n2 = q2 * q2 + p2 * p2
            f0 = -g1 * q1 + s * p1 - s * p2
            f1 = -g1 * p1 - s * q1 + s * q2
            f2 = -(g2lo - ga + gf6 * n2) * q2
            f3 = -(g2hi - ga + gf6 * n2) * p2
            qp1 = q1 + f0 * dt + w0
            pp1 = p1 + f1 * dt + w1
            qp2 = q2 + f2 * dt + w2
            pp2 = p2 + f3 * dt + w3
            n2p = qp2 * qp2 + pp2 * pp2
            h0 = -g1 * qp1 + s * pp1 - s * pp2
            h1 = -g1 * pp1 - s * qp1 + s * qp2
            h2 = -(g2lo - ga + gf6 * n2p) * qp2
            h3 = -(g2hi - ga + gf6 * n2p) * pp2
            q1 = q1 + 0.5 * (f0 + h0) * dt + w0
            p1 = p1 + 0.5 * (f1 + h1) * dt + w1
            q2 = q2 + 0.5 * (f2 + h2) * dt + w2
            p2 = p2 + 0.5 * (f3 + h3) * dt + w3
            g = k0 + k + 1
            if g > burn_steps and (g - burn_steps) % stride == 0:
                j = (g - burn_steps) // stride - 1
                rec[i, j, 0] = q1
                rec[i, j, 1] = p1
                rec[i, j, 2] = q2
                rec[i, j, 3] = p2
        states[i, 0] = q1
        states[i, 1] = p1
        states[i, 2] = q2
        states[i, 3] = p2


@numba.njit(cache=True)
def _slow_flow_euler_chunk(states, noise, amps, dt, k0, n_sub,
                           burn_steps, stride, rec,
                           g1, g2lo, g2hi, ga, gf6, s):
    n_traj = states.shape[0]
    a0, a1, a2, a3 = amps[0], amps[1], amps[2], amps[3]
    for i in range(n_traj):
        q1 = states[i, 0]
        p1 = states[i, 1]
        q2 = states[i, 2]
        p2 = states[i, 3]
        for k in range(n_sub):
            n2 = q2 * q2 + p2 * p2
            f0 = -g1 * q1 + s * p1 - s * p2
            f1 = -g1 * p1 - s * q1 + s * q2
            f2 = -(g2lo - ga + gf6 * n2) * q2
            f3 = -(g2hi - ga + gf6 * n2) * p2
            q1 = q1 + f0 * dt + a0 * noise[i, k, 0]
            p1 = p1 + f1 * dt + a1 * noise[i, k, 1]
            q2 = q2 + f2 * dt + a2 * noise[i, k, 2]
            p2 = p2 + f3 * dt + a3 * noise[i, k, 3]
            g = k0 + k + 1
            if g > burn_steps and (g - burn_steps) % stride == 0:
                j = (g - burn_steps) // stride - 1
                rec[i, j, 0] = q1
                rec[i, j, 1] = p1
                rec[i, j, 2] = q2
                rec[i, j, 3] = p2
        states[i, 0] = q1
        states[i, 1] = p1
        states[i, 2] = q2
        states[i, 3] = p2


@numba.njit(cache=True)
def _full_oscillation_heun_chunk(states, noise, amps, dt, k0, n_sub,
                                 burn_steps, stride, rec,
                                 w0sq, g1, g2, ga, gf6, fdrive,
                                 S1, S2, S12, S21, w0):
    n_traj = states.shape[0]
    a1, a2 = amps[0], amps[1]
    for i in range(n_traj):
        x1 = states[i, 0]
        v1 = states[i, 1]
        x2 = states[i, 2]
        v2 = states[i, 3]
        for k in range(n_sub):
            t = (k0 + k) * dt
            tn = t + dt
            e1 = a1 * noise[i, k, 0]
            e2 = a2 * noise[i, k, 1]
            # predictor stage at time t
            drv = fdrive * np.sin(2.0 * w0 * t)
            acc1 = (-w0sq * x1 - 2.0 * g1 * v1
                    - w0 * S1 * x1 + w0 * S12 * x2)
            acc2 = (-w0sq * x2
                    - 2.0 * (g2 - ga + gf6 * x2 * x2) * v2
                    - w0 * drv * x2
                    - w0 * S2 * x2 + w0 * S21 * x1)
            xp1 = x1 + v1 * dt
            vp1 = v1 + acc1 * dt + e1
            xp2 = x2 + v2 * dt
            vp2 = v2 + acc2 * dt + e2
            # corrector stage at time t + dt
            drvn = fdrive * np.sin(2.0 * w0 * tn)
            acn1 = (-w0sq * xp1 - 2.0 * g1 * vp1
                    - w0 * S1 * xp1 + w0 * S12 * xp2)
            acn2 = (-w0sq * xp2
                    - 2.0 * (g2 - ga + gf6 * xp2 * xp2) * vp2
                    - w0 * drvn * xp2
                    - w0 * S2 * xp2 + w0 * S21 * xp1)
            x1 = x1 + 0.5 * (v1 + vp1) * dt
            v1 = v1 + 0.5 * (acc1 + acn1) * dt + e1
            x2 = x2 + 0.5 * (v2 + vp2) * dt
            v2 = v2 + 0.5 * (acc2 + acn2) * dt + e2
            g = k0 + k + 1
            if g > burn_steps and (g - burn_steps) % stride == 0:
                j = (g - burn_steps) // stride - 1
                rec[i, j, 0] = x1
                rec[i, j, 1] = v1
                rec[i, j, 2] = x2
                rec[i, j, 3] = v2
        states[i, 0] = x1
        states[i, 1] = v1
        states[i, 2] = x2
        states[i, 3] = v2


@numba.njit(cache=True)
def _full_oscillation_euler_chunk(states, noise, amps, dt, k0, n_sub,
                                  burn_steps, stride, rec,
                                  w0sq, g1, g2, ga, gf6, fdrive,
                                  S1, S2, S12, S21, w0):
    n_traj = states.shape[0]
    a1, a2 = amps[0], amps[1]
    for i in range(n_traj):
        x1 = states[i, 0]
        v1 = states[i, 1]
        x2 = states[i, 2]
        v2 = states[i, 3]
        for k in range(n_sub):
            t = (k0 + k) * dt
            drv = fdrive * np.sin(2.0 * w0 * t)
            acc1 = (-w0sq * x1 - 2.0 * g1 * v1
                    - w0 * S1 * x1 + w0 * S12 * x2)
            acc2 = (-w0sq * x2
                    - 2.0 * (g2 - ga + gf6 * x2 * x2) * v2
                    - w0 * drv * x2
                    - w0 * S2 * x2 + w0 * S21 * x1)
            nx1 = x1 + v1 * dt
            nv1 = v1 + acc1 * dt + a1 * noise[i, k, 0]
            nx2 = x2 + v2 * dt
            nv2 = v2 + acc2 * dt + a2 * noise[i, k, 1]
            x1, v1, x2, v2 = nx1, nv1, nx2, nv2
            g = k0 + k + 1
            if g > burn_steps and (g - burn_steps) % stride == 0:
                j = (g - burn_steps) // stride - 1
                rec[i, j, 0] = x1
                rec[i, j, 1] = v1
                rec[i, j, 2] = x2
                rec[i, j, 3] = v2
        states[i, 0] = x1
        states[i, 1] = v1
        states[i, 2] = x2
        states[i, 3] = v2


# ---------------------------------------------------------------------------
# ensemble drivers
# ---------------------------------------------------------------------------

def full_oscillation_noise_amplitudes(sp: ScenarioParams) -> np.ndarray:
    """Per-particle force-noise SDE amplitudes for the second-order model.

    The quadrature-level intensity A_t (plus any photon-recoil excess D_p
    and thermal contribution) maps onto an acceleration noise of amplitude
    omega0 * sqrt(intensity).  Statistically independent thermal and
    scattering channels are combined into one Gaussian channel per particle
    of the summed intensity.
    """
    ns = slow_flow_diffusion(sp)
    # diffusion holds the quadrature coefficient D_q; the matching force
    # amplitude is omega0 * sqrt(4 D_q), which demodulates back to a
    # quadrature SDE amplitude sqrt(2 D_q).
    return np.array([sp.omega0 * np.sqrt(4.0 * ns.diffusion[0]),
                     sp.omega0 * np.sqrt(4.0 * ns.diffusion[2])])


def _rate_scale(sp: ScenarioParams, model: str) -> float:
    rates = [abs(sp.gamma_g1),
             abs(sp.gamma_g2 * (1.0 - sp.r) - sp.gamma_a),
             abs(sp.gamma_g2 * (1.0 + sp.r) - sp.gamma_a),
             abs(sp.s)]
    if model == "full_oscillation":
        rates.append(abs(sp.omega0))
    return max(rates)


def _check_resolution(cfg: SimConfig, sp: ScenarioParams) -> None:
    product = cfg.dt * _rate_scale(sp, cfg.model)
    if product > 0.1:
        warnings.warn(
            "dt * fastest rate = %.3g exceeds 0.1; results may be "
            "inaccurate -- reduce dt" % product,
            RuntimeWarning, stacklevel=3)


def _draw_initial(cfg: SimConfig, sp: ScenarioParams,
                  rng: np.random.Generator) -> np.ndarray:
    """Initial quadrature vector for one trajectory.

    Random kinds always consume exactly four standard normals so that the
    downstream increment stream is aligned across parameter variations.
    """
    init = cfg.initial
    if init.kind == "point":
        state = np.array(init.values, dtype=float)
    else:
        z = rng.standard_normal(4)
        if init.kind == "thermal":
            var1 = sp.D_t / (4.0 * sp.gamma_g1) if sp.gamma_g1 > 0 else 0.0
            var2 = sp.D_t / (4.0 * sp.gamma_g2) if sp.gamma_g2 > 0 else 0.0
            sig = np.sqrt([var1, var1, var2, var2])
            state = sig * z
        else:
            state = np.array(init.mean) + np.sqrt(init.variance) * z
    return state + np.array(init.offset, dtype=float)


def _quadratures_to_oscillator(state: np.ndarray,
                               omega0: float) -> np.ndarray:
    """Map (Q1, P1, Q2, P2) at t = 0 to (Q_z1, V_z1, Q_z2, V_z2)."""
    return np.array([state[0], omega0 * state[1],
                     state[2], omega0 * state[3]])


def demodulate_oscillator(samples: np.ndarray, times: np.ndarray,
                          omega0: float) -> np.ndarray:
    """Rotating-frame quadratures from oscillator samples.

    ``samples[..., (0, 1)]`` are (Q_z, V_z) of particle 1 and
    ``samples[..., (2, 3)]`` of particle 2;
    Q = Q_z cos(w0 t) - (V_z / w0) sin(w0 t),
    P = Q_z sin(w0 t) + (V_z / w0) cos(w0 t).
    """
    c = np.cos(omega0 * times)
    s = np.sin(omega0 * times)
    out = np.empty_like(samples)
    for base in (0, 2):
        xz = samples[..., base]
        vz = samples[..., base + 1] / omega0
        out[..., base] = xz * c - vz * s
        out[..., base + 1] = xz * s + vz * c
    return out


def _kernel_and_args(cfg: SimConfig, sp: ScenarioParams,
                     coeffs: CouplingCoefficients | None):
    """Select the compiled kernel and its trailing scalar arguments."""
    if cfg.model == "slow_flow":
        kernel = (_slow_flow_heun_chunk if cfg.method == "heun"
                  else _slow_flow_euler_chunk)
        args = (sp.gamma_g1,
                sp.gamma_g2 * (1.0 - sp.r),
                sp.gamma_g2 * (1.0 + sp.r),
                sp.gamma_a, 6.0 * sp.gamma_f, sp.s)
        amps = slow_flow_diffusion(sp).sde_amplitudes
        n_channels = 4
    else:
        if coeffs is None:
            raise InvalidParameterError(
                "the full-oscillation model needs explicit coupling "
                "coefficients; pass coeffs=")
        kernel = (_full_oscillation_heun_chunk if cfg.method == "heun"
                  else _full_oscillation_euler_chunk)
        args = (sp.omega0 ** 2, sp.gamma_g1, sp.gamma_g2,
                sp.gamma_a, 6.0 * sp.gamma_f, sp.f_effective,
                coeffs.S1, coeffs.S2, coeffs.S12, coeffs.S21, sp.omega0)
        amps = full_oscillation_noise_amplitudes(sp)
        n_channels = 2
    return kernel, args, amps, n_channels


def _advance(cfg: SimConfig, sp: ScenarioParams,
             coeffs: CouplingCoefficients | None,
             seed_keys: Sequence[tuple]) -> np.ndarray:
    """Run the requested trajectories; returns (n, n_recorded, 4)."""
    kernel, args, amps, n_channels = _kernel_and_args(cfg, sp, coeffs)
    n = len(seed_keys)
    n_steps, burn_steps = cfg.n_steps, cfg.burn_steps
    stride, n_rec = cfg.record_stride, cfg.n_recorded

    gens = [np.random.Generator(np.random.SFC64(np.random.SeedSequence(key)))
            for key in seed_keys]
    states = np.empty((n, 4))
    for i, rng in enumerate(gens):
        state = _draw_initial(cfg, sp, rng)
        if cfg.model == "full_oscillation":
            state = _quadratures_to_oscillator(state, sp.omega0)
        states[i] = state

    rec = np.empty((n, n_rec, 4))
    chunk = max(64, min(8192, _CHUNK_BUDGET_DOUBLES // (n * n_channels)))
    buf = np.empty((n, chunk, n_channels))
    flat = buf.reshape(n, chunk * n_channels)
    sqdt = np.sqrt(cfg.dt)

    k0 = 0
    while k0 < n_steps:
        n_sub = min(chunk, n_steps - k0)
        for i, rng in enumerate(gens):
            rng.standard_normal(out=flat[i, : n_sub * n_channels])
        kernel(states, buf, amps * sqdt, cfg.dt, k0, n_sub,
               burn_steps, stride, rec, *args)
        k0 += n_sub
        if not np.all(np.isfinite(states)):
            bad = np.where(~np.all(np.isfinite(states), axis=1))[0]
            raise IntegratorBlowupError(
                "trajectory state became non-finite by t = %g "
                "(trajectories %s); the nonlinear damping may be "
                "insufficient for this dt" % (k0 * cfg.dt, list(bad)),
                time=k0 * cfg.dt, trajectory_indices=bad)
    return rec


def run_ensemble(cfg: SimConfig, sp: ScenarioParams,
                 coeffs: CouplingCoefficients | None = None,
                 demodulate: bool = True) -> Ensemble:
    """Integrate ``cfg.n_trajectories`` independent trajectories.

    For the full-oscillation model the recorded (Q_z, V_z) pairs are
    converted to rotating-frame quadratures unless ``demodulate=False``.
    Raises :class:`IntegratorBlowupError` when any trajectory leaves the
    finite range; the error carries the offending indices and time.
    """
    _check_resolution(cfg, sp)
    keys = [(int(cfg.master_seed), i) for i in range(cfg.n_trajectories)]
    rec = _advance(cfg, sp, coeffs, keys)
    times = cfg.recorded_times
    if cfg.model == "full_oscillation" and demodulate:
        rec = demodulate_oscillator(rec, times, sp.omega0)
    return Ensemble(times=times, data=rec, config=cfg, params=sp,
                    parameter_hash=parameter_hash(cfg, sp, coeffs))


def simulate_trajectory(cfg: SimConfig, sp: ScenarioParams,
                        sub_seed, coeffs: CouplingCoefficients | None = None,
                        demodulate: bool = True) -> Trajectory:
    """Integrate a single trajectory identified by ``sub_seed``.

    ``sub_seed`` is the entropy key of the trajectory's random stream:
    ``(master_seed, i)`` reproduces member ``i`` of the corresponding
    ensemble bit for bit; a bare int is accepted for standalone runs.
    """
    _check_resolution(cfg, sp)
    key = tuple(int(v) for v in np.atleast_1d(sub_seed))
    rec = _advance(cfg, sp, coeffs, [key])
    times = cfg.recorded_times
    if cfg.model == "full_oscillation" and demodulate:
        rec = demodulate_oscillator(rec, times, sp.omega0)
    return Trajectory(times=times, samples=rec[0], sub_seed=key)
