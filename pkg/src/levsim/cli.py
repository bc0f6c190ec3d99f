"""Scenario runner and reporting front end.

Reads a JSON configuration (or scenario shorthand flags), integrates the
requested ensemble, evaluates every applicable closed-form check, and
emits delimited data files, a machine-readable summary, and an optional
phase-space figure.

Exit codes: 0 success, 2 configuration error, 3 numeric blow-up during
integration, 4 output I/O error.
"""

from __future__ import annotations

import argparse
import json
import math
import sys
import time
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np

from . import analysis as ana
from .fp_oracle import (
    DegenerateDensityError,
    NonIntegrableDensityError,
    QuadratureError,
    ValidityError,
    analytic_fidelity,
    analytic_phonon,
    analytic_variances,
    stationary_density_p1,
    stationary_density_p2,
)
from .integrator import (
    InitialState,
    IntegratorBlowupError,
    SimConfig,
    parameter_hash,
    run_ensemble,
)
from .params import (
    CouplingCoefficients,
    InvalidParameterError,
    ScenarioParams,
    VALID_SCENARIOS,
    coupling_coefficients,
    coupling_rate_s,
    is_unidirectional,
    scenario_params,
)

__all__ = [
    "SPEC_VERSION",
    "RunConfig",
    "AnalysisOptions",
    "parse_config",
    "build_config",
    "run_scenario",
    "emit_outputs",
    "main",
]

SPEC_VERSION = "1.0"

EMIT_FLAGS = ("csv", "histograms", "svg", "report")

# Simulation defaults per scenario: long enough for stationary statistics
# at desk scale, short enough to stay interactive.
_SIM_DEFAULTS = {
    "squeeze": dict(dt=1e-4, t_end=50.0, burn_in=10.0,
                    trajectories=200, record_stride=500),
    "coherent": dict(dt=5e-4, t_end=30.0, burn_in=5.0,
                     trajectories=200, record_stride=100),
    "bistable": dict(dt=2e-4, t_end=30.0, burn_in=5.0,
                     trajectories=200, record_stride=250),
    "custom": dict(dt=1e-4, t_end=10.0, burn_in=1.0,
                   trajectories=100, record_stride=100),
}
# The second-order model resolves the carrier oscillation, so its defaults
# are much shorter and finer.
_FULL_MODEL_SIM = dict(t_end=0.3, burn_in=0.05, trajectories=10)

_TOP_KEYS = ("scenario", "physics", "simulation", "analysis", "output")
_PHYSICS_KEYS = ("omega0", "gamma_g1", "gamma_g2", "A_t", "D_p", "gamma_a",
                 "gamma_f", "r", "f", "s", "temperature", "gas_damping",
                 "coupling")
_COUPLING_KEYS = ("g", "kd0", "dphi")
_SIM_KEYS = ("dt", "t_end", "burn_in", "trajectories", "seed",
             "record_stride", "model", "method", "initial")
_INITIAL_KEYS = ("kind", "mean", "variance", "values", "offset")
_ANALYSIS_KEYS = ("bins", "bounds_p1", "bounds_p2", "g2_max_lag",
                  "g2_window", "witness", "witness_perturbation",
                  "mode_smooth_bins", "mode_rel_height")
_OUTPUT_KEYS = ("directory", "emit")


@dataclass(frozen=True)
class AnalysisOptions:
    """Histogram, correlation, and witness settings for a run."""

    bins: int = 64
    bounds_p1: tuple | None = None
    bounds_p2: tuple | None = None
    g2_max_lag: int | None = None
    g2_window: tuple | None = None
    witness: bool = True
    witness_perturbation: float = 50.0
    mode_smooth_bins: float = 2.0
    mode_rel_height: float = 0.1

    def __post_init__(self):
        if self.bins < 2:
            raise InvalidParameterError("analysis bins must be >= 2")
        for name in ("bounds_p1", "bounds_p2"):
            v = getattr(self, name)
            if v is None:
                continue
            v = tuple(float(x) for x in v)
            if len(v) != 4 or not (v[1] > v[0] and v[3] > v[2]):
                raise InvalidParameterError(
                    "analysis %s must be (qmin, qmax, pmin, pmax) with "
                    "qmax > qmin and pmax > pmin" % name)
            object.__setattr__(self, name, v)
        if self.g2_max_lag is not None and self.g2_max_lag < 1:
            raise InvalidParameterError("analysis g2_max_lag must be >= 1")
        if self.g2_window is not None:
            w = tuple(float(x) for x in self.g2_window)
            if len(w) != 2 or not w[1] > w[0]:
                raise InvalidParameterError(
                    "analysis g2_window must be (t0, t1) with t1 > t0")
            object.__setattr__(self, "g2_window", w)
        if not self.witness_perturbation > 0.0:
            raise InvalidParameterError(
                "analysis witness_perturbation must be positive")


@dataclass(frozen=True)
class RunConfig:
    """Fully resolved run description (physics + numerics + reporting)."""

    params: ScenarioParams
    sim: SimConfig
    analysis: AnalysisOptions = field(default_factory=AnalysisOptions)
    coupling: CouplingCoefficients | None = None
    coupling_geometry: tuple | None = None  # (g, kd0, dphi) as configured
    out_dir: str = "levsim_out"
    emit: tuple = EMIT_FLAGS


# ---------------------------------------------------------------------------
# config parsing
# ---------------------------------------------------------------------------

def _check_keys(d: dict, allowed: tuple, context: str) -> None:
    for key in d:
        if key not in allowed:
            raise InvalidParameterError(
                "unknown key %r in %s; expected one of: %s"
                % (key, context, ", ".join(allowed)))


def _as_float_tuple(value, n, context):
    try:
        out = tuple(float(v) for v in value)
    except (TypeError, ValueError):
        raise InvalidParameterError(
            "%s must be a sequence of %d numbers, got %r"
            % (context, n, value)) from None
    if len(out) != n:
        raise InvalidParameterError(
            "%s must have %d entries, got %d" % (context, n, len(out)))
    return out


def build_config(doc: dict) -> RunConfig:
    """Validate a configuration document and resolve every default.

    Schema: top-level keys "scenario", "physics", "simulation",
    "analysis", "output"; unknown keys anywhere are rejected by name.
    """
    if not isinstance(doc, dict):
        raise InvalidParameterError(
            "configuration must be a JSON object, got %s"
            % type(doc).__name__)
    _check_keys(doc, _TOP_KEYS, "configuration")

    scenario = doc.get("scenario", "custom")
    if scenario not in VALID_SCENARIOS:
        raise InvalidParameterError(
            "scenario must be one of %s, got %r"
            % (", ".join(VALID_SCENARIOS), scenario))

    physics = dict(doc.get("physics", {}))
    _check_keys(physics, _PHYSICS_KEYS, '"physics"')
    coupling_doc = physics.pop("coupling", None)
    sp = scenario_params(scenario, **physics)

    sim_doc = dict(doc.get("simulation", {}))
    _check_keys(sim_doc, _SIM_KEYS, '"simulation"')
    model = sim_doc.get("model", "slow_flow")
    sim_defaults = dict(_SIM_DEFAULTS[scenario])
    if model == "full_oscillation":
        sim_defaults.update(_FULL_MODEL_SIM)
        sim_defaults["dt"] = 0.01 / sp.omega0
        sim_defaults["record_stride"] = max(
            1, int(round(1e-3 / sim_defaults["dt"])))
    merged = {**sim_defaults, **sim_doc}

    init_doc = dict(merged.pop("initial", {}) or {})
    _check_keys(init_doc, _INITIAL_KEYS, '"simulation"."initial"')
    init_kwargs = {}
    if "kind" in init_doc:
        init_kwargs["kind"] = init_doc["kind"]
    for name in ("mean", "variance", "values", "offset"):
        if name in init_doc:
            init_kwargs[name] = _as_float_tuple(
                init_doc[name], 4, '"initial"."%s"' % name)
    initial = InitialState(**init_kwargs)

    sim = SimConfig(
        dt=float(merged["dt"]),
        t_end=float(merged["t_end"]),
        burn_in=float(merged["burn_in"]),
        n_trajectories=int(merged["trajectories"]),
        master_seed=int(merged.get("seed", 0)),
        record_stride=int(merged["record_stride"]),
        model=model,
        method=str(merged.get("method", "heun")),
        initial=initial,
    )

    coeffs = None
    geometry = None
    if coupling_doc is not None:
        coupling_doc = dict(coupling_doc)
        _check_keys(coupling_doc, _COUPLING_KEYS, '"physics"."coupling"')
        for key in _COUPLING_KEYS:
            if key not in coupling_doc:
                raise InvalidParameterError(
                    '"physics"."coupling" is missing key %r' % key)
        geometry = (float(coupling_doc["g"]), float(coupling_doc["kd0"]),
                    float(coupling_doc["dphi"]))
    elif sim.model == "full_oscillation":
        # default geometry: the unidirectional working point with the
        # modulation strength that reproduces the configured transfer rate
        geometry = (math.pi * sp.s / 2.0, math.pi / 4.0, math.pi / 4.0)
    if geometry is not None:
        coeffs = coupling_coefficients(*geometry)

    ana_doc = dict(doc.get("analysis", {}))
    _check_keys(ana_doc, _ANALYSIS_KEYS, '"analysis"')
    ana_kwargs = {}
    for name in ("bounds_p1", "bounds_p2"):
        if ana_doc.get(name) is not None:
            ana_kwargs[name] = _as_float_tuple(
                ana_doc[name], 4, '"analysis"."%s"' % name)
    if ana_doc.get("g2_window") is not None:
        ana_kwargs["g2_window"] = _as_float_tuple(
            ana_doc["g2_window"], 2, '"analysis"."g2_window"')
    for name in ("bins", "g2_max_lag"):
        if ana_doc.get(name) is not None:
            ana_kwargs[name] = int(ana_doc[name])
    for name, cast in (("witness", bool), ("witness_perturbation", float),
                       ("mode_smooth_bins", float),
                       ("mode_rel_height", float)):
        if name in ana_doc and ana_doc[name] is not None:
            ana_kwargs[name] = cast(ana_doc[name])
    options = AnalysisOptions(**ana_kwargs)

    out_doc = dict(doc.get("output", {}))
    _check_keys(out_doc, _OUTPUT_KEYS, '"output"')
    out_dir = str(out_doc.get("directory", "levsim_out"))
    emit = out_doc.get("emit", list(EMIT_FLAGS))
    if isinstance(emit, str):
        emit = [e for e in emit.split(",") if e]
    for e in emit:
        if e not in EMIT_FLAGS:
            raise InvalidParameterError(
                "unknown emit flag %r; expected a subset of: %s"
                % (e, ", ".join(EMIT_FLAGS)))
    emit = tuple(e for e in EMIT_FLAGS if e in emit)

    return RunConfig(params=sp, sim=sim, analysis=options, coupling=coeffs,
                     coupling_geometry=geometry, out_dir=out_dir, emit=emit)


def parse_config(path) -> RunConfig:
    """Load and validate a JSON configuration file."""
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise InvalidParameterError(
            "cannot read config %s: %s" % (path, exc)) from exc
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise InvalidParameterError(
            "config %s is not valid JSON: %s" % (path, exc)) from exc
    return build_config(doc)


def config_document(cfg: RunConfig) -> dict:
    """Canonical JSON-ready document; build_config round-trips it."""
    sp, sim, opts = cfg.params, cfg.sim, cfg.analysis
    doc = {
        "scenario": sp.scenario,
        "physics": {
            "omega0": sp.omega0, "gamma_g1": sp.gamma_g1,
            "gamma_g2": sp.gamma_g2, "A_t": sp.A_t, "D_p": sp.D_p,
            "gamma_a": sp.gamma_a, "gamma_f": sp.gamma_f, "r": sp.r,
            "f": sp.f, "s": sp.s, "temperature": sp.temperature,
            "gas_damping": sp.gas_damping,
        },
        "simulation": {
            "dt": sim.dt, "t_end": sim.t_end, "burn_in": sim.burn_in,
            "trajectories": sim.n_trajectories,
            "seed": int(sim.master_seed),
            "record_stride": sim.record_stride, "model": sim.model,
            "method": sim.method,
            "initial": {
                "kind": sim.initial.kind, "mean": list(sim.initial.mean),
                "variance": list(sim.initial.variance),
                "values": list(sim.initial.values),
                "offset": list(sim.initial.offset),
            },
        },
        "analysis": {
            "bins": opts.bins,
            "bounds_p1": list(opts.bounds_p1) if opts.bounds_p1 else None,
            "bounds_p2": list(opts.bounds_p2) if opts.bounds_p2 else None,
            "g2_max_lag": opts.g2_max_lag,
            "g2_window": list(opts.g2_window) if opts.g2_window else None,
            "witness": opts.witness,
            "witness_perturbation": opts.witness_perturbation,
            "mode_smooth_bins": opts.mode_smooth_bins,
            "mode_rel_height": opts.mode_rel_height,
        },
        "output": {"directory": cfg.out_dir, "emit": list(cfg.emit)},
    }
    if cfg.coupling_geometry is not None:
        g, kd0, dphi = cfg.coupling_geometry
        doc["physics"]["coupling"] = {"g": g, "kd0": kd0, "dphi": dphi}
    return doc


# ---------------------------------------------------------------------------
# scenario orchestration
# ---------------------------------------------------------------------------

@dataclass
class RunArtifacts:
    """Large intermediates kept out of the JSON summary."""

    ensemble: object = None
    hist_p1: object = None
    hist_p2: object = None
    oracle_p1: object = None
    oracle_p2: object = None
    g2_p1: object = None
    g2_p2: object = None


def _auto_bounds(oracle, data, particle) -> tuple:
    """Histogram window from the model density, else from the samples."""
    if oracle is not None:
        (qlo, qhi), (plo, phi) = oracle.default_bounds()
        return (qlo, qhi, plo, phi)
    cols = (0, 1) if particle == 1 else (2, 3)
    block = data[..., cols].reshape(-1, 2)
    center = block.mean(axis=0)
    span = 6.0 * np.maximum(block.std(axis=0), 1e-12)
    return (center[0] - span[0], center[0] + span[0],
            center[1] - span[1], center[1] + span[1])


def _value_se(value, se) -> dict:
    return {"value": float(value), "se": float(se)}


def _g2_named_lags(res: ana.CoherenceResult) -> dict:
    out = {"zero_lag": _value_se(res.g2[0], res.se[0])}
    if res.taus[-1] >= 1.0:
        k = int(np.argmin(np.abs(res.taus - 1.0)))
        out["at_1s"] = {"tau": float(res.taus[k]),
                        **_value_se(res.g2[k], res.se[k])}
    else:
        out["at_1s"] = None
    return out


def run_scenario(cfg: RunConfig, progress=None):
    """Execute a configured run end to end.

    Returns ``(report, artifacts)``: the JSON-ready summary dictionary and
    the ensembles/histograms needed by :func:`emit_outputs`.  Closed-form
    checks that do not apply to the parameter set are reported as notes,
    never raised.
    """
    log = progress if progress is not None else (lambda msg: None)
    notes: list = []
    t_start = time.perf_counter()

    log("integrating %s scenario (%d trajectories, model %s)"
        % (cfg.params.scenario, cfg.sim.n_trajectories, cfg.sim.model))
    ens = run_ensemble(cfg.sim, cfg.params, coeffs=cfg.coupling)
    art = RunArtifacts(ensemble=ens)

    # -- closed-form stationary densities ----------------------------------
    try:
        art.oracle_p2 = stationary_density_p2(cfg.params)
    except (DegenerateDensityError, NonIntegrableDensityError,
            ValidityError) as exc:
        notes.append("particle-2 stationary density unavailable: %s" % exc)
    try:
        art.oracle_p1 = stationary_density_p1(cfg.params)
    except (DegenerateDensityError, NonIntegrableDensityError,
            ValidityError) as exc:
        notes.append("particle-1 stationary density unavailable: %s" % exc)

    # -- moments ------------------------------------------------------------
    log("estimating moments")
    var = ana.ensemble_variances(ens)
    variances = {
        "Q1": _value_se(var.variance[0], var.variance_se[0]),
        "P1": _value_se(var.variance[1], var.variance_se[1]),
        "Q2": _value_se(var.variance[2], var.variance_se[2]),
        "P2": _value_se(var.variance[3], var.variance_se[3]),
        "cov_Q1P1": _value_se(var.cov_q1p1, var.cov_q1p1_se),
        "cov_Q2P2": _value_se(var.cov_q2p2, var.cov_q2p2_se),
        "analytic": None,
    }
    try:
        vq2, vp2, vq1, vp1 = analytic_variances(cfg.params)
        variances["analytic"] = {"Q1": vq1, "P1": vp1, "Q2": vq2, "P2": vp2}
    except (ValidityError, NonIntegrableDensityError,
            DegenerateDensityError) as exc:
        notes.append("closed-form variances unavailable: %s" % exc)

    ph1 = ana.phonon_population(ens, 1)
    ph2 = ana.phonon_population(ens, 2)
    phonon = {
        "particle_1": {"population": _value_se(ph1.population,
                                               ph1.population_se),
                       "variance": _value_se(ph1.variance, ph1.variance_se)},
        "particle_2": {"population": _value_se(ph2.population,
                                               ph2.population_se),
                       "variance": _value_se(ph2.variance, ph2.variance_se)},
        "analytic": None,
    }
    try:
        n2, n1 = analytic_phonon(cfg.params)
        phonon["analytic"] = {"N1": n1, "N2": n2}
    except ValidityError as exc:
        notes.append("closed-form occupations unavailable: %s" % exc)

    # -- histograms, overlap, and oracle distances --------------------------
    log("building phase-space histograms")
    opts = cfg.analysis
    bounds1 = opts.bounds_p1 or _auto_bounds(art.oracle_p1, ens.data, 1)
    bounds2 = opts.bounds_p2 or _auto_bounds(art.oracle_p2, ens.data, 2)
    art.hist_p1 = ana.histogram2d(ens, 1, bounds1, bins=opts.bins)
    art.hist_p2 = ana.histogram2d(ens, 2, bounds2, bins=opts.bins)

    fidelity = {"numeric": None, "analytic": None}
    try:
        shared1 = ana.histogram2d(ens, 1, bounds2, bins=opts.bins)
        fidelity["numeric"] = ana.fidelity_numeric(shared1, art.hist_p2)
    except InvalidParameterError as exc:
        notes.append("numeric fidelity unavailable: %s" % exc)
    try:
        fidelity["analytic"] = analytic_fidelity(cfg.params)
    except (ValidityError, NonIntegrableDensityError,
            DegenerateDensityError) as exc:
        notes.append("closed-form fidelity unavailable: %s" % exc)

    oracle_distance = {"particle_1": None, "particle_2": None}
    for particle, hist, oracle in ((1, art.hist_p1, art.oracle_p1),
                                   (2, art.hist_p2, art.oracle_p2)):
        if oracle is None:
            continue
        try:
            oracle_distance["particle_%d" % particle] = \
                ana.distribution_distance(hist, oracle)
        except QuadratureError as exc:
            notes.append("oracle distance (particle %d) failed: %s"
                         % (particle, exc))

    # -- intensity correlations ---------------------------------------------
    log("computing intensity autocorrelations")
    n_rec = ens.times.shape[0]
    max_lag = opts.g2_max_lag if opts.g2_max_lag is not None \
        else min(400, n_rec - 1)
    max_lag = min(max_lag, n_rec - 1)
    g2_report = {}
    for particle in (1, 2):
        try:
            res = ana.second_order_coherence(ens, particle, max_lag,
                                             window=opts.g2_window)
        except InvalidParameterError as exc:
            notes.append("g2 (particle %d) unavailable: %s"
                         % (particle, exc))
            g2_report["particle_%d" % particle] = None
            continue
        setattr(art, "g2_p%d" % particle, res)
        g2_report["particle_%d" % particle] = _g2_named_lags(res)

    # -- structure detection -------------------------------------------------
    detected = ana.mode_detect(art.hist_p2, smooth_bins=opts.mode_smooth_bins,
                               rel_height=opts.mode_rel_height)
    modes = {
        "predicted": art.oracle_p2.predicted_modes()
        if art.oracle_p2 is not None else None,
        "detected_count": len(detected),
        "detected": [list(m) for m in detected[:8]],
    }

    # -- directionality -------------------------------------------------------
    witness = None
    if opts.witness:
        log("running seed-matched directionality probe")
        wit = ana.unidirectionality_witness(
            cfg.sim, cfg.params, coeffs=cfg.coupling,
            perturbation=opts.witness_perturbation)
        witness = {
            "perturbation": wit.perturbation,
            "response_on_2": wit.response_on_2,
            "response_on_1": wit.response_on_1,
            "rms_scale": wit.rms_scale,
        }

    direction = is_unidirectional(cfg.coupling) \
        if cfg.coupling is not None else None

    report = {
        "spec_version": SPEC_VERSION,
        "scenario": cfg.params.scenario,
        "parameter_hash": parameter_hash(cfg.sim, cfg.params, cfg.coupling),
        "seed": int(cfg.sim.master_seed),
        "wall_clock_seconds": round(time.perf_counter() - t_start, 3),
        "config": config_document(cfg),
        "variances": variances,
        "phonon": phonon,
        "fidelity": fidelity,
        "g2": g2_report,
        "oracle_distance": oracle_distance,
        "modes": modes,
        "witness": witness,
        "coupling_direction": direction,
        "transfer_rate_s": coupling_rate_s(cfg.coupling)
        if cfg.coupling is not None else cfg.params.s,
        "notes": notes,
    }
    return report, art


# ---------------------------------------------------------------------------
# output emission
# ---------------------------------------------------------------------------

def _write_text(path: Path, text: str) -> None:
    path.write_text(text, newline="\n")


def _trajectories_csv(ens) -> str:
    lines = ["traj,t,Q1,P1,Q2,P2"]
    times = ens.times
    data = ens.data
    for i in range(data.shape[0]):
        block = data[i]
        for j in range(times.shape[0]):
            lines.append("%d,%.10g,%.10g,%.10g,%.10g,%.10g"
                         % (i, times[j], block[j, 0], block[j, 1],
                            block[j, 2], block[j, 3]))
    lines.append("")
    return "\n".join(lines)


def _hist_csv(hist) -> str:
    lines = ["Q,P,density"]
    qc, pc = hist.q_centers, hist.p_centers
    for a in range(qc.shape[0]):
        for b in range(pc.shape[0]):
            lines.append("%.10g,%.10g,%.10g"
                         % (qc[a], pc[b], hist.density[a, b]))
    lines.append("")
    return "\n".join(lines)


def _oracle_csv(hist, oracle) -> str:
    lines = ["Q,P,density"]
    qq, pp = np.meshgrid(hist.q_centers, hist.p_centers, indexing="ij")
    vals = oracle.density(qq, pp)
    qc, pc = hist.q_centers, hist.p_centers
    for a in range(qc.shape[0]):
        for b in range(pc.shape[0]):
            lines.append("%.10g,%.10g,%.10g" % (qc[a], pc[b], vals[a, b]))
    lines.append("")
    return "\n".join(lines)


def _g2_csv(res) -> str:
    lines = ["tau,g2,se"]
    for k in range(res.taus.shape[0]):
        lines.append("%.10g,%.10g,%.10g" % (res.taus[k], res.g2[k],
                                            res.se[k]))
    lines.append("")
    return "\n".join(lines)


def emit_outputs(report: dict, art: RunArtifacts, cfg: RunConfig) -> list:
    """Write the requested files; returns the paths written.

    csv        -> trajectories.csv, g2_p{1,2}.csv, config.json
    histograms -> hist_p{1,2}.csv, oracle_p{1,2}.csv
    svg        -> phase_space.svg
    report     -> summary.json
    Oracle files are skipped (with a note already in the report) when no
    closed-form density exists for the parameter set.
    """
    out = Path(cfg.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    written = []

    def emit(name, text):
        path = out / name
        _write_text(path, text)
        written.append(path)

    if "csv" in cfg.emit:
        emit("trajectories.csv", _trajectories_csv(art.ensemble))
        for particle in (1, 2):
            res = getattr(art, "g2_p%d" % particle)
            if res is not None:
                emit("g2_p%d.csv" % particle, _g2_csv(res))
        emit("config.json",
             json.dumps(config_document(cfg), sort_keys=True, indent=2)
             + "\n")
    if "histograms" in cfg.emit:
        emit("hist_p1.csv", _hist_csv(art.hist_p1))
        emit("hist_p2.csv", _hist_csv(art.hist_p2))
        for particle, hist, oracle in ((1, art.hist_p1, art.oracle_p1),
                                       (2, art.hist_p2, art.oracle_p2)):
            if oracle is not None:
                emit("oracle_p%d.csv" % particle, _oracle_csv(hist, oracle))
    if "svg" in cfg.emit:
        from .plotting import phase_space_figure, save_figure
        fig = phase_space_figure(art.hist_p1, art.hist_p2,
                                 oracle1=art.oracle_p1,
                                 oracle2=art.oracle_p2,
                                 title="%s scenario, seed %d"
                                 % (cfg.params.scenario,
                                    cfg.sim.master_seed))
        path = out / "phase_space.svg"
        save_figure(fig, path)
        written.append(path)
    if "report" in cfg.emit:
        emit("summary.json",
             json.dumps(report, sort_keys=True, indent=2) + "\n")
    return written


# ---------------------------------------------------------------------------
# command line
# ---------------------------------------------------------------------------

def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="levsim",
        description="Simulate optically coupled levitated nanoparticles "
                    "and compare ensemble statistics against closed-form "
                    "stationary solutions.")
    parser.add_argument("--config", help="JSON configuration file")
    parser.add_argument("--scenario", choices=VALID_SCENARIOS,
                        help="scenario shorthand loading its default "
                             "parameter set")
    parser.add_argument("--seed", type=int, help="master random seed")
    parser.add_argument("--trajectories", type=int,
                        help="number of trajectories")
    parser.add_argument("--dt", type=float, help="integration step (s)")
    parser.add_argument("--t-end", dest="t_end", type=float,
                        help="integration end time (s)")
    parser.add_argument("--out", help="output directory")
    parser.add_argument("--emit",
                        help="comma-separated subset of: %s"
                             % ",".join(EMIT_FLAGS))
    return parser


def _merge_flags(doc: dict, args) -> dict:
    """Apply command-line overrides; flags beat file values."""
    doc = json.loads(json.dumps(doc))  # deep copy
    if args.scenario is not None:
        doc["scenario"] = args.scenario
    sim = doc.setdefault("simulation", {})
    if args.seed is not None:
        sim["seed"] = args.seed
    if args.trajectories is not None:
        sim["trajectories"] = args.trajectories
    if args.dt is not None:
        sim["dt"] = args.dt
    if args.t_end is not None:
        sim["t_end"] = args.t_end
    outdoc = doc.setdefault("output", {})
    if args.out is not None:
        outdoc["directory"] = args.out
    if args.emit is not None:
        outdoc["emit"] = args.emit
    return doc


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    if args.config is None and args.scenario is None:
        print("error: provide --config and/or --scenario", file=sys.stderr)
        return 2

    try:
        if args.config is not None:
            try:
                doc = json.loads(Path(args.config).read_text())
            except OSError as exc:
                raise InvalidParameterError(
                    "cannot read config %s: %s" % (args.config, exc))
            except json.JSONDecodeError as exc:
                raise InvalidParameterError(
                    "config %s is not valid JSON: %s" % (args.config, exc))
        else:
            doc = {}
        cfg = build_config(_merge_flags(doc, args))
    except InvalidParameterError as exc:
        print("config error: %s" % exc, file=sys.stderr)
        return 2

    try:
        report, art = run_scenario(
            cfg, progress=lambda msg: print(msg, file=sys.stderr))
    except IntegratorBlowupError as exc:
        print("integration blow-up: %s" % exc, file=sys.stderr)
        return 3

    try:
        written = emit_outputs(report, art, cfg)
    except OSError as exc:
        print("output error: %s" % exc, file=sys.stderr)
        return 4

    summary = [p for p in written if p.name == "summary.json"]
    if summary:
        print(summary[0])
    elif written:
        print(Path(cfg.out_dir))
    return 0


if __name__ == "__main__":
    sys.exit(main())
