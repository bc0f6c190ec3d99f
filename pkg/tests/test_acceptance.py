"""Acceptance gate: the toolkit's headline numbers at their stated tolerances.

Every test here reruns one quantitative claim end to end -- Monte Carlo
ensemble, closed-form oracle, comparison at the published tolerance -- and
records a single verdict line (replayed after the run by the hook in
conftest, so the full table is visible even when pytest hides stdout).

The checks share a handful of module-scoped runs:

* ``squeeze_run``      -- squeeze scenario at the headline protocol
                          (2000 trajectories, t_end = 100 s, dt = 1e-4 s).
* ``squeeze_density_run`` -- longer/coarser squeeze ensemble sized for
                          distribution-level statistics (L1, fidelity).
* ``coherent_run``     -- coherent-scenario defaults (ring state).
* ``thermal_run``      -- pre-feedback window: plain gas-damped motion,
                          no parametric drive, no feedback nonlinearity.
* ``bistable_run``     -- bistable scenario defaults.
* ``model_comparison`` -- matched 0.5 s windows of the full-oscillation
                          model and its rotating-frame reduction.

Four assertions are expected to fail, all for one physical reason: the
closed-form particle-1 (transfer) targets come from a slaved-response
approximation that drops the noise driving particle 1 directly.  The
simulated equations include that noise, which adds A_t/(2*gamma_g1) = 500
to each particle-1 quadrature variance at the squeeze defaults and widens
the transferred distribution accordingly.  The affected checks (02, 03's
histogram overlap, and the particle-1 halves of 06a/06b) are asserted at
their stated tolerances anyway, with the measured numbers in the verdict
line, so the table documents the discrepancy instead of hiding it.
"""

import json
import math

import numpy as np
import pytest

from conftest import log_acceptance
from levsim.analysis import coherence_decay_rate, unidirectionality_witness
from levsim.cli import build_config, main, run_scenario
from levsim.integrator import SimConfig
from levsim.params import coupling_coefficients, scenario_params

OMEGA0 = scenario_params("squeeze").omega0


def _verdict(tag, ok, label, detail):
    mark = "PASS" if ok else "FAIL"
    log_acceptance("ACCEPTANCE %-3s [%s] %s: %s" % (tag, mark, label, detail))


def _within(value, target, rel):
    return abs(value - target) <= rel * abs(target)


# ---------------------------------------------------------------------------
# shared runs
# ---------------------------------------------------------------------------

@pytest.fixture(scope="module")
def squeeze_run():
    """Squeeze scenario at the headline protocol (criteria 01/02)."""
    doc = {
        "scenario": "squeeze",
        "simulation": {"dt": 1e-4, "t_end": 100.0, "burn_in": 50.0,
                       "trajectories": 2000, "record_stride": 2500,
                       "seed": 101},
        "analysis": {"witness": False, "g2_max_lag": 40},
    }
    return run_scenario(build_config(doc))


@pytest.fixture(scope="module")
def squeeze_density_run():
    """Longer squeeze ensemble for histogram-level checks (03/06a).

    A coarser step is fine here: the discrete-map stationary covariance
    at dt = 1e-3 deviates from the continuum by < 1% on particle 1 and
    < 1e-6 on particle 2, far below the 5-8% distribution tolerances,
    while the 9x longer window shrinks the Monte Carlo L1 floor.
    """
    doc = {
        "scenario": "squeeze",
        "simulation": {"dt": 1e-3, "t_end": 600.0, "burn_in": 60.0,
                       "trajectories": 2400, "record_stride": 500,
                       "seed": 202},
        "analysis": {"witness": False, "g2_max_lag": 40},
    }
    return run_scenario(build_config(doc))


@pytest.fixture(scope="module")
def coherent_run():
    """Coherent-scenario defaults (criteria 04/05b/06b)."""
    doc = {
        "scenario": "coherent",
        "simulation": {"dt": 5e-4, "t_end": 40.0, "burn_in": 5.0,
                       "trajectories": 2000, "record_stride": 100,
                       "seed": 303},
        "analysis": {"witness": False, "g2_max_lag": 30},
    }
    return run_scenario(build_config(doc))


@pytest.fixture(scope="module")
def thermal_run():
    """Pre-feedback thermal window (criterion 05a).

    Both particles are plain gas-damped oscillators driven by scattering
    noise: r = gamma_a = gamma_f = 0, so particle 2 is an exact
    Ornstein-Uhlenbeck pair and its intensity autocorrelation must decay
    at 2*gamma_g.
    """
    doc = {
        "scenario": "custom",
        "physics": {"gamma_g1": 1.0, "gamma_g2": 1.0, "A_t": 1000.0,
                    "r": 0.0, "gamma_a": 0.0, "gamma_f": 0.0, "s": 100.0},
        "simulation": {"dt": 1e-4, "t_end": 25.0, "burn_in": 5.0,
                       "trajectories": 800, "record_stride": 500,
                       "seed": 404, "initial": {"kind": "thermal"}},
        "analysis": {"witness": False, "g2_max_lag": 60},
    }
    return run_scenario(build_config(doc))


@pytest.fixture(scope="module")
def bistable_run():
    """Bistable scenario defaults (criteria 06c/09)."""
    doc = {
        "scenario": "bistable",
        "simulation": {"dt": 2e-4, "t_end": 40.0, "burn_in": 5.0,
                       "trajectories": 1500, "record_stride": 250,
                       "seed": 505},
        "analysis": {"witness": False, "g2_max_lag": 40},
    }
    return run_scenario(build_config(doc))


@pytest.fixture(scope="module")
def model_comparison():
    """Matched 0.5 s windows of both models (criterion 08).

    The probe parameter set is linear (no parametric drive, no feedback)
    with gas damping fast enough (gamma_g = 100 /s) that a 0.5 s window
    spans ~100 relaxation times, so both runs sample their stationary
    state rather than a shared transient.  The runs use the same master
    seed: the initial thermal draw consumes the first four normals of
    each trajectory stream in either model, so the starting quadratures
    coincide exactly and only the integration differs.
    """
    geometry = {"g": 50.0 * math.pi, "kd0": math.pi / 4, "dphi": math.pi / 4}
    physics = {"gamma_g1": 100.0, "gamma_g2": 100.0, "A_t": 1000.0,
               "r": 0.0, "gamma_a": 0.0, "gamma_f": 0.0, "s": 100.0,
               "coupling": geometry}
    dt_full = 0.01 / OMEGA0
    doc_full = {
        "scenario": "custom",
        "physics": physics,
        "simulation": {"model": "full_oscillation", "dt": dt_full,
                       "t_end": 0.6, "burn_in": 0.1,
                       "record_stride": round(5e-4 / dt_full),
                       "trajectories": 10, "seed": 81,
                       "initial": {"kind": "thermal"}},
        "analysis": {"witness": False, "g2_max_lag": 20},
    }
    doc_slow = {
        "scenario": "custom",
        "physics": physics,
        "simulation": {"model": "slow_flow", "dt": 1e-5,
                       "t_end": 0.6, "burn_in": 0.1, "record_stride": 50,
                       "trajectories": 10, "seed": 81,
                       "initial": {"kind": "thermal"}},
        "analysis": {"witness": False, "g2_max_lag": 20},
    }
    rep_full, _ = run_scenario(build_config(doc_full))
    rep_slow, _ = run_scenario(build_config(doc_slow))
    return rep_full, rep_slow


# ---------------------------------------------------------------------------
# criteria
# ---------------------------------------------------------------------------

def test_01_squeezed_state_variances(squeeze_run):
    report, _ = squeeze_run
    var = report["variances"]
    q2, p2 = var["Q2"]["value"], var["P2"]["value"]
    wall = report["wall_clock_seconds"]
    ok = (_within(q2, 1250.0, 0.05) and _within(p2, 138.9, 0.05)
          and wall < 300.0)
    _verdict("01", ok, "squeezed-state variances (particle 2)",
             "var(Q2) %.1f vs 1250, var(P2) %.2f vs 138.9 (5%% band); "
             "wall clock %.0f s < 300 s" % (q2, p2, wall))
    assert _within(q2, 1250.0, 0.05), q2
    assert _within(p2, 138.9, 0.05), p2
    assert wall < 300.0, wall


def test_02_transfer_variances(squeeze_run):
    report, _ = squeeze_run
    var = report["variances"]
    q1, p1 = var["Q1"]["value"], var["P1"]["value"]
    ok = _within(q1, 1249.8, 0.05) and _within(p1, 139.0, 0.05)
    _verdict("02", ok, "transfer variances (particle 1)",
             "var(Q1) %.1f vs 1249.8, var(P1) %.2f vs 139.0 (5%% band); "
             "the slaved-response targets omit particle 1's own noise "
             "drive, worth +A_t/(2*gamma_g1) = 500 per quadrature"
             % (q1, p1))
    assert _within(q1, 1249.8, 0.05), \
        "var(Q1) = %.1f; slaved-response target 1249.8 excludes the " \
        "direct noise on particle 1 (expected excess ~500)" % q1
    assert _within(p1, 139.0, 0.05), \
        "var(P1) = %.1f; slaved-response target 139.0 excludes the " \
        "direct noise on particle 1 (expected excess ~500)" % p1


def test_03_transfer_fidelity(squeeze_density_run):
    report, _ = squeeze_density_run
    fid = report["fidelity"]
    ok = fid["analytic"] >= 0.999 and fid["numeric"] >= 0.995
    _verdict("03", ok, "transfer fidelity",
             "analytic %.6f >= 0.999; histogram overlap %.3f vs >= 0.995 "
             "on the shared 64x64 grid (particle 1's own-noise broadening "
             "caps the measured overlap)" % (fid["analytic"], fid["numeric"]))
    assert fid["analytic"] >= 0.999, fid["analytic"]
    assert fid["numeric"] >= 0.995, \
        "histogram overlap %.3f: the simulated particle-1 distribution " \
        "is wider than the slaved-response image it is compared against" \
        % fid["numeric"]


def test_04_phonon_saturation(coherent_run):
    report, _ = coherent_run
    n2 = report["phonon"]["particle_2"]["population"]["value"]
    n1 = report["phonon"]["particle_1"]["population"]["value"]
    ok = _within(n2, 31667.0, 0.05) and _within(n1, 31663.0, 0.05)
    _verdict("04", ok, "phonon saturation (coherent scenario)",
             "N2 %.0f vs 31667, N1 %.0f vs 31663 (5%% band)" % (n2, n1))
    assert _within(n2, 31667.0, 0.05), n2
    assert _within(n1, 31663.0, 0.05), n1


def test_05a_thermal_intensity_correlation(thermal_run):
    _, art = thermal_run
    res = art.g2_p2
    g0 = float(res.g2[0])
    rate, rate_se = coherence_decay_rate(res, t_max=2.0)
    ok = 1.8 <= g0 <= 2.2 and _within(rate, 2.0, 0.25)
    _verdict("05a", ok, "thermal window g2",
             "g2(0) %.3f in [1.8, 2.2]; decay rate %.3f +- %.3f /s vs "
             "2*gamma_g = 2.0 (25%% band)" % (g0, rate, rate_se))
    assert 1.8 <= g0 <= 2.2, g0
    assert _within(rate, 2.0, 0.25), rate


def test_05b_coherent_intensity_correlation(coherent_run):
    _, art = coherent_run
    res = art.g2_p2
    sel = res.taus <= 1.0 + 1e-9
    dev = float(np.max(np.abs(res.g2[sel] - 1.0)))
    ok = dev <= 0.1
    _verdict("05b", ok, "coherent window g2",
             "max |g2(tau) - 1| = %.4f <= 0.1 for tau <= 1 s "
             "(%d lags)" % (dev, int(sel.sum())))
    assert dev <= 0.1, dev


def test_06a_squeeze_oracle_agreement(squeeze_density_run):
    report, _ = squeeze_density_run
    d2 = report["oracle_distance"]["particle_2"]
    d1 = report["oracle_distance"]["particle_1"]
    ok = d2 <= 0.05 and d1 <= 0.08
    _verdict("06a", ok, "squeeze densities vs oracles",
             "L1(p2) %.4f <= 0.05; L1(p1) %.4f vs <= 0.08 (closed-form "
             "transfer density omits particle-1 noise)" % (d2, d1))
    assert d2 <= 0.05, d2
    assert d1 <= 0.08, \
        "L1(p1) = %.4f against the slaved-response density, which is " \
        "narrower than the simulated particle-1 state" % d1


def test_06b_coherent_oracle_agreement(coherent_run):
    report, _ = coherent_run
    d2 = report["oracle_distance"]["particle_2"]
    d1 = report["oracle_distance"]["particle_1"]
    ok = d2 <= 0.05 and d1 <= 0.08
    _verdict("06b", ok, "coherent densities vs oracles",
             "L1(p2) %.4f <= 0.05; L1(p1) %.4f vs <= 0.08 (closed-form "
             "transfer density omits particle-1 noise)" % (d2, d1))
    assert d2 <= 0.05, d2
    assert d1 <= 0.08, \
        "L1(p1) = %.4f against the slaved-response density, which is " \
        "a scaled ring without particle 1's own-noise blur" % d1


def test_06c_bistable_oracle_agreement(bistable_run):
    report, _ = bistable_run
    d2 = report["oracle_distance"]["particle_2"]
    ok = d2 <= 0.05
    _verdict("06c", ok, "bistable density vs oracle",
             "L1(p2) %.4f <= 0.05" % d2)
    assert d2 <= 0.05, d2


def test_07_unidirectionality_witness():
    # forward probe: shifting particle 1 must leave particle 2's recorded
    # samples bit-identical in the reduced model
    sp = scenario_params("squeeze")
    cfg = SimConfig(model="slow_flow", n_trajectories=12, t_end=10.0,
                    dt=1e-4, burn_in=0.0, record_stride=100,
                    master_seed=606)
    wit = unidirectionality_witness(cfg, sp)
    # reciprocal control: with dphi = 0 both coupling directions are live
    # in the oscillation model, so the same probe must leak
    coeffs = coupling_coefficients(50.0 * math.pi, math.pi / 4, 0.0)
    dt_full = 0.01 / sp.omega0
    cfg_r = SimConfig(model="full_oscillation", n_trajectories=4,
                      t_end=0.1, dt=dt_full, burn_in=0.0,
                      record_stride=round(2e-3 / dt_full), master_seed=707)
    wit_r = unidirectionality_witness(cfg_r, sp, coeffs=coeffs)
    ok = wit.response_on_2 == 0.0 and wit_r.response_on_2 > 1.0
    _verdict("07", ok, "unidirectionality witness",
             "slow-flow particle-2 response to a +50 shift on particle 1: "
             "%.3g (exact zero required); reciprocal control response "
             "%.3g on rms scale %.3g (divergence detected)"
             % (wit.response_on_2, wit_r.response_on_2, wit_r.rms_scale))
    assert wit.response_on_2 == 0.0, wit.response_on_2
    assert wit.response_on_1 > 0.0, wit.response_on_1
    assert wit_r.response_on_2 > 1.0, wit_r.response_on_2


def test_08_model_consistency(model_comparison):
    rep_full, rep_slow = model_comparison
    vf = rep_full["variances"]
    vs = rep_slow["variances"]
    rq = vf["Q2"]["value"] / vs["Q2"]["value"]
    rp = vf["P2"]["value"] / vs["P2"]["value"]
    ok = abs(rq - 1.0) <= 0.15 and abs(rp - 1.0) <= 0.15
    _verdict("08", ok, "full-oscillation vs slow-flow",
             "demodulated particle-2 variance ratios full/reduced: "
             "Q2 %.3f, P2 %.3f (15%% band; 10 trajectories, 0.5 s "
             "windows, stationary value 2.5)" % (rq, rp))
    assert abs(rq - 1.0) <= 0.15, rq
    assert abs(rp - 1.0) <= 0.15, rp


def test_09_bistable_structure_report(bistable_run):
    report, _ = bistable_run
    modes = report["modes"]
    predicted = modes["predicted"]
    detected = modes["detected_count"]
    d2 = report["oracle_distance"]["particle_2"]
    ok = (d2 <= 0.05 and predicted is not None
          and isinstance(detected, int) and detected >= 1)
    _verdict("09", ok, "bistable structure report",
             "L1(p2) %.4f <= 0.05; predicted modes: %d (%s); detected "
             "modes: %d" % (d2, predicted["count"] if predicted else -1,
                            predicted["structure"] if predicted else "?",
                            detected))
    assert predicted is not None
    assert predicted["count"] >= 1
    assert isinstance(detected, int) and detected >= 1
    assert d2 <= 0.05, d2


def test_10_rerun_byte_identical(tmp_path, capsys):
    doc = {
        "scenario": "bistable",
        "simulation": {"dt": 2e-4, "t_end": 3.0, "burn_in": 0.5,
                       "trajectories": 8, "record_stride": 250,
                       "seed": 909},
        "analysis": {"witness": False, "g2_max_lag": 10},
    }
    path = tmp_path / "cfg.json"
    path.write_text(json.dumps(doc))
    outs = []
    for name in ("first", "second"):
        out = tmp_path / name
        assert main(["--config", str(path), "--out", str(out)]) == 0
        outs.append(out)
    capsys.readouterr()
    data_files = sorted(p.name for p in outs[0].iterdir()
                        if p.name not in ("summary.json", "config.json"))
    mismatched = [f for f in data_files
                  if (outs[0] / f).read_bytes() != (outs[1] / f).read_bytes()]
    summaries = []
    for out in outs:
        j = json.loads((out / "summary.json").read_text())
        j.pop("wall_clock_seconds", None)
        j["config"]["output"]["directory"] = "X"
        summaries.append(j)
    ok = not mismatched and summaries[0] == summaries[1] and data_files
    _verdict("10", ok, "rerun determinism",
             "%d data files byte-identical across a repeated bistable run "
             "(seed 909); summaries equal up to wall clock" % len(data_files))
    assert data_files, "no data files emitted"
    assert not mismatched, mismatched
    assert summaries[0] == summaries[1]
