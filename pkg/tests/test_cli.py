"""Configuration schema, scenario orchestration, emission, exit codes."""

import json
import math
from pathlib import Path

import numpy as np
import pytest

from levsim.cli import (
    EMIT_FLAGS,
    SPEC_VERSION,
    build_config,
    config_document,
    emit_outputs,
    main,
    parse_config,
    run_scenario,
)
from levsim.params import (
    InvalidParameterError,
    coupling_rate_s,
    is_unidirectional,
)


def _tiny_doc(**sim_overrides):
    sim = dict(t_end=2.0, burn_in=0.5, dt=1e-3, trajectories=10,
               record_stride=50)
    sim.update(sim_overrides)
    return {"scenario": "squeeze", "simulation": sim,
            "analysis": {"witness": False}}


# ---------------------------------------------------------------------------
# schema
# ---------------------------------------------------------------------------

class TestBuildConfig:
    def test_squeeze_defaults(self):
        cfg = build_config({"scenario": "squeeze"})
        assert cfg.params.scenario == "squeeze"
        assert cfg.params.r == 0.8
        assert cfg.sim.dt == 1e-4
        assert cfg.sim.t_end == 50.0
        assert cfg.sim.burn_in == 10.0
        assert cfg.sim.n_trajectories == 200
        assert cfg.sim.record_stride == 500
        assert cfg.sim.model == "slow_flow"
        assert cfg.emit == EMIT_FLAGS
        assert cfg.out_dir == "levsim_out"
        assert cfg.coupling is None

    def test_empty_document_is_custom(self):
        cfg = build_config({})
        assert cfg.params.scenario == "custom"
        assert cfg.sim.t_end == 10.0

    def test_non_object_rejected(self):
        with pytest.raises(InvalidParameterError, match="JSON object"):
            build_config([1, 2, 3])

    def test_unknown_scenario_rejected(self):
        with pytest.raises(InvalidParameterError, match="scenario"):
            build_config({"scenario": "squeezing"})

    @pytest.mark.parametrize("doc,needle", [
        ({"scenariox": "squeeze"}, "scenariox"),
        ({"physics": {"gamma_g3": 1.0}}, "gamma_g3"),
        ({"simulation": {"步长": 1e-4}}, "步长"),
        ({"simulation": {"initial": {"variances": [1, 1, 1, 1]}}},
         "variances"),
        ({"analysis": {"bin": 32}}, "bin"),
        ({"output": {"folder": "x"}}, "folder"),
        ({"physics": {"coupling": {"g": 1, "kd0": 1, "dphi": 0, "phi": 0}}},
         "phi"),
    ])
    def test_unknown_keys_rejected_by_name(self, doc, needle):
        with pytest.raises(InvalidParameterError, match=needle):
            build_config(doc)

    def test_inconsistent_drive_pair_rejected(self):
        doc = {"scenario": "squeeze", "physics": {"f": 0.5}}
        with pytest.raises(InvalidParameterError,
                           match=r"r = f\*omega0/gamma_g2"):
            build_config(doc)

    def test_consistent_drive_pair_accepted(self):
        omega0 = 2.0 * math.pi * 127e3
        doc = {"scenario": "squeeze",
               "physics": {"f": 0.8 * 1.0 / omega0}}
        cfg = build_config(doc)
        assert cfg.params.f_effective == pytest.approx(0.8 / omega0)

    def test_coupling_block(self):
        doc = {"physics": {"coupling": {"g": math.pi * 50.0,
                                        "kd0": math.pi / 4,
                                        "dphi": math.pi / 4}}}
        cfg = build_config(doc)
        assert cfg.coupling is not None
        assert cfg.coupling_geometry == (math.pi * 50.0, math.pi / 4,
                                         math.pi / 4)
        assert is_unidirectional(cfg.coupling) == "two_to_one"
        assert coupling_rate_s(cfg.coupling) == pytest.approx(100.0)

    def test_coupling_block_requires_all_keys(self):
        doc = {"physics": {"coupling": {"g": 1.0, "kd0": 1.0}}}
        with pytest.raises(InvalidParameterError, match="dphi"):
            build_config(doc)

    def test_full_model_defaults_and_auto_geometry(self):
        cfg = build_config({"scenario": "squeeze",
                            "simulation": {"model": "full_oscillation"}})
        sp = cfg.params
        assert cfg.sim.dt == pytest.approx(0.01 / sp.omega0)
        assert cfg.sim.t_end == 0.3
        assert cfg.sim.n_trajectories == 10
        assert cfg.sim.record_stride == round(1e-3 / cfg.sim.dt)
        # automatic geometry: unidirectional point delivering the
        # configured transfer rate
        g, kd0, dphi = cfg.coupling_geometry
        assert g == pytest.approx(math.pi * sp.s / 2.0)
        assert kd0 == dphi == pytest.approx(math.pi / 4.0)
        assert is_unidirectional(cfg.coupling) == "two_to_one"
        assert coupling_rate_s(cfg.coupling) == pytest.approx(sp.s)

    def test_emit_normalization(self):
        cfg = build_config({"output": {"emit": "report,csv"}})
        assert cfg.emit == ("csv", "report")       # canonical order
        cfg = build_config({"output": {"emit": ["svg"]}})
        assert cfg.emit == ("svg",)
        cfg = build_config({"output": {"emit": ""}})
        assert cfg.emit == ()

    def test_unknown_emit_flag_rejected(self):
        with pytest.raises(InvalidParameterError, match="parquet"):
            build_config({"output": {"emit": "csv,parquet"}})

    def test_analysis_options_propagate(self):
        doc = {"analysis": {"bins": 32, "bounds_p2": [-10, 10, -5, 5],
                            "witness": False, "g2_max_lag": 17}}
        cfg = build_config(doc)
        assert cfg.analysis.bins == 32
        assert cfg.analysis.bounds_p2 == (-10.0, 10.0, -5.0, 5.0)
        assert cfg.analysis.witness is False
        assert cfg.analysis.g2_max_lag == 17

    def test_bad_analysis_values_rejected(self):
        with pytest.raises(InvalidParameterError, match="bins"):
            build_config({"analysis": {"bins": 1}})
        with pytest.raises(InvalidParameterError, match="bounds_p1"):
            build_config({"analysis": {"bounds_p1": [1, -1, 0, 1]}})

    def test_initial_block(self):
        doc = {"simulation": {"initial": {"kind": "point",
                                          "values": [1, 2, 3, 4]}}}
        cfg = build_config(doc)
        assert cfg.sim.initial.kind == "point"
        assert cfg.sim.initial.values == (1.0, 2.0, 3.0, 4.0)
        with pytest.raises(InvalidParameterError):
            build_config({"simulation": {"initial": {"kind": "maxwell"}}})


class TestParseConfig:
    def test_missing_file(self, tmp_path):
        with pytest.raises(InvalidParameterError, match="cannot read"):
            parse_config(tmp_path / "nope.json")

    def test_invalid_json(self, tmp_path):
        path = tmp_path / "bad.json"
        path.write_text("{not json")
        with pytest.raises(InvalidParameterError, match="not valid JSON"):
            parse_config(path)

    def test_valid_file(self, tmp_path):
        path = tmp_path / "ok.json"
        path.write_text(json.dumps(_tiny_doc()))
        cfg = parse_config(path)
        assert cfg.params.scenario == "squeeze"
        assert cfg.sim.n_trajectories == 10


class TestRoundTrip:
    @pytest.mark.parametrize("doc", [
        {"scenario": "squeeze"},
        {"scenario": "bistable", "output": {"emit": "report"}},
        {"scenario": "custom",
         "physics": {"gamma_a": 20.0, "gamma_f": 1e-4, "s": 60.0,
                     "coupling": {"g": 10.0, "kd0": 1.0, "dphi": 0.5}},
         "simulation": {"seed": 9, "trajectories": 7,
                        "initial": {"kind": "gaussian",
                                    "mean": [1, 0, 0, 0]}},
         "analysis": {"bins": 48, "witness": False}},
    ])
    def test_document_reproduces_config(self, doc):
        cfg = build_config(doc)
        assert build_config(config_document(cfg)) == cfg


# ---------------------------------------------------------------------------
# orchestration
# ---------------------------------------------------------------------------

@pytest.fixture(scope="module")
def tiny_run():
    cfg = build_config(_tiny_doc())
    report, art = run_scenario(cfg)
    return cfg, report, art


class TestRunScenario:
    def test_report_schema(self, tiny_run):
        _, report, _ = tiny_run
        for key in ("spec_version", "scenario", "parameter_hash", "seed",
                    "wall_clock_seconds", "config", "variances", "phonon",
                    "fidelity", "g2", "oracle_distance", "modes", "witness",
                    "coupling_direction", "transfer_rate_s", "notes"):
            assert key in report
        assert report["spec_version"] == SPEC_VERSION
        assert report["scenario"] == "squeeze"
        assert len(report["parameter_hash"]) == 16
        json.dumps(report)      # must be JSON-serializable as-is

    def test_closed_forms_attached(self, tiny_run):
        _, report, _ = tiny_run
        ana = report["variances"]["analytic"]
        assert ana["Q2"] == pytest.approx(1250.0)
        assert ana["P2"] == pytest.approx(138.889, rel=1e-4)
        assert ana["Q1"] == pytest.approx(1249.764, rel=1e-4)
        assert report["fidelity"]["analytic"] == pytest.approx(0.999961,
                                                               abs=5e-6)
        assert report["transfer_rate_s"] == 100.0
        assert report["coupling_direction"] is None    # slow flow, no coeffs
        assert report["witness"] is None               # disabled in config

    def test_numeric_results_present(self, tiny_run):
        _, report, _ = tiny_run
        assert report["variances"]["Q2"]["value"] > 0
        assert np.isfinite(report["variances"]["Q2"]["se"])
        assert report["fidelity"]["numeric"] is not None
        assert report["oracle_distance"]["particle_2"] is not None
        assert report["g2"]["particle_2"]["zero_lag"]["value"] > 0
        assert report["modes"]["predicted"] == {"structure": "point",
                                                "count": 1}

    def test_degenerate_noise_reported_not_raised(self):
        doc = {"scenario": "custom",
               "physics": {"A_t": 0.0},
               "simulation": {"t_end": 0.5, "burn_in": 0.1, "dt": 1e-3,
                              "trajectories": 3, "record_stride": 10},
               "analysis": {"witness": False}}
        report, art = run_scenario(build_config(doc))
        notes = " ".join(report["notes"])
        assert "stationary density unavailable" in notes
        assert "g2" in notes                  # zero occupation, no g2
        assert report["variances"]["Q2"]["value"] == 0.0
        assert art.oracle_p2 is None


# ---------------------------------------------------------------------------
# emission
# ---------------------------------------------------------------------------

FULL_MANIFEST = {
    "trajectories.csv", "g2_p1.csv", "g2_p2.csv", "config.json",
    "hist_p1.csv", "hist_p2.csv", "oracle_p1.csv", "oracle_p2.csv",
    "phase_space.svg", "summary.json",
}


class TestEmitOutputs:
    def test_full_manifest(self, tiny_run, tmp_path):
        cfg, report, art = tiny_run
        cfg = type(cfg)(**{**cfg.__dict__, "out_dir": str(tmp_path / "full")})
        written = emit_outputs(report, art, cfg)
        assert {p.name for p in written} == FULL_MANIFEST
        assert {p.name for p in (tmp_path / "full").iterdir()} == \
            FULL_MANIFEST

    def test_report_only(self, tiny_run, tmp_path):
        cfg, report, art = tiny_run
        cfg = type(cfg)(**{**cfg.__dict__, "out_dir": str(tmp_path / "ro"),
                           "emit": ("report",)})
        written = emit_outputs(report, art, cfg)
        assert [p.name for p in written] == ["summary.json"]
        assert [p.name for p in (tmp_path / "ro").iterdir()] == \
            ["summary.json"]

    def test_csv_headers_and_shapes(self, tiny_run, tmp_path):
        cfg, report, art = tiny_run
        out = tmp_path / "csv"
        cfg = type(cfg)(**{**cfg.__dict__, "out_dir": str(out)})
        emit_outputs(report, art, cfg)
        traj = (out / "trajectories.csv").read_text().splitlines()
        assert traj[0] == "traj,t,Q1,P1,Q2,P2"
        n_rows = cfg.sim.n_trajectories * art.ensemble.times.shape[0]
        assert len(traj) == 1 + n_rows
        first = traj[1].split(",")
        assert int(first[0]) == 0
        assert float(first[1]) == pytest.approx(art.ensemble.times[0])

        for name in ("hist_p1.csv", "hist_p2.csv", "oracle_p1.csv",
                     "oracle_p2.csv"):
            lines = (out / name).read_text().splitlines()
            assert lines[0] == "Q,P,density"
            assert len(lines) == 1 + cfg.analysis.bins ** 2
        g2 = (out / "g2_p2.csv").read_text().splitlines()
        assert g2[0] == "tau,g2,se"
        assert (out / "phase_space.svg").read_text().startswith("<?xml")

    def test_emitted_config_round_trips(self, tiny_run, tmp_path):
        cfg, report, art = tiny_run
        out = tmp_path / "rt"
        cfg = type(cfg)(**{**cfg.__dict__, "out_dir": str(out)})
        emit_outputs(report, art, cfg)
        reloaded = parse_config(out / "config.json")
        assert reloaded == cfg
        summary = json.loads((out / "summary.json").read_text())
        assert summary["spec_version"] == SPEC_VERSION


# ---------------------------------------------------------------------------
# command line
# ---------------------------------------------------------------------------

class TestMain:
    def test_requires_config_or_scenario(self, capsys):
        assert main([]) == 2
        assert "provide --config" in capsys.readouterr().err

    def test_flags_only_run(self, tmp_path, capsys):
        out = tmp_path / "flagrun"
        code = main(["--scenario", "custom", "--trajectories", "4",
                     "--t-end", "2", "--dt", "1e-3",
                     "--out", str(out), "--emit", "report"])
        captured = capsys.readouterr()
        assert code == 0
        assert captured.out.strip() == str(out / "summary.json")
        report = json.loads((out / "summary.json").read_text())
        assert report["config"]["simulation"]["trajectories"] == 4
        assert (out / "summary.json").exists()
        assert not (out / "trajectories.csv").exists()

    def test_config_file_with_flag_overrides(self, tmp_path, capsys):
        path = tmp_path / "cfg.json"
        path.write_text(json.dumps(_tiny_doc()))
        out = tmp_path / "run"
        code = main(["--config", str(path), "--seed", "7",
                     "--trajectories", "3", "--out", str(out),
                     "--emit", "report"])
        assert code == 0
        capsys.readouterr()
        report = json.loads((out / "summary.json").read_text())
        assert report["seed"] == 7
        assert report["config"]["simulation"]["trajectories"] == 3

    def test_bad_config_exits_2(self, tmp_path, capsys):
        path = tmp_path / "bad.json"
        path.write_text(json.dumps({"simulation": {"delta_t": 1e-4}}))
        assert main(["--config", str(path)]) == 2
        assert "config error" in capsys.readouterr().err
        assert main(["--config", str(tmp_path / "missing.json")]) == 2
        capsys.readouterr()

    def test_blowup_exits_3(self, tmp_path, capsys):
        doc = {"scenario": "custom",
               "physics": {"gamma_a": 100.0, "s": 0.0},
               "simulation": {"t_end": 16.0, "dt": 1e-4,
                              "trajectories": 2, "record_stride": 1000},
               "analysis": {"witness": False},
               "output": {"directory": str(tmp_path / "x"),
                          "emit": "report"}}
        path = tmp_path / "blow.json"
        path.write_text(json.dumps(doc))
        assert main(["--config", str(path)]) == 3
        assert "blow-up" in capsys.readouterr().err

    def test_unwritable_output_exits_4(self, tmp_path, capsys):
        blocker = tmp_path / "blocked"
        blocker.write_text("a file, not a directory")
        path = tmp_path / "cfg.json"
        path.write_text(json.dumps(_tiny_doc(trajectories=2)))
        code = main(["--config", str(path), "--out", str(blocker),
                     "--emit", "report"])
        assert code == 4
        assert "output error" in capsys.readouterr().err

    def test_rerun_is_byte_identical(self, tmp_path, capsys):
        # same seed, same config -> every data file byte-for-byte equal,
        # including the rendered figure
        path = tmp_path / "cfg.json"
        path.write_text(json.dumps(_tiny_doc(trajectories=4)))
        outs = []
        for name in ("a", "b"):
            out = tmp_path / name
            assert main(["--config", str(path), "--out", str(out)]) == 0
            outs.append(out)
        capsys.readouterr()
        for fname in sorted(FULL_MANIFEST):
            a = (outs[0] / fname).read_bytes()
            b = (outs[1] / fname).read_bytes()
            if fname in ("summary.json", "config.json"):
                # these embed the output directory (and wall clock); compare
                # after normalizing both
                ja = json.loads(a)
                jb = json.loads(b)
                for j, out in zip((ja, jb), outs):
                    j.pop("wall_clock_seconds", None)
                    cfg_doc = j.get("config", j)
                    assert cfg_doc["output"]["directory"] == str(out)
                    cfg_doc["output"]["directory"] = "X"
                assert ja == jb
            else:
                assert a == b, "%s differs between identical runs" % fname
