import json
from dataclasses import replace

import numpy as np
import pytest

from dimer_transfer import cli, config
from dimer_transfer.hamiltonian import DimerParams
from dimer_transfer.pulse import GaussianSegment, PulseTrain
from dimer_transfer.scenarios import (
    CSV_HEADER,
    PRESETS,
    ConfigError,
    ScenarioConfig,
    SweepSpec,
    UnknownPreset,
    apply_axis,
    default_t_end,
    preset,
    run,
    summarize,
    sweep,
)

# widths in units of 1/J, centers in units of 1/omega
PRESET_TABLE = {
    "fig4a": (0.01, (0.0, 15.0)),
    "fig4b": (0.1, (0.0, 15.0)),
    "fig5a": (0.5, (0.0, 15.0)),
    "fig5b": (1.0, (0.0, 15.0)),
    "fig6a": (10.0, (0.0, 15.0)),
    "fig6b": (10.0, (0.0, 25.0, 35.0, 45.0)),
    "fig7a": (0.1, (0.0, 15.0)),
    "fig7b": (10.0, (0.0, 25.0, 35.0, 45.0)),
}
FIGURE_PARAMS = dict(omega1=1.0, omega2=1.0, J=1.5, kappa1=0.1, kappa2=0.1, T1=0.1, T2=0.1)

SCENARIO_TEXT = """
[params]
J = 1.5          ; exchange
kappa1 = 0.1
[pulse.1]
E0 = 1.0
tau_pJ = 0.1
t_center = 0
[run]
name = short
t_end = 8
route = full
"""


class TestPresets:
    @pytest.mark.parametrize("name", sorted(PRESET_TABLE))
    def test_sequences(self, name):
        cfg = preset(name)
        width, centers = PRESET_TABLE[name]
        assert isinstance(cfg, ScenarioConfig)
        assert cfg.params == DimerParams(**FIGURE_PARAMS)
        assert tuple(s.t_center for s in cfg.train) == centers
        for s in cfg.train:
            assert s.tau_p == pytest.approx(width / 1.5, rel=1e-15)
            assert s.E0 == 1.0 and s.Omega == 0.0

    def test_fig1_and_fig3(self):
        for name, reduce in [("fig1", ("saturation_P", "saturation_eta")),
                             ("fig3", ("peak_C",))]:
            spec = preset(name)
            assert spec.axis == "pulse.tau_pJ" and spec.reduce == reduce
            assert spec.values == (0.01, 0.1, 0.5, 1.0, 10.0)
            assert spec.base.params == DimerParams(**FIGURE_PARAMS)

    def test_fig2(self):
        spec = preset("fig2")
        assert len(spec.values) == 40
        assert spec.values[0] == pytest.approx(0.01) and spec.values[-1] == pytest.approx(10.0)
        assert np.allclose(np.diff(np.log(spec.values)), np.log(1000) / 39)
        assert spec.group_axis == "params.J" and spec.group_values == (1.0, 1.5, 2.0)
        # the width is in units of the group's own J
        for g, v, cfg in spec.points()[:3] + spec.points()[-3:]:
            assert cfg.params.J == g
            assert cfg.train.segments[0].tau_p == pytest.approx(v / g)

    def test_unknown(self):
        with pytest.raises(UnknownPreset):
            preset("fig8")

    def test_every_name_resolves(self):
        for name in PRESETS:
            preset(name)


class TestScenarioConfig:
    def test_default_horizon(self):
        train = PulseTrain([GaussianSegment(tau_p=10 / 1.5, t_center=45.0)])
        assert default_t_end(DimerParams(), train) == pytest.approx(45 + 5 * 10 / 1.5 + 100)
        assert default_t_end(DimerParams(), PulseTrain()) == pytest.approx(150.0)

    def test_zero_bath_needs_explicit_end(self):
        with pytest.raises(ConfigError):
            ScenarioConfig(params=DimerParams(kappa1=0, kappa2=0))
        ScenarioConfig(params=DimerParams(kappa1=0, kappa2=0), t_start=0.0, t_end=1.0)

    @pytest.mark.parametrize("kw", [{"route": "fast"}, {"dt": 0.0}, {"outputs": ("energy",)},
                                    {"t_start": 5.0, "t_end": 1.0},
                                    {"sample_interval": 1e-4}])
    def test_invalid(self, kw):
        with pytest.raises(ConfigError):
            ScenarioConfig(**kw)

    def test_apply_axis(self):
        cfg = preset("fig4a")
        assert apply_axis(cfg, "params.T1", 0.5).params.T1 == 0.5
        moved = apply_axis(cfg, "pulse.E0", 2.0)
        assert all(s.E0 == 2.0 for s in moved.train)
        with pytest.raises(ConfigError):
            apply_axis(cfg, "pulse.width", 1.0)
        with pytest.raises(ConfigError):
            apply_axis(cfg, "params.T1", -1.0)


class TestConfigFiles:
    def test_parse(self):
        cfg = config.build_scenario(config.parse_text(SCENARIO_TEXT))
        assert cfg.name == "short" and cfg.t_span == (-5 * 0.1 / 1.5, 8.0)
        assert cfg.train.segments[0].tau_p == pytest.approx(0.1 / 1.5)
        assert cfg.params.J == 1.5 and cfg.params.kappa2 == 0.1

    def test_overrides(self):
        cp = config.parse_text(SCENARIO_TEXT, ["params.J=2", "pulse.1.E0=0.5", "run.dt=0.002"])
        cfg = config.build_scenario(cp)
        assert cfg.params.J == 2.0 and cfg.train.segments[0].E0 == 0.5 and cfg.dt == 0.002
        assert cfg.train.segments[0].tau_p == pytest.approx(0.05)

    @pytest.mark.parametrize("text", [
        "[params]\nJ = abc\n",
        "[params]\nspeed = 1\n",
        "[pulse.1]\ntau_p = 1\ntau_pJ = 1\n",
        "[pulse.1]\ntau_p = -1\n",
        "[other]\nx = 1\n",
        "[run]\nroute = sideways\n",
        "not an ini file",
    ])
    def test_errors(self, text):
        with pytest.raises(ConfigError):
            config.build_scenario(config.parse_text(text))

    def test_bad_override(self):
        with pytest.raises(ConfigError):
            config.parse_text(SCENARIO_TEXT, ["J=2"])

    def test_dump_roundtrip(self):
        cfg = config.build_scenario(config.parse_text(SCENARIO_TEXT))
        again = config.build_scenario(config.parse_text(config.dump_scenario(cfg)))
        assert again == replace(cfg, t_start=cfg.t_span[0], t_end=cfg.t_span[1])

    def test_sweep_values(self):
        assert config.parse_values("1, 2,3") == (1.0, 2.0, 3.0)
        assert config.parse_values("lin:0:1:3") == (0.0, 0.5, 1.0)
        np.testing.assert_allclose(config.parse_values("log:0.01:10:4"), [0.01, 0.1, 1, 10])
        for bad in ("log:0:1:3", "lin:0:1", "log:1:2:x", "lin:0:1:0"):
            with pytest.raises(ConfigError):
                config.parse_values(bad)

    def test_build_sweep(self):
        text = SCENARIO_TEXT + "[sweep]\naxis = params.T1\nvalues = 0.1, 0.2\nreduce = peak_C\n"
        spec = config.build_sweep(config.parse_text(text))
        assert spec.axis == "params.T1" and spec.values == (0.1, 0.2)
        assert spec.reduce == ("peak_C",)
        with pytest.raises(ConfigError):
            config.build_sweep(config.parse_text(SCENARIO_TEXT))


class TestRun:
    def test_outputs(self, tmp_path):
        cfg = config.build_scenario(config.parse_text(SCENARIO_TEXT))
        trajs = run(cfg, tmp_path)
        lines = (tmp_path / "short_full.csv").read_text().splitlines()
        assert lines[0] == ",".join(CSV_HEADER)
        assert len(lines) == len(trajs["full"]) + 1
        side = json.loads((tmp_path / "short.json").read_text())
        assert side["routes"]["full"]["status"] == "ok"
        assert side["config"]["t_end"] == 8.0
        assert side["version"]
        summary = side["routes"]["full"]["summary"]
        assert set(summary) == {"saturation_P", "saturation_eta", "peak_C", "peak_C_time"}

    def test_deterministic_bytes(self, tmp_path):
        cfg = config.build_scenario(config.parse_text(SCENARIO_TEXT))
        run(cfg, tmp_path / "a")
        run(cfg, tmp_path / "b")
        assert (tmp_path / "a/short_full.csv").read_bytes() == \
            (tmp_path / "b/short_full.csv").read_bytes()

    def test_empty_train_is_dark(self, tmp_path):
        cfg = ScenarioConfig(t_start=0.0, t_end=10.0, name="dark")
        traj = run(cfg, tmp_path)["full"]
        assert np.all(traj.P == 0) and np.all(traj.concurrence == 0)
        rows = np.loadtxt(tmp_path / "dark_full.csv", delimiter=",", skiprows=1)
        assert not rows[:, CSV_HEADER.index("P")].any()
        assert not rows[:, CSV_HEADER.index("concurrence")].any()

    def test_both_routes(self, tmp_path):
        cfg = replace(config.build_scenario(config.parse_text(SCENARIO_TEXT)), route="both")
        trajs = run(cfg, tmp_path)
        assert set(trajs) == {"full", "reduced"}
        assert (tmp_path / "short_reduced.csv").exists()

    def test_failure_is_flushed_and_marked(self, tmp_path, monkeypatch):
        from dimer_transfer import master_equation

        monkeypatch.setattr(master_equation, "MAX_HALVINGS", 0)
        monkeypatch.setattr(master_equation, "POSITIVITY_TOL", -1.0)  # every check fails
        cfg = config.build_scenario(config.parse_text(SCENARIO_TEXT))
        with pytest.raises(master_equation.IntegrationFailed):
            run(cfg, tmp_path)
        side = json.loads((tmp_path / "short.json").read_text())
        assert side["routes"]["full"]["status"] == "failed"
        assert (tmp_path / "short_full.csv").exists()


class TestSweep:
    def spec(self, values=(0.1, 1.0)):
        base = config.build_scenario(config.parse_text(SCENARIO_TEXT))
        return SweepSpec(base=base, axis="pulse.tau_pJ", values=values,
                         reduce=("saturation_P", "peak_C"), name="sw")

    def test_single_value_equals_run(self):
        spec = self.spec(values=(0.1,))
        res = sweep(spec)
        traj = run(spec.points()[0][2])["full"]
        s = summarize(traj)
        assert res.rows[0]["saturation_P"] == s["saturation_P"]
        assert res.rows[0]["peak_C"] == s["peak_C"]

    def test_serial_equals_parallel(self, tmp_path):
        a = sweep(self.spec(), tmp_path / "a")
        b = sweep(self.spec(), tmp_path / "b", n_jobs=2)
        assert a.rows == b.rows
        assert (tmp_path / "a/sw.csv").read_bytes() == (tmp_path / "b/sw.csv").read_bytes()
        header = (tmp_path / "a/sw.csv").read_text().splitlines()[0]
        assert header == "pulse.tau_pJ,saturation_P,peak_C"

    def test_failed_points_recorded_missing(self, tmp_path, monkeypatch):
        from dimer_transfer import master_equation

        monkeypatch.setattr(master_equation, "MAX_HALVINGS", 0)
        monkeypatch.setattr(master_equation, "POSITIVITY_TOL", -1.0)
        res = sweep(self.spec(), tmp_path)
        assert all(r["status"] == "failed" for r in res.rows)
        assert np.isnan(res.column("saturation_P")).all()
        lines = (tmp_path / "sw.csv").read_text().splitlines()
        assert lines[1].endswith(",,")

    def test_invalid_specs(self):
        base = ScenarioConfig()
        with pytest.raises(ConfigError):
            SweepSpec(base=base, axis="pulse.tau_pJ", values=())
        with pytest.raises(ConfigError):
            SweepSpec(base=base, axis="pulse.tau_pJ", values=(1.0,), reduce=("mean",))
        with pytest.raises(ConfigError):
            SweepSpec(base=base, axis="params.J", values=(1.0,), group_axis="params.T1")


class TestCli:
    def write(self, tmp_path, text=SCENARIO_TEXT):
        path = tmp_path / "scenario.ini"
        path.write_text(text)
        return path

    def test_simulate(self, tmp_path, capsys):
        path = self.write(tmp_path)
        assert cli.main(["simulate", "--config", str(path), "--out", str(tmp_path)]) == 0
        assert (tmp_path / "short_full.csv").exists()
        assert "saturation P=" in capsys.readouterr().out

    def test_validate(self, tmp_path, capsys):
        assert cli.main(["validate", "--config", str(self.write(tmp_path))]) == 0
        assert "ok" in capsys.readouterr().out

    def test_config_error_exit_code(self, tmp_path):
        path = self.write(tmp_path, "[params]\nJ = -1\n")
        assert cli.main(["validate", "--config", str(path)]) == 2
        assert cli.main(["simulate", "--config", str(tmp_path / "missing.ini")]) == 2

    def test_usage_error_exit_code(self):
        with pytest.raises(SystemExit) as info:
            cli.main(["preset", "fig99"])
        assert info.value.code == 2

    def test_integration_failure_exit_code(self, tmp_path, monkeypatch):
        from dimer_transfer import master_equation

        monkeypatch.setattr(master_equation, "MAX_HALVINGS", 0)
        monkeypatch.setattr(master_equation, "POSITIVITY_TOL", -1.0)
        path = self.write(tmp_path)
        assert cli.main(["simulate", "--config", str(path), "--out", str(tmp_path)]) == 3

    def test_sweep_command(self, tmp_path):
        path = self.write(tmp_path)
        code = cli.main(["sweep", "--config", str(path), "--axis", "pulse.tau_pJ",
                         "--values", "0.1,1", "--reduce", "saturation_P",
                         "--out", str(tmp_path)])
        assert code == 0
        assert (tmp_path / "short.csv").exists()
