"""Scenario compilation and the CLI surface (exit codes, determinism)."""

import json

import numpy as np
import pytest
from click.testing import CliRunner

from microgext import session_io
from microgext.cli import main
from microgext.editor import CommandKind, Granularity
from microgext.scenario import (
    Scenario,
    ScenarioStep,
    compile_scenario,
    default_scenario,
    load_scenario,
    run_session,
    scenario_to_dict,
)
from microgext.skeleton import Handedness
from microgext.synth import GestureClass


class TestScenarioCompile:
    def test_default_scenario_shape(self):
        frames, expected = compile_scenario(default_scenario())
        kinds = [c.kind for c in expected]
        assert kinds == [
            CommandKind.SET_GRANULARITY,
            CommandKind.MOVE_CARET,
            CommandKind.SELECT_RANGE,
            CommandKind.COPY,
            CommandKind.CUT,
            CommandKind.PASTE,
            CommandKind.SELECT_ALL,
            CommandKind.DELETE,
            CommandKind.UNDO,
        ]
        ts = [f.timestamp for f in frames]
        assert ts == sorted(ts)
        assert any(f.handedness is Handedness.LEFT for f in frames)

    def test_compile_deterministic(self):
        fa, _ = compile_scenario(default_scenario())
        fb, _ = compile_scenario(default_scenario())
        assert len(fa) == len(fb)
        for a, b in zip(fa, fb):
            assert a.timestamp == b.timestamp
            np.testing.assert_array_equal(a.positions(), b.positions())

    def test_json_round_trip(self, tmp_path):
        sc = default_scenario()
        path = tmp_path / "sc.json"
        path.write_text(json.dumps(scenario_to_dict(sc)))
        back = load_scenario(path)
        assert back.initial_text == sc.initial_text
        assert back.granularity is sc.granularity
        assert [s.kind for s in back.steps] == [s.kind for s in sc.steps]

    def test_expected_swipe_delta_single_mode(self):
        sc = Scenario(
            initial_text="abc",
            steps=(ScenarioStep(kind="swipe", u_from=0.8, u_to=0.05),),
        )
        _, expected = compile_scenario(sc)
        assert expected[0].kind is CommandKind.MOVE_CARET
        assert expected[0].delta == -1  # one unit per fired swipe, backward

    def test_expected_swipe_delta_crossings_mode(self):
        sc = Scenario(
            initial_text="abc",
            swipe_unit_mode="crossings",
            steps=(ScenarioStep(kind="swipe", u_from=0.05, u_to=0.8),),
        )
        _, expected = compile_scenario(sc)
        assert expected[0].delta == 3  # bins 0 -> 3

    def test_unknown_step_kind_rejected(self):
        sc = Scenario(initial_text="", steps=(ScenarioStep(kind="dance"),))
        with pytest.raises(ValueError):
            compile_scenario(sc)


class TestRunSessionWithStub:
    def test_stub_predictor_pipeline(self):
        # a scripted predictor stub keeps this test model-free: whatever the
        # right hand does, claim Null except one fist burst
        from microgext.synth import CLASS_NAMES

        sc = Scenario(
            initial_text="hello world",
            granularity=Granularity.WORD,
            steps=(ScenarioStep(kind="gesture", gesture=GestureClass.FIST, hold=0.4),),
        )
        frames, _ = compile_scenario(sc)
        n_right = sum(1 for f in frames if f.handedness is Handedness.RIGHT)
        fist_at = range(70, 95)
        calls = {"i": 0}

        def predictor(window):
            i = calls["i"]
            calls["i"] += 1
            probs = np.full(8, 0.05 / 7)
            target = CLASS_NAMES.index("Fist") if i in fist_at else CLASS_NAMES.index("Null")
            probs[target] = 0.95
            probs /= probs.sum()
            return probs, np.zeros((20, 5))

        result = run_session(predictor, frames, initial_text=sc.initial_text, granularity=sc.granularity)
        assert [e.gesture for e in result.events] == [GestureClass.FIST]
        # Delete without a selection surfaces as a recorded error, not a crash
        assert result.command_errors and "Delete" in result.command_errors[0]
        assert result.right_frames == n_right


@pytest.fixture(scope="module")
def ckpt_path(tiny_trained, tmp_path_factory):
    params, _ = tiny_trained
    path = tmp_path_factory.mktemp("ckpt") / "model.mgc"
    session_io.save_checkpoint(params, path)
    return path


class TestCli:
    def test_unknown_flag_exits_2(self):
        result = CliRunner().invoke(main, ["synth", "--bogus"])
        assert result.exit_code == 2

    def test_synth_counts_and_determinism(self, tmp_path):
        runner = CliRunner()
        r1 = runner.invoke(main, ["synth", "--n-subjects", "1", "--reps", "1", "--null-reps", "1",
                                  "--seed", "5", "--out", str(tmp_path / "a")])
        assert r1.exit_code == 0, r1.output
        assert "wrote 8 clips" in r1.output
        r2 = runner.invoke(main, ["synth", "--n-subjects", "1", "--reps", "1", "--null-reps", "1",
                                  "--seed", "5", "--out", str(tmp_path / "b")])
        assert r2.exit_code == 0
        assert (tmp_path / "a" / "dataset.mgd").read_bytes() == (tmp_path / "b" / "dataset.mgd").read_bytes()

    def test_train_eval_smoke(self, tmp_path):
        runner = CliRunner()
        out = tmp_path / "run"
        r = runner.invoke(main, ["synth", "--n-subjects", "2", "--reps", "2", "--null-reps", "2",
                                 "--seed", "3", "--out", str(out)])
        assert r.exit_code == 0, r.output
        cfg = tmp_path / "cfg.json"
        cfg.write_text(json.dumps({"hidden": 16, "max_epochs": 2}))
        r = runner.invoke(main, ["train", "--dataset", str(out / "dataset.mgd"), "--fold-subject", "0",
                                 "--seed", "1", "--config", str(cfg), "--out", str(out)])
        assert r.exit_code == 0, r.output
        assert (out / "checkpoint.mgc").exists()
        assert (out / "config.json").read_text() == cfg.read_text()
        r = runner.invoke(main, ["eval", "--checkpoint", str(out / "checkpoint.mgc"),
                                 "--dataset", str(out / "dataset.mgd"), "--fold-subject", "0",
                                 "--out", str(out)])
        assert r.exit_code == 0, r.output
        assert (out / "report.mgr").exists()
        payload = session_io.read_report(out / "report.mgr")
        assert np.array(payload["class_confusion"]).sum() == 2 * 7 + 2

    def test_config_rejects_unknown_keys(self, tmp_path):
        cfg = tmp_path / "cfg.json"
        cfg.write_text(json.dumps({"nonsense": 1}))
        ds = tmp_path / "d"
        CliRunner().invoke(main, ["synth", "--n-subjects", "1", "--reps", "1", "--null-reps", "1",
                                  "--out", str(ds)])
        r = CliRunner().invoke(main, ["train", "--dataset", str(ds / "dataset.mgd"),
                                      "--config", str(cfg), "--out", str(ds)])
        assert r.exit_code == 2

    def test_stream_requires_exactly_one_source(self, ckpt_path):
        r = CliRunner().invoke(main, ["stream", "--checkpoint", str(ckpt_path)])
        assert r.exit_code == 2

    def test_bench_reports_percentiles(self, tmp_path):
        r = CliRunner().invoke(main, ["bench", "--hidden", "32", "--frames", "120",
                                      "--out", str(tmp_path)])
        assert r.exit_code == 0, r.output
        assert "p50" in r.output and "p95" in r.output and "p99" in r.output
        timing = json.loads((tmp_path / "timing.json").read_text())
        assert set(timing["latency_ms"]) == {"p50", "p95", "p99"}

    def test_bench_repeatable_within_tolerance(self, tmp_path):
        runner = CliRunner()
        p50s = []
        for name in ("x", "y"):
            r = runner.invoke(main, ["bench", "--hidden", "32", "--frames", "200",
                                     "--out", str(tmp_path / name)])
            assert r.exit_code == 0
            p50s.append(json.loads((tmp_path / name / "timing.json").read_text())["latency_ms"]["p50"])
        spread = abs(p50s[0] - p50s[1]) / max(p50s)
        assert spread < 0.5  # generous: shared CI hardware jitters
