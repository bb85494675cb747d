"""Command-line entry point for reproducible desk-scale runs.

Subcommands cover the whole pipeline: synth (generate a dataset file),
train (one leave-one-subject-out fold to a checkpoint), eval (confusions
and calibration gaps to a report), stream (replay a recording or compile a
scripted scenario through the online recognizer and editor) and bench
(per-frame latency percentiles).

Primary outputs (.mgd/.mgc/.mgr/.mgs, final documents) are byte-identical
across runs with equal inputs and seeds; wall-clock measurements go to a
separate timing file. A --config JSON file can override any hyperparameter
or FSM field and is echoed into the output directory. Exit codes: 0 ok,
1 failed run assertion, 2 usage error. MICROGEXT_THREADS caps parallelism.
"""

from __future__ import annotations

import json
import sys
import time
from pathlib import Path

import click
import numpy as np

from . import calibration, evaluation, network, scenario as scenario_mod, session_io, stream, synth, training
from .editor import Granularity
from .fsm import FsmConfig

_HP_FIELDS = set(network.HyperParams.__dataclass_fields__)
_FSM_FIELDS = set(FsmConfig.__dataclass_fields__)


def _load_config(path):
    if path is None:
        return {}, {}
    with open(path, "r", encoding="utf-8") as fh:
        raw = json.load(fh)
    unknown = set(raw) - _HP_FIELDS - _FSM_FIELDS
    if unknown:
        raise click.UsageError(f"unknown config keys: {sorted(unknown)}")
    hp_kwargs = {k: v for k, v in raw.items() if k in _HP_FIELDS}
    fsm_kwargs = {k: v for k, v in raw.items() if k in _FSM_FIELDS}
    return hp_kwargs, fsm_kwargs


def _prepare_out(out, config_path) -> Path:
    out_dir = Path(out)
    out_dir.mkdir(parents=True, exist_ok=True)
    if config_path is not None:
        (out_dir / "config.json").write_bytes(Path(config_path).read_bytes())
    return out_dir


def _write_timing(out_dir: Path, payload: dict) -> None:
    with open(out_dir / "timing.json", "w", encoding="utf-8") as fh:
        json.dump(payload, fh, sort_keys=True, indent=1)
        fh.write("\n")


@click.group()
def main():
    """Microgesture recognition and gesture-driven text editing."""


@main.command("synth")
@click.option("--n-subjects", default=10, show_default=True)
@click.option("--reps", default=20, show_default=True)
@click.option("--null-reps", default=20, show_default=True)
@click.option("--seed", default=0, show_default=True)
@click.option("--config", "config_path", type=click.Path(exists=True), default=None)
@click.option("--out", default="out", show_default=True, help="Output directory.")
def cmd_synth(n_subjects, reps, null_reps, seed, config_path, out):
    """Generate a synthetic labeled dataset (.mgd) and print its histogram."""
    out_dir = _prepare_out(out, config_path)
    t0 = time.perf_counter()
    dataset = synth.make_dataset(n_subjects, reps, null_reps, seed=seed)
    path = out_dir / "dataset.mgd"
    session_io.write_dataset(dataset, path)
    counts = {}
    for clip in dataset.clips:
        counts[clip.gesture.value] = counts.get(clip.gesture.value, 0) + 1
    click.echo(f"wrote {len(dataset.clips)} clips to {path}")
    for name in synth.CLASS_NAMES:
        click.echo(f"  {name:>8s}: {counts.get(name, 0)}")
    _write_timing(out_dir, {"synth_seconds": time.perf_counter() - t0})


@main.command("train")
@click.option("--dataset", "dataset_path", type=click.Path(exists=True), required=True)
@click.option("--fold-subject", default=0, show_default=True)
@click.option("--seed", default=0, show_default=True, help="Master training seed.")
@click.option("--config", "config_path", type=click.Path(exists=True), default=None)
@click.option("--out", default="out", show_default=True)
def cmd_train(dataset_path, fold_subject, seed, config_path, out):
    """Train one leave-one-subject-out fold and write a checkpoint (.mgc)."""
    hp_kwargs, _ = _load_config(config_path)
    hp_kwargs.setdefault("master_seed", seed)
    hp = network.HyperParams(**hp_kwargs)
    out_dir = _prepare_out(out, config_path)
    dataset = session_io.read_dataset(dataset_path)

    t0 = time.perf_counter()
    params, log = training.train(dataset, fold_subject, hp)
    _, val_clips, _ = training.split_fold(dataset, fold_subject)
    val_fc = [training.featurize_clip(c) for c in val_clips]
    x_val = np.stack([training.center_window(fc) for fc in val_fc])
    y_val = np.array([fc.class_index for fc in val_fc])
    params = calibration.calibrate(params, x_val, y_val)
    elapsed = time.perf_counter() - t0

    ckpt = out_dir / "checkpoint.mgc"
    session_io.save_checkpoint(params, ckpt)
    with open(out_dir / "training_log.json", "w", encoding="utf-8") as fh:
        json.dump(log, fh, sort_keys=True, indent=1)
        fh.write("\n")
    _write_timing(out_dir, {"train_seconds": elapsed})
    click.echo(f"fold {fold_subject}: final val loss {log[-1]['val_loss']:.4f}, tau {params.tau:.4f}")
    click.echo(f"wrote {ckpt}")


@main.command("eval")
@click.option("--checkpoint", "ckpt_path", type=click.Path(exists=True), required=True)
@click.option("--dataset", "dataset_path", type=click.Path(exists=True), required=True)
@click.option("--fold-subject", default=0, show_default=True)
@click.option("--seed", default=0, show_default=True)
@click.option("--config", "config_path", type=click.Path(exists=True), default=None)
@click.option("--out", default="out", show_default=True)
def cmd_eval(ckpt_path, dataset_path, fold_subject, seed, config_path, out):
    """Evaluate a checkpoint on a held-out subject; writes report.mgr."""
    out_dir = _prepare_out(out, config_path)
    params = session_io.load_checkpoint(ckpt_path)
    dataset = session_io.read_dataset(dataset_path)
    _, _, test_clips = training.split_fold(dataset, fold_subject)

    t0 = time.perf_counter()
    report = evaluation.evaluate(params, test_clips)
    elapsed = time.perf_counter() - t0

    meta = {"fold_subject": fold_subject, "seed": seed, "n_test_clips": len(test_clips)}
    session_io.emit_report(report, out_dir / "report.mgr", meta=meta)
    session_io.emit_report(report, out_dir / "report.txt", human=True)
    _write_timing(out_dir, {"eval_seconds": elapsed})
    click.echo(evaluation.render_report(report))
    click.echo(f"wrote {out_dir / 'report.mgr'}")


@main.command("stream")
@click.option("--checkpoint", "ckpt_path", type=click.Path(exists=True), required=True)
@click.option("--session", "session_path", type=click.Path(exists=True), default=None,
              help="Replay a recorded session (.mgs).")
@click.option("--script", "script_path", default=None,
              help="Scenario JSON file, or 'default' for the built-in 8-command script.")
@click.option("--seed", default=7, show_default=True)
@click.option("--config", "config_path", type=click.Path(exists=True), default=None)
@click.option("--out", default="out", show_default=True)
def cmd_stream(ckpt_path, session_path, script_path, seed, config_path, out):
    """Run the online recognizer over a session or scripted scenario."""
    if (session_path is None) == (script_path is None):
        raise click.UsageError("provide exactly one of --session or --script")
    _, fsm_kwargs = _load_config(config_path)
    out_dir = _prepare_out(out, config_path)
    params = session_io.load_checkpoint(ckpt_path)

    if script_path is not None:
        sc = scenario_mod.default_scenario(seed) if script_path == "default" else scenario_mod.load_scenario(script_path)
        frames, expected = scenario_mod.compile_scenario(sc)
        initial_text, granularity = sc.initial_text, sc.granularity
        cfg = FsmConfig(**fsm_kwargs) if fsm_kwargs else sc.fsm_config()
    else:
        frames, _ = session_io.read_session(session_path)
        expected = None
        initial_text, granularity = "", Granularity.CHARACTER
        cfg = FsmConfig(**fsm_kwargs)

    ctx = sc.context() if script_path is not None else None
    result = scenario_mod.run_session(params, frames, cfg, initial_text, granularity, ctx=ctx)

    session_io.write_session(out_dir / "session.mgs", frames, result.events)
    session_io.write_command_log(out_dir / "commands.log", result.command_log())
    (out_dir / "final_document.txt").write_text(
        result.final_document.text if result.final_document else "", encoding="utf-8"
    )
    with open(out_dir / "events.json", "w", encoding="utf-8") as fh:
        json.dump(
            [
                {
                    "gesture": e.gesture.value,
                    "fired_at": float(np.float32(e.fired_at)),
                    "mean_confidence": float(np.float32(e.mean_confidence)),
                }
                for e in result.events
            ],
            fh,
            sort_keys=True,
            indent=1,
        )
        fh.write("\n")
    _write_timing(out_dir, {"latency_ms": result.latency_summary()})

    click.echo(f"{len(result.events)} events over {result.right_frames} right-hand frames")
    for ev in result.events:
        click.echo(f"  {ev.fired_at:8.3f}s  {ev.gesture.value:<8s} conf {ev.mean_confidence:.3f}")
    lat = result.latency_summary()
    click.echo(f"latency ms p50 {lat['p50']:.2f}  p95 {lat['p95']:.2f}  p99 {lat['p99']:.2f}")
    if result.command_errors:
        click.echo(f"command errors: {result.command_errors}", err=True)
    if expected is not None and [c for c in result.commands] != expected:
        click.echo("warning: produced commands differ from the scripted expectation", err=True)
        sys.exit(1)


@main.command("bench")
@click.option("--checkpoint", "ckpt_path", type=click.Path(exists=True), default=None,
              help="Checkpoint to time; defaults to freshly initialized weights.")
@click.option("--hidden", default=256, show_default=True)
@click.option("--frames", "n_frames", default=720, show_default=True)
@click.option("--seed", default=0, show_default=True)
@click.option("--config", "config_path", type=click.Path(exists=True), default=None)
@click.option("--out", default="out", show_default=True)
def cmd_bench(ckpt_path, hidden, n_frames, seed, config_path, out):
    """Measure per-frame push latency over a synthetic stream."""
    out_dir = _prepare_out(out, config_path)
    if ckpt_path is not None:
        params = session_io.load_checkpoint(ckpt_path)
    else:
        params = network.init_params(network.HyperParams(hidden=hidden), seed=seed)

    sc = scenario_mod.Scenario(
        initial_text="",
        seed=seed,
        steps=(
            scenario_mod.ScenarioStep(kind="gesture", gesture=synth.GestureClass.FIST, hold=2.0),
            scenario_mod.ScenarioStep(kind="swipe", u_from=0.05, u_to=0.9, move_time=2.0),
            scenario_mod.ScenarioStep(kind="rest", duration=2.0),
        ),
    )
    frames, _ = scenario_mod.compile_scenario(sc)
    right = [f for f in frames if f.handedness.value == "Right"][:n_frames]
    runtime = stream.StreamRuntime(params)
    with stream.inference_thread_cap():
        for frame in right:
            runtime.push_frame(frame)
    summary = stream.latency_percentiles(runtime.latencies_ms)
    _write_timing(out_dir, {"latency_ms": summary, "frames": len(right)})
    click.echo(
        f"push_frame latency over {len(right)} frames (hidden={params.hp.hidden}): "
        f"p50 {summary['p50']:.3f} ms  p95 {summary['p95']:.3f} ms  p99 {summary['p99']:.3f} ms"
    )


if __name__ == "__main__":
    main()
