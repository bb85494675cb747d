"""Declarative interaction scripts compiled to synthetic frame streams.

A scenario is a sequence of steps (rest, gesture, swipe, pinch_hold,
mode_switch) executed on a 72 Hz clock. The right hand streams continuously,
blending between the neutral pose and each step's pose; the left hand emits
frames only during mode-switch steps. Compilation is deterministic given the
scenario seed, and the compiler also produces the expected editing-command
sequence, which is the oracle the end-to-end test replays directly through
the document engine.

run_session() drives the full online pipeline: right-hand frames feed the
pinch-hold detector and the FSM runtime, left-hand frames feed the
mode-switch machine, fired events bind to commands, and commands apply to
the document in timestamp order.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field, replace

import numpy as np

from . import quat
from .editor import Document, EditCommand, Granularity
from .editor import apply as apply_command
from .fsm import FsmConfig, GestureEvent
from .interaction import (
    EditorContext,
    ModeSwitchState,
    GESTURE_COMMANDS,
    bind_event,
    detect_pinch_hold,
    mode_switch_step,
)
from .skeleton import HandFrame, Handedness
from .stream import StreamRuntime, latency_percentiles
from .synth import (
    FRAME_RATE,
    POSES,
    STATIC_POSE_BY_GESTURE,
    GestureClass,
    PoseParams,
    PoseTrack,
    SubjectParams,
    assemble_clip_arrays,
    stable_hash,
)

_SECTOR_CENTERS = {
    Granularity.CHARACTER: -67.5,
    Granularity.WORD: -22.5,
    Granularity.SENTENCE: 22.5,
    Granularity.PARAGRAPH: 67.5,
}

_BLEND_S = 0.18
_RIGHT_BASE = np.array([0.12, 1.20, 0.35])
_LEFT_BASE = np.array([-0.15, 1.20, 0.35])


@dataclass(frozen=True)
class ScenarioStep:
    kind: str  # rest | gesture | swipe | pinch_hold | mode_switch
    gesture: GestureClass | None = None
    mode: Granularity | None = None
    duration: float = 0.5  # rest / pinch hold length
    hold: float = 0.35  # gesture hold length
    u_from: float = 0.05
    u_to: float = 0.65
    move_time: float = 0.35
    pre_rest: float = 0.8


@dataclass(frozen=True)
class Scenario:
    initial_text: str
    granularity: Granularity = Granularity.CHARACTER
    seed: int = 7
    steps: tuple[ScenarioStep, ...] = ()
    jitter_std: float = 0.0006
    # scripted actions leave a preparation pause between commands, so the
    # post-fire lockout can safely cover a whole action
    fsm_refractory: int = 60
    swipe_unit_mode: str = "single"

    def subject(self) -> SubjectParams:
        return SubjectParams(subject_id=-1, pose_jitter_std=self.jitter_std, rng_seed=self.seed)

    def fsm_config(self) -> FsmConfig:
        return FsmConfig(refractory=self.fsm_refractory)

    def context(self) -> EditorContext:
        return EditorContext(swipe_unit_mode=self.swipe_unit_mode)


def load_scenario(path) -> Scenario:
    with open(path, "r", encoding="utf-8") as fh:
        raw = json.load(fh)
    steps = []
    for s in raw.get("steps", []):
        steps.append(
            ScenarioStep(
                kind=s["kind"],
                gesture=GestureClass(s["gesture"]) if "gesture" in s else None,
                mode=Granularity(s["mode"]) if "mode" in s else None,
                duration=s.get("duration", 0.5),
                hold=s.get("hold", 0.35),
                u_from=s.get("u_from", 0.05),
                u_to=s.get("u_to", 0.65),
                move_time=s.get("move_time", 0.35),
                pre_rest=s.get("pre_rest", 0.8),
            )
        )
    return Scenario(
        initial_text=raw["initial_text"],
        granularity=Granularity(raw.get("granularity", "Character")),
        seed=raw.get("seed", 7),
        steps=tuple(steps),
        jitter_std=raw.get("jitter_std", 0.0006),
        fsm_refractory=raw.get("fsm_refractory", 60),
        swipe_unit_mode=raw.get("swipe_unit_mode", "single"),
    )


def scenario_to_dict(sc: Scenario) -> dict:
    steps = []
    for s in sc.steps:
        d = {"kind": s.kind, "duration": s.duration, "hold": s.hold, "pre_rest": s.pre_rest}
        if s.gesture is not None:
            d["gesture"] = s.gesture.value
        if s.mode is not None:
            d["mode"] = s.mode.value
        if s.kind == "swipe":
            d.update(u_from=s.u_from, u_to=s.u_to, move_time=s.move_time)
        steps.append(d)
    return {
        "initial_text": sc.initial_text,
        "granularity": sc.granularity.value,
        "seed": sc.seed,
        "jitter_std": sc.jitter_std,
        "fsm_refractory": sc.fsm_refractory,
        "swipe_unit_mode": sc.swipe_unit_mode,
        "steps": steps,
    }


def _frames(seconds: float) -> int:
    return max(1, int(round(seconds * FRAME_RATE)))


def _u_bin(u: float) -> int:
    return min(3, int(np.clip(u, 0.0, 1.0) * 4.0))


def _expected_swipe_delta(u_from: float, u_to: float, mode: str) -> int:
    """Units the scripted thumb path should produce under a unit mode:
    one per fired swipe ("single"), or one per sub-state boundary crossed,
    never less than one unit, signed by direction."""
    sign = 1 if u_to >= u_from else -1
    if mode == "single":
        return sign
    net = abs(_u_bin(u_to) - _u_bin(u_from))
    return sign * max(1, net)


def _smooth(n: int) -> np.ndarray:
    x = np.linspace(0.0, 1.0, n, endpoint=True)
    return x * x * (3.0 - 2.0 * x)


def compile_scenario(sc: Scenario):
    """Build the merged frame timeline and the expected command sequence.

    Returns (frames, expected): frames are right- and left-hand HandFrames
    sorted by timestamp; expected is the list of EditCommands the session
    should produce (swipe deltas assume the scripted short swipes, which
    cross at most one sub-state boundary during confirmation).
    """
    rest = POSES["rest"]
    tracks: list[PoseTrack] = []
    left_segments = []  # (start frame, menu frames, spread frames, target mode)
    expected: list[EditCommand] = []
    selection_armed = False
    n_total = 0

    def extend(track: PoseTrack):
        nonlocal n_total
        tracks.append(track)
        n_total += len(track.spread)

    def extend_const(pose: PoseParams, n: int):
        extend(PoseTrack.constant(pose, n))

    def extend_blend(a: PoseParams, b: PoseParams, n: int):
        extend(PoseTrack.blend(a, b, _smooth(n)))

    for step in sc.steps:
        extend_const(rest, _frames(step.pre_rest))
        if step.kind == "rest":
            extend_const(rest, _frames(step.duration))
        elif step.kind == "gesture":
            pose = POSES[STATIC_POSE_BY_GESTURE[step.gesture]]
            extend_blend(rest, pose, _frames(_BLEND_S))
            extend_const(pose, _frames(step.hold))
            extend_blend(pose, rest, _frames(_BLEND_S))
            expected.append(EditCommand(GESTURE_COMMANDS[step.gesture]))
        elif step.kind == "swipe":
            start = replace(POSES["swipe"], thumb_u=step.u_from)
            end = replace(POSES["swipe"], thumb_u=step.u_to)
            extend_blend(rest, start, _frames(_BLEND_S))
            n_move = _frames(step.move_time)
            base = PoseTrack.constant(start, n_move)
            u = step.u_from + (step.u_to - step.u_from) * _smooth(n_move)
            extend(PoseTrack(base.curls, base.spread, thumb_u=u, thumb_w=base.thumb_w))
            extend_const(end, _frames(step.hold))
            extend_blend(end, rest, _frames(_BLEND_S))
            delta = _expected_swipe_delta(step.u_from, step.u_to, sc.swipe_unit_mode)
            if selection_armed:
                expected.append(EditCommand.select_range(delta))
                selection_armed = False
            else:
                expected.append(EditCommand.move_caret(delta))
        elif step.kind == "pinch_hold":
            pinch = POSES["pinch"]
            extend_blend(rest, pinch, _frames(0.15))
            extend_const(pinch, _frames(step.duration))
            extend_blend(pinch, rest, _frames(0.15))
            selection_armed = True
        elif step.kind == "mode_switch":
            n_menu = _frames(0.5)
            n_spread = _frames(0.3)
            left_segments.append((n_total, n_menu, n_spread, step.mode))
            extend_const(rest, n_menu + n_spread)
            expected.append(EditCommand.set_granularity(step.mode))
        else:
            raise ValueError(f"unknown scenario step kind {step.kind!r}")
    extend_const(rest, _frames(1.0))
    return _assemble(sc, tracks, left_segments, expected)


def _assemble(sc: Scenario, tracks, left_segments, expected):
    subject = sc.subject()
    track = PoseTrack.concat(tracks)
    n = len(track.spread)
    t = np.arange(n) / FRAME_RATE
    rng = np.random.Generator(np.random.PCG64(stable_hash(sc.seed, "scenario-right")))
    wrist_pos = np.tile(_RIGHT_BASE, (n, 1))
    base_q = quat.from_axis_angle(np.array([0.0, 1.0, 0.0]), 0.3)
    wrist_quat = np.tile(base_q, (n, 1))
    ts, pos, ori = assemble_clip_arrays(track, t, wrist_pos, wrist_quat, subject, rng)

    from .skeleton import NUM_JOINTS, JointPose

    right = [
        HandFrame(float(ts[i]), Handedness.RIGHT, tuple(JointPose(pos[i, j], ori[i, j]) for j in range(NUM_JOINTS)))
        for i in range(n)
    ]

    left: list[HandFrame] = []
    lrng = np.random.Generator(np.random.PCG64(stable_hash(sc.seed, "scenario-left")))
    for start_frame, n_menu, n_spread, mode in left_segments:
        target = np.radians(_SECTOR_CENTERS[mode])
        rolls = np.concatenate([target * _smooth(n_menu), np.full(n_spread, target)])
        poses = [POSES["thumb_up"]] * n_menu + [POSES["spread_four"]] * n_spread
        ltrack = PoseTrack.concat([PoseTrack.constant(p, 1) for p in poses])
        lt = (start_frame + np.arange(n_menu + n_spread) + 0.5) / FRAME_RATE
        lq = np.stack([quat.from_axis_angle(np.array([0.0, 0.0, 1.0]), r) for r in rolls])
        lpos = np.tile(_LEFT_BASE, (len(lt), 1))
        lts, lp, lo = assemble_clip_arrays(ltrack, lt, lpos, lq, subject, lrng)
        left.extend(
            HandFrame(float(lts[i]), Handedness.LEFT, tuple(JointPose(lp[i, j], lo[i, j]) for j in range(NUM_JOINTS)))
            for i in range(len(lt))
        )

    frames = sorted(right + left, key=lambda f: f.timestamp)
    return frames, expected


@dataclass
class SessionResult:
    events: list[GestureEvent] = field(default_factory=list)
    commands: list[EditCommand] = field(default_factory=list)
    command_times: list[float] = field(default_factory=list)
    command_errors: list[str] = field(default_factory=list)
    final_document: Document | None = None
    right_frames: int = 0
    latencies_ms: list[float] = field(default_factory=list)

    def command_log(self) -> list[tuple[float, EditCommand]]:
        return list(zip(self.command_times, self.commands))

    def latency_summary(self) -> dict[str, float]:
        return latency_percentiles(self.latencies_ms)


class _SwipeEpisode:
    """Tracks the thumb's progress over one whole swipe.

    The FSM fires early (as soon as the pose is confirmed), before the user
    has actually moved. Binding at fire time would therefore measure the
    landing, not the swipe, so the command is deferred: progress u is
    sampled every frame until the thumb leaves the rail, and the delta is
    derived from the whole trajectory. The direction comes from a least
    squares trend over the samples, which averages out per-frame noise.
    """

    END_AFTER_MISSES = 3

    def __init__(self, event: GestureEvent):
        self.event = event
        self.us: list[float] = []
        self.misses = 0

    def observe(self, u: float | None) -> bool:
        """Feed one frame's progress; returns True when the episode ended."""
        if u is None:
            self.misses += 1
            return self.misses >= self.END_AFTER_MISSES
        self.misses = 0
        self.us.append(u)
        return False

    def direction(self) -> int:
        if len(self.us) < 2:
            return 1
        slope = np.polyfit(np.arange(len(self.us)), np.asarray(self.us), 1)[0]
        return -1 if slope < 0 else 1

    def delta(self, mode: str = "single") -> int:
        if len(self.us) < 2:
            return 1
        sign = self.direction()
        if mode == "single":
            return sign
        us = np.asarray(self.us)
        span = abs(float(np.percentile(us, 95)) - float(np.percentile(us, 5)))
        if mode == "continuous":
            return sign * max(1, round(span * 4.0))
        # "crossings": sub-state bins spanned by the trajectory envelope
        mag = _u_bin(float(us.max())) - _u_bin(float(us.min()))
        return sign * max(1, mag)


def run_session(
    predictor,
    frames: list[HandFrame],
    cfg: FsmConfig | None = None,
    initial_text: str = "",
    granularity: Granularity = Granularity.CHARACTER,
    ctx: EditorContext | None = None,
) -> SessionResult:
    """Replay a frame timeline through the full online pipeline.

    Right-hand frames feed the pinch-hold detector and the FSM; left-hand
    frames feed the mode-switch machine. Non-swipe events bind immediately;
    swipe events open an episode whose command is emitted once the thumb
    leaves the index rail.
    """
    from .stream import inference_thread_cap

    runtime = StreamRuntime(predictor, cfg)
    ctx = ctx or EditorContext()
    mode_state = ModeSwitchState()
    doc = Document.create(initial_text, granularity)
    result = SessionResult()
    recent_right: list[HandFrame] = []
    armed_at_release = False
    episode: _SwipeEpisode | None = None
    now = frames[0].timestamp if frames else 0.0

    def flush_episode() -> None:
        nonlocal doc, episode
        if episode is None:
            return
        ctx.pending_swipe_delta = episode.delta(ctx.swipe_unit_mode)
        command = bind_event(episode.event, ctx)
        ctx.pending_swipe_delta = None
        ctx.selection_armed = False
        episode = None
        doc = _apply(doc, command, result, now)

    with inference_thread_cap():
        for frame in frames:
            now = frame.timestamp
            if frame.handedness is Handedness.LEFT:
                mode_state, command = mode_switch_step(mode_state, frame)
                if command is not None:
                    doc = _apply(doc, command, result, now)
                continue

            result.right_frames += 1
            recent_right.append(frame)
            if len(recent_right) > int(FRAME_RATE * 2.5):
                recent_right.pop(0)
            pinching_now = detect_pinch_hold(recent_right)
            if pinching_now and not armed_at_release:
                ctx.selection_armed = True
            armed_at_release = pinching_now

            event = runtime.push_frame(frame)
            if episode is not None and episode.observe(runtime.last_swipe_u):
                flush_episode()
            if event is not None:
                result.events.append(event)
                if event.gesture is GestureClass.SWIPE:
                    flush_episode()
                    episode = _SwipeEpisode(event)
                    if runtime.last_swipe_u is not None:
                        episode.observe(runtime.last_swipe_u)
                else:
                    flush_episode()
                    doc = _apply(doc, bind_event(event, ctx), result, now)

    flush_episode()
    result.final_document = doc
    result.latencies_ms = runtime.latencies_ms
    return result


def _apply(doc: Document, command: EditCommand, result: SessionResult, timestamp: float) -> Document:
    from .editor import EditError

    result.commands.append(command)
    result.command_times.append(timestamp)
    try:
        return apply_command(doc, command)
    except EditError as exc:
        result.command_errors.append(f"{command.kind.value}: {exc}")
        return doc


def default_scenario(seed: int = 7) -> Scenario:
    """The eight-command reference script: one mode switch plus eight fired
    gestures (two swipes for navigation and selection, then the six static
    commands), composed so every command is legal when it arrives.

    Swipes map to one unit per fired event (the default unit mode), so the
    expected deltas do not depend on any particular model's sub-state
    calibration.
    """
    return Scenario(
        initial_text="The quick brown fox jumps over the lazy dog. Pack my box.\n\nSecond paragraph for keeps.",
        granularity=Granularity.CHARACTER,
        seed=seed,
        steps=(
            ScenarioStep(kind="mode_switch", mode=Granularity.WORD),
            ScenarioStep(kind="swipe", u_from=0.05, u_to=0.6, move_time=0.3, hold=0.1),
            ScenarioStep(kind="pinch_hold", duration=2.2),
            ScenarioStep(kind="swipe", u_from=0.05, u_to=0.6, move_time=0.3, hold=0.1),
            ScenarioStep(kind="gesture", gesture=GestureClass.RING),
            ScenarioStep(kind="gesture", gesture=GestureClass.SCISSOR),
            ScenarioStep(kind="gesture", gesture=GestureClass.PINKY),
            ScenarioStep(kind="gesture", gesture=GestureClass.VERTICAL),
            ScenarioStep(kind="gesture", gesture=GestureClass.FIST),
            ScenarioStep(kind="gesture", gesture=GestureClass.OPEN),
        ),
    )
