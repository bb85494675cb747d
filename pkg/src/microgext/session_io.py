"""Persistence: dataset files, checkpoints, session recordings, reports.

All containers are single files with explicit versioned headers. Binary
formats (.mgd datasets, .mgc checkpoints) store float32 little-endian
tensors after a JSON header; text formats (.mgs session recordings, .mgr
reports) are line-delimited with shortest-round-trip float32 rendering.
Every writer is deterministic byte for byte given equal inputs; checkpoints
carry a SHA-256 content hash that load verifies. The exact layouts are
documented in docs/formats.md.
"""

from __future__ import annotations

import hashlib
import json
import struct
from dataclasses import asdict

import numpy as np

from .evaluation import EvalReport, render_report
from .fsm import GestureEvent
from .network import HyperParams, ModelParams, param_shapes
from .skeleton import JOINT_NAMES, NUM_JOINTS, HandFrame, Handedness, JointPose
from .synth import CLASS_NAMES, FRAME_RATE, Dataset, GestureClass, LabeledClip

MGD_MAGIC = b"MGD1"
MGC_MAGIC = b"MGC1"
MGS_VERSION = 1
MGR_VERSION = 1
FORMAT_VERSION = 1


class VersionMismatch(ValueError):
    pass


class CorruptRecord(ValueError):
    pass


class JointOrderMismatch(ValueError):
    pass


class HashMismatch(ValueError):
    pass


def _write_json_block(fh, obj) -> None:
    blob = json.dumps(obj, sort_keys=True, separators=(",", ":")).encode("utf-8")
    fh.write(struct.pack("<I", len(blob)))
    fh.write(blob)


def _read_json_block(fh):
    raw = fh.read(4)
    if len(raw) != 4:
        raise CorruptRecord("truncated header length")
    (n,) = struct.unpack("<I", raw)
    blob = fh.read(n)
    if len(blob) != n:
        raise CorruptRecord("truncated header block")
    return json.loads(blob.decode("utf-8"))


# ---------------------------------------------------------------------------
# Dataset files (.mgd)
# ---------------------------------------------------------------------------

def write_dataset(dataset: Dataset, path) -> None:
    header = {
        "format_version": FORMAT_VERSION,
        "frame_rate": FRAME_RATE,
        "joint_order": list(JOINT_NAMES),
        "class_names": list(CLASS_NAMES),
        "generator_seed": dataset.master_seed,
        "n_clips": len(dataset.clips),
    }
    with open(path, "wb") as fh:
        fh.write(MGD_MAGIC)
        _write_json_block(fh, header)
        for clip in dataset.clips:
            n = len(clip)
            fh.write(
                struct.pack(
                    "<iBBIf",
                    clip.subject_id,
                    CLASS_NAMES.index(clip.gesture.value),
                    0 if clip.handedness is Handedness.RIGHT else 1,
                    n,
                    clip.duration,
                )
            )
            fh.write(clip.timestamps.astype("<f4").tobytes())
            fh.write(clip.joint_positions.astype("<f4").tobytes())
            fh.write(clip.joint_orientations.astype("<f4").tobytes())
            fh.write(clip.substates.astype(np.uint8).tobytes())


def read_dataset(path) -> Dataset:
    with open(path, "rb") as fh:
        magic = fh.read(4)
        if magic != MGD_MAGIC:
            raise VersionMismatch(f"not a dataset file (magic {magic!r})")
        header = _read_json_block(fh)
        if header.get("format_version") != FORMAT_VERSION:
            raise VersionMismatch(f"unsupported dataset version {header.get('format_version')}")
        if header.get("joint_order") != list(JOINT_NAMES):
            raise JointOrderMismatch("dataset joint ordering does not match this build")
        clips = []
        for index in range(header["n_clips"]):
            try:
                head = fh.read(struct.calcsize("<iBBIf"))
                subject_id, gesture_idx, hand, n, duration = struct.unpack("<iBBIf", head)
                ts = np.frombuffer(fh.read(4 * n), dtype="<f4").astype(np.float64)
                pos = np.frombuffer(fh.read(4 * n * NUM_JOINTS * 3), dtype="<f4")
                ori = np.frombuffer(fh.read(4 * n * NUM_JOINTS * 4), dtype="<f4")
                sub = np.frombuffer(fh.read(n), dtype=np.uint8)
                if len(ts) != n or pos.size != n * NUM_JOINTS * 3 or ori.size != n * NUM_JOINTS * 4 or len(sub) != n:
                    raise CorruptRecord(f"clip record {index} is truncated")
                clips.append(
                    LabeledClip(
                        gesture=GestureClass(CLASS_NAMES[gesture_idx]),
                        subject_id=subject_id,
                        timestamps=ts,
                        joint_positions=pos.astype(np.float64).reshape(n, NUM_JOINTS, 3),
                        joint_orientations=ori.astype(np.float64).reshape(n, NUM_JOINTS, 4),
                        substates=sub.copy(),
                        duration=float(np.float32(duration)),
                        handedness=Handedness.RIGHT if hand == 0 else Handedness.LEFT,
                    )
                )
            except struct.error as exc:
                raise CorruptRecord(f"clip record {index} is truncated") from exc
    return Dataset(tuple(clips), master_seed=header["generator_seed"])


# ---------------------------------------------------------------------------
# Checkpoints (.mgc)
# ---------------------------------------------------------------------------

class ShapeMismatch(ValueError):
    pass


def _checkpoint_payload(params: ModelParams) -> bytes:
    header = {
        "format_version": FORMAT_VERSION,
        "hyperparams": asdict(params.hp),
        "joint_order": list(JOINT_NAMES),
        "class_names": list(CLASS_NAMES),
        "tau": float(params.tau),
        "tensor_names": sorted(params.tensors),
    }
    out = bytearray()
    blob = json.dumps(header, sort_keys=True, separators=(",", ":")).encode("utf-8")
    out += struct.pack("<I", len(blob))
    out += blob
    for name in sorted(params.tensors):
        t = params.tensors[name]
        name_b = name.encode("utf-8")
        out += struct.pack("<H", len(name_b))
        out += name_b
        out += struct.pack("<B", t.ndim)
        out += struct.pack(f"<{t.ndim}I", *t.shape)
        out += t.astype("<f4").tobytes()
    return bytes(out)


def save_checkpoint(params: ModelParams, path) -> None:
    payload = _checkpoint_payload(params)
    digest = hashlib.sha256(payload).digest()
    with open(path, "wb") as fh:
        fh.write(MGC_MAGIC)
        fh.write(digest)
        fh.write(payload)


def load_checkpoint(path) -> ModelParams:
    with open(path, "rb") as fh:
        magic = fh.read(4)
        if magic != MGC_MAGIC:
            raise VersionMismatch(f"not a checkpoint file (magic {magic!r})")
        digest = fh.read(32)
        payload = fh.read()
    if hashlib.sha256(payload).digest() != digest:
        raise HashMismatch("checkpoint content hash does not match")

    offset = 0
    (hlen,) = struct.unpack_from("<I", payload, offset)
    offset += 4
    header = json.loads(payload[offset : offset + hlen].decode("utf-8"))
    offset += hlen
    if header.get("format_version") != FORMAT_VERSION:
        raise VersionMismatch(f"unsupported checkpoint version {header.get('format_version')}")
    hp = HyperParams(**header["hyperparams"])
    shapes = param_shapes(hp)

    tensors = {}
    while offset < len(payload):
        (nlen,) = struct.unpack_from("<H", payload, offset)
        offset += 2
        name = payload[offset : offset + nlen].decode("utf-8")
        offset += nlen
        (ndim,) = struct.unpack_from("<B", payload, offset)
        offset += 1
        shape = struct.unpack_from(f"<{ndim}I", payload, offset)
        offset += 4 * ndim
        count = int(np.prod(shape)) if ndim else 1
        data = np.frombuffer(payload, dtype="<f4", count=count, offset=offset)
        offset += 4 * count
        if name not in shapes or tuple(shape) != shapes[name]:
            raise ShapeMismatch(f"tensor {name} has shape {tuple(shape)}, expected {shapes.get(name)}")
        tensors[name] = data.astype(np.float64).reshape(shape)
    if set(tensors) != set(shapes):
        raise ShapeMismatch("checkpoint is missing tensors")
    return ModelParams(hp, tensors, tau=float(np.float32(header["tau"])))


# ---------------------------------------------------------------------------
# Session recordings (.mgs)
# ---------------------------------------------------------------------------

def _f32s(values) -> str:
    return " ".join(repr(float(np.float32(v))) for v in np.asarray(values).reshape(-1))


def write_session(path, frames: list[HandFrame], events: list[GestureEvent]) -> None:
    """Line-delimited recording: F lines are frames (timestamp, hand,
    11 x 7 floats), E lines are fired events."""
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(f"MGS{MGS_VERSION} joints={','.join(JOINT_NAMES)}\n")
        for frame in frames:
            hand = "R" if frame.handedness is Handedness.RIGHT else "L"
            pose = np.concatenate([np.concatenate([j.position, j.orientation]) for j in frame.joints])
            fh.write(f"F {repr(float(np.float32(frame.timestamp)))} {hand} {_f32s(pose)}\n")
        for ev in events:
            trace = ",".join(str(s) for s in ev.swipe_substate_trace) if ev.swipe_substate_trace else "-"
            fh.write(
                f"E {repr(float(np.float32(ev.fired_at)))} {ev.gesture.value} "
                f"{repr(float(np.float32(ev.mean_confidence)))} {trace}\n"
            )


def read_session(path) -> tuple[list[HandFrame], list[GestureEvent]]:
    frames: list[HandFrame] = []
    events: list[GestureEvent] = []
    with open(path, "r", encoding="utf-8") as fh:
        header = fh.readline().strip()
        if not header.startswith(f"MGS{MGS_VERSION} "):
            raise VersionMismatch(f"unsupported session header: {header!r}")
        joints_decl = header.split("joints=", 1)[-1]
        if joints_decl != ",".join(JOINT_NAMES):
            raise JointOrderMismatch("session joint ordering does not match this build")
        for lineno, line in enumerate(fh, start=2):
            parts = line.split()
            if not parts:
                continue
            try:
                if parts[0] == "F":
                    ts = float(parts[1])
                    hand = Handedness.RIGHT if parts[2] == "R" else Handedness.LEFT
                    vals = np.array([float(v) for v in parts[3:]])
                    if vals.size != NUM_JOINTS * 7:
                        raise CorruptRecord(f"frame record at line {lineno} has {vals.size} floats")
                    pose = vals.reshape(NUM_JOINTS, 7)
                    joints = tuple(JointPose(pose[j, :3], pose[j, 3:]) for j in range(NUM_JOINTS))
                    frames.append(HandFrame(ts, hand, joints))
                elif parts[0] == "E":
                    trace = None if parts[4] == "-" else tuple(int(s) for s in parts[4].split(","))
                    events.append(
                        GestureEvent(
                            gesture=GestureClass(parts[2]),
                            fired_at=float(parts[1]),
                            mean_confidence=float(parts[3]),
                            swipe_substate_trace=trace,
                        )
                    )
                else:
                    raise CorruptRecord(f"unknown record type {parts[0]!r} at line {lineno}")
            except (ValueError, IndexError) as exc:
                raise CorruptRecord(f"bad record at line {lineno}: {exc}") from exc
    return frames, events


# ---------------------------------------------------------------------------
# Command logs
# ---------------------------------------------------------------------------

def write_command_log(path, entries) -> None:
    """Line-delimited (timestamp, command, arguments) records.

    Deterministic byte-for-byte, so golden-file comparisons are exact;
    read_command_log replays to the identical command sequence.
    """
    from .editor import CommandKind, Granularity  # local: avoids cycle at import

    with open(path, "w", encoding="utf-8") as fh:
        fh.write(f"MGL{MGS_VERSION}\n")
        for timestamp, command in entries:
            args = []
            if command.kind in (CommandKind.MOVE_CARET, CommandKind.SELECT_RANGE):
                args.append(str(command.delta))
            if command.kind is CommandKind.SET_GRANULARITY:
                args.append(command.mode.value)
            fh.write(f"{repr(float(np.float32(timestamp)))} {command.kind.value}"
                     + (" " + " ".join(args) if args else "") + "\n")


def read_command_log(path):
    from .editor import CommandKind, EditCommand, Granularity

    entries = []
    with open(path, "r", encoding="utf-8") as fh:
        header = fh.readline().strip()
        if header != f"MGL{MGS_VERSION}":
            raise VersionMismatch(f"unsupported command log header: {header!r}")
        for lineno, line in enumerate(fh, start=2):
            parts = line.split()
            if not parts:
                continue
            try:
                timestamp = float(parts[0])
                kind = CommandKind(parts[1])
                delta = 0
                mode = None
                if kind in (CommandKind.MOVE_CARET, CommandKind.SELECT_RANGE):
                    delta = int(parts[2])
                elif kind is CommandKind.SET_GRANULARITY:
                    mode = Granularity(parts[2])
                entries.append((timestamp, EditCommand(kind, delta=delta, mode=mode)))
            except (ValueError, IndexError) as exc:
                raise CorruptRecord(f"bad command record at line {lineno}: {exc}") from exc
    return entries


# ---------------------------------------------------------------------------
# Reports (.mgr)
# ---------------------------------------------------------------------------

def report_payload(report: EvalReport, meta: dict) -> dict:
    return {
        "format_version": MGR_VERSION,
        "meta": dict(sorted(meta.items())),
        "class_names": list(CLASS_NAMES),
        "class_confusion": report.class_confusion.tolist(),
        "state_confusion": report.state_confusion.tolist(),
        "per_class_accuracy": [None if np.isnan(v) else float(v) for v in report.per_class_accuracy],
        "macro_accuracy": report.macro_accuracy,
        "ece_before": report.ece_before,
        "ece_after": report.ece_after,
    }


def emit_report(report: EvalReport, path, meta: dict | None = None, human: bool = False) -> None:
    """Write a report: machine-readable canonical JSON, or a table."""
    if human:
        with open(path, "w", encoding="utf-8") as fh:
            fh.write(render_report(report))
        return
    payload = report_payload(report, meta or {})
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(payload, fh, sort_keys=True, indent=1)
        fh.write("\n")


def read_report(path) -> dict:
    with open(path, "r", encoding="utf-8") as fh:
        payload = json.load(fh)
    if payload.get("format_version") != MGR_VERSION:
        raise VersionMismatch(f"unsupported report version {payload.get('format_version')}")
    return payload
