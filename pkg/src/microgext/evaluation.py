"""Offline evaluation: class/state confusion matrices and calibration gaps.

Class predictions are window-level (one centered window per clip); state
predictions are frame-level over the same windows. ECE is reported twice,
with tau = 1 and with the checkpoint's fitted tau, over the same windows.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import calibration, network, training
from .network import ModelParams
from .synth import CLASS_NAMES, LabeledClip


@dataclass(frozen=True)
class EvalReport:
    class_confusion: np.ndarray  # (8, 8) counts, rows = true class
    state_confusion: np.ndarray  # (5, 5) counts, rows = true state
    per_class_accuracy: np.ndarray  # (8,)
    macro_accuracy: float
    ece_before: float
    ece_after: float

    def __post_init__(self):
        for name in ("class_confusion", "state_confusion", "per_class_accuracy"):
            a = np.asarray(getattr(self, name))
            a = a.copy()
            a.flags.writeable = False
            object.__setattr__(self, name, a)


def _confusion(true: np.ndarray, pred: np.ndarray, n: int) -> np.ndarray:
    out = np.zeros((n, n), dtype=np.int64)
    np.add.at(out, (true, pred), 1)
    return out


def evaluate(params: ModelParams, clips: list[LabeledClip], batch_size: int = 64) -> EvalReport:
    """Evaluate a trained model on held-out clips.

    Class predictions use one centered window per clip. State predictions
    use windows strided across each whole clip, so every sub-state phase of
    a swipe contributes support (a centered window only sees the phase the
    clip happens to be in at its midpoint).
    """
    fcs = [training.featurize_clip(c) for c in clips]
    x = np.stack([training.center_window(fc) for fc in fcs])
    y_class = np.array([fc.class_index for fc in fcs], dtype=np.int64)

    logits = []
    for i in range(0, len(x), batch_size):
        out = network.forward_batch(params, x[i : i + batch_size])
        logits.append(out["class_logits"])
    logits = np.concatenate(logits)

    t_len = params.hp.t_window
    xs_state, ys_state = [], []
    for fc in fcs:
        for start in range(0, len(fc.features) - t_len + 1, t_len // 2):
            xs_state.append(fc.features[start : start + t_len])
            ys_state.append(fc.substates[start : start + t_len])
    xs_state = np.stack(xs_state)
    y_state = np.stack(ys_state).astype(np.int64)
    state_preds = []
    for i in range(0, len(xs_state), batch_size):
        out = network.forward_batch(params, xs_state[i : i + batch_size])
        state_preds.append(out["state_logits"].argmax(axis=-1))
    state_preds = np.concatenate(state_preds)

    class_preds = logits.argmax(axis=-1)
    n_classes = params.hp.n_classes
    class_confusion = _confusion(y_class, class_preds, n_classes)
    state_confusion = _confusion(y_state.reshape(-1), state_preds.reshape(-1), params.hp.n_states)

    support = class_confusion.sum(axis=1)
    with np.errstate(invalid="ignore"):
        per_class = np.where(support > 0, np.diag(class_confusion) / np.maximum(support, 1), np.nan)
    macro = float(np.nanmean(per_class))

    ece_before = calibration.ece_for_logits(logits, y_class, tau=1.0)
    ece_after = calibration.ece_for_logits(logits, y_class, tau=params.tau)
    return EvalReport(class_confusion, state_confusion, per_class, macro, ece_before, ece_after)


def state_accuracies(report: EvalReport) -> np.ndarray:
    """Per-state frame accuracy from the state confusion matrix."""
    support = report.state_confusion.sum(axis=1)
    return np.where(support > 0, np.diag(report.state_confusion) / np.maximum(support, 1), np.nan)


def off_tridiagonal_mass(report: EvalReport) -> float:
    """Fraction of non-adjacent sub-state errors among true states 0-3,
    counting only predictions in 0-3 (state 4 excluded from both axes)."""
    sub = report.state_confusion[:4, :4].astype(np.float64)
    total = sub.sum()
    if total == 0:
        return 0.0
    i, j = np.indices(sub.shape)
    return float(sub[np.abs(i - j) >= 2].sum() / total)


def format_confusion(matrix: np.ndarray, labels) -> str:
    """Human-readable confusion table with row-normalized percentages."""
    width = max(len(str(l)) for l in labels) + 2
    header = " " * width + "".join(f"{l:>{width}}" for l in labels)
    lines = [header]
    for i, row in enumerate(np.asarray(matrix)):
        total = row.sum()
        cells = "".join(
            f"{(100.0 * v / total if total else 0.0):>{width}.1f}" for v in row
        )
        lines.append(f"{labels[i]:>{width}}" + cells)
    return "\n".join(lines)


def render_report(report: EvalReport) -> str:
    state_labels = ["0", "1", "2", "3", "4"]
    acc_lines = "\n".join(
        f"  {name:>10s}: {acc:.4f}" for name, acc in zip(CLASS_NAMES, report.per_class_accuracy)
    )
    return (
        "Class confusion (row-normalized %):\n"
        + format_confusion(report.class_confusion, list(CLASS_NAMES))
        + "\n\nState confusion (row-normalized %):\n"
        + format_confusion(report.state_confusion, state_labels)
        + "\n\nPer-class accuracy:\n"
        + acc_lines
        + f"\n\nMacro accuracy: {report.macro_accuracy:.4f}"
        + f"\nECE before calibration: {report.ece_before:.6f}"
        + f"\nECE after calibration:  {report.ece_after:.6f}\n"
    )
