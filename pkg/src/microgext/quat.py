"""Unit quaternion helpers used by the skeleton and synthesis layers.

Quaternions are stored as (w, x, y, z) numpy arrays. All functions accept
stacked arrays whose last axis has length 4 and broadcast over leading axes,
so per-frame/per-joint batches go through single vectorized calls.
"""

from __future__ import annotations

import numpy as np

IDENTITY = np.array([1.0, 0.0, 0.0, 0.0])


def normalize(q: np.ndarray) -> np.ndarray:
    """Scale to unit norm. Raises on zero or non-finite input."""
    q = np.asarray(q, dtype=np.float64)
    n = np.linalg.norm(q, axis=-1, keepdims=True)
    if not np.all(np.isfinite(q)) or np.any(n < 1e-12):
        raise ValueError("cannot normalize a zero or non-finite quaternion")
    return q / n


def multiply(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Hamilton product a * b, broadcasting over leading axes."""
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    aw, ax, ay, az = a[..., 0], a[..., 1], a[..., 2], a[..., 3]
    bw, bx, by, bz = b[..., 0], b[..., 1], b[..., 2], b[..., 3]
    return np.stack(
        [
            aw * bw - ax * bx - ay * by - az * bz,
            aw * bx + ax * bw + ay * bz - az * by,
            aw * by - ax * bz + ay * bw + az * bx,
            aw * bz + ax * by - ay * bx + az * bw,
        ],
        axis=-1,
    )


def conjugate(q: np.ndarray) -> np.ndarray:
    q = np.asarray(q, dtype=np.float64)
    return q * np.array([1.0, -1.0, -1.0, -1.0])


def rotate(q: np.ndarray, v: np.ndarray) -> np.ndarray:
    """Rotate vector(s) v by unit quaternion(s) q.

    Uses the expanded sandwich product q v q*, which avoids building
    intermediate quaternions for the vectors.
    """
    q = np.asarray(q, dtype=np.float64)
    v = np.asarray(v, dtype=np.float64)
    w = q[..., 0:1]
    u = q[..., 1:4]
    uv = np.cross(u, v)
    return v + 2.0 * (w * uv + np.cross(u, uv))


def from_axis_angle(axis: np.ndarray, angle: float) -> np.ndarray:
    axis = np.asarray(axis, dtype=np.float64)
    axis = axis / np.linalg.norm(axis)
    half = 0.5 * angle
    return np.concatenate([[np.cos(half)], np.sin(half) * axis])


def slerp(q0: np.ndarray, q1: np.ndarray, t: float) -> np.ndarray:
    """Spherical linear interpolation between two unit quaternions.

    Takes the short arc (flips sign when the dot product is negative) and
    falls back to normalized lerp for nearly parallel inputs.
    """
    q0 = np.asarray(q0, dtype=np.float64)
    q1 = np.asarray(q1, dtype=np.float64)
    dot = float(np.dot(q0, q1))
    if dot < 0.0:
        q1 = -q1
        dot = -dot
    if dot > 1.0 - 1e-10:
        out = q0 + t * (q1 - q0)
        return out / np.linalg.norm(out)
    theta = np.arccos(np.clip(dot, -1.0, 1.0))
    s = np.sin(theta)
    return (np.sin((1.0 - t) * theta) * q0 + np.sin(t * theta) * q1) / s


def sign_normalize(q: np.ndarray) -> np.ndarray:
    """Canonicalize the sign ambiguity: q and -q encode the same rotation.

    Flips so w >= 0; when w == 0 exactly, flips so the first nonzero of
    (x, y, z) is positive.
    """
    q = np.asarray(q, dtype=np.float64)
    w = q[..., 0]
    flip = w < 0.0
    if q.ndim > 0 and q.shape[-1] == 4:
        zero_w = w == 0.0
        if np.any(zero_w):
            # tie-break on the first nonzero vector component
            x, y, z = q[..., 1], q[..., 2], q[..., 3]
            tie = np.where(x != 0.0, x, np.where(y != 0.0, y, z))
            flip = flip | (zero_w & (tie < 0.0))
    return np.where(flip[..., None], -q, q)
