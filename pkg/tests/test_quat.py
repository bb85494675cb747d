"""Quaternion helper checks against rotation-matrix oracles."""

import numpy as np
import pytest

from microgext import quat


def rotation_matrix(q):
    """Independent oracle: quaternion to rotation matrix, textbook formula."""
    w, x, y, z = q
    return np.array(
        [
            [1 - 2 * (y * y + z * z), 2 * (x * y - w * z), 2 * (x * z + w * y)],
            [2 * (x * y + w * z), 1 - 2 * (x * x + z * z), 2 * (y * z - w * x)],
            [2 * (x * z - w * y), 2 * (y * z + w * x), 1 - 2 * (x * x + y * y)],
        ]
    )


def random_unit(rng):
    q = rng.normal(size=4)
    return q / np.linalg.norm(q)


def test_rotate_matches_matrix():
    rng = np.random.default_rng(0)
    for _ in range(50):
        q = random_unit(rng)
        v = rng.normal(size=3)
        np.testing.assert_allclose(quat.rotate(q, v), rotation_matrix(q) @ v, atol=1e-12)


def test_multiply_composes_rotations():
    rng = np.random.default_rng(1)
    for _ in range(50):
        a, b = random_unit(rng), random_unit(rng)
        v = rng.normal(size=3)
        lhs = quat.rotate(quat.multiply(a, b), v)
        rhs = quat.rotate(a, quat.rotate(b, v))
        np.testing.assert_allclose(lhs, rhs, atol=1e-12)


def test_conjugate_inverts_unit_rotation():
    rng = np.random.default_rng(2)
    q = random_unit(rng)
    v = rng.normal(size=3)
    np.testing.assert_allclose(quat.rotate(quat.conjugate(q), quat.rotate(q, v)), v, atol=1e-12)


def test_broadcasting_over_leading_axes():
    rng = np.random.default_rng(3)
    qs = np.stack([random_unit(rng) for _ in range(6)]).reshape(2, 3, 4)
    vs = rng.normal(size=(2, 3, 3))
    out = quat.rotate(qs, vs)
    assert out.shape == (2, 3, 3)
    np.testing.assert_allclose(out[1, 2], quat.rotate(qs[1, 2], vs[1, 2]), atol=1e-12)


def test_from_axis_angle_known_rotation():
    q = quat.from_axis_angle(np.array([0.0, 0.0, 1.0]), np.pi / 2)
    np.testing.assert_allclose(quat.rotate(q, np.array([1.0, 0, 0])), [0, 1, 0], atol=1e-12)


def test_slerp_endpoints_and_midpoint():
    q0 = quat.from_axis_angle(np.array([0, 1, 0]), 0.0)
    q1 = quat.from_axis_angle(np.array([0, 1, 0]), 1.0)
    np.testing.assert_allclose(quat.slerp(q0, q1, 0.0), q0, atol=1e-12)
    np.testing.assert_allclose(quat.slerp(q0, q1, 1.0), q1, atol=1e-12)
    mid = quat.slerp(q0, q1, 0.5)
    np.testing.assert_allclose(mid, quat.from_axis_angle(np.array([0, 1, 0]), 0.5), atol=1e-12)


def test_slerp_takes_short_arc():
    rng = np.random.default_rng(4)
    q0 = random_unit(rng)
    q1 = -q0  # same rotation, opposite sign
    out = quat.slerp(q0, q1, 0.7)
    np.testing.assert_allclose(np.abs(out @ q0), 1.0, atol=1e-9)


def test_sign_normalize():
    rng = np.random.default_rng(5)
    q = random_unit(rng)
    flipped = quat.sign_normalize(np.stack([q, -q]))
    np.testing.assert_allclose(flipped[0], flipped[1], atol=1e-15)
    assert flipped[0, 0] >= 0

    zero_w = np.array([0.0, -0.6, 0.8, 0.0])
    out = quat.sign_normalize(zero_w)
    assert out[1] > 0  # tie broken on the first nonzero vector component


def test_normalize_rejects_degenerate():
    with pytest.raises(ValueError):
        quat.normalize(np.zeros(4))
    with pytest.raises(ValueError):
        quat.normalize(np.array([np.inf, 0, 0, 0]))
