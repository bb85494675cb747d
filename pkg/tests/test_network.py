"""Forward-pass contracts: shapes, temperature behavior, per-sample purity."""

import numpy as np
import pytest

from microgext import network
from microgext.network import (
    HyperParams,
    ModelParams,
    NonFiniteActivation,
    ShapeMismatch,
    forward,
    forward_batch,
    init_params,
)


@pytest.fixture(scope="module")
def hp():
    return HyperParams(hidden=16)


@pytest.fixture(scope="module")
def params(hp):
    return init_params(hp, seed=1)


class TestForward:
    def test_zero_input_shapes_and_normalization(self, params, hp):
        out = forward(params, np.zeros((hp.t_window, hp.n_joints, hp.n_features)))
        assert out.class_logits.shape == (8,)
        assert out.state_logits.shape == (20, 5)
        assert out.embedding.shape == (hp.hidden,)
        assert abs(out.class_probs.sum() - 1.0) < 1e-6
        assert abs(np.linalg.norm(out.embedding) - 1.0) < 1e-9

    def test_probs_sum_to_one_random(self, params, hp):
        rng = np.random.default_rng(0)
        x = rng.normal(0, 0.2, (hp.t_window, hp.n_joints, hp.n_features))
        out = forward(params, x)
        assert abs(out.class_probs.sum() - 1.0) < 1e-6

    def test_temperature_keeps_argmax_changes_confidence(self, params, hp):
        rng = np.random.default_rng(1)
        x = rng.normal(0, 0.2, (hp.t_window, hp.n_joints, hp.n_features))
        out1 = forward(params, x)
        out2 = forward(params.with_tau(2.0), x)
        assert np.argmax(out1.class_probs) == np.argmax(out2.class_probs)
        assert not np.isclose(out1.class_probs.max(), out2.class_probs.max())
        np.testing.assert_allclose(out1.class_logits, out2.class_logits)

    def test_argmax_probs_equals_argmax_logits(self, params, hp):
        rng = np.random.default_rng(2)
        for tau in (0.1, 1.0, 5.0):
            p = params.with_tau(tau)
            x = rng.normal(0, 0.3, (hp.t_window, hp.n_joints, hp.n_features))
            out = forward(p, x)
            assert np.argmax(out.class_probs) == np.argmax(out.class_logits)

    def test_shape_mismatch(self, params):
        with pytest.raises(ShapeMismatch):
            forward(params, np.zeros((19, 11, 7)))

    def test_non_finite_input(self, params, hp):
        x = np.zeros((hp.t_window, hp.n_joints, hp.n_features))
        x[0, 0, 0] = np.nan
        with pytest.raises(NonFiniteActivation):
            forward(params, x)

    def test_batch_order_irrelevant_per_sample(self, params, hp):
        rng = np.random.default_rng(3)
        x = rng.normal(0, 0.2, (5, hp.t_window, hp.n_joints, hp.n_features))
        out = forward_batch(params, x)
        perm = np.array([4, 2, 0, 3, 1])
        out_perm = forward_batch(params, x[perm])
        np.testing.assert_allclose(out_perm["class_logits"], out["class_logits"][perm], atol=1e-12)
        np.testing.assert_allclose(out_perm["state_logits"], out["state_logits"][perm], atol=1e-12)
        np.testing.assert_allclose(out_perm["embedding"], out["embedding"][perm], atol=1e-12)


class TestParams:
    def test_tau_must_be_positive(self, hp, params):
        with pytest.raises(ValueError):
            ModelParams(hp, params.tensors, tau=0.0)

    def test_tensor_shapes_validated(self, hp, params):
        bad = dict(params.tensors)
        bad["w_class"] = np.zeros((3, 3))
        with pytest.raises(ShapeMismatch):
            ModelParams(hp, bad)

    def test_missing_tensor_rejected(self, hp, params):
        bad = dict(params.tensors)
        del bad["wq"]
        with pytest.raises(ShapeMismatch):
            ModelParams(hp, bad)

    def test_loss_weights_must_sum_to_one(self):
        with pytest.raises(ValueError):
            HyperParams(alpha=0.5, beta=0.2, gamma=0.2)

    def test_init_deterministic(self, hp):
        a = init_params(hp, seed=9)
        b = init_params(hp, seed=9)
        for name in network.PARAM_NAMES:
            np.testing.assert_array_equal(a.tensors[name], b.tensors[name])
