"""Training determinism, convergence, and fold splitting."""

import warnings

import numpy as np
import pytest

from microgext import network, synth, training
from microgext.network import HyperParams
from microgext.training import EmptyFold, MissingClass, split_fold


def _train_quiet(dataset, fold, hp):
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        return training.train(dataset, fold, hp)


class TestSplitFold:
    def test_fold_subject_held_out(self, small_dataset):
        train_clips, val_clips, test_clips = split_fold(small_dataset, 1)
        assert all(c.subject_id == 1 for c in test_clips)
        assert all(c.subject_id != 1 for c in train_clips + val_clips)
        assert len(test_clips) == 7 * 6 + 6

    def test_validation_nonempty_and_disjoint(self, small_dataset):
        train_clips, val_clips, _ = split_fold(small_dataset, 0)
        assert val_clips
        ids = {id(c) for c in train_clips}
        assert not any(id(c) in ids for c in val_clips)

    def test_missing_subject_raises(self, small_dataset):
        with pytest.raises(EmptyFold):
            split_fold(small_dataset, 99)

    def test_missing_class_raises(self):
        ds = synth.make_dataset(2, 2, 2, seed=0)
        no_fist = synth.Dataset(
            tuple(c for c in ds.clips if c.gesture is not synth.GestureClass.FIST), 0
        )
        with pytest.raises(MissingClass):
            split_fold(no_fist, 0)


class TestTraining:
    def test_loss_decreases(self, tiny_trained):
        _, log = tiny_trained
        assert log[-1]["train_loss"] < log[0]["train_loss"]
        assert log[-1]["val_loss"] < log[0]["val_loss"]

    def test_deterministic_checkpoints(self):
        ds = synth.make_dataset(2, 2, 2, seed=4)
        hp = HyperParams(hidden=16, max_epochs=3, master_seed=8)
        p1, log1 = _train_quiet(ds, 0, hp)
        p2, log2 = _train_quiet(ds, 0, hp)
        for name in network.PARAM_NAMES:
            np.testing.assert_array_equal(p1.tensors[name], p2.tensors[name])
        assert log1 == log2

    def test_different_seed_changes_weights(self):
        ds = synth.make_dataset(2, 2, 2, seed=4)
        p1, _ = _train_quiet(ds, 0, HyperParams(hidden=16, max_epochs=2, master_seed=8))
        p2, _ = _train_quiet(ds, 0, HyperParams(hidden=16, max_epochs=2, master_seed=9))
        assert any(
            not np.array_equal(p1.tensors[n], p2.tensors[n]) for n in network.PARAM_NAMES
        )

    def test_heldout_accuracy_beats_random(self, tiny_trained, small_dataset):
        params, _ = tiny_trained
        _, _, test_clips = split_fold(small_dataset, 0)
        fcs = [training.featurize_clip(c) for c in test_clips]
        x = np.stack([training.center_window(f) for f in fcs])
        y = np.array([f.class_index for f in fcs])
        out = network.forward_batch(params, x)
        acc = (out["class_logits"].argmax(-1) == y).mean()
        assert acc > 1.0 / 8.0

    def test_params_on_float32_grid(self, tiny_trained):
        params, _ = tiny_trained
        for name in network.PARAM_NAMES:
            t = params.tensors[name]
            np.testing.assert_array_equal(t, t.astype(np.float32).astype(np.float64))

    def test_plateau_reduces_learning_rate(self):
        # a high improvement threshold makes every epoch count as a stall,
        # so the scheduler must cut the rate after `patience` epochs
        ds = synth.make_dataset(2, 2, 2, seed=4)
        hp = HyperParams(
            hidden=8, max_epochs=8, plateau_patience=2, plateau_threshold=1e-2,
            learning_rate=1e-4, master_seed=0,
        )
        _, log = _train_quiet(ds, 0, hp)
        assert log[-1]["lr"] < hp.learning_rate
        assert log[-1]["lr"] >= hp.min_learning_rate
