"""Shared fixtures: small synthetic datasets and a tiny trained model."""

from __future__ import annotations

import warnings

import numpy as np
import pytest

from microgext import calibration, network, synth, training


@pytest.fixture(scope="session")
def small_dataset():
    """3 subjects x 6 reps: big enough to train on, small enough to be fast."""
    return synth.make_dataset(n_subjects=3, reps_per_gesture=6, null_reps=6, seed=11)


@pytest.fixture(scope="session")
def subject():
    return synth.subjects_for(0, 1)[0]


@pytest.fixture(scope="session")
def tiny_trained(small_dataset):
    """A genuinely trained (if small) model for tests that need one."""
    hp = network.HyperParams(hidden=32, max_epochs=25, learning_rate=2e-3, master_seed=3)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        params, log = training.train(small_dataset, fold_subject=0, hp=hp)
        _, val, _ = training.split_fold(small_dataset, 0)
        val_fc = [training.featurize_clip(c) for c in val]
        x = np.stack([training.center_window(f) for f in val_fc])
        y = np.array([f.class_index for f in val_fc])
        params = calibration.calibrate(params, x, y)
    return params, log
