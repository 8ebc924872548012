"""Shared fixtures.

The expensive objects -- the 3-channel synthetic task, its trained CNN, the
calibrated DTW bound, and one batch of 50 targeted attacks -- are built once
per session and shared.  Several acceptance checks read different aspects of
the *same* attack batch (fooling rate, blind-spot count), so sharing is not
just a speed-up; it keeps those numbers mutually consistent.
"""

import time
from typing import NamedTuple

import pytest

from dtwadv.attack import AttackConfig, attack_dataset, calibrate_delta
from dtwadv.nn import Classifier, TrainConfig, cnn_spec, train
from dtwadv.signal import split, synth_two_class


class TimedAttackBatch(NamedTuple):
    results: list
    seconds: float


@pytest.fixture(scope="session")
def canon_ds():
    """250 examples, 3 channels, T=32, split 150/50/50 (stratified)."""
    return split(synth_two_class(250, 3, 32, seed=1), (0.6, 0.2, 0.2), seed=501)


@pytest.fixture(scope="session")
def canon_model(canon_ds):
    model, history = train(
        Classifier(cnn_spec(3, 32, 2), seed=0), canon_ds, TrainConfig(epochs=50, seed=0)
    )
    assert history[-1].accuracy >= 0.9, "canonical model failed to train"
    return model


@pytest.fixture(scope="session")
def canon_delta(canon_ds):
    return calibrate_delta(canon_ds)


@pytest.fixture(scope="session")
def canon_test(canon_ds):
    return canon_ds.subset("test")


@pytest.fixture(scope="session")
def wb_results(canon_model, canon_test, canon_delta):
    """Targeted attack on every test example at the published coefficients.

    max_iters=1000 instead of 5000 (allowed for desk runs); example k draws
    its path from seed 1000 + k.  With two classes the target is the other
    class.
    """
    cfg = AttackConfig(delta=canon_delta, max_iters=1000, snapshot_every=0)
    targets = 1 - canon_test.y
    t0 = time.perf_counter()
    results = attack_dataset(canon_model, canon_test.X, targets, cfg, base_seed=0)
    return TimedAttackBatch(results, time.perf_counter() - t0)


@pytest.fixture(scope="session")
def ds1_small():
    """Univariate dataset pinned by the generator contract (1-NN, MLP)."""
    return synth_two_class(200, 1, 32, seed=1)


@pytest.fixture(scope="session")
def tiny_model():
    """A small, quickly trained univariate classifier for attack tests."""
    ds = split(synth_two_class(60, 1, 16, seed=3), (0.6, 0.2, 0.2), seed=7)
    from dtwadv.nn import mlp_spec

    model, _ = train(
        Classifier(mlp_spec(1, 16, 2, hidden=24), seed=2),
        ds,
        TrainConfig(epochs=20, seed=2),
    )
    return model, ds
