#!/usr/bin/env python
import mock
import numpy as np
import pytest

from labelmm import trainer
from labelmm.data import SplitSpec, benchmark_spec, split, synth_gaussians
from labelmm.errors import ConfigError, DataError
from labelmm.metrics import cohen_kappa, data_purity
from labelmm.model import (
    OptimizerKind, OptimizerState, grad, init_params, step
)
from labelmm.noise import inject, symmetric_matrix
from labelmm.refurbish import EvidenceType, RefurbishedSet
from labelmm.startup import StartupConfig
from labelmm.trainer import (
    TrainConfig, TrainMode, composite_update, select_clean, self_train, train
)

__author__ = "LabelMM developers"


def _config(**changes):
    """ a fast configuration for the small fixtures """
    values = dict(epochs=6, batch_size=16, gamma=0.2, window=3,
                  learning_rate=0.05,
                  startup=StartupConfig(warmup_epochs=2, noise_rate=0.2))
    values.update(changes)
    return TrainConfig(**values)


def _noisy_splits(dataset, gamma, seed, fractions=(0.6, 0.2, 0.2)):
    train_set, val_set, test_set = split(dataset, SplitSpec(*fractions))
    noisy, _ = inject(train_set, symmetric_matrix(dataset.num_classes,
                                                  gamma), seed)
    return noisy, val_set, test_set


def _batch(seed=0, size=8):
    rng = np.random.default_rng(seed)
    ids = np.arange(10, 10 + size)
    features = rng.normal(size=(size, 2))
    labels = rng.integers(0, 2, size=size)
    return ids, features, labels


def _same_report(a, b):
    for name in trainer.SERIES:
        np.testing.assert_array_equal(a.series[name], b.series[name])
    assert a.params.equals(b.params)


def test_select_clean_without_noise_keeps_batch():
    losses = [(7, 0.3), (2, 5.0), (4, 0.1)]
    assert select_clean(losses, 0.0) == {2, 4, 7}


def test_select_clean_size():
    losses = [(i, float(i)) for i in range(10)]
    assert select_clean(losses, 0.2) == set(range(8))


def test_select_clean_breaks_ties_by_id():
    losses = [(0, 0.5), (1, 0.1), (2, 0.9), (3, 0.1)]
    assert select_clean(losses, 0.5) == {1, 3}
    assert select_clean([(9, 0.2), (4, 0.2)], 0.5) == {4}


def test_select_clean_keeps_at_least_one():
    assert select_clean([(3, 0.4), (1, 0.2), (2, 0.3)], 0.9) == {1}


def test_select_clean_empty_batch():
    with pytest.raises(DataError):
        select_clean([], 0.1)


def test_composite_update_reduces_to_plain_step():
    ids, features, labels = _batch()
    params = init_params(2, 2, seed=1)
    expected, _ = step(params, OptimizerState(),
                       grad(params, features, labels))
    updated, _, count = composite_update(params, OptimizerState(),
                                         (ids, features, labels),
                                         set(ids.tolist()), RefurbishedSet())
    assert count == len(ids)
    assert updated.equals(expected)


def test_composite_update_restricted_to_clean_set():
    ids, features, labels = _batch(1)
    params = init_params(2, 2, seed=2)
    clean = set(ids[:5].tolist())
    expected, _ = step(params, OptimizerState(),
                       grad(params, features[:5], labels[:5]))
    updated, _, count = composite_update(params, OptimizerState(),
                                         (ids, features, labels), clean,
                                         RefurbishedSet())
    assert count == 5
    assert updated.equals(expected)


def test_refurbished_label_takes_precedence():
    ids, features, labels = _batch(2)
    params = init_params(2, 2, seed=3)
    psi = RefurbishedSet()
    # id 10 is clean and refurbished, id 17 only refurbished
    psi.assign(10, 1 - labels[0], np.array([0.5, 0.5]), 4)
    psi.assign(17, 1 - labels[7], np.array([0.5, 0.5]), 4)
    clean = {10, 11, 12}
    targets = np.array([1 - labels[0], labels[1], labels[2], 1 - labels[7]])
    rows = [0, 1, 2, 7]
    expected, _ = step(params, OptimizerState(),
                       grad(params, features[rows], targets))
    updated, _, count = composite_update(params, OptimizerState(),
                                         (ids, features, labels), clean, psi)
    assert count == 4
    assert updated.equals(expected)


def test_composite_update_with_nothing_to_learn():
    ids, features, labels = _batch(3)
    params = init_params(2, 2, seed=4)
    state = OptimizerState()
    updated, state, count = composite_update(
        params, state, (ids, features, labels), set(), RefurbishedSet())
    assert count == 0
    assert updated is params
    assert state.steps == 0


@pytest.mark.parametrize('changes', [
    {'batch_size': 1},
    {'gamma': 1.0},
    {'epsilon': 1.5},
    {'window': 0},
    {'eta': 0.0},
    {'mode': 'co-teaching'},
    {'evidence': 'fuzzy'},
])
def test_train_config_rejects(changes):
    with pytest.raises(ConfigError):
        TrainConfig(**changes)


def test_replace_follows_gamma():
    config = _config().replace(gamma=0.3)
    assert config.startup.noise_rate == 0.3
    assert config.startup.warmup_epochs == 2
    assert config.learning_rate == 0.05


def test_uniform_vote_ablation_settings():
    config = _config(mode=TrainMode.UNIFORM_VOTE)
    np.testing.assert_allclose(config.weights().weights, 1.0 / 3)
    assert config.evidence_type() == EvidenceType.HARD
    assert _config().evidence_type() == EvidenceType.SOFT


def test_warm_up_matches_default_training(separated):
    train_set, val_set, test_set = _noisy_splits(separated, 0.2, 1)
    lmm = train(_config(epochs=2, mode=TrainMode.LMM), train_set, val_set,
                test_set)
    default = train(_config(epochs=2, mode=TrainMode.DEFAULT), train_set,
                    val_set, test_set)
    assert lmm.trigger_epoch is None
    for name in ('train_loss', 'val_loss', 'val_acc', 'test_acc'):
        assert lmm.series[name] == default.series[name]
    assert lmm.params.equals(default.params)


def test_default_mode_equals_endless_warm_up(separated):
    train_set, val_set, test_set = _noisy_splits(separated, 0.2, 2)
    never = _config(mode=TrainMode.LMM,
                    startup=StartupConfig(warmup_epochs=1000, noise_rate=0.2))
    managed = train(never, train_set, val_set, test_set)
    default = train(_config(mode=TrainMode.DEFAULT), train_set, val_set,
                    test_set)
    assert managed.params.equals(default.params)
    assert len(managed.psi) == 0
    assert managed.series['lmm_active'] == [0] * 6


def test_training_is_deterministic(separated):
    train_set, val_set, test_set = _noisy_splits(separated, 0.2, 3)
    first = train(_config(seed=4), train_set, val_set, test_set)
    second = train(_config(seed=4), train_set, val_set, test_set)
    _same_report(first, second)
    assert list(first.psi) == list(second.psi)
    other = train(_config(seed=5), train_set, val_set, test_set)
    assert not other.params.equals(first.params)


def test_label_management_cleans_labels(separated):
    train_set, val_set, test_set = _noisy_splits(separated, 0.2, 4)
    injected = data_purity(train_set)
    report = train(_config(epochs=20), train_set, val_set, test_set)

    assert report.trigger_epoch is not None
    assert report.trigger_epoch > 2
    assert report.final['purity'] >= max(injected + 0.1, 0.95)
    assert report.final['purity'] == report.series['purity'][-1]
    assert report.final['kappa'] > cohen_kappa(train_set.labels,
                                               train_set.truth)
    assert len(report.series['train_loss']) == report.epochs == 20


def test_report_series_invariants(separated):
    train_set, val_set, test_set = _noisy_splits(separated, 0.2, 5)
    report = train(_config(epochs=12), train_set, val_set, test_set)
    sizes = report.series['psi_size']
    assert sizes == sorted(sizes)
    active = report.series['lmm_active']
    assert active == sorted(active)
    if report.trigger_epoch is not None:
        assert active.index(1) + 1 == report.trigger_epoch
    assert set(report.final) >= {'test_acc', 'test_auc', 'test_kappa',
                                 'purity', 'kappa', 'psi_size',
                                 'trigger_epoch'}
    assert report.audit['effective_samples'] > 0
    rows = list(report.rows())
    assert [row['epoch'] for row in rows] == list(range(1, 13))


def test_refurbished_samples_were_gated(separated):
    train_set, val_set, test_set = _noisy_splits(separated, 0.2, 6)
    report = train(_config(epochs=12), train_set, val_set, test_set)
    for sample_id in report.psi:
        entry = report.psi[sample_id]
        assert entry.epoch >= report.trigger_epoch
        assert entry.posterior.sum() == pytest.approx(1.0)
        assert entry.label == int(np.argmax(entry.posterior))


def test_no_noise_leaves_labels_alone(separated):
    train_set, val_set, test_set = _noisy_splits(separated, 0.0, 7)
    report = train(_config(gamma=0.0,
                           startup=StartupConfig(warmup_epochs=2)),
                   train_set, val_set, test_set)
    assert report.final['purity'] >= 0.99


def test_splits_must_agree(separated):
    train_set, val_set, _ = _noisy_splits(separated, 0.2, 8)
    other = synth_gaussians(benchmark_spec('synth:5'), 5, 0)
    with pytest.raises(DataError):
        train(_config(), train_set, val_set, other)


def test_adam_and_sgd_both_train(separated):
    train_set, val_set, test_set = _noisy_splits(separated, 0.0, 9)
    for kind in OptimizerKind.ALL:
        report = train(_config(optimizer=kind, learning_rate=0.05,
                               mode=TrainMode.DEFAULT, epochs=8),
                       train_set, val_set, test_set)
        assert report.final['test_acc'] > 0.95


def test_mlp_trains(separated):
    train_set, val_set, test_set = _noisy_splits(separated, 0.2, 10)
    report = train(_config(architecture='mlp', hidden_units=8, epochs=10),
                   train_set, val_set, test_set)
    assert report.final['test_acc'] > 0.9


def test_self_training_with_everything_labeled(separated):
    train_set, val_set, test_set = _noisy_splits(separated, 0.0, 11)
    report = self_train(_config(epochs=2), 1.0, train_set, val_set, test_set)
    assert report.control is None
    assert report.audit['pseudo_label_purity'] is None


def test_self_training_arms(separated):
    pool, val_set, test_set = _noisy_splits(separated, 0.0, 12)
    n_labeled = int(np.floor(0.2 * len(pool) + 0.5))
    with mock.patch('labelmm.trainer.train', wraps=train) as spy:
        report = self_train(_config(epochs=4), 0.2, pool, val_set, test_set)
    control_call, union_call = spy.call_args_list
    # the control model only sees the labeled slice
    assert len(control_call[0][1]) == n_labeled
    assert control_call[0][0].mode == TrainMode.DEFAULT
    assert len(union_call[0][1]) == 2 * n_labeled
    assert union_call[0][0].mode == TrainMode.LMM
    assert report.control is not None
    assert report.audit['labeled'] == report.audit['pseudo_labeled']
    assert 0.0 <= report.audit['pseudo_label_purity'] <= 1.0


def test_self_training_without_refurbishment_reuses_control(separated):
    pool, val_set, test_set = _noisy_splits(separated, 0.0, 13)
    first = self_train(_config(epochs=3), 0.1, pool, val_set, test_set,
                       refurbish=False)
    with mock.patch('labelmm.trainer.train', wraps=train) as spy:
        self_train(_config(epochs=3), 0.1, pool, val_set, test_set,
                   control=first.control)
    assert spy.call_count == 1


def test_self_training_fraction_range(separated):
    pool, val_set, test_set = _noisy_splits(separated, 0.0, 14)
    with pytest.raises(ConfigError):
        self_train(_config(), 0.0, pool, val_set, test_set)


BENCHMARK = dict(epochs=40, batch_size=32, window=5, epsilon=0.4, eta=2.0,
                 learning_rate=0.01)


def _benchmark_splits(name, n_per_class, gamma, seed):
    dataset = synth_gaussians(benchmark_spec(name), n_per_class, seed)
    fractions = (0.689655172413793, 0.137931034482759, 0.172413793103448)
    return _noisy_splits(dataset, gamma, seed, fractions)


@pytest.mark.slow
def test_two_class_benchmark_purity():
    gamma = 0.3
    purities, default_acc, lmm_acc = [], [], []
    for seed in range(5):
        splits = _benchmark_splits('synth:2', 1450, gamma, seed)
        startup = StartupConfig(warmup_epochs=5, noise_rate=gamma)
        lmm = train(TrainConfig(gamma=gamma, seed=seed, startup=startup,
                                mode=TrainMode.LMM, **BENCHMARK), *splits)
        default = train(TrainConfig(gamma=gamma, seed=seed, startup=startup,
                                    mode=TrainMode.DEFAULT, **BENCHMARK),
                        *splits)
        purities.append(lmm.final['purity'])
        lmm_acc.append(lmm.final['test_acc'])
        default_acc.append(default.final['test_acc'])
    assert np.mean(purities) >= 0.75
    assert np.mean(lmm_acc) >= np.mean(default_acc) - 0.01


@pytest.mark.slow
def test_five_class_benchmark_kappa():
    gamma = 0.2
    gains = []
    for seed in range(5):
        splits = _benchmark_splits('synth:5', 400, gamma, seed)
        noisy = splits[0]
        injected = cohen_kappa(noisy.labels, noisy.truth)
        report = train(TrainConfig(
            gamma=gamma, seed=seed, mode=TrainMode.LMM,
            startup=StartupConfig(warmup_epochs=5, noise_rate=gamma),
            **BENCHMARK), *splits)
        gains.append(report.final['kappa'] - injected)
    assert np.mean(gains) >= 0.05


@pytest.mark.slow
def test_self_training_is_not_worse_than_control():
    margins = []
    for seed in range(5):
        pool, val_set, test_set = _benchmark_splits('synth:2', 1450, 0.0,
                                                    seed)
        # gamma is the expected pseudo-label noise
        config = TrainConfig(gamma=0.1, seed=seed, mode=TrainMode.LMM,
                             startup=StartupConfig(warmup_epochs=5,
                                                   noise_rate=0.1),
                             **BENCHMARK)
        report = self_train(config, 0.1, pool, val_set, test_set)
        margins.append(report.final['test_acc'] -
                       report.control.final['test_acc'])
    assert np.mean(margins) >= -0.01

