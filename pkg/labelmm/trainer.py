#!/usr/bin/env python
"""
Training with label management.

Every epoch walks the training set in seeded minibatches. Until the
start-up condition holds, batches update the model on their observed labels
(plain minibatch descent). Afterwards each batch

  1. takes the (1 - gamma) share of lowest-loss samples as the clean set C,
  2. refurbishes every sample whose last T predictions agree well enough
     (normalised entropy <= epsilon), or that was refurbished before,
  3. records the current predictions in the label history,
  4. steps on the mean loss of refurbished samples (refurbished labels)
     and clean samples (observed labels), refurbishment taking precedence.

Predictions are recorded from the first epoch so windows are already full
when label management starts.
"""
import logging
import math

import numpy as np

from .data import Dataset, concat
from .errors import ConfigError, DataError, NumericError
from .history import HistoryStore
from .metrics import accuracy, auc, cohen_kappa, data_purity
from .model import (
    Architecture, OptimizerKind, OptimizerState, forward, grad, init_params,
    step, xent_losses
)
from .refurbish import (
    EvidenceType, RefurbishedSet, Refurbisher, exp_weights, uniform_weights
)
from .rng import SeedStream, generator
from .startup import StartupConfig, StartupMonitor

__author__ = "LabelMM developers"


class TrainMode(object):
    DEFAULT = 'default'
    LMM = 'lmm'
    UNIFORM_VOTE = 'uniform-vote-ablation'
    ALL = (DEFAULT, LMM, UNIFORM_VOTE)


class TrainConfig(object):
    """
    Hyperparameters of one training run
    """
    FIELDS = ('epochs', 'batch_size', 'gamma', 'window', 'epsilon', 'eta',
              'evidence', 'startup', 'mode', 'seed', 'architecture',
              'hidden_units', 'optimizer', 'learning_rate', 'beta1', 'beta2',
              'adam_epsilon')

    def __init__(self, epochs=60, batch_size=32, gamma=0.0, window=5,
                 epsilon=0.4, eta=2.0, evidence=EvidenceType.SOFT,
                 startup=None, mode=TrainMode.LMM, seed=0,
                 architecture=Architecture.SOFTMAX_LINEAR, hidden_units=16,
                 optimizer=OptimizerKind.ADAM, learning_rate=1e-4,
                 beta1=0.9, beta2=0.999, adam_epsilon=1e-8):
        self.epochs = int(epochs)
        self.batch_size = int(batch_size)
        self.gamma = float(gamma)
        self.window = int(window)
        self.epsilon = float(epsilon)
        self.eta = float(eta)
        self.evidence = evidence
        self.startup = startup or StartupConfig(noise_rate=self.gamma)
        self.mode = mode
        self.seed = int(seed)
        self.architecture = architecture
        self.hidden_units = int(hidden_units)
        self.optimizer = optimizer
        self.learning_rate = float(learning_rate)
        self.beta1 = float(beta1)
        self.beta2 = float(beta2)
        self.adam_epsilon = float(adam_epsilon)
        self._validate()

    def _validate(self):
        if self.epochs < 0:
            raise ConfigError("epochs must be non-negative")
        if self.batch_size < 2:
            raise ConfigError("batch_size must be at least 2")
        if not 0.0 <= self.gamma < 1.0:
            raise ConfigError("gamma must lie in [0, 1), got %r" % self.gamma)
        if not 0.0 <= self.epsilon <= 1.0:
            raise ConfigError("epsilon must lie in [0, 1], got %r"
                              % self.epsilon)
        if self.window < 1:
            raise ConfigError("window T must be at least 1")
        if not self.eta > 0.0:
            raise ConfigError("eta must be positive")
        if self.mode not in TrainMode.ALL:
            raise ConfigError("Unknown mode %r (known: %s)"
                              % (self.mode, ', '.join(TrainMode.ALL)))
        if self.evidence not in EvidenceType.ALL:
            raise ConfigError("Unknown evidence %r" % self.evidence)

    def replace(self, **changes):
        values = dict((name, getattr(self, name)) for name in self.FIELDS)
        values.update(changes)
        if 'gamma' in changes and 'startup' not in changes:
            startup = self.startup
            values['startup'] = StartupConfig(
                startup.warmup_epochs, startup.relaxation_factor,
                startup.loss_lower, noise_rate=values['gamma'])
        return TrainConfig(**values)

    def weights(self):
        if self.mode == TrainMode.UNIFORM_VOTE:
            return uniform_weights(self.window)
        return exp_weights(self.window, self.eta)

    def evidence_type(self):
        if self.mode == TrainMode.UNIFORM_VOTE:
            return EvidenceType.HARD
        return self.evidence

    def optimizer_state(self):
        return OptimizerState(self.optimizer, self.learning_rate, self.beta1,
                              self.beta2, self.adam_epsilon)


SERIES = ('train_loss', 'val_loss', 'val_acc', 'test_acc', 'purity', 'kappa',
          'psi_size', 'lmm_active')


class TrainingReport(object):
    """
    Per-epoch series, final metrics, final refurbished set and parameters
    """

    def __init__(self, mode, seed):
        self.mode = mode
        self.seed = seed
        self.series = dict((name, []) for name in SERIES)
        self.trigger_epoch = None
        self.final = {}
        self.psi = RefurbishedSet()
        self.params = None
        self.audit = {}
        self.control = None

    @property
    def epochs(self):
        return len(self.series['train_loss'])

    def append(self, **values):
        for name in SERIES:
            self.series[name].append(values[name])

    def rows(self):
        for k in range(self.epochs):
            row = {'epoch': k + 1}
            row.update((name, self.series[name][k]) for name in SERIES)
            yield row


def evaluate(params, dataset):
    """ (mean loss, accuracy, class probabilities) on observed labels """
    probs = forward(params, dataset.features)
    loss = float(np.mean(xent_losses(probs, dataset.labels)))
    acc = accuracy(np.argmax(probs, axis=1), dataset.labels)
    return loss, acc, probs


def select_clean(batch_losses, gamma):
    """
    Ids of the floor((1 - gamma) * |B|) lowest-loss samples, lower id first
    on equal loss, never fewer than one
    """
    if not batch_losses:
        raise DataError("Clean-sample selection over an empty batch")
    size = int(math.floor((1.0 - gamma) * len(batch_losses) + 1e-9))
    ranked = sorted(batch_losses, key=lambda item: (item[1], item[0]))
    return set(int(sample_id) for sample_id, _ in ranked[:max(size, 1)])


def _effective(ids, labels, clean, psi):
    labels = np.array(labels, dtype=np.int64)
    use = np.zeros(len(ids), dtype=bool)
    for k, sample_id in enumerate(ids):
        sample_id = int(sample_id)
        if sample_id in psi:
            labels[k] = psi.label(sample_id)
            use[k] = True
        elif sample_id in clean:
            use[k] = True
    return use, labels


def composite_update(params, opt_state, batch, clean, psi):
    """
    One step on refurbished samples (refurbished labels) plus clean samples
    (observed labels), averaged over the samples that contribute.

    batch is (ids, features, labels). Returns (params, opt_state, count).
    """
    ids, features, labels = batch
    use, labels = _effective(ids, labels, clean, psi)
    count = int(use.sum())
    if count == 0:
        logging.debug("No clean or refurbished samples in batch, skipping")
        return params, opt_state, 0
    gradient = grad(params, features[use], labels[use])
    params, opt_state = step(params, opt_state, gradient)
    return params, opt_state, count


def _labels_check(train_set, val_set, test_set):
    spaces = set(d.num_classes for d in (train_set, val_set, test_set))
    dims = set(d.feature_dim for d in (train_set, val_set, test_set))
    if len(spaces) != 1 or len(dims) != 1:
        raise DataError("Splits disagree on classes or feature dimensionality")
    if len(train_set) == 0 or len(val_set) == 0:
        raise DataError("Training and validation sets must be non-empty")


class _Run(object):
    """
    State of one call to train
    """

    def __init__(self, config, train_set):
        self.config = config
        self.train_set = train_set
        self.params = init_params(train_set.feature_dim,
                                  train_set.num_classes, config.seed,
                                  config.architecture, config.hidden_units)
        self.opt = config.optimizer_state()
        self.shuffle = SeedStream(config.seed).generator('shuffle')
        self.psi = RefurbishedSet()
        self.managed = config.mode != TrainMode.DEFAULT
        self.history = None
        self.monitor = None
        self.refurbisher = None
        if self.managed:
            self.history = HistoryStore(config.window, train_set.label_space)
            self.monitor = StartupMonitor(config.startup,
                                          train_set.num_classes)
            self.refurbisher = Refurbisher(config.weights(),
                                           config.evidence_type())
        self.skipped_steps = 0
        self.skipped_posteriors = 0
        self.effective = 0

    def plain_batch(self, epoch, ids, features, labels):
        probs = forward(self.params, features)
        if self.managed:
            self.history.record_batch(ids, epoch, probs)
        gradient = grad(self.params, features, labels)
        self.params, self.opt = step(self.params, self.opt, gradient)
        self.effective += len(ids)
        return float(np.sum(xent_losses(probs, labels))), len(ids)

    def managed_batch(self, epoch, ids, features, labels):
        config = self.config
        probs = forward(self.params, features)
        losses = xent_losses(probs, labels)
        clean = select_clean(list(zip(ids.tolist(), losses.tolist())),
                             config.gamma)

        position = dict((int(sample_id), k) for k, sample_id in enumerate(ids))
        for sample_id in sorted(position):
            if not self.history.is_refurbishable(sample_id, config.epsilon,
                                                 self.psi):
                continue
            try:
                self.refurbisher.refurbish(
                    sample_id, self.history.window(sample_id),
                    probs[position[sample_id]], epoch, self.psi)
            except NumericError:
                self.skipped_posteriors += 1
                logging.debug("Sample %d: posterior vanished at epoch %d",
                              sample_id, epoch)
        self.history.record_batch(ids, epoch, probs)

        use, targets = _effective(ids, labels, clean, self.psi)
        loss = float(np.sum(xent_losses(probs[use], targets[use])))
        self.params, self.opt, count = composite_update(
            self.params, self.opt, (ids, features, labels), clean, self.psi)
        if count == 0:
            self.skipped_steps += 1
        self.effective += count
        return loss, count


def train(config, train_set, val_set, test_set):
    """
    Run the full training loop and return a TrainingReport
    """
    _labels_check(train_set, val_set, test_set)
    run = _Run(config, train_set)
    report = TrainingReport(config.mode, config.seed)
    n = len(train_set)

    val_loss, val_acc, _ = evaluate(run.params, val_set)
    for epoch in range(1, config.epochs + 1):
        active = run.managed and run.monitor.check(epoch, val_loss, val_acc)
        order = run.shuffle.permutation(n)
        total_loss, total_count = 0.0, 0
        for start in range(0, n, config.batch_size):
            ids = order[start:start + config.batch_size]
            features = train_set.features[ids]
            labels = train_set.labels[ids]
            if active:
                loss, count = run.managed_batch(epoch, ids, features, labels)
            else:
                loss, count = run.plain_batch(epoch, ids, features, labels)
            if not (math.isfinite(loss) and run.params.is_finite()):
                raise NumericError("Training diverged at epoch %d" % epoch)
            total_loss += loss
            total_count += count

        val_loss, val_acc, _ = evaluate(run.params, val_set)
        test_acc = (evaluate(run.params, test_set)[1]
                    if len(test_set) else float('nan'))
        purity, kappa = _label_audit(train_set, run.psi)
        report.append(
            train_loss=total_loss / total_count if total_count else 0.0,
            val_loss=val_loss, val_acc=val_acc, test_acc=test_acc,
            purity=purity, kappa=kappa, psi_size=len(run.psi),
            lmm_active=int(active))
        logging.info("Epoch %d/%d [%s] train %.4f val %.4f/%.4f test %.4f "
                     "purity %.4f psi %d", epoch, config.epochs, config.mode,
                     report.series['train_loss'][-1], val_loss, val_acc,
                     test_acc, purity, len(run.psi))

    if run.managed:
        report.trigger_epoch = run.monitor.trigger_epoch
    report.psi = run.psi
    report.params = run.params
    report.final = _final_metrics(run.params, train_set, val_set, test_set,
                                  run.psi)
    report.final['trigger_epoch'] = report.trigger_epoch
    report.audit.update(skipped_steps=run.skipped_steps,
                        skipped_posteriors=run.skipped_posteriors,
                        effective_samples=run.effective)
    return report


def _label_audit(train_set, psi):
    if not train_set.has_truth:
        return float('nan'), float('nan')
    current = psi.apply(train_set.labels)
    return (data_purity(train_set, current),
            cohen_kappa(current, train_set.truth, train_set.num_classes))


def _final_metrics(params, train_set, val_set, test_set, psi):
    val_loss, val_acc, _ = evaluate(params, val_set)
    final = {'val_loss': val_loss, 'val_acc': val_acc,
             'psi_size': len(psi)}
    purity, kappa = _label_audit(train_set, psi)
    final['purity'] = purity
    final['kappa'] = kappa
    if len(test_set):
        test_loss, test_acc, probs = evaluate(params, test_set)
        final['test_loss'] = test_loss
        final['test_acc'] = test_acc
        final['test_kappa'] = cohen_kappa(np.argmax(probs, axis=1),
                                          test_set.labels,
                                          test_set.num_classes)
        try:
            final['test_auc'] = auc(probs, test_set.labels)
        except DataError:
            final['test_auc'] = float('nan')
    return final


def self_train(config, labeled_fraction, unlabeled_pool, val_set, test_set,
               refurbish=True, control=None):
    """
    Self-training with refurbished pseudo-labels.

    A seeded labeled_fraction of the pool keeps its labels and trains the
    control model; an equal-size slice of the rest is pseudo-labeled by the
    control model's argmax; the union is then trained with label management
    (or plainly when refurbish is False). The pool's own labels on the
    pseudo-labeled slice are used for auditing only.

    The returned report carries the control run as report.control.
    """
    labeled_fraction = float(labeled_fraction)
    if not 0.0 < labeled_fraction <= 1.0:
        raise ConfigError("labeled_fraction must lie in (0, 1), got %r"
                          % labeled_fraction)
    pool = unlabeled_pool
    n = len(pool)
    n_labeled = int(math.floor(labeled_fraction * n + 0.5))
    if n_labeled >= n:
        report = train(config, pool, val_set, test_set)
        report.audit['pseudo_label_purity'] = None
        return report
    if n_labeled == 0:
        raise DataError("The labeled slice is empty")

    order = generator(config.seed, 'selftrain').permutation(n)
    labeled_ids = np.sort(order[:n_labeled])
    pseudo_ids = np.sort(order[n_labeled:2 * n_labeled])
    audit_labels = pool.truth if pool.has_truth else pool.labels

    if control is None:
        control = train(config.replace(mode=TrainMode.DEFAULT),
                        pool.subset(labeled_ids), val_set, test_set)
    pseudo = np.argmax(forward(control.params, pool.features[pseudo_ids]),
                       axis=1)

    labeled = Dataset(pool.features[labeled_ids], pool.labels[labeled_ids],
                      pool.label_space, truth=audit_labels[labeled_ids],
                      source_ids=pool.source_ids[labeled_ids])
    pseudo_labeled = Dataset(pool.features[pseudo_ids], pseudo,
                             pool.label_space, truth=audit_labels[pseudo_ids],
                             source_ids=pool.source_ids[pseudo_ids])
    mode = TrainMode.LMM if refurbish else TrainMode.DEFAULT
    if refurbish and config.mode != TrainMode.DEFAULT:
        mode = config.mode
    report = train(config.replace(mode=mode),
                   concat([labeled, pseudo_labeled]), val_set, test_set)

    report.control = control
    report.audit.update(
        labeled=len(labeled), pseudo_labeled=len(pseudo_labeled),
        pseudo_label_purity=data_purity(pseudo_labeled),
        control_test_acc=control.final.get('test_acc'))
    return report
