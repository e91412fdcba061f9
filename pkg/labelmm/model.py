#!/usr/bin/env python
"""
A small differentiable classifier: softmax-linear or one hidden ReLU layer,
trained with SGD or Adam on mean cross-entropy. Everything is float64.
"""
import math

import numpy as np

from .errors import ConfigError, DataError, NumericError
from .rng import generator

__author__ = "LabelMM developers"

LOSS_CLAMP = 1e-12


class Architecture(object):
    SOFTMAX_LINEAR = 'softmax-linear'
    MLP = 'mlp'
    ALL = (SOFTMAX_LINEAR, MLP)


class OptimizerKind(object):
    SGD = 'sgd'
    ADAM = 'adam'
    ALL = (SGD, ADAM)


class ModelParams(object):
    """
    Weight matrices and bias vectors, in layer order W1, b1[, W2, b2].
    Gradients are ModelParams of the same shape.
    """

    def __init__(self, architecture, arrays):
        if architecture not in Architecture.ALL:
            raise ConfigError("Unknown architecture %r" % architecture)
        self.architecture = architecture
        self.arrays = [np.asarray(a, dtype=np.float64) for a in arrays]

    @property
    def input_dim(self):
        return self.arrays[0].shape[0]

    @property
    def num_classes(self):
        return self.arrays[-1].shape[0]

    def copy(self):
        return ModelParams(self.architecture, [a.copy() for a in self.arrays])

    def zeros_like(self):
        return ModelParams(self.architecture,
                           [np.zeros_like(a) for a in self.arrays])

    def flat(self):
        return np.concatenate([a.reshape(-1) for a in self.arrays])

    def from_flat(self, vector):
        arrays, offset = [], 0
        for a in self.arrays:
            arrays.append(np.array(vector[offset:offset + a.size]).reshape(
                a.shape))
            offset += a.size
        return ModelParams(self.architecture, arrays)

    def is_finite(self):
        return all(np.all(np.isfinite(a)) for a in self.arrays)

    def equals(self, other):
        return (self.architecture == other.architecture and
                len(self.arrays) == len(other.arrays) and
                all(np.array_equal(a, b)
                    for a, b in zip(self.arrays, other.arrays)))


def init_params(input_dim, num_classes, seed, architecture=None,
                hidden_units=16):
    """
    Glorot-uniform weights, zero biases
    """
    architecture = architecture or Architecture.SOFTMAX_LINEAR
    if architecture not in Architecture.ALL:
        raise ConfigError("Unknown architecture %r" % architecture)
    rng = generator(seed, 'init')
    if architecture == Architecture.SOFTMAX_LINEAR:
        shapes = [(input_dim, num_classes)]
    else:
        if hidden_units < 1:
            raise ConfigError("hidden_units must be at least 1")
        shapes = [(input_dim, hidden_units), (hidden_units, num_classes)]
    arrays = []
    for fan_in, fan_out in shapes:
        limit = math.sqrt(6.0 / (fan_in + fan_out))
        arrays.append(rng.uniform(-limit, limit, size=(fan_in, fan_out)))
        arrays.append(np.zeros(fan_out))
    return ModelParams(architecture, arrays)


def softmax(logits):
    shifted = logits - np.max(logits, axis=-1, keepdims=True)
    exp = np.exp(shifted)
    return exp / np.sum(exp, axis=-1, keepdims=True)


def _as_batch(params, features):
    features = np.asarray(features, dtype=np.float64)
    single = features.ndim == 1
    if single:
        features = features.reshape(1, -1)
    if features.shape[1] != params.input_dim:
        raise DataError("Model expects %d features, got %d"
                        % (params.input_dim, features.shape[1]))
    if not np.all(np.isfinite(features)):
        raise NumericError("Non-finite value in model input")
    return features, single


def _forward(params, features):
    """ returns (probs, hidden pre-activation or None, hidden or None) """
    if params.architecture == Architecture.SOFTMAX_LINEAR:
        w, b = params.arrays
        return softmax(np.dot(features, w) + b), None, None
    w1, b1, w2, b2 = params.arrays
    z = np.dot(features, w1) + b1
    h = np.maximum(z, 0.0)
    return softmax(np.dot(h, w2) + b2), z, h


def forward(params, features):
    """
    Softmax class probabilities for one feature vector or a (n, d) batch
    """
    features, single = _as_batch(params, features)
    probs = _forward(params, features)[0]
    return probs[0] if single else probs


def xent_loss(probs, label):
    probs = np.asarray(probs, dtype=np.float64)
    label = int(label)
    if not 0 <= label < probs.shape[-1]:
        raise DataError("Label %d outside [0, %d)" % (label, probs.shape[-1]))
    return float(-math.log(max(probs[label], LOSS_CLAMP)))


def xent_losses(probs, labels):
    """ per-sample cross-entropy for a (n, M) batch """
    labels = np.asarray(labels, dtype=np.int64)
    picked = probs[np.arange(labels.shape[0]), labels]
    return -np.log(np.maximum(picked, LOSS_CLAMP))


def mean_loss(params, features, labels):
    features, _ = _as_batch(params, features)
    return float(np.mean(xent_losses(forward(params, features), labels)))


def grad(params, features, labels):
    """
    Analytic gradient of the mean cross-entropy over a batch
    """
    features, _ = _as_batch(params, features)
    labels = np.asarray(labels, dtype=np.int64).reshape(-1)
    n = labels.shape[0]
    if n == 0:
        raise DataError("Cannot take a gradient over an empty batch")
    if n != features.shape[0]:
        raise DataError("%d labels for %d samples" % (n, features.shape[0]))

    probs, z, h = _forward(params, features)
    delta = probs.copy()
    delta[np.arange(n), labels] -= 1.0
    delta /= n

    if params.architecture == Architecture.SOFTMAX_LINEAR:
        return ModelParams(params.architecture,
                           [np.dot(features.T, delta), delta.sum(axis=0)])

    w2 = params.arrays[2]
    d_hidden = np.dot(delta, w2.T) * (z > 0.0)
    return ModelParams(params.architecture, [
        np.dot(features.T, d_hidden), d_hidden.sum(axis=0),
        np.dot(h.T, delta), delta.sum(axis=0),
    ])


class OptimizerState(object):
    """
    Learning rate, step counter and, for Adam, the moment buffers
    """

    def __init__(self, kind=OptimizerKind.ADAM, learning_rate=1e-4,
                 beta1=0.9, beta2=0.999, epsilon=1e-8):
        if kind not in OptimizerKind.ALL:
            raise ConfigError("Unknown optimizer %r" % kind)
        if not learning_rate > 0.0:
            raise ConfigError("Learning rate must be positive")
        self.kind = kind
        self.learning_rate = float(learning_rate)
        self.beta1 = float(beta1)
        self.beta2 = float(beta2)
        self.epsilon = float(epsilon)
        self.steps = 0
        self.first_moment = None
        self.second_moment = None


def step(params, state, gradient):
    """
    One optimizer update; returns (params, state)
    """
    if len(gradient.arrays) != len(params.arrays) or any(
            g.shape != p.shape
            for g, p in zip(gradient.arrays, params.arrays)):
        raise DataError("Gradient shape does not match the parameters")
    if not gradient.is_finite():
        raise NumericError("Non-finite gradient at step %d" % state.steps)

    state.steps += 1
    lr = state.learning_rate
    if state.kind == OptimizerKind.SGD:
        arrays = [p - lr * g for p, g in zip(params.arrays, gradient.arrays)]
        return ModelParams(params.architecture, arrays), state

    if state.first_moment is None:
        state.first_moment = params.zeros_like()
        state.second_moment = params.zeros_like()
    b1, b2 = state.beta1, state.beta2
    correction1 = 1.0 - b1 ** state.steps
    correction2 = 1.0 - b2 ** state.steps
    arrays = []
    for k, (p, g) in enumerate(zip(params.arrays, gradient.arrays)):
        m = b1 * state.first_moment.arrays[k] + (1.0 - b1) * g
        v = b2 * state.second_moment.arrays[k] + (1.0 - b2) * g * g
        state.first_moment.arrays[k] = m
        state.second_moment.arrays[k] = v
        m_hat = m / correction1
        v_hat = v / correction2
        arrays.append(p - lr * m_hat / (np.sqrt(v_hat) + state.epsilon))
    return ModelParams(params.architecture, arrays), state
