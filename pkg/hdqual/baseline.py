"""
A small multilayer perceptron trained by minibatch gradient descent on
the softmax cross-entropy. It is the gradient-trained counterpart that
HDC is compared with in the benchmark, so it is kept plain: dense
layers, ReLU or tanh hidden activations, a 3-way softmax output.

Training runs in 32-bit; :func:`mlp_gradcheck` compares the analytic
gradients with central finite differences in 64-bit.
"""

import logging

import numpy as np
from scipy.special import logsumexp, softmax

from . import config
from .errors import DimensionMismatchError, EmptyDatasetError, InvalidArgumentError

__all__ = [
    "MlpModel",
    "MlpTrainConfig",
    "mlp_init",
    "mlp_forward",
    "mlp_predict",
    "mlp_gradients",
    "mlp_fit",
    "mlp_gradcheck",
]

log = logging.getLogger(__name__)

ACTIVATIONS = ("relu", "tanh")


def _activate(z, activation):
    if activation == "relu":
        return np.maximum(z, 0)
    return np.tanh(z)


def _activation_grad(z, a, activation):
    if activation == "relu":
        return (z > 0).astype(z.dtype)
    return 1 - a ** 2


class MlpModel(object):

    """Dense layers as a list of ``(W, b)`` pairs, ``W`` of shape
    (inputs, outputs). The last layer has one output per class."""

    def __init__(self, layers, activation=config.MLP_ACTIVATION, seed=None,
                 labels=config.LABELS):
        if activation not in ACTIVATIONS:
            raise InvalidArgumentError(
                "unknown activation '{}', use one of {}".format(activation, ACTIVATIONS)
            )
        for (w0, _), (w1, _) in zip(layers[:-1], layers[1:]):
            if w0.shape[1] != w1.shape[0]:
                raise DimensionMismatchError("layer shapes do not compose")
        if layers[-1][0].shape[1] != len(labels):
            raise DimensionMismatchError(
                "output layer has {} units for {} classes".format(
                    layers[-1][0].shape[1], len(labels)
                )
            )
        self.layers = [(np.array(w), np.array(b)) for w, b in layers]
        self.activation = activation
        self.seed = seed
        self.labels = list(labels)
        self.loss_log = []

    @property
    def hidden_sizes(self):
        return [w.shape[1] for w, _ in self.layers[:-1]]

    @property
    def n_inputs(self):
        return self.layers[0][0].shape[0]

    def astype(self, dtype):
        model = MlpModel(
            [(w.astype(dtype), b.astype(dtype)) for w, b in self.layers],
            self.activation, self.seed, self.labels,
        )
        model.loss_log = list(self.loss_log)
        return model

    def __repr__(self):
        return "MlpModel({} -> {} -> {}, {})".format(
            self.n_inputs, self.hidden_sizes, len(self.labels), self.activation
        )


class MlpTrainConfig(object):

    """ epochs, batch size, learning rate and seed of :func:`mlp_fit` """

    def __init__(self, epochs=config.MLP_EPOCHS, batch_size=config.MLP_BATCH_SIZE,
                 learning_rate=config.MLP_LEARNING_RATE, seed=0,
                 hidden_sizes=config.MLP_HIDDEN, activation=config.MLP_ACTIVATION):
        if int(epochs) < 1 or int(batch_size) < 1:
            raise InvalidArgumentError("epochs and batch size must be >= 1")
        if learning_rate < 0:
            raise InvalidArgumentError("learning rate must be >= 0")
        self.epochs = int(epochs)
        self.batch_size = int(batch_size)
        self.learning_rate = float(learning_rate)
        self.seed = int(seed)
        self.hidden_sizes = tuple(int(h) for h in hidden_sizes)
        self.activation = activation


def mlp_init(n_inputs, hidden_sizes=config.MLP_HIDDEN, n_classes=len(config.LABELS),
             activation=config.MLP_ACTIVATION, seed=0, dtype="float32"):
    """
    Scaled-normal initialization (He for ReLU, Glorot-like for tanh),
    zero biases.
    """
    rng = np.random.Generator(np.random.PCG64(seed))
    sizes = [int(n_inputs)] + [int(h) for h in hidden_sizes] + [int(n_classes)]
    gain = 2.0 if activation == "relu" else 1.0
    layers = []
    for ii, (fan_in, fan_out) in enumerate(zip(sizes[:-1], sizes[1:])):
        scale = np.sqrt((gain if ii < len(sizes) - 2 else 1.0) / fan_in)
        w = rng.normal(0.0, scale, size=(fan_in, fan_out)).astype(dtype)
        layers.append((w, np.zeros(fan_out, dtype=dtype)))
    return MlpModel(layers, activation, seed)


def _forward(model, X):
    """ returns the pre-activations and activations of every layer """
    zs, activations = [], [X]
    a = X
    for ii, (w, b) in enumerate(model.layers):
        z = a @ w + b
        zs.append(z)
        a = z if ii == len(model.layers) - 1 else _activate(z, model.activation)
        activations.append(a)
    return zs, activations


def _check_inputs(model, X):
    if X.shape[-1] != model.n_inputs:
        raise DimensionMismatchError(
            "input has length {}, model expects {}".format(X.shape[-1], model.n_inputs)
        )


def mlp_forward(model, x):
    """
    Class probabilities (softmax output) of one feature vector, or of
    every row of a matrix.
    """
    x = np.asarray(x, dtype=model.layers[0][0].dtype)
    _check_inputs(model, x)
    single = x.ndim == 1
    zs, _ = _forward(model, np.atleast_2d(x))
    probs = softmax(zs[-1].astype(np.float64), axis=1)
    return probs[0] if single else probs


def mlp_predict(model, X):
    """ most probable label of every row """
    probs = mlp_forward(model, np.atleast_2d(X))
    return [model.labels[ii] for ii in np.argmax(probs, axis=1)]


def _backward(model, X, targets, loss_scale=1.0):
    """mean cross-entropy over the batch and its gradients, as a list of
    (dW, db) in layer order"""
    zs, activations = _forward(model, X)
    logits = zs[-1]
    nbatch = X.shape[0]
    rows = np.arange(nbatch)

    loss = loss_scale * np.mean(logsumexp(logits, axis=1) - logits[rows, targets])

    delta = softmax(logits, axis=1)
    delta[rows, targets] -= 1
    delta *= loss_scale / nbatch

    grads = [None] * len(model.layers)
    for ii in reversed(range(len(model.layers))):
        w, _ = model.layers[ii]
        grads[ii] = (activations[ii].T @ delta, delta.sum(axis=0))
        if ii > 0:
            da = delta @ w.T
            delta = da * _activation_grad(zs[ii - 1], activations[ii], model.activation)
    return float(loss), grads


def _targets(model, labels):
    index = {label: ii for ii, label in enumerate(model.labels)}
    return np.array([index[label] for label in labels])


def mlp_gradients(model, x, label, loss_scale=1.0):
    """ analytic gradients (list of (dW, db)) of the loss of one sample """
    x = np.asarray(x, dtype=model.layers[0][0].dtype)
    _check_inputs(model, x)
    _, grads = _backward(model, np.atleast_2d(x), _targets(model, [label]), loss_scale)
    return grads


def mlp_fit(train, cfg=None):
    """
    Train an MLP on a :class:`~hdqual.pipeline.LabeledDataset` with
    minibatch SGD. Initialization and shuffling are seeded from
    ``cfg.seed``; the mean batch loss of every epoch is kept in
    ``model.loss_log``.
    """
    cfg = cfg or MlpTrainConfig()
    if len(train) == 0:
        raise EmptyDatasetError("no training samples")

    init_seq, shuffle_seq = np.random.SeedSequence(cfg.seed).spawn(2)
    model = mlp_init(train.dim_m, cfg.hidden_sizes, activation=cfg.activation,
                     seed=init_seq.generate_state(1, dtype=np.uint64)[0])
    model.seed = cfg.seed
    rng = np.random.Generator(np.random.PCG64(shuffle_seq))

    X = train.samples.astype(np.float32)
    y = _targets(model, train.labels)
    lr = np.float32(cfg.learning_rate)

    for epoch in range(cfg.epochs):
        order = rng.permutation(len(y))
        losses = []
        for start in range(0, len(y), cfg.batch_size):
            batch = order[start : start + cfg.batch_size]
            loss, grads = _backward(model, X[batch], y[batch])
            losses.append(loss * len(batch))
            if lr != 0:
                model.layers = [
                    (w - lr * dw, b - lr * db)
                    for (w, b), (dw, db) in zip(model.layers, grads)
                ]
        model.loss_log.append(float(np.sum(losses) / len(y)))
        log.debug("mlp epoch %d: loss %.5f", epoch + 1, model.loss_log[-1])

    log.info(
        "trained MLP %s for %d epochs, final loss %.4f",
        model.hidden_sizes, cfg.epochs, model.loss_log[-1],
    )
    return model


def mlp_gradcheck(model, sample, n_params=config.GRADCHECK_PARAMS,
                  step=config.GRADCHECK_STEP, seed=0, loss_scale=1.0):
    """
    Largest relative error between analytic and central finite-difference
    gradients, over a random subset of ``n_params`` parameters (all of
    them if the model is smaller). Computed in 64-bit.

    ``sample`` is a (feature vector, label) pair; the relative error of a
    parameter is ``|g - g_fd| / max(|g|, |g_fd|, 1e-8)``.
    """
    model = model.astype(np.float64)
    x, label = sample
    X = np.atleast_2d(np.asarray(x, dtype=np.float64))
    _check_inputs(model, X)
    targets = _targets(model, [label])
    _, grads = _backward(model, X, targets, loss_scale)

    # flat index over every parameter of every layer
    slots = []
    for ii, (w, b) in enumerate(model.layers):
        slots += [(ii, 0, idx) for idx in np.ndindex(w.shape)]
        slots += [(ii, 1, idx) for idx in np.ndindex(b.shape)]
    rng = np.random.Generator(np.random.PCG64(seed))
    chosen = rng.choice(len(slots), size=min(n_params, len(slots)), replace=False)

    worst = 0.0
    for k in chosen:
        layer, which, idx = slots[k]
        param = model.layers[layer][which]
        saved = param[idx]

        param[idx] = saved + step
        plus, _ = _backward(model, X, targets, loss_scale)
        param[idx] = saved - step
        minus, _ = _backward(model, X, targets, loss_scale)
        param[idx] = saved

        numeric = (plus - minus) / (2 * step)
        analytic = grads[layer][which][idx]
        err = abs(analytic - numeric) / max(abs(analytic), abs(numeric), 1e-8)
        worst = max(worst, err)

    return float(worst)
