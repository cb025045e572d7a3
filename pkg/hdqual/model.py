"""
Class hypervectors: bundling, mispredict-driven retraining and
classification by maximum cosine similarity.

Training follows three steps:

 1) every encoded training sample is bundled (added) into the class
    hypervector of its label (:func:`bundle_classes`)
 2) the training set is replayed in seeded random order; whenever a
    sample of class ``c`` is predicted as ``c'`` the two class vectors
    are corrected (:func:`retrain_epoch`)::

        C_c  <- C_c  + eta (1 - delta(C_c,  I)) I
        C_c' <- C_c' - eta (1 - delta(C_c', I)) I

    both similarities are taken before either vector changes
 3) replay stops after ``max_epochs`` or earlier, once an epoch has no
    mispredicts or the mispredict count has not improved for
    ``patience`` epochs (:func:`fit`)

Class vectors are never renormalized.

Model file layout
-----------------
All integers little-endian:

====== ======= ==================================================
offset size    content
====== ======= ==================================================
0      4       magic ``b"HDQM"``
4      2       uint16 format version (currently 1)
6      4       uint32 header length H
10     H       UTF-8 JSON header (sorted keys)
10+H   4*k*D   k class hypervectors, float32, row-major, label order
====== ======= ==================================================

The header holds ``format_version``, ``dim_d``, ``dim_m``, ``mode``,
``seed``, ``dtype``, ``labels``, ``learning_rate``,
``encoder_fingerprint``, ``epoch_log`` and ``normalization`` (channel
mean/std lists or null). Files written by the command-line tool also
carry ``window`` (samples per window) and ``channels`` (channel names).
"""

import json
import logging
import struct
from collections import OrderedDict

import numpy as np

from . import config
from .errors import (
    DimensionMismatchError,
    EmptyDatasetError,
    InvalidArgumentError,
    ModelEncoderMismatchError,
    ModelFormatError,
    UnknownClassError,
    ZeroNormError,
)

__all__ = [
    "ClassModel",
    "TrainConfig",
    "bundle_classes",
    "retrain_epoch",
    "fit",
    "predict",
    "predict_batch",
    "save_model",
    "load_model",
]

log = logging.getLogger(__name__)

MODEL_MAGIC = b"HDQM"
MODEL_FORMAT_VERSION = 1
MODEL_HEADER_KEYS = (
    "dim_d", "dim_m", "mode", "seed", "dtype", "labels", "learning_rate",
    "encoder_fingerprint", "epoch_log",
)


class TrainConfig(object):

    """ retraining parameters, see :func:`fit` """

    def __init__(self, learning_rate=config.DEFAULT_LEARNING_RATE,
                 max_epochs=config.DEFAULT_MAX_EPOCHS,
                 patience=config.DEFAULT_PATIENCE, shuffle_seed=0):
        if not learning_rate > 0:
            raise InvalidArgumentError("learning_rate must be > 0")
        if int(max_epochs) < 1:
            raise InvalidArgumentError("max_epochs must be >= 1")
        if patience is not None and int(patience) < 0:
            raise InvalidArgumentError("patience must be >= 0 (or None)")
        self.learning_rate = float(learning_rate)
        self.max_epochs = int(max_epochs)
        # None means "never stop on stalled improvement"
        self.patience = None if patience is None else int(patience)
        self.shuffle_seed = int(shuffle_seed)


class ClassModel(object):

    """One hypervector per class label.

    Parameters
    ----------
    labels: sequence of str
        fixed label order; ties in :func:`predict` go to the first label
    vectors: array, shape (k, D)
        class hypervectors in label order
    learning_rate: float
        eta of the retraining update
    encoder_fingerprint: str
        fingerprint of the encoder that produced the training data
    """

    def __init__(self, labels, vectors, learning_rate=config.DEFAULT_LEARNING_RATE,
                 encoder_fingerprint=None, epoch_log=None):
        vectors = np.array(vectors, ndmin=2)
        if not np.issubdtype(vectors.dtype, np.floating):
            vectors = vectors.astype(np.float64)
        if len(labels) != vectors.shape[0]:
            raise DimensionMismatchError(
                "{} labels for {} class vectors".format(len(labels), vectors.shape[0])
            )
        self.labels = list(labels)
        self.vectors = vectors
        self.learning_rate = float(learning_rate)
        self.encoder_fingerprint = encoder_fingerprint
        self.epoch_log = list(epoch_log or [])
        self._index = {label: ii for ii, label in enumerate(self.labels)}

    @property
    def dim(self):
        return self.vectors.shape[1]

    @property
    def classes(self):
        """ ordered mapping label -> class hypervector """
        return OrderedDict(zip(self.labels, self.vectors))

    def index(self, label):
        try:
            return self._index[label]
        except KeyError:
            raise UnknownClassError(
                "label '{}' is not one of the model classes {}".format(
                    label, self.labels
                )
            )

    def copy(self):
        return ClassModel(self.labels, self.vectors.copy(), self.learning_rate,
                          self.encoder_fingerprint, self.epoch_log)

    def __eq__(self, other):
        return (
            isinstance(other, ClassModel)
            and self.labels == other.labels
            and self.vectors.dtype == other.vectors.dtype
            and np.array_equal(self.vectors, other.vectors)
            and self.learning_rate == other.learning_rate
        )

    def __repr__(self):
        return "ClassModel(labels={}, D={}, eta={})".format(
            self.labels, self.dim, self.learning_rate
        )


def _as_matrix(encoded):
    """ split a list of (hypervector, label) pairs into a matrix and labels """
    encoded = list(encoded)
    if len(encoded) == 0:
        raise EmptyDatasetError("no encoded samples given")
    dims = set(len(h) for h, _ in encoded)
    if len(dims) > 1:
        raise DimensionMismatchError(
            "hypervectors of mixed dimensions {}".format(sorted(dims))
        )
    hvs = np.array([h for h, _ in encoded])
    if not np.issubdtype(hvs.dtype, np.floating):
        hvs = hvs.astype(np.float64)
    labels = [label for _, label in encoded]
    return hvs, labels


def _ordered_labels(labels):
    """fixed label order: the standard quality labels first, then any other
    label in order of appearance"""
    present = set(labels)
    ordered = [label for label in config.LABELS if label in present]
    for label in labels:
        if label not in ordered:
            ordered.append(label)
    return ordered


def bundle_classes(encoded, labels=None):
    """
    Bundle hypervectors into class hypervectors by elementwise addition.

    Parameters
    ----------
    encoded: list of (hypervector, label)
        encoded training samples
    labels: list of str
        optional label order (default: low, average, high, then others)

    Returns
    -------
    ClassModel
    """
    hvs, sample_labels = _as_matrix(encoded)
    if labels is None:
        labels = _ordered_labels(sample_labels)
    return _bundle(hvs, sample_labels, labels)


def _bundle(hvs, sample_labels, labels):
    index = {label: ii for ii, label in enumerate(labels)}
    if set(sample_labels) != set(labels):
        raise UnknownClassError(
            "label set {} does not match the training labels {}".format(
                list(labels), sorted(set(sample_labels))
            )
        )

    rows = np.array([index[label] for label in sample_labels])
    sums = np.zeros((len(labels), hvs.shape[1]), dtype=np.float64)
    np.add.at(sums, rows, hvs.astype(np.float64))
    return ClassModel(labels, sums.astype(hvs.dtype))


def _check_query(model, q):
    if q.shape[-1] != model.dim:
        raise DimensionMismatchError(
            "query has dimension {}, model has {}".format(q.shape[-1], model.dim)
        )


def _scores(vectors, queries):
    """ cosine similarity matrix (N queries x k classes) in 64-bit """
    c = vectors.astype(np.float64)
    q = np.asarray(queries, dtype=np.float64)
    qnorm = np.linalg.norm(q, axis=1)
    if np.any(qnorm == 0.0):
        raise ZeroNormError("query hypervector has zero norm")
    cnorm = np.linalg.norm(c, axis=1)
    with np.errstate(divide="ignore", invalid="ignore"):
        scores = (q @ c.T) / np.outer(qnorm, cnorm)
    # a zero class vector is similar to nothing
    scores[:, cnorm == 0.0] = 0.0
    return np.clip(scores, -1.0, 1.0)


def predict(model, query):
    """
    Classify one query hypervector.

    Returns
    -------
    (label, scores)
        the label with the highest cosine similarity (ties go to the
        earlier label in ``model.labels``) and an ordered map of all
        class similarities
    """
    q = np.asarray(query).ravel()
    _check_query(model, q)
    scores = _scores(model.vectors, q[np.newaxis, :])[0]
    best = int(np.argmax(scores))  # first maximum wins
    return model.labels[best], OrderedDict(zip(model.labels, scores.tolist()))


def predict_batch(model, queries):
    """ classify every row of an N x D matrix, returns a list of labels """
    queries = np.asarray(queries)
    if queries.ndim != 2:
        raise DimensionMismatchError("predict_batch() takes an N x D matrix")
    _check_query(model, queries)
    scores = _scores(model.vectors, queries)
    return [model.labels[ii] for ii in np.argmax(scores, axis=1)]


def _update(vectors, true_idx, pred_idx, query, eta):
    """apply the retraining correction for one mispredicted query, both
    similarities are evaluated on the vectors before the update"""
    q = query.astype(np.float64)
    qnorm = np.linalg.norm(q)
    c_true = vectors[true_idx].astype(np.float64)
    c_pred = vectors[pred_idx].astype(np.float64)

    def _delta(c):
        cnorm = np.linalg.norm(c)
        if cnorm == 0.0:
            return 0.0
        return float(np.clip(np.dot(c, q) / (cnorm * qnorm), -1.0, 1.0))

    d_true = _delta(c_true)
    d_pred = _delta(c_pred)

    vectors[true_idx] = c_true + eta * (1.0 - d_true) * q
    vectors[pred_idx] = c_pred - eta * (1.0 - d_pred) * q


def _retrain(model, hvs, rows, chunk_rows=config.RETRAIN_CHUNK_ROWS):
    """
    One sequential pass over ``hvs`` (in the given order), updating the
    model in place. Upcoming samples are scored in chunks against the
    current model; the pass jumps to the first mispredict, corrects the
    model and rescans from the following sample, which is exactly the
    sample-by-sample procedure.
    """
    vectors = model.vectors
    nsamples = hvs.shape[0]
    mispredicts = 0
    pos = 0

    while pos < nsamples:
        stop = min(pos + chunk_rows, nsamples)
        scores = _scores(vectors, hvs[pos:stop])
        predicted = np.argmax(scores, axis=1)
        wrong = np.flatnonzero(predicted != rows[pos:stop])
        if len(wrong) == 0:
            pos = stop
            continue
        ii = pos + int(wrong[0])
        _update(vectors, rows[ii], predicted[wrong[0]], hvs[ii], model.learning_rate)
        mispredicts += 1
        pos = ii + 1

    return mispredicts


def retrain_epoch(model, encoded):
    """
    One retraining pass over ``encoded`` (list of (hypervector, label)),
    visiting the samples in the given order.

    Returns
    -------
    (ClassModel, int)
        the updated model (a new object, the input is not modified) and
        the number of mispredicted samples in this pass
    """
    hvs, labels = _as_matrix(encoded)
    _check_query(model, hvs)
    rows = np.array([model.index(label) for label in labels])
    if np.any(np.linalg.norm(hvs.astype(np.float64), axis=1) == 0.0):
        raise ZeroNormError("training hypervector has zero norm")

    updated = model.copy()
    mispredicts = _retrain(updated, hvs, rows)
    return updated, mispredicts


def fit(encoded_train, cfg=None, labels=None, encoder_fingerprint=None):
    """
    Train a :class:`ClassModel`: bundle, then retrain for up to
    ``cfg.max_epochs`` passes over a reshuffled copy of the data.

    Parameters
    ----------
    encoded_train: list of (hypervector, label)
        encoded training samples
    cfg: TrainConfig
        learning rate, epoch limits and shuffle seed
    labels: list of str
        optional label order
    encoder_fingerprint: str
        stored in the model so that it can only be evaluated with the
        matching encoder

    Returns
    -------
    ClassModel
        with ``epoch_log`` holding the mispredict count of every epoch
    """
    cfg = cfg or TrainConfig()
    hvs, sample_labels = _as_matrix(encoded_train)
    if labels is None:
        labels = _ordered_labels(sample_labels)

    model = _bundle(hvs, sample_labels, labels)
    model.learning_rate = cfg.learning_rate
    model.encoder_fingerprint = encoder_fingerprint

    if np.any(np.linalg.norm(hvs.astype(np.float64), axis=1) == 0.0):
        raise ZeroNormError("training hypervector has zero norm")

    rows = np.array([model.index(label) for label in sample_labels])
    rng = np.random.Generator(np.random.PCG64(cfg.shuffle_seed))

    best = None
    stalled = 0
    for epoch in range(cfg.max_epochs):
        order = rng.permutation(hvs.shape[0])
        mispredicts = _retrain(model, hvs[order], rows[order])
        model.epoch_log.append(mispredicts)
        log.debug("epoch %d: %d mispredicts", epoch + 1, mispredicts)

        if mispredicts == 0:
            break
        if best is None or mispredicts < best:
            best = mispredicts
            stalled = 0
        else:
            stalled += 1
        if cfg.patience is not None and stalled >= cfg.patience:
            log.debug("no improvement for %d epochs, stopping", stalled)
            break

    if np.any(np.linalg.norm(model.vectors.astype(np.float64), axis=1) == 0.0):
        raise ZeroNormError("a class hypervector ended up with zero norm")

    log.info(
        "trained %d classes on %d samples in %d epochs (mispredicts: %s)",
        len(labels), hvs.shape[0], len(model.epoch_log), model.epoch_log,
    )
    return model


# ============================================================================
# model files
# ============================================================================


def save_model(filename, model, encoder, normalization=None, extra=None):
    """
    Write ``model`` to ``filename`` in the binary model format (see the
    module documentation). ``encoder`` provides the encoding parameters
    stored in the header; ``normalization`` is an optional dict with
    ``mean`` and ``std`` lists. Entries of ``extra`` (e.g. the window
    length and channel names) are added to the header.
    """
    if model.encoder_fingerprint not in (None, encoder.fingerprint):
        raise ModelEncoderMismatchError(
            "model was trained with a different encoder than the one given"
        )

    header = dict(
        format_version=MODEL_FORMAT_VERSION,
        dim_d=int(encoder.dim_d),
        dim_m=int(encoder.dim_m),
        mode=encoder.mode,
        seed=encoder.seed,
        dtype=encoder.dtype.name,
        labels=list(model.labels),
        learning_rate=model.learning_rate,
        encoder_fingerprint=encoder.fingerprint,
        epoch_log=[int(x) for x in model.epoch_log],
        normalization=normalization,
    )
    header.update(extra or {})
    blob = json.dumps(header, sort_keys=True).encode("utf-8")

    with open(filename, "wb") as outfile:
        outfile.write(MODEL_MAGIC)
        outfile.write(struct.pack("<HI", MODEL_FORMAT_VERSION, len(blob)))
        outfile.write(blob)
        outfile.write(model.vectors.astype("<f4").tobytes(order="C"))

    log.info("wrote model to %s", filename)


def load_model(filename):
    """
    Read a model file.

    Returns
    -------
    (ClassModel, dict)
        the model (class vectors in the encoder's element type) and the
        decoded header
    """
    with open(filename, "rb") as infile:
        data = infile.read()

    if data[:4] != MODEL_MAGIC:
        raise ModelFormatError("{} is not a model file".format(filename))
    try:
        version, hlen = struct.unpack("<HI", data[4:10])
        header = json.loads(data[10 : 10 + hlen].decode("utf-8"))
    except (struct.error, ValueError) as err:
        raise ModelFormatError("corrupt model header in {}: {}".format(filename, err))
    if version != MODEL_FORMAT_VERSION:
        raise ModelFormatError(
            "model format version {} is not supported".format(version)
        )

    if not isinstance(header, dict):
        raise ModelFormatError("model header in {} is not an object".format(filename))
    missing = [key for key in MODEL_HEADER_KEYS if key not in header]
    if missing:
        raise ModelFormatError(
            "model header in {} lacks {}".format(filename, ", ".join(missing))
        )

    try:
        nlabels = len(header["labels"])
        dim_d = int(header["dim_d"])
        dtype = np.dtype(header["dtype"])
    except (TypeError, ValueError) as err:
        raise ModelFormatError("bad model header in {}: {}".format(filename, err))

    body = np.frombuffer(data[10 + hlen :], dtype="<f4")
    if body.size != nlabels * dim_d:
        raise ModelFormatError(
            "{} holds {} values, expected {} x {}".format(
                filename, body.size, nlabels, dim_d
            )
        )

    vectors = body.reshape(nlabels, dim_d).astype(dtype)
    model = ClassModel(
        header["labels"],
        vectors,
        learning_rate=header["learning_rate"],
        encoder_fingerprint=header["encoder_fingerprint"],
        epoch_log=header["epoch_log"],
    )
    return model, header
