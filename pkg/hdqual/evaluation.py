"""
Classification quality: confusion matrix, accuracy, precision, recall
and F1-score (per class and macro averaged).

Metrics report
--------------
:meth:`Metrics.to_dict` gives the JSON report::

    {
      "labels": ["low", "average", "high"],
      "n_samples": 144,
      "accuracy": 0.97,
      "precision": {"low": ..., "average": ..., "high": ...},
      "recall": {...},
      "f1": {...},
      "macro": {"precision": ..., "recall": ..., "f1": ...},
      "averaging": "macro",
      "confusion": [[...], [...], [...]],
      "zero_division": ["precision:high", ...]
    }

Rows of ``confusion`` are true labels, columns predicted labels.
Precision, recall or F1 with an empty denominator are reported as 0 and
listed in ``zero_division``.
"""

import logging
from collections import OrderedDict

import colorama
import numpy as np

from . import config
from .errors import EmptyDatasetError, ModelEncoderMismatchError, UnknownClassError
from .hdspace import encode_batch
from .model import predict_batch

__all__ = [
    "ConfusionMatrix",
    "Metrics",
    "confusion_matrix",
    "metrics_from_confusion",
    "evaluate",
    "evaluate_by_feature",
    "summarize_runs",
]

log = logging.getLogger(__name__)


class ConfusionMatrix(object):

    """ counts[true, predicted] in a fixed label order """

    def __init__(self, counts, labels=config.LABELS):
        self.counts = np.asarray(counts, dtype=np.int64)
        self.labels = list(labels)

    @property
    def total(self):
        return int(self.counts.sum())

    def __repr__(self):
        return "ConfusionMatrix({}, {})".format(self.labels, self.counts.tolist())


class Metrics(object):

    """ accuracy plus per-class and macro precision, recall and F1 """

    def __init__(self, labels, n_samples, accuracy, precision, recall, f1,
                 zero_division, confusion):
        self.labels = list(labels)
        self.n_samples = n_samples
        self.accuracy = accuracy
        self.precision = precision
        self.recall = recall
        self.f1 = f1
        self.zero_division = zero_division
        self.confusion = confusion

    @property
    def macro_precision(self):
        return float(np.mean(self.precision))

    @property
    def macro_recall(self):
        return float(np.mean(self.recall))

    @property
    def macro_f1(self):
        return float(np.mean(self.f1))

    def to_dict(self):
        def _per_class(values):
            return OrderedDict(zip(self.labels, [float(v) for v in values]))

        return OrderedDict(
            labels=self.labels,
            n_samples=int(self.n_samples),
            accuracy=float(self.accuracy),
            precision=_per_class(self.precision),
            recall=_per_class(self.recall),
            f1=_per_class(self.f1),
            macro=OrderedDict(
                precision=self.macro_precision,
                recall=self.macro_recall,
                f1=self.macro_f1,
            ),
            averaging="macro",
            confusion=self.confusion.counts.tolist(),
            zero_division=list(self.zero_division),
        )

    def printSummary(self, title="Classification summary"):
        """ print the metrics as a text table """
        line = "{clr}{label:10s} {p:9.3f} {r:9.3f} {f:9.3f} {n:7d}" + colorama.Fore.RESET
        support = self.confusion.counts.sum(axis=1)

        print(title)
        print("class      precision    recall        f1 support")
        print("-" * 48)
        for ii, label in enumerate(self.labels):
            clr = ""
            if self.f1[ii] < 0.5:
                clr = colorama.Fore.RED
            elif self.f1[ii] < 0.9:
                clr = colorama.Fore.YELLOW
            print(
                line.format(
                    clr=clr, label=label, p=self.precision[ii], r=self.recall[ii],
                    f=self.f1[ii], n=int(support[ii]),
                )
            )
        print("-" * 48)
        print(
            "{:10s} {:9.3f} {:9.3f} {:9.3f} {:7d}".format(
                "macro", self.macro_precision, self.macro_recall, self.macro_f1,
                self.n_samples,
            )
        )
        print("accuracy: {:.4f}".format(self.accuracy))
        if self.zero_division:
            print("zero division (reported as 0): " + ", ".join(self.zero_division))


def confusion_matrix(true_labels, predicted_labels, labels=config.LABELS):
    """ count (true, predicted) label pairs """
    index = {label: ii for ii, label in enumerate(labels)}
    counts = np.zeros((len(labels), len(labels)), dtype=np.int64)
    try:
        rows = [index[label] for label in true_labels]
        cols = [index[label] for label in predicted_labels]
    except KeyError as err:
        raise UnknownClassError("label {} is not in {}".format(err, list(labels)))
    np.add.at(counts, (rows, cols), 1)
    return ConfusionMatrix(counts, labels)


def _safe_ratio(numer, denom, name, labels, flags):
    out = np.zeros(len(labels))
    for ii, label in enumerate(labels):
        if denom[ii] > 0:
            out[ii] = numer[ii] / denom[ii]
        else:
            flags.append("{}:{}".format(name, label))
    return out


def metrics_from_confusion(cm):
    """ derive :class:`Metrics` from a :class:`ConfusionMatrix` """
    counts = cm.counts.astype(np.float64)
    total = counts.sum()
    if total == 0:
        raise EmptyDatasetError("confusion matrix is empty")

    tp = np.diag(counts)
    flags = []
    precision = _safe_ratio(tp, counts.sum(axis=0), "precision", cm.labels, flags)
    recall = _safe_ratio(tp, counts.sum(axis=1), "recall", cm.labels, flags)
    f1 = _safe_ratio(
        2.0 * precision * recall, precision + recall, "f1", cm.labels, flags
    )

    return Metrics(cm.labels, int(total), float(tp.sum() / total), precision,
                   recall, f1, flags, cm)


def _predict(model, enc, test):
    if len(test) == 0:
        raise EmptyDatasetError("empty test set")
    if model.encoder_fingerprint != enc.fingerprint:
        raise ModelEncoderMismatchError(
            "model was trained with encoder {}..., got {}...".format(
                str(model.encoder_fingerprint)[:12], enc.fingerprint[:12]
            )
        )
    return predict_batch(model, encode_batch(enc, test.samples))


def evaluate(model, enc, test, labels=config.LABELS):
    """
    Encode and classify every test sample and compute the metrics.

    Parameters
    ----------
    model: ClassModel
    enc: Encoder
        must be the encoder the model was trained with
    test: LabeledDataset

    Returns
    -------
    (ConfusionMatrix, Metrics)
    """
    predicted = _predict(model, enc, test)
    cm = confusion_matrix(test.labels, predicted, labels)
    metrics = metrics_from_confusion(cm)
    log.info(
        "evaluated %d samples: accuracy %.4f, macro F1 %.4f",
        len(test), metrics.accuracy, metrics.macro_f1,
    )
    return cm, metrics


def evaluate_by_feature(model, enc, test, labels=config.LABELS):
    """
    Metrics of the test windows of every feature id (e.g. counterbore,
    radius) separately, in order of first appearance.

    Returns
    -------
    OrderedDict
        feature id -> Metrics
    """
    predicted = np.asarray(_predict(model, enc, test))
    truth = np.asarray(test.labels)
    features = np.array([prov[1] for prov in test.provenance])

    result = OrderedDict()
    for feature_id in OrderedDict.fromkeys(features.tolist()):
        mask = features == feature_id
        cm = confusion_matrix(truth[mask].tolist(), predicted[mask].tolist(), labels)
        result[feature_id] = metrics_from_confusion(cm)
        log.info("feature %s: accuracy %.4f on %d windows", feature_id,
                 result[feature_id].accuracy, int(mask.sum()))
    return result


def summarize_runs(runs):
    """
    Mean and standard deviation of accuracy and macro metrics over
    repeated runs (e.g. different seeds).
    """
    if len(runs) == 0:
        raise EmptyDatasetError("no runs to summarize")
    table = OrderedDict()
    for name in ("accuracy", "macro_precision", "macro_recall", "macro_f1"):
        values = np.array([getattr(run, name) for run in runs])
        table[name] = OrderedDict(
            mean=float(values.mean()),
            std=float(values.std(ddof=1)) if len(values) > 1 else 0.0,
        )
    table["runs"] = len(runs)
    return table
