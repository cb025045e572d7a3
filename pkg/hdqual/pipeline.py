"""
Signal pipeline: multi-channel recordings are cut into non-overlapping
n-gram windows, every window becomes one feature vector, parts are
labelled by z-scoring their measured geometric deviation, and the
resulting dataset is balanced and split.

Generally a dataset is built as follows:

 1) load recordings and deviations with :func:`load_recordings` (or make
    synthetic ones with :func:`gen_synthetic`)
 2) :func:`build_dataset` labels every part per feature with
    :func:`label_deviation` and windows every recording with :func:`window`
 3) :func:`balance` downsamples the classes to the minority count
 4) :func:`split` makes a stratified train/test split
 5) a :class:`ChannelScaler` fitted on the train part standardizes each
    channel of both parts

Recording files
---------------
One CSV file per part and feature, with header
``time,<channel_1>,...,<channel_k>`` and one row per sample at a fixed
sample rate. A JSON manifest lists them::

    {
      "format_version": 1,
      "sample_rate_hz": 500.0,
      "channels": ["load_x", "current_x", ...],
      "parts": [
        {"part_id": "P01", "feature_id": "counterbore",
         "file": "P01_counterbore.csv", "deviation_mm": 0.0312},
        ...
      ]
    }

File names are relative to the manifest.
"""

import json
import logging
import os
from collections import Counter, OrderedDict

import numpy as np
import pandas as pd
from scipy import stats

from . import config
from .errors import (
    DegenerateDistributionError,
    DimensionMismatchError,
    EmptyClassError,
    EmptyDatasetError,
    InvalidArgumentError,
    ManifestError,
    OutputPathError,
    StratificationError,
    WindowTooLongError,
)

__all__ = [
    "Recording",
    "WindowSpec",
    "LabeledDataset",
    "DeviationLabeling",
    "ChannelScaler",
    "window",
    "label_deviation",
    "balance",
    "split",
    "build_dataset",
    "select_feature",
    "gen_synthetic",
    "write_dataset",
    "read_manifest",
    "load_recordings",
]

log = logging.getLogger(__name__)

MANIFEST_VERSION = 1


class Recording(object):

    """Equal-length time series of one part and feature.

    Parameters
    ----------
    channel_names: list of str
        channel order, also the block order inside feature vectors
    data: array, shape (channels, T)
        samples, one row per channel
    sample_rate: float
        samples per second
    part_id, feature_id: str
        identifiers of the machined part and the measured feature
    """

    def __init__(self, channel_names, data, sample_rate=config.DEFAULT_SAMPLE_RATE_HZ,
                 part_id="", feature_id=""):
        data = np.array(data, dtype=np.float64, ndmin=2)
        if len(channel_names) < 1 or data.shape[0] != len(channel_names):
            raise DimensionMismatchError(
                "{} channel names for {} channels".format(
                    len(channel_names), data.shape[0]
                )
            )
        if not sample_rate > 0:
            raise InvalidArgumentError("sample rate must be > 0")
        self.channel_names = list(channel_names)
        self.data = data
        self.sample_rate = float(sample_rate)
        self.part_id = part_id
        self.feature_id = feature_id

    @property
    def length(self):
        return self.data.shape[1]

    def reordered(self, channel_names):
        """ the same recording with the channels in another order """
        rows = [self.channel_names.index(name) for name in channel_names]
        return Recording(channel_names, self.data[rows], self.sample_rate,
                         self.part_id, self.feature_id)

    def __repr__(self):
        return "Recording({}/{}, {} channels x {} samples)".format(
            self.part_id, self.feature_id, len(self.channel_names), self.length
        )


class WindowSpec(object):

    """ length ``n`` (samples) of the non-overlapping windows """

    def __init__(self, n=config.DEFAULT_WINDOW):
        if int(n) < 1:
            raise InvalidArgumentError("window length must be >= 1")
        self.n = int(n)


class LabeledDataset(object):

    """Feature vectors with quality labels and their provenance.

    Parameters
    ----------
    samples: array, shape (N, m)
        one feature vector per row
    labels: list of str
    provenance: list of (part_id, feature_id, window_index)
    channel_count: int
        number of channel blocks in each feature vector
    """

    def __init__(self, samples, labels, provenance=None, channel_count=1):
        samples = np.array(samples, dtype=np.float64, ndmin=2)
        labels = list(labels)
        if samples.shape[0] != len(labels):
            raise DimensionMismatchError(
                "{} samples but {} labels".format(samples.shape[0], len(labels))
            )
        if provenance is None:
            provenance = [("", "", ii) for ii in range(len(labels))]
        self.samples = samples
        self.labels = labels
        self.provenance = [tuple(p) for p in provenance]
        self.channel_count = int(channel_count)

    def __len__(self):
        return len(self.labels)

    @property
    def dim_m(self):
        return self.samples.shape[1]

    def class_counts(self):
        """ ordered map label -> number of samples """
        counts = Counter(self.labels)
        return OrderedDict(
            (label, counts[label]) for label in _label_order(self.labels)
        )

    def subset(self, indices):
        indices = list(indices)
        return LabeledDataset(
            self.samples[indices],
            [self.labels[ii] for ii in indices],
            [self.provenance[ii] for ii in indices],
            self.channel_count,
        )

    def pairs(self):
        """ (feature vector, label) pairs """
        return list(zip(self.samples, self.labels))


def _label_order(labels):
    present = set(labels)
    order = [label for label in config.LABELS if label in present]
    order += sorted(present - set(order))
    return order


class DeviationLabeling(object):

    """ z-scores and quality categories of a set of part deviations """

    def __init__(self, deviations, mean, std, z_scores, categories):
        self.deviations = deviations
        self.mean = mean
        self.std = std
        self.z_scores = z_scores
        self.categories = categories


def window(rec, spec):
    """
    Cut a recording into ``floor(T/n)`` non-overlapping windows. Window
    ``k`` covers samples ``[k n, (k+1) n)`` of every channel; the feature
    vector is the concatenation of the channel windows in channel order.
    Trailing samples that do not fill a window are dropped.

    Returns
    -------
    array, shape (floor(T/n), n * channels)
    """
    nchan, length = rec.data.shape
    n = spec.n
    if n > length:
        raise WindowTooLongError(
            "window of {} samples is longer than the recording ({})".format(
                n, length
            )
        )
    nwin = length // n
    blocks = rec.data[:, : nwin * n].reshape(nchan, nwin, n)
    return blocks.transpose(1, 0, 2).reshape(nwin, nchan * n)


def label_deviation(deviations, ddof=config.DEFAULT_DDOF):
    """
    Convert part deviations (mm) to quality categories: z below -1 is
    "low", z above +1 is "high", everything in [-1, 1] is "average".

    Parameters
    ----------
    deviations: array
        one measured deviation per part
    ddof: int
        0 for the population standard deviation (default), 1 for the
        sample standard deviation

    Returns
    -------
    DeviationLabeling
    """
    x = np.asarray(deviations, dtype=np.float64).ravel()
    if x.size < 2:
        raise DegenerateDistributionError("need at least 2 parts to z-score")
    std = float(np.std(x, ddof=ddof))
    # rounding leaves a tiny nonzero std for constant input
    if (np.ptp(x) == 0.0 or not np.isfinite(std)
            or std <= np.finfo(np.float64).eps * max(abs(float(np.mean(x))), 1.0)):
        raise DegenerateDistributionError(
            "deviations have zero spread, z-scores are undefined"
        )

    z = stats.zscore(x, ddof=ddof)
    if not np.all(np.isfinite(z)):
        raise DegenerateDistributionError("deviations give non-finite z-scores")
    low, high = config.LABELS[0], config.LABELS[2]
    categories = np.where(
        z < config.Z_LOW, low, np.where(z > config.Z_HIGH, high, config.LABELS[1])
    )
    return DeviationLabeling(
        x, float(np.mean(x)), std, z, [str(c) for c in categories]
    )


def balance(ds, seed):
    """
    Downsample every class to the size of the smallest one (seeded,
    without replacement). Samples keep their original order. Each of
    the standard quality labels must be present.
    """
    present = ds.class_counts()
    counts = OrderedDict(
        (label, present.get(label, 0))
        for label in _label_order(list(config.LABELS) + ds.labels)
    )
    if len(ds) == 0 or any(count == 0 for count in counts.values()):
        raise EmptyClassError("cannot balance a dataset with an empty class")

    nmin = min(counts.values())
    rng = np.random.Generator(np.random.PCG64(seed))
    labels = np.array(ds.labels)

    keep = []
    for label in counts:
        idx = np.flatnonzero(labels == label)
        keep.extend(rng.choice(idx, size=nmin, replace=False))

    log.debug("balanced %s to %d per class", dict(counts), nmin)
    return ds.subset(sorted(keep))


def split(ds, train_fraction=config.DEFAULT_TRAIN_FRACTION, seed=0):
    """
    Stratified train/test split. Each class is shuffled (seeded) and
    ``round(train_fraction * count)`` of its samples go to the train set,
    but at least one sample stays on each side.

    Returns
    -------
    (LabeledDataset, LabeledDataset)
        train and test sets
    """
    if not 0.0 < train_fraction < 1.0:
        raise InvalidArgumentError("train fraction must be in (0, 1)")
    if len(ds) == 0:
        raise EmptyDatasetError("cannot split an empty dataset")

    rng = np.random.Generator(np.random.PCG64(seed))
    labels = np.array(ds.labels)
    train, test = [], []

    for label, count in ds.class_counts().items():
        if count < 2:
            raise StratificationError(
                "class '{}' has {} sample(s), at least 2 are needed".format(
                    label, count
                )
            )
        idx = rng.permutation(np.flatnonzero(labels == label))
        ntrain = int(np.floor(train_fraction * count + 0.5))
        ntrain = min(max(ntrain, 1), count - 1)
        train.extend(idx[:ntrain])
        test.extend(idx[ntrain:])

    return ds.subset(sorted(train)), ds.subset(sorted(test))


class ChannelScaler(object):

    """Per-channel standardization of feature vectors. The statistics
    come from the training set and are applied unchanged to any other
    data."""

    def __init__(self, mean=None, std=None):
        self.mean = None if mean is None else np.asarray(mean, dtype=np.float64)
        self.std = None if std is None else np.asarray(std, dtype=np.float64)

    def _blocks(self, samples, channel_count):
        samples = np.asarray(samples, dtype=np.float64)
        if samples.shape[1] % channel_count:
            raise DimensionMismatchError(
                "feature length {} is not a multiple of {} channels".format(
                    samples.shape[1], channel_count
                )
            )
        return samples.reshape(samples.shape[0], channel_count, -1)

    def fit(self, ds):
        blocks = self._blocks(ds.samples, ds.channel_count)
        self.mean = blocks.mean(axis=(0, 2))
        std = blocks.std(axis=(0, 2))
        std[std == 0.0] = 1.0
        self.std = std
        return self

    def transform(self, ds):
        if self.mean is None:
            raise RuntimeError("ChannelScaler used before fit()")
        if len(self.mean) != ds.channel_count:
            raise DimensionMismatchError(
                "scaler has {} channels, dataset {}".format(
                    len(self.mean), ds.channel_count
                )
            )
        blocks = self._blocks(ds.samples, ds.channel_count)
        scaled = (blocks - self.mean[:, None]) / self.std[:, None]
        return LabeledDataset(
            scaled.reshape(len(ds), -1), ds.labels, ds.provenance, ds.channel_count
        )

    def to_dict(self):
        return dict(mean=self.mean.tolist(), std=self.std.tolist())

    @classmethod
    def from_dict(cls, values):
        return cls(values["mean"], values["std"])


def build_dataset(recordings, deviations, spec, ddof=config.DEFAULT_DDOF):
    """
    Label and window recordings.

    Deviations are z-scored separately for every feature id (across all
    parts of that feature), then every recording is windowed and each
    window inherits the label of its part.

    Parameters
    ----------
    recordings: list of Recording
    deviations: list of float
        measured deviation (mm) of each recording's part and feature
    spec: WindowSpec

    Returns
    -------
    LabeledDataset
    """
    if len(recordings) == 0:
        raise EmptyDatasetError("no recordings given")
    if len(recordings) != len(deviations):
        raise DimensionMismatchError(
            "{} recordings but {} deviations".format(len(recordings), len(deviations))
        )

    channels = recordings[0].channel_names
    labels = [None] * len(recordings)
    by_feature = OrderedDict()
    for ii, rec in enumerate(recordings):
        if rec.channel_names != channels:
            raise DimensionMismatchError(
                "recording {} has channels {}, expected {}".format(
                    rec.part_id, rec.channel_names, channels
                )
            )
        by_feature.setdefault(rec.feature_id, []).append(ii)

    for feature_id, idx in by_feature.items():
        labeling = label_deviation([deviations[ii] for ii in idx], ddof=ddof)
        for ii, category in zip(idx, labeling.categories):
            labels[ii] = category
        log.debug(
            "feature %s: mean %.4g mm, std %.4g mm, %s",
            feature_id, labeling.mean, labeling.std, dict(Counter(labeling.categories)),
        )

    samples, sample_labels, provenance = [], [], []
    for rec, label in zip(recordings, labels):
        vectors = window(rec, spec)
        samples.append(vectors)
        sample_labels.extend([label] * len(vectors))
        provenance.extend(
            (rec.part_id, rec.feature_id, k) for k in range(len(vectors))
        )

    ds = LabeledDataset(np.vstack(samples), sample_labels, provenance, len(channels))
    log.info(
        "built dataset: %d windows of length %d from %d recordings %s",
        len(ds), ds.dim_m, len(recordings), dict(ds.class_counts()),
    )
    return ds


def select_feature(recordings, deviations, feature_id):
    """ keep only the recordings (and deviations) of one feature id """
    keep = [ii for ii, rec in enumerate(recordings) if rec.feature_id == feature_id]
    if not keep:
        raise EmptyDatasetError(
            "no recordings of feature '{}' (have {})".format(
                feature_id, sorted(set(rec.feature_id for rec in recordings))
            )
        )
    return [recordings[ii] for ii in keep], [deviations[ii] for ii in keep]


# ============================================================================
# synthetic recordings
# ============================================================================


def _template(class_index, channel, feature_index, t, duration):
    """ deterministic signal shape of one class and channel """
    freq = 2.0 + 3.0 * class_index + 1.5 * channel + 0.7 * feature_index
    phase = 0.4 * channel + 1.1 * feature_index
    slope = 0.5 * (class_index - 1)
    return np.sin(2.0 * np.pi * freq * t + phase) + slope * t / duration


def gen_synthetic(channels=config.SYNTH_CHANNELS, samples=config.SYNTH_SAMPLES,
                  noise_sigma=config.SYNTH_NOISE, seed=0,
                  parts_per_class=config.SYNTH_PARTS_PER_CLASS,
                  features=config.SYNTH_FEATURES, classes=config.LABELS,
                  sample_rate=config.DEFAULT_SAMPLE_RATE_HZ):
    """
    Generate recordings of a separable three-class problem.

    Every class has its own deterministic template per channel (distinct
    frequency and trend) to which Gaussian noise of scale
    ``noise_sigma`` is added. Part deviations are drawn around three
    well separated centres so that z-score binning gives back the
    intended class of each part.

    Returns
    -------
    (list of Recording, list of float)
        recordings and the deviation (mm) of each one
    """
    if int(channels) < 1 or int(samples) < 1 or int(parts_per_class) < 1:
        raise InvalidArgumentError("channels, samples and parts must be >= 1")
    if noise_sigma < 0:
        raise InvalidArgumentError("noise sigma must be >= 0")
    if tuple(classes) != tuple(config.LABELS):
        raise InvalidArgumentError("classes must be {}".format(config.LABELS))

    noise_seq, dev_seq = np.random.SeedSequence(int(seed)).spawn(2)
    noise_rng = np.random.Generator(np.random.PCG64(noise_seq))
    dev_rng = np.random.Generator(np.random.PCG64(dev_seq))

    nclass = len(classes)
    nparts = nclass * parts_per_class
    channel_names = ["ch{:02d}".format(c) for c in range(channels)]
    t = np.arange(samples) / float(sample_rate)
    duration = samples / float(sample_rate)

    recordings, deviations = [], []
    for ifeat, feature_id in enumerate(features):
        templates = [
            np.array([_template(k, c, ifeat, t, duration) for c in range(channels)])
            for k in range(nclass)
        ]
        # parts change class from one feature to the next
        part_class = [(p // parts_per_class + ifeat) % nclass for p in range(nparts)]
        centres = np.array(part_class, dtype=np.float64) - 1.0
        jitter = dev_rng.uniform(-1.0, 1.0, size=nparts) * config.SYNTH_DEVIATION_JITTER
        devs = config.SYNTH_NOMINAL_DEVIATION_MM + config.SYNTH_DEVIATION_SPREAD_MM * (
            centres + jitter
        )

        labeling = label_deviation(devs)
        expected = [classes[k] for k in part_class]
        if labeling.categories != expected:
            raise RuntimeError("synthetic deviations do not reproduce their classes")

        for p in range(nparts):
            data = templates[part_class[p]]
            if noise_sigma > 0:
                data = data + noise_rng.normal(0.0, noise_sigma, size=data.shape)
            recordings.append(
                Recording(channel_names, data.copy(), sample_rate,
                          part_id="P{:02d}".format(p + 1), feature_id=feature_id)
            )
            deviations.append(float(devs[p]))

    log.info(
        "generated %d synthetic recordings (%d parts, %d features, noise %g)",
        len(recordings), nparts, len(features), noise_sigma,
    )
    return recordings, deviations


# ============================================================================
# recording files
# ============================================================================


def write_dataset(out_dir, recordings, deviations):
    """
    Write recordings as CSV files plus ``manifest.json`` into ``out_dir``.
    Returns the manifest path.
    """
    try:
        os.makedirs(out_dir, exist_ok=True)
    except OSError as err:
        raise OutputPathError("cannot create {}: {}".format(out_dir, err))

    parts = []
    for rec, dev in zip(recordings, deviations):
        filename = "{}_{}.csv".format(rec.part_id, rec.feature_id)
        frame = pd.DataFrame(
            OrderedDict(
                [("time", np.arange(rec.length) / rec.sample_rate)]
                + list(zip(rec.channel_names, rec.data))
            )
        )
        path = os.path.join(out_dir, filename)
        try:
            frame.to_csv(path, index=False, float_format="%.10g")
        except OSError as err:
            raise OutputPathError("cannot write {}: {}".format(path, err))
        parts.append(
            OrderedDict(
                part_id=rec.part_id,
                feature_id=rec.feature_id,
                file=filename,
                deviation_mm=float(dev),
            )
        )

    manifest = OrderedDict(
        format_version=MANIFEST_VERSION,
        sample_rate_hz=recordings[0].sample_rate,
        channels=recordings[0].channel_names,
        parts=parts,
    )
    path = os.path.join(out_dir, "manifest.json")
    with open(path, "w") as outfile:
        json.dump(manifest, outfile, indent=2, sort_keys=True)
        outfile.write("\n")

    log.info("wrote %d recordings and %s", len(parts), path)
    return path


_MANIFEST_KEYS = ("format_version", "sample_rate_hz", "channels", "parts")
_PART_KEYS = ("part_id", "feature_id", "file", "deviation_mm")


def read_manifest(path):
    """ read and check a recording manifest """
    if not os.path.exists(path):
        raise ManifestError("manifest not found: {}".format(path))
    try:
        with open(path) as infile:
            manifest = json.load(infile)
    except ValueError as err:
        raise ManifestError("manifest {} is not valid JSON: {}".format(path, err))

    for key in _MANIFEST_KEYS:
        if key not in manifest:
            raise ManifestError("manifest {} lacks '{}'".format(path, key))
    if manifest["format_version"] != MANIFEST_VERSION:
        raise ManifestError(
            "manifest {} has unsupported version {}".format(
                path, manifest["format_version"]
            )
        )
    if len(manifest["channels"]) < 1 or len(manifest["parts"]) < 1:
        raise ManifestError("manifest {} lists no channels or parts".format(path))
    for ii, part in enumerate(manifest["parts"]):
        for key in _PART_KEYS:
            if key not in part:
                raise ManifestError(
                    "manifest {}: part #{} lacks '{}'".format(path, ii, key)
                )
    return manifest


def load_recordings(manifest_path):
    """
    Load every recording listed in a manifest.

    Returns
    -------
    (list of Recording, list of float)
        recordings and their deviations (mm)
    """
    manifest = read_manifest(manifest_path)
    basedir = os.path.dirname(os.path.abspath(manifest_path))
    channels = list(manifest["channels"])
    expected = ["time"] + channels

    recordings, deviations = [], []
    for part in manifest["parts"]:
        path = os.path.join(basedir, part["file"])
        if not os.path.exists(path):
            raise ManifestError("recording not found: {}".format(path))
        frame = pd.read_csv(path)
        if list(frame.columns) != expected:
            raise ManifestError(
                "{} has columns {}, expected {}".format(
                    path, list(frame.columns), expected
                )
            )
        recordings.append(
            Recording(channels, frame[channels].to_numpy(dtype=np.float64).T,
                      manifest["sample_rate_hz"], part["part_id"], part["feature_id"])
        )
        deviations.append(float(part["deviation_mm"]))

    log.info("loaded %d recordings from %s", len(recordings), manifest_path)
    return recordings, deviations
