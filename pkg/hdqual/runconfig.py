"""
Run configuration of the command-line tool.

A run is described by an INI-style key/value file read with
:mod:`configobj` and checked against :data:`CONFIGSPEC` (types, bounds
and defaults). Every value can be overridden from the command line; the
effective configuration, including the seeds derived for each subsystem,
is written to the output directory as ``run.ini`` so that the run can be
repeated from that file alone.

Example::

    seed = 42
    output = out

    [data]
    manifest = recordings/manifest.json   # empty: synthetic data
    channels = 8

    [encoder]
    dim = 10000
    mode = nonlinear

All randomness derives from the root ``seed``: a
``numpy.random.SeedSequence`` is spawned once per subsystem in the order
of :data:`hdqual.config.SEED_STREAMS`.
"""

import logging
import os
from collections import OrderedDict

import numpy as np
from configobj import ConfigObj, ConfigObjError, flatten_errors

try:
    from configobj.validate import Validator
except ImportError:
    from validate import Validator

from . import config
from .errors import ConfigError

__all__ = [
    "CONFIGSPEC", "load_run_config", "derive_seeds", "run_seeds", "write_run_config",
]

log = logging.getLogger(__name__)

CONFIGSPEC = """
seed = integer(min=0, default={seed})
output = string(default="out")

[data]
manifest = string(default="")
channels = integer(min=1, default={channels})
samples = integer(min=1, default={samples})
parts_per_class = integer(min=1, default={parts})
noise = float(min=0, default={noise})
sample_rate = float(min=0, default={rate})
features = string_list(default=list({features}))
ddof = integer(min=0, max=1, default={ddof})
feature = string(default="")

[window]
n = integer(min=1, default={window})

[encoder]
dim = integer(min=1, default={dim})
mode = option("linear", "nonlinear", default="{mode}")
dtype = option("float32", "float64", default="{dtype}")

[train]
learning_rate = float(min=0, default={eta})
max_epochs = integer(min=1, default={epochs})
patience = integer(min=0, default={patience})
normalize = boolean(default=True)
runs = integer(min=1, default=1)

[split]
train_fraction = float(min=0, max=1, default={fraction})

[metering]
source = option("constant_power", "trace", "platform_counter", default="constant_power")
watts = float(min=0, default={watts})
trace_file = string(default="")
sampling_interval = float(min=0, default={interval})

[bench]
repetitions = integer(min=1, default={reps})
mlp_hidden = int_list(default=list({hidden}))
mlp_activation = option("relu", "tanh", default="{activation}")
mlp_epochs = integer(min=1, default={mlp_epochs})
mlp_batch_size = integer(min=1, default={mlp_batch})
mlp_learning_rate = float(min=0, default={mlp_lr})
""".format(
    seed=config.DEFAULT_ROOT_SEED,
    channels=config.SYNTH_CHANNELS,
    samples=config.SYNTH_SAMPLES,
    parts=config.SYNTH_PARTS_PER_CLASS,
    noise=config.SYNTH_NOISE,
    rate=config.DEFAULT_SAMPLE_RATE_HZ,
    features=", ".join('"{}"'.format(f) for f in config.SYNTH_FEATURES),
    ddof=config.DEFAULT_DDOF,
    window=config.DEFAULT_WINDOW,
    dim=config.DEFAULT_DIMENSION,
    mode=config.DEFAULT_ENCODER_MODE,
    dtype=config.DEFAULT_DTYPE,
    eta=config.DEFAULT_LEARNING_RATE,
    epochs=config.DEFAULT_MAX_EPOCHS,
    patience=config.DEFAULT_PATIENCE,
    fraction=config.DEFAULT_TRAIN_FRACTION,
    watts=config.DEFAULT_POWER_WATTS,
    interval=config.DEFAULT_SAMPLING_INTERVAL,
    reps=config.DEFAULT_REPETITIONS,
    hidden=", ".join(str(h) for h in config.MLP_HIDDEN),
    activation=config.MLP_ACTIVATION,
    mlp_epochs=config.MLP_EPOCHS,
    mlp_batch=config.MLP_BATCH_SIZE,
    mlp_lr=config.MLP_LEARNING_RATE,
).splitlines()


def load_run_config(filename=None, overrides=None):
    """
    Read (or default) a run configuration and apply overrides.

    Parameters
    ----------
    filename: str
        configuration file, or None for all defaults
    overrides: dict
        ``{"section.key": value}`` (or ``{"key": value}`` for top-level
        keys), typically from command-line flags; values win over the file

    Returns
    -------
    configobj.ConfigObj
        validated configuration with a ``seeds`` section added
    """
    if filename is not None and not os.path.exists(filename):
        raise ConfigError("configuration file not found: {}".format(filename))

    try:
        cfg = ConfigObj(filename, configspec=CONFIGSPEC, file_error=False)
    except ConfigObjError as err:
        raise ConfigError("cannot parse {}: {}".format(filename, err))

    for key, value in (overrides or {}).items():
        if value is None:
            continue
        section, _, name = key.rpartition(".")
        target = cfg
        if section:
            target = cfg.setdefault(section, {})
        target[name] = value

    result = cfg.validate(Validator(), preserve_errors=True, copy=True)
    if result is not True:
        problems = []
        for sections, key, error in flatten_errors(cfg, result):
            where = ".".join(list(sections) + [key or "<section>"])
            problems.append("{}: {}".format(where, error or "missing"))
        raise ConfigError("invalid configuration: " + "; ".join(problems))

    if cfg["data"]["manifest"] and not os.path.exists(cfg["data"]["manifest"]):
        raise ConfigError("manifest not found: {}".format(cfg["data"]["manifest"]))
    if cfg["metering"]["source"] == "trace":
        trace_file = cfg["metering"]["trace_file"]
        if not trace_file or not os.path.exists(trace_file):
            raise ConfigError("trace file not found: '{}'".format(trace_file))
    if not 0 < cfg["split"]["train_fraction"] < 1:
        raise ConfigError("split.train_fraction must be strictly between 0 and 1")
    if not cfg["train"]["learning_rate"] > 0:
        raise ConfigError("train.learning_rate must be > 0")

    cfg["seeds"] = derive_seeds(cfg["seed"])
    return cfg


def derive_seeds(root_seed, streams=config.SEED_STREAMS):
    """ one 64-bit seed per named subsystem, spawned from the root seed """
    children = np.random.SeedSequence(int(root_seed)).spawn(len(streams))
    return OrderedDict(
        (name, int(child.generate_state(1, dtype=np.uint64)[0]))
        for name, child in zip(streams, children)
    )


def run_seeds(root_seed, run, streams=config.SEED_STREAMS):
    """
    Seeds of repetition ``run`` of a multi-run training. Run 0 uses the
    seeds of the root seed itself; later runs spawn their own root from
    ``(root_seed, run)``.
    """
    if run == 0:
        return derive_seeds(root_seed, streams)
    state = np.random.SeedSequence([int(root_seed), int(run)]).generate_state(
        1, dtype=np.uint64
    )
    return derive_seeds(int(state[0]), streams)


def write_run_config(cfg, out_dir, filename="run.ini"):
    """ copy the effective configuration into the output directory """
    path = os.path.join(out_dir, filename)
    out = ConfigObj(cfg.dict())
    out.filename = path
    out.initial_comment = ["effective hdqual run configuration"]
    out.write()
    return path
