"""Hyperdimensional quality classification of machining sensor data

This package classifies the geometric quality of machined parts (low,
average or high deviation) from multi-channel sensor recordings with
hyperdimensional computing (HDC), and measures what that costs in time
and energy compared with a gradient-trained neural network.

Generally a run proceeds as follows:

 1) load recordings with :func:`pipeline.load_recordings` (or make
    synthetic ones with :func:`pipeline.gen_synthetic`) and turn them into
    a labelled, balanced and split dataset of windows
 2) create a seeded :class:`hdspace.Encoder` with
    :func:`hdspace.generate_basis` and encode every window into a
    hypervector
 3) train class hypervectors with :func:`model.fit` and classify with
    :func:`model.predict`
 4) compute the confusion matrix and metrics with :func:`evaluation.evaluate`
 5) wrap any of the above in :func:`metering.measure` or
    :func:`metering.compare` to get duration and energy, and scale the
    energy per inference to a whole fleet with :mod:`projection`

The command-line tool ``hdqual`` (:mod:`hdqual.cli`) runs these steps from
a configuration file.
"""

from .errors import *
from .hdspace import *
from .model import *
from .pipeline import *
from .evaluation import *
from .metering import *
from .baseline import *
from .projection import *

__version__ = "0.1.0"
