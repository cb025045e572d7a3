"""
Time and energy metering of workloads.

A workload (any callable) is run under a power source; its duration is
taken from the monotonic clock and its energy is the integral of power
over that duration:

- :class:`ConstantPower`: a fixed wattage times the duration. This is
  the default, it is deterministic and works everywhere, but absolute
  joules are only as good as the wattage assumption.
- :class:`TracePower`: a power trace (timestamps relative to the start
  of the workload, watts) integrated with the trapezoid rule over the
  part of the trace that overlaps the workload.
- :class:`PlatformCounter`: the cumulative energy counter the Linux
  powercap interface exposes (``/sys/class/powercap/*/energy_uj``),
  sampled in a background thread. Only available on machines that
  provide it and allow reading it.

Only one measurement at a time may use a given power source.

Benchmark output
----------------
:meth:`ComparisonTable.to_jsonl` writes one JSON object per line:
``{"record": "repetition", "workload", "repetition", "duration_s",
"energy_j", "mean_power_w", "source_kind"}`` for every measured run,
followed by one ``{"record": "summary", "workload", "repetitions",
"duration_mean_s", "duration_std_s", "energy_mean_j", "energy_std_j",
"speedup", "energy_ratio", "reference", "std_flag", "disclaimer"}`` per
workload. Ratios are reference mean divided by workload mean, so a value
above 1 means the workload is faster (or cheaper) than the reference.
"""

import abc
import glob
import logging
import os
import threading
import time
from collections import OrderedDict

import colorama
import numpy as np
import pandas as pd
from scipy.integrate import trapezoid

from . import config
from .errors import (
    CapabilityUnavailableError,
    HdqualRuntimeError,
    InsufficientSamplesError,
    InvalidArgumentError,
)

__all__ = [
    "PowerSource",
    "ConstantPower",
    "TracePower",
    "PlatformCounter",
    "EnergyReport",
    "ComparisonTable",
    "integrate_trace",
    "measure",
    "compare",
    "make_power_source",
    "DISCLAIMER",
]

log = logging.getLogger(__name__)

DISCLAIMER = (
    "Energy figures are CPU-side estimates from the configured power source; "
    "they are not comparable to GPU-board measurements, which exclude CPU and "
    "host data-transfer overheads."
)


def integrate_trace(timestamps, watts, start, end):
    """
    Integrate a power trace over ``[start, end]`` with the trapezoid
    rule. The trace is clipped to the interval; the power at the clip
    points is linearly interpolated. Parts of the interval outside the
    trace are not counted.

    Returns
    -------
    (float, int)
        energy in joules and the number of trace samples inside the
        interval
    """
    t = np.asarray(timestamps, dtype=np.float64)
    p = np.asarray(watts, dtype=np.float64)
    if len(t) < 2:
        raise InsufficientSamplesError("a power trace needs at least 2 samples")
    lo = max(start, t[0])
    hi = min(end, t[-1])
    if hi <= lo:
        raise InsufficientSamplesError(
            "power trace [{:.3f}, {:.3f}] s does not overlap [{:.3f}, {:.3f}] s".format(
                t[0], t[-1], start, end
            )
        )

    inside = (t > lo) & (t < hi)
    tt = np.concatenate([[lo], t[inside], [hi]])
    pp = np.interp(tt, t, p)
    return float(trapezoid(pp, tt)), int(np.count_nonzero((t >= lo) & (t <= hi)))


class PowerSource(object, metaclass=abc.ABCMeta):

    """abstract base class of power sources

    A source is started right before the workload and stopped right
    after it; :meth:`stop` returns the energy, the number of power
    samples used and the power trace (list of (seconds, watts)).
    """

    kind = None
    sampling_interval = None

    def __init__(self):
        self._lock = threading.Lock()
        self._owner = None

    def acquire(self):
        if self._owner == threading.get_ident():
            raise HdqualRuntimeError(
                "nested measurement on the same {} power source".format(self.kind)
            )
        self._lock.acquire()
        self._owner = threading.get_ident()

    def release(self):
        self._owner = None
        self._lock.release()

    def start(self):
        pass

    @abc.abstractmethod
    def stop(self, duration):
        """ end the measurement of a run that took ``duration`` seconds """

    def describe(self):
        return OrderedDict(kind=self.kind)


class ConstantPower(PowerSource):

    """ a fixed power draw in watts """

    kind = "constant_power"

    def __init__(self, watts=config.DEFAULT_POWER_WATTS):
        super(ConstantPower, self).__init__()
        if not watts >= 0:
            raise InvalidArgumentError("power must be >= 0 W")
        self.watts = float(watts)

    def stop(self, duration):
        trace = [(0.0, self.watts), (duration, self.watts)]
        return self.watts * duration, 0, trace

    def describe(self):
        return OrderedDict(kind=self.kind, watts=self.watts)


class TracePower(PowerSource):

    """A recorded power trace, replayed against every measurement.

    Parameters
    ----------
    timestamps: array
        seconds relative to the start of the workload, strictly increasing
    watts: array
        power at each timestamp (>= 0)
    """

    kind = "trace"

    def __init__(self, timestamps, watts, sampling_interval=None):
        super(TracePower, self).__init__()
        t = np.asarray(timestamps, dtype=np.float64)
        p = np.asarray(watts, dtype=np.float64)
        if t.shape != p.shape or t.ndim != 1 or len(t) < 2:
            raise InvalidArgumentError("a trace needs >= 2 (time, watts) samples")
        if np.any(np.diff(t) <= 0):
            raise InvalidArgumentError("trace timestamps must be strictly increasing")
        if np.any(p < 0):
            raise InvalidArgumentError("trace power must be >= 0 W")
        self.timestamps = t
        self.watts = p
        self.sampling_interval = sampling_interval

    @classmethod
    def from_csv(cls, filename):
        """ read a trace from a CSV file with columns ``time,watts`` """
        frame = pd.read_csv(filename)
        return cls(frame["time"].to_numpy(), frame["watts"].to_numpy())

    def stop(self, duration):
        energy, nsamples = integrate_trace(self.timestamps, self.watts, 0.0, duration)
        inside = self.timestamps <= duration
        trace = list(zip(self.timestamps[inside].tolist(), self.watts[inside].tolist()))
        return energy, nsamples, trace

    def describe(self):
        return OrderedDict(kind=self.kind, samples=len(self.timestamps))


class PlatformCounter(PowerSource):

    """Cumulative energy counter of the Linux powercap interface
    (e.g. Intel RAPL package domain). The counter is read at start and
    stop and every ``sampling_interval`` seconds in between; counter
    wraparound is handled with ``max_energy_range_uj``.

    The energy is the total counter increase; the per-interval power
    derived from the samples is kept as the trace.
    """

    kind = "platform_counter"

    def __init__(self, path=None, sampling_interval=config.DEFAULT_SAMPLING_INTERVAL):
        super(PlatformCounter, self).__init__()
        path = path or self.find_counter()
        if path is None or not self._readable(path):
            raise CapabilityUnavailableError(
                "no readable powercap energy counter under {}".format(
                    config.POWERCAP_ROOT
                )
            )
        self.path = path
        self.sampling_interval = float(sampling_interval)
        self.max_range = self._read_max_range(path)
        self._samples = []
        self._stop_event = None
        self._thread = None

    @staticmethod
    def find_counter(root=config.POWERCAP_ROOT):
        """ path of the first package-level energy_uj counter, or None """
        candidates = sorted(glob.glob(os.path.join(root, "*", "energy_uj")))
        return candidates[0] if candidates else None

    @staticmethod
    def _readable(path):
        try:
            with open(path) as infile:
                int(infile.read().strip())
            return True
        except (OSError, ValueError):
            return False

    @classmethod
    def available(cls, root=config.POWERCAP_ROOT):
        path = cls.find_counter(root)
        return path is not None and cls._readable(path)

    @staticmethod
    def _read_max_range(path):
        max_path = os.path.join(os.path.dirname(path), "max_energy_range_uj")
        try:
            with open(max_path) as infile:
                return int(infile.read().strip())
        except (OSError, ValueError):
            return 2 ** 32

    def _read(self):
        with open(self.path) as infile:
            return time.perf_counter(), int(infile.read().strip())

    def _sample_loop(self):
        while not self._stop_event.wait(self.sampling_interval):
            self._samples.append(self._read())

    def start(self):
        self._samples = [self._read()]
        self._stop_event = threading.Event()
        self._thread = threading.Thread(target=self._sample_loop, daemon=True)
        self._thread.start()

    def stop(self, duration):
        self._stop_event.set()
        self._thread.join()
        self._samples.append(self._read())

        t0 = self._samples[0][0]
        times = np.array([s[0] for s in self._samples]) - t0
        counts = np.array([s[1] for s in self._samples], dtype=np.float64)
        deltas = np.diff(counts)
        deltas[deltas < 0] += self.max_range  # wraparound
        joules = deltas * 1e-6
        dt = np.diff(times)
        with np.errstate(divide="ignore", invalid="ignore"):
            power = np.where(dt > 0, joules / dt, 0.0)
        mids = 0.5 * (times[1:] + times[:-1])
        return float(joules.sum()), len(self._samples), list(zip(mids.tolist(), power.tolist()))

    def describe(self):
        return OrderedDict(kind=self.kind, path=self.path,
                           sampling_interval=self.sampling_interval)


def make_power_source(kind="constant_power", watts=config.DEFAULT_POWER_WATTS,
                      trace_file=None, sampling_interval=config.DEFAULT_SAMPLING_INTERVAL,
                      fallback=True):
    """
    Build a power source by name ("constant_power", "trace" or
    "platform_counter"). If the platform counter is unavailable and
    ``fallback`` is set, a :class:`ConstantPower` source is returned
    instead (with a warning).
    """
    if kind in ("constant", "constant_power"):
        return ConstantPower(watts)
    if kind == "trace":
        if trace_file is None:
            raise InvalidArgumentError("the trace power source needs a trace file")
        return TracePower.from_csv(trace_file)
    if kind in ("platform", "platform_counter"):
        try:
            return PlatformCounter(sampling_interval=sampling_interval)
        except CapabilityUnavailableError as err:
            if not fallback:
                raise
            log.warning("%s, falling back to constant %.1f W", err, watts)
            return ConstantPower(watts)
    raise InvalidArgumentError("unknown power source '{}'".format(kind))


class EnergyReport(object):

    """ duration, energy and mean power of one measured run """

    def __init__(self, duration, energy, source_kind, samples_used=0, trace=None):
        self.duration = float(duration)
        self.energy = float(energy)
        self.source_kind = source_kind
        self.samples_used = int(samples_used)
        self.trace = list(trace or [])

    @property
    def mean_power(self):
        if self.duration > 0:
            return self.energy / self.duration
        return 0.0

    def __add__(self, other):
        return EnergyReport(self.duration + other.duration,
                            self.energy + other.energy, self.source_kind,
                            self.samples_used + other.samples_used)

    def to_dict(self, with_trace=False):
        out = OrderedDict(
            duration_s=self.duration,
            energy_j=self.energy,
            mean_power_w=self.mean_power,
            source_kind=self.source_kind,
            samples_used=self.samples_used,
        )
        if with_trace:
            out["trace"] = [list(point) for point in self.trace]
        return out

    def __repr__(self):
        return "EnergyReport({:.4f} s, {:.4f} J, {})".format(
            self.duration, self.energy, self.source_kind
        )


def measure(workload, src):
    """
    Run ``workload()`` under the power source ``src``.

    Returns
    -------
    (object, EnergyReport)
        the workload's return value, unchanged, and the energy report
    """
    src.acquire()
    try:
        src.start()
        t0 = time.perf_counter()
        try:
            result = workload()
        except BaseException:
            # the workload error wins over a failing source
            try:
                src.stop(time.perf_counter() - t0)
            except Exception:
                log.warning("could not stop the %s power source", src.kind,
                            exc_info=True)
            raise
        duration = time.perf_counter() - t0
        energy, nsamples, trace = src.stop(duration)
    finally:
        src.release()

    report = EnergyReport(duration, energy, src.kind, nsamples, trace)
    log.debug("measured %r", report)
    return result, report


class ComparisonTable(object):

    """Measured repetitions of several workloads and their summary.

    Attributes
    ----------
    records: pandas.DataFrame
        one row per (workload, repetition)
    summary: pandas.DataFrame
        one row per workload, indexed by workload name
    results: dict
        return value of the last run of every workload
    """

    def __init__(self, records, summary, reference, results=None,
                 disclaimer=DISCLAIMER):
        self.records = records
        self.summary = summary
        self.reference = reference
        self.results = results or {}
        self.disclaimer = disclaimer

    def to_jsonl(self, filename, mode="w"):
        """ write repetitions and summary as JSON lines (mode "a" appends) """
        records = self.records.assign(record="repetition")
        summary = self.summary.reset_index().assign(
            record="summary", disclaimer=self.disclaimer
        )
        with open(filename, mode) as outfile:
            for frame in (records, summary):
                text = frame.to_json(orient="records", lines=True)
                outfile.write(text if text.endswith("\n") else text + "\n")
        log.info("wrote benchmark records to %s", filename)

    def printSummary(self):
        """ print the per-workload means and ratios """
        line = (
            "{clr}{name:16s} {dur:10.4f} {dstd:9.4f} {en:11.4f} {estd:10.4f} "
            "{spd:8.2f} {ratio:8.2f}{flag}" + colorama.Fore.RESET
        )
        print("Benchmark against reference '{}'".format(self.reference))
        print(
            "workload          time (s)   std (s)  energy (J)    std (J) "
            " speedup  E-ratio"
        )
        print("-" * 80)
        for name, row in self.summary.iterrows():
            clr = colorama.Fore.GREEN if row["speedup"] > 1.0 else ""
            print(
                line.format(
                    clr=clr, name=name, dur=row["duration_mean_s"],
                    dstd=row["duration_std_s"], en=row["energy_mean_j"],
                    estd=row["energy_std_j"], spd=row["speedup"],
                    ratio=row["energy_ratio"],
                    flag="  (1 repetition, no std)" if row["std_flag"] else "",
                )
            )
        print("-" * 80)
        print(self.disclaimer)


def compare(workloads, src, repetitions=config.DEFAULT_REPETITIONS, reference=None,
            warmup=True):
    """
    Measure every workload ``repetitions`` times (after one discarded
    warm-up run) and compare their mean time and energy with those of
    the reference workload.

    Parameters
    ----------
    workloads: list of (name, callable) or dict
    src: PowerSource
    repetitions: int
    reference: str
        name of the reference workload (default: the first one)

    Returns
    -------
    ComparisonTable
    """
    if int(repetitions) < 1:
        raise InvalidArgumentError("repetitions must be >= 1")
    workloads = OrderedDict(workloads)
    if len(workloads) == 0:
        raise InvalidArgumentError("no workloads to compare")
    reference = reference or next(iter(workloads))
    if reference not in workloads:
        raise InvalidArgumentError("unknown reference workload '{}'".format(reference))

    rows = []
    results = {}
    for name, workload in workloads.items():
        if warmup:
            results[name], _ = measure(workload, src)
        for rep in range(int(repetitions)):
            results[name], report = measure(workload, src)
            rows.append(
                OrderedDict(
                    workload=name,
                    repetition=rep,
                    duration_s=report.duration,
                    energy_j=report.energy,
                    mean_power_w=report.mean_power,
                    source_kind=report.source_kind,
                )
            )
        log.info("measured %s x %d", name, repetitions)

    records = pd.DataFrame(rows)
    ddof = 1 if repetitions > 1 else 0
    grouped = records.groupby("workload", sort=False)
    summary = pd.DataFrame(
        OrderedDict(
            repetitions=grouped.size(),
            duration_mean_s=grouped["duration_s"].mean(),
            duration_std_s=grouped["duration_s"].std(ddof=ddof),
            energy_mean_j=grouped["energy_j"].mean(),
            energy_std_j=grouped["energy_j"].std(ddof=ddof),
        )
    )
    ref = summary.loc[reference]
    with np.errstate(divide="ignore", invalid="ignore"):
        summary["speedup"] = ref["duration_mean_s"] / summary["duration_mean_s"]
        summary["energy_ratio"] = ref["energy_mean_j"] / summary["energy_mean_j"]
    summary["reference"] = reference
    summary["std_flag"] = repetitions == 1
    summary.index.name = "workload"

    return ComparisonTable(records, summary, reference, results)
