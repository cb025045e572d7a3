from hdqual import metering
from hdqual.errors import (
    CapabilityUnavailableError,
    HdqualRuntimeError,
    InsufficientSamplesError,
    InvalidArgumentError,
)
import json
import threading
import time
import numpy as np
import pytest


def test_trace_two_points():
    energy, nsamples = metering.integrate_trace([0.0, 1.0], [10.0, 30.0], 0.0, 1.0)
    assert abs(energy - 20.0) < 1e-12
    assert nsamples == 2


def test_trace_ramp():
    t = np.arange(0, 41) * 0.1
    energy, _ = metering.integrate_trace(t, t, 0.0, 4.0)
    assert abs(energy - 8.0) / 8.0 < 0.01


def test_trace_piecewise_linear_exact():
    t = np.array([0.0, 0.5, 2.0, 3.0])
    p = np.array([5.0, 15.0, 15.0, 0.0])
    # clipped to [0.25, 2.5]: power is linear between the samples
    expected = 0.25 * (10.0 + 15.0) / 2 + 1.5 * 15.0 + 0.5 * (15.0 + 7.5) / 2
    energy, nsamples = metering.integrate_trace(t, p, 0.25, 2.5)
    assert abs(energy - expected) < 1e-9
    assert nsamples == 2


def test_trace_no_overlap():
    with pytest.raises(InsufficientSamplesError):
        metering.integrate_trace([0.0, 1.0], [1.0, 1.0], 2.0, 3.0)
    with pytest.raises(InsufficientSamplesError):
        metering.integrate_trace([0.0], [1.0], 0.0, 1.0)


def test_constant_power_sleep():
    src = metering.ConstantPower(50.0)
    _, report = metering.measure(lambda: time.sleep(2.0), src)
    assert abs(report.energy - 100.0) / 100.0 < 0.02
    assert abs(report.mean_power - 50.0) < 1e-9
    assert report.samples_used == 0
    assert report.source_kind == "constant_power"


def test_measure_returns_result():
    result, report = metering.measure(lambda: 42, metering.ConstantPower(10.0))
    assert result == 42
    assert report.energy >= 0
    assert report.duration >= 0


def test_energy_additive():
    src = metering.ConstantPower(20.0)

    def _a():
        time.sleep(0.2)

    def _b():
        time.sleep(0.3)

    _, both = metering.measure(lambda: (_a(), _b()), src)
    _, ra = metering.measure(_a, src)
    _, rb = metering.measure(_b, src)
    total = ra + rb
    assert abs(both.energy - total.energy) / total.energy < 0.05


def test_trace_power_source(tmp_path):
    trace = tmp_path / "trace.csv"
    trace.write_text("time,watts\n0,10\n1,30\n10,30\n")
    src = metering.TracePower.from_csv(str(trace))
    energy, nsamples, points = src.stop(1.0)
    assert abs(energy - 20.0) < 1e-12
    assert nsamples == 2
    assert points == [(0.0, 10.0), (1.0, 30.0)]

    src = metering.make_power_source("trace", trace_file=str(trace))
    assert src.kind == "trace"


def test_trace_power_invalid():
    with pytest.raises(InvalidArgumentError):
        metering.TracePower([0.0, 0.0], [1.0, 1.0])
    with pytest.raises(InvalidArgumentError):
        metering.TracePower([0.0, 1.0], [1.0, -1.0])


def test_constant_power_invalid():
    with pytest.raises(InvalidArgumentError):
        metering.ConstantPower(-1.0)


def test_platform_counter(tmp_path):
    domain = tmp_path / "intel-rapl:0"
    domain.mkdir()
    counter = domain / "energy_uj"
    counter.write_text("1000000\n")
    (domain / "max_energy_range_uj").write_text("2000000\n")

    src = metering.PlatformCounter(str(counter), sampling_interval=10.0)
    assert src.max_range == 2000000
    src.start()
    counter.write_text("100000\n")  # wrapped around
    energy, nsamples, trace = src.stop(0.05)

    # 1.0 J up to the wrap and 0.1 J after it
    assert abs(energy - 1.1) < 1e-9
    assert nsamples == 2
    assert len(trace) == 1


def test_platform_counter_unavailable(tmp_path):
    assert metering.PlatformCounter.find_counter(str(tmp_path)) is None
    assert not metering.PlatformCounter.available(str(tmp_path))
    with pytest.raises(CapabilityUnavailableError):
        metering.PlatformCounter(str(tmp_path / "energy_uj"))


def test_platform_fallback(monkeypatch):
    monkeypatch.setattr(metering.PlatformCounter, "find_counter",
                        staticmethod(lambda root=None: None))
    src = metering.make_power_source("platform_counter", watts=33.0)
    assert isinstance(src, metering.ConstantPower)
    assert src.watts == 33.0
    with pytest.raises(CapabilityUnavailableError):
        metering.make_power_source("platform_counter", fallback=False)


def test_workload_error_wins_over_source_error():
    src = metering.TracePower([100.0, 101.0], [5.0, 5.0])

    def broken():
        raise KeyError("workload")

    with pytest.raises(KeyError):
        metering.measure(broken, src)
    # the source is released and its own error shows on a normal run
    with pytest.raises(InsufficientSamplesError):
        metering.measure(lambda: None, src)


def test_power_source_is_abstract():
    with pytest.raises(TypeError):
        metering.PowerSource()

    class Incomplete(metering.PowerSource):
        kind = "incomplete"

    with pytest.raises(TypeError):
        Incomplete()


def test_nested_measure_rejected():
    src = metering.ConstantPower(1.0)
    with pytest.raises(HdqualRuntimeError):
        metering.measure(lambda: metering.measure(lambda: None, src), src)
    # the source is usable again afterwards
    metering.measure(lambda: None, src)


def test_measure_serialized_across_threads():
    src = metering.ConstantPower(1.0)
    active = []
    overlaps = []

    def _work():
        active.append(1)
        if len(active) > 1:
            overlaps.append(1)
        time.sleep(0.05)
        active.pop()

    threads = [threading.Thread(target=metering.measure, args=(_work, src))
               for _ in range(4)]
    for thread in threads:
        thread.start()
    for thread in threads:
        thread.join()
    assert overlaps == []


def test_compare_self():
    src = metering.ConstantPower(10.0)

    def _work():
        time.sleep(0.05)

    table = metering.compare([("a", _work), ("b", _work)], src, repetitions=10)
    assert table.reference == "a"
    assert len(table.records) == 20
    assert abs(table.summary.loc["b", "speedup"] - 1.0) < 0.1
    assert abs(table.summary.loc["b", "energy_ratio"] - 1.0) < 0.1
    assert table.summary.loc["a", "speedup"] == 1.0


def test_compare_single_repetition(tmp_path):
    table = metering.compare([("a", lambda: 1)], metering.ConstantPower(1.0),
                             repetitions=1)
    assert table.summary.loc["a", "duration_std_s"] == 0.0
    assert bool(table.summary.loc["a", "std_flag"])
    assert table.results["a"] == 1

    path = tmp_path / "bench.jsonl"
    table.to_jsonl(str(path))
    records = [json.loads(line) for line in path.read_text().splitlines()]
    assert [r["record"] for r in records] == ["repetition", "summary"]
    assert records[1]["workload"] == "a"
    assert records[1]["disclaimer"] == metering.DISCLAIMER
    table.printSummary()


def test_compare_invalid():
    src = metering.ConstantPower(1.0)
    with pytest.raises(InvalidArgumentError):
        metering.compare([("a", lambda: 1)], src, repetitions=0)
    with pytest.raises(InvalidArgumentError):
        metering.compare([("a", lambda: 1)], src, reference="b")


def test_report_dict():
    report = metering.EnergyReport(2.0, 100.0, "constant_power", 0,
                                   [(0.0, 50.0), (2.0, 50.0)])
    data = report.to_dict(with_trace=True)
    assert data["mean_power_w"] == 50.0
    assert data["trace"] == [[0.0, 50.0], [2.0, 50.0]]
    assert "trace" not in report.to_dict()
