from hdqual import projection
from hdqual.errors import InvalidArgumentError, ScenarioError
import json
import os
import pytest


def _fleet(ei):
    return projection.ProjectionParams(
        energy_per_inference_j=ei, inference_rate_hz=1, part_time_s=3600,
        parts_per_year=1000, machines=1e6, processes=1,
    )


def test_joules_per_kwh():
    assert projection.JOULES_PER_KWH == 3.6e6


def test_annual_energy():
    assert abs(projection.annual_energy(_fleet(0.1)) - 3.6e11) / 3.6e11 < 1e-12


def test_annual_energy_zero_factor():
    assert projection.annual_energy(_fleet(0.1).replace(machines=0)) == 0.0


@pytest.mark.parametrize("field", projection.PARAM_FIELDS)
def test_annual_energy_multilinear(field):
    params = _fleet(0.1)
    scaled = params.replace(**{field: getattr(params, field) * 7.5})
    ratio = projection.annual_energy(scaled) / projection.annual_energy(params)
    assert abs(ratio - 7.5) / 7.5 < 1e-12


def test_savings_headline_scenario():
    report = projection.savings(_fleet(0.1), _fleet(10.0), co2_factor=0.7)
    assert abs(report.savings - 3.564e13) / 3.564e13 < 1e-9
    assert abs(report.savings_kwh - 9.9e6) / 9.9e6 < 1e-9
    assert abs(report.co2e_tons - 6930.0) / 6930.0 < 1e-9
    assert abs(report.cars - 6930.0 / 4.6) < 1e-6

    data = report.to_dict()
    assert data["headline"]["savings_j"] == 4e13
    assert data["headline"]["savings_kwh"] == 1e7
    assert data["headline"]["co2e_tons"] == 7000.0
    report.printSummary("test")


def test_savings_identical():
    report = projection.savings(_fleet(1.0), _fleet(1.0))
    assert report.savings == 0.0


def test_savings_negative():
    report = projection.savings(_fleet(10.0), _fleet(0.1))
    assert report.savings < 0
    report.printSummary()


def test_invalid_params():
    with pytest.raises(InvalidArgumentError):
        _fleet(-1.0)
    with pytest.raises(InvalidArgumentError):
        projection.savings(_fleet(1.0), _fleet(2.0), co2_factor=-0.1)


def test_energy_per_inference():
    from hdqual.metering import EnergyReport

    report = EnergyReport(2.0, 50.0, "constant_power")
    assert projection.energy_per_inference(report, 100) == 0.5
    with pytest.raises(InvalidArgumentError):
        projection.energy_per_inference(report, 0)


def test_headline():
    assert projection.headline(3.564e13) == 4e13
    assert projection.headline(9.9e6) == 1e7
    assert projection.headline(0.0) == 0.0
    assert projection.headline(-0.0449) == pytest.approx(-0.04)


def test_shipped_scenario():
    filename = os.path.join(os.path.dirname(projection.__file__), "data",
                            "fleet_scenario.json")
    name, a, b, co2 = projection.load_scenario(filename)
    assert co2 == 0.7
    assert b.machines == a.machines == 1e6
    report = projection.savings(a, b, co2)
    assert abs(report.savings - 3.564e13) / 3.564e13 < 1e-9


def _write(tmp_path, scenario):
    path = tmp_path / "scenario.json"
    path.write_text(json.dumps(scenario))
    return str(path)


def test_scenario_errors(tmp_path):
    a = _fleet(0.1).to_dict()

    bad = dict(a)
    bad["machines"] = "many"
    with pytest.raises(ScenarioError) as err:
        projection.load_scenario(_write(tmp_path, {"a": bad, "b": {}}))
    assert err.value.field == "a.machines"

    incomplete = dict(a)
    del incomplete["part_time_s"]
    with pytest.raises(ScenarioError) as err:
        projection.load_scenario(_write(tmp_path, {"a": incomplete, "b": {}}))
    assert err.value.field == "a.part_time_s"

    with pytest.raises(ScenarioError) as err:
        projection.load_scenario(_write(tmp_path, {"a": a}))
    assert err.value.field == "b"

    with pytest.raises(ScenarioError) as err:
        projection.load_scenario(_write(tmp_path, {"a": a, "b": {"watts": 3}}))
    assert err.value.field == "b.watts"

    with pytest.raises(ScenarioError) as err:
        projection.load_scenario(_write(tmp_path, {"a": a, "b": {}, "co2_kg_per_kwh": -1}))
    assert err.value.field == "co2_kg_per_kwh"

    with pytest.raises(ScenarioError):
        projection.load_scenario(str(tmp_path / "missing.json"))
