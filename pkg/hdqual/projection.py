"""
Fleet-scale annual energy of real-time quality inference and the
savings of one model over another.

The annual energy of a scenario is the product

    E = E_I * nu * tau * rho * N_M * N_P

with ``E_I`` the energy per inference (J), ``nu`` the inference rate
(Hz), ``tau`` the fabrication time of a part (s), ``rho`` the parts made
per machine and year, ``N_M`` the number of machines and ``N_P`` the
number of processes.

Scenario files
--------------
JSON with the parameters of the two compared scenarios (``a`` is the
efficient one, ``b`` the one it replaces) and an optional CO2 factor::

    {
      "name": "HDC vs MCDCNN, CNC machining",
      "a": {"energy_per_inference_j": 0.1, "inference_rate_hz": 1,
            "part_time_s": 3600, "parts_per_year": 1000,
            "machines": 1e6, "processes": 1},
      "b": {"energy_per_inference_j": 10, ...},
      "co2_kg_per_kwh": 0.7
    }

Parameters missing from ``b`` are taken from ``a``.
"""

import json
import logging
import os
from collections import OrderedDict

import colorama
import numpy as np

from . import config
from .errors import InvalidArgumentError, ScenarioError

__all__ = [
    "ProjectionParams",
    "SavingsReport",
    "annual_energy",
    "savings",
    "energy_per_inference",
    "cars_equivalent",
    "headline",
    "load_scenario",
    "JOULES_PER_KWH",
]

log = logging.getLogger(__name__)

JOULES_PER_KWH = config.JOULES_PER_KWH

PARAM_FIELDS = (
    "energy_per_inference_j",
    "inference_rate_hz",
    "part_time_s",
    "parts_per_year",
    "machines",
    "processes",
)


class ProjectionParams(object):

    """ the six factors of the annual energy of one scenario """

    def __init__(self, energy_per_inference_j, inference_rate_hz, part_time_s,
                 parts_per_year, machines, processes=1):
        values = (energy_per_inference_j, inference_rate_hz, part_time_s,
                  parts_per_year, machines, processes)
        for name, value in zip(PARAM_FIELDS, values):
            value = float(value)
            if not np.isfinite(value) or value < 0:
                raise InvalidArgumentError("{} must be finite and >= 0".format(name))
            setattr(self, name, value)

    @property
    def inferences_per_part(self):
        return self.inference_rate_hz * self.part_time_s

    def to_dict(self):
        return OrderedDict((name, getattr(self, name)) for name in PARAM_FIELDS)

    def replace(self, **kwargs):
        values = self.to_dict()
        values.update(kwargs)
        return ProjectionParams(**values)


class SavingsReport(object):

    """ annual energy of two scenarios and what choosing ``a`` saves """

    def __init__(self, energy_a, energy_b, co2_factor):
        self.energy_a = float(energy_a)
        self.energy_b = float(energy_b)
        self.co2_factor = float(co2_factor)

    @property
    def savings(self):
        return self.energy_b - self.energy_a

    @property
    def savings_kwh(self):
        return self.savings / JOULES_PER_KWH

    @property
    def co2e_tons(self):
        return self.savings_kwh * self.co2_factor / 1000.0

    @property
    def cars(self):
        return cars_equivalent(self.co2e_tons)

    def to_dict(self):
        return OrderedDict(
            energy_a_j=self.energy_a,
            energy_b_j=self.energy_b,
            savings_j=self.savings,
            savings_kwh=self.savings_kwh,
            co2_kg_per_kwh=self.co2_factor,
            co2e_tons=self.co2e_tons,
            cars_per_year=self.cars,
            headline=OrderedDict(
                savings_j=headline(self.savings),
                savings_kwh=headline(self.savings_kwh),
                co2e_tons=headline(self.co2e_tons),
            ),
        )

    def printSummary(self, name=""):
        clr = colorama.Fore.GREEN if self.savings >= 0 else colorama.Fore.RED
        print("Annual energy projection {}".format(name).strip())
        print("-" * 60)
        print("  scenario a : {:14.6e} J".format(self.energy_a))
        print("  scenario b : {:14.6e} J".format(self.energy_b))
        print(
            clr
            + "  savings    : {:14.6e} J  (~{:.0e} J)".format(
                self.savings, headline(self.savings)
            )
            + colorama.Fore.RESET
        )
        print(
            "             : {:14.6e} kWh (~{:.0e} kWh)".format(
                self.savings_kwh, headline(self.savings_kwh)
            )
        )
        print(
            "  CO2e       : {:14.1f} t at {} kg/kWh (~{:.0f} cars driven a year)".format(
                self.co2e_tons, self.co2_factor, self.cars
            )
        )
        if self.savings < 0:
            print("  (negative: scenario a uses more energy than b)")


def annual_energy(p):
    """ annual energy (J) of a :class:`ProjectionParams` scenario """
    return float(
        np.float64(p.energy_per_inference_j)
        * p.inference_rate_hz
        * p.part_time_s
        * p.parts_per_year
        * p.machines
        * p.processes
    )


def savings(a, b, co2_factor=config.DEFAULT_CO2_KG_PER_KWH):
    """
    Compare two scenarios; the savings are ``annual_energy(b) -
    annual_energy(a)`` and may be negative.
    """
    if co2_factor < 0:
        raise InvalidArgumentError("CO2 factor must be >= 0")
    return SavingsReport(annual_energy(a), annual_energy(b), co2_factor)


def energy_per_inference(report, n_inferences):
    """ joules per inference from an :class:`~hdqual.metering.EnergyReport` """
    if n_inferences < 1:
        raise InvalidArgumentError("need at least one inference")
    return report.energy / float(n_inferences)


def cars_equivalent(co2e_tons, tons_per_car_year=config.CO2_TONS_PER_CAR_YEAR):
    """ number of passenger cars emitting ``co2e_tons`` in a year """
    return co2e_tons / tons_per_car_year


def headline(value):
    """ value rounded to one significant figure """
    if value == 0 or not np.isfinite(value):
        return value
    exponent = int(np.floor(np.log10(abs(value))))
    return float(round(value / 10.0 ** exponent) * 10.0 ** exponent)


def _params_from(values, section, defaults=None):
    if not isinstance(values, dict):
        raise ScenarioError(section, "must be an object")
    merged = OrderedDict(defaults or {})
    merged.update(values)
    for name in merged:
        if name not in PARAM_FIELDS:
            raise ScenarioError("{}.{}".format(section, name), "unknown parameter")
    for name in PARAM_FIELDS:
        if name not in merged:
            raise ScenarioError("{}.{}".format(section, name), "missing")
        value = merged[name]
        if isinstance(value, bool) or not isinstance(value, (int, float)):
            raise ScenarioError("{}.{}".format(section, name), "must be a number")
        if value < 0 or not np.isfinite(value):
            raise ScenarioError("{}.{}".format(section, name), "must be >= 0")
    return ProjectionParams(**merged)


def load_scenario(filename):
    """
    Read a scenario file.

    Returns
    -------
    (str, ProjectionParams, ProjectionParams, float)
        name, scenario a, scenario b and the CO2 factor (kg/kWh)
    """
    if not os.path.exists(filename):
        raise ScenarioError("<file>", "{} not found".format(filename))
    try:
        with open(filename) as infile:
            scenario = json.load(infile)
    except ValueError as err:
        raise ScenarioError("<file>", "invalid JSON in {}: {}".format(filename, err))
    if not isinstance(scenario, dict):
        raise ScenarioError("<root>", "must be an object")

    for section in ("a", "b"):
        if section not in scenario:
            raise ScenarioError(section, "missing")
    a = _params_from(scenario["a"], "a")
    b = _params_from(scenario["b"], "b", defaults=a.to_dict())

    co2 = scenario.get("co2_kg_per_kwh", config.DEFAULT_CO2_KG_PER_KWH)
    if isinstance(co2, bool) or not isinstance(co2, (int, float)) or co2 < 0:
        raise ScenarioError("co2_kg_per_kwh", "must be a number >= 0")

    name = scenario.get("name", os.path.basename(filename))
    log.debug("loaded scenario %s from %s", name, filename)
    return name, a, b, float(co2)
