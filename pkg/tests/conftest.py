import pytest

import numpy as np

from core.config.settings import SimConfig, SynthesisSpec
from core.tools.fitness import simulate_average
from core.tools.indicators import IndicatorKey, IndicatorSeries, Indicator
from core.tools.microsim import (Activity, EventCounts, Household, Individual, Municipality, Sex, WorldState)
from core.tools.param_space import CALIBRATED_REFERENCE, Chromosome, chromosome_from_mapping, default_space


@pytest.fixture()
def space():
    return default_space()


@pytest.fixture()
def rng():
    return np.random.default_rng(12345)


@pytest.fixture()
def tiny_sim_config():
    return SimConfig(steps=2, synthesis=SynthesisSpec(municipalities=1, districts=1, individuals_per_municipality=60,
                                                      sectors=2))


@pytest.fixture()
def small_sim_config():
    return SimConfig(steps=3, synthesis=SynthesisSpec(municipalities=3, districts=2, individuals_per_municipality=120,
                                                      sectors=3))


@pytest.fixture()
def reference_params(space):
    return chromosome_from_mapping(space, CALIBRATED_REFERENCE)


@pytest.fixture()
def quiet_params(space):
    """Every probability and rate at zero; integers at their lower bounds"""
    values = []
    for p in space.params:
        values.append(p.lower)
    return Chromosome(tuple(values))


def make_world(household_sizes, district_of=None, municipalities=1, sectors=2):
    """Hand-built world: one household per size, adults only, all inactive"""
    district_of = district_of or (lambda m: 0)
    world = WorldState(year=2000, individuals={}, households={}, municipalities={}, events={})
    for m in range(municipalities):
        world.municipalities[m] = Municipality(id=m, district_id=district_of(m), job_slots=[0] * sectors)
    for index, size in enumerate(household_sizes):
        m = index % municipalities
        household = Household(id=world.new_household_id(), member_ids=set(), municipality=m, rooms=size)
        world.households[household.id] = household
        for _ in range(size):
            person = Individual(id=world.new_individual_id(), age=30, sex=Sex.A, activity=Activity.INACTIVE,
                                residence=m, household_id=household.id)
            world.individuals[person.id] = person
            household.member_ids.add(person.id)
    world.events = {m: EventCounts() for m in world.municipalities}
    return world


def series_of(values):
    """IndicatorSeries from {(indicator, geo_id, year, subkey): value}"""
    return IndicatorSeries({IndicatorKey.of(ind, geo, year, sub): v for (ind, geo, year, sub), v in values.items()})


@pytest.fixture()
def births_key():
    return IndicatorKey.of(Indicator.BIRTHS_DEATHS, 0, 2001, "births")


def reference_observed(sim, repetitions, overrides=None):
    """Averaged indicators at the published calibrated values, with optional overrides"""
    chromosome = chromosome_from_mapping(default_space(), {**CALIBRATED_REFERENCE, **(overrides or {})})
    return simulate_average(chromosome, sim, repetitions)
