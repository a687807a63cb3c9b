import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from core.tools.param_space import (CALIBRATED_REFERENCE, Chromosome, ParameterDef, ParameterKind, ParameterSpace,
                                    chromosome_from_mapping, clamp_and_round, default_space, is_valid,
                                    sample_uniform, space_from_records, validate)


def with_value(space, name, value):
    values = [p.lower for p in space.params]
    values[space.index(name)] = value
    return Chromosome(tuple(values))


def test_default_space_layout(space):
    assert len(space) == 11
    assert len(set(space.names)) == 11
    assert space.params[0] == ParameterDef("ageMinHavingChild", 15, 20, ParameterKind.INTEGER)
    assert space.params[5] == ParameterDef("splittingProba", 0, 1, ParameterKind.REAL)
    assert space.names[-1] == "jobVacancyRate"
    assert space.params[space.index("probabilityToMakeCouple")].upper == 0.05
    assert space.params[space.index("resSatisfactMargin")].kind is ParameterKind.INTEGER


def test_parameter_def_invariants():
    with pytest.raises(ValueError):
        ParameterDef("x", 1.0, 1.0, ParameterKind.REAL)
    with pytest.raises(ValueError):
        ParameterDef("x", 0.5, 3.0, ParameterKind.INTEGER)
    with pytest.raises(ValueError):
        ParameterSpace((ParameterDef("x", 0, 1, ParameterKind.REAL), ParameterDef("x", 0, 2, ParameterKind.REAL)))


def test_sample_uniform_integer_range():
    space = ParameterSpace((ParameterDef("k", 3, 4, ParameterKind.INTEGER),))
    for seed in range(50):
        assert sample_uniform(space, np.random.default_rng(seed)).values[0] in (3.0, 4.0)


def test_sample_uniform_mean():
    space = ParameterSpace((ParameterDef("u", 0, 1, ParameterKind.REAL),))
    rng = np.random.default_rng(2011)
    draws = [sample_uniform(space, rng).values[0] for _ in range(10000)]
    assert abs(np.mean(draws) - 0.5) < 0.02


def test_sample_uniform_is_deterministic(space):
    a = sample_uniform(space, np.random.default_rng(7))
    b = sample_uniform(space, np.random.default_rng(7))
    c = sample_uniform(space, np.random.default_rng(8))
    assert a == b
    assert a != c


@given(st.integers(min_value=0, max_value=2 ** 32))
@settings(max_examples=50)
def test_sampled_chromosomes_are_valid(seed):
    space = default_space()
    assert validate(space, sample_uniform(space, np.random.default_rng(seed))) == []


def test_validate_reports_by_name(space):
    violations = validate(space, with_value(space, "ageMinHavingChild", 21))
    assert [(v.name, v.reason) for v in violations] == [("ageMinHavingChild", "upper bound 20")]

    violations = validate(space, with_value(space, "nbChild", 2.5))
    assert [(v.name, v.reason) for v in violations] == [("nbChild", "non-integer")]


def test_lower_bounds_are_valid(space):
    assert is_valid(space, Chromosome(tuple(p.lower for p in space.params)))
    assert is_valid(space, Chromosome(tuple(p.upper for p in space.params)))


def test_clamp_and_round_examples(space):
    clipped = clamp_and_round(space, with_value(space, "splittingProba", 1.3))
    assert clipped[space.index("splittingProba")] == 1.0
    rounded = clamp_and_round(space, with_value(space, "nbJoinTrials", 7.6))
    assert rounded[space.index("nbJoinTrials")] == 8.0
    valid = sample_uniform(space, np.random.default_rng(3))
    assert clamp_and_round(space, valid) == valid


@given(st.lists(st.floats(min_value=-1e6, max_value=1e6, allow_nan=False), min_size=11, max_size=11))
def test_clamp_and_round_is_idempotent_and_valid(values):
    space = default_space()
    once = clamp_and_round(space, Chromosome(tuple(values)))
    assert validate(space, once) == []
    assert clamp_and_round(space, once) == once


def test_records_round_trip(space):
    assert space_from_records(space.to_records()) == space
    records = space.to_records()
    records[0], records[1] = records[1], records[0]
    with pytest.raises(ValueError):
        space_from_records(records)


def test_published_values_fill_missing_parameter(space):
    c = chromosome_from_mapping(space, CALIBRATED_REFERENCE)
    assert is_valid(space, c)
    assert c[space.index("probStudyOutside")] == 0.5
    assert c[space.index("jobVacancyRate")] == 0.021
    with pytest.raises(KeyError):
        chromosome_from_mapping(space, {"notAParameter": 1.0})
    with pytest.raises(KeyError):
        chromosome_from_mapping(space, CALIBRATED_REFERENCE, fill_missing=False)


def test_cache_key_is_exact_bit_pattern(space):
    c = sample_uniform(space, np.random.default_rng(1))
    assert c.key() == Chromosome.from_array(c.as_array()).key()
    nudged = c.as_array()
    nudged[3] = np.nextafter(nudged[3], 1.0)
    assert Chromosome.from_array(nudged).key() != c.key()
