"""
Experiment configuration models.

One JSON file per experiment holds the simulation setup, the GA setup and,
optionally, an override of the calibration parameter space. Everything is
validated by pydantic on load; defaults come from core.config.config.
"""

import json
import os
from typing import List, Literal, Optional

from pydantic import BaseModel, ConfigDict, Field, model_validator

from core.config import config


class AgeBand(BaseModel):
    model_config = ConfigDict(extra="forbid", frozen=True)

    lowest: int = Field(ge=0, le=config.MAX_AGE)
    highest: int = Field(ge=0, le=config.MAX_AGE)
    weight: float = Field(gt=0)

    @model_validator(mode="after")
    def check_order(self):
        if self.highest < self.lowest:
            raise ValueError(f"age band [{self.lowest}, {self.highest}] is empty")
        return self


class SynthesisSpec(BaseModel):
    """Sizes of the synthetic region built by init_world"""
    model_config = ConfigDict(extra="forbid", frozen=True)

    municipalities: int = Field(default=3, ge=1)
    districts: int = Field(default=1, ge=1)
    # Optional explicit municipality -> district map; defaults to round robin
    district_map: Optional[List[int]] = None
    individuals_per_municipality: int = Field(default=500, ge=1)
    sectors: int = Field(default=3, ge=1)
    initial_vacancies_per_sector: int = Field(default=2, ge=0)
    vacant_dwelling_share: float = Field(default=0.05, ge=0)
    max_rooms: int = Field(default=6, ge=1)
    household_size_weights: List[float] = Field(default_factory=lambda: list(config.HOUSEHOLD_SIZE_WEIGHTS))
    adult_age_bands: List[AgeBand] = Field(
        default_factory=lambda: [AgeBand(lowest=lo, highest=hi, weight=w) for lo, hi, w in config.ADULT_AGE_BANDS])
    worker_share: float = Field(default=config.ACTIVITY_MIX["worker"], ge=0, le=1)
    unemployed_share: float = Field(default=config.ACTIVITY_MIX["unemployed"], ge=0, le=1)

    @model_validator(mode="after")
    def check_mix(self):
        if len(self.household_size_weights) != 4 or min(self.household_size_weights) < 0 \
                or sum(self.household_size_weights) <= 0:
            raise ValueError("household_size_weights needs four non-negative weights for sizes 1-4")
        if self.worker_share + self.unemployed_share > 1:
            raise ValueError("worker_share + unemployed_share must not exceed 1")
        if self.district_map is not None:
            if len(self.district_map) != self.municipalities:
                raise ValueError(
                    f"district_map has {len(self.district_map)} entries for {self.municipalities} municipalities")
            if any(d < 0 or d >= self.districts for d in self.district_map):
                raise ValueError(f"district_map entries must lie in [0, {self.districts - 1}]")
        return self

    def district_of(self, municipality: int) -> int:
        if self.district_map is not None:
            return self.district_map[municipality]
        return municipality % self.districts


class SimConfig(BaseModel):
    model_config = ConfigDict(extra="forbid", frozen=True)

    start_year: int = config.START_YEAR
    steps: int = Field(default=config.STEPS, ge=1)
    repetition_seed_base: int = Field(default=config.REPETITION_SEED_BASE, ge=0, lt=2 ** 64)
    synthesis: SynthesisSpec = Field(default_factory=SynthesisSpec)
    retirement_age: int = Field(default=config.RETIREMENT_AGE, ge=1)
    higher_education_age: int = Field(default=config.HIGHER_EDUCATION_AGE, ge=1)
    job_separation_rate: float = Field(default=config.JOB_SEPARATION_RATE, ge=0, le=1)
    job_relocation_probability: float = Field(default=config.JOB_RELOCATION_PROBABILITY, ge=0, le=1)
    # Test hook: 0 disables deaths entirely
    mortality_scale: float = Field(default=1.0, ge=0)
    age_bin_edges: List[int] = Field(default_factory=lambda: list(config.AGE_BIN_EDGES))

    @model_validator(mode="after")
    def check_bins(self):
        edges = self.age_bin_edges
        if not edges or edges[0] != 0 or any(b <= a for a, b in zip(edges, edges[1:])):
            raise ValueError("age_bin_edges must start at 0 and increase strictly")
        return self

    @property
    def years(self) -> List[int]:
        """Years for which indicators are emitted"""
        return [self.start_year + i for i in range(1, self.steps + 1)]


class GAConfig(BaseModel):
    model_config = ConfigDict(extra="forbid", frozen=True)

    population_size: int = Field(default=config.POPULATION_SIZE, ge=2)
    max_generations: int = Field(default=config.MAX_GENERATIONS, ge=1)
    plateau_generations: int = Field(default=config.PLATEAU_GENERATIONS, ge=1)
    truncation_fraction: float = Field(default=config.TRUNCATION_FRACTION, gt=0, lt=1)
    mutation_rate: float = Field(default=config.MUTATION_RATE, ge=0, le=1)
    mutation_scale: float = Field(default=config.MUTATION_SCALE, ge=0)
    repetitions: int = Field(default=config.REPETITIONS, ge=1)
    master_seed: int = Field(default=config.MASTER_SEED, ge=0, lt=2 ** 64)

    @model_validator(mode="after")
    def check_plateau(self):
        if self.plateau_generations > self.max_generations:
            raise ValueError(
                f"plateau_generations ({self.plateau_generations}) exceeds max_generations ({self.max_generations})")
        return self


class ParameterRecord(BaseModel):
    """Serialized form of a ParameterDef"""
    model_config = ConfigDict(extra="forbid", frozen=True)

    name: str
    lower: float
    upper: float
    kind: Literal["integer", "real"]


class SelfCheckConfig(BaseModel):
    model_config = ConfigDict(extra="forbid", frozen=True)

    population_size: int = Field(default=config.SELFCHECK_POPULATION_SIZE, ge=2)
    max_generations: int = Field(default=config.SELFCHECK_MAX_GENERATIONS, ge=1)
    plateau_generations: int = Field(default=config.SELFCHECK_PLATEAU_GENERATIONS, ge=1)
    repetitions: int = Field(default=config.SELFCHECK_REPETITIONS, ge=1)
    observed_repetitions: int = Field(default=config.SELFCHECK_OBSERVED_REPETITIONS, ge=1)
    pass_ratio: float = Field(default=config.SELFCHECK_PASS_RATIO, gt=0)
    synthesis: SynthesisSpec = Field(
        default_factory=lambda: SynthesisSpec(municipalities=2, districts=1, individuals_per_municipality=500))


class ExperimentConfig(BaseModel):
    model_config = ConfigDict(extra="forbid", frozen=True)

    sim: SimConfig = Field(default_factory=SimConfig)
    ga: GAConfig = Field(default_factory=GAConfig)
    parameter_space: Optional[List[ParameterRecord]] = None
    selfcheck: SelfCheckConfig = Field(default_factory=SelfCheckConfig)


def load_experiment_config(path: Optional[str] = None) -> ExperimentConfig:
    """
    Load and validate an experiment file.

    Without a path the default experiment is returned; a missing file is an
    error rather than a silent fallback.
    """
    if path is None:
        return ExperimentConfig()
    if not os.path.exists(path):
        raise FileNotFoundError(f"Config file not found: {path}")
    with open(path, "r", encoding="utf-8") as f:
        return ExperimentConfig.model_validate(json.load(f))


def save_experiment_config(experiment: ExperimentConfig, path: str):
    with open(path, "w", encoding="utf-8") as f:
        f.write(experiment.model_dump_json(indent=2))
