"""
Genetic algorithm for parameter calibration (minimization).

Each generation is scored through the evaluator (cache-backed), the best
fraction survives unchanged, and the remaining slots are refilled with
mutated uniform crossovers of two random survivors. The run ends after
max_generations or once the best-so-far fitness has not improved for
plateau_generations generations in a row.

Randomness is drawn only in this process and only after a generation has
been scored, so parallel evaluation cannot change the outcome.
"""

import logging
import math
import os
from dataclasses import dataclass, field
from enum import Enum
from typing import Dict, List, Sequence, Tuple

import numpy as np
import pandas as pd

from core.config import config
from core.config.settings import GAConfig
from core.models.base_evaluator import BaseEvaluator
from core.tools.fitness import FitnessValue
from core.tools.param_space import (Chromosome, ParameterSpace, chromosome_from_mapping, clamp_and_round,
                                    sample_uniform)
from core.utils import utilities as utils

logger = logging.getLogger(__name__)

TRAJECTORY_COLUMNS = ["generation", "best", "mean", "evaluations", "cache_hits"]


class StopReason(Enum):
    MAX_GENERATIONS = "maxGenerations"
    PLATEAU = "plateau"


@dataclass(frozen=True)
class GenerationRecord:
    generation: int
    best_fitness: float
    mean_fitness: float
    cache_hits: int
    evaluations: int


@dataclass
class CalibrationResult:
    best_chromosome: Chromosome
    best_fitness: FitnessValue
    trajectory: List[GenerationRecord] = field(default_factory=list)
    generations_run: int = 0
    stop_reason: StopReason = StopReason.MAX_GENERATIONS
    initial_fitnesses: List[float] = field(default_factory=list)

    @property
    def initial_best(self) -> float:
        return min(self.initial_fitnesses)

    @property
    def initial_median(self) -> float:
        return float(np.median(self.initial_fitnesses))


# ==============================
# OPERATORS
# ==============================
def init_population(space: ParameterSpace, n: int, rng: np.random.Generator) -> List[Chromosome]:
    if n < 2:
        raise ValueError(f"Population needs at least 2 chromosomes, got {n}")
    return [sample_uniform(space, rng) for _ in range(n)]


def select_truncation(scored: Sequence[Tuple[Chromosome, float]], fraction: float) -> List[Chromosome]:
    """The ceil(fraction * size) lowest-fitness chromosomes; ties keep input order"""
    if not scored:
        raise ValueError("Cannot select from an empty population")
    if not 0 < fraction < 1:
        raise ValueError(f"Truncation fraction must lie in (0, 1), got {fraction}")
    keep = math.ceil(fraction * len(scored))
    ranked = sorted(range(len(scored)), key=lambda i: scored[i][1])  # sorted() is stable
    return [scored[i][0] for i in ranked[:keep]]


def crossover(a: Chromosome, b: Chromosome, rng: np.random.Generator) -> Chromosome:
    """Uniform crossover: each gene from a or b with probability 0.5"""
    if len(a) != len(b):
        raise ValueError(f"Parents have different lengths ({len(a)} and {len(b)})")
    from_a = rng.random(len(a)) < 0.5
    return Chromosome.from_array(np.where(from_a, a.as_array(), b.as_array()))


def mutate(space: ParameterSpace, c: Chromosome, rate: float, scale: float, rng: np.random.Generator) -> Chromosome:
    """Gaussian perturbation of each gene with probability `rate`, sd = scale * range width, then repaired"""
    # Both draws are made for every gene so the stream advances the same way for any rate
    hit = rng.random(len(c)) < rate
    noise = rng.normal(0.0, 1.0, len(c)) * scale * (space.upper - space.lower)
    values = np.where(hit, c.as_array() + noise, c.as_array())
    return clamp_and_round(space, Chromosome.from_array(values))


# ==============================
# GENERATIONAL LOOP
# ==============================
def step_generation(population: Sequence[Chromosome], evaluator: BaseEvaluator, ga_config: GAConfig,
                    rng: np.random.Generator, space: ParameterSpace,
                    generation: int = 0) -> Tuple[List[Chromosome], GenerationRecord, List[Tuple[Chromosome, FitnessValue]]]:
    if len(population) != ga_config.population_size:
        raise ValueError(f"Population has {len(population)} chromosomes, expected {ga_config.population_size}")

    hits_before = evaluator.cache.hits
    scores = evaluator.evaluate_population(population)
    scored = list(zip(population, scores))
    values = [s.f for s in scores]

    survivors = select_truncation([(c, s.f) for c, s in scored], ga_config.truncation_fraction)
    offspring = []
    for _ in range(ga_config.population_size - len(survivors)):
        i, j = rng.integers(len(survivors), size=2)
        child = crossover(survivors[int(i)], survivors[int(j)], rng)
        offspring.append(mutate(space, child, ga_config.mutation_rate, ga_config.mutation_scale, rng))

    record = GenerationRecord(
        generation=generation,
        best_fitness=min(values),
        mean_fitness=float(np.mean(values)),
        cache_hits=evaluator.cache.hits - hits_before,
        evaluations=len(population),
    )
    return list(survivors) + offspring, record, scored


def run_ga(space: ParameterSpace, ga_config: GAConfig, evaluator: BaseEvaluator) -> CalibrationResult:
    rng = utils.master_rng(ga_config.master_seed)
    population = init_population(space, ga_config.population_size, rng)
    best_chromosome, best_value = None, None
    result = CalibrationResult(best_chromosome=None, best_fitness=None)
    stale = 0

    logger.info(f"GA started: population {ga_config.population_size}, at most {ga_config.max_generations} "
                f"generations, plateau {ga_config.plateau_generations}, model {evaluator.get_model_name()}")
    for generation in range(1, ga_config.max_generations + 1):
        population, record, scored = step_generation(population, evaluator, ga_config, rng, space, generation)
        if generation == 1:
            result.initial_fitnesses = [s.f for _, s in scored]

        improved = False
        for chromosome, score in scored:
            if best_value is None or score.f < best_value.f - config.IMPROVEMENT_TOLERANCE:
                best_chromosome, best_value = chromosome, score
                improved = True
        stale = 0 if improved else stale + 1

        # Best-so-far semantics: the column never increases
        record = GenerationRecord(record.generation, best_value.f, record.mean_fitness,
                                  record.cache_hits, record.evaluations)
        result.trajectory.append(record)
        logger.info(f"Generation {generation}: best {record.best_fitness:.6g}, mean {record.mean_fitness:.6g}, "
                    f"cache hits {record.cache_hits}/{record.evaluations}")

        if stale >= ga_config.plateau_generations:
            result.stop_reason = StopReason.PLATEAU
            break
    else:
        result.stop_reason = StopReason.MAX_GENERATIONS

    result.best_chromosome = best_chromosome
    result.best_fitness = best_value
    result.generations_run = len(result.trajectory)
    logger.info(f"GA finished after {result.generations_run} generations ({result.stop_reason.value}), "
                f"best fitness {best_value.f:.6g}")
    return result


# ==============================
# RESULT FILES
# ==============================
def trajectory_frame(result: CalibrationResult) -> pd.DataFrame:
    return pd.DataFrame(
        [(r.generation, r.best_fitness, r.mean_fitness, r.evaluations, r.cache_hits) for r in result.trajectory],
        columns=TRAJECTORY_COLUMNS)


def write_trajectory_csv(result: CalibrationResult, path: str):
    utils.write_frame(trajectory_frame(result), path)


def load_trajectory_csv(path: str) -> pd.DataFrame:
    return utils.read_frame(path, TRAJECTORY_COLUMNS)


def write_best_params_csv(space: ParameterSpace, chromosome: Chromosome, path: str):
    utils.write_frame(pd.DataFrame({"name": space.names, "value": list(chromosome.values)}), path)


def load_params_csv(space: ParameterSpace, path: str) -> Chromosome:
    """Read a name,value params file; parameters it does not list take mid-range values"""
    if not os.path.exists(path):
        raise FileNotFoundError(f"Params file not found: {path}")
    frame = utils.read_frame(path, ["name", "value"])
    mapping: Dict[str, float] = {}
    for name, value in zip(frame["name"].astype(str).str.strip(), frame["value"]):
        if name in mapping:
            raise ValueError(f"{path}: parameter {name} listed twice")
        mapping[name] = float(value)
    return chromosome_from_mapping(space, mapping)
