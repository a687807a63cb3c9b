"""
Fitness of simulated indicators against observed data.

f = sum over aligned cells of ((x_sim - x_obs) / x_obs)^2, computed on the
entrywise average of several stochastic runs. Cells with x_obs = 0 are left
out and counted. Scored chromosomes are memoized by their exact bit pattern.
"""

import logging
import threading
from dataclasses import dataclass, field
from typing import Callable, Dict, List, Optional, Sequence, Tuple

from core.config.settings import SimConfig
from core.tools import microsim
from core.tools.indicators import Indicator, IndicatorKey, IndicatorSeries
from core.tools.param_space import Chromosome
from core.utils import utilities as utils

logger = logging.getLogger(__name__)

Simulator = Callable[[SimConfig, Chromosome, int], IndicatorSeries]


class AlignmentError(ValueError):
    pass


class FitnessUndefinedError(ValueError):
    pass


@dataclass(frozen=True)
class FitnessValue:
    f: float
    pairs_used: int
    pairs_skipped: int = 0

    def __post_init__(self):
        if not self.f >= 0:
            raise ValueError(f"fitness must be non-negative, got {self.f}")


@dataclass
class Alignment:
    pairs: List[Tuple[float, float]]
    keys: List[IndicatorKey]
    # Observed entries the simulation does not cover
    gaps: List[IndicatorKey] = field(default_factory=list)


def align(sim: IndicatorSeries, observed: IndicatorSeries) -> Alignment:
    """One (x_sim, x_obs) pair per observed entry that the simulation also produced"""
    pairs, keys, gaps = [], [], []
    for key, x_r in observed.items():
        if key in sim:
            pairs.append((sim[key], x_r))
            keys.append(key)
        else:
            gaps.append(key)
    if not pairs:
        raise AlignmentError(
            f"No observed entry matches the simulated output ({len(observed)} observed, {len(sim)} simulated; "
            f"observed years {observed.years}, simulated years {sim.years})")
    if gaps:
        logger.debug(f"{len(gaps)} observed entries have no simulated counterpart")
    return Alignment(pairs, keys, gaps)


def fitness(pairs: Sequence[Tuple[float, float]]) -> FitnessValue:
    total, used, skipped = 0.0, 0, 0
    for x_i, x_r in pairs:
        if x_r == 0:
            skipped += 1
            continue
        total += ((x_i - x_r) / x_r) ** 2
        used += 1
    if used == 0:
        raise FitnessUndefinedError(f"All {skipped} aligned pairs have an observed value of 0")
    return FitnessValue(total, used, skipped)


def fitness_breakdown(alignment: Alignment) -> Dict[Indicator, float]:
    """Each indicator's share of f"""
    contributions: Dict[Indicator, float] = {}
    for key, (x_i, x_r) in zip(alignment.keys, alignment.pairs):
        if x_r == 0:
            continue
        contributions[key.indicator] = contributions.get(key.indicator, 0.0) + ((x_i - x_r) / x_r) ** 2
    return contributions


# ==============================
# MEMOIZATION
# ==============================
class FitnessCache:
    """Chromosome bit pattern -> FitnessValue, with hit/miss accounting. Safe to share between threads."""

    def __init__(self, enabled: bool = True):
        self.enabled = enabled
        self._store: Dict[bytes, FitnessValue] = {}
        self._lock = threading.Lock()
        self.hits = 0
        self.misses = 0

    def lookup(self, key: bytes) -> Optional[FitnessValue]:
        with self._lock:
            value = self._store.get(key) if self.enabled else None
            if value is None:
                self.misses += 1
            else:
                self.hits += 1
            return value

    def record_hit(self):
        """A lookup answered by a score already being computed in the same batch"""
        with self._lock:
            self.hits += 1

    def insert(self, key: bytes, value: FitnessValue):
        if not self.enabled:
            return
        with self._lock:
            self._store[key] = value

    def __contains__(self, key: bytes) -> bool:
        with self._lock:
            return self.enabled and key in self._store

    def __len__(self) -> int:
        return len(self._store)

    @property
    def lookups(self) -> int:
        return self.hits + self.misses

    def get_statistics(self) -> dict:
        return {
            "cache_hits": self.hits,
            "cache_misses": self.misses,
            "cache_size": len(self._store),
            "hit_rate": self.hits / self.lookups if self.lookups else 0.0,
        }


# ==============================
# REPLICATION-AVERAGED EVALUATION
# ==============================
def simulate_replicate(cfg: SimConfig, chromosome: Chromosome, repetition: int) -> IndicatorSeries:
    """One simulation run on the stream owned by (repetition_seed_base, repetition)"""
    return microsim.run(cfg, chromosome, utils.repetition_rng(cfg.repetition_seed_base, repetition))


def simulate_average(chromosome: Chromosome, cfg: SimConfig, repetitions: int,
                     simulator: Simulator = simulate_replicate) -> IndicatorSeries:
    return IndicatorSeries.mean([simulator(cfg, chromosome, r) for r in range(repetitions)])


def score_average(chromosome: Chromosome, averaged: IndicatorSeries, observed: IndicatorSeries) -> FitnessValue:
    """Fitness of a chromosome's repetition-averaged indicators"""
    value = fitness(align(averaged, observed).pairs)
    logger.debug(f"Scored chromosome {chromosome.values}: f={value.f:.6g} "
                 f"({value.pairs_used} pairs, {value.pairs_skipped} skipped)")
    return value


def evaluate(chromosome: Chromosome, cfg: SimConfig, repetitions: int, observed: IndicatorSeries,
             cache: FitnessCache = None, simulator: Simulator = simulate_replicate) -> FitnessValue:
    """
    Cached fitness of one chromosome.

    On a miss the chromosome is simulated `repetitions` times, the indicator
    series are averaged entrywise, and the average is scored.
    """
    if repetitions < 1:
        raise ValueError(f"repetitions must be at least 1, got {repetitions}")
    key = chromosome.key()
    if cache is not None:
        cached = cache.lookup(key)
        if cached is not None:
            return cached

    value = score_average(chromosome, simulate_average(chromosome, cfg, repetitions, simulator), observed)
    if cache is not None:
        cache.insert(key, value)
    return value
