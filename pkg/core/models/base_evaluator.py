from abc import ABC, abstractmethod
from typing import Dict, List, Sequence

from core.tools.fitness import FitnessCache, FitnessValue
from core.tools.param_space import Chromosome


class BaseEvaluator(ABC):
    """Scores chromosomes through a memo cache; subclasses only score cache misses"""

    def __init__(self, cache: FitnessCache = None):
        self.cache = cache if cache is not None else FitnessCache()
        self.evaluations = 0

    @abstractmethod
    def get_model_name(self) -> str:
        """Return the name of the fitness model"""
        pass

    @abstractmethod
    def score_batch(self, chromosomes: Sequence[Chromosome]) -> List[FitnessValue]:
        """Score distinct, not yet cached chromosomes, in order"""
        pass

    def evaluate(self, chromosome: Chromosome) -> FitnessValue:
        return self.evaluate_population([chromosome])[0]

    def evaluate_population(self, chromosomes: Sequence[Chromosome]) -> List[FitnessValue]:
        """
        Score a population.

        Each chromosome is one cache lookup. A chromosome repeated inside the
        batch is scored once and its repeats count as hits, so hit/miss totals
        do not depend on how the misses are dispatched.
        """
        results: List[FitnessValue] = [None] * len(chromosomes)
        pending: Dict[bytes, List[int]] = {}
        for i, chromosome in enumerate(chromosomes):
            self.evaluations += 1
            key = chromosome.key()
            if self.cache.enabled and key in pending:
                self.cache.record_hit()
                pending[key].append(i)
                continue
            cached = self.cache.lookup(key)
            if cached is not None:
                results[i] = cached
            elif self.cache.enabled:
                pending[key] = [i]
            else:
                pending[key + i.to_bytes(8, "little")] = [i]

        if pending:
            order = list(pending.values())
            scores = self.score_batch([chromosomes[indices[0]] for indices in order])
            for indices, score in zip(order, scores):
                self.cache.insert(chromosomes[indices[0]].key(), score)
                for i in indices:
                    results[i] = score
        return results

    def get_statistics(self) -> dict:
        """Return statistics about the evaluator"""
        return {
            "model_name": self.get_model_name(),
            "evaluations": self.evaluations,
            **self.cache.get_statistics(),
        }

    def close(self):
        pass

    def __enter__(self):
        return self

    def __exit__(self, *exc):
        self.close()
