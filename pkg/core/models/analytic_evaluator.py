from typing import Callable, List, Sequence

import numpy as np

from core.models.base_evaluator import BaseEvaluator
from core.tools.fitness import FitnessCache, FitnessValue
from core.tools.param_space import Chromosome, ParameterSpace, clamp_and_round, default_space


class AnalyticEvaluator(BaseEvaluator):
    """Closed-form fitness function standing in for the simulation (GA checks, tests)"""

    def __init__(self, function: Callable[[np.ndarray], float], name: str = "analytic", cache: FitnessCache = None):
        super().__init__(cache)
        self.function = function
        self.name = name
        self.function_calls = 0

    @classmethod
    def sphere(cls, space: ParameterSpace = None, center: Sequence[float] = None, cache: FitnessCache = None):
        """
        f = sum((values - center)^2), optimum at mid-range.

        Integer slots use the rounded midpoint so the optimum is reachable.
        """
        space = space or default_space()
        if center is None:
            center = clamp_and_round(space, Chromosome.from_array((space.lower + space.upper) / 2.0)).as_array()
        center = np.asarray(center, dtype=np.float64)
        evaluator = cls(lambda values: float(np.sum((values - center) ** 2)), name="sphere", cache=cache)
        evaluator.center = center
        return evaluator

    def get_model_name(self) -> str:
        return self.name

    def score_batch(self, chromosomes: Sequence[Chromosome]) -> List[FitnessValue]:
        self.function_calls += len(chromosomes)
        return [FitnessValue(float(self.function(c.as_array())), pairs_used=len(c)) for c in chromosomes]
