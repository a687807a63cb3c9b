"""
Simulation-backed fitness evaluator.

Every cache miss costs `repetitions` micro-simulation runs. With more than
one worker, all runs of a batch go to a process pool in a single ordered map,
so the scores never depend on the number of workers.
"""

import logging
from concurrent.futures import ProcessPoolExecutor
from typing import List, Sequence

from core.config import config
from core.config.settings import SimConfig
from core.models.base_evaluator import BaseEvaluator
from core.tools import fitness as fit
from core.tools.indicators import IndicatorSeries
from core.tools.param_space import Chromosome

logger = logging.getLogger(__name__)


class SimulationEvaluator(BaseEvaluator):
    """Replication-averaged micro-simulation fitness"""

    def __init__(self, sim_config: SimConfig, observed: IndicatorSeries, repetitions: int = config.REPETITIONS,
                 threads: int = 1, cache: fit.FitnessCache = None, simulator: fit.Simulator = fit.simulate_replicate):
        super().__init__(cache)
        if repetitions < 1:
            raise ValueError(f"repetitions must be at least 1, got {repetitions}")
        self.sim_config = sim_config
        self.observed = observed
        self.repetitions = repetitions
        self.threads = max(1, int(threads))
        self.simulator = simulator
        self.simulation_calls = 0
        self._executor = None

    def get_model_name(self) -> str:
        return f"microsimulation x{self.repetitions}"

    @property
    def executor(self):
        if self.threads > 1 and self._executor is None:
            logger.info(f"Starting {self.threads} simulation workers")
            self._executor = ProcessPoolExecutor(max_workers=self.threads)
        return self._executor

    def averaged_indicators(self, chromosomes: Sequence[Chromosome]) -> List[IndicatorSeries]:
        """Entrywise repetition average of each chromosome's indicators"""
        n = self.repetitions
        self.simulation_calls += n * len(chromosomes)
        if self.executor is None:
            return [fit.simulate_average(c, self.sim_config, n, self.simulator) for c in chromosomes]
        jobs = [(c, r) for c in chromosomes for r in range(n)]
        runs = list(self.executor.map(self.simulator, [self.sim_config] * len(jobs),
                                      [c for c, _ in jobs], [r for _, r in jobs]))
        return [IndicatorSeries.mean(runs[i * n:(i + 1) * n]) for i in range(len(chromosomes))]

    def score_batch(self, chromosomes: Sequence[Chromosome]) -> List[fit.FitnessValue]:
        if self.executor is None:
            self.simulation_calls += self.repetitions * len(chromosomes)
            return [fit.evaluate(c, self.sim_config, self.repetitions, self.observed, simulator=self.simulator)
                    for c in chromosomes]
        return [fit.score_average(c, averaged, self.observed)
                for c, averaged in zip(chromosomes, self.averaged_indicators(chromosomes))]

    def get_statistics(self) -> dict:
        stats = super().get_statistics()
        stats["simulation_calls"] = self.simulation_calls
        stats["repetitions"] = self.repetitions
        return stats

    def close(self):
        if self._executor is not None:
            self._executor.shutdown()
            self._executor = None
