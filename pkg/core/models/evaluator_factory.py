from abc import ABC
from enum import Enum


class EvaluatorType(Enum):
    SIMULATION = 'simulation'
    SPHERE = 'sphere'


class EvaluatorFactory(ABC):
    @staticmethod
    def get_evaluator(evaluator_type: EvaluatorType, **kwargs):
        """
        Factory method to create fitness evaluators based on the specified type.

        Args:
            evaluator_type (EvaluatorType): Type of evaluator to create (e.g., EvaluatorType.SIMULATION).
            **kwargs: Additional parameters for evaluator initialization.

        Returns:
            BaseEvaluator: An instance of a fitness evaluator.
        """
        if evaluator_type.value == 'simulation':
            from core.models.simulation_evaluator import SimulationEvaluator
            return SimulationEvaluator(**kwargs)
        elif evaluator_type.value == 'sphere':
            from core.models.analytic_evaluator import AnalyticEvaluator
            return AnalyticEvaluator.sphere(**kwargs)
        else:
            raise ValueError(f"Unknown evaluator type: {evaluator_type}")
