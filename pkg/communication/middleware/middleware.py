import json
import logging
import os
import time
from typing import Optional

import numpy as np
from pydantic import BaseModel, ConfigDict, Field

from core.config import config
from core.config.settings import ExperimentConfig, GAConfig, SimConfig, load_experiment_config
from core.models.evaluator_factory import EvaluatorFactory
from core.tools import fitness as fit
from core.tools import ga_engine, microsim, stats
from core.tools.indicators import IndicatorSeries, load_observed_csv
from core.tools.param_space import default_space, sample_uniform, space_from_records, validate
from core.utils import utilities as utils

logger = logging.getLogger(__name__)


class RunManifest(BaseModel):
    """What one command invocation needs: inputs, output directory, seed and parallelism"""
    model_config = ConfigDict(extra="forbid")

    command: str
    config_path: Optional[str] = None
    observed_data_path: Optional[str] = None
    output_directory: str = "output"
    master_seed: Optional[int] = Field(default=None, ge=0, lt=2 ** 64)
    thread_count: int = Field(default=config.THREADS, ge=1)
    repetitions: Optional[int] = Field(default=None, ge=1)
    samples: Optional[int] = None
    params_path: Optional[str] = None
    samples_path: Optional[str] = None
    max_generations: Optional[int] = Field(default=None, ge=1)
    plateau_generations: Optional[int] = Field(default=None, ge=1)
    world_snapshot: bool = False


class Middleware:
    """Middleware layer between the command line and the calibration engines"""

    def __init__(self, manifest: RunManifest):
        self.manifest = manifest
        self.experiment = self._apply_overrides(load_experiment_config(manifest.config_path))
        if self.experiment.parameter_space is not None:
            self.space = space_from_records([r.model_dump() for r in self.experiment.parameter_space])
        else:
            self.space = default_space()

    def _apply_overrides(self, experiment: ExperimentConfig) -> ExperimentConfig:
        m = self.manifest
        ga_updates, sim_updates = {}, {}
        if m.master_seed is not None:
            ga_updates["master_seed"] = m.master_seed
            sim_updates["repetition_seed_base"] = m.master_seed
        if m.repetitions is not None:
            ga_updates["repetitions"] = m.repetitions
        if m.max_generations is not None:
            ga_updates["max_generations"] = m.max_generations
        if m.plateau_generations is not None:
            ga_updates["plateau_generations"] = m.plateau_generations
        if ga_updates.get("plateau_generations", experiment.ga.plateau_generations) > \
                ga_updates.get("max_generations", experiment.ga.max_generations):
            ga_updates["plateau_generations"] = ga_updates.get("max_generations", experiment.ga.max_generations)
            logger.warning(f"plateau generations capped at max generations ({ga_updates['plateau_generations']})")
        for key, value in {**ga_updates, **sim_updates}.items():
            logger.info(f"Command-line override: {key} = {value}")
        # Re-validate rather than model_copy so the invariants are checked again
        ga = GAConfig.model_validate({**experiment.ga.model_dump(), **ga_updates})
        sim = SimConfig.model_validate({**experiment.sim.model_dump(), **sim_updates})
        return experiment.model_copy(update={"ga": ga, "sim": sim})

    def _evaluator(self, observed: IndicatorSeries, repetitions: int, sim: SimConfig = None):
        return EvaluatorFactory.get_evaluator(
            config.EVALUATOR_MODEL,
            sim_config=sim or self.experiment.sim, observed=observed, repetitions=repetitions,
            threads=self.manifest.thread_count)

    def _observed(self) -> IndicatorSeries:
        if not self.manifest.observed_data_path:
            raise ValueError("This command needs observed data (--observed)")
        return load_observed_csv(self.manifest.observed_data_path)

    def _output(self, name: str) -> str:
        return os.path.join(utils.ensure_directory(self.manifest.output_directory), name)

    def _write_summary(self, summary: dict):
        with open(self._output(config.SUMMARY_FILE), "w", encoding="utf-8") as f:
            json.dump(summary, f, indent=2, sort_keys=True)

    # ==============================
    # COMMANDS
    # ==============================
    def calibrate(self) -> dict:
        """Run the GA against observed data and record the fittest chromosome"""
        observed = self._observed()
        started = time.perf_counter()
        with self._evaluator(observed, self.experiment.ga.repetitions) as evaluator:
            result = ga_engine.run_ga(self.space, self.experiment.ga, evaluator)
            statistics = evaluator.get_statistics()
            best_series = evaluator.averaged_indicators([result.best_chromosome])[0]
        alignment = fit.align(best_series, observed)

        ga_engine.write_trajectory_csv(result, self._output(config.TRAJECTORY_FILE))
        ga_engine.write_best_params_csv(self.space, result.best_chromosome, self._output(config.BEST_PARAMS_FILE))
        best_series.write_csv(self._output(config.BEST_INDICATORS_FILE))
        summary = {
            "command": "calibrate",
            "stop_reason": result.stop_reason.value,
            "generations": result.generations_run,
            "best_fitness": result.best_fitness.f,
            "pairs_used": result.best_fitness.pairs_used,
            "pairs_skipped": result.best_fitness.pairs_skipped,
            "coverage_gaps": len(alignment.gaps),
            "fitness_by_indicator": {k.value: v for k, v in fit.fitness_breakdown(alignment).items()},
            "best_params": result.best_chromosome.as_dict(self.space),
            "wall_time_seconds": time.perf_counter() - started,
            **statistics,
        }
        self._write_summary(summary)
        return summary

    def simulate(self) -> dict:
        """Repeated runs at fixed parameters; per-repetition and averaged indicator files"""
        if not self.manifest.params_path:
            raise ValueError("simulate needs a params file (--params)")
        chromosome = ga_engine.load_params_csv(self.space, self.manifest.params_path)
        problems = validate(self.space, chromosome)
        if problems:
            raise ValueError(f"Params file {self.manifest.params_path} is outside the parameter space: "
                             + ", ".join(f"{v.name} ({v.reason})" for v in problems))
        repetitions = self.manifest.repetitions or config.SIMULATE_REPETITIONS
        sim = self.experiment.sim

        runs = []
        for r in range(repetitions):
            series = fit.simulate_replicate(sim, chromosome, r)
            series.write_csv(self._output(config.REPETITION_INDICATORS_PATTERN.format(index=r)))
            runs.append(series)
        averaged = IndicatorSeries.mean(runs)
        averaged.write_csv(self._output(config.MEAN_INDICATORS_FILE))

        if self.manifest.world_snapshot:
            world = microsim.run_world(sim, chromosome, utils.repetition_rng(sim.repetition_seed_base, 0))
            microsim.dump_world(world, self._output(config.WORLD_SNAPSHOT_FILE))

        summary = {"command": "simulate", "repetitions": repetitions, "entries": len(averaged),
                   "years": averaged.years, "params": chromosome.as_dict(self.space)}
        if self.manifest.observed_data_path:
            alignment = fit.align(averaged, self._observed())
            summary["fitness"] = fit.fitness(alignment.pairs).f
        self._write_summary(summary)
        return summary

    def sensitivity(self) -> dict:
        """Uniform sampling experiment followed by the correlation and regression analysis"""
        n = self.manifest.samples
        if n is None or n < 2:
            raise ValueError(f"Sensitivity analysis needs at least 2 samples, got {n}")
        observed = self._observed()
        started = time.perf_counter()
        with self._evaluator(observed, self.experiment.ga.repetitions) as evaluator:
            matrix = stats.run_sampling(self.space, evaluator, n, utils.master_rng(self.experiment.ga.master_seed))
            statistics = evaluator.get_statistics()
        stats.write_samples_csv(matrix, self._output(config.SAMPLES_FILE))
        summary = self._write_analysis(matrix)
        summary.update(command="sensitivity", wall_time_seconds=time.perf_counter() - started, **statistics)
        self._write_summary(summary)
        return summary

    def analyze(self) -> dict:
        """Re-run the analysis on an existing samples file"""
        path = self.manifest.samples_path or os.path.join(self.manifest.output_directory, config.SAMPLES_FILE)
        matrix = stats.load_samples_csv(self.space, path)
        summary = self._write_analysis(matrix)
        summary["command"] = "analyze"
        self._write_summary(summary)
        return summary

    def _write_analysis(self, matrix: stats.SampleMatrix) -> dict:
        results = stats.summarize(matrix)
        correlation, regression = results["correlation"], results["regression"]
        utils.write_frame(stats.analysis_frame(correlation, regression), self._output(config.ANALYSIS_CSV_FILE))
        with open(self._output(config.ANALYSIS_TEXT_FILE), "w", encoding="utf-8") as f:
            f.write(stats.format_analysis_text(correlation, regression))
        results["parameter_correlations"].to_csv(self._output(config.PARAMETER_CORRELATIONS_FILE),
                                                 lineterminator="\n", float_format="%.17g")
        strongest = correlation.strongest()
        return {
            "samples": len(matrix),
            "model_r_squared": regression.model_r_squared if regression is not None else None,
            "strongest_parameter": strongest.name if strongest else None,
            "strongest_pearson_r": strongest.pearson_r if strongest else None,
        }

    def selfcheck(self) -> dict:
        """
        Self-calibration: hide a chromosome, generate observed data from it,
        calibrate a small GA and check that the fit improves enough.
        """
        options = self.experiment.selfcheck
        seed = self.experiment.ga.master_seed
        hidden = sample_uniform(self.space, utils.master_rng(seed + 1))
        sim = self.experiment.sim.model_copy(update={"synthesis": options.synthesis})
        # Observed runs share the repetition streams of the GA (common random numbers)
        observed = fit.simulate_average(hidden, sim, options.observed_repetitions)
        observed.write_csv(self._output(config.OBSERVED_FILE))

        max_generations = self.manifest.max_generations or options.max_generations
        plateau = min(self.manifest.plateau_generations or options.plateau_generations, max_generations)
        ga = self.experiment.ga.model_copy(update={
            "population_size": options.population_size,
            "max_generations": max_generations,
            "plateau_generations": plateau,
            "repetitions": self.manifest.repetitions or options.repetitions,
        })
        ga = GAConfig.model_validate(ga.model_dump())

        started = time.perf_counter()
        with self._evaluator(observed, ga.repetitions, sim) as evaluator:
            result = ga_engine.run_ga(self.space, ga, evaluator)
            statistics = evaluator.get_statistics()
        ga_engine.write_trajectory_csv(result, self._output(config.TRAJECTORY_FILE))
        ga_engine.write_best_params_csv(self.space, result.best_chromosome, self._output(config.BEST_PARAMS_FILE))

        threshold = options.pass_ratio * result.initial_median
        widths = self.space.upper - self.space.lower
        errors = np.abs(result.best_chromosome.as_array() - hidden.as_array()) / widths
        summary = {
            "command": "selfcheck",
            "passed": bool(result.best_fitness.f <= threshold),
            "best_fitness": result.best_fitness.f,
            "initial_median_fitness": result.initial_median,
            "initial_best_fitness": result.initial_best,
            "threshold": threshold,
            "stop_reason": result.stop_reason.value,
            "generations": result.generations_run,
            "hidden_params": hidden.as_dict(self.space),
            "recovered_params": result.best_chromosome.as_dict(self.space),
            "normalized_param_errors": dict(zip(self.space.names, errors.tolist())),
            "wall_time_seconds": time.perf_counter() - started,
            **statistics,
        }
        self._write_summary(summary)
        return summary

