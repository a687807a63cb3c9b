import json

import pandas as pd
import pytest

from core.config import config
from core.config.settings import ExperimentConfig, GAConfig, SelfCheckConfig, SimConfig, SynthesisSpec, \
    save_experiment_config
from core.main import main
from core.tools.indicators import IndicatorSeries, load_observed_csv
from tests.conftest import reference_observed

TINY_WORLD = SynthesisSpec(municipalities=1, districts=1, individuals_per_municipality=60, sectors=2)


@pytest.fixture()
def experiment_file(tmp_path):
    experiment = ExperimentConfig(
        sim=SimConfig(steps=2, synthesis=TINY_WORLD),
        ga=GAConfig(population_size=8, max_generations=5, plateau_generations=5, repetitions=2),
        selfcheck=SelfCheckConfig(population_size=6, max_generations=5, plateau_generations=5, repetitions=1,
                                  observed_repetitions=2, synthesis=TINY_WORLD),
    )
    path = tmp_path / "experiment.json"
    save_experiment_config(experiment, str(path))
    return path


@pytest.fixture()
def observed_file(tmp_path):
    path = tmp_path / "observed.csv"
    reference_observed(SimConfig(steps=2, synthesis=TINY_WORLD), 2).write_csv(str(path))
    return path


def run_cli(command, experiment_file, out, *extra):
    return main([command, "--config", str(experiment_file), "--out", str(out), "--threads", "1", *extra])


def test_calibrate_writes_results(tmp_path, experiment_file, observed_file):
    out = tmp_path / "calibration"
    assert run_cli("calibrate", experiment_file, out, "--observed", str(observed_file)) == 0

    trajectory = pd.read_csv(out / config.TRAJECTORY_FILE)
    assert list(trajectory.columns) == ["generation", "best", "mean", "evaluations", "cache_hits"]
    assert trajectory["best"].is_monotonic_decreasing
    params = pd.read_csv(out / config.BEST_PARAMS_FILE)
    assert len(params) == 11
    summary = json.loads((out / config.SUMMARY_FILE).read_text())
    assert summary["stop_reason"] in ("maxGenerations", "plateau")
    assert summary["generations"] == len(trajectory)
    assert summary["best_fitness"] == pytest.approx(trajectory["best"].iloc[-1], rel=1e-12)
    assert summary["cache_hits"] + summary["cache_misses"] == summary["evaluations"]
    load_observed_csv(str(out / config.BEST_INDICATORS_FILE))


def test_missing_observed_file(tmp_path, experiment_file, capsys):
    missing = tmp_path / "absent.csv"
    assert run_cli("calibrate", experiment_file, tmp_path / "out", "--observed", str(missing)) == 1
    assert "absent.csv" in capsys.readouterr().err


def test_missing_config_file(tmp_path, observed_file):
    assert main(["calibrate", "--config", str(tmp_path / "nope.json"), "--observed", str(observed_file)]) == 1


def test_trajectory_does_not_depend_on_worker_count(tmp_path, experiment_file, observed_file):
    single, pooled = tmp_path / "single", tmp_path / "pooled"
    assert main(["calibrate", "--config", str(experiment_file), "--observed", str(observed_file),
                 "--out", str(single), "--threads", "1", "--seed", "42"]) == 0
    assert main(["calibrate", "--config", str(experiment_file), "--observed", str(observed_file),
                 "--out", str(pooled), "--threads", "4", "--seed", "42"]) == 0
    assert (single / config.TRAJECTORY_FILE).read_bytes() == (pooled / config.TRAJECTORY_FILE).read_bytes()
    assert (single / config.BEST_PARAMS_FILE).read_bytes() == (pooled / config.BEST_PARAMS_FILE).read_bytes()


def test_simulate_averages_repetitions(tmp_path, experiment_file, observed_file):
    params = tmp_path / "params.csv"
    params.write_text("name,value\nageMinHavingChild,19\nnbChild,2\njobVacancyRate,0.021\n")
    out = tmp_path / "simulation"
    assert run_cli("simulate", experiment_file, out, "--params", str(params), "--repetitions", "3",
                   "--observed", str(observed_file), "--world-snapshot") == 0

    runs = [load_observed_csv(str(out / config.REPETITION_INDICATORS_PATTERN.format(index=r))) for r in range(3)]
    assert IndicatorSeries.mean(runs) == load_observed_csv(str(out / config.MEAN_INDICATORS_FILE))
    assert (out / config.WORLD_SNAPSHOT_FILE).exists()


def test_simulate_rejects_out_of_range_params(tmp_path, experiment_file):
    params = tmp_path / "params.csv"
    params.write_text("name,value\nnbChild,9\n")
    assert run_cli("simulate", experiment_file, tmp_path / "out", "--params", str(params)) == 1


@pytest.mark.parametrize("flags", [["--repetitions", "0"], ["--samples", "1"], ["--threads", "0"]])
def test_bad_counts_are_usage_errors(tmp_path, experiment_file, observed_file, flags):
    assert run_cli("sensitivity", experiment_file, tmp_path / "out", "--observed", str(observed_file), *flags) == 2


def test_unknown_command():
    assert main(["optimize"]) == 2


def test_sensitivity_then_analyze(tmp_path, experiment_file, observed_file):
    out = tmp_path / "sensitivity"
    assert run_cli("sensitivity", experiment_file, out, "--observed", str(observed_file), "--samples", "50") == 0

    samples = pd.read_csv(out / config.SAMPLES_FILE)
    assert len(samples) == 50
    assert list(samples.columns)[-1] == "fitness"
    analysis = pd.read_csv(out / config.ANALYSIS_CSV_FILE)
    assert len(analysis) == 12
    assert analysis["term"].iloc[0] == "Intercept"
    assert (out / config.ANALYSIS_TEXT_FILE).read_text().startswith("Correlation")

    again = tmp_path / "again"
    assert run_cli("analyze", experiment_file, again, "--samples-file", str(out / config.SAMPLES_FILE)) == 0
    for name in (config.ANALYSIS_CSV_FILE, config.ANALYSIS_TEXT_FILE, config.PARAMETER_CORRELATIONS_FILE):
        assert (again / name).read_bytes() == (out / name).read_bytes()


def test_sensitivity_with_few_samples_still_reports_correlations(tmp_path, experiment_file, observed_file):
    out = tmp_path / "few"
    assert run_cli("sensitivity", experiment_file, out, "--observed", str(observed_file), "--samples", "5") == 0
    analysis = pd.read_csv(out / config.ANALYSIS_CSV_FILE)
    assert len(analysis) == 12
    assert analysis["coefficient"].isna().all()
    assert "Linear regression unavailable" in (out / config.ANALYSIS_TEXT_FILE).read_text()
    summary = json.loads((out / config.SUMMARY_FILE).read_text())
    assert summary["samples"] == 5
    assert summary["model_r_squared"] is None


def test_selfcheck_smoke(tmp_path, experiment_file):
    out = tmp_path / "selfcheck"
    assert run_cli("selfcheck", experiment_file, out, "--plateau", "5", "--max-gens", "5") in (0, 1)
    summary = json.loads((out / config.SUMMARY_FILE).read_text())
    assert summary["generations"] <= 5
    assert summary["threshold"] == pytest.approx(0.1 * summary["initial_median_fitness"])
    assert set(summary["hidden_params"]) == set(summary["recovered_params"])
    assert (out / config.OBSERVED_FILE).exists()


# ==============================
# ACCEPTANCE RUNS (pytest -m slow)
# ==============================
@pytest.mark.slow
def test_selfcheck_recovers_hidden_parameters(tmp_path):
    assert main(["selfcheck", "--out", str(tmp_path / "selfcheck")]) == 0


@pytest.mark.slow
def test_job_vacancy_rate_dominates_sensitivity(tmp_path):
    sim = SimConfig(synthesis=SynthesisSpec(municipalities=2, individuals_per_municipality=100))
    experiment = tmp_path / "experiment.json"
    save_experiment_config(ExperimentConfig(sim=sim, ga=GAConfig(repetitions=2)), str(experiment))
    observed = tmp_path / "observed.csv"
    reference_observed(sim, 5, overrides={"jobVacancyRate": 0.02}).write_csv(str(observed))

    out = tmp_path / "sensitivity"
    assert main(["sensitivity", "--config", str(experiment), "--observed", str(observed), "--out", str(out),
                 "--samples", "500"]) == 0
    summary = json.loads((out / config.SUMMARY_FILE).read_text())
    assert summary["strongest_parameter"] == "jobVacancyRate"
