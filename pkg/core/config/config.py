# CONFIGURATION

import os

from core.models.evaluator_factory import EvaluatorType

# Default experiment file picked up when --config is not given
CONFIG_FILE = "calibration_config.json"

# OUTPUT FILES
TRAJECTORY_FILE = "trajectory.csv"
BEST_PARAMS_FILE = "best_params.csv"
BEST_INDICATORS_FILE = "best_indicators.csv"
SUMMARY_FILE = "summary.json"
SAMPLES_FILE = "samples.csv"
ANALYSIS_CSV_FILE = "analysis.csv"
ANALYSIS_TEXT_FILE = "analysis.txt"
PARAMETER_CORRELATIONS_FILE = "parameter_correlations.csv"
MEAN_INDICATORS_FILE = "indicators_mean.csv"
REPETITION_INDICATORS_PATTERN = "indicators_rep{index:03d}.csv"
OBSERVED_FILE = "observed.csv"
WORLD_SNAPSHOT_FILE = "world_snapshot.jsonl"

LOG_FORMAT = "%(asctime)s - %(levelname)s - %(message)s"

# GA CONFIGURATION
POPULATION_SIZE = 50
MAX_GENERATIONS = 500
PLATEAU_GENERATIONS = 200
TRUNCATION_FRACTION = 0.5
MUTATION_RATE = 0.1
MUTATION_SCALE = 0.1
REPETITIONS = 5  # Simulation runs averaged per chromosome
MASTER_SEED = 20111111
IMPROVEMENT_TOLERANCE = 1e-12

# SIMULATION CONFIGURATION
START_YEAR = 2000
STEPS = 10  # 2000 -> 2010
REPETITION_SEED_BASE = 7_340_033
SIMULATE_REPETITIONS = 100

RETIREMENT_AGE = 65
HIGHER_EDUCATION_AGE = 18  # Students leave school at this age: out of the region or into the labor market
ADULT_AGE = 18
MAX_AGE = 120
JOB_SEPARATION_RATE = 0.05
JOB_RELOCATION_PROBABILITY = 0.5  # A job changer working in another municipality moves there with their household

# Yearly death probability, piecewise constant: (first age of band, hazard)
DEATH_HAZARD = [
    (0, 0.004),
    (1, 0.0003),
    (15, 0.0005),
    (45, 0.003),
    (65, 0.015),
    (75, 0.04),
    (85, 0.12),
    (MAX_AGE, 1.0),
]

# Lower edges of the age groups used by the age-grouped indicators; last group is open
AGE_BIN_EDGES = [0, 15, 30, 45, 65]

# Household size mix used when synthesizing the initial population (sizes 1-4)
HOUSEHOLD_SIZE_WEIGHTS = [0.34, 0.33, 0.15, 0.18]

# Adult age bands used when synthesizing the initial population: (lowest age, highest age, weight)
ADULT_AGE_BANDS = [
    (18, 29, 0.18),
    (30, 44, 0.26),
    (45, 64, 0.34),
    (65, 90, 0.22),
]

# Activity mix of working-age adults at initialization
ACTIVITY_MIX = {"worker": 0.72, "unemployed": 0.1, "inactive": 0.18}

# SELF-CHECK CONFIGURATION
SELFCHECK_POPULATION_SIZE = 30
SELFCHECK_MAX_GENERATIONS = 150
SELFCHECK_PLATEAU_GENERATIONS = 60
SELFCHECK_REPETITIONS = 3
SELFCHECK_OBSERVED_REPETITIONS = 5
SELFCHECK_PASS_RATIO = 0.10  # best fitness must fall to this fraction of the initial median


# THREAD CONFIGURATION - Robust core detection
def get_thread_count():
    """Safely detect the number of usable CPU cores"""
    try:
        if hasattr(os, "sched_getaffinity"):
            count = len(os.sched_getaffinity(0))
        else:
            count = os.cpu_count() or 1
        return max(1, count)
    except Exception:
        # If the platform refuses to tell, run single-process
        return 1


THREADS = get_thread_count()

EVALUATOR_MODEL = EvaluatorType.SIMULATION
