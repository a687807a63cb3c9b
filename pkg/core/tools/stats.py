"""
Sensitivity analysis of the fitness score.

Uniformly sampled chromosomes are scored once each; the resulting matrix is
summarized by per-parameter Pearson correlation (and r^2) with the fitness,
and by an ordinary-least-squares meta-model with standard errors, t
statistics and two-sided p-values from the Student-t distribution.
"""

import logging
import math
from dataclasses import dataclass
from typing import Dict, List, Optional, Sequence

import numpy as np
import pandas as pd
from scipy import linalg
from scipy.special import betainc

from core.models.base_evaluator import BaseEvaluator
from core.tools.param_space import Chromosome, ParameterSpace, sample_uniform, validate
from core.utils import utilities as utils

logger = logging.getLogger(__name__)

FITNESS_COLUMN = "fitness"
INTERCEPT = "Intercept"
ANALYSIS_COLUMNS = ["term", "pearson_r", "r_squared", "coefficient", "standard_error", "t_stat", "p_value"]
# Pivoted-QR diagonal entries below this fraction of the largest count as zero
RANK_TOLERANCE = 1e-10


class ConstantVectorError(ValueError):
    pass


class RankDeficiencyError(ValueError):
    pass


class TooFewSamplesError(ValueError):
    pass


@dataclass
class SampleMatrix:
    space: ParameterSpace
    chromosomes: np.ndarray  # rows x parameters
    fitness: np.ndarray

    def __post_init__(self):
        # Row-major regardless of source; QR rounding depends on memory layout
        self.chromosomes = np.ascontiguousarray(np.asarray(self.chromosomes, dtype=np.float64).reshape(-1, len(self.space)))
        self.fitness = np.ascontiguousarray(np.asarray(self.fitness, dtype=np.float64).reshape(-1))
        if self.chromosomes.shape[0] != self.fitness.shape[0]:
            raise ValueError(f"{self.chromosomes.shape[0]} chromosomes for {self.fitness.shape[0]} fitness values")

    def __len__(self) -> int:
        return self.fitness.shape[0]

    def column(self, name: str) -> np.ndarray:
        return self.chromosomes[:, self.space.index(name)]

    def to_frame(self) -> pd.DataFrame:
        frame = pd.DataFrame(self.chromosomes, columns=self.space.names)
        frame[FITNESS_COLUMN] = self.fitness
        return frame


@dataclass(frozen=True)
class CorrelationEntry:
    name: str
    pearson_r: Optional[float]  # None when the parameter column is constant

    @property
    def r_squared(self) -> Optional[float]:
        return None if self.pearson_r is None else self.pearson_r ** 2


@dataclass
class CorrelationReport:
    entries: List[CorrelationEntry]
    samples: int = 0

    def __getitem__(self, name: str) -> CorrelationEntry:
        for entry in self.entries:
            if entry.name == name:
                return entry
        raise KeyError(name)

    def strongest(self) -> Optional[CorrelationEntry]:
        defined = [e for e in self.entries if e.pearson_r is not None]
        return max(defined, key=lambda e: abs(e.pearson_r)) if defined else None


@dataclass(frozen=True)
class RegressionTerm:
    name: str
    coefficient: float
    standard_error: float
    t_stat: float
    p_value: float


@dataclass
class RegressionReport:
    intercept: RegressionTerm
    terms: List[RegressionTerm]
    model_r_squared: float
    degrees_of_freedom: int
    observations: int

    def __getitem__(self, name: str) -> RegressionTerm:
        if name == INTERCEPT:
            return self.intercept
        for term in self.terms:
            if term.name == name:
                return term
        raise KeyError(name)

    @property
    def all_terms(self) -> List[RegressionTerm]:
        return [self.intercept] + self.terms


# ==============================
# SAMPLING EXPERIMENT
# ==============================
def run_sampling(space: ParameterSpace, evaluator: BaseEvaluator, n: int, rng: np.random.Generator) -> SampleMatrix:
    """n uniform chromosomes scored by the evaluator; all chromosomes are drawn before any scoring"""
    if n < 2:
        raise ValueError(f"Sensitivity analysis needs at least 2 samples, got {n}")
    chromosomes = [sample_uniform(space, rng) for _ in range(n)]
    logger.info(f"Scoring {n} uniformly sampled chromosomes with {evaluator.get_model_name()}")
    scores = evaluator.evaluate_population(chromosomes)
    return SampleMatrix(space, np.array([c.values for c in chromosomes]), np.array([s.f for s in scores]))


# ==============================
# CORRELATION
# ==============================
def pearson(x: Sequence[float], y: Sequence[float]) -> float:
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    if x.shape != y.shape or x.ndim != 1:
        raise ValueError(f"pearson needs two vectors of equal length, got shapes {x.shape} and {y.shape}")
    if x.size < 2:
        raise ValueError("pearson needs at least 2 observations")
    dx = x - x.mean()
    dy = y - y.mean()
    sxx = float(dx @ dx)
    syy = float(dy @ dy)
    if sxx == 0 or syy == 0:
        raise ConstantVectorError("Correlation is undefined for a constant vector")
    r = float(dx @ dy) / math.sqrt(sxx * syy)
    return max(-1.0, min(1.0, r))


def correlation_report(m: SampleMatrix) -> CorrelationReport:
    if len(m) < 2:
        raise ValueError("Correlation needs at least 2 samples")
    entries = []
    for name in m.space.names:
        try:
            r = pearson(m.column(name), m.fitness)
        except ConstantVectorError:
            logger.warning(f"Correlation of {name} with fitness is undefined (constant column)")
            r = None
        entries.append(CorrelationEntry(name, r))
    return CorrelationReport(entries, len(m))


def parameter_correlation_matrix(m: SampleMatrix) -> pd.DataFrame:
    """Pairwise Pearson correlation between input parameters; NaN where a column is constant"""
    names = m.space.names
    matrix = np.full((len(names), len(names)), np.nan)
    for i, a in enumerate(names):
        for j, b in enumerate(names):
            try:
                matrix[i, j] = pearson(m.column(a), m.column(b))
            except ConstantVectorError:
                pass
    return pd.DataFrame(matrix, index=names, columns=names)


# ==============================
# STUDENT-T DISTRIBUTION
# ==============================
def student_t_cdf(t: float, df: float) -> float:
    """P(T <= t) via the regularized incomplete beta function I_x(df/2, 1/2), x = df / (df + t^2)"""
    if df <= 0:
        raise ValueError(f"degrees of freedom must be positive, got {df}")
    if math.isinf(t):
        return 1.0 if t > 0 else 0.0
    tail = 0.5 * float(betainc(df / 2.0, 0.5, df / (df + t * t)))
    return 1.0 - tail if t > 0 else tail


def two_sided_p_value(t: float, df: float) -> float:
    if math.isnan(t):
        return float("nan")
    if math.isinf(t):
        return 0.0
    return min(1.0, float(betainc(df / 2.0, 0.5, df / (df + t * t))))


# ==============================
# LINEAR META-MODEL
# ==============================
def ols_fit(m: SampleMatrix) -> RegressionReport:
    """
    OLS of fitness on all parameters plus intercept, solved by QR
    decomposition of the design matrix.

    SE_j = sqrt(s^2 * [(X'X)^-1]_jj) with s^2 = SSR / (n - p - 1); the
    inverse Gram diagonal comes from R^-1 so X'X is never formed.
    """
    names = [INTERCEPT] + m.space.names
    n, p = m.chromosomes.shape
    if n <= p + 1:
        raise TooFewSamplesError(f"Regression on {p} parameters needs more than {p + 1} samples, got {n}")
    X = np.column_stack([np.ones(n), m.chromosomes])
    y = m.fitness

    _check_rank(X, names)
    q, r = linalg.qr(X, mode="economic")
    beta = linalg.solve_triangular(r, q.T @ y)

    residuals = y - X @ beta
    dof = n - p - 1
    ssr = float(residuals @ residuals)
    centered = y - y.mean()
    sst = float(centered @ centered)
    r_squared = 1.0 - ssr / sst if sst > 0 else 1.0
    r_squared = min(1.0, max(0.0, r_squared))

    r_inv = linalg.solve_triangular(r, np.eye(p + 1))
    gram_inv_diag = np.sum(r_inv ** 2, axis=1)
    standard_errors = np.sqrt(ssr / dof * gram_inv_diag)

    terms = []
    for name, coefficient, se in zip(names, beta, standard_errors):
        with np.errstate(divide="ignore", invalid="ignore"):
            t = float(coefficient / se) if se > 0 else math.copysign(math.inf, coefficient)
        terms.append(RegressionTerm(name, float(coefficient), float(se), t, two_sided_p_value(t, dof)))
    return RegressionReport(terms[0], terms[1:], r_squared, dof, n)


def _check_rank(X: np.ndarray, names: List[str]):
    _, r, pivots = linalg.qr(X, mode="economic", pivoting=True)
    diagonal = np.abs(np.diag(r))
    tolerance = diagonal.max() * RANK_TOLERANCE if diagonal.size else 0.0
    rank = int(np.sum(diagonal > tolerance))
    if rank < X.shape[1]:
        collinear = [names[i] for i in pivots[rank:]]
        raise RankDeficiencyError(f"Design matrix has rank {rank} of {X.shape[1]}; collinear column(s): {collinear}")


# ==============================
# FILES AND TABLES
# ==============================
def write_samples_csv(m: SampleMatrix, path: str):
    utils.write_frame(m.to_frame(), path)


def load_samples_csv(space: ParameterSpace, path: str) -> SampleMatrix:
    frame = utils.read_frame(path, space.names + [FITNESS_COLUMN])
    m = SampleMatrix(space, frame[space.names].to_numpy(dtype=np.float64), frame[FITNESS_COLUMN].to_numpy(dtype=np.float64))
    for i, row in enumerate(m.chromosomes):
        problems = validate(space, Chromosome.from_array(row))
        if problems:
            raise ValueError(f"{path}: sample {i} is outside the parameter space: {problems[0]}")
    return m


def analysis_frame(correlation: CorrelationReport, regression: Optional[RegressionReport]) -> pd.DataFrame:
    """One row per term; regression columns are NaN when the meta-model could not be fitted"""
    terms = {t.name: t for t in regression.all_terms} if regression is not None else {}
    rows = []
    for name in [INTERCEPT] + [e.name for e in correlation.entries]:
        entry = None if name == INTERCEPT else correlation[name]
        term = terms.get(name)
        rows.append({
            "term": name,
            "pearson_r": np.nan if entry is None or entry.pearson_r is None else entry.pearson_r,
            "r_squared": np.nan if entry is None or entry.r_squared is None else entry.r_squared,
            "coefficient": np.nan if term is None else term.coefficient,
            "standard_error": np.nan if term is None else term.standard_error,
            "t_stat": np.nan if term is None else term.t_stat,
            "p_value": np.nan if term is None else term.p_value,
        })
    return pd.DataFrame(rows, columns=ANALYSIS_COLUMNS)


def format_analysis_text(correlation: CorrelationReport, regression: Optional[RegressionReport]) -> str:
    width = max(len(n) for n in [INTERCEPT] + [e.name for e in correlation.entries]) + 2
    lines = [f"Correlation and r^2 between input parameters and fitness ({correlation.samples} samples)", ""]
    lines.append(f"{'Input Parameter':<{width}}{'Pearson r':>12}{'r^2':>10}")
    for e in correlation.entries:
        r = "undefined" if e.pearson_r is None else f"{e.pearson_r:.3f}"
        r2 = "undefined" if e.r_squared is None else f"{e.r_squared:.3f}"
        lines.append(f"{e.name:<{width}}{r:>12}{r2:>10}")
    if regression is None:
        lines += ["", f"Linear regression unavailable: {len(correlation.entries)} parameters need more than "
                      f"{len(correlation.entries) + 1} samples"]
        return "\n".join(lines) + "\n"
    lines += ["", f"Linear regression (R^2 = {regression.model_r_squared:.3f}, "
                  f"{regression.degrees_of_freedom} degrees of freedom)", ""]
    lines.append(f"{'':<{width}}{'Coefficients':>14}{'Std. Error':>14}{'t Stat':>12}{'P-value':>10}")
    for t in regression.all_terms:
        lines.append(f"{t.name:<{width}}{t.coefficient:>14.4g}{t.standard_error:>14.4g}{t.t_stat:>12.4g}{t.p_value:>10.4f}")
    return "\n".join(lines) + "\n"


def summarize(m: SampleMatrix) -> Dict[str, object]:
    """
    Correlation report, regression report and the pairwise parameter
    correlations of one sample matrix. The regression is None when there are
    too few samples to fit it; the correlations are still reported.
    """
    correlation = correlation_report(m)
    try:
        regression = ols_fit(m)
    except TooFewSamplesError as e:
        logger.warning(f"Skipping the linear meta-model: {e}")
        regression = None
    return {
        "correlation": correlation,
        "regression": regression,
        "parameter_correlations": parameter_correlation_matrix(m),
    }
