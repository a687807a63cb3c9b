# ==============================
# CALIBRATION PARAMETER SPACE
# ==============================
import logging
from dataclasses import dataclass
from enum import Enum
from typing import Dict, List, Mapping, Sequence, Tuple

import numpy as np

from core.utils import utilities as utils

logger = logging.getLogger(__name__)


class ParameterKind(Enum):
    INTEGER = "integer"
    REAL = "real"


@dataclass(frozen=True)
class ParameterDef:
    name: str
    lower: float
    upper: float
    kind: ParameterKind

    def __post_init__(self):
        if not self.lower < self.upper:
            raise ValueError(f"{self.name}: lower bound {self.lower} must be below upper bound {self.upper}")
        if self.kind is ParameterKind.INTEGER and not (float(self.lower).is_integer() and float(self.upper).is_integer()):
            raise ValueError(f"{self.name}: integer parameter needs whole-number bounds")

    @property
    def width(self) -> float:
        return self.upper - self.lower

    @property
    def midpoint(self) -> float:
        middle = (self.lower + self.upper) / 2.0
        return float(np.round(middle)) if self.kind is ParameterKind.INTEGER else middle


@dataclass(frozen=True)
class ParameterSpace:
    params: Tuple[ParameterDef, ...]

    def __post_init__(self):
        names = [p.name for p in self.params]
        duplicates = sorted({n for n in names if names.count(n) > 1})
        if duplicates:
            raise ValueError(f"Duplicate parameter names: {duplicates}")

    def __len__(self) -> int:
        return len(self.params)

    @property
    def names(self) -> List[str]:
        return [p.name for p in self.params]

    @property
    def lower(self) -> np.ndarray:
        return np.array([p.lower for p in self.params], dtype=np.float64)

    @property
    def upper(self) -> np.ndarray:
        return np.array([p.upper for p in self.params], dtype=np.float64)

    @property
    def integer_mask(self) -> np.ndarray:
        return np.array([p.kind is ParameterKind.INTEGER for p in self.params])

    def index(self, name: str) -> int:
        try:
            return self.names.index(name)
        except ValueError:
            raise KeyError(f"Unknown parameter '{name}'. Accepted: {self.names}") from None

    def to_records(self) -> List[dict]:
        return [{"name": p.name, "lower": p.lower, "upper": p.upper, "kind": p.kind.value} for p in self.params]


@dataclass(frozen=True)
class Chromosome:
    """One assignment of the calibration parameters, aligned to ParameterSpace order"""
    values: Tuple[float, ...]

    @classmethod
    def from_array(cls, values: Sequence[float]) -> "Chromosome":
        return cls(tuple(float(v) for v in values))

    def as_array(self) -> np.ndarray:
        return np.array(self.values, dtype=np.float64)

    def key(self) -> bytes:
        return utils.values_to_blob(self.values)

    def as_dict(self, space: ParameterSpace) -> Dict[str, float]:
        return dict(zip(space.names, self.values))

    def __getitem__(self, i: int) -> float:
        return self.values[i]

    def __len__(self) -> int:
        return len(self.values)


@dataclass(frozen=True)
class Violation:
    name: str
    reason: str


# Order is canonical: the index of a parameter is part of the chromosome layout
_DEFAULT_PARAMS = (
    ("ageMinHavingChild", 15, 20, ParameterKind.INTEGER),
    ("ageMaxHavingChild", 40, 50, ParameterKind.INTEGER),
    ("nbChild", 1, 6, ParameterKind.INTEGER),
    ("probabilityToMakeCouple", 0.0, 0.05, ParameterKind.REAL),
    ("nbJoinTrials", 1, 50, ParameterKind.INTEGER),
    ("splittingProba", 0.0, 1.0, ParameterKind.REAL),
    ("probToAcceptNewResidence", 0.0, 1.0, ParameterKind.REAL),
    ("resSatisfactMargin", 0, 3, ParameterKind.INTEGER),
    ("probStudyOutside", 0.0, 1.0, ParameterKind.REAL),
    ("probLookingRegionalJobs", 0.0, 1.0, ParameterKind.REAL),
    ("jobVacancyRate", 0.0, 1.0, ParameterKind.REAL),
)

# Published post-calibration values for one adapted region (no probStudyOutside)
CALIBRATED_REFERENCE = {
    "ageMinHavingChild": 19,
    "ageMaxHavingChild": 41,
    "nbChild": 2,
    "probabilityToMakeCouple": 0.0289,
    "nbJoinTrials": 19,
    "splittingProba": 0.124,
    "probToAcceptNewResidence": 0.0608,
    "resSatisfactMargin": 0,
    "probLookingRegionalJobs": 0.0575,
    "jobVacancyRate": 0.021,
}


def default_space() -> ParameterSpace:
    return ParameterSpace(tuple(
        ParameterDef(name, float(lower), float(upper), kind) for name, lower, upper, kind in _DEFAULT_PARAMS))


def space_from_records(records: Sequence[Mapping]) -> ParameterSpace:
    """Build a space from name/lower/upper/kind records; must cover the canonical parameters in order"""
    space = ParameterSpace(tuple(
        ParameterDef(str(r["name"]), float(r["lower"]), float(r["upper"]), ParameterKind(r["kind"]))
        for r in records))
    expected = default_space().names
    if space.names != expected:
        raise ValueError(f"Parameter space override must list {expected} in this order, got {space.names}")
    return space


def sample_uniform(space: ParameterSpace, rng: np.random.Generator) -> Chromosome:
    values = []
    for p in space.params:
        if p.kind is ParameterKind.INTEGER:
            values.append(float(rng.integers(int(p.lower), int(p.upper), endpoint=True)))
        else:
            values.append(float(rng.uniform(p.lower, p.upper)))
    return Chromosome(tuple(values))


def validate(space: ParameterSpace, c: Chromosome) -> List[Violation]:
    """Every out-of-range or non-integer slot, by name. Empty list means valid."""
    if len(c) != len(space):
        return [Violation("<chromosome>", f"expected {len(space)} values, got {len(c)}")]
    violations = []
    for p, v in zip(space.params, c.values):
        if not np.isfinite(v):
            violations.append(Violation(p.name, "not a finite number"))
            continue
        if v < p.lower:
            violations.append(Violation(p.name, f"lower bound {p.lower:g}"))
        elif v > p.upper:
            violations.append(Violation(p.name, f"upper bound {p.upper:g}"))
        if p.kind is ParameterKind.INTEGER and not float(v).is_integer():
            violations.append(Violation(p.name, "non-integer"))
    return violations


def is_valid(space: ParameterSpace, c: Chromosome) -> bool:
    return not validate(space, c)


def clamp_and_round(space: ParameterSpace, c: Chromosome) -> Chromosome:
    values = c.as_array()
    mask = space.integer_mask
    values[mask] = np.round(values[mask])
    values = np.clip(values, space.lower, space.upper)
    return Chromosome.from_array(values)


def chromosome_from_mapping(space: ParameterSpace, mapping: Mapping[str, float],
                            fill_missing: bool = True) -> Chromosome:
    """
    Build a chromosome from name -> value pairs (params files).

    Missing parameters take the middle of their range when fill_missing is set;
    unknown names are always an error.
    """
    unknown = sorted(set(mapping) - set(space.names))
    if unknown:
        raise KeyError(f"Unknown parameter(s) {unknown}. Accepted: {space.names}")
    values = []
    for p in space.params:
        if p.name in mapping:
            values.append(float(mapping[p.name]))
        elif fill_missing:
            logger.warning(f"Parameter {p.name} not given, using mid-range value {p.midpoint:g}")
            values.append(p.midpoint)
        else:
            raise KeyError(f"Missing parameter '{p.name}'")
    return Chromosome(tuple(values))
