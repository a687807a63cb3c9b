"""
Output indicators shared by the simulation and the observed data.

An IndicatorSeries maps (indicator, subkey, geography, year) to a value. Counts
live at municipality level; household structure and sector of activity are
percentages at district level, so observed district tables compare directly
against aggregated simulation output.
"""

import logging
import os
from enum import Enum
from typing import Dict, Iterable, Iterator, List, NamedTuple, Sequence

import numpy as np
import pandas as pd

from core.utils import utilities as utils

logger = logging.getLogger(__name__)

CSV_COLUMNS = ["indicator", "subkey", "geo_level", "geo_id", "year", "value"]


class GeoLevel(Enum):
    MUNICIPALITY = "municipality"
    DISTRICT = "district"


class Indicator(Enum):
    AGE_STRUCTURE = "age_structure"
    BIRTHS_DEATHS = "births_deaths"
    OUT_MIGRATION = "out_migration"
    HOUSEHOLD_STRUCTURE = "household_structure"
    EMPLOYMENT = "employment"
    UNEMPLOYMENT = "unemployment"
    SECTOR_OF_ACTIVITY = "sector_of_activity"
    WORKPLACE = "workplace"

    @property
    def geo_level(self) -> GeoLevel:
        if self in (Indicator.HOUSEHOLD_STRUCTURE, Indicator.SECTOR_OF_ACTIVITY):
            return GeoLevel.DISTRICT
        return GeoLevel.MUNICIPALITY

    @property
    def is_percentage(self) -> bool:
        return self.geo_level is GeoLevel.DISTRICT

    @property
    def is_demographic(self) -> bool:
        return self in (Indicator.AGE_STRUCTURE, Indicator.BIRTHS_DEATHS,
                        Indicator.OUT_MIGRATION, Indicator.HOUSEHOLD_STRUCTURE)


INDICATOR_NAMES = [i.value for i in Indicator]


class IndicatorKey(NamedTuple):
    indicator: Indicator
    subkey: str
    geo_level: GeoLevel
    geo_id: int
    year: int

    @classmethod
    def of(cls, indicator: Indicator, geo_id: int, year: int, subkey: str = "") -> "IndicatorKey":
        return cls(indicator, subkey, indicator.geo_level, int(geo_id), int(year))


class ObservedDataError(ValueError):
    pass


class IndicatorSeries:
    """Indicator values keyed by IndicatorKey"""

    def __init__(self, entries: Dict[IndicatorKey, float] = None):
        self.entries: Dict[IndicatorKey, float] = dict(entries or {})

    def __len__(self) -> int:
        return len(self.entries)

    def __iter__(self) -> Iterator[IndicatorKey]:
        return iter(self.entries)

    def __contains__(self, key: IndicatorKey) -> bool:
        return key in self.entries

    def __getitem__(self, key: IndicatorKey) -> float:
        return self.entries[key]

    def __setitem__(self, key: IndicatorKey, value: float):
        self.entries[key] = float(value)

    def __eq__(self, other) -> bool:
        return isinstance(other, IndicatorSeries) and self.entries == other.entries

    def items(self):
        return self.entries.items()

    def update(self, other: "IndicatorSeries"):
        self.entries.update(other.entries)

    @property
    def years(self) -> List[int]:
        return sorted({k.year for k in self.entries})

    def select(self, indicators: Iterable[Indicator] = None, years: Iterable[int] = None) -> "IndicatorSeries":
        wanted_indicators = set(indicators) if indicators is not None else None
        wanted_years = set(years) if years is not None else None
        return IndicatorSeries({
            k: v for k, v in self.entries.items()
            if (wanted_indicators is None or k.indicator in wanted_indicators)
            and (wanted_years is None or k.year in wanted_years)})

    def check(self) -> List[str]:
        """Range problems: negative counts, percentages outside [0, 100]"""
        problems = []
        for k, v in self.entries.items():
            if v < 0:
                problems.append(f"{k.indicator.value}/{k.subkey}@{k.geo_id}/{k.year}: negative value {v}")
            elif k.indicator.is_percentage and v > 100.0 + 1e-9:
                problems.append(f"{k.indicator.value}/{k.subkey}@{k.geo_id}/{k.year}: percentage {v} above 100")
        return problems

    @staticmethod
    def mean(series_list: Sequence["IndicatorSeries"]) -> "IndicatorSeries":
        """Entrywise average; an entry absent from a series counts as 0 for that series"""
        if not series_list:
            raise ValueError("Cannot average an empty list of indicator series")
        keys = sorted(set().union(*(s.entries.keys() for s in series_list)), key=_sort_key)
        n = len(series_list)
        return IndicatorSeries({k: sum(s.entries.get(k, 0.0) for s in series_list) / n for k in keys})

    # ==============================
    # TABLE CONVERSION
    # ==============================
    def to_frame(self) -> pd.DataFrame:
        keys = sorted(self.entries, key=_sort_key)
        return pd.DataFrame({
            "indicator": [k.indicator.value for k in keys],
            "subkey": [k.subkey for k in keys],
            "geo_level": [k.geo_level.value for k in keys],
            "geo_id": [k.geo_id for k in keys],
            "year": [k.year for k in keys],
            "value": [self.entries[k] for k in keys],
        }, columns=CSV_COLUMNS)

    @classmethod
    def from_frame(cls, frame: pd.DataFrame, source: str = "<frame>") -> "IndicatorSeries":
        missing = [c for c in CSV_COLUMNS if c not in frame.columns]
        if missing:
            raise ObservedDataError(f"{source}: missing column(s) {missing}; expected header {','.join(CSV_COLUMNS)}")

        unknown = sorted(set(frame["indicator"].astype(str)) - set(INDICATOR_NAMES))
        if unknown:
            raise ObservedDataError(f"{source}: unknown indicator name(s) {unknown}. Accepted: {INDICATOR_NAMES}")

        entries = {}
        subkeys = frame["subkey"].fillna("").astype(str)
        for row, subkey in zip(frame.itertuples(index=False), subkeys):
            indicator = Indicator(str(row.indicator))
            try:
                level = GeoLevel(str(row.geo_level))
            except ValueError:
                raise ObservedDataError(
                    f"{source}: unknown geo_level '{row.geo_level}'. Accepted: {[g.value for g in GeoLevel]}") from None
            if level is not indicator.geo_level:
                raise ObservedDataError(
                    f"{source}: {indicator.value} is reported at {indicator.geo_level.value} level, not {level.value}")
            value = float(row.value)
            if not np.isfinite(value):
                raise ObservedDataError(f"{source}: non-finite value for {indicator.value} in {row.year}")
            key = IndicatorKey(indicator, _normalize_subkey(subkey), level, int(row.geo_id), int(row.year))
            if key in entries:
                raise ObservedDataError(f"{source}: duplicate row for {key}")
            entries[key] = value

        series = cls(entries)
        problems = series.check()
        if problems:
            raise ObservedDataError(f"{source}: {problems[0]} ({len(problems)} problem(s) in total)")
        return series

    def write_csv(self, path: str):
        utils.write_frame(self.to_frame(), path)


def load_observed_csv(path: str) -> IndicatorSeries:
    """Read an indicator CSV (header indicator,subkey,geo_level,geo_id,year,value)"""
    if not os.path.exists(path):
        raise FileNotFoundError(f"Observed data file not found: {path}")
    frame = pd.read_csv(path, dtype={"subkey": str}, keep_default_na=False, na_values={"value": [""]},
                        float_precision="round_trip")
    series = IndicatorSeries.from_frame(frame, source=path)
    logger.info(f"Loaded {len(series)} indicator values from {path} (years {series.years})")
    return series


def _normalize_subkey(subkey: str) -> str:
    subkey = subkey.strip()
    return "" if subkey.lower() == "nan" else subkey


def _sort_key(k: IndicatorKey):
    return (k.indicator.value, k.geo_level.value, k.geo_id, k.year, k.subkey)
