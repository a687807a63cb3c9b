import pandas as pd
import pytest

from core.tools.indicators import (CSV_COLUMNS, GeoLevel, Indicator, IndicatorKey, IndicatorSeries, ObservedDataError,
                                   load_observed_csv)
from tests.conftest import series_of


def observed_frame(rows):
    return pd.DataFrame(rows, columns=CSV_COLUMNS)


def test_indicator_levels():
    assert len(Indicator) == 8
    assert Indicator.HOUSEHOLD_STRUCTURE.geo_level is GeoLevel.DISTRICT
    assert Indicator.SECTOR_OF_ACTIVITY.is_percentage
    assert Indicator.BIRTHS_DEATHS.geo_level is GeoLevel.MUNICIPALITY
    assert not Indicator.WORKPLACE.is_demographic


def test_key_takes_the_indicator_level():
    key = IndicatorKey.of(Indicator.HOUSEHOLD_STRUCTURE, 2, 2005, "3")
    assert key.geo_level is GeoLevel.DISTRICT
    assert key == IndicatorKey(Indicator.HOUSEHOLD_STRUCTURE, "3", GeoLevel.DISTRICT, 2, 2005)


def test_mean_is_entrywise(births_key):
    a = IndicatorSeries({births_key: 10})
    b = IndicatorSeries({births_key: 14})
    assert IndicatorSeries.mean([a, b])[births_key] == 12.0


def test_mean_counts_missing_entries_as_zero(births_key):
    other = IndicatorKey.of(Indicator.WORKPLACE, 0, 2001)
    averaged = IndicatorSeries.mean([IndicatorSeries({births_key: 4, other: 2}), IndicatorSeries({births_key: 8})])
    assert averaged[births_key] == 6.0
    assert averaged[other] == 1.0
    with pytest.raises(ValueError):
        IndicatorSeries.mean([])


def test_select_by_indicator_and_year():
    series = series_of({
        (Indicator.WORKPLACE, 0, 2001, ""): 5,
        (Indicator.WORKPLACE, 0, 2002, ""): 6,
        (Indicator.OUT_MIGRATION, 0, 2002, ""): 1,
    })
    assert len(series.select(indicators=[Indicator.WORKPLACE])) == 2
    assert len(series.select(years=[2002])) == 2
    assert series.years == [2001, 2002]


def test_check_flags_ranges():
    series = series_of({
        (Indicator.WORKPLACE, 0, 2001, ""): -1,
        (Indicator.SECTOR_OF_ACTIVITY, 0, 2001, "sector0"): 120,
        (Indicator.HOUSEHOLD_STRUCTURE, 0, 2001, "1"): 100,
    })
    problems = series.check()
    assert len(problems) == 2
    assert any("negative" in p for p in problems)
    assert any("above 100" in p for p in problems)


def test_from_frame_parses_rows():
    frame = observed_frame([
        ("births_deaths", "births", "municipality", 0, 2003, 12),
        ("household_structure", "4+", "district", 1, 2007, 22.5),
        ("workplace", "", "municipality", 3, 2007, 40),
    ])
    series = IndicatorSeries.from_frame(frame)
    assert series[IndicatorKey.of(Indicator.HOUSEHOLD_STRUCTURE, 1, 2007, "4+")] == 22.5
    assert series.years == [2003, 2007]


@pytest.mark.parametrize("row, message", [
    (("marriages", "", "municipality", 0, 2003, 1), "unknown indicator"),
    (("workplace", "", "region", 0, 2003, 1), "unknown geo_level"),
    (("household_structure", "1", "municipality", 0, 2003, 30), "district level"),
    (("workplace", "", "municipality", 0, 2003, float("nan")), "non-finite"),
    (("workplace", "", "municipality", 0, 2003, -3), "negative"),
])
def test_from_frame_rejects_bad_rows(row, message):
    with pytest.raises(ObservedDataError, match=message):
        IndicatorSeries.from_frame(observed_frame([row]))


def test_from_frame_rejects_duplicates_and_missing_columns():
    row = ("workplace", "", "municipality", 0, 2003, 1)
    with pytest.raises(ObservedDataError, match="duplicate"):
        IndicatorSeries.from_frame(observed_frame([row, row]))
    with pytest.raises(ObservedDataError, match="missing column"):
        IndicatorSeries.from_frame(observed_frame([row]).drop(columns=["geo_level"]))


def test_csv_file_round_trip(tmp_path):
    series = series_of({
        (Indicator.AGE_STRUCTURE, 0, 2001, "0-14"): 31,
        (Indicator.OUT_MIGRATION, 1, 2001, ""): 4,
        (Indicator.SECTOR_OF_ACTIVITY, 0, 2001, "sector1"): 33.333333333333336,
    })
    path = tmp_path / "observed.csv"
    series.write_csv(str(path))
    assert path.read_text().splitlines()[0] == ",".join(CSV_COLUMNS)
    assert load_observed_csv(str(path)) == series


def test_missing_observed_file_names_the_path(tmp_path):
    missing = tmp_path / "nowhere.csv"
    with pytest.raises(FileNotFoundError, match="nowhere.csv"):
        load_observed_csv(str(missing))
