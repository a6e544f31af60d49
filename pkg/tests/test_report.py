import pytest

from rcsim.report import (
    SampledSeries,
    histogram_csv,
    migration_histogram_analysis,
    parse_histogram_csv,
)


def test_one_migration_per_page_budget_four_avoids_everything():
    assert migration_histogram_analysis({1: 1000}, 4) == pytest.approx(1.0)


def test_five_migrations_per_page_budget_four():
    # one forced off-chip out of every five moves
    assert migration_histogram_analysis({5: 123}, 4) == pytest.approx(0.8)


def test_two_migrations_per_page_budget_two():
    assert migration_histogram_analysis({2: 7}, 2) == pytest.approx(1.0)


def test_empty_histogram_is_not_applicable():
    assert migration_histogram_analysis({}, 4) is None
    assert migration_histogram_analysis({0: 10}, 4) is None


def test_mixed_histogram_matches_hand_computation():
    hist = {1: 10, 5: 4, 12: 2}
    total = 1 * 10 + 5 * 4 + 12 * 2
    forced = 0 * 10 + 1 * 4 + 2 * 2
    assert migration_histogram_analysis(hist, 4) == pytest.approx(1 - forced / total)


def test_negative_threshold_rejected():
    with pytest.raises(ValueError):
        migration_histogram_analysis({1: 1}, -1)


def test_histogram_csv_roundtrip():
    class Stub:
        migration_histogram = {3: 4, 1: 9}
    text = histogram_csv(Stub())
    assert text.splitlines()[0] == "migrations,pages"
    parsed = parse_histogram_csv(text.splitlines())
    assert parsed == {1: 9, 3: 4}


def test_sampled_series_doubles_stride():
    series = SampledSeries(limit=8)
    for i in range(1, 100):
        series.tick((i,))
    assert len(series.rows) < 16
    values = [row[0] for row in series.rows]
    assert values == sorted(values)
    assert series.stride > 1
    assert series.first_at_or_after(50)[0] >= 50
    assert series.first_at_or_after(10_000) is None
