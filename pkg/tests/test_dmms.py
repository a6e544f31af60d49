import pytest
from hypothesis import given
from hypothesis import strategies as st

from rcsim.dmms import (
    ModeConfig,
    UtilizationTracker,
    greedy_select_mode,
    record_sample,
    select_mode,
)
from rcsim.epm import MODE_OFFCHIP, MODE_RCOPYBACK

CFG = ModeConfig()


def tracker(window=1000):
    return UtilizationTracker(window)


def test_mean_of_window_samples():
    t = tracker()
    record_sample(t, 0, 0.2)
    record_sample(t, 10, 0.8)
    assert t.smoothed_u == pytest.approx(0.5)


def test_single_sample():
    t = tracker()
    record_sample(t, 0, 0.7)
    assert t.smoothed_u == pytest.approx(0.7)


def test_old_samples_evicted():
    t = tracker(window=100)
    record_sample(t, 0, 1.0)
    record_sample(t, 500, 0.0)
    assert t.sample_count() == 1
    assert t.smoothed_u == pytest.approx(0.0)


def test_sample_out_of_range_rejected():
    t = tracker()
    with pytest.raises(ValueError):
        record_sample(t, 0, 1.5)


def test_background_above_threshold_uses_copyback():
    t = tracker()
    record_sample(t, 0, 0.6)
    assert select_mode(t, CFG, "background") == MODE_RCOPYBACK


def test_background_below_threshold_uses_offchip():
    t = tracker()
    record_sample(t, 0, 0.3)
    assert select_mode(t, CFG, "background") == MODE_OFFCHIP


def test_exactly_at_threshold_is_offchip():
    t = tracker()
    record_sample(t, 0, 0.5)
    assert select_mode(t, CFG, "background") == MODE_OFFCHIP


def test_foreground_ignores_utilization():
    t = tracker()
    record_sample(t, 0, 0.1)
    assert select_mode(t, CFG, "foreground") == MODE_RCOPYBACK


def test_greedy_is_constant():
    assert greedy_select_mode("background") == MODE_RCOPYBACK
    assert greedy_select_mode("foreground") == MODE_RCOPYBACK


def test_cold_start_defaults_to_offchip():
    assert select_mode(tracker(), CFG, "background") == MODE_OFFCHIP


@given(st.lists(st.tuples(st.integers(0, 10_000), st.floats(0, 1)),
                min_size=1, max_size=50),
       st.floats(0.05, 0.95), st.floats(0.05, 0.95))
def test_raising_threshold_never_flips_toward_copyback(samples, th1, th2):
    lo, hi = sorted((th1, th2))
    t = tracker(window=20_000)
    for at, u in sorted(samples):
        record_sample(t, at, u)
    mode_lo = select_mode(t, ModeConfig(lo), "background")
    mode_hi = select_mode(t, ModeConfig(hi), "background")
    if mode_lo == MODE_OFFCHIP:
        assert mode_hi == MODE_OFFCHIP


def test_window_tracks_block_fill_cadence():
    t = tracker(window=1000)
    t.record_block_fill(0)
    assert t.window_us == 1000  # first fill only seeds the clock
    t.record_block_fill(500)
    assert t.window_us == 900  # 0.8 * 1000 + 0.2 * 500
    t.record_block_fill(1000)
    assert t.window_us == 820  # 0.8 * 900 + 0.2 * 500


def test_mode_config_validation():
    with pytest.raises(ValueError):
        ModeConfig(0.0)
    with pytest.raises(ValueError):
        ModeConfig(1.0)
