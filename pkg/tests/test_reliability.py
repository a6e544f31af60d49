"""Threshold-table oracles: derived model versus brute-force hop counting."""
import pytest
from hypothesis import given
from hypothesis import strategies as st

from rcsim.reliability import (
    DEFAULT_ERROR_MODEL,
    CtTable,
    DataLossError,
    ErrorModel,
    apply_copyback,
    apply_ecc_pass,
    ct_lookup,
    ct_table_csv,
    derive_ct_from_model,
    is_readable,
    new_page_state,
)

TABLE = derive_ct_from_model(DEFAULT_ERROR_MODEL, 12)


def hops_until_unreadable(pe, retention=12, model=DEFAULT_ERROR_MODEL):
    """Brute-force oracle: count copybacks until the page becomes unreadable."""
    state = new_page_state(pe, retention, model)
    applications = 0
    while is_readable(state, model):
        state = apply_copyback(state, pe, model)
        applications += 1
        if applications > 1000:
            raise AssertionError("unbounded accumulation")
    return applications


def test_default_table_matches_published_thresholds():
    assert TABLE.pe_bucket_bounds == (1000, 2000, 3000)
    assert TABLE.thresholds == (4, 3, 2)


@pytest.mark.parametrize("pe,expected", [(500, 4), (2500, 2), (3001, 0)])
def test_ct_lookup_examples(pe, expected):
    assert ct_lookup(TABLE, pe) == expected


@pytest.mark.parametrize("pe", [1, 1000, 1001, 2000, 2001, 3000])
def test_bruteforce_oracle_matches_table_at_bucket_boundaries(pe):
    # the (n+1)-th copyback is the first that exceeds capacity
    assert hops_until_unreadable(pe) == ct_lookup(TABLE, pe) + 1


def test_apply_copyback_increments_hops():
    s = new_page_state(500)
    assert apply_copyback(s, 500).copyback_hops_since_ecc == 1


def test_two_hops_at_pe_3000_stay_readable():
    s = new_page_state(3000)
    s = apply_copyback(s, 3000)
    s = apply_copyback(s, 3000)
    assert s.accumulated_error <= 1.0
    assert is_readable(s)


def test_third_hop_at_pe_3000_exceeds_capacity():
    s = new_page_state(3000)
    for _ in range(3):
        s = apply_copyback(s, 3000)
    assert s.accumulated_error > 1.0
    assert not is_readable(s)


def test_ecc_pass_resets_counter():
    s = new_page_state(500)
    for _ in range(3):
        s = apply_copyback(s, 500)
    reset = apply_ecc_pass(s, 500)
    assert reset.copyback_hops_since_ecc == 0
    assert reset == new_page_state(500)


def test_ecc_pass_idempotent_on_fresh_state():
    s = new_page_state(500)
    assert apply_ecc_pass(s, 500) == s


def test_ecc_pass_on_unreadable_state_faults():
    s = new_page_state(3000)
    for _ in range(3):
        s = apply_copyback(s, 3000)
    with pytest.raises(DataLossError):
        apply_ecc_pass(s, 3000)


def test_fresh_page_is_readable():
    assert is_readable(new_page_state(0))


def test_zero_delta_caps_at_configured_maximum():
    model = ErrorModel(delta=(0.0, 0.0, 0.0))
    table = derive_ct_from_model(model, 12)
    assert table.thresholds == (7, 7, 7)


@pytest.mark.parametrize("pe", [1, 500, 1000, 1500, 2000, 2500, 3000])
def test_derive_agrees_with_bruteforce_across_buckets(pe):
    derived = derive_ct_from_model(DEFAULT_ERROR_MODEL, 12)
    assert hops_until_unreadable(pe) == ct_lookup(derived, pe) + 1


@given(st.integers(1, 48), st.integers(1, 48))
def test_threshold_monotone_in_retention(m1, m2):
    lo, hi = sorted((m1, m2))
    t_lo = derive_ct_from_model(DEFAULT_ERROR_MODEL, lo)
    t_hi = derive_ct_from_model(DEFAULT_ERROR_MODEL, hi)
    for a, b in zip(t_hi.thresholds, t_lo.thresholds):
        assert a <= b


@given(st.sampled_from([1, 800, 1001, 1999, 2500, 3000]), st.integers(0, 4))
def test_ecc_after_k_hops_preserves_readability(pe, k):
    limit = ct_lookup(TABLE, pe)
    if k > limit:
        k = limit
    s = new_page_state(pe)
    for _ in range(k):
        s = apply_copyback(s, pe)
    assert is_readable(s)
    assert apply_ecc_pass(s, pe).copyback_hops_since_ecc == 0


def test_table_csv_render():
    text = ct_table_csv(TABLE)
    assert text.splitlines() == [
        "pe_lo,pe_hi,threshold",
        "1,1000,4",
        "1001,2000,3",
        "2001,3000,2",
        "3001,inf,0",
    ]


def test_table_rejects_increasing_thresholds():
    with pytest.raises(ValueError):
        CtTable((1000, 2000), (2, 3))
