"""Copyback error-accumulation model and the consecutive-copyback threshold table.

The model is normalized: ECC correction capacity is 1.0 and a page's
accumulated error level is base_ber(pe, retention) + hops * delta(pe), linear
in the number of copyback hops since the last ECC-corrected (off-chip) write.
Base and per-hop increments are piecewise constant over P/E buckets and are
calibrated so that the derived threshold table at 12-month retention is
exactly {1-1000: 4, 1001-2000: 3, 2001-3000: 2}, with copyback forbidden
beyond the last bucket. Absolute bit-error magnitudes are not modeled; the
thresholds are the operational contract.
"""
from __future__ import annotations

from dataclasses import dataclass

DEFAULT_RETENTION_MONTHS = 12


class DataLossError(RuntimeError):
    """A page was read (or ECC-rewritten) past the correction capacity."""


@dataclass(frozen=True)
class CtTable:
    """Maximum safe consecutive copybacks per P/E bucket.

    pe_bucket_bounds are inclusive upper bounds; pe beyond the last bound maps
    to threshold 0 (copyback forbidden).
    """

    pe_bucket_bounds: tuple[int, ...] = (1000, 2000, 3000)
    thresholds: tuple[int, ...] = (4, 3, 2)
    retention_months: int = DEFAULT_RETENTION_MONTHS

    def __post_init__(self):
        if len(self.pe_bucket_bounds) != len(self.thresholds):
            raise ValueError("bounds and thresholds must have equal length")
        if list(self.pe_bucket_bounds) != sorted(set(self.pe_bucket_bounds)):
            raise ValueError("pe bucket bounds must be strictly increasing")
        for earlier, later in zip(self.thresholds, self.thresholds[1:]):
            if later > earlier:
                raise ValueError("thresholds must be nonincreasing in P/E")

    def lookup(self, pe: int) -> int:
        for bound, threshold in zip(self.pe_bucket_bounds, self.thresholds):
            if pe <= bound:
                return threshold
        return 0


def ct_lookup(table: CtTable, pe: int) -> int:
    """Threshold for the bucket containing pe; 0 beyond the last bucket."""
    if pe < 0:
        raise ValueError(f"pe must be >= 0, got {pe}")
    return table.lookup(pe)


@dataclass(frozen=True)
class ErrorModel:
    """Normalized error levels per P/E bucket at a reference 12-month retention.

    base scales linearly with the retention requirement; the per-copyback
    increment does not (it is write-disturb, not retention, driven).
    beyond_* apply past the last bucket: readable while untouched, but a single
    copyback overflows capacity, matching the table's threshold-0 rule.
    """

    pe_bucket_bounds: tuple[int, ...] = (1000, 2000, 3000)
    base_at_reference: tuple[float, ...] = (0.15, 0.22, 0.30)
    delta: tuple[float, ...] = (0.18, 0.24, 0.33)
    beyond_base: float = 0.50
    beyond_delta: float = 0.60
    reference_months: int = DEFAULT_RETENTION_MONTHS
    ecc_capacity: float = 1.0
    max_threshold: int = 7

    def _bucket(self, pe: int) -> int:
        for i, bound in enumerate(self.pe_bucket_bounds):
            if pe <= bound:
                return i
        return -1

    def base_ber(self, pe: int, retention_months: int) -> float:
        i = self._bucket(pe)
        base = self.beyond_base if i < 0 else self.base_at_reference[i]
        return base * (retention_months / self.reference_months)

    def delta_per_copyback(self, pe: int) -> float:
        i = self._bucket(pe)
        return self.beyond_delta if i < 0 else self.delta[i]


DEFAULT_ERROR_MODEL = ErrorModel()


@dataclass(frozen=True)
class PageReliabilityState:
    """Error bookkeeping for one page since its last ECC-corrected write."""

    copyback_hops_since_ecc: int
    accumulated_error: float


def new_page_state(pe: int, retention_months: int = DEFAULT_RETENTION_MONTHS,
                   model: ErrorModel = DEFAULT_ERROR_MODEL) -> PageReliabilityState:
    """State of a freshly ECC-written page resting in a pe-cycled block."""
    return PageReliabilityState(0, model.base_ber(pe, retention_months))


def is_readable(s: PageReliabilityState, model: ErrorModel = DEFAULT_ERROR_MODEL) -> bool:
    return s.accumulated_error <= model.ecc_capacity


def apply_copyback(s: PageReliabilityState, pe: int,
                   model: ErrorModel = DEFAULT_ERROR_MODEL) -> PageReliabilityState:
    """One more in-plane copy without ECC: bump hops, accumulate the increment."""
    return PageReliabilityState(
        s.copyback_hops_since_ecc + 1,
        s.accumulated_error + model.delta_per_copyback(pe),
    )


def apply_ecc_pass(s: PageReliabilityState, dest_pe: int,
                   retention_months: int = DEFAULT_RETENTION_MONTHS,
                   model: ErrorModel = DEFAULT_ERROR_MODEL) -> PageReliabilityState:
    """Off-chip, ECC-corrected rewrite into a dest_pe-cycled block.

    Raises DataLossError if the state was already unreadable: the data was
    lost before correction could happen.
    """
    if not is_readable(s, model):
        raise DataLossError(
            f"ECC pass on unreadable page: hops={s.copyback_hops_since_ecc} "
            f"accumulated={s.accumulated_error:.3f} > capacity={model.ecc_capacity}")
    return new_page_state(dest_pe, retention_months, model)


def derive_ct_from_model(model: ErrorModel,
                         retention_months: int = DEFAULT_RETENTION_MONTHS) -> CtTable:
    """Threshold per bucket: the largest hop count the ECC capacity absorbs.

    For each bucket, threshold = max n with base + n*delta <= capacity, capped
    at model.max_threshold (the cap applies when delta is 0).
    """
    thresholds = []
    for bound in model.pe_bucket_bounds:
        base = model.base_ber(bound, retention_months)
        delta = model.delta_per_copyback(bound)
        if base > model.ecc_capacity:
            n = 0
        elif delta <= 0.0:
            n = model.max_threshold
        else:
            n = int((model.ecc_capacity - base) / delta)
            n = min(n, model.max_threshold)
        thresholds.append(n)
    return CtTable(model.pe_bucket_bounds, tuple(thresholds), retention_months)


def ct_table_csv(table: CtTable) -> str:
    """Render the table as `pe_lo,pe_hi,threshold` CSV lines."""
    lines = ["pe_lo,pe_hi,threshold"]
    lo = 1
    for bound, threshold in zip(table.pe_bucket_bounds, table.thresholds):
        lines.append(f"{lo},{bound},{threshold}")
        lo = bound + 1
    lines.append(f"{lo},inf,0")
    return "\n".join(lines) + "\n"
