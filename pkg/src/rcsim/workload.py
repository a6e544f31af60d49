"""Trace ingestion and synthetic workload generation.

Trace CSV format: `arrival_us,op,lba,length_bytes` with op R or W, lba in
512-byte sectors, lines starting with `#` skipped.
"""
from __future__ import annotations

import random
import warnings
from dataclasses import dataclass

SECTOR = 512
DEFAULT_PAGE_BYTES = 16 * 1024


class TraceParseError(ValueError):
    pass


@dataclass(frozen=True)
class IoRequest:
    arrival: int  # microseconds
    op: str       # "R" | "W"
    lba: int      # 512-byte sectors
    length: int   # bytes

    def __post_init__(self):
        if self.length <= 0 or self.length % SECTOR:
            raise ValueError(f"length must be a positive multiple of {SECTOR}, got {self.length}")


@dataclass(frozen=True)
class SyntheticProfile:
    """Burst/idle structure and address behavior of a generated stream."""

    name: str
    burst_fraction: float           # share of requests issued with zero idle gap
    mean_idle_us: int = 1280        # mean of the exponential gap for the rest
    read_fraction: float = 0.0      # used when no mix is given
    working_set: int = 64 * 1024 * 1024
    skew: float = 0.0               # probability of hitting the hot 20% of the set
    seed: int = 1
    request_bytes: int = DEFAULT_PAGE_BYTES

    @property
    def idle_fraction(self) -> float:
        return 1.0 - self.burst_fraction


_PROFILE_BURST = {"High": 0.7, "Mid": 0.5, "Low": 0.3}


def synthetic_profile(name: str, **overrides) -> SyntheticProfile:
    """Named intensity profile; High/Mid/Low burst fractions are 0.7/0.5/0.3."""
    if name not in _PROFILE_BURST:
        raise ValueError(f"unknown profile {name!r}; choose from {sorted(_PROFILE_BURST)} or build a custom SyntheticProfile")
    return SyntheticProfile(name=name, burst_fraction=_PROFILE_BURST[name], **overrides)


RANDOM = "random"
SEQUENTIAL_UPDATE = "sequential-update"


@dataclass(frozen=True)
class WorkloadMix:
    name: str
    read_parts: float
    write_parts: float
    sequentiality: str = RANDOM

    def __post_init__(self):
        if abs(self.read_parts + self.write_parts - 10.0) > 1e-9:
            raise ValueError("read and write parts must sum to 10")

    @property
    def read_fraction(self) -> float:
        return self.read_parts / 10.0


MIXES = {
    "oltp": WorkloadMix("oltp", 7.0, 3.0, RANDOM),
    "ntrx": WorkloadMix("ntrx", 0.5, 9.5, RANDOM),
    "fileserver": WorkloadMix("fileserver", 4.0, 6.0, RANDOM),
    "varmail": WorkloadMix("varmail", 4.0, 6.0, SEQUENTIAL_UPDATE),
}


def parse_trace(stream, logical_capacity_bytes: int | None = None) -> list[IoRequest]:
    """Parse and validate a trace; returns requests sorted by arrival (stable)."""
    requests = []
    monotone = True
    prev = None
    for lineno, raw in enumerate(stream, start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        parts = line.split(",")
        if len(parts) != 4:
            raise TraceParseError(f"line {lineno}: expected 4 fields, got {len(parts)}")
        try:
            arrival = int(parts[0])
            op = parts[1].strip().upper()
            lba = int(parts[2])
            length = int(parts[3])
        except ValueError as exc:
            raise TraceParseError(f"line {lineno}: {exc}") from None
        if op not in ("R", "W"):
            raise TraceParseError(f"line {lineno}: op must be R or W, got {parts[1]!r}")
        if arrival < 0 or lba < 0:
            raise TraceParseError(f"line {lineno}: negative arrival or lba")
        if length <= 0 or length % SECTOR:
            raise TraceParseError(f"line {lineno}: length must be a positive multiple of {SECTOR}")
        if logical_capacity_bytes is not None and lba * SECTOR + length > logical_capacity_bytes:
            raise TraceParseError(f"line {lineno}: request beyond logical capacity")
        if prev is not None and arrival < prev:
            monotone = False
        prev = arrival
        requests.append(IoRequest(arrival, op, lba, length))
    if not monotone:
        warnings.warn("trace arrivals were not monotone; applying a stable sort")
        requests.sort(key=lambda r: r.arrival)
    return requests


def _pick_page(rng, pages: int, skew: float) -> int:
    if skew > 0.0 and rng.random() < skew:
        hot = max(1, pages // 5)
        return rng.randrange(hot)
    return rng.randrange(pages)


def iter_synthetic(profile: SyntheticProfile, mix: WorkloadMix | None = None,
                   count: int | None = None, start_us: int = 0):
    """Lazily generate requests; count=None yields an unbounded stream.

    Draw order per request: gap, op type, then address, so realized sequences
    are reproducible from the profile seed alone.
    """
    rng = random.Random(profile.seed)
    req_bytes = profile.request_bytes
    pages = max(1, profile.working_set // req_bytes)
    read_fraction = mix.read_fraction if mix is not None else profile.read_fraction
    sequential = mix is not None and mix.sequentiality == SEQUENTIAL_UPDATE
    t = start_us
    write_ptr = 0
    produced = 0
    while count is None or produced < count:
        if rng.random() >= profile.burst_fraction:
            t += max(1, int(rng.expovariate(1.0 / profile.mean_idle_us)))
        is_read = rng.random() < read_fraction
        if sequential and not is_read:
            page = write_ptr
            write_ptr = (write_ptr + 1) % pages
        else:
            page = _pick_page(rng, pages, profile.skew)
        lba = page * req_bytes // SECTOR
        yield IoRequest(t, "R" if is_read else "W", lba, req_bytes)
        produced += 1


def generate_synthetic(profile: SyntheticProfile, mix: WorkloadMix | None,
                       count: int, start_us: int = 0) -> list[IoRequest]:
    """Materialized deterministic request sequence for the given profile/mix."""
    return list(iter_synthetic(profile, mix, count, start_us))


def generate_append_random(working_set: int, count: int, seed: int,
                           overwrite_ratio: float = 0.5,
                           request_bytes: int = DEFAULT_PAGE_BYTES) -> list[IoRequest]:
    """Sequential appends interleaved with uniform overwrites of written data.

    With overwrite_ratio r, each request overwrites an already-written page
    with probability r (once anything exists), else appends the next page;
    appending wraps when the working set is exhausted. All requests are writes
    issued back to back.
    """
    if not 0.0 <= overwrite_ratio <= 1.0:
        raise ValueError("overwrite_ratio must lie in [0, 1]")
    rng = random.Random(seed)
    pages = max(1, working_set // request_bytes)
    out = []
    appended = 0
    for _ in range(count):
        if appended and (appended >= pages or rng.random() < overwrite_ratio):
            page = rng.randrange(min(appended, pages))
        else:
            page = appended
            appended += 1
        out.append(IoRequest(0, "W", page * request_bytes // SECTOR, request_bytes))
    return out


def write_trace_csv(requests, stream) -> int:
    stream.write("# arrival_us,op,lba,length_bytes\n")
    n = 0
    for r in requests:
        stream.write(f"{r.arrival},{r.op},{r.lba},{r.length}\n")
        n += 1
    return n
