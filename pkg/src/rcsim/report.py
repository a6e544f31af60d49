"""Run reports, migration-histogram analytics, and deterministic emission."""
from __future__ import annotations

import json
from dataclasses import asdict, dataclass, field
from pathlib import Path


class SampledSeries:
    """Bounded series of cumulative-counter snapshots.

    Rows are recorded every `stride` ticks; when the buffer fills, every other
    row is dropped and the stride doubles, so memory stays O(limit) while the
    sampling grid remains deterministic for a given tick count.
    """

    __slots__ = ("stride", "count", "rows", "limit")

    def __init__(self, limit: int = 4096):
        self.stride = 1
        self.count = 0
        self.rows = []
        self.limit = limit

    def tick(self, row) -> None:
        self.count += 1
        if self.count % self.stride == 0:
            self.rows.append(row)
            if len(self.rows) >= self.limit:
                del self.rows[::2]
                self.stride *= 2

    def first_at_or_after(self, t: int):
        """Earliest row whose leading field is >= t, else None."""
        for row in self.rows:
            if row[0] >= t:
                return row
        return None


def migration_histogram_analysis(histogram, n: int):
    """Fraction of migrations a copyback budget of n would keep on-chip.

    histogram maps per-page migration counts k to page counts. Every
    (n+1)-th migration of a page must go off-chip; the rest may be copybacks,
    so the avoided fraction is 1 - sum(p(k) * floor(k/(n+1))) / sum(p(k) * k).
    Returns None for an empty histogram (not applicable).
    """
    if n < 0:
        raise ValueError("threshold must be >= 0")
    total = 0
    forced = 0
    for k, pages in histogram.items():
        if k < 0 or pages < 0:
            raise ValueError("histogram entries must be nonnegative")
        total += k * pages
        forced += (k // (n + 1)) * pages
    if total == 0:
        return None
    return 1.0 - forced / total


@dataclass
class RunReport:
    """Everything a single simulation run reports; JSON/CSV serializable."""

    variant: str
    seed: int
    backend: str
    sim_time_us: int
    elapsed_us: int
    warmup_fraction: float
    host_bytes_written: int
    host_bytes_read: int
    host_pages_written: int
    host_pages_read: int
    buffer_hit_reads: int
    unmapped_reads: int
    nand_pages_programmed: int
    nand_erases: int
    waf: float
    throughput_mb_s: float
    throughput_steady_mb_s: float
    iops: float
    requests_completed: int
    migrations_total: int
    migrations: dict
    wear_level_migrations: int
    copyback_fraction: float | None
    copyback_fraction_second_half: float | None
    mode_decisions: dict
    slot_starved_fallbacks: int
    stillborn_pages: int
    migration_histogram: dict
    pages_never_migrated: int
    counter0_idle_snapshots: list
    oracle_violations: int
    data_loss_faults: int
    event_log_digest: str
    normalized_throughput: float | None = None

    def to_json(self) -> str:
        return json.dumps(asdict(self), sort_keys=True, indent=2) + "\n"


_SCALAR_ORDER = (
    "variant", "seed", "backend", "sim_time_us", "elapsed_us", "warmup_fraction",
    "host_bytes_written", "host_bytes_read", "host_pages_written", "host_pages_read",
    "buffer_hit_reads", "unmapped_reads", "nand_pages_programmed", "nand_erases",
    "waf", "throughput_mb_s", "throughput_steady_mb_s", "iops", "requests_completed",
    "migrations_total", "wear_level_migrations",
    "copyback_fraction", "copyback_fraction_second_half",
    "slot_starved_fallbacks", "stillborn_pages",
    "pages_never_migrated", "oracle_violations", "data_loss_faults",
    "event_log_digest", "normalized_throughput",
)


def report_scalars_csv(report: RunReport) -> str:
    lines = ["field,value"]
    data = asdict(report)
    for key in _SCALAR_ORDER:
        lines.append(f"{key},{data[key]}")
    for urgency in sorted(report.migrations):
        for mode in sorted(report.migrations[urgency]):
            lines.append(f"migrations.{urgency}.{mode},{report.migrations[urgency][mode]}")
    for key in sorted(report.mode_decisions):
        lines.append(f"mode_decisions.{key},{report.mode_decisions[key]}")
    return "\n".join(lines) + "\n"


def histogram_csv(report: RunReport) -> str:
    lines = ["migrations,pages"]
    for k in sorted(report.migration_histogram):
        lines.append(f"{k},{report.migration_histogram[k]}")
    return "\n".join(lines) + "\n"


def parse_histogram_csv(stream) -> dict:
    hist = {}
    for lineno, raw in enumerate(stream, start=1):
        line = raw.strip()
        if not line or line.startswith("#") or line.startswith("migrations"):
            continue
        parts = line.split(",")
        if len(parts) != 2:
            raise ValueError(f"histogram line {lineno}: expected k,count")
        hist[int(parts[0])] = int(parts[1])
    return hist


def decisions_csv(decisions) -> str:
    lines = ["time,urgency,smoothed_u,mode"]
    for t, urgency, u, mode in decisions:
        lines.append(f"{t},{urgency},{u},{mode}")
    return "\n".join(lines) + "\n"


def state_snapshots_csv(snapshots) -> str:
    lines = ["time,free_blocks,u,host_pages_written,nand_pages_programmed,gc_fg,gc_bg"]
    for row in snapshots:
        lines.append(",".join(str(v) for v in row))
    return "\n".join(lines) + "\n"


def phases_csv(rows) -> str:
    lines = ["time,kind,channel,chip,plane,block,page,resource_held"]
    for row in rows:
        lines.append(",".join(str(v) for v in row))
    return "\n".join(lines) + "\n"


def emit_report(report: RunReport, out_dir, *, decisions=None, snapshots=None,
                phase_rows=None) -> list:
    """Write report.json, report.csv, histogram.csv and any optional logs.

    Emission is deterministic: stable field order, sorted keys, repr floats.
    Returns the written paths.
    """
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    written = []

    def _write(name, text):
        path = out / name
        path.write_text(text)
        written.append(path)

    _write("report.json", report.to_json())
    _write("report.csv", report_scalars_csv(report))
    _write("histogram.csv", histogram_csv(report))
    if decisions is not None:
        _write("decisions.csv", decisions_csv(decisions))
    if snapshots is not None:
        _write("state.csv", state_snapshots_csv(snapshots))
    if phase_rows is not None:
        _write("events.csv", phases_csv(phase_rows))
    return written
