"""Simulation driver: workload replay, idle-time maintenance, report assembly.

A run is fully event-driven: host arrivals are fed one at a time from the
workload iterator, background GC / wear leveling trigger from idle probes,
and the run ends when the event queue drains. Identical configs (and
workloads) produce byte-identical reports and event logs.
"""
from __future__ import annotations

from dataclasses import replace

from rcsim import engine as engine_mod
from rcsim.config import RunConfig, canonical_variant, parse_variant
from rcsim.ftl import Ftl, FtlConfig, SimMetrics
from rcsim.geometry import validate_geometry, validate_timing
from rcsim.report import RunReport, SampledSeries
from rcsim.workload import (
    MIXES,
    SECTOR,
    IoRequest,
    SyntheticProfile,
    generate_append_random,
    iter_synthetic,
    parse_trace,
    synthetic_profile,
)


def build_workload(cfg: RunConfig):
    """Materialize the configured workload as an iterable of IoRequest."""
    spec = cfg.workload
    if spec.source == "trace":
        with open(spec.trace) as fh:
            return parse_trace(fh)
    if spec.source == "append_random":
        return generate_append_random(spec.working_set, spec.count, cfg.seed,
                                      overwrite_ratio=spec.overwrite_ratio,
                                      request_bytes=spec.request_bytes)
    if spec.source != "synthetic":
        raise ValueError(f"unknown workload source {spec.source!r}")
    mix = None if spec.mix in ("", "none") else MIXES[spec.mix]
    common = dict(
        mean_idle_us=spec.mean_idle_us,
        read_fraction=spec.read_fraction,
        working_set=spec.working_set,
        skew=spec.skew,
        seed=cfg.seed,
        request_bytes=spec.request_bytes,
    )
    if spec.profile == "custom":
        if not 0.0 <= spec.burst_fraction <= 1.0:
            raise ValueError("custom profile needs burst_fraction in [0, 1]")
        profile = SyntheticProfile(name="custom", burst_fraction=spec.burst_fraction, **common)
    else:
        profile = synthetic_profile(spec.profile, **common)
        if 0.0 <= spec.burst_fraction <= 1.0:
            profile = replace(profile, burst_fraction=spec.burst_fraction)
    count = None if spec.count <= 0 else spec.count
    return iter_synthetic(profile, mix, count)


class _ReqCtx:
    __slots__ = ("remaining", "bytes", "arrival", "is_read")

    def __init__(self, remaining, nbytes, arrival, is_read):
        self.remaining = remaining
        self.bytes = nbytes
        self.arrival = arrival
        self.is_read = is_read


class SimulationRunner:
    """One simulation instance; use run() once and read the report."""

    def __init__(self, cfg: RunConfig, requests=None, on_read=None):
        validate_geometry(cfg.geometry)
        validate_timing(cfg.timing)
        self.cfg = cfg
        m_cpb, selector = parse_variant(cfg.variant)
        g = cfg.geometry
        t = cfg.timing
        self.engine = engine_mod.Engine(
            g.channels, g.chips_per_channel, g.planes_per_chip,
            g.blocks_per_plane, g.pages_per_block,
            t.t_read, t.t_prog, t.t_erase, t.t_dma_out, t.t_dma_in,
            dram_ports=cfg.dram_ports,
            log_phases=cfg.log_events, hash_phases=cfg.hash_events)
        ftl_cfg = FtlConfig(
            m_cpb=m_cpb, selector=selector,
            write_buffer_bytes=cfg.write_buffer_bytes,
            logical_fraction=cfg.logical_fraction,
            retention_months=cfg.retention_months,
            u_threshold=cfg.u_threshold,
            gc=cfg.gc, initial_pe=tuple(cfg.initial_pe),
            shadow_oracle=cfg.shadow_oracle,
            bijectivity_audit=cfg.bijectivity_audit,
            log_decisions=cfg.log_decisions,
            log_state_snapshots=cfg.log_state_snapshots)
        self.ftl = Ftl(g, t, self.engine, ftl_cfg)
        self.ftl.reclaim_done_hook = self._on_reclaim_done
        self._requests = requests if requests is not None else build_workload(cfg)
        self.on_read = on_read

        self._page_size = g.page_size
        self._tag_seq = 0
        self._req_index = -1
        self._last_activity = -1
        self._probe_at = -1
        self._stopped_feeding = False
        self._first_arrival = -1
        self._last_completion = 0
        self._requests_completed = 0
        self._bytes_read = 0
        self._bytes_written = 0
        self._completion_series = SampledSeries()
        self.counter0_idle_snapshots = []
        self._ran = False

    # ------------------------------------------------------------------

    def run(self) -> RunReport:
        if self._ran:
            raise RuntimeError("runner instances are single-use")
        self._ran = True
        self._it = iter(self._requests)
        self._feed_next()
        self.engine.run()
        self._flush_live_incarnations()
        return self._build_report()

    def _feed_next(self):
        if self._stopped_feeding:
            return
        limit = self.cfg.stop_after_migrations
        if limit and self.ftl.metrics.migrations_total >= limit:
            self._stopped_feeding = True
            return
        req = next(self._it, None)
        if req is None:
            self._stopped_feeding = True
            return
        at = req.arrival if req.arrival > self.engine.now else self.engine.now
        self.engine.schedule(at, self._on_arrival, req)

    def _on_arrival(self, req: IoRequest):
        now = self.engine.now
        bg_idle = self.cfg.gc.bg_idle_us
        if self._last_activity >= 0 and now - self._last_activity >= bg_idle:
            self.counter0_idle_snapshots.append((now, self.ftl.count_counter0_blocks()))
        self._last_activity = now
        if self._first_arrival < 0:
            self._first_arrival = now

        self._req_index += 1
        req_index = self._req_index
        first_lpn = req.lba * SECTOR // self._page_size
        last_byte = req.lba * SECTOR + req.length - 1
        last_lpn = last_byte // self._page_size
        npages = last_lpn - first_lpn + 1
        ctx = _ReqCtx(npages, req.length, now, req.op == "R")
        if req.op == "R":
            for lpn in range(first_lpn, last_lpn + 1):
                self.ftl.host_read(lpn, self._make_read_cb(ctx, lpn, req_index))
        else:
            for lpn in range(first_lpn, last_lpn + 1):
                self._tag_seq += 1
                self.ftl.host_write(lpn, self._tag_seq, self._make_write_cb(ctx))

        self._feed_next()
        deadline = now + bg_idle
        if deadline > self._probe_at:
            self._probe_at = deadline
            self.engine.schedule(deadline, self._idle_probe, None)

    def _make_read_cb(self, ctx, lpn, req_index):
        def _cb(tag):
            if self.on_read is not None:
                self.on_read(lpn, tag, req_index)
            self._page_done(ctx)
        return _cb

    def _make_write_cb(self, ctx):
        def _cb(_tag):
            self._page_done(ctx)
        return _cb

    def _page_done(self, ctx):
        ctx.remaining -= 1
        if ctx.remaining == 0:
            now = self.engine.now
            self._requests_completed += 1
            if ctx.is_read:
                self._bytes_read += ctx.bytes
            else:
                self._bytes_written += ctx.bytes
            if now > self._last_completion:
                self._last_completion = now
            self._completion_series.tick((now, self._bytes_read + self._bytes_written))

    def _idle_probe(self, _arg):
        if self._last_activity < 0:
            return
        if self.engine.now - self._last_activity >= self.cfg.gc.bg_idle_us:
            self.ftl.background_round()

    def _on_reclaim_done(self, _job):
        if self._last_activity >= 0 and \
                self.engine.now - self._last_activity >= self.cfg.gc.bg_idle_us:
            self.ftl.background_round()

    # ------------------------------------------------------------------

    def _flush_live_incarnations(self):
        m = self.ftl.metrics
        for lpn in self.ftl.map.l2p:
            count = self.ftl.lpn_migrations.get(lpn, 0)
            if count:
                m.histogram[count] = m.histogram.get(count, 0) + 1
            else:
                m.never_migrated += 1

    def _build_report(self) -> RunReport:
        cfg = self.cfg
        m: SimMetrics = self.ftl.metrics
        first = self._first_arrival if self._first_arrival >= 0 else 0
        elapsed = max(0, self._last_completion - first)
        total_bytes = self._bytes_read + self._bytes_written
        throughput = total_bytes / elapsed if elapsed else 0.0
        iops = self._requests_completed * 1e6 / elapsed if elapsed else 0.0

        steady = throughput
        if elapsed:
            warm_t = first + int(cfg.warmup_fraction * elapsed)
            row = self._completion_series.first_at_or_after(warm_t)
            if row is not None and self._last_completion > row[0]:
                steady = (total_bytes - row[1]) / (self._last_completion - row[0])

        total_mig = m.migrations_total
        cb_fraction = m.migrations_copyback / total_mig if total_mig else None
        cb_fraction_2h = None
        if total_mig and elapsed:
            half_t = first + elapsed // 2
            row = m.mig_series.first_at_or_after(half_t)
            if row is not None:
                cb_delta = m.migrations_copyback - row[1]
                all_delta = total_mig - (row[1] + row[2])
                if all_delta > 0:
                    cb_fraction_2h = cb_delta / all_delta

        host_written_bytes = m.host_pages_written * self._page_size
        waf = (m.nand_pages_programmed / m.host_pages_written
               if m.host_pages_written else 0.0)
        report = RunReport(
            variant=canonical_variant(cfg.variant),
            seed=cfg.seed,
            backend=engine_mod.BACKEND,
            sim_time_us=self.engine.now,
            elapsed_us=elapsed,
            warmup_fraction=cfg.warmup_fraction,
            host_bytes_written=host_written_bytes,
            host_bytes_read=self._bytes_read,
            host_pages_written=m.host_pages_written,
            host_pages_read=m.host_pages_read,
            buffer_hit_reads=m.buffer_hit_reads,
            unmapped_reads=m.unmapped_reads,
            nand_pages_programmed=m.nand_pages_programmed,
            nand_erases=m.nand_erases,
            waf=round(waf, 6),
            throughput_mb_s=round(throughput, 6),
            throughput_steady_mb_s=round(steady, 6),
            iops=round(iops, 3),
            requests_completed=self._requests_completed,
            migrations_total=total_mig,
            migrations={
                "foreground": {"rcopyback": m.mig_fg_cb, "offchip": m.mig_fg_off},
                "background": {"rcopyback": m.mig_bg_cb, "offchip": m.mig_bg_off},
            },
            wear_level_migrations=m.wl_migrations,
            copyback_fraction=None if cb_fraction is None else round(cb_fraction, 6),
            copyback_fraction_second_half=(None if cb_fraction_2h is None
                                           else round(cb_fraction_2h, 6)),
            mode_decisions={f"{u}.{md}": n for (u, md), n in sorted(m.decision_counts.items())},
            slot_starved_fallbacks=m.slot_starved_fallbacks,
            stillborn_pages=m.stillborn_host + m.stillborn_migrations,
            migration_histogram=dict(sorted(m.histogram.items())),
            pages_never_migrated=m.never_migrated,
            counter0_idle_snapshots=[list(row) for row in self.counter0_idle_snapshots],
            oracle_violations=m.oracle_violations,
            data_loss_faults=m.data_loss_faults,
            event_log_digest=self.engine.log_digest() if cfg.hash_events else "",
        )
        return report


def run(cfg: RunConfig, requests=None, on_read=None) -> RunReport:
    """Execute one deterministic simulation and return its report."""
    return SimulationRunner(cfg, requests=requests, on_read=on_read).run()


def sweep(cfg: RunConfig, variants, baseline_variant=None) -> list[RunReport]:
    """Run each variant on the same workload; normalize against the baseline.

    baseline_variant defaults to the first entry. Workloads are regenerated
    from the shared seed, so every variant replays identical requests.
    """
    if len(variants) < 2 and baseline_variant is None:
        raise ValueError("sweep needs at least two variants")
    reports = [run(replace(cfg, variant=v)) for v in variants]
    base_name = canonical_variant(baseline_variant if baseline_variant else variants[0])
    base = next((r for r in reports if r.variant == base_name), None)
    if base is None:
        base_report = run(replace(cfg, variant=base_name))
        base = base_report
    for r in reports:
        r.normalized_throughput = (round(r.throughput_mb_s / base.throughput_mb_s, 6)
                                   if base.throughput_mb_s else None)
    return reports


def sweep_csv(reports) -> str:
    lines = ["variant,throughput_mb_s,normalized_throughput,waf,copyback_fraction,migrations_total"]
    for r in reports:
        lines.append(f"{r.variant},{r.throughput_mb_s},{r.normalized_throughput},"
                     f"{r.waf},{r.copyback_fraction},{r.migrations_total}")
    return "\n".join(lines) + "\n"
