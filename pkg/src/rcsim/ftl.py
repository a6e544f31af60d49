"""Page-level mapping FTL with restricted-copyback-aware data migration.

One Ftl instance owns all drive state and is driven entirely by its engine's
single-threaded dispatch loop: host arrivals enter through host_write /
host_read, programs and migrations complete through engine callbacks, and
garbage collection / wear leveling run as per-plane reclamation jobs.

Block-level copyback accounting: every migration destination is one of the
plane's counter slots (see rcsim.epm), so a block's counter equals the hop
count of every page inside it. Blocks additionally carry chain_pe, the highest
P/E context seen along their pages' copyback chains; eligibility and
readability are evaluated there (conservative for mixed-age chains).
"""
from __future__ import annotations

from collections import deque
from dataclasses import dataclass, field

from rcsim.dmms import ModeConfig, UtilizationTracker, greedy_select_mode, record_sample, select_mode
from rcsim.epm import (
    MODE_OFFCHIP,
    MODE_RCOPYBACK,
    URGENCY_BACKGROUND,
    URGENCY_FOREGROUND,
    ActiveBlockSet,
    decide_destination,
)
from rcsim.geometry import AddressError, ConfigError, Geometry, TimingParams
from rcsim.reliability import (
    DEFAULT_ERROR_MODEL,
    DataLossError,
    ErrorModel,
    ct_lookup,
    derive_ct_from_model,
)
from rcsim.report import SampledSeries

FREE = 0
ACTIVE = 1
FULL = 2
RECLAIMING = 3

STATE_NAMES = ("free", "active", "full", "reclaiming")

SELECTOR_BASELINE = "baseline"
SELECTOR_GREEDY = "greedy"
SELECTOR_DMMS = "dmms"


class CapacityFault(RuntimeError):
    """No free block for a required allocation: the configuration is undersized."""


class BlockMeta:
    """Per-block bookkeeping; valid_bitmap bit i covers page i."""

    __slots__ = ("idx", "plane", "base", "pe_cycles", "copyback_counter",
                 "chain_pe", "valid_bitmap", "valid_count", "write_ptr",
                 "state", "inflight", "readable")

    def __init__(self, idx, plane, base, pe_cycles=0):
        self.idx = idx
        self.plane = plane
        self.base = base
        self.pe_cycles = pe_cycles
        self.copyback_counter = 0
        self.chain_pe = pe_cycles
        self.valid_bitmap = 0
        self.valid_count = 0
        self.write_ptr = 0
        self.state = FREE
        self.inflight = 0
        self.readable = True


class MappingTable:
    """Forward and reverse page maps, bijective on mapped entries."""

    __slots__ = ("l2p", "p2l")

    def __init__(self):
        self.l2p = {}
        self.p2l = {}

    def bind(self, lpn, ppn):
        self.l2p[lpn] = ppn
        self.p2l[ppn] = lpn

    def check_bijective(self):
        if len(self.l2p) != len(self.p2l):
            raise AssertionError(f"mapping size mismatch: {len(self.l2p)} vs {len(self.p2l)}")
        for lpn, ppn in self.l2p.items():
            if self.p2l.get(ppn) != lpn:
                raise AssertionError(f"mapping not bijective at lpn={lpn} ppn={ppn}")


@dataclass
class GcPolicy:
    fg_watermark: int = 4        # free blocks per plane triggering foreground GC
    gc_reserve: int = 2          # free blocks below which host allocation yields to GC
    bg_idle_us: int = 1000       # host idleness triggering background work
    bg_free_target: int = 8      # background GC tops the free pool up to here
    wear_gap: int = 256          # strict max-min P/E gap triggering wear leveling

    def __post_init__(self):
        if self.fg_watermark < 1:
            raise ConfigError("gc.fg_watermark must be >= 1")
        if not 0 <= self.gc_reserve < self.fg_watermark:
            raise ConfigError("gc.gc_reserve must be in [0, fg_watermark)")


@dataclass
class FtlConfig:
    m_cpb: int = 4
    selector: str = SELECTOR_DMMS
    write_buffer_bytes: int = 10 * 1024 * 1024
    logical_fraction: float = 0.875
    retention_months: int = 12
    u_threshold: float = 0.5
    gc: GcPolicy = field(default_factory=GcPolicy)
    initial_pe: tuple = ()       # optional per-block aging, applied round-robin
    shadow_oracle: bool = False  # maintain the per-page hop oracle (tests)
    bijectivity_audit: bool = False
    log_decisions: bool = False
    log_state_snapshots: bool = False


class SimMetrics:
    """Flat counters updated by the FTL; report assembly reads them."""

    __slots__ = (
        "host_pages_written", "host_pages_read", "buffer_hit_reads", "unmapped_reads",
        "nand_pages_programmed", "nand_erases",
        "mig_fg_cb", "mig_fg_off", "mig_bg_cb", "mig_bg_off", "wl_migrations",
        "stillborn_host", "stillborn_migrations", "slot_starved_fallbacks",
        "decision_counts", "decisions", "state_snapshots",
        "histogram", "never_migrated",
        "oracle_violations", "data_loss_faults",
        "gc_runs_fg", "gc_runs_bg",
        "mig_series",
    )

    def __init__(self):
        self.host_pages_written = 0
        self.host_pages_read = 0
        self.buffer_hit_reads = 0
        self.unmapped_reads = 0
        self.nand_pages_programmed = 0
        self.nand_erases = 0
        self.mig_fg_cb = 0
        self.mig_fg_off = 0
        self.mig_bg_cb = 0
        self.mig_bg_off = 0
        self.wl_migrations = 0
        self.stillborn_host = 0
        self.stillborn_migrations = 0
        self.slot_starved_fallbacks = 0
        self.decision_counts = {}
        self.decisions = []
        self.state_snapshots = []
        self.histogram = {}
        self.never_migrated = 0
        self.oracle_violations = 0
        self.data_loss_faults = 0
        self.gc_runs_fg = 0
        self.gc_runs_bg = 0
        self.mig_series = SampledSeries()

    @property
    def migrations_copyback(self):
        return self.mig_fg_cb + self.mig_bg_cb

    @property
    def migrations_offchip(self):
        return self.mig_fg_off + self.mig_bg_off

    @property
    def migrations_total(self):
        return self.migrations_copyback + self.migrations_offchip


class _Plane:
    __slots__ = ("idx", "free", "abs", "gc_job")

    def __init__(self, idx, m_cpb):
        self.idx = idx
        self.free = deque()
        self.abs = ActiveBlockSet(m_cpb)
        self.gc_job = None


class _Reclaim:
    """One victim block being drained and erased."""

    __slots__ = ("plane", "victim", "mode", "slot", "urgency", "is_wl",
                 "remaining", "migrated", "forced_offchip")

    def __init__(self, plane, victim, mode, slot, urgency, is_wl):
        self.plane = plane
        self.victim = victim
        self.mode = mode
        self.slot = slot
        self.urgency = urgency
        self.is_wl = is_wl
        self.remaining = 0
        self.migrated = 0
        self.forced_offchip = False


class Ftl:
    def __init__(self, geometry: Geometry, timing: TimingParams, engine,
                 cfg: FtlConfig, model: ErrorModel = DEFAULT_ERROR_MODEL):
        self.geometry = geometry
        self.timing = timing
        self.engine = engine
        self.cfg = cfg
        self.model = model
        self.ct = derive_ct_from_model(model, cfg.retention_months)
        self.mode_cfg = ModeConfig(cfg.u_threshold)
        self.tracker = UtilizationTracker(geometry.pages_per_block * timing.t_prog)
        self.metrics = SimMetrics()

        self.ppb = geometry.pages_per_block
        self.page_size = geometry.page_size
        self.logical_pages = int(geometry.total_pages * cfg.logical_fraction)
        if self.logical_pages < 1:
            raise ConfigError("logical capacity is empty; raise logical_fraction")

        if cfg.m_cpb < 0 or cfg.m_cpb > 7:
            raise ConfigError("m_cpb must lie in [0, 7] (3-bit per-block counters)")
        per_plane_overhead = cfg.m_cpb + 2  # host block + one block per counter slot
        if geometry.blocks_per_plane < per_plane_overhead + cfg.gc.fg_watermark + 2:
            raise ConfigError(
                f"blocks_per_plane={geometry.blocks_per_plane} cannot hold "
                f"{per_plane_overhead} active blocks plus the GC watermark")

        bpp = geometry.blocks_per_plane
        aging = cfg.initial_pe
        self.blocks = []
        for i in range(geometry.blocks):
            pe = aging[i % len(aging)] if aging else 0
            self.blocks.append(BlockMeta(i, i // bpp, i * self.ppb, pe))

        self.planes = []
        for p in range(geometry.planes):
            plane = _Plane(p, cfg.m_cpb)
            plane.free.extend(self.blocks[p * bpp:(p + 1) * bpp])
            self.planes.append(plane)
            self._alloc_host(plane)
            for slot in range(cfg.m_cpb + 1):
                blk = self._alloc_slot(plane, slot)
                if blk is None:
                    raise ConfigError(
                        f"no block in plane {p} is copyback-eligible for slot {slot}; "
                        f"check initial_pe against the threshold table")

        self.map = MappingTable()
        self.volatile = {}        # lpn -> (version, tag) while the data is in DRAM
        self.lpn_ver = {}         # last version issued per lpn
        self.mapped_ver = {}      # version currently mapped per lpn
        self.page_tag = {}        # ppn -> content tag (kept until overwritten)
        self.lpn_migrations = {}  # migrations of the current incarnation

        self.buffer_occupied = 0
        self._fifo = deque()
        self.pending_writes = deque()
        self._rr = 0

        self.shadow_hops = {}
        self.shadow_chain = {}

        self.reclaim_done_hook = None

    # ------------------------------------------------------------------
    # allocation
    # ------------------------------------------------------------------

    def _alloc_host(self, plane):
        if not plane.free:
            raise CapacityFault(f"plane {plane.idx}: free pool empty allocating the host block")
        block = plane.free.popleft()
        block.state = ACTIVE
        block.write_ptr = 0
        block.chain_pe = block.pe_cycles
        plane.abs.install_host(block)
        self._recompute_readable(block)
        return block

    def _alloc_slot(self, plane, slot):
        """Open a migration destination with counter `slot`.

        Slots above 0 only accept blocks whose cycle count still permits
        `slot` consecutive hops; returns None when no free block qualifies.
        Raises CapacityFault when the pool is empty outright.
        """
        if not plane.free:
            raise CapacityFault(f"plane {plane.idx}: free pool empty allocating slot {slot}")
        chosen = None
        if slot == 0:
            chosen = plane.free.popleft()
        else:
            for block in plane.free:
                if ct_lookup(self.ct, block.pe_cycles) >= slot:
                    chosen = block
                    break
            if chosen is None:
                return None
            plane.free.remove(chosen)
        chosen.state = ACTIVE
        chosen.write_ptr = 0
        chosen.chain_pe = chosen.pe_cycles
        plane.abs.install_slot(slot, chosen)
        self._recompute_readable(chosen)
        return chosen

    def allocate_active(self, plane_idx: int, slot: int):
        """Public slot allocation; retires any block currently in the slot."""
        plane = self.planes[plane_idx]
        current = plane.abs.slots[slot]
        if current is not None:
            current.state = FULL
            plane.abs.slots[slot] = None
        block = self._alloc_slot(plane, slot)
        if block is None:
            raise CapacityFault(f"plane {plane_idx}: no copyback-eligible free block for slot {slot}")
        return block

    def _recompute_readable(self, block):
        m = self.model
        acc = (m.base_ber(block.chain_pe, self.cfg.retention_months)
               + block.copyback_counter * m.delta_per_copyback(block.chain_pe))
        block.readable = acc <= m.ecc_capacity

    # ------------------------------------------------------------------
    # host write path
    # ------------------------------------------------------------------

    def host_write(self, lpn: int, tag: int, on_done=None):
        """Buffer one page write; on_done(tag) fires when the buffer accepts it."""
        if not 0 <= lpn < self.logical_pages:
            raise AddressError(f"lpn {lpn} out of range [0, {self.logical_pages})")
        version = self.lpn_ver.get(lpn, 0) + 1
        self.lpn_ver[lpn] = version
        self.volatile[lpn] = (version, tag)
        self.metrics.host_pages_written += 1
        if self.buffer_occupied + self.page_size <= self.cfg.write_buffer_bytes:
            self._accept_write(lpn, version, tag, on_done)
        else:
            self.pending_writes.append((lpn, version, tag, on_done))

    def _accept_write(self, lpn, version, tag, on_done):
        self.buffer_occupied += self.page_size
        self._fifo.append((lpn, version, tag))
        self._sample_u()
        if on_done is not None:
            on_done(tag)
        self._pump_flush()

    def _admit_pending(self):
        while self.pending_writes and \
                self.buffer_occupied + self.page_size <= self.cfg.write_buffer_bytes:
            lpn, version, tag, on_done = self.pending_writes.popleft()
            self._accept_write(lpn, version, tag, on_done)

    def _sample_u(self):
        record_sample(self.tracker, self.engine.now,
                      self.buffer_occupied / self.cfg.write_buffer_bytes)

    def flush_tick(self) -> int:
        """Dispatch buffered pages to host-write blocks; returns pages issued."""
        return self._pump_flush()

    def _pump_flush(self):
        fifo = self._fifo
        dispatched = 0
        while fifo:
            plane = self._pick_plane()
            if plane is None:
                break
            lpn, version, tag = fifo.popleft()
            block = plane.abs.host
            ppn = block.base + block.write_ptr
            block.write_ptr += 1
            block.inflight += 1
            if block.write_ptr == self.ppb:
                block.state = FULL
                plane.abs.host = None
                self.tracker.record_block_fill(self.engine.now)
            self.engine.submit_host_write(ppn, self._host_prog_done,
                                          (plane, block, ppn, lpn, version, tag))
            dispatched += 1
        return dispatched

    def _pick_plane(self):
        planes = self.planes
        n = len(planes)
        start = self._rr
        for k in range(n):
            plane = planes[(start + k) % n]
            if plane.abs.host is not None:
                self._rr = (start + k + 1) % n
                return plane
            if len(plane.free) > self.cfg.gc.gc_reserve:
                self._alloc_host(plane)
                self._check_fg(plane)
                self._rr = (start + k + 1) % n
                return plane
            self._check_fg(plane)
        return None

    def _host_prog_done(self, op):
        plane, block, ppn, lpn, version, tag = op.arg
        m = self.metrics
        m.nand_pages_programmed += 1
        block.inflight -= 1
        self.buffer_occupied -= self.page_size
        self._sample_u()
        if version > self.mapped_ver.get(lpn, 0):
            old = self.map.l2p.get(lpn)
            if old is not None:
                self._end_incarnation(lpn)
                self._invalidate(old)
            self.map.bind(lpn, ppn)
            self.mapped_ver[lpn] = version
            block.valid_bitmap |= 1 << (ppn - block.base)
            block.valid_count += 1
            self.page_tag[ppn] = tag
            self.lpn_migrations[lpn] = 0
            vol = self.volatile.get(lpn)
            if vol is not None and vol[0] == version:
                del self.volatile[lpn]
            if self.cfg.shadow_oracle:
                self.shadow_hops[ppn] = 0
                self.shadow_chain[ppn] = block.pe_cycles
        else:
            m.stillborn_host += 1
        self._admit_pending()
        self._pump_flush()

    def _invalidate(self, ppn):
        block = self.blocks[ppn // self.ppb]
        bit = 1 << (ppn - block.base)
        block.valid_bitmap &= ~bit
        block.valid_count -= 1
        del self.map.p2l[ppn]

    def _end_incarnation(self, lpn):
        count = self.lpn_migrations.get(lpn, 0)
        if count:
            hist = self.metrics.histogram
            hist[count] = hist.get(count, 0) + 1
        else:
            self.metrics.never_migrated += 1

    # ------------------------------------------------------------------
    # host read path
    # ------------------------------------------------------------------

    def host_read(self, lpn: int, on_done):
        """Resolve one page read; on_done(tag) fires at completion time."""
        if not 0 <= lpn < self.logical_pages:
            raise AddressError(f"lpn {lpn} out of range [0, {self.logical_pages})")
        self.metrics.host_pages_read += 1
        vol = self.volatile.get(lpn)
        if vol is not None:
            self.metrics.buffer_hit_reads += 1
            self.engine.schedule(self.engine.now + self.timing.t_dma_out,
                                 _deliver, (on_done, vol[1]))
            return
        ppn = self.map.l2p.get(lpn)
        if ppn is None:
            self.metrics.unmapped_reads += 1
            self.engine.schedule(self.engine.now, _deliver, (on_done, 0))
            return
        self._check_readable(ppn, lpn)
        tag = self.page_tag.get(ppn, 0)
        self.engine.submit_host_read(ppn, _read_done, (on_done, tag))

    def _check_readable(self, ppn, lpn):
        block = self.blocks[ppn // self.ppb]
        if not block.readable:
            self.metrics.data_loss_faults += 1
            raise DataLossError(
                f"lpn {lpn} at ppn {ppn}: block {block.idx} "
                f"(counter={block.copyback_counter}, chain_pe={block.chain_pe}, "
                f"pe={block.pe_cycles}) exceeds ECC capacity")

    def peek_tag(self, lpn: int):
        """Current content tag (volatile or on NAND) without simulating a read."""
        vol = self.volatile.get(lpn)
        if vol is not None:
            return vol[1]
        ppn = self.map.l2p.get(lpn)
        if ppn is None:
            return 0
        return self.page_tag.get(ppn, 0)

    # ------------------------------------------------------------------
    # garbage collection and wear leveling
    # ------------------------------------------------------------------

    def select_victim(self, plane_idx: int):
        """Greedy: the full block with fewest valid pages (ties: lowest index)."""
        best = None
        bpp = self.geometry.blocks_per_plane
        for block in self.blocks[plane_idx * bpp:(plane_idx + 1) * bpp]:
            if block.state != FULL or block.inflight or block.valid_count >= block.write_ptr:
                continue
            if best is None or block.valid_count < best.valid_count:
                best = block
        return best

    def _mode_hint(self, urgency):
        selector = self.cfg.selector
        if selector == SELECTOR_BASELINE:
            return MODE_OFFCHIP
        if selector == SELECTOR_GREEDY:
            return greedy_select_mode(urgency)
        return select_mode(self.tracker, self.mode_cfg, urgency)

    def _check_fg(self, plane):
        if plane.gc_job is None and len(plane.free) <= self.cfg.gc.fg_watermark:
            victim = self.select_victim(plane.idx)
            if victim is not None:
                self._start_reclaim(plane, victim, URGENCY_FOREGROUND)

    def background_round(self) -> bool:
        """One idle-time pass: background GC up to the free target, then WL."""
        started = False
        for plane in self.planes:
            if plane.gc_job is None and len(plane.free) < self.cfg.gc.bg_free_target:
                victim = self.select_victim(plane.idx)
                if victim is not None:
                    self._start_reclaim(plane, victim, URGENCY_BACKGROUND)
                    started = True
        if self.wear_level_check():
            started = True
        return started

    def wear_level_check(self) -> list:
        """Migrate the coldest full block of any plane whose P/E gap exceeds the limit."""
        acted = []
        bpp = self.geometry.blocks_per_plane
        for plane in self.planes:
            if plane.gc_job is not None:
                continue
            blocks = self.blocks[plane.idx * bpp:(plane.idx + 1) * bpp]
            lo = min(b.pe_cycles for b in blocks)
            hi = max(b.pe_cycles for b in blocks)
            if hi - lo <= self.cfg.gc.wear_gap:
                continue
            coldest = None
            for block in blocks:
                if block.state != FULL or block.inflight:
                    continue
                if coldest is None or block.pe_cycles < coldest.pe_cycles:
                    coldest = block
            if coldest is not None:
                self._start_reclaim(plane, coldest, URGENCY_BACKGROUND, is_wl=True)
                acted.append(coldest.idx)
        return acted

    def _start_reclaim(self, plane, victim, urgency, is_wl=False):
        if plane.gc_job is not None:
            raise RuntimeError(f"plane {plane.idx} already reclaiming")
        m = self.metrics
        hint = self._mode_hint(urgency)
        decision = decide_destination(victim, hint, self.ct, self.cfg.m_cpb,
                                      chain_pe=victim.chain_pe)
        key = (urgency, decision.mode)
        m.decision_counts[key] = m.decision_counts.get(key, 0) + 1
        if self.cfg.log_decisions:
            m.decisions.append((self.engine.now, urgency,
                                round(self.tracker.smoothed_u, 6), decision.mode))
        if urgency == URGENCY_FOREGROUND:
            m.gc_runs_fg += 1
        else:
            m.gc_runs_bg += 1
        if self.cfg.log_state_snapshots:
            m.state_snapshots.append((
                self.engine.now, sum(len(p.free) for p in self.planes),
                round(self.buffer_occupied / self.cfg.write_buffer_bytes, 6),
                m.host_pages_written, m.nand_pages_programmed,
                m.gc_runs_fg, m.gc_runs_bg,
            ))
        victim.state = RECLAIMING
        job = _Reclaim(plane, victim, decision.mode, decision.destination_slot,
                       urgency, is_wl)
        plane.gc_job = job
        pages = []
        bitmap = victim.valid_bitmap
        for i in range(self.ppb):
            if bitmap >> i & 1:
                pages.append(i)
        job.remaining = len(pages)
        if not pages:
            self._submit_erase(job)
            return job
        for i in pages:
            self._submit_migration(job, victim.base + i)
        return job

    def _take_slot_page(self, plane, slot):
        block = plane.abs.slots[slot]
        if block is None:
            block = self._alloc_slot(plane, slot)
            if block is None:
                return None, None
        ppn = block.base + block.write_ptr
        block.write_ptr += 1
        if block.write_ptr == self.ppb:
            block.state = FULL
            plane.abs.slots[slot] = None
        return ppn, block

    def _submit_migration(self, job, src_ppn):
        plane = job.plane
        victim = job.victim
        if job.mode == MODE_RCOPYBACK:
            ppn_block = self._take_slot_page(plane, job.slot)
            if ppn_block[0] is None:
                # no copyback-eligible free block mid-victim: fall back off-chip
                job.mode = MODE_OFFCHIP
                job.slot = 0
                job.forced_offchip = True
                self.metrics.slot_starved_fallbacks += 1
            else:
                dst_ppn, dst_block = ppn_block
                dst_block.inflight += 1
                if victim.chain_pe > dst_block.chain_pe:
                    dst_block.chain_pe = victim.chain_pe
                    self._recompute_readable(dst_block)
                tag = self.page_tag.get(src_ppn, 0)
                self.engine.submit_copyback(
                    src_ppn, dst_ppn, self._migration_done,
                    (job, src_ppn, dst_ppn, dst_block, tag, True))
                return
        self._check_readable(src_ppn, self.map.p2l.get(src_ppn))
        dst_ppn, dst_block = self._take_slot_page(plane, 0)
        if dst_ppn is None:
            raise CapacityFault(f"plane {plane.idx}: cannot open slot 0")
        dst_block.inflight += 1
        tag = self.page_tag.get(src_ppn, 0)
        self.engine.submit_offchip(src_ppn, dst_ppn, self._migration_done,
                                   (job, src_ppn, dst_ppn, dst_block, tag, False))

    def _migration_done(self, op):
        job, src_ppn, dst_ppn, dst_block, tag, is_cb = op.arg
        m = self.metrics
        m.nand_pages_programmed += 1
        dst_block.inflight -= 1
        if job.urgency == URGENCY_FOREGROUND:
            if is_cb:
                m.mig_fg_cb += 1
            else:
                m.mig_fg_off += 1
        else:
            if is_cb:
                m.mig_bg_cb += 1
            else:
                m.mig_bg_off += 1
            if job.is_wl:
                m.wl_migrations += 1
        m.mig_series.tick((self.engine.now, m.migrations_copyback, m.migrations_offchip))
        lpn = self.map.p2l.get(src_ppn)
        if lpn is not None:
            victim = job.victim
            bit = 1 << (src_ppn - victim.base)
            victim.valid_bitmap &= ~bit
            victim.valid_count -= 1
            del self.map.p2l[src_ppn]
            self.map.bind(lpn, dst_ppn)
            dst_block.valid_bitmap |= 1 << (dst_ppn - dst_block.base)
            dst_block.valid_count += 1
            self.page_tag[dst_ppn] = tag
            self.lpn_migrations[lpn] = self.lpn_migrations.get(lpn, 0) + 1
            job.migrated += 1
            if self.cfg.shadow_oracle:
                self._shadow_check(src_ppn, dst_ppn, dst_block, is_cb)
        else:
            m.stillborn_migrations += 1
        job.remaining -= 1
        if job.remaining == 0:
            self._submit_erase(job)

    def _shadow_check(self, src_ppn, dst_ppn, dst_block, is_cb):
        victim_pe = self.blocks[src_ppn // self.ppb].pe_cycles
        if is_cb:
            hops = self.shadow_hops.get(src_ppn, 0) + 1
            chain = max(self.shadow_chain.get(src_ppn, victim_pe), dst_block.pe_cycles)
            limit = min(self.cfg.m_cpb, ct_lookup(self.ct, chain))
            if hops > limit or hops != dst_block.copyback_counter:
                self.metrics.oracle_violations += 1
        else:
            hops = 0
            chain = dst_block.pe_cycles
        self.shadow_hops[dst_ppn] = hops
        self.shadow_chain[dst_ppn] = chain

    def _submit_erase(self, job):
        victim = job.victim
        if victim.valid_count != 0:
            raise AssertionError(
                f"block {victim.idx} erased with {victim.valid_count} valid pages")
        self.engine.submit_erase(victim.base, self._erase_done, job)

    def _erase_done(self, op):
        job = op.arg
        victim = job.victim
        plane = job.plane
        victim.pe_cycles += 1
        victim.state = FREE
        victim.valid_bitmap = 0
        victim.write_ptr = 0
        victim.inflight = 0
        plane.free.append(victim)
        self.metrics.nand_erases += 1
        plane.gc_job = None
        if self.cfg.bijectivity_audit:
            self.map.check_bijective()
        self._check_fg(plane)
        self._pump_flush()
        hook = self.reclaim_done_hook
        if hook is not None:
            hook(job)

    def gc_run(self, plane_idx: int, urgency: str) -> int:
        """Reclaim one victim synchronously (testing aid); returns pages migrated.

        Production reclamation is event-driven through _check_fg and
        background_round; this drives the engine until the job finishes.
        """
        plane = self.planes[plane_idx]
        if plane.gc_job is not None:
            raise RuntimeError(f"plane {plane_idx} already reclaiming")
        victim = self.select_victim(plane_idx)
        if victim is None:
            raise RuntimeError(f"plane {plane_idx}: no GC victim available")
        job = self._start_reclaim(plane, victim, urgency)
        while plane.gc_job is job:
            if not self.engine.step():
                raise RuntimeError("engine drained before reclamation finished")
        return job.migrated

    # ------------------------------------------------------------------
    # synchronous conveniences (tests and interactive use)
    # ------------------------------------------------------------------

    def handle_write(self, lpn: int, data_tag: int) -> int:
        """Write one page and drive the engine until the buffer accepts it."""
        done = []
        self.host_write(lpn, data_tag, lambda _tag: done.append(self.engine.now))
        while not done:
            if not self.engine.step():
                raise CapacityFault("drive stalled before accepting the write")
        return done[0]

    def handle_read(self, lpn: int):
        """Read one page, driving the engine; returns (completion_us, tag)."""
        out = []
        self.host_read(lpn, lambda tag: out.append((self.engine.now, tag)))
        while not out:
            if not self.engine.step():
                raise RuntimeError("engine drained before the read completed")
        return out[0]

    # ------------------------------------------------------------------
    # inspection
    # ------------------------------------------------------------------

    def free_block_count(self) -> int:
        return sum(len(p.free) for p in self.planes)

    def count_counter0_blocks(self) -> int:
        """Data-holding blocks whose pages have a full copyback budget left."""
        n = 0
        for block in self.blocks:
            if block.copyback_counter == 0 and block.state in (ACTIVE, FULL):
                n += 1
        return n

    def quiescent(self) -> bool:
        return (not self._fifo and not self.pending_writes
                and all(p.gc_job is None for p in self.planes))


def _deliver(arg):
    fn, tag = arg
    fn(tag)


def _read_done(op):
    fn, tag = op.arg
    fn(tag)
