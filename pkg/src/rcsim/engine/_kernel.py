# cython: language_level=3, annotation_typing=False
"""Deterministic discrete-event kernel for contended NAND operations.

Time is integer microseconds. Events dispatch in nondecreasing (time, seq)
order where seq is a global monotonically increasing counter, and every
resource queue is FIFO by enqueue order, so identical inputs always produce
identical schedules, statistics, and phase logs.

Resources:
  * one unit per chip (held for read, program and erase phases),
  * one bus per channel and a small pool of DRAM ports (held together, channel
    first, for the duration of each DMA phase).

Copyback operations hold only their chip, for t_read followed immediately by
t_prog; they never touch a channel bus or DRAM port. Off-chip copies run
read -> dma_out -> dma_in -> program with the bus/port pair acquired per DMA
phase, which reproduces the serialization of simultaneous same-channel copies.

Grant convention (load-bearing for exact timelines): when a phase releases its
resources, waiters are granted synchronously *before* the releasing operation
requests resources for its own next phase.

This file is also the source of the optional compiled twin
(rcsim.engine._ckernel); keep it self-contained and free of Cython-specific
constructs.
"""
from __future__ import annotations

from heapq import heappop, heappush

from rcsim.geometry import AddressError

OFFCHIP_COPY = 0
COPYBACK = 1
HOST_READ = 2
HOST_WRITE = 3
ERASE = 4

OP_NAMES = ("offchip_copy", "copyback", "host_read", "host_write", "erase")

_HASH_MULT = 1000003
_HASH_MASK = (1 << 64) - 1


class NandOp:
    """One in-flight NAND operation; doubles as its completion ticket."""

    __slots__ = (
        "kind", "src", "dst", "stage", "done", "arg",
        "src_chip", "src_channel", "dst_chip", "dst_channel",
        "dram_port", "issue_time", "completion_time",
    )

    def __init__(self, kind, src, dst, done, arg):
        self.kind = kind
        self.src = src
        self.dst = dst
        self.stage = 0
        self.done = done
        self.arg = arg
        self.dram_port = -1
        self.issue_time = -1
        self.completion_time = -1


class Engine:
    """Single-threaded event engine over one drive's resources."""

    __slots__ = (
        "now", "_heap", "_seq",
        "channels", "chips_per_channel", "planes_per_chip",
        "blocks_per_plane", "pages_per_block", "total_pages",
        "t_read", "t_prog", "t_erase", "t_dma_out", "t_dma_in",
        "_pages_per_plane", "_planes_per_channel",
        "chip_free", "chip_q", "chip_busy_us", "chip_since",
        "chan_free", "chan_q", "chan_busy_us", "chan_since",
        "dram_ports", "_dram_free", "dram_q", "dram_busy_us", "dram_since",
        "log_phases", "hash_phases", "phases", "_digest",
        "op_counts", "finalized",
    )

    def __init__(self, channels, chips_per_channel, planes_per_chip,
                 blocks_per_plane, pages_per_block,
                 t_read, t_prog, t_erase, t_dma_out, t_dma_in,
                 dram_ports=1, log_phases=False, hash_phases=False):
        self.now = 0
        self._heap = []
        self._seq = 0
        self.channels = channels
        self.chips_per_channel = chips_per_channel
        self.planes_per_chip = planes_per_chip
        self.blocks_per_plane = blocks_per_plane
        self.pages_per_block = pages_per_block
        self._pages_per_plane = blocks_per_plane * pages_per_block
        self._planes_per_channel = chips_per_channel * planes_per_chip
        self.total_pages = channels * chips_per_channel * planes_per_chip * self._pages_per_plane
        self.t_read = t_read
        self.t_prog = t_prog
        self.t_erase = t_erase
        self.t_dma_out = t_dma_out
        self.t_dma_in = t_dma_in

        nchips = channels * chips_per_channel
        self.chip_free = [True] * nchips
        self.chip_q = [[] for _ in range(nchips)]
        self.chip_busy_us = [0] * nchips
        self.chip_since = [0] * nchips
        self.chan_free = [True] * channels
        self.chan_q = [[] for _ in range(channels)]
        self.chan_busy_us = [0] * channels
        self.chan_since = [0] * channels
        self.dram_ports = dram_ports
        self._dram_free = list(range(dram_ports))
        self.dram_q = []
        self.dram_busy_us = [0] * dram_ports
        self.dram_since = [0] * dram_ports

        self.log_phases = log_phases
        self.hash_phases = hash_phases
        self.phases = []
        self._digest = 0
        self.op_counts = [0, 0, 0, 0, 0]
        self.finalized = False

    # ------------------------------------------------------------------
    # submission
    # ------------------------------------------------------------------

    def _check_page(self, ppn):
        if not (0 <= ppn < self.total_pages):
            raise AddressError(f"page number {ppn} out of range [0, {self.total_pages})")

    def _new_op(self, kind, src, dst, done, arg):
        if self.finalized:
            raise RuntimeError("engine already finalized")
        op = NandOp(kind, src, dst, done, arg)
        if src >= 0:
            op.src_chip = src // (self.planes_per_chip * self._pages_per_plane)
            op.src_channel = op.src_chip // self.chips_per_channel
        else:
            op.src_chip = op.src_channel = -1
        if dst >= 0:
            op.dst_chip = dst // (self.planes_per_chip * self._pages_per_plane)
            op.dst_channel = op.dst_chip // self.chips_per_channel
        else:
            op.dst_chip = op.dst_channel = -1
        op.issue_time = self.now
        self.op_counts[kind] += 1
        self._advance(op)
        return op

    def submit_offchip(self, src, dst, done=None, arg=None):
        """Copy src page to dst page through the controller (four phases)."""
        self._check_page(src)
        self._check_page(dst)
        return self._new_op(OFFCHIP_COPY, src, dst, done, arg)

    def submit_copyback(self, src, dst, done=None, arg=None):
        """Copy src page to dst page through its plane register (no DMA)."""
        self._check_page(src)
        self._check_page(dst)
        if src // self._pages_per_plane != dst // self._pages_per_plane:
            raise AddressError(
                f"copyback requires one plane: pages {src} and {dst} differ")
        return self._new_op(COPYBACK, src, dst, done, arg)

    def submit_host_read(self, src, done=None, arg=None):
        self._check_page(src)
        return self._new_op(HOST_READ, src, -1, done, arg)

    def submit_host_write(self, dst, done=None, arg=None):
        self._check_page(dst)
        return self._new_op(HOST_WRITE, -1, dst, done, arg)

    def submit_erase(self, block_page, done=None, arg=None):
        """Erase the block containing block_page (any page of it)."""
        self._check_page(block_page)
        return self._new_op(ERASE, block_page, -1, done, arg)

    # ------------------------------------------------------------------
    # event loop
    # ------------------------------------------------------------------

    def _at(self, t, op):
        self._seq += 1
        heappush(self._heap, (t, self._seq, 0, op))

    def schedule(self, at, fn, arg=None):
        """Run fn(arg) at simulated time `at` (>= now)."""
        if at < self.now:
            raise ValueError(f"cannot schedule at {at} before now={self.now}")
        self._seq += 1
        heappush(self._heap, (at, self._seq, 1, (fn, arg)))

    def step(self):
        """Dispatch a single event; return False when the queue is empty."""
        if not self._heap:
            return False
        t, _, code, payload = heappop(self._heap)
        self.now = t
        if code:
            payload[0](payload[1])
        else:
            self._advance(payload)
        return True

    def run(self):
        """Dispatch every pending event."""
        heap = self._heap
        while heap:
            t, _, code, payload = heappop(heap)
            self.now = t
            if code:
                payload[0](payload[1])
            else:
                self._advance(payload)

    def run_until(self, t_end):
        """Dispatch all events with time <= t_end, then advance now to t_end."""
        heap = self._heap
        while heap and heap[0][0] <= t_end:
            t, _, code, payload = heappop(heap)
            self.now = t
            if code:
                payload[0](payload[1])
            else:
                self._advance(payload)
        if self.now < t_end:
            self.now = t_end
        return self.busy_snapshot()

    def pending(self):
        return len(self._heap)

    # ------------------------------------------------------------------
    # resources
    # ------------------------------------------------------------------

    def _want_chip(self, op, ci):
        if self.chip_free[ci]:
            self.chip_free[ci] = False
            self.chip_since[ci] = self.now
            self._advance(op)
        else:
            self.chip_q[ci].append(op)

    def _release_chip(self, ci):
        self.chip_busy_us[ci] += self.now - self.chip_since[ci]
        q = self.chip_q[ci]
        if q:
            nxt = q.pop(0)
            self.chip_since[ci] = self.now
            self._advance(nxt)
        else:
            self.chip_free[ci] = True

    def _want_bus_dram(self, op, ch):
        if self.chan_free[ch]:
            self.chan_free[ch] = False
            self.chan_since[ch] = self.now
            self._want_dram(op)
        else:
            self.chan_q[ch].append(op)

    def _want_dram(self, op):
        free = self._dram_free
        if free:
            port = free.pop(0)
            op.dram_port = port
            self.dram_since[port] = self.now
            self._advance(op)
        else:
            self.dram_q.append(op)

    def _release_bus_dram(self, op, ch):
        port = op.dram_port
        op.dram_port = -1
        self.dram_busy_us[port] += self.now - self.dram_since[port]
        if self.dram_q:
            nxt = self.dram_q.pop(0)
            nxt.dram_port = port
            self.dram_since[port] = self.now
            self._advance(nxt)
        else:
            free = self._dram_free
            free.append(port)
            if len(free) > 1:
                free.sort()
        self.chan_busy_us[ch] += self.now - self.chan_since[ch]
        q = self.chan_q[ch]
        if q:
            nxt = q.pop(0)
            self.chan_since[ch] = self.now
            self._want_dram(nxt)
        else:
            self.chan_free[ch] = True

    # ------------------------------------------------------------------
    # phase log
    # ------------------------------------------------------------------

    def _log(self, kind_code, ppn, dur, res_kind, res_a, res_b):
        # res_kind: 0 chip, 1 channel+dram; res_a its index, res_b the dram port
        if self.hash_phases:
            h = self._digest
            for v in (self.now, kind_code, ppn, dur, res_kind, res_a, res_b):
                h = ((h * _HASH_MULT) ^ (v & _HASH_MASK)) & _HASH_MASK
            self._digest = h
        if self.log_phases:
            self.phases.append((self.now, kind_code, ppn, dur, res_kind, res_a, res_b))

    # ------------------------------------------------------------------
    # operation state machine
    # ------------------------------------------------------------------

    def _complete(self, op):
        op.completion_time = self.now
        done = op.done
        if done is not None:
            done(op)

    def _advance(self, op):
        kind = op.kind
        st = op.stage
        if kind == COPYBACK:
            if st == 0:
                op.stage = 1
                self._want_chip(op, op.src_chip)
            elif st == 1:
                self._log(0, op.src, self.t_read, 0, op.src_chip, -1)
                op.stage = 2
                self._at(self.now + self.t_read, op)
            elif st == 2:
                # plane register still holds the data: keep the chip
                self._log(3, op.dst, self.t_prog, 0, op.src_chip, -1)
                op.stage = 3
                self._at(self.now + self.t_prog, op)
            else:
                self._release_chip(op.src_chip)
                self._complete(op)
        elif kind == OFFCHIP_COPY:
            if st == 0:
                op.stage = 1
                self._want_chip(op, op.src_chip)
            elif st == 1:
                self._log(0, op.src, self.t_read, 0, op.src_chip, -1)
                op.stage = 2
                self._at(self.now + self.t_read, op)
            elif st == 2:
                self._release_chip(op.src_chip)
                op.stage = 3
                self._want_bus_dram(op, op.src_channel)
            elif st == 3:
                self._log(1, op.src, self.t_dma_out, 1, op.src_channel, op.dram_port)
                op.stage = 4
                self._at(self.now + self.t_dma_out, op)
            elif st == 4:
                self._release_bus_dram(op, op.src_channel)
                op.stage = 5
                self._want_bus_dram(op, op.dst_channel)
            elif st == 5:
                self._log(2, op.dst, self.t_dma_in, 1, op.dst_channel, op.dram_port)
                op.stage = 6
                self._at(self.now + self.t_dma_in, op)
            elif st == 6:
                self._release_bus_dram(op, op.dst_channel)
                op.stage = 7
                self._want_chip(op, op.dst_chip)
            elif st == 7:
                self._log(3, op.dst, self.t_prog, 0, op.dst_chip, -1)
                op.stage = 8
                self._at(self.now + self.t_prog, op)
            else:
                self._release_chip(op.dst_chip)
                self._complete(op)
        elif kind == HOST_WRITE:
            if st == 0:
                op.stage = 1
                self._want_bus_dram(op, op.dst_channel)
            elif st == 1:
                self._log(2, op.dst, self.t_dma_in, 1, op.dst_channel, op.dram_port)
                op.stage = 2
                self._at(self.now + self.t_dma_in, op)
            elif st == 2:
                self._release_bus_dram(op, op.dst_channel)
                op.stage = 3
                self._want_chip(op, op.dst_chip)
            elif st == 3:
                self._log(3, op.dst, self.t_prog, 0, op.dst_chip, -1)
                op.stage = 4
                self._at(self.now + self.t_prog, op)
            else:
                self._release_chip(op.dst_chip)
                self._complete(op)
        elif kind == HOST_READ:
            if st == 0:
                op.stage = 1
                self._want_chip(op, op.src_chip)
            elif st == 1:
                self._log(0, op.src, self.t_read, 0, op.src_chip, -1)
                op.stage = 2
                self._at(self.now + self.t_read, op)
            elif st == 2:
                self._release_chip(op.src_chip)
                op.stage = 3
                self._want_bus_dram(op, op.src_channel)
            elif st == 3:
                self._log(1, op.src, self.t_dma_out, 1, op.src_channel, op.dram_port)
                op.stage = 4
                self._at(self.now + self.t_dma_out, op)
            else:
                self._release_bus_dram(op, op.src_channel)
                self._complete(op)
        else:  # ERASE
            if st == 0:
                op.stage = 1
                self._want_chip(op, op.src_chip)
            elif st == 1:
                self._log(4, op.src, self.t_erase, 0, op.src_chip, -1)
                op.stage = 2
                self._at(self.now + self.t_erase, op)
            else:
                self._release_chip(op.src_chip)
                self._complete(op)

    # ------------------------------------------------------------------
    # reporting
    # ------------------------------------------------------------------

    def busy_snapshot(self):
        """Accumulated busy microseconds per resource, including current holds."""
        out = {}
        for i in range(len(self.chip_busy_us)):
            held = 0 if self.chip_free[i] else self.now - self.chip_since[i]
            out[("chip", i)] = self.chip_busy_us[i] + held
        for i in range(self.channels):
            held = 0 if self.chan_free[i] else self.now - self.chan_since[i]
            out[("channel", i)] = self.chan_busy_us[i] + held
        free_ports = set(self._dram_free)
        for i in range(self.dram_ports):
            held = 0 if i in free_ports else self.now - self.dram_since[i]
            out[("dram", i)] = self.dram_busy_us[i] + held
        return out

    def log_digest(self):
        """Rolling 64-bit hash over every phase record (hash_phases mode)."""
        return f"{self._digest:016x}"


PHASE_NAMES = ("read_phase", "dma_out", "dma_in", "program_phase", "erase")


def phase_rows(engine):
    """Decode the stored phase log into CSV-ready rows.

    Columns: time, kind, channel, chip, plane, block, page, resource_held.
    """
    ppb = engine.pages_per_block
    bpp = engine.blocks_per_plane
    ppc = engine.planes_per_chip
    cpc = engine.chips_per_channel
    rows = []
    for start, kind_code, ppn, _dur, res_kind, res_a, res_b in engine.phases:
        idx, page = divmod(ppn, ppb)
        idx, block = divmod(idx, bpp)
        idx, plane = divmod(idx, ppc)
        channel, chip = divmod(idx, cpc)
        if res_kind == 0:
            held = f"chip:{channel}.{chip}"
        else:
            held = f"channel:{res_a}+dram:{res_b}"
        rows.append((start, PHASE_NAMES[kind_code], channel, chip, plane, block, page, held))
    return rows


def phase_intervals(engine):
    """(resource, start, end) holding intervals per logged phase, for audits.

    A copyback's two phases share one continuous chip hold; they appear as two
    back-to-back intervals.
    """
    out = []
    for start, _kind, _ppn, dur, res_kind, res_a, res_b in engine.phases:
        if res_kind == 0:
            out.append((("chip", res_a), start, start + dur))
        else:
            out.append((("channel", res_a), start, start + dur))
            out.append((("dram", res_b), start, start + dur))
    return out
