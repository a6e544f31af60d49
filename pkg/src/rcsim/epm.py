"""Error propagation management: per-block copyback counters and slot rules.

Copyback counts are kept per block, not per page: a block allocated into
migration slot i only ever receives pages that have made exactly i copyback
hops since their last ECC-corrected write, so the block counter equals every
resident page's hop count. A plane keeps one migration destination per counter
value (slots 0..M_cpb) plus a dedicated host-write block (counter 0).
"""
from __future__ import annotations

from dataclasses import dataclass

from rcsim.geometry import Geometry
from rcsim.reliability import CtTable, ct_lookup

MODE_RCOPYBACK = "rcopyback"
MODE_OFFCHIP = "offchip"

URGENCY_FOREGROUND = "foreground"
URGENCY_BACKGROUND = "background"


@dataclass(frozen=True)
class MigrationDecision:
    mode: str
    destination_slot: int


def effective_threshold(block, ct: CtTable, m_cpb: int) -> int:
    """Per-block copyback limit: the table value capped by the run's M_cpb."""
    return min(m_cpb, ct_lookup(ct, block.pe_cycles))


def decide_destination(src, mode_hint: str, ct: CtTable, m_cpb: int,
                       chain_pe: int | None = None) -> MigrationDecision:
    """Pick mode and destination slot for a victim block's pages.

    Copyback is taken only when hinted and the source counter is strictly
    below the effective threshold; a counter at the threshold forces off-chip
    regardless of the hint. chain_pe, when given, evaluates the threshold at
    the highest P/E context seen anywhere along the pages' copyback chain
    instead of the block's own cycle count (strictly more conservative).
    """
    if mode_hint == MODE_RCOPYBACK:
        pe = src.pe_cycles if chain_pe is None else max(chain_pe, src.pe_cycles)
        limit = min(m_cpb, ct_lookup(ct, pe))
        if src.copyback_counter < limit:
            return MigrationDecision(MODE_RCOPYBACK, src.copyback_counter + 1)
    return MigrationDecision(MODE_OFFCHIP, 0)


class ActiveBlockSet:
    """One plane's open destinations: host-write block plus counter slots."""

    __slots__ = ("host", "slots")

    def __init__(self, m_cpb: int):
        self.host = None
        self.slots: list = [None] * (m_cpb + 1)

    def install_slot(self, slot: int, block) -> None:
        block.copyback_counter = slot
        self.slots[slot] = block

    def install_host(self, block) -> None:
        block.copyback_counter = 0
        self.host = block


def memory_footprint(g: Geometry, bits_per_counter: int = 3) -> dict:
    """Counter memory (bytes) for per-page versus per-block bookkeeping."""
    pages = g.total_pages
    blocks = g.blocks
    return {
        "per_page_bytes": (pages * bits_per_counter + 7) // 8,
        "per_block_bytes": (blocks * bits_per_counter + 7) // 8,
        "pages": pages,
        "blocks": blocks,
        "bits_per_counter": bits_per_counter,
    }
