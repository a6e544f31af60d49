"""SSD geometry, physical page addressing, and raw NAND latency formulas."""
from __future__ import annotations

from dataclasses import dataclass, fields

KIB = 1024
MIB = 1024 * KIB
GIB = 1024 * MIB


class ConfigError(ValueError):
    """Invalid geometry or timing configuration."""


class AddressError(ValueError):
    """Physical address outside the configured geometry."""


@dataclass(frozen=True)
class Geometry:
    """Physical layout of the simulated drive.

    Defaults give the 64 GiB reference configuration: 8 channels of 8 chips,
    each chip holding 1024 blocks of 64 pages of 16 KiB.
    """

    channels: int = 8
    chips_per_channel: int = 8
    planes_per_chip: int = 1
    blocks_per_plane: int = 1024
    pages_per_block: int = 64
    page_size: int = 16 * KIB

    @property
    def chips(self) -> int:
        return self.channels * self.chips_per_channel

    @property
    def planes(self) -> int:
        return self.chips * self.planes_per_chip

    @property
    def blocks(self) -> int:
        return self.planes * self.blocks_per_plane

    @property
    def total_pages(self) -> int:
        return self.blocks * self.pages_per_block

    @property
    def capacity_bytes(self) -> int:
        return self.total_pages * self.page_size


@dataclass(frozen=True)
class TimingParams:
    """Contention-free NAND operation latencies in integer microseconds.

    Only t_prog's default (640 us) is a measured figure; the others are
    plausible 1x-nm MLC values and are plain configuration.
    """

    t_read: int = 60
    t_prog: int = 640
    t_erase: int = 3500
    t_dma_out: int = 40
    t_dma_in: int = 40


@dataclass(frozen=True)
class PhysAddr:
    """One NAND page coordinate."""

    channel: int
    chip: int
    plane: int
    block: int
    page: int


def validate_geometry(g: Geometry) -> int:
    """Check every geometry invariant; return total capacity in bytes."""
    for f in fields(g):
        value = getattr(g, f.name)
        if not isinstance(value, int) or value < 1:
            raise ConfigError(f"geometry.{f.name} must be a positive integer, got {value!r}")
    if g.page_size & (g.page_size - 1):
        raise ConfigError(f"geometry.page_size must be a power of two, got {g.page_size}")
    return g.capacity_bytes


def validate_timing(t: TimingParams) -> None:
    for f in fields(t):
        value = getattr(t, f.name)
        if not isinstance(value, int) or value < 1:
            raise ConfigError(f"timing.{f.name} must be a positive integer of microseconds, got {value!r}")


def validate_addr(g: Geometry, a: PhysAddr) -> None:
    if not (0 <= a.channel < g.channels):
        raise AddressError(f"channel {a.channel} out of range [0, {g.channels})")
    if not (0 <= a.chip < g.chips_per_channel):
        raise AddressError(f"chip {a.chip} out of range [0, {g.chips_per_channel})")
    if not (0 <= a.plane < g.planes_per_chip):
        raise AddressError(f"plane {a.plane} out of range [0, {g.planes_per_chip})")
    if not (0 <= a.block < g.blocks_per_plane):
        raise AddressError(f"block {a.block} out of range [0, {g.blocks_per_plane})")
    if not (0 <= a.page < g.pages_per_block):
        raise AddressError(f"page {a.page} out of range [0, {g.pages_per_block})")


def encode_page(g: Geometry, a: PhysAddr) -> int:
    """Pack an address into a flat page number (plane-major, page minor)."""
    validate_addr(g, a)
    idx = a.channel
    idx = idx * g.chips_per_channel + a.chip
    idx = idx * g.planes_per_chip + a.plane
    idx = idx * g.blocks_per_plane + a.block
    return idx * g.pages_per_block + a.page


def decode_page(g: Geometry, ppn: int) -> PhysAddr:
    if not (0 <= ppn < g.total_pages):
        raise AddressError(f"page number {ppn} out of range [0, {g.total_pages})")
    idx, page = divmod(ppn, g.pages_per_block)
    idx, block = divmod(idx, g.blocks_per_plane)
    idx, plane = divmod(idx, g.planes_per_chip)
    channel, chip = divmod(idx, g.chips_per_channel)
    return PhysAddr(channel, chip, plane, block, page)


def copyback_compatible(g: Geometry, src: PhysAddr, dst: PhysAddr) -> bool:
    """True iff both pages share a plane register (channel, chip, plane equal)."""
    validate_addr(g, src)
    validate_addr(g, dst)
    return src.channel == dst.channel and src.chip == dst.chip and src.plane == dst.plane


def latency_offchip_copy(t: TimingParams) -> int:
    """Contention-free latency of one read + transfer out + transfer in + program."""
    return t.t_read + t.t_dma_out + t.t_dma_in + t.t_prog


def latency_copyback(t: TimingParams) -> int:
    """Contention-free latency of one in-plane copy: read plus program, no DMA."""
    return t.t_read + t.t_prog
