import pytest
from hypothesis import given
from hypothesis import strategies as st

from rcsim.geometry import (
    AddressError,
    ConfigError,
    Geometry,
    PhysAddr,
    TimingParams,
    copyback_compatible,
    decode_page,
    encode_page,
    latency_copyback,
    latency_offchip_copy,
    validate_geometry,
)


def test_default_geometry_is_64_gib():
    assert validate_geometry(Geometry()) == 64 * 1024 ** 3


def test_zero_field_rejected():
    with pytest.raises(ConfigError, match="pages_per_block"):
        validate_geometry(Geometry(pages_per_block=0))


def test_tiny_geometry_capacity():
    g = Geometry(channels=1, chips_per_channel=1, planes_per_chip=1,
                 blocks_per_plane=2, pages_per_block=2, page_size=16 * 1024)
    assert validate_geometry(g) == 64 * 1024


def test_page_size_must_be_power_of_two():
    with pytest.raises(ConfigError, match="power of two"):
        validate_geometry(Geometry(page_size=3000))


@pytest.mark.parametrize("t,expected", [
    (TimingParams(t_read=60, t_dma_out=40, t_dma_in=40, t_prog=640), 780),
    (TimingParams(t_read=0, t_dma_out=0, t_dma_in=0, t_prog=640), 640),
    (TimingParams(t_read=50, t_dma_out=30, t_dma_in=30, t_prog=900), 1010),
])
def test_offchip_latency(t, expected):
    assert latency_offchip_copy(t) == expected


@pytest.mark.parametrize("t,expected", [
    (TimingParams(t_read=60, t_prog=640), 700),
    (TimingParams(t_read=0, t_prog=640), 640),
    (TimingParams(t_read=50, t_prog=900), 950),
])
def test_copyback_latency(t, expected):
    assert latency_copyback(t) == expected


@given(st.integers(0, 10**6), st.integers(0, 10**6),
       st.integers(0, 10**6), st.integers(0, 10**6), st.integers(0, 10**6))
def test_latency_identity(tr, tp, te, tdo, tdi):
    t = TimingParams(tr, tp, te, tdo, tdi)
    assert latency_copyback(t) + t.t_dma_out + t.t_dma_in == latency_offchip_copy(t)


G = Geometry(channels=2, chips_per_channel=2, planes_per_chip=2,
             blocks_per_plane=8, pages_per_block=4, page_size=16 * 1024)


def test_copyback_compatibility_examples():
    assert copyback_compatible(G, PhysAddr(0, 0, 0, 3, 1), PhysAddr(0, 0, 0, 7, 0))
    assert not copyback_compatible(G, PhysAddr(0, 0, 0, 0, 0), PhysAddr(0, 1, 0, 0, 0))
    assert not copyback_compatible(G, PhysAddr(0, 0, 0, 0, 0), PhysAddr(1, 0, 0, 0, 0))


def test_copyback_compatibility_rejects_bad_address():
    with pytest.raises(AddressError):
        copyback_compatible(G, PhysAddr(0, 0, 0, 3, 1), PhysAddr(0, 0, 0, 8, 0))


addr_strategy = st.builds(
    PhysAddr,
    channel=st.integers(0, G.channels - 1),
    chip=st.integers(0, G.chips_per_channel - 1),
    plane=st.integers(0, G.planes_per_chip - 1),
    block=st.integers(0, G.blocks_per_plane - 1),
    page=st.integers(0, G.pages_per_block - 1),
)


@given(addr_strategy, addr_strategy)
def test_copyback_compatible_reflexive_symmetric(a, b):
    assert copyback_compatible(G, a, a)
    assert copyback_compatible(G, a, b) == copyback_compatible(G, b, a)


def test_encode_decode_roundtrip_exhaustive():
    g = Geometry(channels=2, chips_per_channel=2, planes_per_chip=2,
                 blocks_per_plane=16, pages_per_block=16, page_size=4096)
    assert g.total_pages <= 4096
    seen = set()
    for ppn in range(g.total_pages):
        addr = decode_page(g, ppn)
        assert encode_page(g, addr) == ppn
        assert addr not in seen
        seen.add(addr)
    assert len(seen) == g.total_pages


def test_decode_out_of_range():
    with pytest.raises(AddressError):
        decode_page(G, G.total_pages)
