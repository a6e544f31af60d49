import pytest

from rcsim.engine import Engine
from rcsim.ftl import Ftl, FtlConfig, GcPolicy
from rcsim.geometry import Geometry, TimingParams

DEFAULT_TIMING = TimingParams()  # 60 / 640 / 3500 / 40 / 40


def make_engine(g: Geometry, t: TimingParams = DEFAULT_TIMING, *, dram_ports=1,
                log=True, digest=True) -> Engine:
    return Engine(g.channels, g.chips_per_channel, g.planes_per_chip,
                  g.blocks_per_plane, g.pages_per_block,
                  t.t_read, t.t_prog, t.t_erase, t.t_dma_out, t.t_dma_in,
                  dram_ports=dram_ports, log_phases=log, hash_phases=digest)


def make_ftl(*, channels=1, chips=1, planes=1, blocks=32, pages=8,
             page_size=16 * 1024, m_cpb=2, selector="greedy",
             buffer_bytes=None, logical_fraction=0.7, timing=DEFAULT_TIMING,
             dram_ports=1, log=True, **cfg_kw):
    g = Geometry(channels=channels, chips_per_channel=chips,
                 planes_per_chip=planes, blocks_per_plane=blocks,
                 pages_per_block=pages, page_size=page_size)
    engine = make_engine(g, timing, dram_ports=dram_ports, log=log)
    if buffer_bytes is None:
        buffer_bytes = 8 * page_size
    cfg = FtlConfig(m_cpb=m_cpb, selector=selector,
                    write_buffer_bytes=buffer_bytes,
                    logical_fraction=logical_fraction,
                    gc=cfg_kw.pop("gc", GcPolicy()),
                    **cfg_kw)
    ftl = Ftl(g, timing, engine, cfg)
    return ftl


@pytest.fixture
def small_ftl():
    return make_ftl()
