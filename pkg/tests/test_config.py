import pytest

from rcsim.config import RunConfig, canonical_variant, load_config, parse_variant
from rcsim.ftl import SELECTOR_BASELINE, SELECTOR_DMMS, SELECTOR_GREEDY
from rcsim.geometry import ConfigError


def test_parse_variant_names():
    assert parse_variant("baseline") == (0, SELECTOR_BASELINE)
    assert parse_variant("rcftl2") == (2, SELECTOR_DMMS)
    assert parse_variant("rcftl4-greedy") == (4, SELECTOR_GREEDY)
    assert parse_variant("rcftl3--") == (3, SELECTOR_GREEDY)
    assert parse_variant("RCFTL3") == (3, SELECTOR_DMMS)


def test_parse_variant_extension_warns():
    with pytest.warns(UserWarning, match="sweep"):
        assert parse_variant("rcftl5") == (5, SELECTOR_DMMS)


def test_parse_variant_rejects_garbage():
    with pytest.raises(ConfigError):
        parse_variant("rcftl")
    with pytest.raises(ConfigError):
        parse_variant("turbo")
    with pytest.raises(ConfigError):
        parse_variant("rcftl9")


def test_canonical_variant():
    assert canonical_variant("RCFTL2_greedy") == "rcftl2-greedy"
    assert canonical_variant("baseline") == "baseline"


def test_load_config_defaults_and_overrides(tmp_path):
    text = """
[geometry]
channels = 2
chips_per_channel = 4
blocks_per_plane = 64
pages_per_block = 16

[timing]
t_prog = 700

[engine]
dram_ports = 2

[ftl]
variant = rcftl3
logical_fraction = 0.8
initial_pe = 500, 1500

[gc]
fg_watermark = 5

[workload]
source = synthetic
profile = Low
mix = oltp
count = 123

[run]
seed = 9
shadow_oracle = true
"""
    path = tmp_path / "cfg.ini"
    path.write_text(text)
    cfg = load_config(path)
    assert cfg.geometry.channels == 2
    assert cfg.geometry.pages_per_block == 16
    assert cfg.geometry.page_size == 16 * 1024  # default preserved
    assert cfg.timing.t_prog == 700
    assert cfg.timing.t_read == 60
    assert cfg.dram_ports == 2
    assert cfg.variant == "rcftl3"
    assert cfg.logical_fraction == 0.8
    assert cfg.initial_pe == (500, 1500)
    assert cfg.gc.fg_watermark == 5
    assert cfg.workload.profile == "Low"
    assert cfg.workload.count == 123
    assert cfg.seed == 9
    assert cfg.shadow_oracle is True


def test_load_config_rejects_unknown_key(tmp_path):
    path = tmp_path / "bad.ini"
    path.write_text("[geometry]\nchannls = 2\n")
    with pytest.raises(ConfigError, match="channls"):
        load_config(path)


def test_load_config_rejects_unknown_section(tmp_path):
    path = tmp_path / "bad.ini"
    path.write_text("[nonsense]\nx = 1\n")
    with pytest.raises(ConfigError, match="nonsense"):
        load_config(path)


def test_load_config_missing_file():
    with pytest.raises(ConfigError):
        load_config("/does/not/exist.ini")


def test_default_config_is_valid():
    cfg = RunConfig()
    assert cfg.geometry.capacity_bytes == 64 * 1024 ** 3
    assert cfg.write_buffer_bytes == 10 * 1024 * 1024
    assert parse_variant(cfg.variant)
