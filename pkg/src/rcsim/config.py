"""Run configuration: dataclasses, variant names, and INI-file loading.

The configuration file is INI-style key=value text with sections [geometry],
[timing], [engine], [ftl], [gc], [workload] and [run]; every key has a
default, and unknown sections or keys are rejected loudly.
"""
from __future__ import annotations

import re
import warnings
from configparser import ConfigParser
from dataclasses import dataclass, field, fields

from rcsim.ftl import SELECTOR_BASELINE, SELECTOR_DMMS, SELECTOR_GREEDY, GcPolicy
from rcsim.geometry import ConfigError, Geometry, TimingParams

PAPER_SWEEP_RANGE = (2, 3, 4)


def parse_variant(name: str) -> tuple[int, str]:
    """Map a variant name to (m_cpb, selector).

    Accepted: baseline, rcftlN, rcftlN-greedy / rcftlN_greedy / rcftlN--.
    N outside the 2..4 sweep is allowed but flagged as an extension.
    """
    text = name.strip().lower()
    if text == "baseline":
        return 0, SELECTOR_BASELINE
    m = re.fullmatch(r"rcftl(\d+)(--|[-_]greedy)?", text)
    if m is None:
        raise ConfigError(
            f"unknown variant {name!r}; expected baseline, rcftlN or rcftlN-greedy")
    n = int(m.group(1))
    if not 1 <= n <= 7:
        raise ConfigError(f"variant {name!r}: copyback cap must lie in [1, 7]")
    if n not in PAPER_SWEEP_RANGE:
        warnings.warn(f"variant {name!r} extends beyond the rcftl2/3/4 sweep")
    return n, SELECTOR_GREEDY if m.group(2) else SELECTOR_DMMS


def canonical_variant(name: str) -> str:
    m_cpb, selector = parse_variant(name)
    if selector == SELECTOR_BASELINE:
        return "baseline"
    suffix = "-greedy" if selector == SELECTOR_GREEDY else ""
    return f"rcftl{m_cpb}{suffix}"


@dataclass
class WorkloadSpec:
    source: str = "synthetic"          # synthetic | trace | append_random
    trace: str = ""                    # CSV path when source=trace
    profile: str = "High"              # High | Mid | Low | custom
    mix: str = "ntrx"                  # oltp|ntrx|fileserver|varmail|none
    count: int = 10000
    working_set: int = 64 * 1024 * 1024
    request_bytes: int = 16 * 1024
    mean_idle_us: int = 1280
    burst_fraction: float = -1.0       # <0: take it from the named profile
    read_fraction: float = 0.0         # used when mix=none
    skew: float = 0.0
    overwrite_ratio: float = 0.5       # append_random only


@dataclass
class RunConfig:
    geometry: Geometry = field(default_factory=Geometry)
    timing: TimingParams = field(default_factory=TimingParams)
    dram_ports: int = 1
    variant: str = "rcftl4"
    retention_months: int = 12
    write_buffer_bytes: int = 10 * 1024 * 1024
    logical_fraction: float = 0.875
    u_threshold: float = 0.5
    gc: GcPolicy = field(default_factory=GcPolicy)
    workload: WorkloadSpec = field(default_factory=WorkloadSpec)
    seed: int = 1
    warmup_fraction: float = 0.25
    initial_pe: tuple = ()
    shadow_oracle: bool = False
    bijectivity_audit: bool = False
    log_events: bool = False
    hash_events: bool = True
    log_decisions: bool = False
    log_state_snapshots: bool = False
    stop_after_migrations: int = 0     # 0: replay the whole workload
    out_dir: str = ""


def _coerce(current, text: str, context: str):
    kind = type(current)
    try:
        if kind is bool:
            lowered = text.strip().lower()
            if lowered in ("1", "true", "yes", "on"):
                return True
            if lowered in ("0", "false", "no", "off"):
                return False
            raise ValueError(f"not a boolean: {text!r}")
        if kind is int:
            return int(text)
        if kind is float:
            return float(text)
        if kind is tuple:
            stripped = text.strip()
            return tuple(int(v) for v in stripped.split(",")) if stripped else ()
        return text
    except ValueError as exc:
        raise ConfigError(f"{context}: {exc}") from None


def _apply_section(obj, parser: ConfigParser, section: str) -> None:
    if not parser.has_section(section):
        return
    names = {f.name for f in fields(obj)}
    for key, value in parser.items(section):
        if key not in names:
            raise ConfigError(f"[{section}] has no option named {key!r}")
        setattr(obj, key, _coerce(getattr(obj, key), value, f"[{section}] {key}"))


def load_config(path) -> RunConfig:
    parser = ConfigParser(inline_comment_prefixes=("#", ";"))
    read = parser.read(path)
    if not read:
        raise ConfigError(f"cannot read config file {path}")
    known = {"geometry", "timing", "engine", "ftl", "gc", "workload", "run"}
    unknown = set(parser.sections()) - known
    if unknown:
        raise ConfigError(f"unknown config sections: {sorted(unknown)}")

    cfg = RunConfig()
    if parser.has_section("geometry"):
        valid = {f.name for f in fields(Geometry)}
        geo = {}
        for key, value in parser.items("geometry"):
            if key not in valid:
                raise ConfigError(f"[geometry] has no option named {key!r}")
            geo[key] = _coerce(0, value, f"[geometry] {key}")
        cfg.geometry = Geometry(**geo)
    if parser.has_section("timing"):
        valid = {f.name for f in fields(TimingParams)}
        tim = {}
        for key, value in parser.items("timing"):
            if key not in valid:
                raise ConfigError(f"[timing] has no option named {key!r}")
            tim[key] = _coerce(0, value, f"[timing] {key}")
        cfg.timing = TimingParams(**tim)

    if parser.has_section("engine"):
        for key, value in parser.items("engine"):
            if key == "dram_ports":
                cfg.dram_ports = _coerce(1, value, "[engine] dram_ports")
            elif key == "log_events":
                cfg.log_events = _coerce(True, value, "[engine] log_events")
            elif key == "hash_events":
                cfg.hash_events = _coerce(True, value, "[engine] hash_events")
            else:
                raise ConfigError(f"[engine] has no option named {key!r}")

    if parser.has_section("ftl"):
        allowed = {"variant", "write_buffer_bytes", "logical_fraction",
                   "retention_months", "u_threshold", "initial_pe"}
        for key, value in parser.items("ftl"):
            if key not in allowed:
                raise ConfigError(f"[ftl] has no option named {key!r}")
            setattr(cfg, key, _coerce(getattr(cfg, key), value, f"[ftl] {key}"))

    _apply_section(cfg.gc, parser, "gc")
    _apply_section(cfg.workload, parser, "workload")

    if parser.has_section("run"):
        allowed = {"seed", "warmup_fraction", "shadow_oracle", "bijectivity_audit",
                   "log_decisions", "log_state_snapshots", "stop_after_migrations",
                   "out_dir"}
        for key, value in parser.items("run"):
            if key not in allowed:
                raise ConfigError(f"[run] has no option named {key!r}")
            setattr(cfg, key, _coerce(getattr(cfg, key), value, f"[run] {key}"))

    parse_variant(cfg.variant)
    return cfg
