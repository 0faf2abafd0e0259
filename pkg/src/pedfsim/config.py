"""Run configuration: JSON document -> validated models -> engine inputs."""

from __future__ import annotations

import json
import re
from pathlib import Path
from typing import Literal, Optional, Union

from pydantic import BaseModel, ConfigDict, Field, ValidationError, field_validator, model_validator

from . import scenarios
from .energy import EnergyError, EnergyParams
from .engine import ConfigError, ScriptedPacket, SimSettings, Workload
from .forwarding import Policy
from .topology import Topology, TopologyError

CONFIG_SCHEMA_VERSION = 1


class _Strict(BaseModel):
    model_config = ConfigDict(extra="forbid")


class TopologySource(_Strict):
    scenario: Optional[str] = None
    path: Optional[str] = None
    seed: int = 0  # for random-N
    inline: Optional[dict] = None

    @model_validator(mode="after")
    def _one_source(self):
        given = [x for x in (self.scenario, self.path, self.inline) if x is not None]
        if len(given) != 1:
            raise ValueError("give exactly one of scenario, path, inline")
        return self


class EnergyConfig(_Strict):
    tx_cost: float = Field(0.5, ge=0)
    rx_cost: float = Field(0.25, ge=0)
    report_cost: float = Field(0.1, ge=0)
    idle_drain: float = Field(0.0, ge=0)
    replenish_rate: float = Field(0.0, ge=0)
    hysteresis: float = Field(0.0, ge=0)
    capacity_j: float = Field(1.0, gt=0)


class PacketSpec(_Strict):
    time_ms: float = Field(ge=0)
    src: int
    dst: int
    priority: int = Field(ge=1, le=4)


class WorkloadConfig(_Strict):
    rate: float = Field(1.0, ge=0)
    priority_mix: list[float] = [0.25, 0.25, 0.25, 0.25]
    sources: Optional[list[int]] = None
    destinations: Optional[list[int]] = None
    arrival: Literal["poisson", "periodic"] = "poisson"
    rng_seed: int = 0
    packets: list[PacketSpec] = []

    @field_validator("priority_mix")
    @classmethod
    def _mix(cls, v):
        if len(v) != 4 or any(w < 0 for w in v):
            raise ValueError("priority_mix needs 4 non-negative weights")
        if abs(sum(v) - 1.0) > 1e-9:
            raise ValueError(f"priority_mix weights must sum to 1 (got {sum(v):g})")
        return v


class EngineConfig(_Strict):
    report_latency_ms: Union[float, Literal["link"]] = 0.0
    retry_budget: int = Field(3, ge=0)
    processing_ms: float = Field(0.0, ge=0)
    ttl_hops: Optional[int] = Field(None, ge=1)
    tick_ms: float = Field(100.0, gt=0)
    sample_ms: float = Field(1000.0, gt=0)
    sinks_powered: bool = True
    check_invariants: bool = True

    @field_validator("report_latency_ms")
    @classmethod
    def _lat(cls, v):
        if v != "link" and v < 0:
            raise ValueError("report_latency_ms must be >= 0 or 'link'")
        return v


def parse_seeds(spec) -> list[int]:
    """``7``, ``"7"``, ``"1..50"`` (inclusive), ``"1,4,9"`` or a list."""
    if isinstance(spec, bool):
        raise ValueError("seeds must be integers")
    if isinstance(spec, int):
        return [spec]
    if isinstance(spec, (list, tuple)):
        out = []
        for s in spec:
            out.extend(parse_seeds(s))
        return out
    text = str(spec).strip()
    m = re.fullmatch(r"(-?\d+)\.\.(-?\d+)", text)
    if m:
        lo, hi = int(m.group(1)), int(m.group(2))
        if hi < lo:
            raise ValueError(f"empty seed range {text}")
        return list(range(lo, hi + 1))
    try:
        return [int(x) for x in text.split(",") if x.strip()]
    except ValueError:
        raise ValueError(f"cannot parse seeds {text!r}") from None


class RunConfig(_Strict):
    schema_version: int = CONFIG_SCHEMA_VERSION
    topology: TopologySource = TopologySource(scenario="fig1")
    energy: EnergyConfig = EnergyConfig()
    initial_levels: dict[int, float] = {}
    workload: WorkloadConfig = WorkloadConfig()
    engine: EngineConfig = EngineConfig()
    policies: list[str] = ["pedf"]
    horizon_s: float = Field(60.0, gt=0)
    seeds: list[int] = [0]
    out: str = "runs"

    @field_validator("topology", mode="before")
    @classmethod
    def _topo_shorthand(cls, v):
        if isinstance(v, str):
            return {"path": v} if v.endswith(".json") else {"scenario": v}
        if isinstance(v, dict) and "nodes" in v:
            return {"inline": v}
        return v

    @field_validator("seeds", mode="before")
    @classmethod
    def _seeds(cls, v):
        seeds = parse_seeds(v)
        if not seeds:
            raise ValueError("seeds must be non-empty")
        return seeds

    @field_validator("policies", mode="before")
    @classmethod
    def _policies(cls, v):
        if isinstance(v, str):
            v = v.split(",")
        if not v:
            raise ValueError("policies must be non-empty")
        return [Policy.parse(p).value for p in v]

    @field_validator("initial_levels")
    @classmethod
    def _levels(cls, v):
        for n, lvl in v.items():
            if not 0 <= lvl <= 100:
                raise ValueError(f"initial level of node {n} is {lvl}, outside [0, 100]")
        return v

    # -- resolution to engine inputs ---------------------------------------

    def build_topology(self, base_dir: Path | None = None) -> Topology:
        src = self.topology
        if src.scenario is not None:
            return scenarios.build(src.scenario, seed=src.seed)
        if src.inline is not None:
            return Topology.from_dict(src.inline)
        path = Path(src.path)
        if not path.is_absolute() and base_dir is not None and not path.exists():
            path = base_dir / path
        if not path.exists():
            raise ConfigError(f"topology file not found: {path}")
        try:
            return Topology.load(path)
        except json.JSONDecodeError as exc:
            raise ConfigError(f"topology file {path} is not valid JSON: {exc}") from None

    def energy_params(self) -> EnergyParams:
        return EnergyParams(**self.energy.model_dump())

    def build_workload(self) -> Workload:
        w = self.workload
        return Workload(
            rate=w.rate,
            priority_mix=tuple(w.priority_mix),
            sources=tuple(w.sources) if w.sources else None,
            destinations=tuple(w.destinations) if w.destinations else None,
            arrival=w.arrival,
            rng_seed=w.rng_seed,
            packets=tuple(ScriptedPacket(p.time_ms, p.src, p.dst, p.priority) for p in w.packets),
        )

    def settings(self) -> SimSettings:
        return SimSettings(initial_levels=dict(self.initial_levels), **self.engine.model_dump())

    def resolve(self, base_dir: Path | None = None):
        """Build and cross-check every engine input. Raises ConfigError on any problem."""
        try:
            topo = self.build_topology(base_dir)
            params = self.energy_params()
            workload = self.build_workload()
            settings = self.settings()
        except (TopologyError, EnergyError) as exc:
            raise ConfigError(str(exc)) from None
        workload.validate(topo)
        settings.validate(topo)
        return topo, params, workload, settings

    def effective(self, topo: Topology | None = None, **overrides) -> dict:
        """Fully resolved config; with ``topo`` the topology is embedded inline."""
        doc = self.model_copy(update=overrides).model_dump(mode="json")
        if topo is not None:
            doc["topology"] = {"inline": topo.to_dict()}
        return doc


def load_config(path) -> RunConfig:
    path = Path(path)
    if not path.exists():
        raise ConfigError(f"config file not found: {path}")
    try:
        data = json.loads(path.read_text())
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}: invalid JSON ({exc})") from None
    return from_dict(data)


def from_dict(data: dict) -> RunConfig:
    try:
        return RunConfig.model_validate(data)
    except ValidationError as exc:
        raise ConfigError(format_validation_error(exc)) from None


def format_validation_error(exc: ValidationError) -> str:
    lines = []
    for err in exc.errors():
        loc = ".".join(str(x) for x in err["loc"])
        lines.append(f"{loc}: {err['msg']}")
    return "invalid config:\n  " + "\n  ".join(lines)
