"""Per-node energy accounting in percent of capacity, and the priority-energy bands."""

from __future__ import annotations

import enum
from dataclasses import dataclass, replace

# Critical values at which a node tells its neighbours its power status.
CRITICAL_LEVELS = (75.0, 50.0, 25.0)
DEATH_LEVEL = 0.0
DOWNWARD_THRESHOLDS = CRITICAL_LEVELS + (DEATH_LEVEL,)
UPWARD_THRESHOLDS = tuple(sorted(CRITICAL_LEVELS))


class EnergyError(ValueError):
    pass


class EnergyBand(enum.IntEnum):
    """Residual-energy cases. Ordered: CASE_I < CASE_II < CASE_III < CASE_IV."""

    CASE_I = 1  # [0, 25]
    CASE_II = 2  # (25, 50]
    CASE_III = 3  # (50, 75]
    CASE_IV = 4  # (75, 100]

    @property
    def label(self) -> str:
        return "Case" + ("I", "II", "III", "IV")[self.value - 1]

    @classmethod
    def from_label(cls, text: str) -> "EnergyBand":
        for band in cls:
            if band.label == text or band.name == text:
                return band
        raise ValueError(f"unknown energy band {text!r}")


def classify_band(level: float) -> EnergyBand:
    if not 0.0 <= level <= 100.0:
        raise EnergyError(f"energy level {level} outside [0, 100]")
    if level > 75.0:
        return EnergyBand.CASE_IV
    if level > 50.0:
        return EnergyBand.CASE_III
    if level > 25.0:
        return EnergyBand.CASE_II
    return EnergyBand.CASE_I


def eligible_priorities(band: EnergyBand) -> frozenset[int]:
    """Packet priorities a node in ``band`` may forward (1 = urgent)."""
    return frozenset(range(1, int(band) + 1))


@dataclass(frozen=True)
class ThresholdCrossing:
    threshold: float
    direction: str  # "down" | "up"
    old_level: float
    new_level: float


@dataclass(frozen=True)
class EnergyParams:
    """Cost constants, all in percent of capacity.

    ``replenish_rate`` and ``idle_drain`` are per simulated second. An upward
    crossing of T is only registered once the level exceeds ``T + hysteresis``.
    """

    tx_cost: float = 0.5
    rx_cost: float = 0.25
    report_cost: float = 0.1
    idle_drain: float = 0.0
    replenish_rate: float = 0.0
    hysteresis: float = 0.0
    capacity_j: float = 1.0

    def __post_init__(self):
        for name in ("tx_cost", "rx_cost", "report_cost", "idle_drain", "replenish_rate", "hysteresis"):
            if getattr(self, name) < 0:
                raise EnergyError(f"{name} must be >= 0")
        if not self.capacity_j > 0:
            raise EnergyError("capacity_j must be > 0")


@dataclass(frozen=True)
class EnergyState:
    level: float = 100.0
    capacity: float = 1.0

    def __post_init__(self):
        if not 0.0 <= self.level <= 100.0:
            raise EnergyError(f"energy level {self.level} outside [0, 100]")

    @property
    def alive(self) -> bool:
        return self.level > 0.0

    @property
    def band(self) -> EnergyBand:
        return classify_band(self.level)


def consume(state: EnergyState, amount: float) -> tuple[EnergyState, list[ThresholdCrossing]]:
    """Debit ``amount`` percent. Returns the downward crossings of 75/50/25/0, highest first."""
    if amount < 0:
        raise EnergyError("cannot consume a negative amount")
    if not state.alive:
        raise EnergyError("consume on a dead node")
    old = state.level
    new = max(0.0, old - amount)
    crossings = [
        ThresholdCrossing(t, "down", old, new) for t in DOWNWARD_THRESHOLDS if old > t >= new
    ]
    return replace(state, level=new), crossings


def replenish(
    state: EnergyState, elapsed: float, params: EnergyParams
) -> tuple[EnergyState, list[ThresholdCrossing]]:
    """Add ``replenish_rate * elapsed`` percent (capped at 100); returns upward crossings, lowest first."""
    if elapsed < 0:
        raise EnergyError("elapsed time must be >= 0")
    old = state.level
    new = min(100.0, old + params.replenish_rate * elapsed)
    h = params.hysteresis
    crossings = [
        ThresholdCrossing(t, "up", old, new)
        for t in UPWARD_THRESHOLDS
        if old <= t + h < new
    ]
    return replace(state, level=new), crossings
