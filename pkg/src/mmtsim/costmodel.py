"""Hardware descriptions and the pluggable per-(model, unit) cost provider.

Costs are deterministic per (model, unit): the table either comes from an
external analytical tool via the cost-table file format, or from the
roofline-style synthetic generator below.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from typing import Iterable, Mapping

from .errors import ConfigError
from .workload import SCHEMA_VERSION, UnitModel

FDA = "FDA"
SFDA = "SFDA"
HDA = "HDA"

MACS_PER_PE_PER_CYCLE = 2


@dataclass(frozen=True)
class HardwareUnit:
    """One accelerator instance: a dataflow style and a PE array."""

    id: str
    dataflow: str
    pe_count: int
    clock_ghz: float = 1.0
    bandwidth_gbps: float = 256.0
    shared_mem_mib: float = 8.0
    power_watts: float = 1.0

    def __post_init__(self) -> None:
        if self.pe_count <= 0:
            raise ConfigError(f"unit {self.id!r}: pe_count must be > 0")
        if self.clock_ghz <= 0:
            raise ConfigError(f"unit {self.id!r}: clock_ghz must be > 0")


@dataclass(frozen=True)
class HardwareSystem:
    """A named accelerator system: one unit (FDA) or several (SFDA/HDA)."""

    id: str
    style: str
    units: tuple[HardwareUnit, ...]

    def __post_init__(self) -> None:
        if not self.units:
            raise ConfigError(f"system {self.id!r}: needs at least one unit")
        ids = [u.id for u in self.units]
        if len(set(ids)) != len(ids):
            raise ConfigError(f"system {self.id!r}: duplicate unit ids")
        if self.style == FDA and len(self.units) != 1:
            raise ConfigError(f"system {self.id!r}: FDA systems have exactly one unit")

    def unit(self, unit_id: str) -> HardwareUnit:
        for u in self.units:
            if u.id == unit_id:
                return u
        raise KeyError(unit_id)


@dataclass(frozen=True)
class CostEntry:
    """Latency (ms) and energy (mJ) of one model on one unit."""

    model: str
    unit: str
    latency_ms: float
    energy_mj: float

    def __post_init__(self) -> None:
        if self.latency_ms <= 0:
            raise ConfigError(f"cost ({self.model!r}, {self.unit!r}): latency must be > 0")
        if self.energy_mj < 0:
            raise ConfigError(f"cost ({self.model!r}, {self.unit!r}): energy must be >= 0")


class CostTable:
    """An exact (model, unit) -> CostEntry map plus the energy score bound.

    Every entry must respect the configured e_max so the energy score stays
    non-negative; e_max has no sensible universal default, so it is required
    configuration.
    """

    def __init__(self, entries: Iterable[CostEntry], e_max_mj: float):
        if e_max_mj <= 0:
            raise ConfigError("e_max_mj must be > 0")
        self.e_max_mj = float(e_max_mj)
        self._entries: dict[tuple[str, str], CostEntry] = {}
        for entry in entries:
            key = (entry.model, entry.unit)
            if key in self._entries:
                raise ConfigError(f"duplicate cost entry for {key}")
            if entry.energy_mj > self.e_max_mj:
                raise ConfigError(
                    f"cost ({entry.model!r}, {entry.unit!r}): energy {entry.energy_mj} mJ "
                    f"exceeds e_max {self.e_max_mj} mJ"
                )
            self._entries[key] = entry

    def lookup(self, model: str, unit: str) -> CostEntry:
        try:
            return self._entries[(model, unit)]
        except KeyError:
            raise ConfigError(f"no cost entry for model {model!r} on unit {unit!r}") from None

    def has(self, model: str, unit: str) -> bool:
        return (model, unit) in self._entries

    def entries(self) -> list[CostEntry]:
        return sorted(self._entries.values(), key=lambda e: (e.model, e.unit))


def lookup_cost(table: CostTable, model: str, unit: str) -> CostEntry:
    return table.lookup(model, unit)


def synthetic_cost(model: UnitModel, unit: HardwareUnit, efficiency: float = 1.0) -> CostEntry:
    """A MACs/cycle roofline estimate for one model on one unit.

    latency = flops / (PEs * 2 MACs * clock * efficiency);
    energy = latency * the unit's power draw.
    """
    if model.flops is None:
        raise ConfigError(f"model {model.id!r}: flops required for synthetic costs")
    if not 0.0 < efficiency <= 1.0:
        raise ConfigError("efficiency must be in (0, 1]")
    latency_ms = (
        model.flops / (unit.pe_count * MACS_PER_PE_PER_CYCLE * unit.clock_ghz * 1e9 * efficiency) * 1e3
    )
    return CostEntry(
        model=model.id,
        unit=unit.id,
        latency_ms=latency_ms,
        energy_mj=latency_ms * unit.power_watts,
    )


def synthetic_table(
    models: Mapping[str, UnitModel],
    system: HardwareSystem,
    e_max_mj: float | None = None,
    efficiency: float | Mapping[str, float] = 1.0,
) -> CostTable:
    """Build a full cost table for `models` x `system.units`.

    `efficiency` is a scalar, or a map keyed by dataflow ("WS") or by
    "dataflow:model" ("WS:HT") for dataflow-sensitive factors. When no
    e_max is given, twice the largest per-inference energy is used.
    """

    def eff_for(unit: HardwareUnit, model: UnitModel) -> float:
        if isinstance(efficiency, Mapping):
            return efficiency.get(
                f"{unit.dataflow}:{model.id}", efficiency.get(unit.dataflow, 1.0)
            )
        return efficiency

    entries = [
        synthetic_cost(model, unit, eff_for(unit, model))
        for model in models.values()
        for unit in system.units
    ]
    if e_max_mj is None:
        e_max_mj = 2.0 * max(e.energy_mj for e in entries)
    return CostTable(entries, e_max_mj=e_max_mj)


# --- Accelerator style presets --------------------------------------------
#
# Thirteen system styles: single fixed-dataflow accelerators, scaled-out
# homogeneous multi-accelerators, and heterogeneous dataflow systems, with
# the PE budget split per the listed partitioning ratios. Cost numbers are
# never implied by a preset; they come from a table or the synthetic
# generator.

ACCELERATOR_PRESETS: dict[str, tuple[str, tuple[tuple[str, int], ...]]] = {
    "A": (FDA, (("WS", 1),)),
    "B": (FDA, (("OS", 1),)),
    "C": (FDA, (("RS", 1),)),
    "D": (SFDA, (("WS", 1), ("WS", 1))),
    "E": (SFDA, (("OS", 1), ("OS", 1))),
    "F": (SFDA, (("RS", 1), ("RS", 1))),
    "G": (SFDA, (("WS", 1), ("WS", 1), ("WS", 1), ("WS", 1))),
    "H": (SFDA, (("OS", 1), ("OS", 1), ("OS", 1), ("OS", 1))),
    "I": (SFDA, (("RS", 1), ("RS", 1), ("RS", 1), ("RS", 1))),
    "J": (HDA, (("WS", 1), ("OS", 1))),
    "K": (HDA, (("WS", 3), ("OS", 1))),
    "L": (HDA, (("WS", 1), ("OS", 3))),
    "M": (HDA, (("WS", 1), ("OS", 1), ("WS", 1), ("OS", 1))),
}


def preset_system(
    preset: str,
    total_pes: int = 4096,
    clock_ghz: float = 1.0,
    bandwidth_gbps: float = 256.0,
    shared_mem_mib: float = 8.0,
    power_watts: float = 1.0,
) -> HardwareSystem:
    """Instantiate one of the preset accelerator styles A..M."""
    try:
        style, parts = ACCELERATOR_PRESETS[preset.upper()]
    except KeyError:
        raise ConfigError(f"unknown accelerator preset {preset!r} (expected A..M)") from None
    total_ratio = sum(ratio for _, ratio in parts)
    units = tuple(
        HardwareUnit(
            id=f"u{i}-{dataflow.lower()}",
            dataflow=dataflow,
            pe_count=total_pes * ratio // total_ratio,
            clock_ghz=clock_ghz,
            bandwidth_gbps=bandwidth_gbps,
            shared_mem_mib=shared_mem_mib,
            power_watts=power_watts,
        )
        for i, (dataflow, ratio) in enumerate(parts)
    )
    return HardwareSystem(id=f"{preset.upper()}-{total_pes // 1024}k", style=style, units=units)


# --- Files -----------------------------------------------------------------


def system_to_obj(system: HardwareSystem) -> dict:
    return {
        "schema_version": SCHEMA_VERSION,
        "id": system.id,
        "style": system.style,
        "units": [
            {
                "id": u.id,
                "dataflow": u.dataflow,
                "pe_count": u.pe_count,
                "clock_ghz": u.clock_ghz,
                "bandwidth_gbps": u.bandwidth_gbps,
                "shared_mem_mib": u.shared_mem_mib,
                "power_watts": u.power_watts,
            }
            for u in system.units
        ],
    }


def system_from_obj(obj: Mapping) -> HardwareSystem:
    try:
        return HardwareSystem(
            id=obj["id"],
            style=obj["style"],
            units=tuple(
                HardwareUnit(
                    id=u["id"],
                    dataflow=u["dataflow"],
                    pe_count=int(u["pe_count"]),
                    clock_ghz=float(u.get("clock_ghz", 1.0)),
                    bandwidth_gbps=float(u.get("bandwidth_gbps", 256.0)),
                    shared_mem_mib=float(u.get("shared_mem_mib", 8.0)),
                    power_watts=float(u.get("power_watts", 1.0)),
                )
                for u in obj["units"]
            ),
        )
    except (KeyError, TypeError, ValueError) as exc:
        raise ConfigError(f"malformed hardware file: {exc}") from exc


def load_hardware_file(path) -> HardwareSystem:
    with open(path, "r", encoding="utf-8") as fh:
        return system_from_obj(json.load(fh))


def dump_hardware_file(system: HardwareSystem, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(system_to_obj(system), fh, indent=2)
        fh.write("\n")


def table_to_obj(table: CostTable) -> dict:
    return {
        "schema_version": SCHEMA_VERSION,
        "e_max_mj": table.e_max_mj,
        "entries": [
            {"model": e.model, "unit": e.unit, "latency_ms": e.latency_ms, "energy_mj": e.energy_mj}
            for e in table.entries()
        ],
    }


def table_from_obj(obj: Mapping) -> CostTable:
    try:
        entries = [
            CostEntry(
                model=e["model"],
                unit=e["unit"],
                latency_ms=float(e["latency_ms"]),
                energy_mj=float(e["energy_mj"]),
            )
            for e in obj["entries"]
        ]
        return CostTable(entries, e_max_mj=float(obj["e_max_mj"]))
    except (KeyError, TypeError, ValueError) as exc:
        raise ConfigError(f"malformed cost table: {exc}") from exc


def load_cost_table_file(path) -> CostTable:
    with open(path, "r", encoding="utf-8") as fh:
        return table_from_obj(json.load(fh))


def dump_cost_table_file(table: CostTable, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(table_to_obj(table), fh, indent=2)
        fh.write("\n")
