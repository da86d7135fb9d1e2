"""Incremental energy and carbon footprint of a robot deployment."""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass
from typing import Iterable, Mapping, Sequence

from .coverage import SectorCoverage, SectorKey
from .deploy import DeploymentResult, SectorDeployment, Strategy, upgraded_network
from .netmodel import (
    BANDS,
    EquipmentItem,
    PowerParams,
    Site,
    dynamic_energy,
    inventory_delta,
    network_energy,
    network_inventory,
    stock_footprint,
    upload_capacity,
)
from .robots import RobotModel, duty_cycle

WH_PER_GWH = 1e9
KG_PER_KT = 1e6


@dataclass(frozen=True)
class GridIntensity:
    gco2e_per_kwh: float = 58.0

    def __post_init__(self) -> None:
        if self.gco2e_per_kwh < 0:
            raise ValueError("grid intensity must be >= 0")

    def kt_for_gwh(self, gwh: float) -> float:
        # GWh -> kWh (1e6), g -> kt (1e-9)
        return gwh * self.gco2e_per_kwh * 1e-3


@dataclass(frozen=True)
class IntensityFactors:
    wh_per_gb: float = 224.0
    gco2e_per_gb: float = 25.0

    def __post_init__(self) -> None:
        if self.wh_per_gb < 0 or self.gco2e_per_gb < 0:
            raise ValueError("intensity factors must be >= 0")


def sig3(x: float) -> float:
    """Round to 3 significant digits."""
    if x == 0 or not math.isfinite(x):
        return x
    return round(x, 2 - int(math.floor(math.log10(abs(x)))))


@dataclass(frozen=True)
class ImpactReport:
    strategy: str
    robot: str
    manageable_pct: float
    deployed_pct: float
    dynamic_gwh: float
    static_gwh: float
    embodied_kt: float
    renewal_kt: float
    energy_cf_kt: float
    extrapolated_gwh: float
    extrapolated_kt: float
    traffic_gb: float

    @property
    def total_ec_gwh(self) -> float:
        return self.dynamic_gwh + self.static_gwh

    @property
    def total_cf_kt(self) -> float:
        return self.embodied_kt + self.energy_cf_kt

    @property
    def dynamic_part_pct(self) -> float:
        return 100.0 * self.dynamic_gwh / self.total_ec_gwh if self.total_ec_gwh else 0.0

    @property
    def renewal_part_pct(self) -> float:
        return 100.0 * self.renewal_kt / self.embodied_kt if self.embodied_kt else 0.0

    @property
    def manuf_part_pct(self) -> float:
        return 100.0 * self.embodied_kt / self.total_cf_kt if self.total_cf_kt else 0.0

    def to_row(self) -> dict[str, object]:
        """Table-style row; numbers rounded to 3 significant digits."""
        row: dict[str, object] = {"robot": self.robot, "strategy": self.strategy}
        values = {
            "manageable_pct": self.manageable_pct,
            "deployed_pct": self.deployed_pct,
            "total_ec_gwh": self.total_ec_gwh,
            "dynamic_part_pct": self.dynamic_part_pct,
            "dynamic_gwh": self.dynamic_gwh,
            "static_gwh": self.static_gwh,
            "manuf_cf_kt": self.embodied_kt,
            "renewal_part_pct": self.renewal_part_pct,
            "energy_cf_kt": self.energy_cf_kt,
            "total_cf_kt": self.total_cf_kt,
            "manuf_part_pct": self.manuf_part_pct,
            "extrapolated_gwh": self.extrapolated_gwh,
            "extrapolated_kt": self.extrapolated_kt,
        }
        row.update({k: sig3(v) for k, v in values.items()})
        return row

    def raw(self) -> dict[str, object]:
        return asdict(self)


def cell_traffic(dep: SectorDeployment, robot: RobotModel) -> tuple[float, float, float]:
    """Year-averaged traffic (Mbps) per band, from the peak traffic the robots draw."""
    k = duty_cycle(robot)
    return tuple(peak * k for peak in dep.peak_mbps)


def traffic_map(result: DeploymentResult) -> dict[SectorKey, tuple[float, float, float]]:
    return {
        key: cell_traffic(dep, result.robot)
        for key, dep in result.deployments.items()
        if dep.d_s > 0
    }


def annual_traffic_gb(deployments: Iterable[SectorDeployment], robot: RobotModel) -> float:
    robots = sum(d.d_s for d in deployments)
    # Mbps x active hours -> GB
    return robots * robot.lambda_r * robot.n_passes * robot.n_hours * 3600 * 1e6 / 8 / 1e9


def intensity_extrapolation(traffic_gb: float, factors: IntensityFactors) -> tuple[float, float]:
    """(GWh/year, ktCO2e/year) from traffic volume times fixed per-GB factors."""
    return traffic_gb * factors.wh_per_gb / WH_PER_GWH, traffic_gb * factors.gco2e_per_gb * 1e-9


def _check_pairing(sites: Sequence[Site], result: DeploymentResult) -> None:
    net = {(s.site_id, sec.sector_id): sec.bandwidths for s in sites for sec in s.sectors}
    for key, dep in result.deployments.items():
        if key not in net:
            raise ValueError(f"deployment for unknown sector {key}")
        if tuple(net[key]) != tuple(dep.w_in):
            raise ValueError(f"deployment for {key} was computed on a different network")


def _touched(sites: Sequence[Site], keys: set[str]) -> list[Site]:
    return [s for s in sites if s.site_id in keys]


def incremental_assessment(
    existing: Sequence[Site],
    result: DeploymentResult,
    power: PowerParams,
    catalog: Mapping[str, EquipmentItem],
    grid: GridIntensity = GridIntensity(),
    factors: IntensityFactors = IntensityFactors(),
) -> ImpactReport:
    """Impacts added by the robots, relative to the existing network.

    Existing strategy: only the robots' dynamic energy. Upgraded strategy: also the
    static power of the upgraded/added cells and the embodied footprint of the
    renewed or added equipment.
    """
    _check_pairing(existing, result)
    traffic = traffic_map(result)
    static_wh = 0.0
    embodied_kg = 0.0
    renewal_kg = 0.0
    if result.strategy is Strategy.UPGRADED:
        after = upgraded_network(existing, result)
        changed = {
            a.site_id for a, b in zip(existing, after)
            if any(x.bandwidths != y.bandwidths for x, y in zip(a.sectors, b.sectors))
        }
        static_wh = network_energy(_touched(after, changed), power) - network_energy(
            _touched(existing, changed), power
        )
        items = inventory_delta(existing, after, catalog)
        embodied_kg = stock_footprint(items)
        renewal_kg = stock_footprint(i for i in items if i.renewal)
        dyn_net = _touched(after, {k[0] for k in traffic})
    else:
        dyn_net = _touched(existing, {k[0] for k in traffic})
    dynamic_wh = dynamic_energy(dyn_net, power, traffic)

    dynamic_gwh = dynamic_wh / WH_PER_GWH
    static_gwh = static_wh / WH_PER_GWH
    gb = annual_traffic_gb(result.deployments.values(), result.robot)
    ext_gwh, ext_kt = intensity_extrapolation(gb, factors)
    return ImpactReport(
        strategy=result.strategy.value,
        robot=result.robot.name,
        manageable_pct=result.manageable_pct,
        deployed_pct=result.deployed_pct,
        dynamic_gwh=dynamic_gwh,
        static_gwh=static_gwh,
        embodied_kt=embodied_kg / KG_PER_KT,
        renewal_kt=renewal_kg / KG_PER_KT,
        energy_cf_kt=grid.kt_for_gwh(dynamic_gwh + static_gwh),
        extrapolated_gwh=ext_gwh,
        extrapolated_kt=ext_kt,
        traffic_gb=gb,
    )


def baseline_energy(sites: Sequence[Site], power: PowerParams, uniform_load: float = 0.2) -> float:
    """Yearly energy (GWh) with every existing cell loaded at ``uniform_load`` of its capacity."""
    if not 0 <= uniform_load <= 1:
        raise ValueError(f"load must be in [0, 1], got {uniform_load}")
    traffic = {
        (s.site_id, sec.sector_id): tuple(
            uniform_load * upload_capacity(power[b], sec.bandwidths[b]) for b in BANDS
        )
        for s in sites
        for sec in s.sectors
    }
    return network_energy(sites, power, traffic) / WH_PER_GWH


def baseline_dynamic(sites: Sequence[Site], power: PowerParams, uniform_load: float = 0.2) -> float:
    return baseline_energy(sites, power, uniform_load) - baseline_energy(sites, power, 0.0)


def covering_network(
    sites: Sequence[Site], coverage: Mapping[SectorKey, SectorCoverage]
) -> list[Site]:
    """Sub-network of existing cells that cover some UAA."""
    out = []
    for site in sites:
        sectors = []
        for sec in site.sectors:
            cov = coverage.get((site.site_id, sec.sector_id))
            if cov is None:
                continue
            w = tuple(sec.bandwidths[b] if cov.A[b] > 0 else 0.0 for b in BANDS)
            if any(w):
                sectors.append(sec.with_bandwidths(w))
        if sectors:
            out.append(Site(site.site_id, site.position, tuple(sectors)))
    return out


@dataclass(frozen=True)
class BaselineRow:
    network: str
    cells: tuple[int, int, int]
    total_ec_gwh: float
    dynamic_gwh: float
    embodied_kt: float
    energy_cf_kt: float

    @property
    def total_cf_kt(self) -> float:
        return self.embodied_kt + self.energy_cf_kt

    def to_row(self) -> dict[str, object]:
        return {
            "network": self.network,
            "cells_low": self.cells[0],
            "cells_lower_mid": self.cells[1],
            "cells_upper_mid": self.cells[2],
            "total_ec_gwh": sig3(self.total_ec_gwh),
            "dynamic_part_pct": sig3(100 * self.dynamic_gwh / self.total_ec_gwh) if self.total_ec_gwh else 0.0,
            "manuf_cf_kt": sig3(self.embodied_kt),
            "total_cf_kt": sig3(self.total_cf_kt),
            "manuf_part_pct": sig3(100 * self.embodied_kt / self.total_cf_kt) if self.total_cf_kt else 0.0,
        }


def count_cells(sites: Sequence[Site]) -> tuple[int, int, int]:
    counts = [0, 0, 0]
    for s in sites:
        for sec in s.sectors:
            for b in BANDS:
                counts[b] += sec.bandwidths[b] > 0
    return tuple(counts)


def baseline_row(
    name: str,
    sites: Sequence[Site],
    power: PowerParams,
    catalog: Mapping[str, EquipmentItem],
    grid: GridIntensity = GridIntensity(),
    load: float = 0.2,
) -> BaselineRow:
    total = baseline_energy(sites, power, load)
    dyn = total - baseline_energy(sites, power, 0.0)
    return BaselineRow(
        network=name,
        cells=count_cells(sites),
        total_ec_gwh=total,
        dynamic_gwh=dyn,
        embodied_kt=stock_footprint(network_inventory(sites, catalog)) / KG_PER_KT,
        energy_cf_kt=grid.kt_for_gwh(total),
    )
