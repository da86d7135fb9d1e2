"""Network topology, capacity model, power/energy model and equipment inventory."""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from enum import IntEnum
from typing import Iterable, Mapping, Sequence

HOURS_PER_YEAR = 8760.0


class BandKind(IntEnum):
    """Aggregated frequency band; integer order is ascending frequency."""

    LOW = 0
    LOWER_MID = 1
    UPPER_MID = 2

    @property
    def label(self) -> str:
        return _BAND_LABELS[self]

    @classmethod
    def parse(cls, text: str) -> "BandKind":
        key = text.strip().lower().replace("-", "_").replace(" ", "_")
        try:
            return _BAND_ALIASES[key]
        except KeyError:
            raise ValueError(f"unknown band {text!r}") from None


BANDS: tuple[BandKind, ...] = (BandKind.LOW, BandKind.LOWER_MID, BandKind.UPPER_MID)

_BAND_LABELS = {BandKind.LOW: "low", BandKind.LOWER_MID: "lower_mid", BandKind.UPPER_MID: "upper_mid"}
_BAND_ALIASES = {
    "low": BandKind.LOW, "l": BandKind.LOW,
    "lower_mid": BandKind.LOWER_MID, "lm": BandKind.LOWER_MID,
    "upper_mid": BandKind.UPPER_MID, "um": BandKind.UPPER_MID,
}

# Radio constants per aggregated band (radius km, Mbps/MHz, upload ratio, MHz).
DEFAULT_RADIO: dict[BandKind, dict[str, float]] = {
    BandKind.LOW: {"gamma_km": 4.5, "eta_down": 1.45, "rho": 0.25, "w_max": 20.0},
    BandKind.LOWER_MID: {"gamma_km": 2.25, "eta_down": 2.7, "rho": 0.25, "w_max": 54.8},
    BandKind.UPPER_MID: {"gamma_km": 1.5, "eta_down": 5.8, "rho": 0.1, "w_max": 90.0},
}


@dataclass(frozen=True, kw_only=True)
class BandParams:
    gamma_km: float
    eta_down: float
    rho: float
    w_max: float
    p_static_w: float
    p_dyn_w_per_mhz: float
    p_band_w: float

    def __post_init__(self) -> None:
        for name in ("gamma_km", "eta_down", "w_max", "p_static_w", "p_dyn_w_per_mhz", "p_band_w"):
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be > 0, got {getattr(self, name)}")
        if not 0 < self.rho <= 1:
            raise ValueError(f"rho must be in (0, 1], got {self.rho}")

    @property
    def eta_up(self) -> float:
        """Upload spectral efficiency in Mbps/MHz."""
        return self.eta_down * self.rho


@dataclass(frozen=True)
class Cell:
    band: BandKind
    bandwidth_mhz: float


@dataclass(frozen=True)
class Sector:
    sector_id: str
    azimuth_deg: float
    bandwidths: tuple[float, float, float]

    def __post_init__(self) -> None:
        if not 0 <= self.azimuth_deg < 360:
            raise ValueError(f"azimuth must be in [0, 360), got {self.azimuth_deg}")
        if len(self.bandwidths) != 3 or any(w < 0 for w in self.bandwidths):
            raise ValueError(f"bad bandwidths {self.bandwidths!r}")
        object.__setattr__(self, "bandwidths", tuple(float(w) for w in self.bandwidths))

    @property
    def cells(self) -> dict[BandKind, float]:
        return {b: self.bandwidths[b] for b in BANDS}

    def present_cells(self) -> list[Cell]:
        return [Cell(b, self.bandwidths[b]) for b in BANDS if self.bandwidths[b] > 0]

    def with_bandwidths(self, bandwidths: Sequence[float]) -> "Sector":
        return replace(self, bandwidths=tuple(bandwidths))


@dataclass(frozen=True)
class Site:
    site_id: str
    position: tuple[float, float]
    sectors: tuple[Sector, ...]

    def __post_init__(self) -> None:
        if not 1 <= len(self.sectors) <= 3:
            raise ValueError(f"site {self.site_id}: expected 1-3 sectors, got {len(self.sectors)}")
        ids = [s.sector_id for s in self.sectors]
        if len(set(ids)) != len(ids):
            raise ValueError(f"site {self.site_id}: duplicate sector ids")

    def bands_present(self) -> list[BandKind]:
        return [b for b in BANDS if any(s.bandwidths[b] > 0 for s in self.sectors)]


@dataclass(frozen=True)
class PowerParams:
    p_site_w: float
    sigma: float
    bands: Mapping[BandKind, BandParams]

    def __post_init__(self) -> None:
        if not 0 <= self.sigma < 1:
            raise ValueError(f"sigma must be in [0, 1), got {self.sigma}")
        if self.p_site_w < 0:
            raise ValueError("p_site_w must be >= 0")
        missing = [b for b in BANDS if b not in self.bands]
        if missing:
            raise ValueError(f"missing band parameters for {missing}")

    def __getitem__(self, band: BandKind) -> BandParams:
        return self.bands[band]

    def scaled(self, eta_scale: float = 1.0, gamma_scale: float = 1.0) -> "PowerParams":
        """Copy with spectral efficiencies and radii multiplied by the given factors."""
        bands = {
            b: replace(p, eta_down=p.eta_down * eta_scale, gamma_km=p.gamma_km * gamma_scale)
            for b, p in self.bands.items()
        }
        return replace(self, bands=bands)


@dataclass(frozen=True)
class EquipmentItem:
    kind: str
    embodied_kgco2e: float
    lifetime_years: float
    renewal: bool = field(default=False, compare=False)

    def __post_init__(self) -> None:
        if self.kind not in ("RRU", "AAU", "BBU"):
            raise ValueError(f"unknown equipment kind {self.kind!r}")
        if self.embodied_kgco2e < 0:
            raise ValueError("embodied_kgco2e must be >= 0")


def upload_capacity(params: BandParams, bandwidth_mhz: float) -> float:
    """Upload bitrate capacity (Mbps) of a cell with the given bandwidth."""
    if bandwidth_mhz < 0:
        raise ValueError(f"negative bandwidth {bandwidth_mhz}")
    return params.eta_up * bandwidth_mhz


def cell_power(params: BandParams, traffic_mbps: float) -> float:
    """Average power draw (W) of a cell carrying ``traffic_mbps`` of upload traffic."""
    if traffic_mbps < 0:
        raise ValueError(f"negative traffic {traffic_mbps}")
    return params.p_static_w + params.p_dyn_w_per_mhz * traffic_mbps / params.eta_up


Traffic = Mapping[tuple[str, str], Sequence[float]]


def _site_power(site: Site, power: PowerParams, traffic: Traffic) -> float:
    total = power.p_site_w
    present = site.bands_present()
    for band in BANDS:
        bp = power[band]
        if band in present:
            total += bp.p_band_w
        for sector in site.sectors:
            nu = traffic.get((site.site_id, sector.sector_id), (0.0, 0.0, 0.0))[band]
            if sector.bandwidths[band] > 0:
                total += cell_power(bp, nu)
            elif nu:
                raise ValueError(
                    f"traffic on absent cell {site.site_id}/{sector.sector_id}/{band.label}"
                )
    return total


def network_energy(
    sites: Iterable[Site], power: PowerParams, traffic: Traffic | None = None
) -> float:
    """Yearly energy (Wh) of the given sites, with optional per-cell traffic (Mbps).

    ``traffic`` maps ``(site_id, sector_id)`` to per-band average traffic; cells not
    listed carry none. The per-band constant is charged once per band present on a
    site. Summation is exactly rounded, so the result does not depend on site order.
    """
    if not 0 <= power.sigma < 1:
        raise ValueError(f"sigma must be in [0, 1), got {power.sigma}")
    traffic = traffic or {}
    per_site = [_site_power(site, power, traffic) for site in sites]
    return HOURS_PER_YEAR / (1.0 - power.sigma) * math.fsum(per_site)


def dynamic_energy(sites: Iterable[Site], power: PowerParams, traffic: Traffic) -> float:
    """Traffic-dependent share of :func:`network_energy` (Wh/year)."""
    terms = []
    for site in sites:
        for sector in site.sectors:
            nu = traffic.get((site.site_id, sector.sector_id))
            if nu is None:
                continue
            for band in BANDS:
                if nu[band]:
                    if sector.bandwidths[band] <= 0:
                        raise ValueError(
                            f"traffic on absent cell {site.site_id}/{sector.sector_id}/{band.label}"
                        )
                    bp = power[band]
                    terms.append(bp.p_dyn_w_per_mhz * nu[band] / bp.eta_up)
    return HOURS_PER_YEAR / (1.0 - power.sigma) * math.fsum(terms)


def equipment_for_band(band: BandKind) -> str:
    return "AAU" if band is BandKind.UPPER_MID else "RRU"


def inventory_delta(
    before: Sequence[Site], after: Sequence[Site], catalog: Mapping[str, EquipmentItem]
) -> list[EquipmentItem]:
    """Equipment needed to turn ``before`` into ``after``.

    A bandwidth increase on an existing cell renews its radio unit; a new cell needs a
    radio unit and a baseband unit. Shared site equipment is not counted.
    """
    old = {(site.site_id, sec.sector_id): sec for site in before for sec in site.sectors}
    items: list[EquipmentItem] = []
    for site in after:
        for sec in site.sectors:
            key = (site.site_id, sec.sector_id)
            if key not in old:
                raise ValueError(f"sector {key} missing from the original network")
            prev = old[key]
            for band in BANDS:
                w0, w1 = prev.bandwidths[band], sec.bandwidths[band]
                if w1 < w0:
                    raise ValueError(f"bandwidth decrease on {key}/{band.label}: {w0} -> {w1}")
                if w1 == w0:
                    continue
                radio = catalog[equipment_for_band(band)]
                if w0 > 0:
                    items.append(replace(radio, renewal=True))
                else:
                    items.append(replace(radio, renewal=False))
                    items.append(replace(catalog["BBU"], renewal=False))
    return items


def network_inventory(
    sites: Iterable[Site], catalog: Mapping[str, EquipmentItem]
) -> list[EquipmentItem]:
    """Per-cell equipment of a whole network, counted the same way as a cell addition."""
    items = []
    for site in sites:
        for sec in site.sectors:
            for cell in sec.present_cells():
                items.append(catalog[equipment_for_band(cell.band)])
                items.append(catalog["BBU"])
    return items


def stock_footprint(items: Iterable[EquipmentItem]) -> float:
    """Yearly embodied footprint (kgCO2e/year): each item's footprint over its lifetime."""
    terms = []
    for item in items:
        if item.lifetime_years <= 0:
            raise ValueError(f"non-positive lifetime for {item.kind}")
        terms.append(item.embodied_kgco2e / item.lifetime_years)
    return math.fsum(terms)
