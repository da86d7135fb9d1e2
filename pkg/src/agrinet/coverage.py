"""Agricultural area covered by each sector and band.

Every pixel of the UAA raster is matched to the guessed centers of the cells: the
point at half a band's radius along the sector azimuth. Among the centers within
half their radius of the pixel center, the highest band wins, then the nearest
center, then the smallest ``(site_id, sector_id)``.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Iterable, Mapping, Sequence

import numpy as np
from scipy.spatial import cKDTree

from .netmodel import BANDS, BandKind, BandParams, Site

SectorKey = tuple[str, str]

UNASSIGNED = -1
NODATA = -2

# Classification raster codes.
CODE_NODATA, CODE_UNCOVERED = 0, 1
CODE_BY_BAND = {BandKind.LOW: 2, BandKind.LOWER_MID: 3, BandKind.UPPER_MID: 4}


@dataclass(frozen=True)
class UaaRaster:
    """Gridded UAA in hectares; row 0 is the northern edge.

    ``origin`` is the lower-left corner in planar km.
    """

    origin: tuple[float, float]
    cell_size_m: float
    grid: np.ndarray
    nodata: float = -9999.0

    def __post_init__(self) -> None:
        grid = np.asarray(self.grid, dtype=float)
        if grid.ndim != 2:
            raise ValueError("grid must be 2-D")
        if self.cell_size_m <= 0:
            raise ValueError("cell size must be > 0")
        object.__setattr__(self, "grid", grid)
        vals = grid[self.valid]
        if vals.size and (vals.min() < 0 or vals.max() > self.max_pixel_ha * (1 + 1e-9)):
            raise ValueError(
                f"pixel values must be in [0, {self.max_pixel_ha:.4f}] ha, "
                f"got [{vals.min()}, {vals.max()}]"
            )

    @property
    def max_pixel_ha(self) -> float:
        return (self.cell_size_m / 100.0) ** 2

    @property
    def shape(self) -> tuple[int, int]:
        return self.grid.shape

    @property
    def valid(self) -> np.ndarray:
        return ~(np.isnan(self.grid) | (self.grid == self.nodata))

    def pixel_centers(self) -> tuple[np.ndarray, np.ndarray]:
        """Planar km coordinates of every pixel center, as two arrays shaped like ``grid``."""
        nrows, ncols = self.shape
        step = self.cell_size_m / 1000.0
        xs = self.origin[0] + (np.arange(ncols) + 0.5) * step
        ys = self.origin[1] + (nrows - np.arange(nrows) - 0.5) * step
        return np.meshgrid(xs, ys)

    def total_ha(self) -> float:
        return math.fsum(self.grid[self.valid].tolist())

    @classmethod
    def empty(cls, cell_size_m: float = 232.0) -> "UaaRaster":
        return cls((0.0, 0.0), cell_size_m, np.zeros((0, 0)))


@dataclass(frozen=True)
class GuessedCenter:
    site_id: str
    sector_id: str
    band: BandKind
    point: tuple[float, float]


@dataclass(frozen=True)
class SectorCoverage:
    A: tuple[float, float, float]

    def __getitem__(self, band: BandKind) -> float:
        return self.A[band]


@dataclass
class CoverageMap:
    """Per-pixel assignment: sector index into ``sectors`` and highest covering band."""

    sectors: list[SectorKey]
    sector_index: np.ndarray
    band_max: np.ndarray

    def classification(self) -> np.ndarray:
        codes = np.full(self.sector_index.shape, CODE_NODATA, dtype=np.int32)
        codes[self.sector_index == UNASSIGNED] = CODE_UNCOVERED
        for band, code in CODE_BY_BAND.items():
            codes[(self.sector_index >= 0) & (self.band_max == band)] = code
        return codes


def _offset(azimuth_deg: float, distance_km: float) -> tuple[float, float]:
    # Azimuth is clockwise from north: x east, y north.
    a = math.radians(azimuth_deg)
    return distance_km * math.sin(a), distance_km * math.cos(a)


def guessed_centers(site: Site, bands: Mapping[BandKind, BandParams]) -> list[GuessedCenter]:
    """One center per sector and band, whether or not the cell exists."""
    out = []
    for sector in site.sectors:
        for band in BANDS:
            dx, dy = _offset(sector.azimuth_deg, bands[band].gamma_km / 2.0)
            point = (site.position[0] + dx, site.position[1] + dy)
            out.append(GuessedCenter(site.site_id, sector.sector_id, band, point))
    return out


def all_centers(sites: Iterable[Site], bands: Mapping[BandKind, BandParams]) -> list[GuessedCenter]:
    return [c for site in sites for c in guessed_centers(site, bands)]


def _exact_dist(px, py, cx, cy):
    dx = px - cx
    dy = py - cy
    return np.sqrt(dx * dx + dy * dy)


class _BandIndex:
    """Nearest-center lookup for one band, with the total tie-break applied."""

    def __init__(self, coords: np.ndarray, sector_idx: np.ndarray, radius: float):
        self.coords = coords
        self.sector_idx = sector_idx
        self.radius = radius
        self.tree = cKDTree(coords) if len(coords) else None

    def query(self, pts: np.ndarray) -> np.ndarray:
        """Sector index of the winning center for each point, or UNASSIGNED."""
        out = np.full(len(pts), UNASSIGNED, dtype=np.int64)
        if self.tree is None or len(pts) == 0 or self.radius <= 0:
            return out
        r = self.radius
        slack = r * (1 + 1e-9) + 1e-12
        k = min(2, len(self.coords))
        _, idx = self.tree.query(pts, k=k, distance_upper_bound=slack)
        if k == 1:
            idx = idx[:, None]
        n = len(self.coords)
        first = idx[:, 0]
        hit = first < n
        if not hit.any():
            return out
        rows = np.nonzero(hit)[0]
        c0 = first[rows]
        d0 = _exact_dist(pts[rows, 0], pts[rows, 1], self.coords[c0, 0], self.coords[c0, 1])
        ambiguous = np.zeros(len(rows), dtype=bool)
        if k == 2:
            c1 = idx[rows, 1]
            has2 = c1 < n
            c1s = np.where(has2, c1, 0)
            d1 = _exact_dist(pts[rows, 0], pts[rows, 1], self.coords[c1s, 0], self.coords[c1s, 1])
            ambiguous = has2 & (np.abs(d1 - d0) <= 1e-9 * max(r, 1e-12))
        clear = ~ambiguous & (d0 <= r)
        out[rows[clear]] = self.sector_idx[c0[clear]]
        for j in np.nonzero(ambiguous)[0]:
            out[rows[j]] = self._resolve(pts[rows[j]])
        return out

    def _resolve(self, p: np.ndarray) -> int:
        cand = self.tree.query_ball_point(p, self.radius * (1 + 1e-9) + 1e-12)
        best = None
        for c in cand:
            d = float(_exact_dist(p[0], p[1], self.coords[c, 0], self.coords[c, 1]))
            if d > self.radius:
                continue
            key = (d, int(self.sector_idx[c]))
            if best is None or key < best:
                best = key
        return UNASSIGNED if best is None else best[1]


def _assign_chunk(pts: np.ndarray, indexes: Sequence[_BandIndex]) -> tuple[np.ndarray, np.ndarray]:
    sector = np.full(len(pts), UNASSIGNED, dtype=np.int64)
    band_max = np.full(len(pts), UNASSIGNED, dtype=np.int64)
    todo = np.arange(len(pts))
    for band in reversed(BANDS):
        if len(todo) == 0:
            break
        got = indexes[band].query(pts[todo])
        won = got != UNASSIGNED
        sector[todo[won]] = got[won]
        band_max[todo[won]] = int(band)
        todo = todo[~won]
    return sector, band_max


def assign_pixels(
    raster: UaaRaster,
    centers: Sequence[GuessedCenter],
    bands: Mapping[BandKind, BandParams],
    workers: int = 1,
) -> CoverageMap:
    sectors = sorted({(c.site_id, c.sector_id) for c in centers})
    pos = {key: i for i, key in enumerate(sectors)}
    indexes = []
    for band in BANDS:
        mine = [c for c in centers if c.band == band]
        coords = np.array([c.point for c in mine], dtype=float).reshape(-1, 2)
        sidx = np.array([pos[(c.site_id, c.sector_id)] for c in mine], dtype=np.int64)
        indexes.append(_BandIndex(coords, sidx, bands[band].gamma_km / 2.0))

    shape = raster.shape
    sector_index = np.full(shape, NODATA, dtype=np.int64)
    band_max = np.full(shape, UNASSIGNED, dtype=np.int64)
    valid = raster.valid
    if valid.any():
        xs, ys = raster.pixel_centers()
        pts = np.column_stack([xs[valid], ys[valid]])
        chunks = np.array_split(pts, max(1, workers))
        if workers > 1:
            with ThreadPoolExecutor(max_workers=workers) as pool:
                parts = list(pool.map(lambda c: _assign_chunk(c, indexes), chunks))
        else:
            parts = [_assign_chunk(c, indexes) for c in chunks]
        sector_index[valid] = np.concatenate([p[0] for p in parts])
        band_max[valid] = np.concatenate([p[1] for p in parts])
    return CoverageMap(sectors, sector_index, band_max)


def aggregate(
    cmap: CoverageMap, raster: UaaRaster
) -> tuple[dict[SectorKey, SectorCoverage], float]:
    """Covered hectares per sector and band, plus uncovered hectares.

    A pixel whose highest band is ``b`` counts toward every band up to ``b`` of its
    sector, so coverage is nested by construction.
    """
    n = len(cmap.sectors)
    valid = cmap.sector_index != NODATA
    values = raster.grid[valid]
    sidx = cmap.sector_index[valid]
    bmax = cmap.band_max[valid]
    assigned = sidx >= 0
    uncovered = math.fsum(values[~assigned].tolist())
    per_band = []
    for band in BANDS:
        sel = assigned & (bmax >= band)
        per_band.append(np.bincount(sidx[sel], weights=values[sel], minlength=n))
    result = {
        key: SectorCoverage(tuple(float(per_band[b][i]) for b in BANDS))
        for i, key in enumerate(cmap.sectors)
    }
    return result, uncovered


def compute_coverage(
    sites: Sequence[Site],
    raster: UaaRaster,
    bands: Mapping[BandKind, BandParams],
    workers: int = 1,
) -> tuple[CoverageMap, dict[SectorKey, SectorCoverage], float]:
    cmap = assign_pixels(raster, all_centers(sites, bands), bands, workers=workers)
    per_sector, uncovered = aggregate(cmap, raster)
    # Sectors with no centers in range still get an explicit zero entry.
    for site in sites:
        for sec in site.sectors:
            per_sector.setdefault((site.site_id, sec.sector_id), SectorCoverage((0.0, 0.0, 0.0)))
    return cmap, per_sector, uncovered
