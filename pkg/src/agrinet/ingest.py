"""Input parsing and validation: power/scenario configs, sites CSV, UAA rasters."""

from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass, field, replace
from importlib import resources
from pathlib import Path
from typing import Any, Iterable, Mapping, Sequence

import jsonschema
import numpy as np
import yaml

from .coverage import UaaRaster
from .deploy import Strategy
from .impact import GridIntensity, IntensityFactors
from .netmodel import (
    BANDS,
    DEFAULT_RADIO,
    BandKind,
    BandParams,
    EquipmentItem,
    PowerParams,
    Sector,
    Site,
)
from .robots import RobotModel, preset

EARTH_RADIUS_KM = 6371.0088


class ValidationError(ValueError):
    """Bad user input: config, sites table or raster."""


def _schema(name: str) -> dict:
    return json.loads(resources.files("agrinet.data").joinpath(name).read_text())


def _validate(doc: Any, schema_name: str, source: str) -> None:
    try:
        jsonschema.validate(doc, _schema(schema_name))
    except jsonschema.ValidationError as exc:
        where = "/".join(str(p) for p in exc.absolute_path) or "<root>"
        raise ValidationError(f"{source}: {where}: {exc.message}") from None


def _read_yaml(path: Path) -> Any:
    try:
        return yaml.safe_load(Path(path).read_text())
    except (OSError, yaml.YAMLError) as exc:
        raise ValidationError(f"cannot read {path}: {exc}") from None


# -- power parameters ---------------------------------------------------------


def parse_power_params(doc: Mapping[str, Any], source: str = "<power>") -> tuple[PowerParams, dict[str, EquipmentItem]]:
    _validate(doc, "power_params.schema.json", source)
    bands = {}
    for band in BANDS:
        values = {**DEFAULT_RADIO[band], **doc["bands"][band.label]}
        bands[band] = BandParams(**values)
    power = PowerParams(p_site_w=float(doc["p_site_w"]), sigma=float(doc["sigma"]), bands=bands)
    catalog = {kind: EquipmentItem(kind, **vals) for kind, vals in doc["equipment"].items()}
    return power, catalog


def load_power_params(path: str | Path | None = None) -> tuple[PowerParams, dict[str, EquipmentItem]]:
    """Power model and equipment catalog; the packaged placeholder file when no path."""
    if path is None:
        text = resources.files("agrinet.data").joinpath("default_power.yaml").read_text()
        return parse_power_params(yaml.safe_load(text), "default_power.yaml")
    return parse_power_params(_read_yaml(Path(path)), str(path))


def default_power_text() -> str:
    return resources.files("agrinet.data").joinpath("default_power.yaml").read_text()


# -- sites --------------------------------------------------------------------


@dataclass(frozen=True)
class Projection:
    """Equirectangular projection about ``(lon0, lat0)``, planar km."""

    lon0: float
    lat0: float

    def forward(self, lon: float, lat: float) -> tuple[float, float]:
        k = math.pi / 180.0 * EARTH_RADIUS_KM
        return (lon - self.lon0) * k * math.cos(math.radians(self.lat0)), (lat - self.lat0) * k

    def inverse(self, x: float, y: float) -> tuple[float, float]:
        k = math.pi / 180.0 * EARTH_RADIUS_KM
        return self.lon0 + x / (k * math.cos(math.radians(self.lat0))), self.lat0 + y / k


_SITE_COLUMNS = ("site_id", "lon", "lat", "sector_azimuths", "w_low", "w_lm", "w_um")
_W_COLUMNS = {BandKind.LOW: "w_low", BandKind.LOWER_MID: "w_lm", BandKind.UPPER_MID: "w_um"}


def _float_list(text: str) -> list[float]:
    return [float(v) for v in text.split(";") if v.strip() != ""]


def parse_sites(
    path: str | Path,
    projection: Projection | None = None,
    w_max: Mapping[BandKind, float] | None = None,
) -> list[Site]:
    """Read a sites CSV and project it to planar km.

    Bandwidth columns hold one value per sector (``;``-separated) or a single value
    shared by all sectors. All malformed rows are reported together.
    """
    path = Path(path)
    w_max = w_max or {b: DEFAULT_RADIO[b]["w_max"] for b in BANDS}
    try:
        handle = path.open(newline="")
    except OSError as exc:
        raise ValidationError(f"cannot read {path}: {exc}") from None
    errors: list[str] = []
    raw: list[tuple[str, float, float, list[Sector]]] = []
    with handle:
        reader = csv.DictReader(handle)
        missing = [c for c in _SITE_COLUMNS if c not in (reader.fieldnames or [])]
        if missing:
            raise ValidationError(f"{path}: missing columns {missing}")
        seen: dict[str, int] = {}
        for line, row in enumerate(reader, start=2):
            try:
                site_id = row["site_id"].strip()
                if not site_id:
                    raise ValueError("empty site_id")
                if site_id in seen:
                    raise ValidationError(
                        f"{path}:{line}: duplicate site_id {site_id!r} (first on line {seen[site_id]})"
                    )
                seen[site_id] = line
                lon, lat = float(row["lon"]), float(row["lat"])
                azimuths = _float_list(row["sector_azimuths"])
                if not 1 <= len(azimuths) <= 3:
                    raise ValueError(f"expected 1-3 azimuths, got {len(azimuths)}")
                widths = {}
                for band, col in _W_COLUMNS.items():
                    vals = _float_list(row[col] or "0")
                    if len(vals) == 1:
                        vals = vals * len(azimuths)
                    if len(vals) != len(azimuths):
                        raise ValueError(f"{col}: {len(vals)} values for {len(azimuths)} sectors")
                    for v in vals:
                        if not 0 <= v <= w_max[band]:
                            raise ValueError(f"{col}={v} outside [0, {w_max[band]}] MHz")
                    widths[band] = vals
                sectors = [
                    Sector(str(i), az % 360.0, tuple(widths[b][i] for b in BANDS))
                    for i, az in enumerate(azimuths)
                ]
                raw.append((site_id, lon, lat, sectors))
            except ValidationError:
                raise
            except (ValueError, KeyError, TypeError, AttributeError) as exc:
                errors.append(f"{path}:{line}: {exc}")
    if errors:
        raise ValidationError("malformed site rows:\n" + "\n".join(errors))
    if projection is None and raw:
        projection = Projection(
            math.fsum(r[1] for r in raw) / len(raw), math.fsum(r[2] for r in raw) / len(raw)
        )
    return [
        Site(site_id, projection.forward(lon, lat), tuple(sectors))
        for site_id, lon, lat, sectors in raw
    ]


def write_sites(path: str | Path, sites: Sequence[Site], projection: Projection) -> None:
    with Path(path).open("w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(_SITE_COLUMNS)
        for site in sites:
            lon, lat = projection.inverse(*site.position)
            w.writerow(
                [site.site_id, repr(lon), repr(lat), ";".join(repr(s.azimuth_deg) for s in site.sectors)]
                + [";".join(repr(s.bandwidths[b]) for s in site.sectors) for b in BANDS]
            )


def consolidate(
    sites: Sequence[Site], w_max: Mapping[BandKind, float] | None = None
) -> tuple[list[Site], dict[str, int]]:
    """Give every sector a Low cell, and a LowerMid cell wherever it has UpperMid.

    Added cells get the band's maximal bandwidth. Returns the new sites and the
    number of cells added per band.
    """
    w_max = w_max or {b: DEFAULT_RADIO[b]["w_max"] for b in BANDS}
    added = {"low": 0, "lower_mid": 0}
    out = []
    for site in sites:
        sectors = []
        for sec in site.sectors:
            w = list(sec.bandwidths)
            if w[BandKind.LOW] <= 0:
                w[BandKind.LOW] = w_max[BandKind.LOW]
                added["low"] += 1
            if w[BandKind.UPPER_MID] > 0 and w[BandKind.LOWER_MID] <= 0:
                w[BandKind.LOWER_MID] = w_max[BandKind.LOWER_MID]
                added["lower_mid"] += 1
            sectors.append(sec.with_bandwidths(w))
        out.append(replace(site, sectors=tuple(sectors)))
    return out, added


# -- rasters ------------------------------------------------------------------


def read_ascii_grid(path: str | Path) -> UaaRaster:
    """Read an ESRI ASCII grid of hectares per pixel; coordinates in metres."""
    path = Path(path)
    header: dict[str, float] = {}
    try:
        with path.open() as fh:
            n_header = 0
            for line in fh:
                parts = line.split()
                if len(parts) == 2 and parts[0][0].isalpha():
                    header[parts[0].lower()] = float(parts[1])
                    n_header += 1
                else:
                    break
        grid = np.loadtxt(path, skiprows=n_header, ndmin=2, dtype=float)
    except (OSError, ValueError) as exc:
        raise ValidationError(f"cannot read raster {path}: {exc}") from None
    try:
        ncols, nrows, cell = int(header["ncols"]), int(header["nrows"]), header["cellsize"]
    except KeyError as exc:
        raise ValidationError(f"{path}: missing header field {exc}") from None
    if "xllcorner" in header:
        xll, yll = header["xllcorner"], header["yllcorner"]
    elif "xllcenter" in header:
        xll, yll = header["xllcenter"] - cell / 2, header["yllcenter"] - cell / 2
    else:
        raise ValidationError(f"{path}: missing xllcorner/yllcorner")
    if nrows * ncols == 0:
        grid = np.zeros((nrows, ncols))
    if grid.shape != (nrows, ncols):
        raise ValidationError(f"{path}: header says {nrows}x{ncols}, data is {grid.shape}")
    try:
        return UaaRaster((xll / 1000.0, yll / 1000.0), cell, grid, header.get("nodata_value", -9999.0))
    except ValueError as exc:
        raise ValidationError(f"{path}: {exc}") from None


def write_ascii_grid(
    path: str | Path,
    grid: np.ndarray,
    origin_km: tuple[float, float],
    cell_size_m: float,
    nodata: float = -9999,
    fmt: str | None = None,
) -> None:
    grid = np.asarray(grid)
    nrows, ncols = grid.shape
    integer = np.issubdtype(grid.dtype, np.integer)
    with Path(path).open("w") as fh:
        fh.write(f"ncols {ncols}\nnrows {nrows}\n")
        fh.write(f"xllcorner {origin_km[0] * 1000.0!r}\nyllcorner {origin_km[1] * 1000.0!r}\n")
        fh.write(f"cellsize {float(cell_size_m)!r}\nNODATA_value {nodata}\n")
        for row in grid:
            if integer:
                fh.write(" ".join(str(int(v)) for v in row) + "\n")
            elif fmt:
                fh.write(" ".join(format(float(v), fmt) for v in row) + "\n")
            else:
                fh.write(" ".join(repr(float(v)) for v in row) + "\n")


def write_raster(path: str | Path, raster: UaaRaster) -> None:
    write_ascii_grid(path, raster.grid, raster.origin, raster.cell_size_m, raster.nodata)


def _points_in_rings(xs: np.ndarray, ys: np.ndarray, rings: Iterable[Sequence[tuple[float, float]]]) -> np.ndarray:
    inside = np.zeros(xs.shape, dtype=bool)
    for ring in rings:
        pts = np.asarray(ring, dtype=float)
        if len(pts) < 3:
            continue
        x1, y1 = pts[:, 0], pts[:, 1]
        x2, y2 = np.roll(x1, -1), np.roll(y1, -1)
        for ax, ay, bx, by in zip(x1, y1, x2, y2):
            if ay == by:
                continue
            crosses = (ay > ys) != (by > ys)
            x_at = ax + (ys - ay) * (bx - ax) / (by - ay)
            inside ^= crosses & (xs < x_at)
    return inside


def rasterize_polygons(
    rings: Iterable[Sequence[tuple[float, float]]],
    origin_m: tuple[float, float],
    cell_size_m: float,
    ncols: int,
    nrows: int,
) -> UaaRaster:
    """Pixel-center-in-polygon rasterization (even-odd over all rings).

    Coordinates in planar metres; a pixel inside gets its full area in hectares.
    """
    xs = origin_m[0] + (np.arange(ncols) + 0.5) * cell_size_m
    ys = origin_m[1] + (nrows - np.arange(nrows) - 0.5) * cell_size_m
    gx, gy = np.meshgrid(xs, ys)
    inside = _points_in_rings(gx, gy, list(rings))
    grid = np.where(inside, (cell_size_m / 100.0) ** 2, 0.0)
    return UaaRaster((origin_m[0] / 1000.0, origin_m[1] / 1000.0), cell_size_m, grid)


def read_polygon_rings(path: str | Path) -> list[list[tuple[float, float]]]:
    """Rings of every Polygon/MultiPolygon in a GeoJSON file (planar metres)."""
    doc = json.loads(Path(path).read_text())
    feats = doc.get("features", [doc])
    rings = []
    for f in feats:
        geom = f.get("geometry", f)
        if geom["type"] == "Polygon":
            rings.extend(geom["coordinates"])
        elif geom["type"] == "MultiPolygon":
            for poly in geom["coordinates"]:
                rings.extend(poly)
    return [[(float(x), float(y)) for x, y, *_ in ring] for ring in rings]


# -- scenario config ----------------------------------------------------------


@dataclass(frozen=True)
class SweepSpec:
    parameter: str
    values: tuple[float, ...]

    def __post_init__(self) -> None:
        if self.parameter not in ("n_passes", "eta_scale", "gamma_scale"):
            raise ValidationError(f"unknown sweep parameter {self.parameter!r}")
        if not self.values or not all(math.isfinite(v) and v > 0 for v in self.values):
            raise ValidationError("sweep values must be finite and > 0")


@dataclass(frozen=True)
class ScenarioConfig:
    robot: RobotModel
    sites_path: Path
    raster_path: Path
    power_path: Path | None = None
    strategies: tuple[Strategy, ...] = (Strategy.EXISTING, Strategy.UPGRADED)
    tau: float = 0.2
    grid: GridIntensity = GridIntensity()
    factors: IntensityFactors = IntensityFactors()
    projection: Projection | None = None
    output_dir: Path = Path("out")
    workers: int = 1
    baseline_load: float = 0.2
    sweeps: tuple[SweepSpec, ...] = field(default_factory=tuple)


def parse_robot(spec: str | Mapping[str, Any]) -> RobotModel:
    if isinstance(spec, str):
        try:
            return preset(spec)
        except KeyError as exc:
            raise ValidationError(str(exc)) from None
    try:
        return RobotModel(**spec)
    except (TypeError, ValueError) as exc:
        raise ValidationError(f"bad robot definition: {exc}") from None


def load_config(path: str | Path) -> ScenarioConfig:
    """Read a scenario YAML; relative paths are resolved against its directory."""
    path = Path(path)
    doc = _read_yaml(path)
    _validate(doc, "scenario.schema.json", str(path))
    base = path.parent

    def resolve(p: str | None) -> Path | None:
        if p is None:
            return None
        q = Path(p)
        q = q if q.is_absolute() else base / q
        return q

    sites_path, raster_path = resolve(doc["sites"]), resolve(doc["raster"])
    power_path = resolve(doc.get("power_params"))
    for p in (sites_path, raster_path, power_path):
        if p is not None and not p.exists():
            raise ValidationError(f"{path}: file not found: {p}")
    proj = doc.get("projection")
    factors = doc.get("intensity_factors", {})
    return ScenarioConfig(
        robot=parse_robot(doc["robot"]),
        sites_path=sites_path,
        raster_path=raster_path,
        power_path=power_path,
        strategies=tuple(Strategy(s) for s in doc.get("strategies", ["existing", "upgraded"])),
        tau=float(doc.get("tau", 0.2)),
        grid=GridIntensity(float(doc.get("grid_gco2e_per_kwh", 58.0))),
        factors=IntensityFactors(**{k: float(v) for k, v in factors.items()}),
        projection=Projection(proj["lon0"], proj["lat0"]) if proj else None,
        output_dir=resolve(doc.get("output_dir", "out")),
        workers=int(doc.get("workers", 1)),
        baseline_load=float(doc.get("baseline_load", 0.2)),
        sweeps=tuple(SweepSpec(s["parameter"], tuple(float(v) for v in s["values"])) for s in doc.get("sweeps", [])),
    )
