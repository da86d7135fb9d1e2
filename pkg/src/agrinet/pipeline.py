"""Coverage -> deployment -> impact for one scenario, report writing and sweeps."""

from __future__ import annotations

import csv
import json
import logging
from dataclasses import dataclass, replace
from pathlib import Path
from typing import Mapping, Sequence

from .coverage import CoverageMap, SectorCoverage, SectorKey, UaaRaster, compute_coverage
from .deploy import DeploymentResult, Strategy, run_strategy
from .impact import (
    BaselineRow,
    GridIntensity,
    ImpactReport,
    IntensityFactors,
    baseline_row,
    cell_traffic,
    count_cells,
    covering_network,
    incremental_assessment,
)
from .ingest import (
    ScenarioConfig,
    SweepSpec,
    consolidate,
    load_power_params,
    parse_sites,
    read_ascii_grid,
    write_ascii_grid,
)
from .netmodel import BANDS, EquipmentItem, PowerParams, Site
from .robots import RobotModel

log = logging.getLogger(__name__)

BAND_COLS = ("low", "lower_mid", "upper_mid")


@dataclass
class Territory:
    sites: list[Site]
    raster: UaaRaster
    power: PowerParams
    catalog: dict[str, EquipmentItem]
    consolidation: dict[str, int]


@dataclass
class CoverageResult:
    cmap: CoverageMap
    per_sector: dict[SectorKey, SectorCoverage]
    uncovered_ha: float


@dataclass
class ScenarioResult:
    robot: RobotModel
    sites: list[Site]
    raster: UaaRaster
    coverage: CoverageResult
    results: dict[Strategy, DeploymentResult]
    reports: dict[Strategy, ImpactReport]
    baselines: list[BaselineRow]
    consolidation: dict[str, int]


def load_territory(config: ScenarioConfig) -> Territory:
    power, catalog = load_power_params(config.power_path)
    w_max = {b: power[b].w_max for b in BANDS}
    sites = parse_sites(config.sites_path, config.projection, w_max)
    sites, added = consolidate(sites, w_max)
    raster = read_ascii_grid(config.raster_path)
    log.info("loaded %d sites (%s consolidation additions), raster %s", len(sites), added, raster.shape)
    return Territory(sites, raster, power, catalog, added)


def evaluate(
    sites: Sequence[Site],
    raster: UaaRaster,
    power: PowerParams,
    catalog: Mapping[str, EquipmentItem],
    robot: RobotModel,
    strategies: Sequence[Strategy] = (Strategy.EXISTING, Strategy.UPGRADED),
    tau: float = 0.2,
    grid: GridIntensity = GridIntensity(),
    factors: IntensityFactors = IntensityFactors(),
    workers: int = 1,
    baseline_load: float = 0.2,
    coverage: CoverageResult | None = None,
    consolidation: dict[str, int] | None = None,
) -> ScenarioResult:
    """Run the whole assessment in memory on consolidated sites."""
    if coverage is None:
        coverage = CoverageResult(*compute_coverage(sites, raster, power.bands, workers=workers))
    results, reports = {}, {}
    for strategy in strategies:
        res = run_strategy(
            sites, coverage.per_sector, coverage.uncovered_ha, robot, strategy, tau, power.bands, workers
        )
        results[strategy] = res
        reports[strategy] = incremental_assessment(sites, res, power, catalog, grid, factors)
    baselines = [
        baseline_row("full_network", sites, power, catalog, grid, baseline_load),
        baseline_row("covering_uaa", covering_network(sites, coverage.per_sector), power, catalog, grid, baseline_load),
    ]
    return ScenarioResult(
        robot, list(sites), raster, coverage, results, reports, baselines, consolidation or {}
    )


def _fmt(v: object) -> object:
    return repr(v) if isinstance(v, float) else v


def _write_csv(path: Path, header: Sequence[str], rows: Sequence[Sequence[object]]) -> None:
    with path.open("w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for row in rows:
            w.writerow([_fmt(v) for v in row])


def cell_table(result: ScenarioResult) -> list[list[object]]:
    """Rows laid out like the cell-count tables: category then counts per band."""
    rows: list[list[object]] = [
        ["full_network", *count_cells(result.sites)],
        ["covering_uaa", *count_cells(covering_network(result.sites, result.coverage.per_sector))],
    ]
    for strategy, res in result.results.items():
        bd = res.breakdown
        if strategy is Strategy.EXISTING:
            rows.append(["used_existing", *bd.used])
        else:
            rows.append(["upgraded_initial", *bd.unchanged])
            rows.append(["upgraded_updated", *bd.updated])
            rows.append(["upgraded_added", *bd.added])
    return rows


def write_outputs(result: ScenarioResult, out_dir: str | Path) -> list[Path]:
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    written = []

    r = result.raster
    path = out / "coverage.asc"
    write_ascii_grid(path, result.coverage.cmap.classification(), r.origin, r.cell_size_m, nodata=0)
    written.append(path)

    path = out / "coverage.csv"
    _write_csv(
        path,
        ["site_id", "sector_id", "A_low", "A_lower_mid", "A_upper_mid"],
        [[*key, *cov.A] for key, cov in sorted(result.coverage.per_sector.items())],
    )
    written.append(path)

    for strategy, res in result.results.items():
        path = out / f"deployment_{strategy.value}.csv"
        header = ["site_id", "sector_id", "r_s", "d_s", "manageable_ha"]
        header += [f"{p}_{b}" for p in ("w_in", "w_out", "peak_mbps", "nu_mbps") for b in BAND_COLS]
        rows = []
        for key, dep in res.deployments.items():
            nu = cell_traffic(dep, res.robot)
            rows.append([*key, dep.r_s, dep.d_s, dep.manageable_ha, *dep.w_in, *dep.w_out, *dep.peak_mbps, *nu])
        _write_csv(path, header, rows)
        written.append(path)

    path = out / "cells.csv"
    _write_csv(path, ["category", *BAND_COLS], cell_table(result))
    written.append(path)

    impact_rows = [rep.to_row() for rep in result.reports.values()]
    path = out / "impact.csv"
    if impact_rows:
        header = list(impact_rows[0])
        _write_csv(path, header, [[row[h] for h in header] for row in impact_rows])
    else:
        _write_csv(path, ["robot", "strategy"], [])
    written.append(path)

    path = out / "baseline.csv"
    base_rows = [b.to_row() for b in result.baselines]
    _write_csv(path, list(base_rows[0]), [list(row.values()) for row in base_rows])
    written.append(path)

    report = {
        "robot": result.robot.name,
        "consolidation_added_cells": result.consolidation,
        "uaa": {
            "total_ha": result.raster.total_ha(),
            "non_covered_ha": result.coverage.uncovered_ha,
        },
        "strategies": {
            s.value: {
                "required_robots": res.required_robots,
                "deployed_robots": res.deployed_robots,
                "manageable_ha": res.manageable_ha,
                "non_manageable_ha": res.non_manageable_ha,
                "non_covered_ha": res.non_covered_ha,
                "impact": result.reports[s].to_row(),
                "impact_raw": result.reports[s].raw(),
            }
            for s, res in result.results.items()
        },
        "baselines": base_rows,
    }
    path = out / "report.json"
    path.write_text(json.dumps(report, indent=2, sort_keys=True) + "\n")
    written.append(path)
    return written


def run_scenario(config: ScenarioConfig, workers: int | None = None, out_dir: str | Path | None = None) -> ScenarioResult:
    terr = load_territory(config)
    result = evaluate(
        terr.sites,
        terr.raster,
        terr.power,
        terr.catalog,
        config.robot,
        config.strategies,
        config.tau,
        config.grid,
        config.factors,
        workers or config.workers,
        config.baseline_load,
        consolidation=terr.consolidation,
    )
    write_outputs(result, out_dir or config.output_dir)
    return result


SWEEP_HEADER = [
    "parameter", "value", "strategy", "manageable_pct", "deployed_pct", "manageable_ha",
    "deployed_robots", "cells_used", "cells_per_ha", "total_ec_gwh", "total_cf_kt", "cf_kg_per_ha",
]


def sweep_rows(
    terr: Territory,
    config: ScenarioConfig,
    sweep: SweepSpec,
    workers: int = 1,
) -> list[list[object]]:
    """One full evaluation per sweep value, normalised per manageable hectare."""
    base_cov = None
    rows = []
    for value in sweep.values:
        robot, power = config.robot, terr.power
        coverage = None
        if sweep.parameter == "n_passes":
            robot = replace(robot, n_passes=value)
        elif sweep.parameter == "eta_scale":
            power = power.scaled(eta_scale=value)
        else:
            power = power.scaled(gamma_scale=value)
        if sweep.parameter != "gamma_scale":
            # Coverage only depends on radii.
            if base_cov is None:
                base_cov = CoverageResult(*compute_coverage(terr.sites, terr.raster, terr.power.bands, workers))
            coverage = base_cov
        res = evaluate(
            terr.sites, terr.raster, power, terr.catalog, robot, config.strategies, config.tau,
            config.grid, config.factors, workers, config.baseline_load, coverage=coverage,
        )
        for strategy, dep in res.results.items():
            rep = res.reports[strategy]
            ha = dep.manageable_ha
            cells = sum(dep.breakdown.used)
            rows.append([
                sweep.parameter, value, strategy.value, rep.manageable_pct, rep.deployed_pct, ha,
                dep.deployed_robots, cells, cells / ha if ha else 0.0,
                rep.total_ec_gwh, rep.total_cf_kt, rep.total_cf_kt * 1e6 / ha if ha else 0.0,
            ])
    return rows


def run_sweep(
    config: ScenarioConfig, sweep: SweepSpec, workers: int | None = None, out_dir: str | Path | None = None
) -> Path:
    terr = load_territory(config)
    rows = sweep_rows(terr, config, sweep, workers or config.workers)
    out = Path(out_dir or config.output_dir)
    out.mkdir(parents=True, exist_ok=True)
    path = out / f"sweep_{sweep.parameter}.csv"
    _write_csv(path, SWEEP_HEADER, rows)
    return path
