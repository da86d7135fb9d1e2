"""Command-line entry point.

Exit codes: 0 success, 1 validation error, 2 runtime error.
"""

from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path

import yaml

from .ingest import (
    Projection,
    SweepSpec,
    ValidationError,
    consolidate,
    default_power_text,
    load_config,
    load_power_params,
    parse_sites,
    read_polygon_rings,
    rasterize_polygons,
    write_raster,
    write_sites,
)
from .netmodel import BANDS
from .pipeline import run_scenario, run_sweep
from .synth import synth_territory

log = logging.getLogger("agrinet")

# Planar frame of synthetic territories.
SYNTH_PROJECTION = Projection(lon0=2.0, lat0=46.5)


def _cmd_run(args: argparse.Namespace) -> int:
    config = load_config(args.config)
    result = run_scenario(config, workers=args.workers, out_dir=args.out)
    for strategy, rep in result.reports.items():
        row = rep.to_row()
        print(
            f"{rep.robot} [{strategy.value}] manageable {row['manageable_pct']}% "
            f"deployed {row['deployed_pct']}% EC {row['total_ec_gwh']} GWh "
            f"CF {row['total_cf_kt']} ktCO2e/y"
        )
    print(f"outputs in {args.out or config.output_dir}")
    return 0


def _cmd_sweep(args: argparse.Namespace) -> int:
    config = load_config(args.config)
    try:
        values = tuple(float(v) for v in args.values.split(","))
    except ValueError:
        raise ValidationError(f"bad --values {args.values!r}") from None
    path = run_sweep(config, SweepSpec(args.param, values), workers=args.workers, out_dir=args.out)
    print(f"wrote {path}")
    return 0


def _cmd_synth(args: argparse.Namespace) -> int:
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    sites, raster = synth_territory(args.seed, args.sites, args.extent, args.density)
    write_sites(out / "sites.csv", sites, SYNTH_PROJECTION)
    write_raster(out / "uaa.asc", raster)
    (out / "power.yaml").write_text(default_power_text())
    scenario = {
        "robot": args.robot,
        "strategies": ["existing", "upgraded"],
        "tau": 0.2,
        "power_params": "power.yaml",
        "sites": "sites.csv",
        "raster": "uaa.asc",
        "projection": {"lon0": SYNTH_PROJECTION.lon0, "lat0": SYNTH_PROJECTION.lat0},
        "output_dir": "out",
    }
    (out / "scenario.yaml").write_text(yaml.safe_dump(scenario, sort_keys=False))
    print(f"wrote {len(sites)} sites and a {raster.shape[0]}x{raster.shape[1]} raster to {out}")
    return 0


def _cmd_validate(args: argparse.Namespace) -> int:
    power, _ = load_power_params(args.power)
    w_max = {b: power[b].w_max for b in BANDS}
    sites = parse_sites(args.sites, w_max=w_max)
    _, added = consolidate(sites, w_max)
    n_sectors = sum(len(s.sectors) for s in sites)
    print(f"{len(sites)} sites, {n_sectors} sectors; consolidation would add {added}")
    return 0


def _cmd_rasterize(args: argparse.Namespace) -> int:
    rings = read_polygon_rings(args.polygons)
    raster = rasterize_polygons(rings, (args.xll, args.yll), args.cellsize, args.ncols, args.nrows)
    write_raster(args.out, raster)
    print(f"wrote {args.out} ({raster.total_ha():.1f} ha)")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="agrinet", description=__doc__)
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("run", help="run one scenario")
    p.add_argument("--config", required=True)
    p.add_argument("--workers", type=int)
    p.add_argument("--out")
    p.set_defaults(func=_cmd_run)

    p = sub.add_parser("sweep", help="sensitivity sweep over one parameter")
    p.add_argument("--config", required=True)
    p.add_argument("--param", required=True, choices=["n_passes", "eta_scale", "gamma_scale"])
    p.add_argument("--values", required=True, help="comma-separated, e.g. 0.8,1,1.2")
    p.add_argument("--workers", type=int)
    p.add_argument("--out")
    p.set_defaults(func=_cmd_sweep)

    p = sub.add_parser("synth", help="write a synthetic territory and scenario")
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--sites", type=int, required=True)
    p.add_argument("--extent", type=float, required=True, help="square side (km)")
    p.add_argument("--density", type=float, default=1.0, help="mean UAA ha per pixel")
    p.add_argument("--robot", default="Stream")
    p.add_argument("--out", required=True)
    p.set_defaults(func=_cmd_synth)

    p = sub.add_parser("validate", help="check a sites CSV")
    p.add_argument("--sites", required=True)
    p.add_argument("--power")
    p.set_defaults(func=_cmd_validate)

    p = sub.add_parser("rasterize", help="rasterize GeoJSON parcels to an ASCII grid")
    p.add_argument("--polygons", required=True)
    p.add_argument("--xll", type=float, required=True, help="lower-left x (m)")
    p.add_argument("--yll", type=float, required=True, help="lower-left y (m)")
    p.add_argument("--ncols", type=int, required=True)
    p.add_argument("--nrows", type=int, required=True)
    p.add_argument("--cellsize", type=float, default=232.0)
    p.add_argument("--out", required=True)
    p.set_defaults(func=_cmd_rasterize)
    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    try:
        return args.func(args)
    except ValidationError as exc:
        print(f"validation error: {exc}", file=sys.stderr)
        return 1
    except Exception as exc:  # noqa: BLE001
        log.debug("runtime error", exc_info=True)
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
