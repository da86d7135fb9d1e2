import json
import math

import numpy as np
import pytest

from agrinet.coverage import UaaRaster
from agrinet.ingest import (
    Projection,
    SweepSpec,
    ValidationError,
    consolidate,
    load_config,
    load_power_params,
    parse_robot,
    parse_sites,
    rasterize_polygons,
    read_ascii_grid,
    read_polygon_rings,
    write_raster,
    write_sites,
)
from agrinet.netmodel import BandKind, Sector, Site
from agrinet.robots import PRESETS
from agrinet.synth import synth_territory

HEADER = "site_id,lon,lat,sector_azimuths,w_low,w_lm,w_um\n"


def write_csv(tmp_path, body, name="sites.csv"):
    p = tmp_path / name
    p.write_text(HEADER + body)
    return p


def test_one_row_three_sectors(tmp_path):
    p = write_csv(tmp_path, "A,2.0,46.5,0;120;240,20,54.8;0;0,90;0;0\n")
    sites = parse_sites(p)
    assert len(sites) == 1 and len(sites[0].sectors) == 3
    assert sites[0].position == pytest.approx((0.0, 0.0))
    assert [s.bandwidths for s in sites[0].sectors] == [(20, 54.8, 90), (20, 0, 0), (20, 0, 0)]


def test_upper_mid_above_max_rejected(tmp_path):
    p = write_csv(tmp_path, "A,2.0,46.5,0,20,0,95\n")
    with pytest.raises(ValidationError, match="w_um"):
        parse_sites(p)


def test_malformed_rows_reported_with_lines(tmp_path):
    p = write_csv(tmp_path, "A,2.0,46.5,0,20,0,0\nB,abc,46.5,0,20,0,0\nC,2.0,46.5,0;120,20;20;20,0,0\n")
    with pytest.raises(ValidationError) as err:
        parse_sites(p)
    msg = str(err.value)
    assert ":3:" in msg and ":4:" in msg and ":2:" not in msg


def test_duplicate_site_fatal(tmp_path):
    p = write_csv(tmp_path, "A,2.0,46.5,0,20,0,0\nA,2.1,46.5,0,20,0,0\n")
    with pytest.raises(ValidationError, match="duplicate"):
        parse_sites(p)


def test_missing_columns(tmp_path):
    p = tmp_path / "bad.csv"
    p.write_text("site_id,lon\nA,1\n")
    with pytest.raises(ValidationError, match="missing columns"):
        parse_sites(p)


def test_projection_roundtrip():
    proj = Projection(2.0, 46.5)
    x, y = proj.forward(2.1, 46.6)
    assert proj.inverse(x, y) == pytest.approx((2.1, 46.6))
    # 0.1 degree of latitude is about 11.1 km.
    assert y == pytest.approx(11.12, abs=0.01)


def test_sites_roundtrip(tmp_path):
    sites, _ = synth_territory(4, 10, 20.0, 0.5)
    proj = Projection(2.0, 46.5)
    write_sites(tmp_path / "s.csv", sites, proj)
    back = parse_sites(tmp_path / "s.csv", proj)
    assert [s.site_id for s in back] == [s.site_id for s in sites]
    for a, b in zip(sites, back):
        assert a.position == pytest.approx(b.position, abs=1e-9)
        assert a.sectors == b.sectors


def sec(w):
    return Site("A", (0, 0), (Sector("0", 0.0, w),))


@pytest.mark.parametrize(
    "before,after",
    [((0, 0, 90), (20, 54.8, 90)), ((10, 20, 0), (10, 20, 0)), ((0, 54.8, 0), (20, 54.8, 0))],
)
def test_consolidate_examples(before, after):
    out, _ = consolidate([sec(before)])
    assert out[0].sectors[0].bandwidths == after


def test_consolidate_counts_and_idempotent():
    sites, _ = synth_territory(2, 30, 20.0, 0.5)
    once, added = consolidate(sites)
    twice, added2 = consolidate(once)
    assert twice == once and added2 == {"low": 0, "lower_mid": 0}
    n_no_low = sum(s.bandwidths[0] == 0 for site in sites for s in site.sectors)
    assert added["low"] == n_no_low


def test_ascii_grid_roundtrip(tmp_path):
    grid = np.array([[0.5, -9999.0], [1.25, 0.0]])
    r = UaaRaster((1.5, -2.0), 232.0, grid)
    write_raster(tmp_path / "g.asc", r)
    back = read_ascii_grid(tmp_path / "g.asc")
    assert back.origin == pytest.approx(r.origin)
    np.testing.assert_array_equal(back.grid, grid)
    assert back.total_ha() == 1.75


def test_ascii_grid_errors(tmp_path):
    p = tmp_path / "bad.asc"
    p.write_text("ncols 2\nnrows 2\nxllcorner 0\nyllcorner 0\ncellsize 100\n1 1\n")
    with pytest.raises(ValidationError):
        read_ascii_grid(p)
    p.write_text("ncols 1\nnrows 1\nxllcorner 0\nyllcorner 0\ncellsize 100\n7\n")
    with pytest.raises(ValidationError):
        read_ascii_grid(p)


def test_rasterize_square_with_hole():
    outer = [(0, 0), (1000, 0), (1000, 1000), (0, 1000)]
    hole = [(400, 400), (600, 400), (600, 600), (400, 600)]
    r = rasterize_polygons([outer, hole], (0.0, 0.0), 100.0, 10, 10)
    # 100 pixels inside the square, 4 inside the hole, 1 ha each.
    assert r.total_ha() == pytest.approx(96.0)
    assert r.grid[5, 5] == 0 and r.grid[0, 0] == 1.0


def test_read_polygon_rings(tmp_path):
    doc = {
        "type": "FeatureCollection",
        "features": [
            {"type": "Feature", "geometry": {"type": "Polygon", "coordinates": [[[0, 0], [1, 0], [1, 1]]]}},
            {"type": "Feature", "geometry": {"type": "MultiPolygon",
                                             "coordinates": [[[[5, 5], [6, 5], [6, 6]]]]}},
        ],
    }
    p = tmp_path / "p.geojson"
    p.write_text(json.dumps(doc))
    rings = read_polygon_rings(p)
    assert len(rings) == 2 and rings[1][0] == (5.0, 5.0)


def test_default_power_params():
    power, catalog = load_power_params()
    assert power[BandKind.UPPER_MID].w_max == 90.0
    assert power[BandKind.LOW].gamma_km == 4.5
    assert power[BandKind.LOWER_MID].eta_up == pytest.approx(2.7 * 0.25)
    assert set(catalog) == {"RRU", "AAU", "BBU"}


def test_power_params_schema_errors(tmp_path):
    p = tmp_path / "power.yaml"
    p.write_text("p_site_w: 1\n")
    with pytest.raises(ValidationError):
        load_power_params(p)


def test_parse_robot():
    assert parse_robot("Stream") is PRESETS["Stream"]
    custom = parse_robot({"name": "x", "l_r": 1.0, "v_r": 1.0, "lambda_r": 2.0})
    assert custom.lambda_r == 2.0
    with pytest.raises(ValidationError):
        parse_robot("Plough")
    with pytest.raises(ValidationError):
        parse_robot({"name": "x", "speed": 3})


def test_sweep_spec_validation():
    SweepSpec("n_passes", (6.0, 12.0, 18.0))
    with pytest.raises(ValidationError):
        SweepSpec("lambda", (1.0,))
    with pytest.raises(ValidationError):
        SweepSpec("eta_scale", (0.0,))
    with pytest.raises(ValidationError):
        SweepSpec("eta_scale", (math.inf,))


def test_load_config_paths(tmp_path):
    (tmp_path / "sites.csv").write_text(HEADER)
    (tmp_path / "uaa.asc").write_text("ncols 0\nnrows 0\nxllcorner 0\nyllcorner 0\ncellsize 232\n")
    cfg = tmp_path / "scenario.yaml"
    cfg.write_text("robot: Edge\nsites: sites.csv\nraster: uaa.asc\ntau: 0.3\n")
    c = load_config(cfg)
    assert c.robot is PRESETS["Edge"] and c.tau == 0.3 and c.sites_path == tmp_path / "sites.csv"
    cfg.write_text("robot: Edge\nsites: nope.csv\nraster: uaa.asc\n")
    with pytest.raises(ValidationError, match="not found"):
        load_config(cfg)
    cfg.write_text("robot: Edge\nsites: sites.csv\nraster: uaa.asc\ntau: 1.5\n")
    with pytest.raises(ValidationError):
        load_config(cfg)
