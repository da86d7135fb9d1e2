"""Seeded synthetic territories for desk-scale runs and tests."""

from __future__ import annotations

import math

import numpy as np

from .coverage import UaaRaster
from .netmodel import BANDS, Sector, Site

# Bandwidth menus (MHz) drawn from when a band is present on a sector.
BANDWIDTH_CHOICES = (
    (5.0, 10.0, 15.0, 20.0),
    (10.0, 20.0, 30.0, 40.0, 54.8),
    (40.0, 60.0, 80.0, 90.0),
)


def synth_territory(
    seed: int,
    n_sites: int,
    extent_km: float,
    uaa_density: float,
    band_probs: tuple[float, float, float] = (0.95, 0.7, 0.3),
    cell_size_m: float = 232.0,
) -> tuple[list[Site], UaaRaster]:
    """Random three-sector sites on a square and a UAA raster covering it.

    Pixel values are uniform on ``[0, 2 * uaa_density]`` clipped to the pixel area,
    so the mean is ``uaa_density`` ha/pixel whenever ``2 * uaa_density`` fits in a
    pixel. Sites are not consolidated. The same arguments give identical output.
    """
    rng = np.random.default_rng(seed)
    sites = []
    for i in range(n_sites):
        x, y = rng.uniform(0.0, extent_km, size=2)
        offset = float(rng.uniform(0.0, 120.0))
        sectors = []
        for k in range(3):
            widths = []
            for band in BANDS:
                present = rng.random() < band_probs[band]
                choice = BANDWIDTH_CHOICES[band][rng.integers(len(BANDWIDTH_CHOICES[band]))]
                widths.append(float(choice) if present else 0.0)
            sectors.append(Sector(str(k), (offset + 120.0 * k) % 360.0, tuple(widths)))
        sites.append(Site(f"S{i:05d}", (float(x), float(y)), tuple(sectors)))

    n = max(0, math.ceil(extent_km * 1000.0 / cell_size_m))
    max_px = (cell_size_m / 100.0) ** 2
    if uaa_density > 0:
        grid = np.minimum(rng.uniform(0.0, 2.0 * uaa_density, size=(n, n)), max_px)
    else:
        grid = np.zeros((n, n))
    return sites, UaaRaster((0.0, 0.0), cell_size_m, grid)
