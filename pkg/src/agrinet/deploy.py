"""Per-sector robot selection and cell upgrade, and its orchestration over a network."""

from __future__ import annotations

import itertools
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from enum import Enum
from typing import Mapping, Sequence

import numpy as np

from .coverage import SectorCoverage, SectorKey
from .netmodel import BANDS, BandKind, BandParams, Site
from .robots import RobotModel, required_robots, unit_capacity

# Slack for floor/ceil of robot counts, so float noise on exact integers
# (e.g. 0.8 * 20 * 0.3625) does not flip a robot in or out.
EPS = 1e-9


def _floor(x: float) -> float:
    return x if math.isinf(x) else math.floor(x + EPS)


def _ceil(x: float) -> int:
    return math.ceil(x - EPS)


class Strategy(str, Enum):
    EXISTING = "existing"
    UPGRADED = "upgraded"

    @property
    def upgrade(self) -> bool:
        return self is Strategy.UPGRADED


@dataclass(frozen=True)
class SectorInput:
    key: SectorKey
    A: tuple[float, float, float]
    w_in: tuple[float, float, float]
    r_s: int
    tau: float = 0.2
    upgrade: bool = False

    def __post_init__(self) -> None:
        if self.r_s < 0:
            raise ValueError("r_s must be >= 0")
        if not 0 <= self.tau < 1:
            raise ValueError(f"tau must be in [0, 1), got {self.tau}")
        if any(w < 0 for w in self.w_in):
            raise ValueError("bandwidths must be >= 0")
        object.__setattr__(self, "w_in", tuple(float(w) for w in self.w_in))
        object.__setattr__(self, "A", tuple(float(a) for a in self.A))


@dataclass(frozen=True)
class SectorDeployment:
    key: SectorKey
    d_s: int
    r_s: int
    w_in: tuple[float, float, float]
    w_out: tuple[float, float, float]
    peak_mbps: tuple[float, float, float]
    manageable_ha: float
    bands_visited: int = 0

    def used(self, band: BandKind) -> bool:
        return self.w_out[band] > 0

    def status(self, band: BandKind) -> str | None:
        """``unchanged``/``updated``/``added`` for a used cell, else None."""
        w0, w1 = self.w_in[band], self.w_out[band]
        if w1 <= 0:
            return None
        if w0 <= 0:
            return "added"
        return "updated" if w1 > w0 else "unchanged"


def _robot_units(mbps: float, lam: float) -> float:
    if lam == 0:
        return math.inf if mbps > 0 else 0.0
    return mbps / lam


def usable_capacity_mbps(
    params: BandParams, w_in: float, tau: float, upgraded: bool
) -> float:
    """Bitrate left for robots on a cell, with ``tau`` of the existing bandwidth reserved."""
    if upgraded:
        return (params.w_max - tau * w_in) * params.eta_up
    return (1.0 - tau) * w_in * params.eta_up


def select_and_upgrade(
    inp: SectorInput, robot: RobotModel, bands: Mapping[BandKind, BandParams]
) -> SectorDeployment:
    """Allocate the sector's required robots to its cells, lowest band first.

    Capacity not used by whole robots on a band carries over to the next band.
    After band ``b``, robots that can only work in the area not reached by band
    ``b+1`` and were not deployed are dropped. In upgrade mode a cell whose
    capacity cannot carry all remaining robots is raised to its maximal bandwidth
    (added when absent). If no robot is deployed, every cell is reported unused.
    """
    lam = robot.lambda_r
    u = unit_capacity(robot)
    if inp.r_s > 0 and u <= 0:
        raise ValueError("robot unit capacity must be > 0 when robots are required")

    r_hat = float(inp.r_s)
    d = 0
    p = 0.0
    w_out = [0.0, 0.0, 0.0]
    left = [0.0, 0.0, 0.0]  # unconsumed Mbps per band
    peak = [0.0, 0.0, 0.0]
    visited = 0
    for band in BANDS:
        if r_hat <= EPS:
            break
        visited += 1
        bp = bands[band]
        w_in = inp.w_in[band]
        own = usable_capacity_mbps(bp, w_in, inp.tau, upgraded=False)
        w_out[band] = w_in
        c = _robot_units(own, lam) + p
        # Integer test: upgrade when the cell cannot take every remaining robot.
        if inp.upgrade and _ceil(r_hat) > _floor(c):
            w_out[band] = bp.w_max
            own = usable_capacity_mbps(bp, w_in, inp.tau, upgraded=True)
            c = _robot_units(own, lam) + p
        dd = max(0, int(min(_ceil(r_hat), _floor(c))))
        d += dd
        p = c - dd
        left[band] = own
        need = dd * lam
        for b in range(band + 1):
            take = min(need, left[b])
            left[b] -= take
            peak[b] += take
            need -= take
        if need > 0:  # float residue only
            peak[band] += need
        if band < BandKind.UPPER_MID:
            n_cres = r_hat - inp.A[band + 1] / u
        else:
            n_cres = 0.0
        r_hat -= max(n_cres, dd)

    if d == 0:
        w_out = [0.0, 0.0, 0.0]
        peak = [0.0, 0.0, 0.0]
    manageable = inp.A[BandKind.LOW] * d / inp.r_s if inp.r_s else 0.0
    return SectorDeployment(
        key=inp.key,
        d_s=d,
        r_s=inp.r_s,
        w_in=tuple(inp.w_in),
        w_out=tuple(w_out),
        peak_mbps=tuple(peak),
        manageable_ha=manageable,
        bands_visited=visited,
    )


def oracle_allocate(
    inp: SectorInput,
    robot: RobotModel,
    bands: Mapping[BandKind, BandParams],
    max_robots: int = 30,
) -> int:
    """Brute-force maximum of deployable robots for a small sector.

    Robots are split into strata by the highest band reaching their area (counts
    from rounding up the covered areas). A robot of stratum ``k`` may draw on
    bands ``<= k`` only, and may split its bitrate across bands. Every stratum
    combination is enumerated and checked against the prefix capacity of each
    band set; in upgrade mode every band is taken at its maximal bandwidth.
    """
    if inp.r_s > max_robots:
        raise ValueError(f"instance too large for the oracle: r_s={inp.r_s} > {max_robots}")
    if inp.r_s == 0:
        return 0
    u = unit_capacity(robot)
    reach = [inp.r_s]
    for band in BANDS[1:]:
        reach.append(min(reach[-1], _ceil(inp.A[band] / u)))
    strata = [reach[0] - reach[1], reach[1] - reach[2], reach[2]]

    caps = [
        _robot_units(usable_capacity_mbps(bands[b], inp.w_in[b], inp.tau, inp.upgrade), robot.lambda_r)
        for b in BANDS
    ]
    prefix = list(itertools.accumulate(caps))

    x0, x1, x2 = np.ix_(*(np.arange(n + 1) for n in strata))
    feasible = (x0 <= prefix[0] + EPS) & (x0 + x1 <= prefix[1] + EPS) & (x0 + x1 + x2 <= prefix[2] + EPS)
    total = x0 + x1 + x2
    return int(np.where(feasible, total, 0).max())


@dataclass
class CellBreakdown:
    """Cell counts per band; each entry is a 3-list indexed by band."""

    unchanged: list[int] = field(default_factory=lambda: [0, 0, 0])
    updated: list[int] = field(default_factory=lambda: [0, 0, 0])
    added: list[int] = field(default_factory=lambda: [0, 0, 0])

    @property
    def used(self) -> list[int]:
        return [a + b + c for a, b, c in zip(self.unchanged, self.updated, self.added)]


@dataclass
class DeploymentResult:
    strategy: Strategy
    robot: RobotModel
    deployments: dict[SectorKey, SectorDeployment]
    total_ha: float
    non_covered_ha: float
    breakdown: CellBreakdown

    @property
    def required_robots(self) -> int:
        return sum(d.r_s for d in self.deployments.values())

    @property
    def deployed_robots(self) -> int:
        return sum(d.d_s for d in self.deployments.values())

    @property
    def manageable_ha(self) -> float:
        return math.fsum(d.manageable_ha for d in self.deployments.values())

    @property
    def covered_ha(self) -> float:
        return self.total_ha - self.non_covered_ha

    @property
    def non_manageable_ha(self) -> float:
        return self.covered_ha - self.manageable_ha

    @property
    def manageable_pct(self) -> float:
        return 100.0 * self.manageable_ha / self.total_ha if self.total_ha > 0 else 0.0

    @property
    def deployed_pct(self) -> float:
        req = self.required_robots
        return 100.0 * self.deployed_robots / req if req else 0.0


def check_consolidated(sites: Sequence[Site]) -> None:
    for site in sites:
        for sec in site.sectors:
            w = sec.bandwidths
            if w[BandKind.LOW] <= 0 or (w[BandKind.UPPER_MID] > 0 and w[BandKind.LOWER_MID] <= 0):
                raise ValueError(
                    f"sector {site.site_id}/{sec.sector_id} is not consolidated: {w}"
                )


def sector_inputs(
    sites: Sequence[Site],
    coverage: Mapping[SectorKey, SectorCoverage],
    robot: RobotModel,
    tau: float,
    upgrade: bool,
) -> list[SectorInput]:
    out = []
    for site in sites:
        for sec in site.sectors:
            key = (site.site_id, sec.sector_id)
            cov = coverage.get(key, SectorCoverage((0.0, 0.0, 0.0)))
            out.append(
                SectorInput(
                    key=key,
                    A=cov.A,
                    w_in=sec.bandwidths,
                    r_s=required_robots(cov.A[BandKind.LOW], robot),
                    tau=tau,
                    upgrade=upgrade,
                )
            )
    out.sort(key=lambda s: s.key)
    return out


def run_strategy(
    sites: Sequence[Site],
    coverage: Mapping[SectorKey, SectorCoverage],
    non_covered_ha: float,
    robot: RobotModel,
    strategy: Strategy,
    tau: float,
    bands: Mapping[BandKind, BandParams],
    workers: int = 1,
) -> DeploymentResult:
    check_consolidated(sites)
    strategy = Strategy(strategy)
    inputs = sector_inputs(sites, coverage, robot, tau, strategy.upgrade)

    def work(chunk: Sequence[SectorInput]) -> list[SectorDeployment]:
        return [select_and_upgrade(i, robot, bands) for i in chunk]

    if workers > 1 and len(inputs) > 1:
        chunks = [inputs[i::workers] for i in range(workers)]
        with ThreadPoolExecutor(max_workers=workers) as pool:
            parts = list(pool.map(work, chunks))
        deps = [d for part in parts for d in part]
    else:
        deps = work(inputs)
    deps.sort(key=lambda d: d.key)

    breakdown = CellBreakdown()
    for dep in deps:
        for band in BANDS:
            status = dep.status(band)
            if status is not None:
                getattr(breakdown, status)[band] += 1

    covered = math.fsum(coverage[k].A[BandKind.LOW] for k in sorted(coverage))
    return DeploymentResult(
        strategy=strategy,
        robot=robot,
        deployments={d.key: d for d in deps},
        total_ha=covered + non_covered_ha,
        non_covered_ha=non_covered_ha,
        breakdown=breakdown,
    )


def upgraded_network(sites: Sequence[Site], result: DeploymentResult) -> list[Site]:
    """The input network with every upgraded or added cell at its new bandwidth."""
    out = []
    for site in sites:
        sectors = []
        for sec in site.sectors:
            dep = result.deployments.get((site.site_id, sec.sector_id))
            if dep is None:
                sectors.append(sec)
                continue
            sectors.append(sec.with_bandwidths(max(a, b) for a, b in zip(sec.bandwidths, dep.w_out)))
        out.append(Site(site.site_id, site.position, tuple(sectors)))
    return out
