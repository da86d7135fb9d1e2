"""Robot scenario parameters and workload arithmetic."""

from __future__ import annotations

import math
from dataclasses import dataclass

from .netmodel import HOURS_PER_YEAR

# m^2/s -> ha/h
_M2_PER_S_TO_HA_PER_H = 0.36


class InfeasibleError(ValueError):
    """A positive area cannot be served by robots with zero capacity."""


@dataclass(frozen=True)
class RobotModel:
    name: str
    l_r: float
    v_r: float
    lambda_r: float
    n_passes: float = 12
    n_hours: float = 40

    def __post_init__(self) -> None:
        if self.l_r < 0 or self.v_r < 0:
            raise ValueError("working width and pace must be >= 0")
        if self.lambda_r < 0:
            raise ValueError("bitrate need must be >= 0")
        if self.n_passes < 1:
            raise ValueError("n_passes must be >= 1")
        if not 0 < self.n_hours <= 168:
            raise ValueError("n_hours must be in (0, 168]")

    @property
    def workload_ha_per_h(self) -> float:
        return _M2_PER_S_TO_HA_PER_H * self.l_r * self.v_r


PRESETS: dict[str, RobotModel] = {
    r.name: r
    for r in (
        RobotModel("RTK", 2.0, 1.25, 0.012),
        RobotModel("Stream", 2.0, 1.25, 1.0),
        RobotModel("HD Stream", 2.0, 1.25, 3.0),
        RobotModel("Edge", 2.0, 1.0, 9.0),
        RobotModel("HD Edge", 2.0, 1.0, 25.0),
    )
}


def preset(name: str) -> RobotModel:
    key = name.strip().lower().replace("_", " ").replace("-", " ")
    for robot in PRESETS.values():
        if robot.name.lower() == key:
            return robot
    raise KeyError(f"unknown robot preset {name!r}; known: {', '.join(PRESETS)}")


def unit_capacity(r: RobotModel) -> float:
    """Largest area (ha) a single robot can work with one pass per week."""
    return r.workload_ha_per_h * r.n_hours


def required_robots(area_ha: float, r: RobotModel) -> int:
    if area_ha < 0:
        raise ValueError(f"negative area {area_ha}")
    if area_ha == 0:
        return 0
    u = unit_capacity(r)
    if u <= 0:
        raise InfeasibleError(f"robot {r.name!r} has zero capacity but {area_ha} ha to manage")
    return max(1, math.ceil(area_ha / u))


def supported_robots(capacity_mbps: float, r: RobotModel) -> float:
    """Fractional number of robots a bitrate capacity can carry simultaneously."""
    if capacity_mbps < 0:
        raise ValueError(f"negative capacity {capacity_mbps}")
    if r.lambda_r == 0:
        return math.inf
    return capacity_mbps / r.lambda_r


def duty_cycle(r: RobotModel) -> float:
    # Active hours per year over hours per year: passes x weekly hours.
    return r.n_passes * r.n_hours / HOURS_PER_YEAR


def avg_traffic_per_robot(r: RobotModel) -> float:
    """Year-averaged upload traffic (Mbps) of one deployed robot."""
    return r.lambda_r * duty_cycle(r)
