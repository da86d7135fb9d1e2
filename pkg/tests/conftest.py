from __future__ import annotations

import pytest

from agrinet.netmodel import BANDS, DEFAULT_RADIO, BandKind, BandParams, EquipmentItem, PowerParams

# Lines recorded by the acceptance module, printed in the terminal summary.
ACCEPTANCE_LINES: list[str] = []


def make_power(
    p_site: float = 50.0,
    sigma: float = 0.1,
    p_static: float = 100.0,
    p_dyn: float = 2.0,
    p_band: float = 10.0,
) -> PowerParams:
    bands = {
        b: BandParams(**DEFAULT_RADIO[b], p_static_w=p_static, p_dyn_w_per_mhz=p_dyn, p_band_w=p_band)
        for b in BANDS
    }
    return PowerParams(p_site_w=p_site, sigma=sigma, bands=bands)


@pytest.fixture
def power() -> PowerParams:
    return make_power()


@pytest.fixture
def bands(power):
    return power.bands


@pytest.fixture
def catalog() -> dict[str, EquipmentItem]:
    return {
        "RRU": EquipmentItem("RRU", 600.0, 6.0),
        "AAU": EquipmentItem("AAU", 900.0, 9.0),
        "BBU": EquipmentItem("BBU", 200.0, 10.0),
    }


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)


def random_sector(rng, robot, tau=None, upgrade=None, max_robots=30, key=("S", "0")):
    """Random consolidated sector with at most ``max_robots`` required robots."""
    from agrinet.deploy import SectorInput
    from agrinet.robots import required_robots, unit_capacity

    u = unit_capacity(robot)
    a_low = rng.uniform(0, max_robots * u) if rng.random() > 0.05 else 0.0
    a_lm = a_low * rng.choice([0.0, rng.random(), 1.0])
    a_um = a_lm * rng.choice([0.0, rng.random(), 1.0])
    w_lm = rng.choice([0.0, 10.0, 20.0, 40.0, 54.8])
    w_in = (rng.choice([5.0, 10.0, 15.0, 20.0]), w_lm, rng.choice([0.0, 40.0, 90.0]) if w_lm else 0.0)
    return SectorInput(
        key=key,
        A=(a_low, a_lm, a_um),
        w_in=w_in,
        r_s=required_robots(a_low, robot),
        tau=rng.choice([0.0, 0.2, 0.5]) if tau is None else tau,
        upgrade=rng.random() < 0.5 if upgrade is None else upgrade,
    )


__all__ = ["ACCEPTANCE_LINES", "BandKind", "make_power", "random_sector"]
