"""Network load, energy and carbon impact of deploying connected agricultural robots."""

from .netmodel import BandKind, BandParams, PowerParams, Sector, Site
from .robots import PRESETS, RobotModel

__all__ = ["BandKind", "BandParams", "PowerParams", "PRESETS", "RobotModel", "Sector", "Site"]
__version__ = "0.1.0"
