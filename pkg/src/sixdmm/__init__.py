"""Simulation and cross-entropy optimization of 6D movable metasurface aided downlink NOMA."""

__version__ = "0.1.0"

from .config import ConfigError, SystemConfig
from .geometry import ElementLayout, RotationAngles
from .channel import ChannelState, draw_channel_state
from .noma import EvaluationResult
from .objective import Objective, fitness
from .ceo import run as ceo_run
from .baselines import SurfaceStructure, ga_optimize

__all__ = [
    "ConfigError",
    "SystemConfig",
    "ElementLayout",
    "RotationAngles",
    "ChannelState",
    "draw_channel_state",
    "EvaluationResult",
    "Objective",
    "fitness",
    "ceo_run",
    "SurfaceStructure",
    "ga_optimize",
]
