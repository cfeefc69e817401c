"""Deterministic ray-cast radar and coherent-lidar simulation for synthetic driving scenes."""

from .radar_model import ArrayConfig, PointTarget, TargetSet, WaveformConfig, default_array
from .radar_synth import RadarCube, synthesize_cube
from .scenario import Scenario, load_scenario

__version__ = "0.1.0"

__all__ = [
    "ArrayConfig",
    "PointTarget",
    "RadarCube",
    "Scenario",
    "TargetSet",
    "WaveformConfig",
    "default_array",
    "load_scenario",
    "synthesize_cube",
]
