"""Deterministic 2D object-goal navigation: simulator, modular agent, and benchmark harness."""

from .geometry import Action, Pose
from .gridworld import CATEGORIES, Scene, generate_home, load_scene, nearest_goal_instance, save_scene

__version__ = "0.1.0"

__all__ = [
    "Action",
    "CATEGORIES",
    "Pose",
    "Scene",
    "generate_home",
    "load_scene",
    "nearest_goal_instance",
    "save_scene",
]
