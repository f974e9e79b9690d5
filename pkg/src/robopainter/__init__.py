"""Dynamics and mission simulator for an 8-DOF wall-painting mobile robot."""

from robopainter.params import RobotParams, default_params, load_robot_params, total_mass

__all__ = ["RobotParams", "default_params", "load_robot_params", "total_mass"]
__version__ = "0.1.0"
