"""Simulated rack of Cartesian gripper work cells.

Each cell pairs a 5-DOF belt-driven arm model with a deformable rope
scene, two rendered camera views and a token-authenticated REST API.
A rack orchestrator runs many cells behind a registry; the bench and
dataset packages drive the fleet through that API.
"""

__version__ = "0.1.0"
