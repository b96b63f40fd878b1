"""5-DOF arm model: belt-driven XY stage, servo z/r/d axes.

Submodules:
  corexy      step-space transforms for the two belt motors
  trajectory  piecewise-linear paths under a trapezoidal speed profile
  noise       seeded per-move positioning error
  collision   current-trace stall detection
  robot       the stateful arm combining all of the above
"""

from griprack.kinematics.corexy import MotorSteps, corexy_forward, corexy_inverse
from griprack.kinematics.trajectory import MotionProfile, Trajectory, plan_trajectory
from griprack.kinematics.noise import NoiseModel
from griprack.kinematics.collision import CollisionEvent, detect_collision
from griprack.kinematics.robot import RobotArm, RobotPose, NotHomedError, RangeError

__all__ = [
    "MotorSteps",
    "corexy_forward",
    "corexy_inverse",
    "MotionProfile",
    "Trajectory",
    "plan_trajectory",
    "NoiseModel",
    "CollisionEvent",
    "detect_collision",
    "RobotArm",
    "RobotPose",
    "NotHomedError",
    "RangeError",
]
