"""Single-marker vehicle localization with a four-camera rig.

Planar pose candidates from one fiducial marker, selection between the two
ambiguous solutions using a filter prior, Kalman fusion with wheel odometry,
and waypoint following for a kinematic bicycle.
"""

from .camera import (
    CameraRig,
    Intrinsics,
    MarkerModel,
    MarkerObservation,
    default_rig,
    mount_extrinsic,
    project,
    project_rig,
    reprojection_error,
)
from .disambiguation import CostBreakdown, choose, select, select_min_reprojection, total_cost
from .estimators import MarkerPoseEstimator, PlanarPoseFilter
from .exceptions import (
    AtWaypoint,
    BehindCamera,
    BothInvalid,
    ConfigError,
    DegenerateConfiguration,
    MarkerNavError,
    NoValidPose,
    SingularInnovation,
)
from .fusion import FilterState, NoiseConfig, Observation, assemble_observation, predict, update
from .guidance import ControlCommand, ControllerGains, Waypoint, lookahead_angle, steering_command, throttle_command
from .kinematics import BicycleParams, OdometryReading, body_to_world, integrate, sideslip, turning_radius, yaw_rate
from .planar_pose import (
    AmbiguousPosePair,
    LMOptions,
    candidates_vehicle_world,
    decompose_planar,
    estimate_homography,
    lm_refine,
)
from .se3 import PlanarState, RigidTransform, compose, from_planar, invert, to_planar, transform_point, wrap_angle
from .simulator import NavigationStack, ScenarioResult, SimConfig, run_scenario

__all__ = [
    "CameraRig",
    "Intrinsics",
    "MarkerModel",
    "MarkerObservation",
    "default_rig",
    "mount_extrinsic",
    "project",
    "project_rig",
    "reprojection_error",
    "CostBreakdown",
    "choose",
    "select",
    "select_min_reprojection",
    "total_cost",
    "MarkerPoseEstimator",
    "PlanarPoseFilter",
    "AtWaypoint",
    "BehindCamera",
    "BothInvalid",
    "ConfigError",
    "DegenerateConfiguration",
    "MarkerNavError",
    "NoValidPose",
    "SingularInnovation",
    "FilterState",
    "NoiseConfig",
    "Observation",
    "assemble_observation",
    "predict",
    "update",
    "ControlCommand",
    "ControllerGains",
    "Waypoint",
    "lookahead_angle",
    "steering_command",
    "throttle_command",
    "BicycleParams",
    "OdometryReading",
    "body_to_world",
    "integrate",
    "sideslip",
    "turning_radius",
    "yaw_rate",
    "AmbiguousPosePair",
    "LMOptions",
    "candidates_vehicle_world",
    "decompose_planar",
    "estimate_homography",
    "lm_refine",
    "PlanarState",
    "RigidTransform",
    "compose",
    "from_planar",
    "invert",
    "to_planar",
    "transform_point",
    "wrap_angle",
    "NavigationStack",
    "ScenarioResult",
    "SimConfig",
    "run_scenario",
]

__version__ = "0.1.0"
