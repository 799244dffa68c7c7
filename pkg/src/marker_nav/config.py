"""JSON scenario files <-> ``SimConfig``.

Every section and key is optional except ``schema_version``; missing entries
take the defaults below (the bundled paper scenario).  Unknown keys are
rejected with a ``ConfigError`` naming the dotted path of the offending key.
All quantities are SI: metres, radians, seconds.
"""

import copy
import hashlib
import json
from importlib import resources
import math

import numpy as np

from .camera import CameraRig, Intrinsics, MarkerModel, mount_extrinsic
from .exceptions import ConfigError
from .fusion import DEFAULT_P0_DIAG, DEFAULT_Q_DIAG, DEFAULT_R_DIAG, NoiseConfig
from .guidance import ControllerGains, Waypoint
from .kinematics import BicycleParams
from .se3 import PlanarState, RigidTransform
from .simulator import PAPER_MARKER_CORNERS, PAPER_START, PAPER_WAYPOINTS, SimConfig

SCHEMA_VERSION = 1

_DEFAULT_CAMERA = {"fx": 460.0, "fy": 460.0, "cx": 320.0, "cy": 240.0, "width": 640, "height": 480}

DEFAULTS = {
    "schema_version": SCHEMA_VERSION,
    "seed": 0,
    "dt": 1.0 / 11.0,
    "max_steps": 600,
    "selection_policy": "ours",
    "init_frames": 50,
    "success_tolerance": 0.05,
    "noise": {"pixel_sigma": 1.0, "speed_sigma": 0.02, "steer_sigma": 0.01},
    "vehicle": {"wheelbase": 0.256, "steering_limit": 0.5, "k_u": 1.2, "tau": 0.4, "substeps": 1},
    "initial_pose": {"x": PAPER_START[0], "y": PAPER_START[1], "psi": PAPER_START[2]},
    "marker": {"corners": [list(c) for c in PAPER_MARKER_CORNERS]},
    "rig": {
        "cameras": [
            dict(_DEFAULT_CAMERA, yaw=yaw, position=[round(0.1 * math.cos(yaw), 12), round(0.1 * math.sin(yaw), 12), 0.226])
            for yaw in (0.0, -math.pi / 2, math.pi, math.pi / 2)
        ]
    },
    "filter": {
        "Q_diag": list(DEFAULT_Q_DIAG),
        "R_diag": list(DEFAULT_R_DIAG),
        "P0_diag": list(DEFAULT_P0_DIAG),
    },
    "control": {"p1": 0.3, "p2": 0.005, "u_max": 1.0, "waypoint_radius": 0.10},
    "waypoints": [list(w) for w in PAPER_WAYPOINTS],
    "disambiguation": {"e2_weight": 1.0e4},
}

_CAMERA_KEYS = {"fx", "fy", "cx", "cy", "width", "height", "yaw", "position", "rotation", "translation"}


def _merge(defaults, given, path):
    if not isinstance(given, dict):
        raise ConfigError(path or "<root>", "expected an object")
    out = copy.deepcopy(defaults)
    for key, value in given.items():
        where = f"{path}.{key}" if path else key
        if key not in defaults:
            raise ConfigError(where, "unknown key")
        if isinstance(defaults[key], dict):
            out[key] = _merge(defaults[key], value, where)
        else:
            out[key] = value
    return out


def resolve(doc):
    """Validate keys and fill defaults; returns the complete document."""
    if not isinstance(doc, dict):
        raise ConfigError("<root>", "expected a JSON object")
    if "schema_version" not in doc:
        raise ConfigError("schema_version", "required")
    if doc["schema_version"] != SCHEMA_VERSION:
        raise ConfigError("schema_version", f"unsupported version {doc['schema_version']!r}")
    resolved = _merge(DEFAULTS, doc, "")
    cams = resolved["rig"]["cameras"]
    if not isinstance(cams, list) or len(cams) != 4:
        raise ConfigError("rig.cameras", "exactly 4 cameras are required")
    for i, cam in enumerate(cams):
        if not isinstance(cam, dict):
            raise ConfigError(f"rig.cameras[{i}]", "expected an object")
        for key in cam:
            if key not in _CAMERA_KEYS:
                raise ConfigError(f"rig.cameras[{i}].{key}", "unknown key")
    return resolved


def _number(doc, key, path):
    value = doc[key]
    if isinstance(value, bool) or not isinstance(value, (int, float)) or not math.isfinite(value):
        raise ConfigError(path, f"expected a finite number, got {value!r}")
    return float(value)


def _camera(cam, i):
    path = f"rig.cameras[{i}]"
    merged = dict(_DEFAULT_CAMERA, **cam)
    try:
        intr = Intrinsics(
            float(merged["fx"]), float(merged["fy"]), float(merged["cx"]), float(merged["cy"]),
            int(merged["width"]), int(merged["height"]),
        )
    except (TypeError, ValueError) as exc:
        raise ConfigError(path, str(exc)) from None
    if "rotation" in cam:
        try:
            ext = RigidTransform.checked(cam["rotation"], cam.get("translation", [0.0, 0.0, 0.0]))
        except ValueError as exc:
            raise ConfigError(f"{path}.rotation", str(exc)) from None
    else:
        if "yaw" not in cam or "position" not in cam:
            raise ConfigError(path, "give either yaw + position or rotation + translation")
        ext = mount_extrinsic(float(cam["yaw"]), np.asarray(cam["position"], dtype=float))
    return intr, ext


def to_sim_config(doc):
    """Build a ``SimConfig`` from a (possibly partial) scenario document."""
    d = resolve(doc)
    try:
        noise = d["noise"]
        veh = d["vehicle"]
        ctrl = d["control"]
        filt = d["filter"]
        try:
            bicycle = BicycleParams(_number(veh, "wheelbase", "vehicle.wheelbase"),
                                    _number(veh, "steering_limit", "vehicle.steering_limit"))
        except ValueError as exc:
            raise ConfigError("vehicle", str(exc)) from None
        try:
            kf = NoiseConfig(np.asarray(filt["Q_diag"], float), np.asarray(filt["R_diag"], float))
        except ValueError as exc:
            key = "filter.Q_diag" if "Q" in str(exc) else "filter.R_diag"
            raise ConfigError(key, str(exc)) from None
        P0 = np.asarray(filt["P0_diag"], float)
        if P0.shape != (6,) or np.any(P0 < 0):
            raise ConfigError("filter.P0_diag", "expected 6 non-negative variances")
        try:
            gains = ControllerGains(_number(ctrl, "p1", "control.p1"), _number(ctrl, "p2", "control.p2"),
                                    _number(ctrl, "u_max", "control.u_max"))
        except ValueError as exc:
            raise ConfigError("control", str(exc)) from None
        radius = _number(ctrl, "waypoint_radius", "control.waypoint_radius")
        if not radius > 0:
            raise ConfigError("control.waypoint_radius", "must be > 0")
        wps = d["waypoints"]
        if not isinstance(wps, list) or not wps or any(len(w) != 2 for w in wps):
            raise ConfigError("waypoints", "expected a non-empty list of [x, y] pairs")
        waypoints = tuple(Waypoint(float(x), float(y), radius) for x, y in wps)
        try:
            marker = MarkerModel(np.asarray(d["marker"]["corners"], dtype=float))
        except ValueError as exc:
            raise ConfigError("marker.corners", str(exc)) from None
        rig = CameraRig(tuple(_camera(cam, i) for i, cam in enumerate(d["rig"]["cameras"])))
        pose = d["initial_pose"]
        initial = PlanarState(_number(pose, "x", "initial_pose.x"), _number(pose, "y", "initial_pose.y"),
                              _number(pose, "psi", "initial_pose.psi"))
        seed = d["seed"]
        if isinstance(seed, bool) or not isinstance(seed, int) or not 0 <= seed < 2**64:
            raise ConfigError("seed", "expected an unsigned 64-bit integer")
        for key in ("max_steps", "init_frames"):
            if isinstance(d[key], bool) or not isinstance(d[key], int):
                raise ConfigError(key, "expected an integer")
        if isinstance(veh["substeps"], bool) or not isinstance(veh["substeps"], int) or veh["substeps"] < 1:
            raise ConfigError("vehicle.substeps", "expected a positive integer")
        return SimConfig(
            dt=_number(d, "dt", "dt"),
            pixel_noise_sigma=_number(noise, "pixel_sigma", "noise.pixel_sigma"),
            speed_noise_sigma=_number(noise, "speed_sigma", "noise.speed_sigma"),
            steer_noise_sigma=_number(noise, "steer_sigma", "noise.steer_sigma"),
            seed=seed,
            rig=rig,
            marker=marker,
            bicycle=bicycle,
            kf_noise=kf,
            P0_diag=tuple(P0),
            gains=gains,
            waypoints=waypoints,
            initial_pose=initial,
            max_steps=d["max_steps"],
            selection_policy=d["selection_policy"],
            k_u=_number(veh, "k_u", "vehicle.k_u"),
            tau=_number(veh, "tau", "vehicle.tau"),
            substeps=veh["substeps"],
            e2_weight=_number(d["disambiguation"], "e2_weight", "disambiguation.e2_weight"),
            init_frames=d["init_frames"],
            success_tolerance=_number(d, "success_tolerance", "success_tolerance"),
        )
    except ConfigError as exc:
        # SimConfig reports flat field names; map them back to document paths
        raise ConfigError(_DOC_PATHS.get(exc.key, exc.key), str(exc).split(": ", 1)[-1]) from None


_DOC_PATHS = {
    "pixel_noise_sigma": "noise.pixel_sigma",
    "speed_noise_sigma": "noise.speed_sigma",
    "steer_noise_sigma": "noise.steer_sigma",
    "e2_weight": "disambiguation.e2_weight",
    "k_u": "vehicle.k_u",
    "tau": "vehicle.tau",
}


def load(path):
    """Read a scenario file and return ``(SimConfig, resolved_document)``."""
    try:
        with open(path, encoding="utf-8") as fh:
            doc = json.load(fh)
    except json.JSONDecodeError as exc:
        raise ConfigError("<file>", f"invalid JSON: {exc}") from None
    return to_sim_config(doc), resolve(doc)


def paper_scenario_path():
    return resources.files("marker_nav").joinpath("data/paper_scenario.json")


def load_paper_scenario():
    with resources.as_file(paper_scenario_path()) as p:
        return load(p)


def _canonical_numbers(value):
    # 1 and 1.0, 0.0 and -0.0 describe the same scenario
    if isinstance(value, dict):
        return {k: _canonical_numbers(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_canonical_numbers(v) for v in value]
    if isinstance(value, (int, float)) and not isinstance(value, bool):
        return float(value) + 0.0
    return value


def canonical_json(doc):
    return json.dumps(_canonical_numbers(doc), sort_keys=True, separators=(",", ":"), allow_nan=False)


def config_hash(resolved_doc):
    """Stable digest of a resolved scenario, independent of seed and policy."""
    doc = {k: v for k, v in resolved_doc.items() if k not in ("seed", "selection_policy")}
    return hashlib.sha256(canonical_json(doc).encode("utf-8")).hexdigest()
