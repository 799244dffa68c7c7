"""Deterministic closed-loop simulation of single-marker navigation.

The world (ground truth, sensor synthesis, speed plant) and the on-board
``NavigationStack`` (candidate generation, filter, selection, control) only
communicate through synthesized measurements, so the estimator never sees
the truth.
"""

from dataclasses import dataclass, field, replace
import math

import numpy as np

from .camera import (
    ALLOWED_VISIBLE_SETS,
    MarkerModel,
    MarkerObservation,
    default_rig,
    quad_area,
    visible_projections,
)
from .disambiguation import choose, object_space_error, prior_pose, total_cost
from .exceptions import BothInvalid, ConfigError, NoValidPose, DegenerateConfiguration
from .fusion import (
    DEFAULT_P0_DIAG,
    NoiseConfig,
    assemble_observation,
    initial_state,
    predict,
    update,
)
from .guidance import (
    ControlCommand,
    ControllerGains,
    Waypoint,
    distance_to,
    lookahead_angle,
    steering_command,
    throttle_command,
    waypoint_reached,
)
from .kinematics import BicycleParams, OdometryReading, integrate, sideslip
from .planar_pose import LMOptions, candidates_vehicle_world
from .se3 import PlanarState, from_planar

POLICIES = ("ours", "method_a")

PAPER_MARKER_CORNERS = (
    (-0.086, 1.47, 0.312),
    (0.086, 1.47, 0.312),
    (0.086, 1.47, 0.140),
    (-0.086, 1.47, 0.140),
)
PAPER_WAYPOINTS = ((1.30, 0.00), (0.50, 0.65))
# facing the first waypoint from (2.00, -1.00)
PAPER_START = (2.00, -1.00, math.atan2(1.00, -0.70))


@dataclass(frozen=True, eq=False)
class SimConfig:
    dt: float = 1.0 / 11.0
    pixel_noise_sigma: float = 1.0
    speed_noise_sigma: float = 0.02
    steer_noise_sigma: float = 0.01
    seed: int = 0
    rig: object = field(default_factory=default_rig)
    marker: MarkerModel = field(default_factory=lambda: MarkerModel(np.array(PAPER_MARKER_CORNERS)))
    bicycle: BicycleParams = field(default_factory=BicycleParams)
    kf_noise: NoiseConfig = field(default_factory=NoiseConfig)
    P0_diag: tuple = DEFAULT_P0_DIAG
    gains: ControllerGains = field(default_factory=ControllerGains)
    waypoints: tuple = tuple(Waypoint(x, y, 0.10) for x, y in PAPER_WAYPOINTS)
    initial_pose: PlanarState = PlanarState(*PAPER_START)
    max_steps: int = 600
    selection_policy: str = "ours"
    k_u: float = 1.2
    tau: float = 0.4
    substeps: int = 1
    e2_weight: float = 1.0e4
    init_frames: int = 50
    success_tolerance: float = 0.05

    def __post_init__(self):
        if not self.dt > 0:
            raise ConfigError("dt", f"must be > 0, got {self.dt}")
        for key in (
            "pixel_noise_sigma", "speed_noise_sigma", "steer_noise_sigma", "e2_weight", "success_tolerance"
        ):
            value = getattr(self, key)
            if not (math.isfinite(value) and value >= 0):
                raise ConfigError(key, f"must be >= 0, got {value}")
        for key in ("max_steps", "substeps", "init_frames"):
            if int(getattr(self, key)) != getattr(self, key) or getattr(self, key) < 1:
                raise ConfigError(key, f"must be a positive integer, got {getattr(self, key)}")
        for key in ("k_u", "tau"):
            if not getattr(self, key) > 0:
                raise ConfigError(key, f"must be > 0, got {getattr(self, key)}")
        if self.selection_policy not in POLICIES:
            raise ConfigError("selection_policy", f"must be one of {POLICIES}")
        if not self.waypoints:
            raise ConfigError("waypoints", "at least one waypoint is required")

    def with_(self, **changes):
        return replace(self, **changes)


@dataclass(frozen=True, eq=False)
class StepRecord:
    k: int
    t: float
    truth: PlanarState
    observation: object
    pair: object
    costs: tuple
    selected: str
    nearer: str
    prior: object
    posterior: object
    command: ControlCommand
    waypoint_idx: int

    @property
    def estimate(self):
        x = self.posterior.x_hat
        return PlanarState(x[0], x[1], x[2])


@dataclass
class SimLog:
    steps: list = field(default_factory=list)

    def __len__(self):
        return len(self.steps)

    def __iter__(self):
        return iter(self.steps)


@dataclass(frozen=True)
class ScenarioResult:
    waypoints_reached: int
    waypoints_total: int
    steps_used: int
    final_position_error: float
    selection_accuracy: float
    visible_steps: int
    rms_position_error: float
    rms_yaw_error: float
    timeout: bool

    @property
    def success(self):
        return not self.timeout and self.waypoints_reached == self.waypoints_total


# --------------------------------------------------------------------------
# sensor synthesis and truth propagation


def synthesize_observation(truth, rig, marker, sigma, rng):
    """Noisy pixel corners for every camera that sees the full marker.

    Noise for all 4 cameras x 4 corners is drawn every call, visible or not,
    so two runs with the same seed consume identical random streams.
    """
    noise = rng.normal(0.0, 1.0, size=(4, 4, 2)) * sigma
    corners = {}
    for j, (pixels, _) in visible_projections(rig, from_planar(truth), marker).items():
        noisy = pixels + noise[j - 1]
        if rig.intrinsics(j).in_bounds(noisy):
            corners[j] = noisy
    if not corners:
        return None
    if tuple(corners) not in ALLOWED_VISIBLE_SETS:
        corners = _adjacent_pair(corners)
    return MarkerObservation(corners)


def _adjacent_pair(corners):
    best = max(corners, key=lambda j: quad_area(corners[j]))
    neighbours = [j for j in corners if j != best and (abs(j - best) in (1, 3))]
    keep = [best]
    if neighbours:
        keep.append(max(neighbours, key=lambda j: quad_area(corners[j])))
    return {j: corners[j] for j in sorted(keep)}


def synthesize_odometry(v_true, delta_true, speed_sigma, steer_sigma, steering_limit, rng):
    dv, dd = rng.normal(0.0, 1.0, size=2)
    delta = delta_true + steer_sigma * dd
    return OdometryReading(
        v_true + speed_sigma * dv, max(-steering_limit, min(steering_limit, delta))
    )


def step_truth(truth, command, speed, config):
    """Advance truth by one control period: first-order speed lag + bicycle model."""
    h = config.dt / config.substeps
    for _ in range(config.substeps):
        if speed != 0.0:
            truth = integrate(truth, speed, command.delta_rd, h, config.bicycle)
        speed = speed + h * (config.k_u * command.u - speed) / config.tau
    return truth, speed


# --------------------------------------------------------------------------
# on-board estimation and control


@dataclass(frozen=True, eq=False)
class StackOutput:
    pair: object
    costs: tuple
    selected: str
    prior: object
    posterior: object
    command: ControlCommand
    waypoint_idx: int
    done: bool


class NavigationStack:
    """Estimator + controller driven only by marker observations and odometry."""

    def __init__(self, config):
        self.config = config
        self.lm_options = LMOptions()
        self.state = None
        self.waypoint_idx = 0
        self.accumulator = 0.0

    @property
    def done(self):
        return self.waypoint_idx >= len(self.config.waypoints)

    def initialize(self, observations):
        """Seed the filter from static frames: corners are averaged, then the
        candidate with the smaller reprojection error is taken."""
        cfg = self.config
        frames = [o for o in observations if o is not None]
        if not frames:
            raise ConfigError("initial_pose", "marker not visible from the initial pose")
        ref = frames[0].visible_set
        same = [o for o in frames if o.visible_set == ref]
        mean = MarkerObservation({j: np.mean([o.corners[j] for o in same], axis=0) for j in ref})
        pair = candidates_vehicle_world(cfg.rig, cfg.marker, mean, self.lm_options)
        self.state = initial_state(pair.pose_a, cfg.P0_diag)
        return pair

    def _select(self, pair, prior_T, obs):
        cfg = self.config
        costs = (
            total_cost(pair.pose_a, prior_T, cfg.rig, cfg.marker, obs, "a", cfg.e2_weight, pair.e1_a),
            total_cost(pair.pose_b, prior_T, cfg.rig, cfg.marker, obs, "b", cfg.e2_weight, pair.e1_b),
        )
        if cfg.selection_policy == "ours":
            winner = choose(*costs)
        else:
            if not (math.isfinite(pair.e1_a) or math.isfinite(pair.e1_b)):
                raise BothInvalid("both candidates have infinite reprojection error")
            # pose_a is ordered by reprojection error
            winner = "a"
        return (pair.pose_a if winner == "a" else pair.pose_b, winner), costs

    def step(self, obs, odo):
        cfg = self.config
        if self.state is None:
            raise RuntimeError("initialize() must be called before step()")
        prior = predict(self.state, cfg.dt, cfg.kf_noise)
        pair, costs, selected, pose = None, None, "", None
        if obs is not None:
            try:
                pair = candidates_vehicle_world(cfg.rig, cfg.marker, obs, self.lm_options)
                (pose, selected), costs = self._select(pair, prior_pose(prior), obs)
            except (BothInvalid, NoValidPose, DegenerateConfiguration):
                pose, selected = None, ""
        z = assemble_observation(pose, odo, prior.x_hat[2], cfg.bicycle)
        posterior = update(prior, z, cfg.kf_noise)
        self.state = posterior
        command = self._control(posterior, odo)
        return StackOutput(pair, costs, selected, prior, posterior, command, self.waypoint_idx, self.done)

    def _control(self, posterior, odo):
        cfg = self.config
        est = PlanarState(*posterior.x_hat[:3])
        while not self.done and waypoint_reached(est, cfg.waypoints[self.waypoint_idx]):
            self.waypoint_idx += 1
            self.accumulator = 0.0
        if self.done:
            return ControlCommand(0.0, 0.0)
        wp = cfg.waypoints[self.waypoint_idx]
        beta = sideslip(odo.delta_r)
        L_d = distance_to(est, wp)
        alpha = lookahead_angle(est, beta, wp)
        delta = steering_command(alpha, L_d, beta, cfg.bicycle)
        u, self.accumulator = throttle_command(L_d, self.accumulator, cfg.gains)
        return ControlCommand(delta, u)


# --------------------------------------------------------------------------
# scenario loop


def run_scenario(config):
    """Run the closed loop until every waypoint is reached or ``max_steps``.

    Returns ``(SimLog, ScenarioResult)``.
    """
    cfg = config
    rng = np.random.default_rng(cfg.seed)
    truth = cfg.initial_pose
    speed = 0.0
    steer = 0.0
    stack = NavigationStack(cfg)

    init_obs = []
    for _ in range(cfg.init_frames):
        init_obs.append(synthesize_observation(truth, cfg.rig, cfg.marker, cfg.pixel_noise_sigma, rng))
        synthesize_odometry(0.0, 0.0, cfg.speed_noise_sigma, cfg.steer_noise_sigma, cfg.bicycle.steering_limit, rng)
    stack.initialize(init_obs)

    log = SimLog()
    arrivals = []
    for k in range(cfg.max_steps):
        idx = stack.waypoint_idx
        obs = synthesize_observation(truth, cfg.rig, cfg.marker, cfg.pixel_noise_sigma, rng)
        odo = synthesize_odometry(
            speed, steer, cfg.speed_noise_sigma, cfg.steer_noise_sigma, cfg.bicycle.steering_limit, rng
        )
        out = stack.step(obs, odo)
        for i in range(idx, out.waypoint_idx):
            arrivals.append(distance_to(truth, cfg.waypoints[i]) <= cfg.waypoints[i].r + cfg.success_tolerance)
        nearer = ""
        if out.pair is not None:
            T_true = from_planar(truth)
            da = object_space_error(out.pair.pose_a, T_true, cfg.marker)
            db = object_space_error(out.pair.pose_b, T_true, cfg.marker)
            nearer = "b" if db < da else "a"
        log.steps.append(
            StepRecord(
                k, k * cfg.dt, truth, obs, out.pair, out.costs, out.selected, nearer,
                out.prior, out.posterior, out.command, out.waypoint_idx,
            )
        )
        if out.done:
            break
        truth, speed = step_truth(truth, out.command, speed, cfg)
        steer = out.command.delta_rd
    return log, summarize(log, cfg, arrivals, stack.done)


def summarize(log, cfg, arrivals, finished):
    """Scenario metrics.

    A waypoint counts as reached when the controller declared arrival and the
    true position at that moment was within ``r + success_tolerance``.
    """
    n = len(log)
    pos_sq = [
        (s.estimate.x - s.truth.x) ** 2 + (s.estimate.y - s.truth.y) ** 2 for s in log
    ]
    yaw_sq = [
        math.remainder(s.estimate.psi - s.truth.psi, 2 * math.pi) ** 2 for s in log
    ]
    judged = [s for s in log if s.selected]
    correct = sum(1 for s in judged if s.selected == s.nearer)
    reached = sum(arrivals)
    last = log.steps[-1]
    return ScenarioResult(
        waypoints_reached=reached,
        waypoints_total=len(cfg.waypoints),
        steps_used=n,
        final_position_error=math.hypot(last.estimate.x - last.truth.x, last.estimate.y - last.truth.y),
        selection_accuracy=correct / len(judged) if judged else 1.0,
        visible_steps=len(judged),
        rms_position_error=math.sqrt(sum(pos_sq) / n),
        rms_yaw_error=math.sqrt(sum(yaw_sq) / n),
        timeout=not finished,
    )
