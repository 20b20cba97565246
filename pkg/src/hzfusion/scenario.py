"""Occluded pedestrian-crossing simulation.

A pedestrian walks across the road behind a parked vehicle. Connected sensors
report box measurements of its position; each runs a set-based estimator, a
fusion center combines the estimates, and the ego vehicle scales its speed
with two sigmoids driven by the fused confidence over the crosswalk and over
its own reachable set.

Coordinates: ``x`` runs along the road in the ego's direction of travel,
``y`` across it. The ego moves along ``x`` only and its position is the
``x`` coordinate of its front bumper.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field

import numpy as np
from scipy.special import expit

from .estimator import MeasurementSet, MotionModel, SensorEstimateState, initial_state
from .estimator import step as estimator_step
from .fusion import FeasibleSpace, FusedConfidenceSet, fuse, make_feasible_space, max_confidence_over
from .zonoset import ConstrainedZonotope, Interval, make_interval


@dataclass(frozen=True)
class SensorSpec:
    name: str
    measurement_half_width: float = 0.5
    noise_half_width: float = 0.0
    bias: tuple = (0.0, 0.0)
    drop_probability: float = 0.0
    rate_divisor: int = 1
    visible_from: int = 0  # first step with line of sight; no estimator before
    visible_until: int | None = None  # last step with line of sight

    def __post_init__(self):
        object.__setattr__(self, "bias", tuple(float(v) for v in self.bias))
        if len(self.bias) != 2:
            raise ValueError(f"sensor {self.name}: bias must have two components")
        if self.measurement_half_width <= 0:
            raise ValueError(f"sensor {self.name}: measurement half-width must be positive")
        if self.noise_half_width < 0:
            raise ValueError(f"sensor {self.name}: noise half-width must be nonnegative")
        if not 0.0 <= self.drop_probability <= 1.0:
            raise ValueError(f"sensor {self.name}: drop probability must lie in [0, 1]")
        if self.rate_divisor < 1:
            raise ValueError(f"sensor {self.name}: rate divisor must be at least 1")
        if self.visible_from < 0:
            raise ValueError(f"sensor {self.name}: visible_from must be nonnegative")
        if self.visible_until is not None and self.visible_until < self.visible_from:
            raise ValueError(f"sensor {self.name}: visible_until precedes visible_from")


@dataclass(frozen=True)
class PedestrianSpec:
    waypoints: tuple
    speed: float

    def __post_init__(self):
        pts = np.array(self.waypoints, dtype=float)
        if pts.ndim != 2 or pts.shape[1] != 2 or len(pts) < 1:
            raise ValueError("pedestrian waypoints must be a nonempty list of 2-D points")
        if self.speed < 0:
            raise ValueError("pedestrian speed must be nonnegative")
        object.__setattr__(self, "waypoints", tuple(tuple(map(float, p)) for p in pts))


@dataclass(frozen=True)
class EgoSpec:
    position: float = 0.0
    speed: float = 20.0
    lane: tuple = (-3.5, 0.0)  # lateral extent of the ego lane
    horizon: float = 2.0  # prediction horizon T of the reachable set

    def __post_init__(self):
        object.__setattr__(self, "lane", tuple(float(v) for v in self.lane))
        if len(self.lane) != 2 or self.lane[0] >= self.lane[1]:
            raise ValueError("ego lane must be an increasing pair")
        if self.speed < 0:
            raise ValueError("ego speed must be nonnegative")
        if self.horizon <= 0:
            raise ValueError("prediction horizon must be positive")


@dataclass(frozen=True)
class EgoControllerParams:
    """Piecewise-constant sigmoid gain ``k(c)`` and offset ``d(c)``."""

    breakpoints: tuple = (0.5, 0.8)
    gains: tuple = (0.3, 0.6, 1.0)
    offsets: tuple = (5.0, 10.0, 15.0)

    def _band(self, c: float) -> int:
        return int(np.searchsorted(self.breakpoints, c, side="right"))

    def k(self, c: float) -> float:
        return self.gains[self._band(c)]

    def d(self, c: float) -> float:
        return self.offsets[self._band(c)]


@dataclass(frozen=True)
class ScenarioConfig:
    name: str
    pedestrian: PedestrianSpec
    sensors: tuple
    occluded_region: Interval
    crosswalk: Interval
    road: tuple = (-3.5, 3.5)  # lateral extent of the carriageway
    ego: EgoSpec = field(default_factory=EgoSpec)
    dt: float = 0.1
    horizon_steps: int = 100
    process_vmax: float = 2.0
    seed: int = 0
    feasible_margin: float = 0.1
    stop_speed: float = 0.01  # the run ends once the ego is slower than this
    on_empty: str = "measurement"
    grid_resolution: int = 21

    def __post_init__(self):
        object.__setattr__(self, "sensors", tuple(self.sensors))
        object.__setattr__(self, "road", tuple(float(v) for v in self.road))
        if self.dt <= 0:
            raise ValueError("dt must be positive")
        if self.horizon_steps < 1:
            raise ValueError("horizon_steps must be at least 1")
        if self.process_vmax <= 0:
            raise ValueError("process_vmax must be positive")
        if not self.sensors:
            raise ValueError("need at least one sensor")
        if self.occluded_region.dim != 2 or self.crosswalk.dim != 2:
            raise ValueError("occluded region and crosswalk must be planar boxes")
        lo, hi = self.road
        if self.crosswalk.lower[1] < lo or self.crosswalk.upper[1] > hi:
            raise ValueError("crosswalk must lie within the road's lateral extent")
        if self.ego.lane[0] < lo or self.ego.lane[1] > hi:
            raise ValueError("ego lane must lie within the road's lateral extent")
        if self.on_empty not in ("measurement", "prediction"):
            raise ValueError("on_empty must be 'measurement' or 'prediction'")
        if self.feasible_margin < 0 or self.stop_speed < 0:
            raise ValueError("feasible_margin and stop_speed must be nonnegative")
        if self.grid_resolution < 2:
            raise ValueError("grid_resolution must be at least 2")
        if self.pedestrian.speed * self.dt > self.process_vmax * self.dt * (1 + 1e-12):
            raise ValueError("pedestrian speed exceeds the estimator's displacement bound")

    def motion_model(self) -> MotionModel:
        return MotionModel.isotropic(self.process_vmax, self.dt)


@dataclass(frozen=True)
class SensorRecord:
    measured: bool
    active: bool  # has estimator state
    measurement: MeasurementSet | None = None
    estimate: ConstrainedZonotope | None = None
    confidence: float = 0.0
    fallback: bool = False


@dataclass(frozen=True)
class TraceRecord:
    t: int
    pedestrian: tuple
    ego_position: float
    ego_speed: float
    sensors: tuple
    c_reach: float
    c_cross: float
    d_reach: float
    d_cross: float
    feasible_space: FeasibleSpace | None = None
    fused: FusedConfidenceSet | None = None
    step_seconds: float = 0.0

    def __post_init__(self):
        if self.ego_speed < 0:
            raise ValueError("negative ego speed")


# -- pedestrian ------------------------------------------------------------


def pedestrian_position(spec: PedestrianSpec, t: int, dt: float) -> np.ndarray:
    """Point at arc length ``speed * t * dt`` along the waypoint polyline."""
    pts = np.array(spec.waypoints)
    s = spec.speed * t * dt
    for a, b in zip(pts[:-1], pts[1:]):
        seg = float(np.linalg.norm(b - a))
        if s <= seg:
            return a + (b - a) * (s / seg) if seg > 0 else a.copy()
        s -= seg
    return pts[-1].copy()


def pedestrian_step(position, config: ScenarioConfig, t: int) -> np.ndarray:
    """Move from ``position`` toward the path point scheduled for step ``t``.

    The step is capped at ``speed * dt``, so the ground truth never moves
    farther than the estimator's process bound allows.
    """
    position = np.asarray(position, dtype=float)
    target = pedestrian_position(config.pedestrian, t, config.dt)
    delta = target - position
    dist = float(np.linalg.norm(delta))
    cap = config.pedestrian.speed * config.dt
    if dist <= cap or dist == 0.0:
        return target
    return position + delta * (cap / dist)


# -- sensors ---------------------------------------------------------------


def sensor_visible(spec: SensorSpec, t: int) -> bool:
    return t >= spec.visible_from and (spec.visible_until is None or t <= spec.visible_until)


def sensor_measure(truth, spec: SensorSpec, rng: np.random.Generator, t: int, sensor_id: int = 0):
    """Box measurement around the biased, noisy truth, or ``None``.

    The generator is advanced by exactly three draws per call, whether or not
    a measurement is produced, so that sensor streams stay aligned.
    """
    u_drop = rng.random()
    noise = rng.uniform(-1.0, 1.0, size=2) * spec.noise_half_width
    if not sensor_visible(spec, t) or t % spec.rate_divisor or u_drop < spec.drop_probability:
        return None
    c = np.asarray(truth, dtype=float) + np.array(spec.bias) + noise
    w = spec.measurement_half_width
    return MeasurementSet(make_interval(c - w, c + w), sensor_id, t)


# -- ego vehicle -----------------------------------------------------------


def ev_reachable_set(position: float, speed: float, horizon: float, lane) -> ConstrainedZonotope:
    """Lane-wide box from the front bumper to ``speed * horizon`` ahead."""
    if speed < 0 or horizon <= 0:
        raise ValueError("need speed >= 0 and horizon > 0")
    return make_interval([position, lane[0]], [position + speed * horizon, lane[1]])


def controller_speed(v, c_reach, c_cross, d_reach, d_cross, params: EgoControllerParams = EgoControllerParams()):
    """Next speed: ``v`` scaled by the harsher of the reach and crossing sigmoids."""
    if v < 0:
        raise ValueError("speed must be nonnegative")
    factors = [
        expit(params.k(c) * (d - params.d(c))) for c, d in ((c_reach, d_reach), (c_cross, d_cross))
    ]
    return float(min(v * f for f in factors))


# -- closed loop -----------------------------------------------------------


def run_simulation(config: ScenarioConfig, on_step=None) -> list[TraceRecord]:
    """Run the closed loop until the ego stops or the horizon is reached.

    Args:
        config: Scenario description.
        on_step: Optional callback receiving each :class:`TraceRecord` as it is made.
    """
    rng = np.random.default_rng(config.seed)
    model = config.motion_model()
    X0 = config.occluded_region.to_zonotope()
    crosswalk = config.crosswalk.to_zonotope()
    states: list[SensorEstimateState | None] = [None] * len(config.sensors)
    for i, spec in enumerate(config.sensors):
        if spec.visible_from == 0:
            states[i] = initial_state(X0, 0)

    ped = pedestrian_position(config.pedestrian, 0, config.dt)
    ego_x, v = float(config.ego.position), float(config.ego.speed)
    trace = []
    for t in range(1, config.horizon_steps + 1):
        tic = time.perf_counter()
        ped = pedestrian_step(ped, config, t)
        meas = [sensor_measure(ped, spec, rng, t, i) for i, spec in enumerate(config.sensors)]

        records = []
        for i, spec in enumerate(config.sensors):
            if states[i] is None and sensor_visible(spec, t):
                states[i] = initial_state(X0, t - 1)
            if states[i] is None:
                records.append(SensorRecord(False, False, meas[i]))
                continue
            states[i] = estimator_step(states[i], meas[i], model, t, config.on_empty)
            s = states[i]
            records.append(SensorRecord(meas[i] is not None, True, meas[i], s.estimate, s.confidence, s.fallback))

        active = [s for s in states if s is not None]
        d_reach = v * config.ego.horizon
        d_cross = float(config.crosswalk.lower[0]) - ego_x
        F = H = None
        c_reach = c_cross = 0.0
        if active:
            estimates = [s.estimate for s in active]
            F = make_feasible_space(estimates, config.feasible_margin)
            H = fuse(estimates, [s.confidence for s in active], F, check_containment=False)
            reach = ev_reachable_set(ego_x, v, config.ego.horizon, config.ego.lane)
            c_cross = max_confidence_over(H, crosswalk)
            c_reach = max_confidence_over(H, reach)

        v = controller_speed(v, c_reach, c_cross, d_reach, d_cross)
        ego_x += v * config.dt
        rec = TraceRecord(
            t,
            tuple(float(p) for p in ped),
            ego_x,
            v,
            tuple(records),
            c_reach,
            c_cross,
            d_reach,
            d_cross,
            F,
            H,
            time.perf_counter() - tic,
        )
        trace.append(rec)
        if on_step is not None:
            on_step(rec)
        if v < config.stop_speed:
            break
    return trace
