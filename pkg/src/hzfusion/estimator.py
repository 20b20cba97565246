"""Per-sensor set-based estimator with an intersection-over-union confidence.

Each step propagates the previous estimate through the motion model,
intersects it with the sensor's measurement set when one arrived, and scores
the result by ``area(estimate) / area(prediction)``. Because the estimate is a
subset of the prediction, this ratio is the volumetric IoU of the two sets.
Without a measurement the prediction becomes the estimate and the confidence
decays as ``area(last measured estimate) / area(prediction)``.
"""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

from .geometry import EmptySetError, vertices_2d
from .zonoset import ConstrainedZonotope, affine_map, generalized_intersection, make_interval, minkowski_sum


class DegeneratePredictionError(ValueError):
    """The predicted set has zero area, so the confidence ratio is undefined."""


@dataclass(frozen=True)
class MotionModel:
    F: np.ndarray
    Q: ConstrainedZonotope

    def __post_init__(self):
        F = np.array(self.F, dtype=float)
        if F.ndim != 2 or F.shape[0] != F.shape[1] or F.shape[0] != self.Q.dim:
            raise ValueError(f"transition matrix {F.shape} does not match process set of dimension {self.Q.dim}")
        if np.any(np.abs(self.Q.center) > 0) or self.Q.n_cons:
            raise ValueError("process-uncertainty set must be an origin-centred zonotope")
        G = self.Q.generators
        if G.shape[0] != G.shape[1] or np.any(np.abs(G - np.diag(np.diag(G))) > 0):
            raise ValueError("process-uncertainty generators must be diagonal")
        F.setflags(write=False)
        object.__setattr__(self, "F", F)

    @classmethod
    def isotropic(cls, vmax: float, dt: float, dim: int = 2) -> "MotionModel":
        """Identity dynamics with displacement bounded by ``vmax * dt`` per axis."""
        if vmax < 0 or dt <= 0:
            raise ValueError("need vmax >= 0 and dt > 0")
        q = vmax * dt
        return cls(np.eye(dim), make_interval(-q * np.ones(dim), q * np.ones(dim)))


@dataclass(frozen=True)
class MeasurementSet:
    set: ConstrainedZonotope
    sensor_id: int
    timestep: int


@dataclass(frozen=True)
class SensorEstimateState:
    estimate: ConstrainedZonotope
    confidence: float
    last_measurement_step: int
    last_measured_volume: float
    step: int = 0
    fallback: bool = False  # estimate was reset to the raw measurement

    def __post_init__(self):
        if not 0.0 <= self.confidence <= 1.0:
            raise ValueError(f"confidence {self.confidence} outside [0, 1]")
        if self.last_measurement_step > self.step:
            raise ValueError("last measurement step lies in the future")
        if self.last_measured_volume < 0:
            raise ValueError("negative volume")


def area(Z: ConstrainedZonotope) -> float:
    """Area of a planar set, raising :class:`EmptySetError` when empty."""
    return max(vertices_2d(Z).area, 0.0)


def initial_state(X0: ConstrainedZonotope, step: int = 0) -> SensorEstimateState:
    """Estimator memory before any measurement: confidence 1, ``t* = step``."""
    return SensorEstimateState(X0, 1.0, step, area(X0), step)


def predict(prev: SensorEstimateState, model: MotionModel) -> ConstrainedZonotope:
    if prev.estimate.dim != model.F.shape[1]:
        raise ValueError(f"estimate of dimension {prev.estimate.dim} vs model of dimension {model.F.shape[1]}")
    return minkowski_sum(affine_map(model.F, None, prev.estimate), model.Q)


def _update(pred, meas, on_empty):
    if pred.dim != meas.set.dim:
        raise ValueError("prediction and measurement differ in dimension")
    pred_vol = area(pred)
    if pred_vol <= 0.0:
        raise DegeneratePredictionError("predicted set has zero area")
    est = generalized_intersection(pred, meas.set)
    try:
        est_vol = area(est)
    except EmptySetError:
        if on_empty == "measurement":
            return meas.set, 0.0, True, area(meas.set)
        return pred, 0.0, True, pred_vol
    return est, min(est_vol / pred_vol, 1.0), False, est_vol


def update(pred: ConstrainedZonotope, meas: MeasurementSet, on_empty: str = "measurement"):
    """Intersect a prediction with a measurement; return ``(estimate, confidence)``.

    An empty intersection resets the estimate to the measurement set (or keeps
    the prediction when ``on_empty="prediction"``) with confidence 0.
    """
    if on_empty not in ("measurement", "prediction"):
        raise ValueError(f"on_empty must be 'measurement' or 'prediction', got {on_empty!r}")
    est, conf, _, _ = _update(pred, meas, on_empty)
    return est, conf


def step(
    state: SensorEstimateState,
    meas: MeasurementSet | None,
    model: MotionModel,
    t: int,
    on_empty: str = "measurement",
) -> SensorEstimateState:
    """Advance one estimator from ``t - 1`` to ``t``."""
    if t != state.step + 1:
        raise ValueError(f"estimator at step {state.step} cannot jump to step {t}")
    pred = predict(state, model)
    if meas is not None:
        est, conf, fallback, est_vol = _update(pred, meas, on_empty)
        return SensorEstimateState(est, conf, t, est_vol, t, fallback)
    pred_vol = area(pred)
    if pred_vol <= 0.0:
        raise DegeneratePredictionError("predicted set has zero area")
    conf = min(state.last_measured_volume / pred_vol, 1.0)
    return replace(state, estimate=pred, confidence=conf, step=t, fallback=False)
