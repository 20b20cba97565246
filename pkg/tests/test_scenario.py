from dataclasses import replace

import numpy as np
import pytest
from scipy.special import expit

from hzfusion.cli import parse_config, preset_path
from hzfusion.estimator import area
from hzfusion.geometry import contains_point, is_empty, support
from hzfusion.scenario import (
    EgoControllerParams,
    PedestrianSpec,
    SensorSpec,
    controller_speed,
    ev_reachable_set,
    pedestrian_position,
    pedestrian_step,
    run_simulation,
    sensor_measure,
)
from hzfusion.zonoset import generalized_intersection


@pytest.fixture(scope="module")
def case1():
    return parse_config(preset_path("case1"))


@pytest.fixture(scope="module")
def traces():
    out = {}
    for name in ("case1", "case2"):
        cfg = parse_config(preset_path(name))
        out[name] = (cfg, run_simulation(cfg))
    return out


def test_stationary_pedestrian(case1):
    cfg = replace(case1, pedestrian=PedestrianSpec(((1.0, 2.0), (5.0, 2.0)), 0.0))
    assert np.allclose(pedestrian_step([1.0, 2.0], cfg, 7), [1.0, 2.0])


def test_pedestrian_step_length(case1):
    cfg = replace(case1, pedestrian=PedestrianSpec(((0.0, 0.0), (10.0, 0.0)), 1.0), process_vmax=1.0)
    p = pedestrian_step([0.0, 0.0], cfg, 1)
    assert np.allclose(p, [0.1, 0.0])


def test_pedestrian_follows_polyline(case1):
    spec = PedestrianSpec(((0.0, 0.0), (1.0, 0.0), (1.0, 2.0)), 1.0)
    cfg = replace(case1, pedestrian=spec, process_vmax=1.0)
    p = pedestrian_position(spec, 0, cfg.dt)
    for t in range(1, 40):
        p = pedestrian_step(p, cfg, t)
        s = min(0.1 * t, 3.0)
        expect = np.array([s, 0.0]) if s <= 1 else np.array([1.0, s - 1.0])
        assert np.allclose(p, expect, atol=1e-12)


def test_measurement_without_noise():
    m = sensor_measure([3.0, 4.0], SensorSpec("a", 0.5), np.random.default_rng(0), 1)
    assert np.allclose(m.set.center, [3, 4]) and np.allclose(m.set.generators, 0.5 * np.eye(2))


def test_measurement_bias():
    m = sensor_measure([3.0, 4.0], SensorSpec("a", 0.5, bias=(2.0, 0.0)), np.random.default_rng(0), 1)
    assert np.allclose(m.set.center, [5, 4])


def test_measurement_noise_bounded():
    rng = np.random.default_rng(3)
    spec = SensorSpec("a", 0.5, noise_half_width=0.15)
    for t in range(1, 200):
        m = sensor_measure([0.0, 0.0], spec, rng, t)
        assert np.all(np.abs(m.set.center) <= 0.15)


def test_measurement_drop_and_rate():
    rng = np.random.default_rng(0)
    assert all(sensor_measure([0, 0], SensorSpec("a", drop_probability=1.0), rng, t) is None for t in range(1, 50))
    spec = SensorSpec("a", rate_divisor=2)
    got = [sensor_measure([0, 0], spec, rng, t) is not None for t in range(1, 7)]
    assert got == [False, True, False, True, False, True]


def test_measurement_visibility_window():
    spec = SensorSpec("a", visible_from=3, visible_until=4)
    rng = np.random.default_rng(0)
    got = [sensor_measure([0, 0], spec, rng, t) is not None for t in range(1, 7)]
    assert got == [False, False, True, True, False, False]


def test_sensor_spec_validation():
    with pytest.raises(ValueError):
        SensorSpec("a", drop_probability=1.5)
    with pytest.raises(ValueError):
        SensorSpec("a", rate_divisor=0)


def test_reachable_set():
    assert area(ev_reachable_set(0.0, 0.0, 2.0, (-3.5, 0.0))) == 0.0
    R = ev_reachable_set(5.0, 10.0, 2.0, (-3.5, 0.0))
    assert support(R, [1, 0]) - 5.0 == pytest.approx(20.0)
    assert support(R, [0, 1]) == pytest.approx(0.0) and support(R, [0, -1]) == pytest.approx(3.5)


def test_controller_params():
    p = EgoControllerParams()
    assert (p.k(0.3), p.d(0.3)) == (0.3, 5.0)
    assert (p.k(0.5), p.d(0.5)) == (0.6, 10.0)
    assert (p.k(0.79), p.d(0.79)) == (0.6, 10.0)
    assert (p.k(0.9), p.d(0.9)) == (1.0, 15.0)


def test_controller_sigmoid_midpoint():
    assert controller_speed(10.0, 0.0, 0.9, 100.0, 15.0) == pytest.approx(5.0)


def test_controller_far_away():
    v = controller_speed(20.0, 0.0, 0.9, 40.0, 40.0)
    expect = min(20 * expit(0.3 * (40 - 5)), 20 * expit(1.0 * (40 - 15)))
    assert v == pytest.approx(expect, rel=1e-15)
    assert v < 20.0


def test_controller_never_accelerates():
    rng = np.random.default_rng(0)
    for _ in range(200):
        v = rng.uniform(0, 30)
        assert 0.0 <= controller_speed(v, *rng.uniform(0, 1, 2), *rng.uniform(-10, 60, 2)) <= v


def test_enclosure_of_truth(traces):
    for cfg, trace in traces.values():
        for r in trace:
            for s in r.sensors:
                if s.active and not s.fallback:
                    assert contains_point(s.estimate, r.pedestrian, tol=1e-9)


def test_reach_confidence_zero_when_disjoint(traces):
    for cfg, trace in traces.values():
        v = cfg.ego.speed
        x = cfg.ego.position
        for r in trace:
            reach = ev_reachable_set(x, v, cfg.ego.horizon, cfg.ego.lane)
            if all(is_empty(generalized_intersection(reach, s.estimate)) for s in r.sensors if s.active):
                assert r.c_reach == 0.0
            v, x = r.ego_speed, r.ego_position


def test_reachable_set_inside_lane(traces):
    cfg, trace = traces["case1"]
    for r in trace:
        R = ev_reachable_set(r.ego_position, r.ego_speed, cfg.ego.horizon, cfg.ego.lane)
        assert support(R, [0, 1]) <= cfg.ego.lane[1] + 1e-12
        assert -support(R, [0, -1]) >= cfg.ego.lane[0] - 1e-12


def test_confidences_in_range(traces):
    for _, trace in traces.values():
        for r in trace:
            assert 0 <= r.c_cross <= 1 and 0 <= r.c_reach <= 1
            assert all(0 <= s.confidence <= 1 for s in r.sensors)


def test_run_is_deterministic(case1):
    cfg = replace(case1, horizon_steps=5)
    a, b = run_simulation(cfg), run_simulation(cfg)
    assert [(r.ego_position, r.c_cross, r.pedestrian) for r in a] == [(r.ego_position, r.c_cross, r.pedestrian) for r in b]


def test_config_rejects_fast_pedestrian(case1):
    with pytest.raises(ValueError):
        replace(case1, pedestrian=PedestrianSpec(((0, 0), (1, 0)), 5.0))
