"""Acceptance criteria, one test and one reported pass/fail line each."""

import time
from dataclasses import replace
from pathlib import Path

import numpy as np
import pytest

from conftest import ACCEPTANCE_LINES
from hzfusion.cli import cmd_simulate, parse_config, preset_path
from hzfusion.estimator import MeasurementSet, MotionModel, initial_state, step, update
from hzfusion.geometry import is_empty
from hzfusion.scenario import run_simulation
from hzfusion.selfcheck import counts_suite, membership_suite, pointwise_suite, volume_suite
from hzfusion.zonoset import generalized_intersection, make_interval


def report(number: int, ok: bool, detail: str):
    ACCEPTANCE_LINES.append(f"criterion {number}: {'PASS' if ok else 'FAIL'}  {detail}")
    print(ACCEPTANCE_LINES[-1])
    assert ok, detail


@pytest.fixture(scope="module")
def preset_runs():
    runs = {}
    for name in ("case1", "case2", "case3"):
        cfg = parse_config(preset_path(name))
        tic = time.perf_counter()
        trace = run_simulation(cfg)
        runs[name] = (cfg, trace, time.perf_counter() - tic)
    return runs


def test_criterion_1_fused_counts():
    tic = time.perf_counter()
    ok, detail = counts_suite(np.random.default_rng(1), trials=100)
    elapsed = time.perf_counter() - tic
    report(1, ok and elapsed < 5.0, f"fused-set counts, {detail}, {elapsed:.2f} s (limit 5 s)")


def test_criterion_2_pointwise_confidence():
    tic = time.perf_counter()
    ok, detail = pointwise_suite(np.random.default_rng(2), points=510, tol=1e-6)
    elapsed = time.perf_counter() - tic
    report(2, ok and elapsed < 60.0, f"pointwise confidence oracle, {detail}, {elapsed:.1f} s (limit 60 s)")


def test_criterion_3_iou_confidence():
    pred = make_interval([0, 0], [2, 2])
    _, c_quarter = update(pred, MeasurementSet(make_interval([1, 1], [3, 3]), 0, 1))
    _, c_full = update(pred, MeasurementSet(make_interval([-1, -1], [3, 3]), 0, 1))
    ok = abs(c_quarter - 0.25) <= 1e-9 and abs(c_full - 1.0) <= 1e-9
    report(3, ok, f"IoU confidence 0.25 -> {c_quarter!r}, 1 -> {c_full!r} (tol 1e-9)")


def test_criterion_4_volume():
    ok, detail = volume_suite(np.random.default_rng(4), sets=50, samples=10**6, rtol=0.01)
    report(4, ok, f"area vs Monte-Carlo on 50 sets, {detail}")


def test_criterion_5_membership():
    ok, detail = membership_suite(np.random.default_rng(5), trials=50, samples=1000, lp_samples=20, tol=1e-7)
    report(5, ok, f"set-operation membership, {detail}")


def _pairwise_disjoint(record) -> bool:
    ests = [s.estimate for s in record.sensors if s.active]
    return len(ests) >= 2 and all(
        is_empty(generalized_intersection(a, b)) for i, a in enumerate(ests) for b in ests[i + 1 :]
    )


def test_criterion_6_closed_loop(preset_runs):
    problems = []
    summary = []
    for name, (cfg, trace, elapsed) in preset_runs.items():
        speeds = [cfg.ego.speed] + [r.ego_speed for r in trace]
        edge = float(cfg.crosswalk.lower[0])
        if any(b > a for a, b in zip(speeds, speeds[1:])):
            problems.append(f"{name}: speed increased")
        if speeds[-1] >= 0.01:
            problems.append(f"{name}: final speed {speeds[-1]:.3g}")
        if any(edge - r.ego_position <= 0 for r in trace):
            problems.append(f"{name}: ego reached the crosswalk")
        if len(trace) > 100 or elapsed >= 30.0:
            problems.append(f"{name}: {len(trace)} steps in {elapsed:.1f} s")
        summary.append(f"{name} stops {edge - trace[-1].ego_position:.2f} m short in {len(trace)} steps ({elapsed:.1f} s)")
        if name == "case3":
            disjoint = [r.t for r in trace if _pairwise_disjoint(r)]
            crossing = [r.t for r in trace if r.c_cross > 0.5]
            if not disjoint:
                problems.append("case3: estimates never pairwise disjoint")
            if not crossing:
                problems.append("case3: c_cross never above 0.5")
            summary.append(
                f"case3 disjoint at {len(disjoint)} steps, max c_cross {max(r.c_cross for r in trace):.3f}"
            )
    report(6, not problems, "; ".join(problems or summary))


def test_criterion_7_missing_measurements():
    # estimator alone: initial state, then ten steps without any measurement
    model = MotionModel.isotropic(2.0, 0.1)
    state = initial_state(make_interval([0, 0], [1, 1]))
    conf = [state.confidence]
    for t in range(1, 11):
        state = step(state, None, model, t)
        conf.append(state.confidence)
    # closed loop with every sensor dropping every measurement
    cfg = parse_config(preset_path("case1"))
    cfg = replace(cfg, horizon_steps=10, sensors=tuple(replace(s, drop_probability=1.0) for s in cfg.sensors))
    trace = run_simulation(cfg)
    loop = np.array([[1.0] * len(cfg.sensors)] + [[s.confidence for s in r.sensors] for r in trace])
    ok = bool(np.all(np.diff(conf) < 0)) and len(trace) == 10 and bool(np.all(np.diff(loop, axis=0) < 0))
    report(
        7,
        ok,
        f"10 dropped steps: estimator {conf[0]:.3f} -> {conf[-1]:.3f}, "
        f"closed loop {loop[0].min():.3f} -> {loop[-1].max():.3f}, strictly decreasing",
    )


def test_criterion_8_step_time(preset_runs):
    times = [r.step_seconds for _, trace, _ in preset_runs.values() for r in trace if sum(s.active for s in r.sensors) == 3]
    worst, mean = max(times), float(np.mean(times))
    report(8, worst <= 0.3, f"n=3 estimation+fusion step: mean {mean:.3f} s, max {worst:.3f} s over {len(times)} steps (limit 0.3 s)")


def test_criterion_9_determinism(tmp_path):
    same = []
    for name in ("case1", "case2", "case3"):
        a, b = tmp_path / f"{name}_a", tmp_path / f"{name}_b"
        cmd_simulate(preset_path(name), a, grid_steps=[])
        cmd_simulate(preset_path(name), b, grid_steps=[])
        same.append(Path(a, "trace.csv").read_bytes() == Path(b, "trace.csv").read_bytes())
    report(9, all(same), f"byte-identical trace.csv on rerun: {dict(zip(('case1', 'case2', 'case3'), same))}")
