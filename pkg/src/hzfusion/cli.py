"""Command-line front end.

``hzfusion simulate --config case1.json --out run/`` runs the closed loop and
writes:

``trace.csv``
    One row per step. Columns, in order: ``t, time, ped_x, ped_y, ego_x,
    ego_speed, d_reach, d_cross, c_reach, c_cross, n_active``, then for each
    sensor ``<name>_active, <name>_measured, <name>_confidence,
    <name>_fallback``.
``sets.jsonl``
    One JSON object per step with every sensor's measurement and estimate in
    the set-record format, plus the fused set's inputs (feasible space and
    confidences) from which it is rebuilt exactly.
``grid_<t>.csv``
    Confidence grid over the feasible space at each requested step.
``manifest.json``
    Config path, seed, output directory and SHA-256 of every artifact.

``hzfusion selfcheck`` runs the brute-force oracle suites.
Exit codes: 0 success, 1 invalid input, 2 runtime failure, 3 self-check failure.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import logging
import sys
import time
from pathlib import Path

import numpy as np

from .scenario import (
    EgoSpec,
    PedestrianSpec,
    ScenarioConfig,
    SensorSpec,
    TraceRecord,
    run_simulation,
)
from .zonoset import Interval, to_record

log = logging.getLogger("hzfusion")

EXIT_OK, EXIT_INVALID, EXIT_RUNTIME, EXIT_SELFCHECK = 0, 1, 2, 3


class ConfigError(ValueError):
    """Invalid configuration; ``errors`` lists one message per offending field."""

    def __init__(self, errors):
        self.errors = list(errors)
        super().__init__("; ".join(self.errors))


# -- config schema -----------------------------------------------------------

_NUM, _INT, _STR, _BOOL = "number", "integer", "string", "boolean"

_SENSOR = {
    "name": (_STR, True),
    "measurement_half_width": (_NUM, False),
    "noise_half_width": (_NUM, False),
    "bias": (("vector", 2), False),
    "drop_probability": (_NUM, False),
    "rate_divisor": (_INT, False),
    "visible_from": (_INT, False),
    "visible_until": (_INT, False),
}
_BOX = {"lower": (("vector", 2), True), "upper": (("vector", 2), True)}
_SCHEMA = {
    "name": (_STR, True),
    "dt": (_NUM, False),
    "horizon_steps": (_INT, False),
    "seed": (_INT, False),
    "process_vmax": (_NUM, False),
    "feasible_margin": (_NUM, False),
    "stop_speed": (_NUM, False),
    "on_empty": (_STR, False),
    "grid_resolution": (_INT, False),
    "grid_steps": (("list", _INT), False),
    "road": (("vector", 2), False),
    "pedestrian": ({"waypoints": (("points", 2), True), "speed": (_NUM, True)}, True),
    "ego": (
        {
            "position": (_NUM, False),
            "speed": (_NUM, False),
            "lane": (("vector", 2), False),
            "horizon": (_NUM, False),
        },
        False,
    ),
    "occluded_region": (_BOX, True),
    "crosswalk": (_BOX, True),
    "sensors": (("records", _SENSOR), True),
}


def _is_num(v) -> bool:
    return isinstance(v, (int, float)) and not isinstance(v, bool) and np.isfinite(v)


def _describe(v) -> str:
    return f"{type(v).__name__} {json.dumps(v)[:40]}"


def _check(value, kind, path: str, errors: list):
    if isinstance(kind, dict):
        if not isinstance(value, dict):
            errors.append(f"{path}: expected object, got {_describe(value)}")
            return
        for key in value:
            if key not in kind:
                errors.append(f"{path}.{key}: unknown key" if path else f"{key}: unknown key")
        for key, (sub, required) in kind.items():
            where = f"{path}.{key}" if path else key
            if key not in value:
                if required:
                    errors.append(f"{where}: missing required field")
                continue
            _check(value[key], sub, where, errors)
        return
    if kind == _NUM and not _is_num(value):
        errors.append(f"{path}: expected number, got {_describe(value)}")
    elif kind == _INT and not (isinstance(value, int) and not isinstance(value, bool)):
        errors.append(f"{path}: expected integer, got {_describe(value)}")
    elif kind == _STR and not isinstance(value, str):
        errors.append(f"{path}: expected string, got {_describe(value)}")
    elif isinstance(kind, tuple):
        tag, arg = kind
        if not isinstance(value, list):
            errors.append(f"{path}: expected list, got {_describe(value)}")
            return
        if tag == "vector":
            if len(value) != arg or not all(_is_num(v) for v in value):
                errors.append(f"{path}: expected {arg} numbers, got {_describe(value)}")
        elif tag == "points":
            if not value:
                errors.append(f"{path}: expected at least one point")
            for i, p in enumerate(value):
                _check(p, ("vector", arg), f"{path}[{i}]", errors)
        elif tag == "list":
            for i, v in enumerate(value):
                _check(v, arg, f"{path}[{i}]", errors)
        elif tag == "records":
            if not value:
                errors.append(f"{path}: expected at least one entry")
            for i, v in enumerate(value):
                _check(v, arg, f"{path}[{i}]", errors)


def _ranges(doc: dict, errors: list):
    # value checks that name the field; the dataclasses re-check as a backstop
    def need(cond, where, msg):
        if not cond:
            errors.append(f"{where}: {msg}")

    if "dt" in doc:
        need(doc["dt"] > 0, "dt", f"expected > 0, got {doc['dt']}")
    if "horizon_steps" in doc:
        need(doc["horizon_steps"] >= 1, "horizon_steps", f"expected >= 1, got {doc['horizon_steps']}")
    if "process_vmax" in doc:
        need(doc["process_vmax"] > 0, "process_vmax", f"expected > 0, got {doc['process_vmax']}")
    if "on_empty" in doc:
        need(doc["on_empty"] in ("measurement", "prediction"), "on_empty", "expected 'measurement' or 'prediction'")
    if "grid_resolution" in doc:
        need(doc["grid_resolution"] >= 2, "grid_resolution", "expected >= 2")
    ego = doc.get("ego", {})
    if "horizon" in ego:
        need(ego["horizon"] > 0, "ego.horizon", f"expected > 0, got {ego['horizon']}")
    if "speed" in ego:
        need(ego["speed"] >= 0, "ego.speed", f"expected >= 0, got {ego['speed']}")
    for name in ("occluded_region", "crosswalk"):
        box = doc.get(name, {})
        if "lower" in box and "upper" in box:
            need(all(a <= b for a, b in zip(box["lower"], box["upper"])), name, "lower exceeds upper")
    for i, s in enumerate(doc.get("sensors", [])):
        where = f"sensors[{i}]"
        if "drop_probability" in s:
            need(0 <= s["drop_probability"] <= 1, f"{where}.drop_probability", "expected a value in [0, 1]")
        if "measurement_half_width" in s:
            need(s["measurement_half_width"] > 0, f"{where}.measurement_half_width", "expected > 0")
        if "noise_half_width" in s:
            need(s["noise_half_width"] >= 0, f"{where}.noise_half_width", "expected >= 0")
        if "rate_divisor" in s:
            need(s["rate_divisor"] >= 1, f"{where}.rate_divisor", "expected >= 1")


def config_from_dict(doc: dict) -> tuple[ScenarioConfig, list[int]]:
    """Validate a config document; return the config and its grid snapshot steps."""
    errors: list[str] = []
    _check(doc, _SCHEMA, "", errors)
    if not errors:
        _ranges(doc, errors)
    if errors:
        raise ConfigError(errors)
    kw = {k: doc[k] for k in ScenarioConfig.__dataclass_fields__ if k in doc and not isinstance(doc[k], dict)}
    kw.pop("sensors", None)
    try:
        cfg = ScenarioConfig(
            pedestrian=PedestrianSpec(tuple(map(tuple, doc["pedestrian"]["waypoints"])), doc["pedestrian"]["speed"]),
            sensors=tuple(SensorSpec(**s) for s in doc["sensors"]),
            occluded_region=Interval(doc["occluded_region"]["lower"], doc["occluded_region"]["upper"]),
            crosswalk=Interval(doc["crosswalk"]["lower"], doc["crosswalk"]["upper"]),
            ego=EgoSpec(**doc.get("ego", {})),
            **kw,
        )
    except ValueError as exc:
        raise ConfigError([str(exc)]) from None
    return cfg, list(doc.get("grid_steps", []))


def parse_config(path) -> ScenarioConfig:
    return load_config(path)[0]


def load_config(path):
    path = Path(path)
    if not path.is_file():
        raise ConfigError([f"{path}: no such file"])
    try:
        doc = json.loads(path.read_text())
    except json.JSONDecodeError as exc:
        raise ConfigError([f"{path}: invalid JSON ({exc})"]) from None
    return config_from_dict(doc)


def preset_path(name: str) -> Path:
    """Location of a bundled preset such as ``case1``."""
    return Path(__file__).with_name("presets") / f"{name}.json"


# -- simulate ----------------------------------------------------------------


def _fmt(v) -> str:
    return repr(float(v))


def trace_header(cfg: ScenarioConfig) -> list[str]:
    cols = ["t", "time", "ped_x", "ped_y", "ego_x", "ego_speed", "d_reach", "d_cross", "c_reach", "c_cross", "n_active"]
    for s in cfg.sensors:
        cols += [f"{s.name}_active", f"{s.name}_measured", f"{s.name}_confidence", f"{s.name}_fallback"]
    return cols


def trace_row(rec: TraceRecord, cfg: ScenarioConfig) -> list[str]:
    row = [
        str(rec.t),
        _fmt(rec.t * cfg.dt),
        _fmt(rec.pedestrian[0]),
        _fmt(rec.pedestrian[1]),
        _fmt(rec.ego_position),
        _fmt(rec.ego_speed),
        _fmt(rec.d_reach),
        _fmt(rec.d_cross),
        _fmt(rec.c_reach),
        _fmt(rec.c_cross),
        str(sum(s.active for s in rec.sensors)),
    ]
    for s in rec.sensors:
        row += [str(int(s.active)), str(int(s.measured)), _fmt(s.confidence), str(int(s.fallback))]
    return row


def sets_line(rec: TraceRecord, cfg: ScenarioConfig) -> str:
    obj = {
        "t": rec.t,
        "sensors": [
            {
                "name": spec.name,
                "measurement": to_record(s.measurement.set) if s.measurement is not None else None,
                "estimate": to_record(s.estimate) if s.estimate is not None else None,
                "confidence": s.confidence,
            }
            for spec, s in zip(cfg.sensors, rec.sensors)
        ],
        "fused": None
        if rec.fused is None
        else {
            "n": rec.fused.n,
            "source_confidences": list(rec.fused.source_confidences),
            "feasible_space": to_record(rec.feasible_space.set),
        },
    }
    return json.dumps(obj, separators=(",", ":"))


def _sha256(path: Path) -> str:
    return hashlib.sha256(path.read_bytes()).hexdigest()


def cmd_simulate(config_path, outdir, seed=None, grid_steps=None) -> dict:
    """Run a scenario and write its artifacts; returns the manifest."""
    from .fusion import confidence_grid, write_grid_csv
    from .geometry import interval_hull

    cfg, cfg_steps = load_config(config_path)
    if seed is not None:
        cfg = _replace(cfg, seed=seed)
    steps = sorted(set(cfg_steps if grid_steps is None else grid_steps))
    out = Path(outdir)
    out.mkdir(parents=True, exist_ok=True)

    trace_path, sets_path = out / "trace.csv", out / "sets.jsonl"
    written = [trace_path.name, sets_path.name]
    timings = []
    with open(trace_path, "w", newline="") as ft, open(sets_path, "w") as fs:
        ft.write(",".join(trace_header(cfg)) + "\n")

        def on_step(rec: TraceRecord):
            ft.write(",".join(trace_row(rec, cfg)) + "\n")
            fs.write(sets_line(rec, cfg) + "\n")
            timings.append(rec.step_seconds)
            if rec.t in steps and rec.fused is not None:
                bounds = interval_hull(rec.feasible_space.set)
                grid = confidence_grid(rec.fused, bounds, cfg.grid_resolution)
                name = f"grid_{rec.t}.csv"
                write_grid_csv(out / name, grid, bounds, cfg.grid_resolution)
                written.append(name)

        trace = run_simulation(cfg, on_step)

    missed = [t for t in steps if t > trace[-1].t]
    if missed:
        log.warning("run ended at step %d; no grid for steps %s", trace[-1].t, missed)
    manifest = {
        "config": str(config_path),
        "seed": cfg.seed,
        "output_dir": str(outdir),
        "steps": len(trace),
        "artifacts": [{"path": name, "sha256": _sha256(out / name)} for name in written],
    }
    (out / "manifest.json").write_text(json.dumps(manifest, indent=2) + "\n")
    log.info(
        "%d steps, final speed %.4g, mean step %.3f s, max step %.3f s",
        len(trace),
        trace[-1].ego_speed,
        float(np.mean(timings)),
        float(np.max(timings)),
    )
    return manifest


def _replace(cfg: ScenarioConfig, **changes) -> ScenarioConfig:
    from dataclasses import replace

    return replace(cfg, **changes)


# -- selfcheck ---------------------------------------------------------------


def cmd_selfcheck(volume_rtol: float = 0.01, seed: int = 0) -> dict:
    """Run each oracle suite; returns ``{suite: (passed, detail)}``."""
    from .selfcheck import run_suites

    return run_suites(volume_rtol=volume_rtol, seed=seed)


# -- entry point -------------------------------------------------------------


def _int_list(text: str) -> list[int]:
    try:
        return [int(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}") from None


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="hzfusion",
        description=__doc__.split("\n\n")[0],
        epilog=__doc__.split("\n", 2)[2],
        formatter_class=argparse.RawDescriptionHelpFormatter,
    )
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    sim = sub.add_parser("simulate", help="run a scenario and export its trace")
    sim.add_argument("--config", required=True, help="JSON config, or the name of a bundled preset")
    sim.add_argument("--out", required=True, help="output directory")
    sim.add_argument("--seed", type=int, default=None, help="override the config's seed")
    sim.add_argument("--grid-steps", type=_int_list, default=None, help="steps to export grids at, e.g. 5,10")

    chk = sub.add_parser("selfcheck", help="run the oracle suites")
    chk.add_argument("--volume-rtol", type=float, default=0.01, help="relative tolerance of the area suite")
    chk.add_argument("--seed", type=int, default=0)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_OK if exc.code == 0 else EXIT_INVALID
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(message)s")

    if args.command == "simulate":
        config = args.config
        if not Path(config).exists() and preset_path(config).exists():
            config = preset_path(config)
        try:
            manifest = cmd_simulate(config, args.out, args.seed, args.grid_steps)
        except ConfigError as exc:
            for err in exc.errors:
                print(f"config error: {err}", file=sys.stderr)
            return EXIT_INVALID
        except Exception as exc:  # noqa: BLE001 - any failure past validation is a runtime error
            print(f"simulation failed: {type(exc).__name__}: {exc}", file=sys.stderr)
            return EXIT_RUNTIME
        print(f"wrote {len(manifest['artifacts'])} artifacts to {args.out} ({manifest['steps']} steps)")
        return EXIT_OK

    tic = time.perf_counter()
    try:
        results = cmd_selfcheck(args.volume_rtol, args.seed)
    except Exception as exc:  # noqa: BLE001
        print(f"selfcheck crashed: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_RUNTIME
    for suite, (ok, detail) in results.items():
        print(f"{'PASS' if ok else 'FAIL'}  {suite}: {detail}")
    print(f"selfcheck finished in {time.perf_counter() - tic:.1f} s")
    return EXIT_OK if all(ok for ok, _ in results.values()) else EXIT_SELFCHECK


if __name__ == "__main__":
    sys.exit(main())
