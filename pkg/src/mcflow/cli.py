"""Command line entry point: ``mcflow run | diagnose | rescale | report``."""
from __future__ import annotations

import argparse
import json
import logging
import sys
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

import numpy as np

from . import diagnostics as dg
from . import flow, rescaling
from .scenario import (
    OPERATIONS,
    ConfigError,
    Context,
    DiagnosticRequest,
    ScenarioConfig,
    _jsonable,
    _write_series,
    bundled_scenarios,
    emit_report,
    run_operation,
    run_scenario,
    singular_point,
)


def _floats(text: str) -> list[float]:
    try:
        return [float(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}")


def _run_one(args):
    path, out = args
    cfg = ScenarioConfig.load(path)
    report = run_scenario(cfg, out)
    return cfg.name, out, report.get("errors", [])


def cmd_run(ns) -> int:
    configs = [ScenarioConfig.load(p) for p in ns.config]  # validate everything up front
    out = Path(ns.out)
    if len(configs) == 1:
        jobs = [(ns.config[0], out)]
    else:
        jobs = [(p, out / c.name) for p, c in zip(ns.config, configs)]
    if ns.jobs > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(ns.jobs) as pool:
            results = list(pool.map(_run_one, jobs))
    else:
        results = [_run_one(j) for j in jobs]
    status = 0
    for name, bundle, errors in results:
        print(emit_report(bundle) if not errors else f"scenario {name}: " + "; ".join(errors))
        status |= bool(errors)
    return status


def cmd_diagnose(ns) -> int:
    track = flow.read_track(ns.track)
    params = json.loads(ns.params)
    point = params.pop("point", "singular")
    if ns.op not in OPERATIONS:
        raise ConfigError(f"--op: unknown operation {ns.op!r}")
    sp, prov, est = singular_point(track, track.solution)
    req = DiagnosticRequest(ns.op, ns.op, params, point)
    entry, series = run_operation(Context(track, sp, prov, est), req)
    if ns.csv and series is not None:
        _write_series(Path(ns.csv), series)
    print(json.dumps(_jsonable(entry), indent=1, sort_keys=True))
    return 1 if entry["error"] else 0


def cmd_rescale(ns) -> int:
    track = flow.read_track(ns.track)
    sp = dg.SpacetimePoint(np.asarray(ns.center, float), ns.T)
    out = Path(ns.out) if ns.out else Path(ns.track) / "rescaled"
    for lam in ns.lambdas:
        rt = rescaling.parabolic_dilate(track, sp, lam)
        target = out / f"lambda_{lam:g}"
        flow.write_track(rt, target, {"s": rt.times})
        print(target)
    return 0


def cmd_report(ns) -> int:
    print(emit_report(ns.bundle))
    return 0


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="mcflow", description="Mean curvature flow scenarios and diagnostics.")
    ap.add_argument("-v", "--verbose", action="store_true")
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("run", help="run scenario configs (paths or bundled names)")
    p.add_argument("--config", nargs="+", required=True, help=f"JSON file or one of {bundled_scenarios()}")
    p.add_argument("--out", required=True)
    p.add_argument("--jobs", type=int, default=1)
    p.set_defaults(func=cmd_run)

    p = sub.add_parser("diagnose", help="run one diagnostic on a stored track")
    p.add_argument("--track", required=True)
    p.add_argument("--op", required=True, choices=sorted(OPERATIONS))
    p.add_argument("--params", default="{}", help='JSON object; "point": {"y0": [...], "T": ...} selects the point')
    p.add_argument("--csv", help="write the series output here")
    p.set_defaults(func=cmd_diagnose)

    p = sub.add_parser("rescale", help="parabolically rescale a stored track")
    p.add_argument("--track", required=True)
    p.add_argument("--lambda", dest="lambdas", type=_floats, required=True)
    p.add_argument("--center", type=_floats, required=True)
    p.add_argument("--T", type=float, required=True)
    p.add_argument("--out")
    p.set_defaults(func=cmd_rescale)

    p = sub.add_parser("report", help="summarize a bundle")
    p.add_argument("--bundle", required=True)
    p.set_defaults(func=cmd_report)
    return ap


def main(argv=None) -> int:
    ns = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if ns.verbose else logging.WARNING, format="%(levelname)s %(name)s: %(message)s")
    try:
        return ns.func(ns)
    except (ConfigError, FileNotFoundError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
