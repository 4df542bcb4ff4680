"""Command-line entry point: ``weaklab run|validate|audit-gallery|list-presets``.

Exit codes: 0 success, 1 validation failure, 2 physics-flag failure,
3 runtime error.
"""

import argparse
import logging
import sys

from .errors import ScenarioError, WeakLabError

EXIT_OK, EXIT_VALIDATION, EXIT_PHYSICS, EXIT_RUNTIME = 0, 1, 2, 3

log = logging.getLogger("weaklab")


def _load(path, seed=None):
    from .scenario import load_scenario

    scenario = load_scenario(path)
    if seed is not None:
        scenario = scenario.model_copy(update={"seed": seed})
    return scenario


def cmd_validate(args):
    try:
        scenario = _load(args.file)
    except ScenarioError as exc:
        print(exc, file=sys.stderr)
        return EXIT_VALIDATION
    n = len(scenario.pointers) * len(scenario.sweep.values())
    print(f"{args.file}: ok ({scenario.engine}, {n} cells)")
    return EXIT_OK


def cmd_run(args):
    from .runner import physics_flags_ok, run_scenario, write_report

    try:
        scenario = _load(args.file, args.seed)
    except ScenarioError as exc:
        print(exc, file=sys.stderr)
        return EXIT_VALIDATION
    try:
        report = run_scenario(scenario, workers=args.workers)
    except WeakLabError as exc:
        print(f"runtime error: {exc}", file=sys.stderr)
        return EXIT_RUNTIME
    out_dir = args.out or scenario.output.dir
    csv_path, json_path = write_report(report, out_dir, scenario.output.stem)
    print(f"wrote {csv_path} and {json_path} ({len(report['records'])} records)")
    for fit in report["fits"]:
        print(f"  slope {fit['quantity']:<15} pointer={fit['pointer']:<14} outcome={fit['outcome']}: "
              f"{fit['slope']:.3f} +- {fit['slope_ci95']:.3f} (r2={fit['r_squared']:.4f})")
    if not physics_flags_ok(report):
        print("physics flag failure: a pointer with nonvanishing current was used", file=sys.stderr)
        return EXIT_PHYSICS
    return EXIT_OK


def cmd_audit(args):
    from .runner import gallery_audit

    rows = gallery_audit(n_points=args.n_points)
    print(f"{'engine':<10}{'pointer':<15}{'purity':>10}{'std':>10}{'current':>12}  verdict   expected")
    for r in rows:
        verdict = "valid" if r["zero_current"] else "INVALID"
        expected = "valid" if r["expected_zero_current"] else "invalid"
        mark = "" if r["ok"] else "  <-- MISMATCH"
        print(f"{r['engine']:<10}{r['pointer']:<15}{r['purity']:>10.4f}{r['std']:>10.4f}"
              f"{r['current_max']:>12.3e}  {verdict:<9} {expected}{mark}")
    return EXIT_OK if all(r["ok"] for r in rows) else EXIT_PHYSICS


def cmd_list(args):
    from .classical import OBSERVABLES
    from .gallery import (CLASSICAL_OBJECT_PRESETS, CLASSICAL_POINTER_PRESETS, OBJECT_PRESETS,
                          POINTER_PRESETS)

    print("quantum pointer presets:")
    for p in POINTER_PRESETS.values():
        params = ", ".join(f"{k}={v}" for k, v in p.parameters.items())
        print(f"  {p.name:<14} ({params}) zero-current={p.expected_zero_current}  {p.description}")
    print("quantum object presets:")
    for p in OBJECT_PRESETS.values():
        wv = ", ".join(f"{w.real:+.6f}{w.imag:+.6f}j" for w in p.reference_weak_values)
        print(f"  {p.name:<14} weak values [{wv}]  {p.note}")
    print("classical object presets:")
    for name, dens in CLASSICAL_OBJECT_PRESETS.items():
        print(f"  {name:<14} correlation={dens.correlation}")
    print("classical pointer presets:")
    for name, (dens, ok) in CLASSICAL_POINTER_PRESETS.items():
        print(f"  {name:<14} mean_P={dens.mean_y} correlation={dens.correlation} zero-current={ok}")
    print("classical observables: " + ", ".join(sorted(OBSERVABLES)))
    return EXIT_OK


def build_parser():
    parser = argparse.ArgumentParser(prog="weaklab", description=__doc__.splitlines()[0])
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("run", help="run a scenario file")
    p.add_argument("file")
    p.add_argument("--workers", type=int, default=1)
    p.add_argument("--out", default=None, help="output directory (overrides the scenario)")
    p.add_argument("--seed", type=int, default=None, help="override the scenario seed")
    p.set_defaults(func=cmd_run)

    p = sub.add_parser("validate", help="validate a scenario file without running it")
    p.add_argument("file")
    p.set_defaults(func=cmd_validate)

    p = sub.add_parser("audit-gallery", help="check every pointer preset's current verdict")
    p.add_argument("--n-points", type=int, default=1024)
    p.set_defaults(func=cmd_audit)

    p = sub.add_parser("list-presets", help="list object and pointer presets")
    p.set_defaults(func=cmd_list)
    return parser


def main(argv=None):
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except WeakLabError as exc:
        print(f"runtime error: {exc}", file=sys.stderr)
        return EXIT_RUNTIME
