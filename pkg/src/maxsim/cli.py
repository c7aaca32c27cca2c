"""Command-line interface: ``maxsim simulate | bench | presets``."""
from __future__ import annotations

import argparse
import os
import sys
from dataclasses import replace

from .bench import BUILDERS, BenchError, bench_scaling, write_timing_csv
from .scenario_file import ScenarioFileError, load_scenario
from .scenarios import PRESETS, preset
from .simulation import SimulationError, run_simulation

EXIT_SOLVER = 3
EXIT_USAGE = 2


def _load(target: str):
    if target in PRESETS:
        return preset(target)
    if os.path.exists(target):
        return load_scenario(target)
    raise ScenarioFileError(f"{target!r} is neither a preset ({', '.join(PRESETS)}) nor a file")


def _write_log(log, out):
    if out in (None, "-"):
        sys.stdout.write(log.to_csv())
    else:
        log.to_csv(out)


def cmd_simulate(args) -> int:
    try:
        scenario = _load(args.target)
    except (ScenarioFileError, OSError) as err:
        print(f"error: {err}", file=sys.stderr)
        return EXIT_USAGE
    settings = scenario.settings
    overrides = {k: v for k, v in (("dt", args.dt), ("eps", args.eps), ("mu0", args.mu0)) if v is not None}
    if overrides:
        try:
            settings = replace(settings, **overrides)
        except ValueError as err:
            print(f"error: {err}", file=sys.stderr)
            return EXIT_USAGE
    try:
        log = run_simulation(scenario, args.steps, settings)
    except SimulationError as err:
        _write_log(err.log, args.out)
        print(f"solver failed at step {err.step}: {err.cause}", file=sys.stderr)
        return EXIT_SOLVER
    _write_log(log, args.out)
    if args.plot:
        from .plotting import plot_trajectory

        plot_trajectory(log, args.plot, title=scenario.name)
    if args.out not in (None, "-"):
        phi = log.phi
        worst = f"{phi.min():.3e}" if phi.size else "n/a"
        print(f"{scenario.name}: {len(log) - 1} steps, max residual {max(log.residual):.3e}, "
              f"min signed distance {worst}", file=sys.stderr)
    return 0


def cmd_bench(args) -> int:
    if args.min > args.max or args.step < 1:
        print("error: need min <= max and step >= 1", file=sys.stderr)
        return EXIT_USAGE
    params = range(args.min, args.max + 1, args.step)

    def progress(rec):
        print(f"{args.kind} {rec.param}: {rec.best_seconds:.4f} s, {rec.total_newton_iters} iterations, "
              f"{rec.op_count} ops", file=sys.stderr)

    try:
        records = bench_scaling(args.kind, params, args.reps, args.steps, progress=progress)
    except BenchError as err:
        print(f"error: {err}", file=sys.stderr)
        return EXIT_SOLVER
    except ValueError as err:
        print(f"error: {err}", file=sys.stderr)
        return EXIT_USAGE
    write_timing_csv(records, args.out)
    if args.plot:
        from .plotting import plot_scaling

        plot_scaling(records, args.plot, args.kind)
    return 0


def cmd_presets(args) -> int:
    width = max(len(k) for k in PRESETS)
    for name, (_, desc) in PRESETS.items():
        print(f"{name:<{width}}  {desc}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="maxsim", description="Maximal-coordinate rigid-body contact simulator.")
    sub = ap.add_subparsers(dest="command", required=True)

    s = sub.add_parser("simulate", help="run a preset or a YAML scenario file")
    s.add_argument("target", help="preset name or scenario file")
    s.add_argument("--steps", type=int, help="number of steps (default: from the scenario)")
    s.add_argument("--dt", type=float, help="time step in seconds")
    s.add_argument("--out", help="trajectory CSV path (default: stdout)")
    s.add_argument("--eps", type=float, help="residual tolerance")
    s.add_argument("--mu0", type=float, help="initial barrier parameter")
    s.add_argument("--plot", help="also render signed distances and heights to this image file")
    s.set_defaults(func=cmd_simulate)

    b = sub.add_parser("bench", help="time scaling in contacts (cylinder) or links (chain)")
    b.add_argument("kind", choices=sorted(BUILDERS))
    b.add_argument("--min", type=int, required=True)
    b.add_argument("--max", type=int, required=True)
    b.add_argument("--step", type=int, default=1)
    b.add_argument("--reps", type=int, default=100)
    b.add_argument("--steps", type=int, default=100, help="simulated steps per run")
    b.add_argument("--out", required=True, help="timing CSV path")
    b.add_argument("--plot", help="also render the scaling curve to this image file")
    b.set_defaults(func=cmd_bench)

    p = sub.add_parser("presets", help="list built-in scenarios")
    p.set_defaults(func=cmd_presets)
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
