"""Command-line entry point: run scenarios, benchmark the projection solver, validate configs.

Exit codes: 0 success, 1 safety violation (or failed benchmark solves), 2 usage or
config error.
"""

from __future__ import annotations

import argparse
import csv
import json
import os
import sys
import time
from dataclasses import dataclass
from importlib import resources
from pathlib import Path

import numpy as np
from scipy.stats import special_ortho_group

from carp.sets import Ellipsoid
from carp.sim import (
    ConfigError,
    ScenarioConfig,
    run_scenario,
    timing_stats,
    write_audit_jsonl,
    write_metrics_json,
    write_timing_json,
    write_trace_csv,
)
from carp.solver import ITERATION_LIMIT, ProjectionProblem, SolverOptions, solve_projection

EXIT_OK = 0
EXIT_VIOLATION = 1
EXIT_USAGE = 2

SCALING_COUNTS = (1, 2, 5, 10, 20, 50, 100)


class UsageError(Exception):
    pass


# ---------------------------------------------------------------------------
# scenarios


def builtin_scenarios() -> list[str]:
    root = resources.files("carp") / "scenarios"
    return sorted(p.name[:-5] for p in root.iterdir() if p.name.endswith(".json"))


def load_config(ref: str) -> ScenarioConfig:
    """Load a scenario from a path, or by name from the bundled scenarios."""
    path = Path(ref)
    if path.is_file():
        return ScenarioConfig.load(path)
    if ref in builtin_scenarios():
        text = (resources.files("carp") / "scenarios" / f"{ref}.json").read_text()
        return ScenarioConfig.from_json(json.loads(text))
    raise UsageError(f"no such config file or built-in scenario: {ref}")


def output_dir(flag: str | None, default: str) -> Path:
    """``--out`` wins, then ``CARP_OUT``, then the default."""
    out = Path(flag or os.environ.get("CARP_OUT") or default)
    out.mkdir(parents=True, exist_ok=True)
    return out


def cmd_run(args) -> int:
    from carp.plotting import plot_distances, plot_trajectories

    cfg = load_config(args.config)
    if args.seed is not None:
        cfg = cfg.with_seed(args.seed)
    out = output_dir(args.out, os.path.join("out", cfg.name))
    trace = run_scenario(cfg)
    write_trace_csv(trace, out / "trace.csv")
    write_metrics_json(trace, out / "metrics.json")
    write_timing_json(trace, out / "timing.json")
    write_audit_jsonl(trace, out / "audit.jsonl")
    plot_trajectories(trace, out / "trajectories.svg")
    plot_distances(trace, out / "distances.svg")

    m = trace.metrics
    print(f"scenario {cfg.name}: {m['ticks']} ticks, min distance {m['min_distance']:.4f} m "
          f"(threshold {cfg.threshold:g}), all arrived: {m['all_arrived']}, "
          f"audit violations: {m['audit_violations']}")
    print(f"outputs written to {out}")
    if m["audit_violations"]:
        bad = next(r for r in trace.records if r.audit.violations)
        v = bad.audit.violations[0]
        print(f"halted at tick {bad.tick}: {v['kind']} violation for pair ({v['i']}, {v['j']})", file=sys.stderr)
        return EXIT_VIOLATION
    return EXIT_OK


def cmd_validate(args) -> int:
    cfg = load_config(args.config)
    print(f"{args.config}: valid ({len(cfg.agents)} agents, {cfg.dimension}-D, mode {cfg.mode})")
    return EXIT_OK


# ---------------------------------------------------------------------------
# benchmark


@dataclass(frozen=True)
class BenchmarkSpec:
    instances: int = 285
    obstacles: int = 100
    dim: int = 3
    seed: int = 0
    box: float = 20.0
    min_axis: float = 0.25
    max_axis: float = 1.5

    def __post_init__(self):
        if self.instances < 1 or self.obstacles < 0:
            raise UsageError("instance count must be at least 1 and obstacle count non-negative")
        if self.dim not in (2, 3):
            raise UsageError("dimension must be 2 or 3")


def random_instance(spec: BenchmarkSpec, obstacles: int, rng: np.random.Generator):
    """Anchor at the origin; goal and ellipsoids drawn in a centered box, none containing the anchor."""
    half = spec.box / 2.0
    d = spec.dim
    goal = rng.uniform(-half, half, d)
    regions = []
    while len(regions) < obstacles:
        axes = rng.uniform(spec.min_axis, spec.max_axis, d)
        R = special_ortho_group.rvs(d, random_state=rng)
        E = Ellipsoid(rng.uniform(-half, half, d), R @ np.diag(axes**2) @ R.T)
        if E.level(np.zeros(d)) > 1.0:
            regions.append(E)
    return np.zeros(d), goal, regions


def time_instance(anchor, goal, regions, options):
    """Wall time around problem construction and solve."""
    start = time.perf_counter()
    res = solve_projection(ProjectionProblem.from_regions(anchor, goal, regions, options))
    return time.perf_counter() - start, res


def run_benchmark(spec: BenchmarkSpec, obstacles: int | None = None, instances: int | None = None):
    obstacles = spec.obstacles if obstacles is None else obstacles
    instances = spec.instances if instances is None else instances
    rng = np.random.default_rng([spec.seed, obstacles])
    options = SolverOptions()
    rows = []
    for k in range(instances):
        anchor, goal, regions = random_instance(spec, obstacles, rng)
        wall, res = time_instance(anchor, goal, regions, options)
        rows.append({"instance": k, "obstacles": obstacles, "status": res.status,
                     "iterations": res.iterations, "objective": res.objective, "wall_time": wall})
    return rows


def _write_rows(path, rows, keys):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(keys)
        for r in rows:
            w.writerow([repr(r[k]) if isinstance(r[k], float) else r[k] for k in keys])


def _summary_line(label, stats):
    ms = {k: 1e3 * stats[k] for k in ("min", "median", "mean", "max")}
    return (f"{label:>10} {ms['min']:10.2f} {ms['median']:10.2f} {ms['mean']:10.2f} {ms['max']:10.2f}")


def cmd_bench(args) -> int:
    from carp.plotting import plot_scaling

    spec = BenchmarkSpec(args.instances, args.obstacles, args.dim, args.seed)
    out = output_dir(args.out, os.path.join("out", "bench"))
    rows = run_benchmark(spec)
    statuses = [r["status"] for r in rows]
    limited = statuses.count(ITERATION_LIMIT)
    _write_rows(out / "bench_instances.csv", rows, ["instance", "obstacles", "status", "iterations", "objective"])
    _write_rows(out / "bench_timing.csv", rows, ["instance", "wall_time"])
    stats = timing_stats(r["wall_time"] for r in rows)
    summary = {"instances": spec.instances, "obstacles": spec.obstacles, "dim": spec.dim, "seed": spec.seed,
               "status_counts": {s: statuses.count(s) for s in sorted(set(statuses))},
               "success_rate": 1.0 - limited / len(rows)}
    (out / "bench_summary.json").write_text(json.dumps(summary, indent=2, sort_keys=True) + "\n")
    (out / "bench_timing.json").write_text(json.dumps(stats, indent=2, sort_keys=True) + "\n")

    print(f"{spec.instances} instances, {spec.obstacles} ellipsoids, {spec.dim}-D, seed {spec.seed}")
    print(f"{'':>10} {'Minimum':>10} {'Median':>10} {'Mean':>10} {'Maximum':>10}   [ms]")
    print(_summary_line("build+solve", stats))
    print(f"status: {summary['status_counts']}  success rate {100 * summary['success_rate']:.1f}%")

    if args.scaling:
        table = []
        for n in SCALING_COUNTS:
            r = run_benchmark(spec, obstacles=n, instances=min(spec.instances, 50))
            st = timing_stats(x["wall_time"] for x in r)
            limited += sum(x["status"] == ITERATION_LIMIT for x in r)
            table.append({"obstacles": n, "instances": len(r), "median_ms": 1e3 * st["median"],
                          "mean_ms": 1e3 * st["mean"], "log10_obstacles": float(np.log10(n)),
                          "log10_median_ms": float(np.log10(1e3 * st["median"]))})
            print(f"scaling: {n:4d} obstacles  median {1e3 * st['median']:8.2f} ms")
        _write_rows(out / "scaling_timing.csv", table, list(table[0]))
        plot_scaling(table, out / "scaling_timing.svg")
    print(f"outputs written to {out}")
    return EXIT_VIOLATION if limited else EXIT_OK


# ---------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="carp", description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="command", required=True)

    r = sub.add_parser("run", help="simulate a scenario and write trace, metrics, audit log and plots")
    r.add_argument("config", help="scenario JSON path or built-in name (" + ", ".join(builtin_scenarios()) + ")")
    r.add_argument("--out", help="output directory (default: $CARP_OUT or out/<name>)")
    r.add_argument("--seed", type=int, help="override the scenario seed")
    r.set_defaults(func=cmd_run)

    b = sub.add_parser("bench", help="time random projection instances")
    b.add_argument("--instances", type=int, default=285)
    b.add_argument("--obstacles", type=int, default=100)
    b.add_argument("--dim", type=int, default=3)
    b.add_argument("--seed", type=int, default=0)
    b.add_argument("--scaling", action="store_true", help="also time obstacle counts 1..100")
    b.add_argument("--out", help="output directory (default: $CARP_OUT or out/bench)")
    b.set_defaults(func=cmd_bench)

    v = sub.add_parser("validate", help="check a scenario config")
    v.add_argument("config")
    v.set_defaults(func=cmd_validate)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_OK if exc.code == 0 else EXIT_USAGE
    try:
        return args.func(args)
    except (ConfigError, UsageError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE


def main_entry() -> None:
    sys.exit(main())


if __name__ == "__main__":
    main_entry()
