"""Acceptance checks, one per criterion.

Each check returns ``(passed, detail)``.  Under pytest every check is a test
and a PASS/FAIL line per criterion is added to the terminal summary; run this
file directly to print the same lines without pytest.
"""

from __future__ import annotations

import contextlib
import io
import json
import sys
import time
from pathlib import Path

import numpy as np
import pytest

from carp.bezier import BezierProblem, sample
from carp.cli import builtin_scenarios, load_config, main
from carp.filter import FilterState, motion_ball, predict, update
from carp.sets import Ellipsoid, contains, distance_to_region
from carp.sim import run_scenario
from carp.solver import ITERATION_LIMIT, OPTIMAL, brute_force_projection, project, solve_bezier
from carp.voronoi import best_multiplier, cell_membership, constraints_for

sys.path.insert(0, str(Path(__file__).parent))
from conftest import random_ellipsoid  # noqa: E402

RESULTS: dict[int, tuple[str, bool, str]] = {}

# tolerances
ORACLE_GRID = 0.01
ORACLE_OBJECTIVE_TOL = 0.02
MEMBERSHIP_TOL = 1e-7
ORACLE_TIME_LIMIT = 120.0
DUALITY_TOL = 1e-6
BENCH_MEDIAN_LIMIT = 0.200
SCALING_MAX_SLOPE = 2.0          # log-log slope of median time vs obstacle count
SCALING_MAX_DIP = 0.5            # a median may not fall below half the running maximum
SWAP_THRESHOLD = 0.4
SWAP_TIME_LIMIT = 60.0
CUBE_MARGIN_FLOOR = 0.75
REFINEMENT_TOL = 1e-3
CURVE_SAMPLES = 1000
FILTER_STEPS = 10_000


def record(number: int, name: str, passed: bool, detail: str) -> tuple[bool, str]:
    RESULTS[number] = (name, passed, detail)
    return passed, detail


def _obstacles(rng, d, count, box=4.0):
    out = []
    while len(out) < count:
        E = random_ellipsoid(rng, d, center_box=box)
        if not contains(E, np.zeros(d)):
            out.append(E)
    return out


# ---------------------------------------------------------------------------


def check_oracle_equivalence(n=200, seed=1):
    rng = np.random.default_rng(seed)
    start = time.perf_counter()
    worst, bad_audit, non_optimal = 0.0, 0, 0
    x = np.zeros(2)
    for _ in range(n):
        regions = _obstacles(rng, 2, int(rng.integers(1, 4)))
        goal = rng.uniform(-6, 6, 2)
        res = project(x, goal, regions)
        ref = brute_force_projection(x, goal, regions, ORACLE_GRID)
        if res.status != OPTIMAL or ref is None:
            non_optimal += 1
            continue
        worst = max(worst, abs(res.objective - float(np.linalg.norm(ref - goal))))
        bad_audit += not cell_membership(x, regions, res.point, MEMBERSHIP_TOL)
    elapsed = time.perf_counter() - start
    ok = worst <= ORACLE_OBJECTIVE_TOL and bad_audit == 0 and non_optimal == 0 and elapsed < ORACLE_TIME_LIMIT
    return record(1, "oracle equivalence", ok,
                  f"{n} instances, max |objective diff| {worst:.4f} m (tol {ORACLE_OBJECTIVE_TOL}), "
                  f"audit failures {bad_audit}, non-optimal {non_optimal}, {elapsed:.1f} s (limit {ORACLE_TIME_LIMIT:.0f} s)")


def _boundary_point(x, E, direction):
    """Point on the ray from ``x`` where ``||y - x|| = dist(y, E)``."""
    lo, hi = 0.0, 1.0
    while np.linalg.norm(hi * direction) <= distance_to_region(x + hi * direction, E):
        hi *= 2.0
        if hi > 1e6:
            return None
    for _ in range(100):
        mid = 0.5 * (lo + hi)
        y = x + mid * direction
        if np.linalg.norm(y - x) <= distance_to_region(y, E):
            lo = mid
        else:
            hi = mid
    return x + lo * direction


def check_strong_duality(n=100, seed=2, points=20):
    rng = np.random.default_rng(seed)
    disagree, boundary_fail, checked, boundary = 0, 0, 0, 0
    worst_boundary = np.inf
    for _ in range(n):
        d = int(rng.integers(2, 4))
        E = _obstacles(rng, d, 1)[0]
        x = np.zeros(d)
        for _ in range(points):
            y = rng.uniform(-6, 6, d)
            gap = distance_to_region(y, E) - np.linalg.norm(y - x)
            if abs(gap) <= DUALITY_TOL:
                continue
            _, slack = best_multiplier(x, y, E)
            checked += 1
            disagree += (slack >= 0) != cell_membership(x, [E], y, 0.0)
        u = rng.standard_normal(d)
        yb = _boundary_point(x, E, u / np.linalg.norm(u))
        if yb is not None:
            boundary += 1
            _, slack = best_multiplier(x, yb, E)
            worst_boundary = min(worst_boundary, slack)
            boundary_fail += slack < -DUALITY_TOL
    ok = disagree == 0 and boundary_fail == 0 and boundary > 0
    return record(2, "strong-duality consistency", ok,
                  f"{n} cells, {checked} interior/exterior points with {disagree} disagreements, "
                  f"{boundary} boundary points with {boundary_fail} uncertified "
                  f"(min best slack {worst_boundary:.2e}, tol {DUALITY_TOL})")


def check_benchmark(out_dir):
    code = main(["bench", "--instances", "285", "--obstacles", "100", "--dim", "3", "--scaling",
                 "--out", str(out_dir)])
    summary = json.loads((out_dir / "bench_summary.json").read_text())
    timing = json.loads((out_dir / "bench_timing.json").read_text())
    limited = summary["status_counts"].get(ITERATION_LIMIT, 0)
    rows = [line.split(",") for line in (out_dir / "scaling_timing.csv").read_text().splitlines()]
    head = rows[0]
    counts = np.array([float(r[head.index("obstacles")]) for r in rows[1:]])
    med = np.array([float(r[head.index("median_ms")]) for r in rows[1:]])
    slope = float(np.polyfit(np.log(counts), np.log(med), 1)[0])
    running = np.maximum.accumulate(med)
    monotone = bool(np.all(med >= SCALING_MAX_DIP * running))
    ok = (code == 0 and limited == 0 and timing["median"] <= BENCH_MEDIAN_LIMIT
          and slope <= SCALING_MAX_SLOPE and monotone)
    return record(3, "timing benchmark", ok,
                  f"285 x 100 ellipsoids in 3-D: IterationLimit {limited}, statuses {summary['status_counts']}, "
                  f"median {1e3 * timing['median']:.2f} ms (limit {1e3 * BENCH_MEDIAN_LIMIT:.0f} ms); "
                  f"scaling medians {np.round(med, 2).tolist()} ms, log-log slope {slope:.2f} "
                  f"(limit {SCALING_MAX_SLOPE}), monotone-ish {monotone}")


def check_circle_swap(out_dir):
    start = time.perf_counter()
    code = main(["run", "circle_swap_2d", "--out", str(out_dir)])
    elapsed = time.perf_counter() - start
    m = json.loads((out_dir / "metrics.json").read_text())
    ok = (code == 0 and m["min_distance"] >= SWAP_THRESHOLD and m["audit_violations"] == 0
          and m["all_arrived"] and elapsed < SWAP_TIME_LIMIT)
    return record(4, "2-D circle swap", ok,
                  f"{len(m['arrival_ticks'])} agents, min distance {m['min_distance']:.4f} m "
                  f"(threshold {SWAP_THRESHOLD}), audit violations {m['audit_violations']}, "
                  f"all arrived {m['all_arrived']} (last arrival tick {max((t for t in m['arrival_ticks'] if t is not None), default=None)}), "
                  f"{elapsed:.1f} s (limit {SWAP_TIME_LIMIT:.0f} s)")


def check_cube():
    cfg = load_config("cube_3d")
    floor = min(float(np.min(a.margin.as_ellipsoid(3).semi_axes)) for a in cfg.agents)
    start = time.perf_counter()
    trace = run_scenario(cfg)
    elapsed = time.perf_counter() - start
    m = trace.metrics
    ok = m["audit_violations"] == 0 and m["min_distance"] >= CUBE_MARGIN_FLOOR and floor >= CUBE_MARGIN_FLOOR
    return record(5, "3-D cube scenario", ok,
                  f"{len(cfg.agents)} agents, v_max {cfg.agents[0].v_max:g} m/s, observed min center distance "
                  f"{m['min_distance']:.3f} m (floor {CUBE_MARGIN_FLOOR}), audit violations {m['audit_violations']}, "
                  f"all arrived {m['all_arrived']}, {m['ticks']} ticks in {elapsed:.0f} s")


def check_bezier_refinement(n=100, seed=6):
    rng = np.random.default_rng(seed)
    worst, bad_ctrl, bad_samples, failed, done = 0.0, 0, 0, 0, 0
    while done < n:
        d = int(rng.integers(2, 4))
        x = np.zeros(d)
        regions = _obstacles(rng, d, int(rng.integers(1, 4)))
        goal = rng.uniform(-6, 6, d)
        ref = project(x, goal, regions)
        res = solve_bezier(BezierProblem(x, goal, constraints_for(x, regions)))
        done += 1
        if ref.status != OPTIMAL or res.status != OPTIMAL:
            failed += 1
            continue
        worst = max(worst, float(np.linalg.norm(res.curve.control_points[-1] - ref.point)))
        bad_ctrl += sum(not cell_membership(x, regions, c) for c in res.curve.control_points)
        bad_samples += sum(not cell_membership(x, regions, y) for y in sample(res.curve, CURVE_SAMPLES))
    ok = worst <= REFINEMENT_TOL and bad_ctrl == 0 and bad_samples == 0 and failed == 0
    return record(6, "Bezier refinement", ok,
                  f"{n} instances, max |c_K - y*| {worst:.2e} m (tol {REFINEMENT_TOL}), "
                  f"control points outside {bad_ctrl}, samples outside {bad_samples} of {n * CURVE_SAMPLES}, "
                  f"non-optimal {failed}")


def _unit(rng, d):
    u = rng.standard_normal(d)
    return u / np.linalg.norm(u)


def check_filter(seed=7):
    rng = np.random.default_rng(seed)
    total = contained = inconsistent = 0
    for d in (2, 3):
        dt, v_max, noise = 0.05, 6.0, 1.0
        x = np.zeros(d)
        state = None
        for k in range(FILTER_STEPS):
            z = x + noise * rng.random() ** (1.0 / d) * _unit(rng, d)
            meas = Ellipsoid.ball(z, noise)
            state = FilterState(meas, k) if state is None else update(state, meas, k)
            inconsistent += state.inconsistent
            total += 1
            contained += contains(state.estimate, x, 1e-9)
            state = predict(state, motion_ball(d, v_max, dt))
            x = x + v_max * dt * rng.random() * _unit(rng, d)
            total += 1
            contained += contains(state.estimate, x, 1e-9)
    ok = contained == total
    return record(7, "filter containment", ok,
                  f"{FILTER_STEPS} predict/update steps each in 2-D and 3-D: {contained}/{total} "
                  f"containment checks passed ({100.0 * contained / total:.2f}%), inconsistent resets {inconsistent}")


def _tree(path: Path) -> dict[str, bytes]:
    return {p.name: p.read_bytes() for p in sorted(path.iterdir()) if "timing" not in p.name}


def check_determinism(tmp: Path, first_run: Path | None = None):
    """Two runs of every command; ``first_run`` reuses an earlier ``run circle_swap_2d`` output."""
    compared, mismatched = [], []
    commands = {
        "run": ["run", "circle_swap_2d", "--out"],
        "bench": ["bench", "--instances", "20", "--obstacles", "30", "--scaling", "--out"],
    }
    for name, argv in commands.items():
        dirs = []
        for tag in ("a", "b"):
            if name == "run" and tag == "a" and first_run is not None:
                dirs.append(first_run)
                continue
            out = tmp / f"{name}_{tag}"
            main(argv + [str(out)])
            dirs.append(out)
        a, b = _tree(dirs[0]), _tree(dirs[1])
        for key in sorted(set(a) | set(b)):
            compared.append(f"{name}/{key}")
            if a.get(key) != b.get(key):
                mismatched.append(f"{name}/{key}")
    # validate writes no files; compare its report
    outs = []
    for _ in range(2):
        buf = io.StringIO()
        with contextlib.redirect_stdout(buf):
            main(["validate", "cube_3d"])
        outs.append(buf.getvalue())
    compared.append("validate/stdout")
    if outs[0] != outs[1]:
        mismatched.append("validate/stdout")
    ok = not mismatched and len(compared) > 3
    return record(8, "determinism", ok,
                  f"{len(compared)} outputs compared across two runs (timing files excluded), "
                  f"mismatches: {mismatched or 'none'}")


# ---------------------------------------------------------------------------
# pytest entry points

pytestmark = pytest.mark.acceptance


@pytest.fixture(scope="module")
def workdir(tmp_path_factory):
    return tmp_path_factory.mktemp("acceptance")


@pytest.fixture(scope="module")
def swap_run(workdir):
    out = workdir / "swap"
    result = check_circle_swap(out)
    return out, result


def _assert(result):
    ok, detail = result
    assert ok, detail


def test_oracle_equivalence():
    _assert(check_oracle_equivalence())


def test_strong_duality_consistency():
    _assert(check_strong_duality())


def test_timing_benchmark(workdir):
    _assert(check_benchmark(workdir / "bench"))


def test_circle_swap_safety(swap_run):
    _assert(swap_run[1])


def test_cube_scenario():
    _assert(check_cube())


def test_bezier_refinement():
    _assert(check_bezier_refinement())


def test_filter_containment():
    _assert(check_filter())


def test_cli_determinism(workdir, swap_run):
    _assert(check_determinism(workdir, first_run=swap_run[0]))


def summary_lines() -> list[str]:
    lines = []
    for number in sorted(RESULTS):
        name, passed, detail = RESULTS[number]
        lines.append(f"[{'PASS' if passed else 'FAIL'}] criterion {number} ({name}): {detail}")
    return lines


if __name__ == "__main__":
    import tempfile

    assert "circle_swap_2d" in builtin_scenarios()
    with tempfile.TemporaryDirectory() as tmpdir:
        tmp = Path(tmpdir)
        checks = [
            check_oracle_equivalence,
            check_strong_duality,
            lambda: check_benchmark(tmp / "bench"),
            lambda: check_circle_swap(tmp / "swap"),
            check_cube,
            check_bezier_refinement,
            check_filter,
            lambda: check_determinism(tmp, first_run=tmp / "swap"),
        ]
        for check in checks:
            check()
            print(summary_lines()[-1], flush=True)
    sys.exit(0 if all(p for _, p, _ in RESULTS.values()) else 1)
