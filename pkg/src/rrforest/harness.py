"""Scenario ingestion, benchmark execution, and metrics export.

A scenario is a single JSON file naming a PGM map, a robot, start/goal
configurations, one or more planners, config overrides, and the repeat/seed
schedule. Benchmarks emit one CSV row per accepted node with fixed columns::

    scenario,planner,seed,nodes,seconds,best_cost,invalid_obstacles,
    invalid_connections,live_arms,local_trees_created

Setting ``"deterministic_time": true`` in a scenario zeroes the seconds
column so fixed-seed runs are byte-identical.
"""

from __future__ import annotations

import csv
import json
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from io import StringIO
from pathlib import Path
from typing import NamedTuple, Optional

import numpy as np
from scipy import stats as scipy_stats

from .cspace import ContractError, PlanarArm, PointRobot, Scene, load_pgm
from .planner import (
    PLANNERS,
    BanditConfig,
    KernelParams,
    PlannerConfig,
    RunStats,
    STOP_FIRST_SOLUTION,
    STOP_NODES,
    STOP_TIME,
)

CSV_COLUMNS = (
    "scenario",
    "planner",
    "seed",
    "nodes",
    "seconds",
    "best_cost",
    "invalid_obstacles",
    "invalid_connections",
    "live_arms",
    "local_trees_created",
)

SUMMARY_COLUMNS = (
    "scenario",
    "planner",
    "seed",
    "solved",
    "final_cost",
    "nodes",
    "iterations",
    "wall_seconds",
)


class InvalidScenarioError(ValueError):
    """The scenario file is malformed or references missing inputs."""


class BenchRow(NamedTuple):
    scenario: str
    planner: str
    seed: int
    nodes: int
    seconds: float
    best_cost: float
    invalid_obstacles: int
    invalid_connections: int
    live_arms: int
    local_trees_created: int


@dataclass
class BenchRecord:
    scenario: str
    planner: str
    seed: int
    rows: list
    solved: bool
    final_cost: float
    nodes: int
    iterations: int
    wall_seconds: float


@dataclass
class Scenario:
    name: str
    map_path: Path
    resolution: float
    robot: dict
    start: list
    goal: list
    planners: list
    config: dict = field(default_factory=dict)
    repeats: int = 1
    seeds: Optional[list] = None
    stop: dict = field(default_factory=lambda: {"mode": STOP_NODES})
    seed_local_trees: list = field(default_factory=list)
    deterministic_time: bool = False

    def seed_list(self) -> list:
        if self.seeds is not None:
            return [int(s) for s in self.seeds]
        return list(range(self.repeats))


def load_scenario(path) -> Scenario:
    path = Path(path)
    try:
        payload = json.loads(path.read_text())
    except FileNotFoundError as exc:
        raise InvalidScenarioError(f"scenario file not found: {path}") from exc
    except json.JSONDecodeError as exc:
        raise InvalidScenarioError(f"{path}: invalid JSON ({exc})") from exc

    for key in ("map", "start", "goal"):
        if key not in payload:
            raise InvalidScenarioError(f"{path}: missing required key {key!r}")
    planners = payload.get("planners")
    if planners is None:
        planners = [payload.get("planner", "rrf")]
    for name in planners:
        if name not in PLANNERS:
            raise InvalidScenarioError(
                f"{path}: unknown planner {name!r}; choices: {sorted(PLANNERS)}"
            )
    map_path = (path.parent / payload["map"]).resolve()
    if not map_path.exists():
        raise InvalidScenarioError(f"{path}: map file not found: {map_path}")
    stop = payload.get("stop", {"mode": STOP_NODES})
    if stop.get("mode", STOP_NODES) not in (STOP_NODES, STOP_FIRST_SOLUTION, STOP_TIME):
        raise InvalidScenarioError(f"{path}: unknown stop mode {stop.get('mode')!r}")
    repeats = int(payload.get("repeats", 1))
    if repeats < 1:
        raise InvalidScenarioError(f"{path}: repeats must be >= 1")
    return Scenario(
        name=payload.get("name", path.stem),
        map_path=map_path,
        resolution=float(payload.get("resolution", 1.0)),
        robot=payload.get("robot", {"type": "point"}),
        start=payload["start"],
        goal=payload["goal"],
        planners=list(planners),
        config=payload.get("config", {}),
        repeats=repeats,
        seeds=payload.get("seeds"),
        stop=stop,
        seed_local_trees=payload.get("seed_local_trees", []),
        deterministic_time=bool(payload.get("deterministic_time", False)),
    )


def build_scene(scenario: Scenario) -> Scene:
    grid = load_pgm(scenario.map_path, scenario.resolution)
    robot = scenario.robot
    kind = robot.get("type", "point")
    weights = robot.get("weights")
    r = scenario.config.get("collision_resolution")
    if kind == "point":
        return Scene.point_robot(grid, collision_resolution=r, weights=weights)
    if kind == "planar_arm":
        arm = PlanarArm(
            link_lengths=np.asarray(robot["link_lengths"], dtype=float),
            joint_dims=tuple(robot["joint_dims"]),
            base=np.asarray(robot["base"], dtype=float) if "base" in robot else None,
            base_dims=tuple(robot["base_dims"]) if "base_dims" in robot else None,
        )
        return Scene.planar_arm(grid, arm, collision_resolution=r, weights=weights)
    raise InvalidScenarioError(f"unknown robot type {kind!r}")


def build_config(scenario: Scenario, seed: int) -> PlannerConfig:
    cfg = dict(scenario.config)
    cfg.pop("collision_resolution", None)
    kernel = KernelParams(**cfg.pop("kernel", {}))
    bandit_over = cfg.pop("bandit", None)
    stop = scenario.stop
    eta = cfg.pop("eta", 0.1)
    bandit = None
    if bandit_over is not None:
        bandit = BanditConfig(eta=eta, **bandit_over)
    try:
        return PlannerConfig(
            start=np.asarray(scenario.start, dtype=float),
            goal=np.asarray(scenario.goal, dtype=float),
            kernel=kernel,
            bandit=bandit,
            eta=eta,
            stop_mode=stop.get("mode", STOP_NODES),
            time_budget_s=stop.get("time_budget_s"),
            seed=seed,
            seed_local_trees=tuple(
                np.asarray(q, dtype=float) for q in scenario.seed_local_trees
            ),
            **cfg,
        )
    except TypeError as exc:
        raise InvalidScenarioError(f"bad config override: {exc}") from exc


def stats_to_rows(scenario_name: str, planner: str, seed: int,
                  stats: RunStats, deterministic_time: bool) -> list:
    rows = []
    for r in stats.rows:
        rows.append(
            BenchRow(
                scenario_name,
                planner,
                seed,
                r.nodes,
                0.0 if deterministic_time else r.seconds,
                r.best_cost,
                r.invalid_obstacles,
                r.invalid_connections,
                r.live_arms,
                r.local_trees_created,
            )
        )
    return rows


def run_single(scenario: Scenario, planner_name: str, seed: int) -> BenchRecord:
    """One (planner, seed) run of a scenario."""
    scene = build_scene(scenario)
    cfg = build_config(scenario, seed)
    planner = PLANNERS[planner_name](scene, cfg, seed)
    solution, stats = planner.run()
    return BenchRecord(
        scenario=scenario.name,
        planner=planner_name,
        seed=seed,
        rows=stats_to_rows(scenario.name, planner_name, seed, stats,
                           scenario.deterministic_time),
        solved=solution is not None,
        final_cost=solution.cost if solution is not None else math.inf,
        nodes=stats.accepted,
        iterations=stats.iterations,
        wall_seconds=0.0 if scenario.deterministic_time else stats.wall_seconds,
    )


def _bench_task(scenario_path: str, planner_name: str, seed: int) -> BenchRecord:
    return run_single(load_scenario(scenario_path), planner_name, seed)


def run_bench(scenario_path, workers: int = 1) -> list:
    """All (planner, seed) pairs of a scenario, in deterministic order."""
    scenario = load_scenario(scenario_path)
    pairs = [(p, s) for p in scenario.planners for s in scenario.seed_list()]
    if workers <= 1:
        return [run_single(scenario, p, s) for p, s in pairs]
    results = {}
    with ProcessPoolExecutor(max_workers=workers) as pool:
        futures = {
            (p, s): pool.submit(_bench_task, str(scenario_path), p, s)
            for p, s in pairs
        }
        for key, fut in futures.items():
            results[key] = fut.result()
    return [results[key] for key in pairs]


# -- CSV ---------------------------------------------------------------------


def _format_value(v) -> str:
    if isinstance(v, float):
        return repr(v)
    return str(v)


def write_bench_csv(rows, fh) -> None:
    writer = csv.writer(fh, lineterminator="\n")
    writer.writerow(CSV_COLUMNS)
    for row in rows:
        writer.writerow([_format_value(v) for v in row])


def read_bench_csv(fh) -> list:
    reader = csv.reader(fh)
    header = next(reader)
    if tuple(header) != CSV_COLUMNS:
        raise ContractError(f"unexpected CSV header: {header}")
    rows = []
    for rec in reader:
        rows.append(
            BenchRow(
                rec[0],
                rec[1],
                int(rec[2]),
                int(rec[3]),
                float(rec[4]),
                float(rec[5]),
                int(rec[6]),
                int(rec[7]),
                int(rec[8]),
                int(rec[9]),
            )
        )
    return rows


def bench_csv_text(records) -> str:
    buf = StringIO()
    write_bench_csv([r for rec in records for r in rec.rows], buf)
    return buf.getvalue()


def summary_csv_text(records) -> str:
    buf = StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(SUMMARY_COLUMNS)
    for rec in records:
        writer.writerow(
            [
                rec.scenario,
                rec.planner,
                rec.seed,
                int(rec.solved),
                repr(float(rec.final_cost)),
                rec.nodes,
                rec.iterations,
                repr(float(rec.wall_seconds)),
            ]
        )
    return buf.getvalue()


# -- aggregation ----------------------------------------------------------------


def t_confidence_half_width(values) -> float:
    """95% Student-t half width; NaN when fewer than two values."""
    values = np.asarray(values, dtype=float)
    m = values.size
    if m < 2:
        return math.nan
    s = values.std(ddof=1)
    if s == 0.0:
        return 0.0
    t = scipy_stats.t.ppf(0.975, m - 1)
    return float(t * s / math.sqrt(m))


AGGREGATE_METRICS = ("seconds", "best_cost", "invalid_obstacles", "invalid_connections")


def aggregate_records(records) -> list:
    """Per (planner, nodes) bucket: mean and 95% CI of each metric over seeds.

    Cost values are aggregated over the seeds that already have a solution at
    that node count.
    """
    by_bucket: dict = {}
    for rec in records:
        for row in rec.rows:
            by_bucket.setdefault((row.planner, row.nodes), []).append(row)
    out = []
    for (planner, nodes) in sorted(by_bucket):
        rows = by_bucket[(planner, nodes)]
        entry = {"planner": planner, "nodes": nodes, "n_seeds": len(rows)}
        for metric in AGGREGATE_METRICS:
            values = [getattr(r, metric) for r in rows]
            if metric == "best_cost":
                values = [v for v in values if math.isfinite(v)]
            if values:
                entry[f"{metric}_mean"] = float(np.mean(values))
                entry[f"{metric}_ci95"] = t_confidence_half_width(values)
            else:
                entry[f"{metric}_mean"] = math.nan
                entry[f"{metric}_ci95"] = math.nan
        out.append(entry)
    return out


def aggregate_csv_text(aggregate) -> str:
    buf = StringIO()
    cols = ["planner", "nodes", "n_seeds"]
    for metric in AGGREGATE_METRICS:
        cols += [f"{metric}_mean", f"{metric}_ci95"]
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(cols)
    for entry in aggregate:
        writer.writerow([_format_value(entry[c]) for c in cols])
    return buf.getvalue()


# -- command entry points ----------------------------------------------------------


def cmd_plan(scenario_path, out_dir) -> int:
    """Run a scenario once (first planner, first seed). Exit codes: 0 solved,
    2 no solution, 1 invalid input."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    scenario = load_scenario(scenario_path)
    planner_name = scenario.planners[0]
    seed = scenario.seed_list()[0]
    scene = build_scene(scenario)
    cfg = build_config(scenario, seed)
    planner = PLANNERS[planner_name](scene, cfg, seed)
    solution, stats = planner.run()

    prefix = f"{scenario.name}_{planner_name}"
    stats_file = out_dir / f"{prefix}_stats.csv"
    with stats_file.open("w") as fh:
        write_bench_csv(
            stats_to_rows(scenario.name, planner_name, seed, stats,
                          scenario.deterministic_time),
            fh,
        )
    samplers = (
        planner.live_sampler_positions()
        if hasattr(planner, "live_sampler_positions")
        else []
    )
    dump_file = out_dir / f"{prefix}_forest.txt"
    dump_file.write_text(
        planner.forest.dump_text(samplers, planner.forest.solution_node_ids())
    )
    if solution is None:
        print(f"{scenario.name}: no solution within budget "
              f"({stats.accepted} nodes, {stats.iterations} iterations)")
        return 2
    path_file = out_dir / f"{prefix}_path.txt"
    path_file.write_text(
        "\n".join(" ".join(repr(float(v)) for v in q) for q in solution.path) + "\n"
    )
    print(
        f"{scenario.name}: cost {solution.cost:.4f} with {stats.accepted} nodes "
        f"(first solution at node {solution.found_nodes}); wrote {path_file.name}"
    )
    return 0


def cmd_bench(scenario_path, out_dir, workers: int = 1) -> int:
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    scenario = load_scenario(scenario_path)
    records = run_bench(scenario_path, workers=workers)
    base = out_dir / scenario.name
    Path(f"{base}_bench.csv").write_text(bench_csv_text(records))
    Path(f"{base}_summary.csv").write_text(summary_csv_text(records))
    Path(f"{base}_aggregate.csv").write_text(
        aggregate_csv_text(aggregate_records(records))
    )
    for planner_name in scenario.planners:
        recs = [r for r in records if r.planner == planner_name]
        solved = sum(r.solved for r in recs)
        costs = [r.final_cost for r in recs if math.isfinite(r.final_cost)]
        med = f"{np.median(costs):.4f}" if costs else "n/a"
        print(
            f"{scenario.name} {planner_name}: {solved}/{len(recs)} solved, "
            f"median cost {med}"
        )
    return 0
