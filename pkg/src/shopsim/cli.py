"""Command-line surface: build-roadmap, campaign, report, plan-debug.

Exit code 0 means the command ran (a NO_PATH verdict or failed runs are
results, not errors); nonzero is reserved for usage, config, and I/O
problems. All commands are deterministic given their inputs and seeds.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
import time

import numpy as np

from .config import load_campaign_config
from .errors import NoPath, ShopSimError, StartInCollision
from .executor import campaign_run_seeds, run_campaign_run, save_runlog
from .kinematics import load_robot
from .metrics import campaign_report
from .planner import PlanParams, plan_to_pose, validate_path
from .roadmap import (
    build_collision_map,
    build_roadmap,
    grid_for_model,
    load_roadmap,
    save_roadmap,
)
from .store import load_store
from .transforms import pose_xyzyaw
from .voxels import VoxelMap, voxel_insert_points


def _cmd_build_roadmap(args) -> int:
    try:
        model = load_robot(args.robot)
    except (OSError, ShopSimError) as exc:
        print(f"error: cannot load robot: {exc}", file=sys.stderr)
        return 2
    t0 = time.perf_counter()
    roadmap = build_roadmap(model, args.nodes, args.neighbors, args.seed, args.edge_step)
    grid = grid_for_model(model, args.resolution)
    cmap = build_collision_map(roadmap, model, grid, args.edge_step)
    build_s = time.perf_counter() - t0
    try:
        save_roadmap(roadmap, cmap, args.out)
    except OSError as exc:
        print(f"error: cannot write {args.out}: {exc}", file=sys.stderr)
        return 2
    print(
        f"roadmap: {roadmap.n_nodes} nodes, {roadmap.n_edges} edges, "
        f"grid {grid.dims} @ {grid.resolution} m, built in {build_s:.1f} s"
    )
    print(f"wrote {args.out} ({os.path.getsize(args.out)} bytes)")
    return 0


def _cmd_campaign(args) -> int:
    try:
        cfg = load_campaign_config(args.config)
        store = load_store(cfg.store_path)
        robot = load_robot(cfg.robot_path)
        roadmap, cmap = load_roadmap(cfg.roadmap_path, robot)
    except (OSError, ShopSimError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    os.makedirs(cfg.output_dir, exist_ok=True)

    seeds = campaign_run_seeds(cfg.seed, cfg.n_runs)
    logs = []
    if args.workers > 1:
        from concurrent.futures import ProcessPoolExecutor

        with ProcessPoolExecutor(max_workers=args.workers) as pool:
            futures = [
                pool.submit(
                    run_campaign_run, store, robot, roadmap, cmap, cfg.faults, cfg.params, s
                )
                for s in seeds
            ]
            logs = [f.result() for f in futures]  # merged in seed order
    else:
        for s in seeds:
            logs.append(
                run_campaign_run(store, robot, roadmap, cmap, cfg.faults, cfg.params, s)
            )
    if cfg.time_budget_s is not None:
        kept, spent = [], 0.0
        for log in logs:
            kept.append(log)
            spent += log.total_sim_time
            if spent >= cfg.time_budget_s:
                break
        logs = kept

    for i, log in enumerate(logs):
        save_runlog(log, os.path.join(cfg.output_dir, f"run_{i:04d}.jsonl"))
    report = campaign_report(logs)
    with open(os.path.join(cfg.output_dir, "report.json"), "w") as fh:
        fh.write(report.to_json())
    with open(os.path.join(cfg.output_dir, "report.txt"), "w") as fh:
        fh.write(report.to_text())
    with open(os.path.join(cfg.output_dir, "runs.csv"), "w") as fh:
        fh.write(report.to_csv())
    print(report.to_text(), end="")
    return 0


def _cmd_report(args) -> int:
    from .executor import load_runlog

    if not os.path.isdir(args.logs):
        print(f"error: {args.logs} is not a directory", file=sys.stderr)
        return 2
    paths = sorted(
        os.path.join(args.logs, f) for f in os.listdir(args.logs) if f.endswith(".jsonl")
    )
    if not paths:
        print(f"error: no .jsonl run logs in {args.logs}", file=sys.stderr)
        return 2
    try:
        logs = [load_runlog(p) for p in paths]
    except ShopSimError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    report = campaign_report(logs)
    print(report.to_text(), end="")
    out = os.path.join(args.logs, "report.json")
    if os.path.exists(out):
        with open(out) as fh:
            stored = fh.read()
        if stored != report.to_json():
            print("warning: recomputed report differs from the stored report.json")
    return 0


def _load_world(path) -> VoxelMap:
    with open(path) as fh:
        data = json.load(fh)
    res = float(data.get("resolution", 0.05))
    world = VoxelMap(resolution=res, origin=np.asarray(data.get("origin", [0, 0, 0]), float))
    pts = []
    for box in data.get("boxes", []):
        from .store import _box_voxel_points

        pts.append(
            _box_voxel_points(box["center"], box["extents"], box.get("yaw", 0.0), res)
        )
    if data.get("points"):
        pts.append(np.asarray(data["points"], dtype=float))
    for arr in pts:
        voxel_insert_points(world, arr)
    return world


def _cmd_plan_debug(args) -> int:
    try:
        robot = load_robot(args.robot)
        roadmap, cmap = load_roadmap(args.roadmap, robot)
        world = (
            _load_world(args.world)
            if args.world
            else VoxelMap(resolution=cmap.grid.resolution, origin=np.asarray(cmap.grid.origin))
        )
        start_q = np.asarray([float(v) for v in args.start.split(",")])
        vals = [float(v) for v in args.target.split(",")]
        if len(vals) not in (3, 4):
            raise ValueError("target must be x,y,z or x,y,z,yaw")
        target = pose_xyzyaw(vals[0], vals[1], vals[2], vals[3] if len(vals) == 4 else 0.0)
    except (OSError, ValueError, ShopSimError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2

    params = PlanParams(
        pos_tol=args.pos_tol, rot_tol=None, neighborhood_radius=args.neighborhood
    )
    t0 = time.perf_counter()
    try:
        path = plan_to_pose(roadmap, cmap, world, start_q, target, params)
    except (NoPath, StartInCollision) as exc:
        print(f"verdict: NO_PATH ({exc})")
        return 0
    elapsed = time.perf_counter() - t0
    check = validate_path(path, world, robot, step=params.step)
    print(f"waypoints: {len(path.waypoints)}")
    for wp in path.waypoints:
        print("  " + " ".join(f"{v: .4f}" for v in wp))
    print(f"joint-space length: {path.length:.4f}")
    print(f"planning time: {elapsed * 1e3:.1f} ms")
    print(f"validator: {'Ok' if check.ok else f'Violation(segment {check.violation_segment})'}")
    if args.export:
        np.savetxt(args.export, np.asarray(path.waypoints), delimiter=",")
        print(f"exported path to {args.export}")
    return 0


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="shopsim",
        description="Desk-scale shopping-robot stack: roadmap building, campaigns, reports.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    b = sub.add_parser("build-roadmap", help="precompute a roadmap + collision map")
    b.add_argument("--robot", required=True, help="robot JSON file")
    b.add_argument("--nodes", type=int, default=2000)
    b.add_argument("--neighbors", type=int, default=10)
    b.add_argument("--seed", type=int, default=0)
    b.add_argument("--resolution", type=float, default=0.1, help="collision grid (m)")
    b.add_argument("--edge-step", type=float, default=0.05, dest="edge_step")
    b.add_argument("--out", required=True, help="output roadmap file")
    b.set_defaults(func=_cmd_build_roadmap)

    c = sub.add_parser("campaign", help="run a seeded shopping campaign")
    c.add_argument("--config", required=True, help="campaign config JSON")
    c.add_argument("--workers", type=int, default=1)
    c.set_defaults(func=_cmd_campaign)

    r = sub.add_parser("report", help="recompute metrics from run logs")
    r.add_argument("--logs", required=True, help="directory of .jsonl run logs")
    r.set_defaults(func=_cmd_report)

    p = sub.add_parser("plan-debug", help="inspect a single arm-planning query")
    p.add_argument("--robot", required=True)
    p.add_argument("--roadmap", required=True)
    p.add_argument("--world", default=None, help="world snapshot JSON (boxes/points)")
    p.add_argument("--start", required=True, help="comma-separated joint values")
    p.add_argument("--target", required=True, help="x,y,z[,yaw] tool target")
    p.add_argument("--pos-tol", type=float, default=1e-3, dest="pos_tol")
    p.add_argument("--neighborhood", type=float, default=0.2)
    p.add_argument("--export", default=None, help="write waypoints CSV here")
    p.set_defaults(func=_cmd_plan_debug)

    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except ShopSimError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
