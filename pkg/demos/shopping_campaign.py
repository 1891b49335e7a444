"""End-to-end shopping campaign: seeded runs through the task FSM, then the
metrics report recomputed from the event logs.

Run:  python3 demos/shopping_campaign.py   (roughly a minute: it builds the
arm roadmap, then simulates several full shopping runs)
"""

import time

from shopsim.demo import SHELF_ARM_HOME, demo_store, shelf_arm, shelf_arm_grid
from shopsim.executor import FaultConfig, TaskParams, run_campaign
from shopsim.metrics import campaign_report
from shopsim.roadmap import build_collision_map, build_roadmap

store = demo_store(48, seed=0, min_stock=2)
arm = shelf_arm()

print("precomputing the arm roadmap + collision index ...")
t0 = time.perf_counter()
roadmap = build_roadmap(arm, 1500, 10, seed=7)
cmap = build_collision_map(roadmap, arm, shelf_arm_grid(), edge_step=0.05)
print(f"  done in {time.perf_counter() - t0:.0f} s")

# fault channels tuned to show recoveries and a few run-ending failures
faults = FaultConfig(
    detection_miss_rate=0.08,
    motion_plan_fault_rate=0.05,
    joint_control_error_rate=0.002,
    collision_rate=0.002,
    estop_rate=0.001,
)
params = TaskParams(grasp_success_prob=0.85, home_q=SHELF_ARM_HOME, drift_rate=0.0)

print("\nrunning 4 seeded shopping runs ...")
t0 = time.perf_counter()
logs = run_campaign(store, arm, roadmap, cmap, faults, params, n_runs=4, seed=99)
print(f"  {len(logs)} runs in {time.perf_counter() - t0:.0f} s wall time")
for log in logs:
    print(
        f"  seed {log.seed}: {log.outcome['kind']:9s} "
        f"retrieved {len(log.items_retrieved):2d}/{log.requested_instances} "
        f"in {log.total_sim_time:6.0f} s simulated"
    )

print()
print(campaign_report(logs).to_text())
