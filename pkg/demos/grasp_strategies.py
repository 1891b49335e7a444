"""Grasp and extraction strategy selection over a catalog: the five grasp
categories, four extraction categories, tool assignment, and grasp poses.

Run:  python3 demos/grasp_strategies.py
"""

from collections import Counter

import numpy as np

from shopsim.demo import demo_store
from shopsim.grasping import classify_catalog, grasp_pose, plan_grasp, simulate_grasp_outcome, verify_grasp

store = demo_store(48, seed=0)
cache = classify_catalog(store)

by_grasp = Counter(g.value for g, _ in cache.values())
by_extract = Counter(e.value for _, e in cache.values())
print("grasp categories over the catalog:")
for name, count in sorted(by_grasp.items()):
    print(f"  {name:28s} {count}")
print("extraction categories:")
for name, count in sorted(by_extract.items()):
    print(f"  {name:28s} {count}")

print("\nper-item strategy table (first 10):")
for item in store.items[:10]:
    g, e = cache[item.id]
    plan = plan_grasp(item)
    p = plan.tool_pose[:3, 3]
    print(
        f"  {item.id:18s} {g.value:26s} {e.value:16s} {plan.tool.value:12s} "
        f"pose=({p[0]: .2f},{p[1]: .2f},{p[2]: .2f})"
    )

# simulated execution + verification round trip
rng = np.random.default_rng(0)
item = store.items[4]
plan = plan_grasp(item)
print(f"\nsimulating grasps of {item.id} ({plan.grasp_type.value}, {plan.tool.value}):")
for p_success in (1.0, 0.0):
    success, signals = simulate_grasp_outcome(plan, item, rng, success_prob=p_success)
    verdict = verify_grasp(signals, plan.tool, item.mass * 9.81)
    print(
        f"  p={p_success:.0f}: executed={'ok' if success else 'drop'}, "
        f"wrench={signals.tip_wrench:.1f} N, verified={verdict}"
    )
