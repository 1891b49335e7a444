"""From store model to shopping tour: goal poses along each item's outward
axis, pairwise A* costs on the inflated grid, and the closed tour.

Run:  python3 demos/store_tour.py
"""

import numpy as np

from shopsim.demo import demo_store
from shopsim.nav import BasePose, item_goal_pose, pairwise_costs
from shopsim.store import generate_shopping_list, rasterize_store
from shopsim.tour import plan_tour, tour_cost
from shopsim.voxels import derive_elevation, inflate

store = demo_store(48, seed=0)
shopping = generate_shopping_list(store, seed=7)
print(f"catalog {len(store.items)} items; shopping list of {len(shopping.entries)} "
      f"({shopping.total_instances} instances):")
for item_id, n in shopping.entries[:6]:
    print(f"  {item_id} x{n}")
print("  ...")

# store geometry -> elevation -> inflated grid
vmap = rasterize_store(store, 0.05, solid=False)
elev = derive_elevation(vmap, 0.0, 3.0, 0.05, bounds=((-8.0, -3.0), (8.0, 7.0)))
grid = inflate(elev, obstacle_height=0.02, robot_radius=0.30 + 0.10)

start = BasePose(*store.start_pose)
goals = [item_goal_pose(store.item(i), grid, 0.40, 0.85) for i, _ in shopping.entries]
print(f"\ngoal poses found for all {len(goals)} items "
      f"(first: x={goals[0].x:.2f} y={goals[0].y:.2f} yaw={goals[0].yaw:.2f})")

costs = pairwise_costs(grid, [start] + goals)
print(f"pairwise cost matrix {costs.shape}, longest leg {np.max(costs[np.isfinite(costs)]):.1f} m")

tour = plan_tour(costs, start_index=0)
print(f"\nclosed tour (exact matching: {tour.exact_matching}), "
      f"total {tour_cost(costs, tour.order):.1f} m:")
names = ["START"] + [i for i, _ in shopping.entries]
print("  " + " -> ".join(names[i] for i in tour.order[:8]) + " -> ...")

# sanity: the tour beats a naive in-list-order sweep
naive = tour_cost(costs, list(range(len(costs))))
print(f"naive list-order sweep would cost {naive:.1f} m "
      f"({naive / tour_cost(costs, tour.order):.2f}x the tour)")
