"""Desk-scale grocery-shopping mobile-manipulation stack.

Subsystems: sparse voxel world and 2.5D navigation grids (voxels), store
and catalog model (store), serial-chain kinematics and IK (kinematics),
dynamic-roadmap motion planning (roadmap, planner), base navigation and
touring (nav, tour, follow), grasp strategy selection (grasping), the
hierarchical task executor (executor), campaign metrics (metrics), and a
CLI (cli).
"""

from . import (
    demo,
    errors,
    executor,
    follow,
    grasping,
    kinematics,
    metrics,
    nav,
    planner,
    roadmap,
    store,
    tour,
    transforms,
    voxels,
)

__version__ = "0.1.0"
