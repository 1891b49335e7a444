"""Campaign configuration file: paths, seeds, fault channels, and task
parameters, validated with field-level diagnostics.

Relative paths resolve against the config file's directory. All randomness
flows from the `seed` field; wall-clock time never influences results.
"""

from __future__ import annotations

import json
import os
from dataclasses import dataclass, field, fields

from .errors import ConfigError
from .executor import FaultConfig, TaskParams
from .follow import FollowParams
from .planner import PlanParams


@dataclass
class CampaignConfig:
    store_path: str
    robot_path: str
    roadmap_path: str
    output_dir: str
    seed: int
    n_runs: int = 1
    time_budget_s: float | None = None
    faults: FaultConfig = field(default_factory=FaultConfig)
    params: TaskParams = field(default_factory=TaskParams)


def _take(data: dict, key: str, kind, required=False, default=None):
    if key not in data:
        if required:
            raise ConfigError(f"config field {key!r} is required")
        return default
    value = data[key]
    try:
        return kind(value)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"config field {key!r}: {exc}") from exc


def _build_dataclass(cls, data: dict, label: str):
    known = {f.name for f in fields(cls)}
    unknown = set(data) - known
    if unknown:
        raise ConfigError(f"unknown {label} fields: {sorted(unknown)}")
    try:
        return cls(**data)
    except (TypeError, ValueError, ConfigError) as exc:
        raise ConfigError(f"bad {label} section: {exc}") from exc


def load_campaign_config(path) -> CampaignConfig:
    base = os.path.dirname(os.path.abspath(path))
    try:
        with open(path) as fh:
            data = json.load(fh)
    except OSError as exc:
        raise ConfigError(f"cannot read config: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config is not valid JSON: {exc}") from exc
    if not isinstance(data, dict):
        raise ConfigError("config root must be a JSON object")

    def resolve(p):
        return p if os.path.isabs(p) else os.path.join(base, p)

    paths = {}
    for key in ("store", "robot", "roadmap", "output_dir"):
        raw = _take(data, key, str, required=True)
        paths[key] = resolve(raw)
    for key in ("store", "robot", "roadmap"):
        if not os.path.exists(paths[key]):
            raise ConfigError(f"config field {key!r}: file not found: {paths[key]}")

    if "seed" not in data:
        raise ConfigError("config field 'seed' is required (no wall-clock entropy)")
    seed = _take(data, "seed", int, required=True)
    n_runs = _take(data, "n_runs", int, default=1)
    if n_runs < 1:
        raise ConfigError(f"config field 'n_runs' must be >= 1, got {n_runs}")
    budget = data.get("time_budget_s")
    if budget is not None:
        budget = float(budget)
        if budget <= 0:
            raise ConfigError("config field 'time_budget_s' must be > 0 when present")

    faults = _build_dataclass(FaultConfig, dict(data.get("faults", {})), "faults")

    params_data = dict(data.get("params", {}))
    follow_data = params_data.pop("follow", None)
    plan_data = params_data.pop("plan", None)
    params = _build_dataclass(TaskParams, params_data, "params")
    if follow_data is not None:
        params.follow = _build_dataclass(FollowParams, dict(follow_data), "params.follow")
    if plan_data is not None:
        params.plan = _build_dataclass(PlanParams, dict(plan_data), "params.plan")

    return CampaignConfig(
        store_path=paths["store"],
        robot_path=paths["robot"],
        roadmap_path=paths["roadmap"],
        output_dir=paths["output_dir"],
        seed=seed,
        n_runs=n_runs,
        time_budget_s=budget,
        faults=faults,
        params=params,
    )
