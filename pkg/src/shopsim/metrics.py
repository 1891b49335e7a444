"""Campaign metrics recomputed from run logs, plus reliability arithmetic.

Every number here is derived from the event stream (no hidden state): a
retrieved instance is a VerifyGrasp-true followed by a Place-succeeded for
the same item. Aggregation across runs pools totals rather than averaging
per-run ratios.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field

from .errors import ConfigError, EmptyInput, TaxonomyError
from .executor import DEFAULT_TAXONOMY, RunLog, TaskState

REPORT_NOTES = "time_per_item includes the return-home leg of each run"


def _as_logs(logs) -> list[RunLog]:
    if isinstance(logs, RunLog):
        return [logs]
    return list(logs)


def retrieved_count(log: RunLog) -> int:
    """Instances retrieved, audited from the event stream."""
    count = 0
    verified: str | None = None
    for ev in log.events:
        if ev.state == TaskState.VERIFY_GRASP.value and ev.kind == "succeeded":
            if ev.payload.get("verified"):
                verified = ev.item_id
        elif ev.state == TaskState.PLACE.value and ev.kind == "succeeded":
            if verified is not None and ev.item_id == verified:
                count += 1
            verified = None
        elif ev.kind in ("failed", "estop"):
            verified = None
    return count


def task_success_rate(logs) -> float:
    """Completed tasks / started tasks."""
    logs = _as_logs(logs)
    if not logs:
        raise EmptyInput("no run logs")
    return sum(1 for lg in logs if lg.completed) / len(logs)


def shopping_success_rate(logs) -> float:
    """Retrieved instances / requested instances (pooled over runs)."""
    logs = _as_logs(logs)
    if not logs:
        raise EmptyInput("no run logs")
    requested = sum(lg.requested_instances for lg in logs)
    if requested == 0:
        raise EmptyInput("no requested instances")
    return sum(retrieved_count(lg) for lg in logs) / requested


def time_per_item(logs) -> float | None:
    """Total sim time / retrieved instances; None when nothing was retrieved."""
    logs = _as_logs(logs)
    if not logs:
        raise EmptyInput("no run logs")
    retrieved = sum(retrieved_count(lg) for lg in logs)
    if retrieved == 0:
        return None
    return sum(lg.total_sim_time for lg in logs) / retrieved


def unique_items_attempted(logs) -> int:
    """Distinct item ids with at least one grasp-execution attempt."""
    ids = set()
    for lg in _as_logs(logs):
        for ev in lg.events:
            if ev.state == TaskState.EXECUTE_GRASP.value and ev.kind == "entered":
                ids.add(ev.item_id)
    return len(ids)


def failure_breakdown(logs, taxonomy=DEFAULT_TAXONOMY) -> dict[str, int]:
    """Terminal cause -> count over non-completed runs.

    Raises TaxonomyError when a run carries a cause outside the taxonomy,
    forcing the taxonomy to stay complete.
    """
    out: dict[str, int] = {}
    for lg in _as_logs(logs):
        if lg.completed:
            continue
        cause = lg.outcome.get("cause")
        if cause not in taxonomy:
            raise TaxonomyError(f"unknown failure cause {cause!r}")
        out[cause] = out.get(cause, 0) + 1
    return out


def chained_reliability(r: float, n: int) -> float:
    """Probability that n consecutive r-reliable actions all succeed."""
    if not 0.0 < r <= 1.0:
        raise ConfigError(f"per-action success must be in (0, 1], got {r}")
    if n < 0:
        raise ConfigError("n must be >= 0")
    return r**n


def min_actions_below(r: float, threshold: float) -> int:
    """Smallest n with r^n < threshold."""
    if not 0.0 < r < 1.0:
        raise ConfigError(f"per-action success must be in (0, 1), got {r}")
    if not 0.0 < threshold < 1.0:
        raise ConfigError(f"threshold must be in (0, 1), got {threshold}")
    n = max(0, int(math.log(threshold) / math.log(r)) - 2)
    while r**n >= threshold:
        n += 1
    return n


@dataclass
class CampaignReport:
    started: int
    completed: int
    task_success_rate: float
    shopping_success_rate: float
    time_per_item_s: float | None
    unique_items_attempted: int
    failure_breakdown: dict[str, int]
    runs: list[dict] = field(default_factory=list)
    notes: str = REPORT_NOTES

    def to_dict(self) -> dict:
        return {
            "notes": self.notes,
            "started": self.started,
            "completed": self.completed,
            "task_success_rate": self.task_success_rate,
            "shopping_success_rate": self.shopping_success_rate,
            "time_per_item_s": self.time_per_item_s,
            "unique_items_attempted": self.unique_items_attempted,
            "failure_breakdown": dict(sorted(self.failure_breakdown.items())),
            "runs": self.runs,
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True, indent=2) + "\n"

    def to_text(self) -> str:
        lines = [
            "campaign report",
            f"  note: {self.notes}",
            f"  started runs            {self.started}",
            f"  completed runs          {self.completed}",
            f"  task success rate       {self.task_success_rate:.4f}",
            f"  shopping success rate   {self.shopping_success_rate:.4f}",
            (
                f"  time per item           {self.time_per_item_s:.1f} s"
                if self.time_per_item_s is not None
                else "  time per item           (no items retrieved)"
            ),
            f"  unique items attempted  {self.unique_items_attempted}",
        ]
        if self.failure_breakdown:
            lines.append("  failure breakdown:")
            for cause, count in sorted(self.failure_breakdown.items()):
                lines.append(f"    {cause:24s} {count}")
        return "\n".join(lines) + "\n"

    def to_csv(self) -> str:
        header = "seed,outcome,cause,retrieved,requested,sim_time_s,tour_exact_matching"
        rows = [header]
        for r in self.runs:
            rows.append(
                ",".join(
                    str(r[k])
                    for k in (
                        "seed",
                        "outcome",
                        "cause",
                        "retrieved",
                        "requested",
                        "sim_time_s",
                        "tour_exact_matching",
                    )
                )
            )
        return "\n".join(rows) + "\n"


def campaign_report(logs, taxonomy=DEFAULT_TAXONOMY) -> CampaignReport:
    """Recompute the full report from logs; bit-identical for identical logs."""
    logs = _as_logs(logs)
    if not logs:
        raise EmptyInput("no run logs")
    rows = []
    for lg in logs:
        exact = None
        for ev in lg.events:
            if ev.state == TaskState.PLAN_TOUR.value and ev.kind == "succeeded":
                exact = ev.payload.get("exact_matching")
        rows.append(
            {
                "seed": lg.seed,
                "outcome": lg.outcome.get("kind"),
                "cause": lg.outcome.get("cause"),
                "retrieved": retrieved_count(lg),
                "requested": lg.requested_instances,
                "sim_time_s": lg.total_sim_time,
                "tour_exact_matching": exact,
            }
        )
    return CampaignReport(
        started=len(logs),
        completed=sum(1 for lg in logs if lg.completed),
        task_success_rate=task_success_rate(logs),
        shopping_success_rate=shopping_success_rate(logs),
        time_per_item_s=time_per_item(logs),
        unique_items_attempted=unique_items_attempted(logs),
        failure_breakdown=failure_breakdown(logs, taxonomy),
        runs=rows,
    )
