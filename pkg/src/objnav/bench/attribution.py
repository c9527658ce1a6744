"""Counterfactual failure attribution.

Each failure is rerun under progressively more generous conditions: oracle
segmentation at the same budget, then oracle segmentation with a long
budget. The first condition that turns it into a success names the cause;
what remains is classified from the run's own diagnostics.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

from ..errors import RerunMismatchError

CLASSES = (
    "segmentation_error",
    "exploration_failure",
    "map_noise_error",
    "planning_error",
    "annotation_error",
    "other",
)
EXTENDED_BUDGET = 2000


@dataclass
class AttributionReport:
    total: int
    successes: int
    counts: dict = field(default_factory=lambda: {c: 0 for c in CLASSES})
    per_episode: dict = field(default_factory=dict)

    @property
    def failures(self) -> int:
        return sum(self.counts.values())

    def proportion(self, cls: str) -> float:
        return self.counts[cls] / self.total if self.total else 0.0

    @property
    def success_proportion(self) -> float:
        return self.successes / self.total if self.total else 0.0

    @property
    def adjusted_success(self) -> float:
        """Success share when reaching an unannotated goal instance counts as success."""
        if not self.total:
            return 0.0
        return (self.successes + self.counts["annotation_error"]) / self.total

    def to_dict(self) -> dict:
        return {
            "total": self.total,
            "successes": self.successes,
            "failures": self.failures,
            "counts": dict(self.counts),
            "proportions": {c: self.proportion(c) for c in CLASSES},
            "success_proportion": self.success_proportion,
            "adjusted_success": self.adjusted_success,
            "per_episode": dict(sorted(self.per_episode.items())),
        }


def attribution_from_counts(total: int, base_success: int, oracle_seg_success: int, extended_success: int,
                            planning: int = 0, annotation: int = 0, map_noise: int = 0) -> AttributionReport:
    """Attribution from aggregate success counts of the three evaluation conditions.

    Counts must be nested: each condition succeeds on a superset of the
    previous one. Manually classified remainders (planning, annotation,
    map noise) are taken as given and the rest is ``other``.
    """
    if not (0 <= base_success <= oracle_seg_success <= extended_success <= total):
        raise ValueError("success counts must be nondecreasing and bounded by total")
    remaining = total - extended_success
    if planning + annotation + map_noise > remaining:
        raise ValueError("classified remainders exceed the remaining failures")
    report = AttributionReport(total=total, successes=base_success)
    report.counts["segmentation_error"] = oracle_seg_success - base_success
    report.counts["exploration_failure"] = extended_success - oracle_seg_success
    report.counts["planning_error"] = planning
    report.counts["annotation_error"] = annotation
    report.counts["map_noise_error"] = map_noise
    report.counts["other"] = remaining - planning - annotation - map_noise
    return report


def _same_outcome(a, b) -> bool:
    def close(x, y):
        if math.isinf(x) or math.isinf(y):
            return x == y
        return abs(x - y) <= 1e-9
    return (
        a.success == b.success
        and a.steps == b.steps
        and a.collisions == b.collisions
        and close(a.agent_path_length, b.agent_path_length)
    )


def classify_remaining(result) -> str:
    if result.false_obstacle_on_path:
        return "map_noise_error"
    if result.stuck_incidents > 0:
        return "planning_error"
    return "other"


def attribute_failures(results, rerun, *, extended_budget: int = EXTENDED_BUDGET,
                       verify: bool = True) -> AttributionReport:
    """Run the attribution ladder over ``results``.

    ``rerun(result, oracle_segmentation, max_steps)`` must replay the
    episode behind ``result`` (same spec and seed) with the given overrides;
    ``max_steps=None`` keeps the original budget. With ``verify`` the first
    failure is first replayed unchanged, and RerunMismatchError is raised if
    the replay diverges.
    """
    results = sorted(results, key=lambda r: r.episode_id)
    report = AttributionReport(total=len(results), successes=sum(1 for r in results if r.success))
    verified = not verify
    for r in results:
        if r.success:
            continue
        if r.annotated_cause == "annotation_error":
            cls = "annotation_error"
        else:
            if not verified:
                again = rerun(r, oracle_segmentation=False, max_steps=None)
                if not _same_outcome(r, again):
                    raise RerunMismatchError(
                        f"episode {r.episode_id} diverged on an unchanged rerun: "
                        f"success {r.success}->{again.success}, steps {r.steps}->{again.steps}"
                    )
                verified = True
            oracle = rerun(r, oracle_segmentation=True, max_steps=None)
            if oracle.success:
                cls = "segmentation_error"
            else:
                extended = rerun(r, oracle_segmentation=True, max_steps=extended_budget)
                cls = "exploration_failure" if extended.success else classify_remaining(extended)
        report.counts[cls] += 1
        report.per_episode[r.episode_id] = cls
    return report
