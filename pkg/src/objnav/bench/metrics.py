"""Success rate, SPL, the sim-vs-real outcome correlation, and grouped reports."""

from __future__ import annotations

import math
from collections import defaultdict
from dataclasses import dataclass, field

import numpy as np

from ..errors import MetricsError, UnpairedEpisodesError


def _require(results) -> list:
    results = list(results)
    if not results:
        raise MetricsError("metrics need at least one result")
    return results


def success_rate(results) -> float:
    results = _require(results)
    return sum(1 for r in results if r.success) / len(results)


def spl_term(r) -> float:
    """One episode's contribution: success * l / max(p, l)."""
    l = r.shortest_path_length
    if not (l > 0):
        raise MetricsError(f"shortest path must be > 0, got {l} for {getattr(r, 'episode_id', '?')}")
    if not r.success:
        return 0.0
    return l / max(r.agent_path_length, l)


def spl(results) -> float:
    results = _require(results)
    return sum(spl_term(r) for r in results) / len(results)


def srcc(outcomes_a, outcomes_b) -> float:
    """Pearson correlation of paired episode outcomes.

    When either vector is constant the coefficient is undefined; it is then
    1.0 if the vectors agree element-wise and 0.0 otherwise.
    """
    a = np.asarray(outcomes_a, dtype=float).ravel()
    b = np.asarray(outcomes_b, dtype=float).ravel()
    if a.shape != b.shape:
        raise MetricsError(f"outcome vectors differ in length: {a.size} vs {b.size}")
    if a.size == 0:
        raise MetricsError("outcome vectors are empty")
    n = a.size
    sa, sb = a.sum(), b.sum()
    va = n * (a * a).sum() - sa * sa
    vb = n * (b * b).sum() - sb * sb
    if va <= 0 or vb <= 0:
        return 1.0 if np.array_equal(a, b) else 0.0
    # integer-valued sums keep binary inputs exact up to the final division
    r = (n * (a * b).sum() - sa * sb) / math.sqrt(va * vb)
    return float(min(1.0, max(-1.0, r)))


@dataclass
class GroupRow:
    key: str
    n: int
    sr: float
    spl: float


@dataclass
class MetricsReport:
    sr: float
    spl: float
    n: int
    by_home: list = field(default_factory=list)
    by_goal: list = field(default_factory=list)

    def to_dict(self) -> dict:
        return {
            "sr": self.sr,
            "spl": self.spl,
            "n": self.n,
            "by_home": [vars(g) for g in self.by_home],
            "by_goal": [vars(g) for g in self.by_goal],
        }


def _groups(results, key) -> list:
    buckets = defaultdict(list)
    for r in results:
        buckets[key(r)].append(r)
    return [GroupRow(k, len(v), success_rate(v), spl(v)) for k, v in sorted(buckets.items())]


def metrics_report(results) -> MetricsReport:
    results = sorted(_require(results), key=lambda r: r.episode_id)
    return MetricsReport(
        sr=success_rate(results),
        spl=spl(results),
        n=len(results),
        by_home=_groups(results, lambda r: r.scene_id),
        by_goal=_groups(results, lambda r: r.goal_category),
    )


def pair_results(results_a, results_b):
    """Match two result lists by episode id; raises UnpairedEpisodesError on any orphan."""
    a = {r.episode_id: r for r in results_a}
    b = {r.episode_id: r for r in results_b}
    missing_b = set(a) - set(b)
    missing_a = set(b) - set(a)
    if missing_a or missing_b:
        raise UnpairedEpisodesError(missing_a, missing_b)
    ids = sorted(a)
    return [a[i] for i in ids], [b[i] for i in ids]


@dataclass
class PairedReport:
    n: int
    sr_a: float
    sr_b: float
    spl_a: float
    spl_b: float
    srcc: float

    def to_dict(self) -> dict:
        return dict(vars(self))


def paired_report(results_a, results_b) -> PairedReport:
    a, b = pair_results(results_a, results_b)
    if not a:
        raise MetricsError("no paired episodes")
    return PairedReport(
        n=len(a),
        sr_a=success_rate(a),
        sr_b=success_rate(b),
        spl_a=spl(a),
        spl_b=spl(b),
        srcc=srcc([int(r.success) for r in a], [int(r.success) for r in b]),
    )
