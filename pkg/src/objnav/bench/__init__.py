"""Episode generation, batch runs, metrics and failure attribution."""

from .attribution import AttributionReport, attribute_failures, attribution_from_counts
from .episodes import DEFAULT_BINS, EpisodeSet, generate_episodes
from .metrics import metrics_report, paired_report, spl, srcc, success_rate
from .runner import compare_domains, run_batch

__all__ = [
    "AttributionReport",
    "DEFAULT_BINS",
    "EpisodeSet",
    "attribute_failures",
    "attribution_from_counts",
    "compare_domains",
    "generate_episodes",
    "metrics_report",
    "paired_report",
    "run_batch",
    "spl",
    "srcc",
    "success_rate",
]
