"""Batch execution of episodes, paired-domain comparison, and attribution reruns."""

from __future__ import annotations

import json
import math
import multiprocessing
import traceback
from concurrent.futures import ProcessPoolExecutor
from dataclasses import replace
from pathlib import Path

from ..agent import AgentConfig, EpisodeResult, EpisodeSpec, run_episode
from ..sensors import NoiseProfile
from .attribution import attribute_failures
from .metrics import paired_report

_WORKER = {}


def _error_result(spec: EpisodeSpec, exc: BaseException) -> EpisodeResult:
    return EpisodeResult(
        episode_id=spec.episode_id,
        scene_id=spec.scene_id,
        goal_category=spec.goal_category,
        seed=spec.seed,
        success=False,
        agent_path_length=0.0,
        shortest_path_length=spec.shortest_path_length if spec.shortest_path_length else math.inf,
        steps=0,
        collisions=0,
        stop_called=False,
        terminal_distance_to_goal=math.inf,
        failure_class="other",
        error=f"{type(exc).__name__}: {exc}",
    )


def run_one(scenes: dict, spec: EpisodeSpec, config: AgentConfig, noise: NoiseProfile) -> EpisodeResult:
    """Run one episode; any exception becomes an ``other`` failure instead of propagating."""
    try:
        scene = scenes[spec.scene_id]
        return run_episode(scene, spec, config, noise)
    except Exception as exc:  # a broken episode must not abort the batch
        result = _error_result(spec, exc)
        result.trace = [{"error": traceback.format_exception_only(type(exc), exc)[-1].strip()}]
        return result


def _init_worker(scenes, config, noise):
    _WORKER["args"] = (scenes, config, noise)


def _work(spec):
    scenes, config, noise = _WORKER["args"]
    return run_one(scenes, spec, config, noise)


def run_batch(scenes: dict, episodes, config: AgentConfig, noise: NoiseProfile, *, parallel: int = 1,
              overrides: dict | None = None) -> list:
    """Run every episode and return results sorted by episode id.

    Episodes are independent and seeded individually, so the output does not
    depend on ``parallel``.
    """
    specs = [replace(ep, **overrides) if overrides else ep for ep in episodes]
    if parallel <= 1 or len(specs) <= 1:
        results = [run_one(scenes, s, config, noise) for s in specs]
    else:
        ctx = multiprocessing.get_context("fork")
        with ProcessPoolExecutor(max_workers=parallel, mp_context=ctx, initializer=_init_worker,
                                 initargs=(scenes, config, noise)) as pool:
            results = list(pool.map(_work, specs, chunksize=max(1, len(specs) // (4 * parallel))))
    return sorted(results, key=lambda r: r.episode_id)


def write_traces(directory, results) -> None:
    d = Path(directory)
    d.mkdir(parents=True, exist_ok=True)
    for r in results:
        lines = [json.dumps(rec, sort_keys=True) for rec in (r.trace or [])]
        (d / f"{r.episode_id}.jsonl").write_text("".join(line + "\n" for line in lines))


def compare_domains(scenes: dict, episodes, config_a: tuple, config_b: tuple, *, parallel: int = 1):
    """Run the same episodes under two (AgentConfig, NoiseProfile) pairs and pair the outcomes."""
    results_a = run_batch(scenes, episodes, config_a[0], config_a[1], parallel=parallel)
    results_b = run_batch(scenes, episodes, config_b[0], config_b[1], parallel=parallel)
    return paired_report(results_a, results_b), results_a, results_b


def make_rerun(scenes: dict, episodes, config: AgentConfig, noise: NoiseProfile, overrides: dict | None = None):
    """Rerun callable for attribute_failures, bound to the batch's specs and configuration."""
    by_id = {ep.episode_id: (replace(ep, **overrides) if overrides else ep) for ep in episodes}
    plain = replace(config, trace=False)

    def rerun(result, oracle_segmentation: bool = False, max_steps: int | None = None):
        spec = by_id[result.episode_id]
        if max_steps is not None:
            spec = replace(spec, max_steps=max_steps)
        n = noise.with_oracle_segmentation() if oracle_segmentation else noise
        return run_one(scenes, spec, plain, n)

    return rerun


def attribute_batch(scenes: dict, episodes, results, config: AgentConfig, noise: NoiseProfile,
                    overrides: dict | None = None, **kw):
    return attribute_failures(results, make_rerun(scenes, episodes, config, noise, overrides), **kw)
