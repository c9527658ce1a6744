"""Command-line entry point: ``objnav {gen,run,compare,attribute,replay}``.

Exit codes: 0 success, 1 configuration error, 2 data error.
"""

from __future__ import annotations

import argparse
import json
import sys
from dataclasses import replace
from pathlib import Path

from . import __version__
from .agent import run_episode
from .bench.attribution import attribute_failures
from .bench.episodes import DEFAULT_BINS, EpisodeSet, generate_episodes
from .bench.io import dumps_results, group_table_csv, read_results, write_json
from .bench.metrics import metrics_report, paired_report
from .bench.runner import make_rerun, run_batch, write_traces
from .config import RunConfig, config_hash
from .errors import (
    ConfigError,
    EpisodeSpecError,
    InfeasibleBinsError,
    MetricsError,
    RerunMismatchError,
    SceneError,
    UnpairedEpisodesError,
)
from .gridworld import PLACEMENT_PRESETS, HomeParams, generate_home, load_scene, save_scene

EXIT_OK = 0
EXIT_CONFIG = 1
EXIT_DATA = 2


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_CONFIG, f"{self.prog}: error: {message}\n")


def _bins(text: str):
    try:
        out = []
        for part in text.split(","):
            lo, hi = part.split("-")
            out.append((float(lo), float(hi)))
        return tuple(out)
    except ValueError:
        raise argparse.ArgumentTypeError(f"bins must look like '1-5,5-10', got {text!r}")


def _load_scenes(paths) -> dict:
    files = []
    for p in paths:
        p = Path(p)
        if p.is_dir():
            files.extend(sorted(p.glob("*.scene")))
        elif p.exists():
            files.append(p)
        else:
            raise FileNotFoundError(f"scene path {p} does not exist")
    if not files:
        raise FileNotFoundError("no scene files found")
    scenes = {}
    for f in files:
        s = load_scene(f)
        scenes[s.id] = s
    return scenes


def _overrides(args) -> dict:
    o = {}
    if getattr(args, "policy", None):
        o["policy"] = args.policy
    if getattr(args, "noise", None):
        o["noise_profile"] = args.noise
    if getattr(args, "parallel", None) is not None:
        o["parallel"] = args.parallel
    if getattr(args, "denoise", None) is not None:
        o.setdefault("map", {})["denoise"] = args.denoise
    if getattr(args, "max_steps", None) is not None:
        o.setdefault("budgets", {})["max_steps"] = args.max_steps
    return o


def cmd_gen(args) -> int:
    out = Path(args.out)
    params = HomeParams(placement_affinity=PLACEMENT_PRESETS[args.placement])
    scenes = [generate_home(args.seed * 1_000_003 + k, params, scene_id=f"home-{args.seed}-{k:03d}")
              for k in range(args.homes)]
    episodes = generate_episodes(scenes, args.episodes, args.bins, seed=args.seed, max_steps=args.max_steps)
    (out / "scenes").mkdir(parents=True, exist_ok=True)
    for s in scenes:
        save_scene(s, out / "scenes" / f"{s.id}.scene")
    episodes.save(out / "episodes.jsonl")
    hist = episodes.histogram()
    print(f"wrote {len(scenes)} scenes and {len(episodes.episodes)} episodes to {out}")
    print("distance bins: " + ", ".join(f"[{lo:g},{hi:g}) m: {n}" for (lo, hi), n in zip(episodes.bins, hist)))
    print("categories: " + ", ".join(f"{c}: {n}" for c, n in sorted(episodes.category_balance.items())))
    return EXIT_OK


def _write_run_outputs(out: Path, results, cfg: RunConfig) -> dict:
    out.mkdir(parents=True, exist_ok=True)
    h = cfg.hash
    (out / "results.jsonl").write_text(dumps_results(results, h))
    report = metrics_report(results)
    (out / "by_home.csv").write_text(group_table_csv(report.by_home, "scene_id", h))
    (out / "by_goal.csv").write_text(group_table_csv(report.by_goal, "goal_category", h))
    summary = {"config_hash": h, "config": cfg.data, "sr": report.sr, "spl": report.spl, "n": report.n,
               "failures": {}}
    for r in results:
        if not r.success:
            summary["failures"][r.failure_class] = summary["failures"].get(r.failure_class, 0) + 1
    write_json(out / "summary.json", summary)
    return summary


def cmd_run(args) -> int:
    cfg = RunConfig.load(args.config, _overrides(args))
    scenes = _load_scenes(args.scenes)
    episodes = EpisodeSet.load(args.episodes).episodes
    agent_cfg = cfg.agent_config(trace=args.trace)
    results = run_batch(scenes, episodes, agent_cfg, cfg.noise(), parallel=cfg.parallel,
                        overrides=cfg.budget_overrides())
    out = Path(args.out)
    summary = _write_run_outputs(out, results, cfg)
    if args.trace:
        write_traces(out / "traces", results)
    print(f"{summary['n']} episodes  SR {summary['sr']:.3f}  SPL {summary['spl']:.3f}  config {cfg.hash}")
    return EXIT_OK


def cmd_compare(args) -> int:
    a, _ = read_results(args.results_a)
    b, _ = read_results(args.results_b)
    report = paired_report(a, b)
    data = report.to_dict()
    data["config_hash"] = config_hash({"a": str(args.results_a), "b": str(args.results_b)})
    text = json.dumps(data, sort_keys=True, indent=2)
    if args.out:
        Path(args.out).write_text(text + "\n")
    print(text)
    return EXIT_OK


def cmd_attribute(args) -> int:
    cfg = RunConfig.load(args.config, _overrides(args))
    results, hashes = read_results(args.results)
    hashes.discard(None)
    if hashes and hashes != {cfg.hash}:
        raise ConfigError(f"results were produced by config {sorted(hashes)}, rerun config is {cfg.hash}")
    failures = [r for r in results if not r.success]
    if failures:
        scenes = _load_scenes(args.scenes)
        episodes = EpisodeSet.load(args.episodes).episodes
        rerun = make_rerun(scenes, episodes, cfg.agent_config(), cfg.noise(), cfg.budget_overrides())
        report = attribute_failures(results, rerun, extended_budget=args.extended_budget)
    else:
        report = attribute_failures(results, rerun=None)
    data = report.to_dict()
    data["config_hash"] = cfg.hash
    text = json.dumps(data, sort_keys=True, indent=2)
    if args.out:
        Path(args.out).parent.mkdir(parents=True, exist_ok=True)
        Path(args.out).write_text(text + "\n")
    print(text)
    return EXIT_OK


def cmd_replay(args) -> int:
    from .snapshots import export_map

    cfg = RunConfig.load(args.config, _overrides(args))
    scenes = _load_scenes(args.scenes)
    episodes = {ep.episode_id: ep for ep in EpisodeSet.load(args.episodes).episodes}
    if args.episode not in episodes:
        raise EpisodeSpecError(f"episode {args.episode!r} not in {args.episodes}")
    spec = episodes[args.episode]
    over = cfg.budget_overrides()
    if over:
        spec = replace(spec, **over)
    recorded = None
    if args.trace_file:
        recorded = [json.loads(line)["action"] for line in Path(args.trace_file).read_text().splitlines() if line]
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    scene = scenes[spec.scene_id]
    actions = []

    def snap(state, step, action):
        actions.append(action.value)
        if step % args.every == 0 or action.value == "stop":
            export_map(state.map, out, prefix=f"step{step:05d}", categories=scene.categories)

    result = run_episode(scene, spec, cfg.agent_config(), cfg.noise(), on_step=snap)
    if recorded is not None and recorded != actions:
        raise EpisodeSpecError("replay diverged from the recorded trace; was it made with a different config?")
    print(f"replayed {spec.episode_id}: {result.steps} steps, success={result.success}, snapshots in {out}")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="objnav", description=__doc__.splitlines()[0])
    p.add_argument("--version", action="version", version=f"objnav {__version__}")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    g = sub.add_parser("gen", help="generate homes and an episode set")
    g.add_argument("--seed", type=int, default=0)
    g.add_argument("--homes", type=int, default=3)
    g.add_argument("--episodes", type=int, default=30)
    g.add_argument("--bins", type=_bins, default=DEFAULT_BINS)
    g.add_argument("--max-steps", type=int, default=500)
    g.add_argument("--placement", choices=sorted(PLACEMENT_PRESETS), default="default")
    g.add_argument("--out", required=True)
    g.set_defaults(func=cmd_gen)

    def run_flags(q, episodes=True):
        q.add_argument("--config")
        q.add_argument("--scenes", nargs="+", required=True, help="scene files or directories")
        if episodes:
            q.add_argument("--episodes", required=True)
        q.add_argument("--policy", choices=("frontier", "prior", "random"))
        q.add_argument("--noise", help="noise profile name")
        q.add_argument("--denoise", dest="denoise", action="store_true", default=None)
        q.add_argument("--no-denoise", dest="denoise", action="store_false")
        q.add_argument("--max-steps", type=int)

    r = sub.add_parser("run", help="run a batch of episodes")
    run_flags(r)
    r.add_argument("--parallel", type=int)
    r.add_argument("--trace", action="store_true")
    r.add_argument("--out", required=True)
    r.set_defaults(func=cmd_run)

    c = sub.add_parser("compare", help="paired SR/SPL/SRCC of two results files")
    c.add_argument("results_a")
    c.add_argument("results_b")
    c.add_argument("--out")
    c.set_defaults(func=cmd_compare)

    a = sub.add_parser("attribute", help="counterfactual failure attribution")
    a.add_argument("--results", required=True)
    run_flags(a)
    a.add_argument("--extended-budget", type=int, default=2000)
    a.add_argument("--out")
    a.set_defaults(func=cmd_attribute)

    rp = sub.add_parser("replay", help="re-run one episode and write map snapshots")
    run_flags(rp)
    rp.add_argument("--episode", required=True)
    rp.add_argument("--trace-file", help="recorded trace to check the replay against")
    rp.add_argument("--every", type=int, default=10, help="snapshot cadence in steps")
    rp.add_argument("--out", required=True)
    rp.set_defaults(func=cmd_replay)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except UnpairedEpisodesError as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except (SceneError, EpisodeSpecError, InfeasibleBinsError, MetricsError, RerunMismatchError,
            FileNotFoundError) as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return EXIT_DATA


if __name__ == "__main__":
    sys.exit(main())
