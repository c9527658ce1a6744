"""Results files, report tables, and the importer for externally transcribed logs."""

from __future__ import annotations

import csv
import io
import json
import math
import re
from importlib import resources
from pathlib import Path

from ..agent import EpisodeResult
from ..errors import EpisodeSpecError

CAUSE_CLASSES = {
    "segmentation error": "segmentation_error",
    "exploration failure": "exploration_failure",
    "depth noise": "map_noise_error",
    "tv reflection": "map_noise_error",
    "mirror reflection": "map_noise_error",
    "planning error": "planning_error",
    "annotation error": "annotation_error",
}

_GOAL_NAMES = {"plant": "potted plant"}


def bundled_path(name: str) -> Path:
    return Path(str(resources.files("objnav") / "data" / name))


def goal_category(label: str) -> str:
    """'plant2' -> 'potted plant', 'tv1' -> 'tv'."""
    base = re.sub(r"\d+$", "", label.strip())
    return _GOAL_NAMES.get(base, base)


def _failure_class(steps: int, collisions: int, budget: int, max_collisions: int) -> str:
    if collisions > max_collisions:
        return "collision_budget"
    if steps >= budget:
        return "timeout"
    return "false_stop"


def import_episode_log(source, agent: str | None = None, *, step_budget: int = 200,
                       max_collisions: int = 20) -> list:
    """Read a transcribed per-episode table (CSV) into EpisodeResults.

    Columns: home, goal, shortest_path_m, agent, outcome, spl, collisions,
    steps, cause. For successes the agent path is recovered as
    shortest / spl; failures carry an unknown (infinite) path length. The
    failure class follows from the budgets, and any annotated cause is kept.
    """
    if isinstance(source, Path) or (isinstance(source, str) and "\n" not in source and Path(source).exists()):
        text = Path(source).read_text()
    else:
        text = str(source)
    out = []
    for line_no, row in enumerate(csv.DictReader(io.StringIO(text)), start=2):
        if agent is not None and row["agent"] != agent:
            continue
        try:
            shortest = float(row["shortest_path_m"])
            steps = int(row["steps"])
            collisions = int(row["collisions"])
            success = row["outcome"].strip() == "success"
            if success:
                value = float(row["spl"])
                if not 0 < value <= 1:
                    raise ValueError(f"spl {value} outside (0, 1]")
                path = shortest / value
            else:
                path = math.inf
        except (KeyError, ValueError) as exc:
            raise EpisodeSpecError(f"line {line_no}: {exc}") from exc
        cause = (row.get("cause") or "").strip()
        home = f"home{row['home'].strip()}"
        out.append(EpisodeResult(
            episode_id=f"{home}-{row['goal'].strip()}",
            scene_id=home,
            goal_category=goal_category(row["goal"]),
            seed=0,
            success=success,
            agent_path_length=path,
            shortest_path_length=shortest,
            steps=steps,
            collisions=collisions,
            stop_called=success,
            terminal_distance_to_goal=math.nan if not success else 0.0,
            failure_class="none" if success else _failure_class(steps, collisions, step_budget, max_collisions),
            annotated_cause=CAUSE_CLASSES.get(cause.lower(), cause or None) if not success else None,
        ))
    return out


def dumps_results(results, config_hash: str, with_trace: bool = False) -> str:
    lines = []
    for r in sorted(results, key=lambda r: r.episode_id):
        d = r.to_dict(with_trace=with_trace)
        d["config_hash"] = config_hash
        lines.append(json.dumps(d, sort_keys=True))
    return "".join(line + "\n" for line in lines)


def write_results(path, results, config_hash: str) -> None:
    Path(path).write_text(dumps_results(results, config_hash))


def read_results(path) -> tuple[list, set]:
    """Results and the set of config hashes found in the file."""
    results, hashes = [], set()
    for line_no, line in enumerate(Path(path).read_text().splitlines(), start=1):
        if not line.strip():
            continue
        try:
            d = json.loads(line)
        except json.JSONDecodeError as exc:
            raise EpisodeSpecError(f"{path}:{line_no}: {exc.msg}") from exc
        hashes.add(d.pop("config_hash", None))
        results.append(EpisodeResult.from_dict(d))
    return results, hashes


def group_table_csv(rows, key_name: str, config_hash: str) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow([key_name, "n", "sr", "spl", "config_hash"])
    for g in rows:
        w.writerow([g.key, g.n, f"{g.sr:.6f}", f"{g.spl:.6f}", config_hash])
    return buf.getvalue()


def write_json(path, data) -> None:
    Path(path).write_text(json.dumps(data, sort_keys=True, indent=2) + "\n")
