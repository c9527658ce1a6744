"""Run configuration: YAML file, command-line overrides, and a provenance hash."""

from __future__ import annotations

import copy
import hashlib
import json
from pathlib import Path

import yaml

from .agent import AgentConfig
from .errors import ConfigError
from .explore import CategoryPriors
from .semmap import DenoiseParams
from .sensors import CameraModel, NoiseProfile, load_profiles

DEFAULTS = {
    "seed": 0,
    "policy": "frontier",
    "noise_profile": "simlike",
    "parallel": 1,
    "budgets": {"max_steps": None, "max_collisions": None, "success_radius": None},
    # step budget applied when the episode file does not dictate one for this profile
    "profile_step_budgets": {"reallike": 200},
    "map": {
        "size": 481,
        "obstacle_confirm": 1,
        "denoise": False,
        "denoise_confirm": 2,
        "opening_radius": 1,
        "footprint_radius_m": 0.3,
    },
    "planner": {"dilation_radius": 2, "lookahead": 3, "stop_margin": 0.1},
    "camera": {"hfov_deg": 42.0, "n_rays": 64, "max_range": 4.0},
    "explore": {"resample_period": None},
    "priors": {},
    "noise_profiles": {},
}


def _merge(base: dict, override: dict) -> dict:
    out = copy.deepcopy(base)
    for k, v in (override or {}).items():
        if isinstance(v, dict) and isinstance(out.get(k), dict):
            out[k] = _merge(out[k], v)
        else:
            out[k] = copy.deepcopy(v)
    return out


def canonical_json(data) -> str:
    return json.dumps(data, sort_keys=True, separators=(",", ":"))


def config_hash(data: dict) -> str:
    return hashlib.sha256(canonical_json(data).encode()).hexdigest()[:16]


class RunConfig:
    """Resolved configuration; ``data`` is the canonical dict the hash covers."""

    def __init__(self, data: dict | None = None):
        self.data = _merge(DEFAULTS, data or {})
        self._validate()

    @classmethod
    def load(cls, path=None, overrides: dict | None = None) -> "RunConfig":
        data = {}
        if path is not None:
            p = Path(path)
            if not p.exists():
                raise ConfigError(f"config file {p} does not exist")
            try:
                data = yaml.safe_load(p.read_text()) or {}
            except yaml.YAMLError as exc:
                raise ConfigError(f"config file {p}: {exc}") from exc
            if not isinstance(data, dict):
                raise ConfigError(f"config file {p} must hold a mapping")
        return cls(_merge(data, overrides or {}))

    def _validate(self):
        d = self.data
        if d["policy"] not in ("frontier", "prior", "random"):
            raise ConfigError(f"unknown policy {d['policy']!r}")
        if not isinstance(d["parallel"], int) or d["parallel"] < 1:
            raise ConfigError("parallel must be an integer >= 1")
        try:
            self.profiles = load_profiles(d["noise_profiles"])
        except (ValueError, TypeError, KeyError) as exc:
            raise ConfigError(f"noise_profiles: {exc}") from exc
        if d["noise_profile"] not in self.profiles:
            raise ConfigError(f"unknown noise profile {d['noise_profile']!r}; known: {sorted(self.profiles)}")
        try:
            self.agent_config()
        except (ValueError, TypeError, KeyError) as exc:
            raise ConfigError(str(exc)) from exc

    @property
    def hash(self) -> str:
        # worker count cannot change results, so it stays out of the hash
        return config_hash({k: v for k, v in self.data.items() if k != "parallel"})

    @property
    def parallel(self) -> int:
        return self.data["parallel"]

    def noise(self) -> NoiseProfile:
        return self.profiles[self.data["noise_profile"]]

    def priors(self) -> CategoryPriors:
        return CategoryPriors.from_config(self.data["priors"] or {})

    def agent_config(self, trace: bool = False) -> AgentConfig:
        d = self.data
        m, p, c = d["map"], d["planner"], d["camera"]
        return AgentConfig(
            policy=d["policy"],
            priors=self.priors() if d["policy"] == "prior" else None,
            resample_period=d["explore"].get("resample_period"),
            map_size=int(m["size"]),
            obstacle_confirm=int(m["obstacle_confirm"]),
            denoise=bool(m["denoise"]),
            denoise_params=DenoiseParams(int(m["denoise_confirm"]), int(m["opening_radius"])),
            footprint_radius_m=float(m["footprint_radius_m"]),
            dilation_radius=int(p["dilation_radius"]),
            lookahead=int(p["lookahead"]),
            stop_margin=float(p["stop_margin"]),
            camera=CameraModel(float(c["hfov_deg"]), int(c["n_rays"]), float(c["max_range"])),
            trace=trace,
        )

    def budget_overrides(self) -> dict:
        """Fields of EpisodeSpec to replace before running."""
        b = self.data["budgets"]
        out = {k: v for k, v in b.items() if v is not None}
        if "max_steps" not in out:
            profile_budget = self.data["profile_step_budgets"].get(self.data["noise_profile"])
            if profile_budget is not None:
                out["max_steps"] = int(profile_budget)
        return out
