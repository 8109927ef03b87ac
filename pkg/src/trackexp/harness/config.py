"""Experiment configuration: a YAML document validated against a fixed schema.

Example::

    game:
      generator: dynamic      # two_expert | static | dynamic | drift | script
      T: 4096
      M: 8
      path_budget: 3
    learner:
      kind: mapped            # uniform_mix | truncated | mapped | doubling | utew
      path_budget: 3
    competitor:
      kind: switching         # embedded | best_fixed | switching
      max_switches: 3
    scenarios:
      - noise: {model: gaussian, scale: 0.1}
    replicates: 5
    seed_base: 100
    output: runs/demo

Unknown keys anywhere are errors.
"""
from __future__ import annotations

import copy
from dataclasses import dataclass, field

import yaml

from ..errors import ConfigError
from ..learners import LearnerSpec

GAME_KEYS = {
    "two_expert": {"T", "ranges"},
    "static": {"T", "M", "ranges"},
    "dynamic": {"T", "M", "path_budget", "ranges"},
    "drift": {"T", "M", "volatility", "gap"},
    "script": {"path"},
}
LEARNER_KEYS = {"kind", "rate_mode", "horizon", "path_budget", "box_low", "box_high",
                "alpha", "terminal_cap", "target_path", "reset_weights"}
COMPETITOR_KINDS = ("embedded", "best_fixed", "switching")
SCENARIO_KEYS = {
    "noise": {"model", "scale"},
    "discount": {"alpha", "beta0"},
    "floor": {"floor"},
    "bandit": {"arms_selected", "mode"},
}
TOP_KEYS = {"game", "learner", "competitor", "scenarios", "replicates", "seed_base",
            "output", "workers", "lowerbound", "verify"}


@dataclass
class ExperimentConfig:
    game: dict
    learner: dict
    competitor: dict = field(default_factory=lambda: {"kind": "embedded"})
    scenarios: list = field(default_factory=list)
    replicates: int = 1
    seed_base: int = 0
    output: str = "trackexp_out"
    workers: int = 1
    lowerbound: dict = field(default_factory=lambda: {"tolerance": 0.0})
    verify: dict = field(default_factory=lambda: {"negative_control": False})

    @property
    def generator(self) -> str:
        return self.game["generator"]

    def learner_spec(self, n_experts: int, horizon: int) -> LearnerSpec:
        kw = dict(self.learner)
        kind = kw.pop("kind")
        if kind == "uniform_mix":
            kw.setdefault("horizon", horizon)
        try:
            return LearnerSpec(kind, n_experts, **kw)
        except (TypeError, ValueError) as exc:
            raise ConfigError(f"learner: {exc}") from exc

    def as_dict(self) -> dict:
        return copy.deepcopy(self.__dict__)


def _require(cond: bool, where: str, msg: str) -> None:
    if not cond:
        raise ConfigError(f"{where}: {msg}")


def _check_keys(d, allowed, where) -> None:
    _require(isinstance(d, dict), where, "expected a mapping")
    extra = set(d) - set(allowed)
    _require(not extra, where, f"unknown key(s) {sorted(extra)}")


def _positive_int(v, where) -> int:
    _require(isinstance(v, int) and not isinstance(v, bool) and v >= 1, where,
             f"expected a positive integer, got {v!r}")
    return v


def validate(doc: dict) -> ExperimentConfig:
    _check_keys(doc, TOP_KEYS, "config")
    _require("game" in doc, "config", "missing 'game'")
    _require("learner" in doc, "config", "missing 'learner'")

    game = dict(doc["game"]) if isinstance(doc["game"], dict) else doc["game"]
    _require(isinstance(game, dict), "game", "expected a mapping")
    gen = game.get("generator")
    _require(gen in GAME_KEYS, "game.generator", f"expected one of {sorted(GAME_KEYS)}, got {gen!r}")
    _check_keys(game, GAME_KEYS[gen] | {"generator"}, "game")
    if gen != "script":
        _require("T" in game, "game.T", "missing")
        _positive_int(game["T"], "game.T")
    if gen == "two_expert":
        game["M"] = 2
    elif gen != "script":
        _require("M" in game, "game.M", "missing")
        _require(isinstance(game["M"], int) and game["M"] >= 2, "game.M", "expected an integer >= 2")
    if gen == "dynamic":
        _require(float(game.get("path_budget", -1)) >= 0, "game.path_budget",
                 "expected a nonnegative number")
    if gen == "drift":
        v = game.get("volatility", 0.0)
        _require(0.0 <= float(v) <= 1.0, "game.volatility", "expected a number in [0, 1]")
    if gen == "script":
        _require(isinstance(game.get("path"), str), "game.path", "expected a file path")

    learner = doc["learner"]
    _check_keys(learner, LEARNER_KEYS, "learner")
    _require("kind" in learner, "learner.kind", "missing")

    comp = doc.get("competitor", {"kind": "embedded"})
    _check_keys(comp, {"kind", "max_switches"}, "competitor")
    _require(comp.get("kind") in COMPETITOR_KINDS, "competitor.kind",
             f"expected one of {COMPETITOR_KINDS}")
    if comp["kind"] == "switching":
        s = comp.get("max_switches")
        _require(isinstance(s, int) and s >= 0, "competitor.max_switches",
                 "expected a nonnegative integer")

    scenarios = doc.get("scenarios", []) or []
    _require(isinstance(scenarios, list), "scenarios", "expected a list")
    for i, item in enumerate(scenarios):
        where = f"scenarios[{i}]"
        _require(isinstance(item, dict) and len(item) == 1, where,
                 "each entry is a single-key mapping like {noise: {...}}")
        (name, params), = item.items()
        _require(name in SCENARIO_KEYS, where, f"unknown scenario {name!r}")
        _check_keys(params or {}, SCENARIO_KEYS[name], f"{where}.{name}")

    reps = _positive_int(doc.get("replicates", 1), "replicates")
    workers = _positive_int(doc.get("workers", 1), "workers")
    seed = doc.get("seed_base", 0)
    _require(isinstance(seed, int) and seed >= 0, "seed_base", "expected a nonnegative integer")
    lb = doc.get("lowerbound", {"tolerance": 0.0})
    _check_keys(lb, {"tolerance"}, "lowerbound")
    ver = doc.get("verify", {"negative_control": False})
    _check_keys(ver, {"negative_control"}, "verify")

    cfg = ExperimentConfig(
        game=game, learner=dict(learner), competitor=dict(comp), scenarios=list(scenarios),
        replicates=reps, seed_base=seed, output=str(doc.get("output", "trackexp_out")),
        workers=workers, lowerbound={"tolerance": float(lb.get("tolerance", 0.0))},
        verify={"negative_control": bool(ver.get("negative_control", False))},
    )
    if gen != "script":
        cfg.learner_spec(game["M"], game["T"])   # surfaces learner errors early
    return cfg


def load_config(path) -> ExperimentConfig:
    try:
        with open(path) as fh:
            doc = yaml.safe_load(fh)
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    except yaml.YAMLError as exc:
        raise ConfigError(f"config {path} is not valid YAML: {exc}") from exc
    return validate(doc or {})
