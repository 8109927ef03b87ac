"""Versioned JSON snapshots of learner state.

A snapshot is a JSON object ``{"format": "trackexp-learner", "version": 1,
"kind": ..., "state": {...}}``. Floats are written with ``repr`` precision so
a restore reproduces the trajectory bit for bit. Unset learning rates are
``null``.
"""
from __future__ import annotations

import json

import numpy as np

from .doubling import DoublingLearner
from .exponential import TruncatedLearner, UniformMixLearner
from .mapped import MappedLearner
from .rates import RateStats
from .utew import UtewLearner

FORMAT = "trackexp-learner"
VERSION = 1


def _stats(s: RateStats) -> dict:
    return {"V": s.V, "Q": s.Q, "E": s.E, "round": s.round}


def _exp_state(x) -> dict:
    return {
        "n_experts": x.n_experts,
        "path_budget": x.path_budget,
        "rate_mode": x.rate_mode,
        "weights": x.weights.tolist(),
        "stats": _stats(x.stats),
        "eta": x.eta,
        "eta_floor_applied": x.eta_floor_applied,
    }


def _alpha_mode(mode):
    return mode if isinstance(mode, str) else float(mode)


def _state(learner) -> tuple[str, dict]:
    if isinstance(learner, UniformMixLearner):
        return "uniform_mix", {**_exp_state(learner), "horizon": learner.horizon}
    if isinstance(learner, TruncatedLearner):
        return "truncated", {**_exp_state(learner), "box_low": learner.box_low,
                             "box_high": learner.box_high}
    if isinstance(learner, MappedLearner):
        return "mapped", {
            "n_experts": learner.n_experts,
            "path_budget": learner.path_budget,
            "alpha_mode": _alpha_mode(learner.alpha_mode),
            "rate_mode": learner.rate_mode,
            "alpha": learner.alpha,
            "inner": _state(learner.inner)[1],
            "decision": learner.decision.tolist(),
        }
    if isinstance(learner, DoublingLearner):
        return "doubling", {
            "n_experts": learner.n_experts,
            "terminal_cap": learner.terminal_cap,
            "alpha_mode": _alpha_mode(learner.alpha_mode),
            "rate_mode": learner.rate_mode,
            "reset_weights": learner.reset_weights,
            "segment_index": learner.segment_index,
            "segment_start": learner.segment_start,
            "path_cap": learner.path_cap,
            "q_total": learner.q_total,
            "t": learner.t,
            "inner": _state(learner.inner)[1],
        }
    if isinstance(learner, UtewLearner):
        return "utew", {
            "n_experts": learner.n_experts,
            "rate_mode": learner.rate_mode,
            "mixer_alpha": _alpha_mode(learner.mixer_alpha),
            "t": learner.t,
            "sq_range_sum": learner.sq_range_sum,
            "combined": learner.combined.tolist(),
            "runs": [_state(A)[1] for A in learner.runs],
            "mixers": [_state(B)[1] for B in learner.mixers],
        }
    raise TypeError(f"cannot snapshot {type(learner).__name__}")


def to_snapshot(learner) -> str:
    kind, state = _state(learner)
    return json.dumps({"format": FORMAT, "version": VERSION, "kind": kind, "state": state},
                      indent=1, sort_keys=True)


def _fill_exp(obj, s):
    obj.weights = np.array(s["weights"], dtype=np.float64)
    obj.stats = RateStats(**s["stats"])
    obj.eta = s["eta"]
    obj.eta_floor_applied = s["eta_floor_applied"]
    return obj


def _build(kind: str, s: dict):
    if kind == "uniform_mix":
        obj = UniformMixLearner(s["n_experts"], s["path_budget"], s["rate_mode"],
                                horizon=s["horizon"])
        return _fill_exp(obj, s)
    if kind == "truncated":
        obj = TruncatedLearner(s["n_experts"], s["path_budget"], s["rate_mode"],
                               box_low=s["box_low"], box_high=s["box_high"])
        return _fill_exp(obj, s)
    if kind == "mapped":
        obj = MappedLearner.__new__(MappedLearner)
        obj.n_experts = s["n_experts"]
        obj.path_budget = s["path_budget"]
        obj.alpha_mode = s["alpha_mode"]
        obj.rate_mode = s["rate_mode"]
        obj.alpha = s["alpha"]
        obj.inner = _build("truncated", s["inner"])
        obj._decision = np.array(s["decision"], dtype=np.float64)
        return obj
    if kind == "doubling":
        obj = DoublingLearner(s["n_experts"], s["terminal_cap"], s["alpha_mode"],
                              s["rate_mode"], s["reset_weights"])
        for name in ("segment_index", "segment_start", "path_cap", "q_total", "t"):
            setattr(obj, name, s[name])
        obj.inner = _build("mapped", s["inner"])
        return obj
    if kind == "utew":
        obj = UtewLearner(s["n_experts"], s["rate_mode"], s["mixer_alpha"])
        obj.t = s["t"]
        obj.sq_range_sum = s["sq_range_sum"]
        obj.combined = np.array(s["combined"], dtype=np.float64)
        obj.runs = [_build("doubling", r) for r in s["runs"]]
        obj.mixers = [_build("mapped", m) for m in s["mixers"]]
        return obj
    raise ValueError(f"unknown learner kind {kind!r}")


def from_snapshot(text: str):
    doc = json.loads(text)
    if doc.get("format") != FORMAT:
        raise ValueError("not a learner snapshot")
    if doc.get("version") != VERSION:
        raise ValueError(f"unsupported snapshot version {doc.get('version')!r}")
    return _build(doc["kind"], doc["state"])
