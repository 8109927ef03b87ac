"""The ``run``, ``verify`` and ``lowerbound`` commands.

Replicate ``r`` uses seed ``seed_base + r``; auxiliary streams (noise,
bandit draws) get seeds derived from it with :class:`numpy.random.SeedSequence`
so they never share bits with the game itself. Replicates may run in a
process pool; results are always merged in replicate order.
"""
from __future__ import annotations

import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .. import adversaries as adv
from ..kernels import BACKEND, compiled_supports, run_trajectory, trajectory_bounds
from ..ledger import RegretLedger, format_keyvalue, path_prefix
from ..oracle import (CheckReport, CheckResult, best_fixed_expert, best_switching_competitor,
                      replay_with_checks)
from ..scenarios import (BanditConfig, FloorConstraint, discount_rescale, discounted_regret,
                         noisy_wrapper, run_bandit)
from .config import ExperimentConfig

EXIT_OK = 0
EXIT_INVALID = 1
EXIT_ASSERTION = 2

_STREAM_TAGS = {"noise": 1, "bandit": 2}


def stream_seed(seed: int, tag: str) -> int:
    """Seed for an auxiliary stream, independent of the game stream."""
    ss = np.random.SeedSequence([int(seed), _STREAM_TAGS[tag]])
    return int(ss.generate_state(1, dtype=np.uint64)[0] >> np.uint64(1))


def build_script(cfg: ExperimentConfig, seed: int) -> adv.GameScript:
    g = cfg.game
    gen = g["generator"]
    if gen == "script":
        return adv.read_script(g["path"])
    T = g["T"]
    if gen == "two_expert":
        return adv.two_expert_env(T, g.get("ranges"), seed)
    if gen == "static":
        return adv.static_env(T, g["M"], g.get("ranges"), seed)
    if gen == "dynamic":
        return adv.dynamic_env(T, g["M"], float(g["path_budget"]), g.get("ranges"), seed)
    return adv.drift_env(T, g["M"], float(g.get("volatility", 0.0)), seed,
                         float(g.get("gap", 0.1)))


@dataclass
class Prepared:
    script: adv.GameScript          # what the learner sees (after noise / discount)
    original: adv.GameScript        # before any scenario
    floor: FloorConstraint | None = None
    bandit: BanditConfig | None = None
    discount: tuple | None = None
    notes: dict = field(default_factory=dict)

    @property
    def theorem_backed(self) -> bool:
        """Per-run guarantees hold only with full, noiseless feedback."""
        return self.bandit is None and "noise" not in self.notes


def prepare(cfg: ExperimentConfig, seed: int) -> Prepared:
    script = build_script(cfg, seed)
    prep = Prepared(script, script)
    for item in cfg.scenarios:
        (name, params), = item.items()
        params = params or {}
        if name == "noise":
            prep.script = noisy_wrapper(prep.script, params.get("model", "gaussian"),
                                        float(params.get("scale", 0.0)),
                                        stream_seed(seed, "noise"))
            prep.notes["noise"] = params.get("model", "gaussian")
        elif name == "discount":
            alpha, beta0 = float(params.get("alpha", 1.0)), float(params.get("beta0", 1.0))
            prep.script = discount_rescale(prep.script, alpha, beta0)
            prep.discount = (prep.script.meta["discount_alpha"], beta0)
        elif name == "floor":
            prep.floor = FloorConstraint(params["floor"])
        elif name == "bandit":
            prep.bandit = BanditConfig(int(params.get("arms_selected", 1)),
                                       params.get("mode", "full_bandit"))
    return prep


def competitor_matrix(cfg: ExperimentConfig, script: adv.GameScript) -> np.ndarray:
    kind = cfg.competitor["kind"]
    if kind == "embedded" and script.competitor is not None:
        return script.competitor
    if kind == "switching":
        return best_switching_competitor(script, cfg.competitor["max_switches"]).sequence
    return best_fixed_expert(script).sequence


@dataclass
class ReplicateResult:
    index: int
    seed: int
    ledger: RegretLedger
    script: adv.GameScript
    extra: dict
    report: CheckReport | None = None


def _ledger_from_decisions(D, etas, prep: Prepared, C, bound) -> RegretLedger:
    truth = prep.script.regret_losses()
    path = path_prefix(C)
    if prep.floor is not None:
        # regret in the floored game is the inner regret scaled by the slack
        f, s = prep.floor.vector, prep.floor.slack
        D = f + s * D
        C = f + s * C
        bound = s * bound
    learner_loss = np.einsum("tm,tm->t", D, truth)
    comp_loss = np.einsum("tm,tm->t", C, truth)
    U = 0.5 * (prep.script.losses.max(axis=1) - prep.script.losses.min(axis=1))
    return RegretLedger(learner_loss, comp_loss, bound, etas, path,
                        float(math.sqrt(np.sum(U * U))))


def run_replicate(cfg: ExperimentConfig, r: int) -> ReplicateResult:
    seed = cfg.seed_base + r
    prep = prepare(cfg, seed)
    script = prep.script
    T, M = script.losses.shape
    spec = cfg.learner_spec(M, T)
    C = competitor_matrix(cfg, script)
    extra = {"backend": "python"}
    if prep.bandit is not None:
        run = run_bandit(script, prep.bandit, stream_seed(seed, "bandit"))
        D = run.decisions
        etas = np.full(T, np.nan)
        bound = np.full(T, np.nan)
    else:
        traj = run_trajectory(spec, script.losses)
        D, etas = traj.decisions, traj.etas
        bound = trajectory_bounds(spec, D, script.losses, path_prefix(C))
        extra["backend"] = traj.backend
    ledger = _ledger_from_decisions(D, etas, prep, C, bound)
    if prep.discount is not None:
        alpha, beta0 = prep.discount
        if prep.floor is not None:
            D = prep.floor.vector + prep.floor.slack * D
            C = prep.floor.vector + prep.floor.slack * C
        extra["discounted_regret"] = discounted_regret(prep.original.regret_losses(), D, C,
                                                       alpha, beta0)
    extra["theorem_backed"] = prep.theorem_backed
    return ReplicateResult(r, seed, ledger, script, extra)


def verify_replicate(cfg: ExperimentConfig, r: int) -> ReplicateResult:
    seed = cfg.seed_base + r
    prep = prepare(cfg, seed)
    if prep.bandit is not None or prep.floor is not None:
        raise ValueError("verify replays full-information learners only")
    script = prep.script
    T, M = script.losses.shape
    learner = cfg.learner_spec(M, T).build()
    C = competitor_matrix(cfg, script)
    ledger, report = replay_with_checks(learner, script, C,
                                        corrupt=cfg.verify["negative_control"])
    if prep.theorem_backed:
        slack = float(np.min(ledger.bound - ledger.cumulative_regret))
        report.add(CheckResult("regret_bound", slack >= -1e-9, slack,
                               float(ledger.final_bound), float(ledger.final_regret)))
    return ReplicateResult(r, seed, ledger, script, {"theorem_backed": prep.theorem_backed},
                           report)


def _map(fn, cfg: ExperimentConfig) -> list:
    idx = list(range(cfg.replicates))
    if cfg.workers > 1 and cfg.replicates > 1:
        with ProcessPoolExecutor(max_workers=cfg.workers) as pool:
            return list(pool.map(fn, [cfg] * len(idx), idx))
    return [fn(cfg, r) for r in idx]


def _write(path: str, text: str) -> None:
    with open(path, "w") as fh:
        fh.write(text)


def _aggregate(results: list[ReplicateResult]) -> dict:
    regrets = np.array([res.ledger.final_regret for res in results])
    bounds = np.array([res.ledger.final_bound for res in results])
    ratios = np.array([res.ledger.ratio for res in results])
    sd = float(regrets.std(ddof=1)) if regrets.size > 1 else 0.0
    return {
        "mean_regret": float(regrets.mean()),
        "std_regret": sd,
        "mean_bound": float(bounds.mean()),
        "std_bound": float(bounds.std(ddof=1)) if bounds.size > 1 else 0.0,
        "mean_ratio": float(ratios.mean()),
        "max_ratio": float(ratios.max()),
    }


def _replicate_lines(results) -> dict:
    out = {}
    for res in results:
        s = res.ledger.summary()
        tag = f"r{res.index}"
        out[f"{tag}.seed"] = res.seed
        for k in ("final_regret", "final_bound", "ratio", "deviation_norm", "path",
                  "within_bound"):
            out[f"{tag}.{k}"] = s[k]
        if "discounted_regret" in res.extra:
            out[f"{tag}.discounted_regret"] = res.extra["discounted_regret"]
    return out


def command_run(cfg: ExperimentConfig) -> int:
    os.makedirs(cfg.output, exist_ok=True)
    results = _map(run_replicate, cfg)
    for res in results:
        _write(os.path.join(cfg.output, f"ledger_r{res.index:03d}.csv"), res.ledger.to_csv())
        adv.write_script(res.script, os.path.join(cfg.output, f"script_r{res.index:03d}.txt"))
    backed = all(res.extra["theorem_backed"] for res in results)
    within = all(res.ledger.within_bound() for res in results)
    summary = {
        "command": "run",
        "learner": cfg.learner["kind"],
        "generator": cfg.generator,
        "replicates": cfg.replicates,
        "seed_base": cfg.seed_base,
        "backend": results[0].extra["backend"],
        "theorem_backed": backed,
        "all_within_bound": within,
        **_aggregate(results),
        **_replicate_lines(results),
    }
    _write(os.path.join(cfg.output, "summary.txt"), format_keyvalue(summary))
    return EXIT_ASSERTION if (backed and not within) else EXIT_OK


def command_verify(cfg: ExperimentConfig) -> int:
    os.makedirs(cfg.output, exist_ok=True)
    results = _map(verify_replicate, cfg)
    merged = CheckReport()
    for res in results:
        merged.merge(res.report)
        _write(os.path.join(cfg.output, f"ledger_r{res.index:03d}.csv"), res.ledger.to_csv())
    text = merged.to_text()
    text += "".join(f"replicate={res.index} seed={res.seed} status="
                    f"{'pass' if res.report.passed else 'fail'}\n" for res in results)
    _write(os.path.join(cfg.output, "check_report.txt"), text)
    return EXIT_OK if merged.passed else EXIT_ASSERTION


def _lowerbound_replicate(cfg: ExperimentConfig, r: int):
    res = run_replicate(cfg, r)
    g = res.script
    P = float(cfg.game.get("path_budget", 0.0))
    return res.index, res.seed, res.ledger.final_regret, adv.lower_bound_value(g, g.M, P)


def command_lowerbound(cfg: ExperimentConfig) -> int:
    if cfg.generator not in ("two_expert", "static", "dynamic"):
        raise ValueError("lowerbound needs an adversarial generator "
                         "(two_expert, static or dynamic)")
    if cfg.scenarios:
        raise ValueError("lowerbound runs without scenario adapters")
    os.makedirs(cfg.output, exist_ok=True)
    rows = _map(_lowerbound_replicate, cfg)
    regrets = np.array([row[2] for row in rows])
    floors = np.array([row[3] for row in rows])
    mean = float(regrets.mean())
    sd = float(regrets.std(ddof=1)) if regrets.size > 1 else 0.0
    floor = float(floors.mean())
    tol = cfg.lowerbound["tolerance"]
    ok = mean >= floor * (1.0 - tol)
    T = cfg.game["T"]
    csv = "replicate,seed,final_regret,lower_bound\n" + "".join(
        f"{i},{s},{reg!r},{lb!r}\n" for i, s, reg, lb in rows)
    _write(os.path.join(cfg.output, "lowerbound.csv"), csv)
    summary = {
        "command": "lowerbound",
        "learner": cfg.learner["kind"],
        "generator": cfg.generator,
        "replicates": cfg.replicates,
        "seed_base": cfg.seed_base,
        "backend": BACKEND if compiled_supports(cfg.learner_spec(cfg.game.get("M", 2), T))
        else "python",
        "mean_regret": mean,
        "std_regret": sd,
        "stderr_regret": sd / math.sqrt(len(rows)),
        "mean_regret_over_sqrt_T": mean / math.sqrt(T),
        "lower_bound": floor,
        "tolerance": tol,
        "status": "pass" if ok else "fail",
    }
    _write(os.path.join(cfg.output, "lowerbound.txt"), format_keyvalue(summary))
    return EXIT_OK if ok else EXIT_ASSERTION
