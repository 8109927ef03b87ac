"""Per-round regret bookkeeping and its CSV / key=value serializations."""
from __future__ import annotations

import io
import math
from dataclasses import dataclass, field

import numpy as np

LEDGER_COLUMNS = (
    "round", "learner_loss", "competitor_loss", "regret", "cumulative_regret",
    "bound", "eta", "path",
)


def _fmt(x) -> str:
    if x is None:
        return "nan"
    return repr(float(x))


@dataclass
class RegretLedger:
    """Per-round learner/competitor losses, cumulative regret and bound.

    ``eta`` is ``nan`` on rounds where the learner made no rate-driven
    update; ``path`` is the competitor's path length up to that round.
    """

    learner_loss: np.ndarray
    competitor_loss: np.ndarray
    bound: np.ndarray
    eta: np.ndarray
    path: np.ndarray
    deviation_norm: float
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        for name in ("learner_loss", "competitor_loss", "bound", "eta", "path"):
            setattr(self, name, np.asarray(getattr(self, name), dtype=np.float64))

    def __len__(self) -> int:
        return self.learner_loss.size

    @property
    def regret(self) -> np.ndarray:
        return self.learner_loss - self.competitor_loss

    @property
    def cumulative_regret(self) -> np.ndarray:
        return np.cumsum(self.regret)

    @property
    def final_regret(self) -> float:
        return float(self.cumulative_regret[-1])

    @property
    def final_bound(self) -> float:
        return float(self.bound[-1])

    @property
    def ratio(self) -> float:
        b = self.final_bound
        if b == 0.0:
            return 0.0 if self.final_regret <= 0 else math.inf
        return self.final_regret / b

    @property
    def final_path(self) -> float:
        return float(self.path[-1])

    def within_bound(self, tol: float = 1e-9) -> bool:
        """Regret at most the bound at every prefix."""
        return bool(np.all(self.cumulative_regret <= self.bound + tol))

    def summary(self) -> dict:
        return {
            "rounds": len(self),
            "final_regret": self.final_regret,
            "final_bound": self.final_bound,
            "ratio": self.ratio,
            "deviation_norm": self.deviation_norm,
            "path": self.final_path,
            "within_bound": self.within_bound(),
        }

    def to_csv(self) -> str:
        buf = io.StringIO()
        buf.write(",".join(LEDGER_COLUMNS) + "\n")
        cum = self.cumulative_regret
        reg = self.regret
        for t in range(len(self)):
            row = (
                str(t + 1), _fmt(self.learner_loss[t]), _fmt(self.competitor_loss[t]),
                _fmt(reg[t]), _fmt(cum[t]), _fmt(self.bound[t]), _fmt(self.eta[t]),
                _fmt(self.path[t]),
            )
            buf.write(",".join(row) + "\n")
        return buf.getvalue()


def read_ledger_csv(text: str) -> dict[str, np.ndarray]:
    lines = text.strip().splitlines()
    header = lines[0].split(",")
    if tuple(header) != LEDGER_COLUMNS:
        raise ValueError(f"unexpected ledger header {header}")
    data = np.array([[float(x) for x in ln.split(",")] for ln in lines[1:]])
    return {name: data[:, i] for i, name in enumerate(header)}


def format_keyvalue(pairs: dict) -> str:
    """``key=value`` lines; floats at round-trip precision, keys in insertion order."""
    out = []
    for k, v in pairs.items():
        if isinstance(v, bool):
            v = "true" if v else "false"
        elif isinstance(v, float):
            v = repr(v)
        out.append(f"{k}={v}")
    return "\n".join(out) + "\n"


def parse_keyvalue(text: str) -> dict[str, str]:
    out = {}
    for ln in text.splitlines():
        if ln.strip() and not ln.startswith("#"):
            k, _, v = ln.partition("=")
            out[k.strip()] = v.strip()
    return out


def path_prefix(competitor: np.ndarray) -> np.ndarray:
    """``path[t]`` = path length of ``competitor[:t+1]``."""
    C = np.asarray(competitor, dtype=np.float64)
    steps = 0.5 * np.abs(np.diff(C, axis=0)).sum(axis=1)
    return np.concatenate([[0.0], np.cumsum(steps)])
