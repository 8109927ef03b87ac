"""Loss-sequence generators, including the randomized lower-bound games.

Randomness comes from numpy's Philox counter-based bit generator seeded
with the given integer, so a ``(parameters, seed)`` pair always yields the
same script.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numpy as np

from .simplex import adaptive_deviation_norm, one_hot

SCRIPT_HEADER = "# trackexp game script v1"


def make_rng(seed: int) -> np.random.Generator:
    return np.random.Generator(np.random.Philox(int(seed)))


@dataclass
class GameScript:
    """A finite loss sequence plus optional metadata.

    ``losses`` is ``(T, M)``; ``ranges`` holds the per-round half-ranges
    ``U_t``; ``competitor`` is a ``(T, M)`` sequence of distributions.
    ``true_losses`` is set by noisy wrappers (regret is measured on it).
    """

    losses: np.ndarray
    ranges: np.ndarray | None = None
    competitor: np.ndarray | None = None
    path_budget: float | None = None
    seed: int | None = None
    true_losses: np.ndarray | None = None
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        self.losses = np.asarray(self.losses, dtype=np.float64)
        if self.losses.ndim != 2 or self.losses.shape[0] == 0 or self.losses.shape[1] < 2:
            raise ValueError(f"losses must be a non-empty (T, M>=2) array, got {self.losses.shape}")
        if not np.all(np.isfinite(self.losses)):
            raise ValueError("losses must be finite")
        for name in ("ranges", "competitor", "true_losses"):
            v = getattr(self, name)
            if v is not None:
                setattr(self, name, np.asarray(v, dtype=np.float64))
        if self.competitor is not None and self.competitor.shape != self.losses.shape:
            raise ValueError("competitor must have the same shape as losses")

    @property
    def T(self) -> int:
        return self.losses.shape[0]

    @property
    def M(self) -> int:
        return self.losses.shape[1]

    @property
    def deviation_norm(self) -> float:
        return adaptive_deviation_norm(self.losses)

    def regret_losses(self) -> np.ndarray:
        """Losses regret is measured against (the noiseless ones if known)."""
        return self.losses if self.true_losses is None else self.true_losses


def competitor_path(competitor) -> float:
    """``0.5 * sum_t ||p*_{t+1} - p*_t||_1``."""
    C = np.asarray(competitor, dtype=np.float64)
    if C.shape[0] < 2:
        return 0.0
    return float(0.5 * np.abs(np.diff(C, axis=0)).sum())


def _ranges(T: int, ranges) -> np.ndarray:
    if ranges is None:
        return np.ones(T)
    U = np.broadcast_to(np.asarray(ranges, dtype=np.float64), (T,)).copy()
    if np.any(U < 0):
        raise ValueError("ranges must be nonnegative")
    return U


def _best_fixed_sequence(losses: np.ndarray) -> np.ndarray:
    best = int(np.argmin(losses.sum(axis=0)))
    return np.tile(one_hot(best, losses.shape[1]), (losses.shape[0], 1))


def _split(total: int, parts: int) -> list[int]:
    """Lengths of ``parts`` near-equal pieces, longer ones first."""
    base, extra = divmod(total, parts)
    return [base + (1 if i < extra else 0) for i in range(parts)]


def _coins(rng: np.random.Generator, T: int) -> np.ndarray:
    return rng.integers(0, 2, size=T).astype(np.float64) * 2.0 - 1.0


def two_expert_env(T: int, ranges=None, seed: int = 0) -> GameScript:
    """Rademacher game: ``l_t = B_t U_t [1, -1]``."""
    if T < 1:
        raise ValueError("T must be >= 1")
    U = _ranges(T, ranges)
    B = _coins(make_rng(seed), T)
    losses = np.column_stack([B * U, -B * U])
    return GameScript(losses, U, _best_fixed_sequence(losses), 0.0, seed,
                      meta={"generator": "two_expert"})


def _indicator_losses(B, U, phase, M) -> np.ndarray:
    """Binary-code game: expert ``m <= 2^d`` gets sign from bit ``phase`` of ``m-1``."""
    d = int(math.floor(math.log2(M)))
    T = B.size
    losses = np.empty((T, M))
    codes = np.arange(2 ** d)
    bits = (codes[None, :] >> phase[:, None]) & 1
    # sign convention chosen so M = 2 coincides with the two-expert game
    losses[:, : 2 ** d] = (B * U)[:, None] * (1.0 - 2.0 * bits)
    losses[:, 2 ** d:] = U[:, None]
    return losses


def _phases(T: int, games: int) -> np.ndarray:
    return np.repeat(np.arange(games), _split(T, games))


def static_env(T: int, M: int, ranges=None, seed: int = 0) -> GameScript:
    """``min(floor(log2 M), T)`` consecutive two-way games encoded in binary."""
    if T < 1 or M < 2:
        raise ValueError("need T >= 1 and M >= 2")
    U = _ranges(T, ranges)
    B = _coins(make_rng(seed), T)
    d = int(math.floor(math.log2(M)))
    losses = _indicator_losses(B, U, _phases(T, min(d, T)), M)
    return GameScript(losses, U, _best_fixed_sequence(losses), 0.0, seed,
                      meta={"generator": "static"})


def dynamic_env(T: int, M: int, path_budget: float, ranges=None, seed: int = 0) -> GameScript:
    """``floor(P + 1)`` independent static games on consecutive time segments.

    The embedded competitor is the best expert of each segment, so it
    switches at most ``floor(P)`` times.
    """
    if T < 1 or M < 2:
        raise ValueError("need T >= 1 and M >= 2")
    if path_budget < 0:
        raise ValueError("path budget must be nonnegative")
    U = _ranges(T, ranges)
    B = _coins(make_rng(seed), T)
    d = int(math.floor(math.log2(M)))
    segments = min(int(math.floor(path_budget + 1.0)), T)
    lengths = _split(T, segments)
    phase = np.concatenate([_phases(n, min(d, n)) for n in lengths])
    losses = _indicator_losses(B, U, phase, M)
    competitor = np.empty_like(losses)
    start = 0
    for n in lengths:
        competitor[start:start + n] = _best_fixed_sequence(losses[start:start + n])
        start += n
    return GameScript(losses, U, competitor, float(path_budget), seed,
                      meta={"generator": "dynamic", "segments": lengths})


def drift_env(T: int, M: int, volatility: float, seed: int = 0, gap: float = 0.1) -> GameScript:
    """Benign stochastic game with a slowly rotating best expert.

    Every loss is uniform on ``[0, 1]`` except the current best expert's,
    which is uniform on ``[0, 1 - 2 gap]``. Each round the best expert moves
    to the next index with probability ``volatility``.
    """
    if T < 1 or M < 2:
        raise ValueError("need T >= 1 and M >= 2")
    if not 0.0 <= volatility <= 1.0:
        raise ValueError("volatility must lie in [0, 1]")
    if not 0.0 <= gap <= 0.5:
        raise ValueError("gap must lie in [0, 0.5]")
    rng = make_rng(seed)
    best = np.empty(T, dtype=np.int64)
    best[0] = rng.integers(M)
    moves = rng.random(T) < volatility
    moves[0] = False
    best = (best[0] + np.cumsum(moves)) % M
    losses = rng.random((T, M))
    rows = np.arange(T)
    losses[rows, best] *= 1.0 - 2.0 * gap
    competitor = np.zeros((T, M))
    competitor[rows, best] = 1.0
    U = 0.5 * (losses.max(axis=1) - losses.min(axis=1))
    return GameScript(losses, U, competitor, competitor_path(competitor), seed,
                      meta={"generator": "drift", "volatility": volatility, "gap": gap})


def lower_bound_value(script, M: int, P: float) -> float:
    """``L / sqrt(2) * sqrt(min(floor(P+1) floor(log2 M), T))``."""
    L = adaptive_deviation_norm(script)
    T = np.asarray(getattr(script, "losses", script)).shape[0]
    games = math.floor(P + 1.0) * math.floor(math.log2(M))
    return L / math.sqrt(2.0) * math.sqrt(min(games, T))


# ---------------------------------------------------------------- file format


def _fmt_row(row) -> str:
    return " ".join(repr(float(x)) for x in row)


def write_script(script: GameScript, path) -> None:
    """Write the line-oriented text format (floats at round-trip precision)."""
    lines = [
        SCRIPT_HEADER,
        f"T {script.T}",
        f"M {script.M}",
        f"seed {'none' if script.seed is None else int(script.seed)}",
        f"P {'none' if script.path_budget is None else repr(float(script.path_budget))}",
    ]
    if script.ranges is not None:
        lines.append("ranges")
        lines.append(_fmt_row(script.ranges))
    lines.append("losses")
    lines.extend(_fmt_row(r) for r in script.losses)
    for name in ("competitor", "true_losses"):
        block = getattr(script, name)
        if block is not None:
            lines.append(name)
            lines.extend(_fmt_row(r) for r in block)
    lines.append("end")
    with open(path, "w") as fh:
        fh.write("\n".join(lines) + "\n")


def read_script(path) -> GameScript:
    with open(path) as fh:
        lines = [ln.strip() for ln in fh if ln.strip()]
    if not lines or lines[0] != SCRIPT_HEADER:
        raise ValueError(f"{path}: missing script header")
    head = {}
    i = 1
    for key in ("T", "M", "seed", "P"):
        k, _, v = lines[i].partition(" ")
        if k != key:
            raise ValueError(f"{path}: expected {key!r} on line {i + 1}")
        head[key] = v
        i += 1
    T, M = int(head["T"]), int(head["M"])
    blocks: dict[str, np.ndarray] = {}
    while i < len(lines) and lines[i] != "end":
        name = lines[i]
        rows = 1 if name == "ranges" else T
        if name not in ("ranges", "losses", "competitor", "true_losses"):
            raise ValueError(f"{path}: unknown block {name!r}")
        data = np.array([[float(x) for x in lines[i + 1 + r].split()] for r in range(rows)])
        blocks[name] = data[0] if name == "ranges" else data
        i += 1 + rows
    if "losses" not in blocks or blocks["losses"].shape != (T, M):
        raise ValueError(f"{path}: loss block missing or malformed")
    return GameScript(
        blocks["losses"],
        blocks.get("ranges"),
        blocks.get("competitor"),
        None if head["P"] == "none" else float(head["P"]),
        None if head["seed"] == "none" else int(head["seed"]),
        blocks.get("true_losses"),
    )


def with_losses(script: GameScript, losses, **meta) -> GameScript:
    """Copy of ``script`` with new losses (ranges recomputed) and extra metadata."""
    losses = np.asarray(losses, dtype=np.float64)
    U = 0.5 * (losses.max(axis=1) - losses.min(axis=1))
    return replace(script, losses=losses, ranges=U, meta={**script.meta, **meta})
