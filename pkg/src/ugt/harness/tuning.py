"""Empirical (alpha, beta) grid search.

A pair is scored by the relative gap it reaches at a fixed iteration ``K``;
pairs that diverge before ``K`` score ``+inf``. Each grid point is an
independent job, so the sweep can run on a worker pool without changing
the result.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from ..core import DivergenceError, UgtConfig, run
from ..problem import ObjectiveOracle

__all__ = [
    "TuneResult",
    "TuningError",
    "DEFAULT_TUNE_K",
    "log_grid",
    "linear_grid",
    "parse_grid",
    "default_alpha_grid",
    "default_beta_grid",
    "score",
    "tune",
]

DEFAULT_TUNE_K = 2000


class TuningError(RuntimeError):
    pass


@dataclass(frozen=True)
class TuneResult:
    best_alpha: float
    best_beta: float
    score: float
    # rows of (alpha, beta, score) ordered by (beta index, alpha index)
    grid_table: np.ndarray = field(repr=False)

    def __eq__(self, other):
        if not isinstance(other, TuneResult):
            return NotImplemented
        return (
            (self.best_alpha, self.best_beta, self.score) == (other.best_alpha, other.best_beta, other.score)
            and np.array_equal(self.grid_table, other.grid_table)
        )

    __hash__ = None

    def best_alpha_at(self, beta: float) -> tuple[float, float]:
        """Best ``(alpha, score)`` among the grid rows with this ``beta``."""
        rows = self.grid_table[self.grid_table[:, 1] == beta]
        if rows.size == 0:
            raise KeyError(f"beta={beta} is not in the grid")
        i = _argmin_tiebreak(rows)
        return float(rows[i, 0]), float(rows[i, 2])


def log_grid(lo: float, hi: float, pts: int) -> np.ndarray:
    if not 0 < lo <= hi or pts < 1:
        raise ValueError(f"need 0 < lo <= hi and pts >= 1, got {lo}:{hi}:{pts}")
    return np.geomspace(lo, hi, pts) if pts > 1 else np.array([lo])


def linear_grid(lo: float, hi: float, pts: int, include_zero: bool = False) -> np.ndarray:
    if not 0 <= lo <= hi or pts < 1:
        raise ValueError(f"need 0 <= lo <= hi and pts >= 1, got {lo}:{hi}:{pts}")
    grid = np.linspace(lo, hi, pts) if pts > 1 else np.array([lo])
    if include_zero and grid[0] != 0.0:
        grid = np.concatenate([[0.0], grid])
    return grid


def parse_grid(text: str, scale: str) -> np.ndarray:
    """Parse ``lo:hi:pts``; ``scale`` is ``"log"`` or ``"linear"``."""
    parts = text.split(":")
    if len(parts) != 3:
        raise ValueError(f"grid must look like lo:hi:pts, got {text!r}")
    lo, hi, pts = float(parts[0]), float(parts[1]), int(parts[2])
    if scale == "log":
        return log_grid(lo, hi, pts)
    return linear_grid(lo, hi, pts)


def default_alpha_grid() -> np.ndarray:
    return log_grid(1e-4, 1.0, 25)


def default_beta_grid(beta_max: float, pts: int = 21) -> np.ndarray:
    """Linear grid starting at 0 up to ``max(2 beta_max, 1)``.

    The certified ``beta_max`` collapses towards zero on poorly connected
    graphs while the empirically best gain does not, so the span is kept
    at least ``[0, 1]``.
    """
    hi = 2.0 * beta_max if math.isfinite(beta_max) else 2.0
    return linear_grid(0.0, max(hi, 1.0), pts)


def score(p: ObjectiveOracle, cfg: UgtConfig, x_star, k_eval: int, x0=None) -> float:
    """Relative gap at iteration ``k_eval``; ``inf`` on divergence."""
    try:
        traj = run(p, cfg, x0=x0, max_iters=k_eval, x_star=x_star)
    except DivergenceError:
        return math.inf
    value = float(traj.rel_gap[-1])
    return value if math.isfinite(value) else math.inf


def _argmin_tiebreak(table: np.ndarray) -> int:
    # smallest score, then smaller alpha, then smaller beta
    order = np.lexsort((table[:, 1], table[:, 0], table[:, 2]))
    return int(order[0])


def tune(
    p: ObjectiveOracle,
    base: UgtConfig,
    alpha_grid,
    beta_grid,
    x_star,
    k_eval: int = DEFAULT_TUNE_K,
    x0=None,
    workers: int = 1,
) -> TuneResult:
    """Score every ``(alpha, beta)`` pair and return the minimizer.

    ``base`` supplies the mixing matrices and the variant; its own
    ``alpha`` and ``beta`` are ignored.
    """
    alpha_grid = np.asarray(alpha_grid, dtype=float).ravel()
    beta_grid = np.asarray(beta_grid, dtype=float).ravel()
    if alpha_grid.size == 0 or beta_grid.size == 0:
        raise ValueError("tuning grids must be nonempty")
    if k_eval < 1:
        raise ValueError(f"evaluation iteration must be >= 1, got {k_eval}")
    if workers < 1:
        raise ValueError(f"need at least one worker, got {workers}")
    pairs = [(float(a), float(b)) for b in beta_grid for a in alpha_grid]

    def job(pair):
        a, b = pair
        return score(p, base.with_params(alpha=a, beta=b), x_star, k_eval, x0)

    if workers == 1:
        scores = [job(pair) for pair in pairs]
    else:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            # map preserves grid order regardless of completion order
            scores = list(pool.map(job, pairs))
    table = np.array([(a, b, s) for (a, b), s in zip(pairs, scores)], dtype=float)
    if not np.isfinite(table[:, 2]).any():
        raise TuningError("no convergent configuration in grid")
    i = _argmin_tiebreak(table)
    return TuneResult(
        best_alpha=float(table[i, 0]),
        best_beta=float(table[i, 1]),
        score=float(table[i, 2]),
        grid_table=table,
    )
