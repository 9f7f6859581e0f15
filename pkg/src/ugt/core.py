"""The UGT iteration: CTA and ATC recursions, trajectories and error vectors.

Both variants keep an iterate ``x`` and a gradient tracker ``g`` (stacked
``(n, m)`` arrays) and start from ``g = alpha * grad f(x0)``::

    CTA:  x+ = W1 x - g
          g+ = W2 g + beta (I - W2) W1 x + alpha (grad f(x+) - grad f(x))
    ATC:  x+ = W1 (x - g)
          g+ = W2 g + beta (I - W2) x + alpha (grad f(x+) - grad f(x))

Mixing multiplies the ``n x n`` matrix against the ``m``-column state, which
is the same as applying ``W kron I_m`` to the flat vector.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import IO, Iterator

import numpy as np

from .problem import ObjectiveOracle, QuadraticProblem
from .weights import STOCHASTIC_ATOL, WeightMatrix, validate_weights

__all__ = [
    "Variant",
    "UgtConfig",
    "UgtState",
    "ErrorVector",
    "Trajectory",
    "DivergenceError",
    "init",
    "step",
    "step_cta_single_round_form",
    "iterate",
    "run",
    "error_vector",
    "CSV_HEADER",
]

DIVERGENCE_NORM = 1e12
CSV_HEADER = ("k", "rel_gap", "consensus_err", "tracking_err", "opt_err", "avg_tracking_residual")
_CHUNK_ROWS = 65536


class Variant(str, enum.Enum):
    CTA = "CTA"
    ATC = "ATC"

    @classmethod
    def parse(cls, value) -> Variant:
        if isinstance(value, cls):
            return value
        try:
            return cls(str(value).upper())
        except ValueError:
            raise ValueError(f"unknown variant {value!r}; expected CTA or ATC") from None


class DivergenceError(RuntimeError):
    """Iterates blew up; ``k`` is the offending iteration and ``norm`` the size seen."""

    def __init__(self, k: int, norm: float, trajectory: Trajectory | None = None):
        super().__init__(f"iterates diverged at k={k} (norm {norm:.3g})")
        self.k = k
        self.norm = norm
        self.trajectory = trajectory


@dataclass(frozen=True)
class UgtConfig:
    """Mixing matrices, step-size, modified-term gain and variant.

    With ``strict=False`` the matrices only need unit row and column sums;
    nonnegativity and primitivity are not enforced. Aug-DGM's second
    matrix ``I - (I - W)^2`` is signed on most sparse graphs.
    """

    W1: WeightMatrix
    W2: WeightMatrix
    alpha: float
    beta: float = 0.0
    variant: Variant = Variant.CTA
    strict: bool = True

    def __post_init__(self):
        for name in ("W1", "W2"):
            w = getattr(self, name)
            if not isinstance(w, WeightMatrix):
                object.__setattr__(self, name, WeightMatrix(w))
        object.__setattr__(self, "variant", Variant.parse(self.variant))
        if not self.alpha > 0:
            raise ValueError(f"step-size must be positive, got {self.alpha}")
        if not self.beta >= 0:
            raise ValueError(f"beta must be nonnegative, got {self.beta}")
        if self.W1.n != self.W2.n:
            raise ValueError(f"W1 is {self.W1.n}x{self.W1.n} but W2 is {self.W2.n}x{self.W2.n}")
        for name in ("W1", "W2"):
            diag = validate_weights(getattr(self, name))
            sums_ok = max(diag.max_row_defect, diag.max_col_defect) <= STOCHASTIC_ATOL
            if not self.strict:
                if not sums_ok:
                    raise ValueError(f"{name} rows and columns must sum to one")
                continue
            if not diag.doubly_stochastic:
                raise ValueError(
                    f"{name} is not doubly stochastic (row defect {diag.max_row_defect:.3g}, "
                    f"column defect {diag.max_col_defect:.3g})"
                )
            if not diag.primitive:
                raise ValueError(f"{name} is not primitive")

    @property
    def n(self) -> int:
        return self.W1.n

    def with_params(self, **changes) -> UgtConfig:
        return replace(self, **changes)

    def isclose(self, other: UgtConfig, atol: float = 1e-14) -> bool:
        return (
            self.variant == other.variant
            and self.strict == other.strict
            and self.alpha == other.alpha
            and self.beta == other.beta
            and self.W1.isclose(other.W1, atol)
            and self.W2.isclose(other.W2, atol)
        )


@dataclass
class UgtState:
    k: int
    x: np.ndarray
    g: np.ndarray
    grad: np.ndarray


@dataclass(frozen=True)
class ErrorVector:
    consensus_err: float
    tracking_err: float
    opt_err: float

    def as_array(self) -> np.ndarray:
        return np.array([self.consensus_err, self.tracking_err, self.opt_err])


@dataclass
class Trajectory:
    """Per-iteration metrics; one array per column of :data:`CSV_HEADER`."""

    data: np.ndarray = field(repr=False)

    def __post_init__(self):
        self.data = np.asarray(self.data, dtype=float).reshape(-1, len(CSV_HEADER))

    def __len__(self) -> int:
        return self.data.shape[0]

    @property
    def k(self) -> np.ndarray:
        return self.data[:, 0].astype(int)

    @property
    def rel_gap(self) -> np.ndarray:
        return self.data[:, 1]

    @property
    def consensus_err(self) -> np.ndarray:
        return self.data[:, 2]

    @property
    def tracking_err(self) -> np.ndarray:
        return self.data[:, 3]

    @property
    def opt_err(self) -> np.ndarray:
        return self.data[:, 4]

    @property
    def avg_tracking_residual(self) -> np.ndarray:
        return self.data[:, 5]

    def errors(self) -> np.ndarray:
        """``(len, 3)`` array of error vectors."""
        return self.data[:, 2:5]

    def first_below(self, gap: float) -> int | None:
        """Smallest recorded ``k`` with ``rel_gap < gap``."""
        hit = np.flatnonzero(self.rel_gap < gap)
        return int(self.data[hit[0], 0]) if hit.size else None

    def write_csv(self, dest: str | Path | IO[str], footer: str | None = None) -> None:
        if isinstance(dest, (str, Path)):
            with open(dest, "w", newline="\n") as fh:
                self.write_csv(fh, footer)
            return
        dest.write(",".join(CSV_HEADER) + "\n")
        for row in self.data:
            dest.write(f"{int(row[0])}," + ",".join(f"{v:.17g}" for v in row[1:]) + "\n")
        if footer:
            for line in footer.splitlines():
                dest.write(f"# {line}\n")

    @classmethod
    def read_csv(cls, path: str | Path) -> Trajectory:
        with open(path) as fh:
            header = fh.readline().strip().split(",")
            if tuple(header) != CSV_HEADER:
                raise ValueError(f"{path}: unexpected header {header}")
            rows = [
                [float(v) for v in line.split(",")]
                for line in fh
                if line.strip() and not line.startswith("#")
            ]
        return cls(np.array(rows, dtype=float))


def _mix(w: WeightMatrix, v: np.ndarray) -> np.ndarray:
    return w.entries @ v


def init(p: ObjectiveOracle, cfg: UgtConfig, x0=None) -> UgtState:
    if cfg.n != p.n:
        raise ValueError(f"weights are for {cfg.n} agents but the problem has {p.n}")
    x = np.zeros((p.n, p.m)) if x0 is None else np.array(p.as_stacked(x0), dtype=float)
    grad = p.stacked_gradient(x)
    return UgtState(k=0, x=x, g=cfg.alpha * grad, grad=grad)


def _check_finite(k: int, *arrays: np.ndarray) -> None:
    worst = max(float(np.linalg.norm(a)) for a in arrays)
    if not np.isfinite(worst) or worst > DIVERGENCE_NORM:
        raise DivergenceError(k, worst)


def step(p: ObjectiveOracle, cfg: UgtConfig, s: UgtState) -> UgtState:
    """One synchronous round; calls the gradient oracle exactly once."""
    if cfg.variant is Variant.ATC:
        x_new = _mix(cfg.W1, s.x - s.g)
        grad_new = p.stacked_gradient(x_new)
        g_new = _mix(cfg.W2, s.g) + cfg.beta * (s.x - _mix(cfg.W2, s.x)) + cfg.alpha * (grad_new - s.grad)
    else:
        wx = _mix(cfg.W1, s.x)
        x_new = wx - s.g
        grad_new = p.stacked_gradient(x_new)
        g_new = _mix(cfg.W2, s.g) + cfg.beta * (wx - _mix(cfg.W2, wx)) + cfg.alpha * (grad_new - s.grad)
    _check_finite(s.k + 1, x_new, g_new)
    return UgtState(k=s.k + 1, x=x_new, g=g_new, grad=grad_new)


def step_cta_single_round_form(p: ObjectiveOracle, cfg: UgtConfig, s: UgtState) -> UgtState:
    """CTA round with the tracker written as
    ``(1 - beta) W2 g + beta (g + (I - W2) x+) + alpha * delta_grad``,
    which needs only the already-mixed ``x+`` and ``g``.
    """
    if cfg.variant is not Variant.CTA:
        raise ValueError("the single-round rewrite applies to the CTA variant only")
    x_new = _mix(cfg.W1, s.x) - s.g
    grad_new = p.stacked_gradient(x_new)
    b = cfg.beta
    g_new = (
        (1.0 - b) * _mix(cfg.W2, s.g)
        + b * (s.g + x_new - _mix(cfg.W2, x_new))
        + cfg.alpha * (grad_new - s.grad)
    )
    _check_finite(s.k + 1, x_new, g_new)
    return UgtState(k=s.k + 1, x=x_new, g=g_new, grad=grad_new)


def iterate(p: ObjectiveOracle, cfg: UgtConfig, x0=None, n_iters: int | None = None) -> Iterator[UgtState]:
    """Yield the initial state and then every subsequent one."""
    s = init(p, cfg, x0)
    yield s
    while n_iters is None or s.k < n_iters:
        s = step(p, cfg, s)
        yield s


def error_vector(s: UgtState, x_star) -> ErrorVector:
    n = s.x.shape[0]
    xbar = s.x.mean(axis=0)
    gbar = s.g.mean(axis=0)
    return ErrorVector(
        consensus_err=float(np.linalg.norm(s.x - xbar)),
        tracking_err=float(np.linalg.norm(s.g - gbar)),
        opt_err=float(np.sqrt(n) * np.linalg.norm(xbar - np.asarray(x_star, dtype=float))),
    )


def _row(p: ObjectiveOracle, cfg: UgtConfig, s: UgtState, x_star, denom: float) -> list[float]:
    xbar = s.x.mean(axis=0)
    resid = float(np.linalg.norm(s.g.mean(axis=0) - cfg.alpha * p.global_gradient(xbar)))
    if x_star is None:
        ev = error_vector(s, np.zeros(p.m))
        return [s.k, np.nan, ev.consensus_err, ev.tracking_err, np.nan, resid]
    ev = error_vector(s, x_star)
    gap = float(np.linalg.norm(s.x - x_star)) / denom if denom > 0 else 0.0
    return [s.k, gap, ev.consensus_err, ev.tracking_err, ev.opt_err, resid]


def run(
    p: ObjectiveOracle,
    cfg: UgtConfig,
    x0=None,
    max_iters: int = 1000,
    stop_gap: float | None = None,
    x_star=None,
    engine: str = "auto",
) -> Trajectory:
    """Iterate until ``max_iters`` or until the relative gap drops to ``stop_gap``.

    The relative gap ``||x^k - 1 x*|| / ||x^0 - 1 x*||`` is only recorded
    when ``x_star`` is given; it is reported as 0 when the start is already
    optimal. ``engine="auto"`` uses the compiled loop for quadratic
    problems and the generic :func:`step` otherwise.

    Raises :class:`DivergenceError` carrying the partial trajectory.
    """
    if engine not in ("auto", "numpy", "compiled"):
        raise ValueError(f"unknown engine {engine!r}")
    if x_star is not None:
        x_star = np.asarray(x_star, dtype=float)
    use_compiled = engine == "compiled" or (engine == "auto" and isinstance(p, QuadraticProblem))
    if use_compiled:
        if not isinstance(p, QuadraticProblem):
            raise TypeError("the compiled engine supports QuadraticProblem only")
        return _run_compiled(p, cfg, x0, max_iters, stop_gap, x_star)

    s = init(p, cfg, x0)
    denom = float(np.linalg.norm(s.x - x_star)) if x_star is not None else 0.0
    rows = []
    while True:
        rows.append(_row(p, cfg, s, x_star, denom))
        if x_star is not None and stop_gap is not None and rows[-1][1] <= stop_gap:
            break
        if s.k >= max_iters:
            break
        try:
            s = step(p, cfg, s)
        except DivergenceError as exc:
            exc.trajectory = Trajectory(np.array(rows))
            raise
    return Trajectory(np.array(rows))


def _run_compiled(p, cfg, x0, max_iters, stop_gap, x_star) -> Trajectory:
    from . import _kernels

    s = init(p, cfg, x0)
    x, g, grad = (np.ascontiguousarray(a, dtype=float).copy() for a in (s.x, s.g, s.grad))
    has_star = x_star is not None
    star = x_star if has_star else np.zeros(p.m)
    denom = float(np.linalg.norm(x - star)) if has_star else 0.0
    w1 = np.ascontiguousarray(cfg.W1.entries)
    w2 = np.ascontiguousarray(cfg.W2.entries)
    q2 = np.ascontiguousarray(2.0 * p.Q)
    c = np.ascontiguousarray(p.c)
    qbar2 = np.ascontiguousarray(2.0 * p.Q.mean(axis=0))
    cbar = np.ascontiguousarray(p.c.mean(axis=0))
    gap_arg = -1.0 if stop_gap is None else float(stop_gap)
    chunks = []
    k = 0
    first = True
    while True:
        out = np.empty((min(_CHUNK_ROWS, max_iters - k + 1), len(CSV_HEADER)))
        rows, status, k, norm = _kernels.ugt_quadratic_chunk(
            w1, w2, float(cfg.alpha), float(cfg.beta), cfg.variant is Variant.ATC,
            q2, c, qbar2, cbar, star, has_star, denom, x, g, grad,
            k, int(max_iters), gap_arg, first, out,
        )
        first = False
        chunks.append(out[:rows])
        if status == _kernels.STATUS_DIVERGED:
            raise DivergenceError(k, norm, Trajectory(np.concatenate(chunks)))
        if status == _kernels.STATUS_STOPPED:
            return Trajectory(np.concatenate(chunks))
