"""Doubly stochastic mixing matrices and consensus contraction factors."""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property
from pathlib import Path

import numpy as np

from .graph import Digraph, is_strongly_connected, is_weight_balanced

__all__ = [
    "WeightMatrix",
    "WeightDiagnostics",
    "NotStochasticError",
    "laplacian_weights",
    "validate_weights",
    "consensus_contraction",
    "averaging_matrix",
    "support_laplacian",
    "lazy",
    "laplacian_step",
    "matrix_power",
    "second_order_complement",
    "write_csv",
]

STOCHASTIC_ATOL = 1e-12
# consensus_contraction refuses inputs beyond this defect
CONTRACTION_ATOL = 1e-9


class NotStochasticError(ValueError):
    pass


@dataclass(frozen=True, eq=False)
class WeightMatrix:
    """Immutable dense ``n x n`` mixing matrix."""

    entries: np.ndarray = field(repr=False)

    def __post_init__(self):
        a = np.array(self.entries, dtype=float)
        if a.ndim != 2 or a.shape[0] != a.shape[1]:
            raise ValueError(f"weight matrix must be square, got shape {a.shape}")
        a.setflags(write=False)
        object.__setattr__(self, "entries", a)

    @property
    def n(self) -> int:
        return self.entries.shape[0]

    @cached_property
    def sigma(self) -> float:
        return consensus_contraction(self)

    def __eq__(self, other):
        if not isinstance(other, WeightMatrix):
            return NotImplemented
        return np.array_equal(self.entries, other.entries)

    def __hash__(self):
        return hash(self.entries.tobytes())

    def isclose(self, other: WeightMatrix, atol: float = 1e-14) -> bool:
        return self.n == other.n and bool(np.allclose(self.entries, other.entries, rtol=0, atol=atol))


@dataclass(frozen=True)
class WeightDiagnostics:
    doubly_stochastic: bool
    primitive: bool
    max_row_defect: float
    max_col_defect: float
    nonnegative: bool

    @property
    def ok(self) -> bool:
        return self.doubly_stochastic and self.primitive and self.nonnegative


def _as_array(w) -> np.ndarray:
    return w.entries if isinstance(w, WeightMatrix) else np.asarray(w, dtype=float)


def averaging_matrix(n: int) -> WeightMatrix:
    return WeightMatrix(np.full((n, n), 1.0 / n))


def laplacian_weights(g: Digraph, tau: float | None = None) -> WeightMatrix:
    """``W = I - L / tau`` with ``L = D_in - A``; ``tau`` defaults to ``d_max + 1``.

    Rows sum to one because ``L 1 = 0``; columns sum to one only on a
    weight-balanced graph, which is therefore required.
    """
    if not is_strongly_connected(g):
        raise ValueError("graph must be strongly connected")
    deg_in, deg_out = g.in_degrees(), g.out_degrees()
    if not is_weight_balanced(g):
        bad = int(np.flatnonzero(deg_in != deg_out)[0])
        raise ValueError(
            f"graph is not weight-balanced: node {bad} has in-degree {deg_in[bad]} "
            f"and out-degree {deg_out[bad]}"
        )
    d_max = int(deg_in.max()) if g.n else 0
    if tau is None:
        tau = d_max + 1.0
    elif tau <= d_max:
        raise ValueError(f"tau={tau} must exceed the maximum in-degree {d_max}")
    lap = np.diag(deg_in.astype(float)) - g.adjacency()
    return WeightMatrix(np.eye(g.n) - lap / tau)


def _support_strongly_connected(support: np.ndarray) -> bool:
    n = support.shape[0]
    reach = support | np.eye(n, dtype=bool)
    # repeated squaring of the reflexive support closes reachability in log2(n) rounds
    for _ in range(max(1, int(np.ceil(np.log2(max(n, 2)))))):
        reach = (reach.astype(np.int64) @ reach.astype(np.int64)) > 0
    return bool(reach.all())


def _is_primitive(a: np.ndarray) -> bool:
    if np.any(a < 0):
        return False
    support = a > 0
    if not _support_strongly_connected(support):
        return False
    if np.any(np.diag(support)):
        return True
    # irreducible with empty diagonal: Wielandt's bound on the primitivity exponent
    n = a.shape[0]
    exponent = (n - 1) ** 2 + 1
    result = np.eye(n, dtype=bool)
    base = support
    while exponent:
        if exponent & 1:
            result = (result.astype(np.int64) @ base.astype(np.int64)) > 0
        base = (base.astype(np.int64) @ base.astype(np.int64)) > 0
        exponent >>= 1
    return bool(result.all())


def validate_weights(w) -> WeightDiagnostics:
    a = _as_array(w)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise ValueError(f"expected a square matrix, got shape {a.shape}")
    row = float(np.max(np.abs(a.sum(axis=1) - 1.0)))
    col = float(np.max(np.abs(a.sum(axis=0) - 1.0)))
    nonneg = bool(np.all(a >= 0))
    return WeightDiagnostics(
        doubly_stochastic=nonneg and row <= STOCHASTIC_ATOL and col <= STOCHASTIC_ATOL,
        primitive=_is_primitive(a),
        max_row_defect=row,
        max_col_defect=col,
        nonnegative=nonneg,
    )


def consensus_contraction(w, method: str = "svd", tol: float = 1e-12, max_iter: int = 1_000_000) -> float:
    """Spectral norm of ``W - (1/n) 1 1^T``.

    ``method="power"`` runs power iteration on ``M^T M`` instead of a dense
    SVD; it is intended as a cross-check and converges slowly when the top
    singular value is nearly degenerate.
    """
    a = _as_array(w)
    n = a.shape[0]
    row = np.max(np.abs(a.sum(axis=1) - 1.0))
    col = np.max(np.abs(a.sum(axis=0) - 1.0))
    if max(row, col) > CONTRACTION_ATOL:
        raise NotStochasticError(f"matrix is not doubly stochastic (defect {max(row, col):.3g})")
    mat = a - 1.0 / n
    if method == "svd":
        return float(np.linalg.svd(mat, compute_uv=False)[0])
    if method != "power":
        raise ValueError(f"unknown method {method!r}")
    gram = mat.T @ mat
    # deterministic start with a component along every coordinate
    v = np.linspace(1.0, 2.0, n)
    v -= v.mean()
    v /= np.linalg.norm(v)
    lam = 0.0
    for _ in range(max_iter):
        u = gram @ v
        new = float(np.linalg.norm(u))
        if new == 0.0:
            return 0.0
        v = u / new
        if abs(new - lam) <= tol * new:
            lam = new
            break
        lam = new
    return float(np.sqrt(lam))


def support_laplacian(w) -> np.ndarray:
    """Unweighted Laplacian of the off-diagonal support of ``w``."""
    a = _as_array(w)
    adj = (a > 0).astype(float)
    np.fill_diagonal(adj, 0.0)
    return np.diag(adj.sum(axis=1)) - adj


def lazy(w, c: float) -> WeightMatrix:
    """``I - c (I - W)``; ``c = 1/2`` gives ``(I + W) / 2``."""
    a = _as_array(w)
    if c == 0.5:
        return WeightMatrix((np.eye(a.shape[0]) + a) / 2.0)
    return WeightMatrix(np.eye(a.shape[0]) - c * (np.eye(a.shape[0]) - a))


def laplacian_step(lap: np.ndarray, c: float) -> WeightMatrix:
    """``I - c L``."""
    lap = np.asarray(lap, dtype=float)
    return WeightMatrix(np.eye(lap.shape[0]) - c * lap)


def matrix_power(w, k: int) -> WeightMatrix:
    return WeightMatrix(np.linalg.matrix_power(_as_array(w), k))


def second_order_complement(w) -> WeightMatrix:
    """``I - (I - W)^2``."""
    a = _as_array(w)
    d = np.eye(a.shape[0]) - a
    return WeightMatrix(np.eye(a.shape[0]) - d @ d)


def write_csv(w, path: str | Path) -> None:
    a = _as_array(w)
    with open(path, "w", newline="\n") as fh:
        for row in a:
            fh.write(",".join(f"{v:.17g}" for v in row) + "\n")
