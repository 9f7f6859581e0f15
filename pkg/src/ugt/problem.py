"""Local objectives and their constants.

Stacked iterates are ``(n, m)`` arrays: row ``i`` is agent ``i``'s block.
Flat ``n*m`` vectors are accepted wherever a stacked iterate is expected.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
import scipy.linalg

__all__ = [
    "ObjectiveOracle",
    "QuadraticProblem",
    "ProblemConstants",
    "generate_quadratic",
    "constants",
    "stacked_gradient",
    "contraction_factor",
    "save_problem",
    "load_problem",
]


class ObjectiveOracle:
    """Per-agent value and gradient access for ``F(x) = (1/n) sum_i f_i(x)``.

    Subclasses implement :meth:`value` and :meth:`gradient`; the stacked and
    global helpers loop over agents unless overridden.
    """

    n: int
    m: int

    def value(self, i: int, x: np.ndarray) -> float:
        raise NotImplementedError

    def gradient(self, i: int, x: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def as_stacked(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        if x.shape == (self.n, self.m):
            return x
        if x.shape == (self.n * self.m,):
            return x.reshape(self.n, self.m)
        raise ValueError(f"expected {self.n} blocks of size {self.m}, got shape {x.shape}")

    def stacked_gradient(self, x) -> np.ndarray:
        x = self.as_stacked(x)
        return np.stack([self.gradient(i, x[i]) for i in range(self.n)])

    def stacked_value(self, x) -> float:
        x = self.as_stacked(x)
        return float(sum(self.value(i, x[i]) for i in range(self.n)))

    def global_value(self, x: np.ndarray) -> float:
        return float(np.mean([self.value(i, x) for i in range(self.n)]))

    def global_gradient(self, x: np.ndarray) -> np.ndarray:
        return np.mean([self.gradient(i, x) for i in range(self.n)], axis=0)


@dataclass(frozen=True, eq=False)
class QuadraticProblem(ObjectiveOracle):
    """``f_i(x) = x^T Q_i x + c_i^T x`` with symmetric positive definite ``Q_i``."""

    Q: np.ndarray = field(repr=False)
    c: np.ndarray = field(repr=False)

    def __post_init__(self):
        q = np.array(self.Q, dtype=float)
        c = np.array(self.c, dtype=float)
        if q.ndim != 3 or q.shape[1] != q.shape[2]:
            raise ValueError(f"Q must have shape (n, m, m), got {q.shape}")
        if c.shape != q.shape[:2]:
            raise ValueError(f"c must have shape {q.shape[:2]}, got {c.shape}")
        q = 0.5 * (q + np.transpose(q, (0, 2, 1)))
        lam_min = np.linalg.eigvalsh(q)[:, 0]
        if np.any(lam_min <= 0):
            bad = int(np.flatnonzero(lam_min <= 0)[0])
            raise ValueError(f"Q_{bad} is not positive definite (min eigenvalue {lam_min[bad]:.3g})")
        q.setflags(write=False)
        c.setflags(write=False)
        object.__setattr__(self, "Q", q)
        object.__setattr__(self, "c", c)

    @property
    def n(self) -> int:
        return self.Q.shape[0]

    @property
    def m(self) -> int:
        return self.Q.shape[1]

    def value(self, i, x):
        x = np.asarray(x, dtype=float)
        return float(x @ self.Q[i] @ x + self.c[i] @ x)

    def gradient(self, i, x):
        return 2.0 * self.Q[i] @ np.asarray(x, dtype=float) + self.c[i]

    def stacked_gradient(self, x):
        x = self.as_stacked(x)
        return 2.0 * np.matmul(self.Q, x[:, :, None])[:, :, 0] + self.c

    def stacked_value(self, x):
        x = self.as_stacked(x)
        return float(np.einsum("ni,nij,nj->", x, self.Q, x) + np.sum(self.c * x))

    def global_gradient(self, x):
        return 2.0 * self.Q.mean(axis=0) @ np.asarray(x, dtype=float) + self.c.mean(axis=0)

    def __eq__(self, other):
        if not isinstance(other, QuadraticProblem):
            return NotImplemented
        return np.array_equal(self.Q, other.Q) and np.array_equal(self.c, other.c)

    __hash__ = None


@dataclass(frozen=True)
class ProblemConstants:
    mu: float
    l_list: np.ndarray = field(repr=False)
    l: float
    l_bar: float
    x_star: np.ndarray


def stacked_gradient(p: ObjectiveOracle, x) -> np.ndarray:
    return p.stacked_gradient(x)


def _random_rotation(rng: np.random.Generator, m: int) -> np.ndarray:
    r, upper = np.linalg.qr(rng.standard_normal((m, m)))
    r = r * np.sign(np.diag(upper))
    if np.linalg.det(r) < 0:
        r[:, 0] = -r[:, 0]
    return r


def generate_quadratic(
    n: int,
    m: int,
    seed: int = 0,
    eig_range: tuple[float, float] = (0.5, 5.0),
    c_scale: float = 1.0,
) -> QuadraticProblem:
    """Random problem with ``Q_i = R^T diag(lam) R``, ``lam ~ U[eig_range]``.

    The offsets ``c_i`` are uniform in ``[-c_scale, c_scale]``.
    """
    lo, hi = eig_range
    if n < 1 or m < 1:
        raise ValueError(f"need n, m >= 1, got n={n}, m={m}")
    if not 0 < lo <= hi:
        raise ValueError(f"need 0 < lo <= hi, got eig_range={eig_range}")
    if c_scale < 0:
        raise ValueError(f"c_scale must be nonnegative, got {c_scale}")
    rng = np.random.default_rng(seed)
    q = np.empty((n, m, m))
    for i in range(n):
        rot = _random_rotation(rng, m)
        lam = rng.uniform(lo, hi, size=m)
        q[i] = rot.T @ np.diag(lam) @ rot
    c = rng.uniform(-c_scale, c_scale, size=(n, m))
    return QuadraticProblem(q, c)


def constants(p: QuadraticProblem) -> ProblemConstants:
    """Strong convexity, smoothness constants and the exact minimizer.

    ``l`` is the smoothness constant of the block-separable stacked
    objective, i.e. the largest ``l_i``.
    """
    l_list = 2.0 * np.linalg.eigvalsh(p.Q)[:, -1]
    q_bar = p.Q.mean(axis=0)
    mu = 2.0 * float(np.linalg.eigvalsh(q_bar)[0])
    try:
        x_star = scipy.linalg.solve(2.0 * q_bar, -p.c.mean(axis=0), assume_a="pos")
    except np.linalg.LinAlgError as exc:
        raise ValueError("averaged Hessian is singular") from exc
    return ProblemConstants(
        mu=mu,
        l_list=l_list,
        l=float(l_list.max()),
        l_bar=float(l_list.mean()),
        x_star=x_star,
    )


def contraction_factor(alpha: float, mu: float, l_bar: float) -> float:
    """Worst-case contraction of one gradient step on a mu-strongly convex, l_bar-smooth F."""
    return max(abs(1.0 - alpha * mu), abs(1.0 - alpha * l_bar))


def save_problem(p: QuadraticProblem, directory: str | Path) -> None:
    """Write ``Q_<i>.csv`` for every agent plus ``c.csv`` (one row per agent)."""
    d = Path(directory)
    d.mkdir(parents=True, exist_ok=True)
    for i in range(p.n):
        np.savetxt(d / f"Q_{i}.csv", p.Q[i], delimiter=",", fmt="%.17g")
    np.savetxt(d / "c.csv", p.c, delimiter=",", fmt="%.17g")


def load_problem(directory: str | Path) -> QuadraticProblem:
    d = Path(directory)
    c = np.loadtxt(d / "c.csv", delimiter=",", ndmin=2)
    n = c.shape[0]
    q = np.stack([np.loadtxt(d / f"Q_{i}.csv", delimiter=",", ndmin=2) for i in range(n)])
    if q.shape[1] != c.shape[1]:
        raise ValueError(f"Q blocks are {q.shape[1]}x{q.shape[2]} but c has {c.shape[1]} columns")
    return QuadraticProblem(q, c)
