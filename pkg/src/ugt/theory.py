"""Linear-rate certificates.

The error vector ``(||x - 1 xbar||, ||g - 1 gbar||, sqrt(n) ||xbar - x*||)``
of a UGT run is bounded componentwise by a 3x3 nonnegative rate matrix;
its spectral radius below one certifies R-linear convergence.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .core import UgtConfig, Variant
from .problem import ProblemConstants, contraction_factor

__all__ = [
    "RateMatrix",
    "TheoremBounds",
    "RateCertificate",
    "LemmaPreconditionError",
    "build_rate_matrix",
    "spectral_radius",
    "characteristic_roots",
    "perron_root",
    "is_irreducible",
    "det_i_minus_g_closed_form",
    "rho_lt_via_det",
    "theorem_bounds",
    "certify",
]

ADMISSIBLE_MARGIN = 1e-12
RHO_AGREEMENT = 1e-9


class LemmaPreconditionError(ValueError):
    """The determinant criterion needs an irreducible matrix with small diagonal."""


@dataclass(frozen=True)
class RateMatrix:
    variant: Variant
    entries: np.ndarray = field(repr=False)
    alpha: float
    beta: float
    sigma1: float
    sigma2: float
    mu: float
    l: float
    l_bar: float
    eta: float

    @property
    def rho(self) -> float:
        return spectral_radius(self.entries)


def build_rate_matrix(variant, alpha, beta, sigma1, sigma2, mu, l, l_bar) -> RateMatrix:
    """Exact rate matrix for CTA (``G1``) or ATC (``G2``).

    ``alpha = 0`` is accepted so the limiting matrix can be inspected.
    """
    variant = Variant.parse(variant)
    if alpha < 0:
        raise ValueError(f"alpha must be nonnegative, got {alpha}")
    if beta < 0:
        raise ValueError(f"beta must be nonnegative, got {beta}")
    for name, s in (("sigma1", sigma1), ("sigma2", sigma2)):
        if not 0 <= s < 1:
            raise ValueError(f"{name} must lie in [0, 1), got {s}")
    if not 0 < mu <= l_bar <= l:
        raise ValueError(f"need 0 < mu <= l_bar <= l, got mu={mu}, l_bar={l_bar}, l={l}")
    al = alpha * l
    eta = contraction_factor(alpha, mu, l_bar)
    if variant is Variant.CTA:
        g12 = 1.0
        g21 = beta * sigma1 * (1 + sigma2) + al * (1 + sigma1 + al)
    else:
        g12 = sigma1
        g21 = beta * (1 + sigma2) + al * (1 + sigma1 + al)
    entries = np.array(
        [
            [sigma1, g12, 0.0],
            [g21, sigma2 + al, al * al],
            [al, 0.0, eta],
        ]
    )
    entries.setflags(write=False)
    return RateMatrix(variant, entries, alpha, beta, sigma1, sigma2, mu, l, l_bar, eta)


def _char_poly(b: np.ndarray) -> tuple[float, float, float]:
    """``(c2, c1, c0)`` with ``det(lambda I - B) = lambda^3 + c2 lambda^2 + c1 lambda + c0``."""
    tr = b[0, 0] + b[1, 1] + b[2, 2]
    minors = (
        b[0, 0] * b[1, 1] - b[0, 1] * b[1, 0]
        + b[0, 0] * b[2, 2] - b[0, 2] * b[2, 0]
        + b[1, 1] * b[2, 2] - b[1, 2] * b[2, 1]
    )
    return -tr, minors, -_det3(b)


def _det3(b: np.ndarray) -> float:
    return float(
        b[0, 0] * (b[1, 1] * b[2, 2] - b[1, 2] * b[2, 1])
        - b[0, 1] * (b[1, 0] * b[2, 2] - b[1, 2] * b[2, 0])
        + b[0, 2] * (b[1, 0] * b[2, 1] - b[1, 1] * b[2, 0])
    )


def characteristic_roots(mat) -> np.ndarray:
    """Roots of the characteristic cubic of a 3x3 matrix via Cardano's formula,
    each polished by Newton steps on the cubic."""
    b = np.asarray(mat, dtype=float)
    if b.shape != (3, 3):
        raise ValueError(f"expected a 3x3 matrix, got {b.shape}")
    # roots clustered near 1 lose their spread in the coefficients unless the
    # diagonal is shifted first; the shifted entries are exact differences
    s = float(np.max(np.diag(b)))
    c2, c1, c0 = _char_poly(b - s * np.eye(3))
    # depressed cubic t^3 + p t + q with lambda = t - c2/3
    shift = -c2 / 3.0
    p = c1 - c2 * c2 / 3.0
    q = 2.0 * c2**3 / 27.0 - c2 * c1 / 3.0 + c0
    disc = complex((q / 2.0) ** 2 + (p / 3.0) ** 3)
    sq = disc**0.5
    u3 = -q / 2.0 + sq
    if abs(u3) < abs(-q / 2.0 - sq):
        u3 = -q / 2.0 - sq
    omega = complex(-0.5, math.sqrt(3.0) / 2.0)
    roots = []
    if abs(u3) == 0.0:
        roots = [0.0j, 0.0j, 0.0j]
    else:
        u = u3 ** (1.0 / 3.0)
        for j in range(3):
            uj = u * omega**j
            roots.append(uj - p / (3.0 * uj))
    out = []
    for t in roots:
        lam = complex(t) + shift
        f = ((lam + c2) * lam + c1) * lam + c0
        for _ in range(3):
            df = (3.0 * lam + 2.0 * c2) * lam + c1
            if df == 0:
                break
            nxt = lam - f / df
            f_nxt = ((nxt + c2) * nxt + c1) * nxt + c0
            if not np.isfinite(nxt) or abs(f_nxt) >= abs(f):
                break
            lam, f = nxt, f_nxt
        out.append(lam + s)
    return np.array(out)


def is_irreducible(mat) -> bool:
    support = np.asarray(mat) != 0
    n = support.shape[0]
    reach = support | np.eye(n, dtype=bool)
    for _ in range(n):
        reach = (reach.astype(int) @ reach.astype(int)) > 0
    return bool(reach.all())


def perron_root(mat, tol: float = 1e-14, max_squarings: int = 200) -> float:
    """Perron root of a nonnegative irreducible matrix.

    Power iteration on the primitive matrix ``I + B``, accelerated by
    repeated squaring, stopped once the Collatz-Wielandt bounds bracket the
    root to ``tol``.
    """
    b = np.asarray(mat, dtype=float)
    if np.any(b < 0) or not is_irreducible(b):
        raise ValueError("power iteration needs a nonnegative irreducible matrix")
    shifted = b + np.eye(b.shape[0])
    power = shifted.copy()
    lo, hi = 0.0, np.inf
    for _ in range(max_squarings):
        v = power.sum(axis=1)
        ratios = (shifted @ v) / v
        lo, hi = float(ratios.min()), float(ratios.max())
        if hi - lo <= tol * hi:
            break
        power = power @ power
        power /= power.max()
    return 0.5 * (lo + hi) - 1.0


def spectral_radius(mat) -> float:
    """Largest root modulus of the characteristic cubic.

    For nonnegative irreducible input the result is cross-checked against
    :func:`perron_root`; disagreement beyond 1e-9 raises ``ArithmeticError``.
    """
    b = np.asarray(mat, dtype=float)
    if not np.all(np.isfinite(b)):
        raise ValueError("matrix has non-finite entries")
    rho = float(np.max(np.abs(characteristic_roots(b))))
    if np.all(b >= 0) and is_irreducible(b):
        pr = perron_root(b)
        if abs(pr - rho) > RHO_AGREEMENT * max(1.0, rho):
            raise ArithmeticError(f"cubic root {rho!r} and power iteration {pr!r} disagree")
    return rho


def det_i_minus_g_closed_form(alpha, beta, sigma1, sigma2, mu, l) -> float:
    """Expanded ``det[I - G1]`` valid when ``eta = 1 - alpha mu``."""
    al = alpha * l
    return -(al**3) + alpha * mu * (
        -(al**2) - 2 * al + (1 - sigma1) * (1 - sigma2) - beta * sigma1 * (1 + sigma2)
    )


def rho_lt_via_det(mat, lambda_star: float = 1.0) -> bool:
    """``rho(B) < lambda_star`` decided by the sign of ``det(lambda_star I - B)``.

    Valid for nonnegative irreducible ``B`` whose diagonal lies below
    ``lambda_star``; other inputs raise :class:`LemmaPreconditionError`.
    """
    b = np.asarray(mat, dtype=float)
    if b.shape != (3, 3):
        raise ValueError(f"expected a 3x3 matrix, got {b.shape}")
    if lambda_star <= 0:
        raise LemmaPreconditionError("lambda_star must be positive")
    if np.any(b < 0):
        raise LemmaPreconditionError("matrix has negative entries")
    if not is_irreducible(b):
        raise LemmaPreconditionError("matrix is reducible")
    if np.any(np.diag(b) >= lambda_star):
        raise LemmaPreconditionError(f"diagonal entries must be below {lambda_star}")
    return _det3(lambda_star * np.eye(3) - b) > 0


@dataclass(frozen=True)
class TheoremBounds:
    variant: Variant
    sigma1: float
    sigma2: float
    mu: float
    l: float
    beta_max: float

    def quadratic(self, beta: float) -> tuple[float, float, float]:
        s1, s2, mu, l = self.sigma1, self.sigma2, self.mu, self.l
        if self.variant is Variant.CTA:
            a, b = l**3 + mu * l**2, 2 * mu * l
        else:
            a, b = s1 * (l**3 + mu * l**2), (1 + s1**2) * mu * l
        c = mu * (beta * s1 * (1 + s2) - (1 - s1) * (1 - s2))
        return a, b, c

    def alpha_max(self, beta: float) -> float:
        """Sufficient step-size bound at ``beta``; 0 when the interval is empty."""
        if beta < 0:
            raise ValueError(f"beta must be nonnegative, got {beta}")
        if beta >= self.beta_max:
            return 0.0
        a, b, c = self.quadratic(beta)
        if c >= 0:
            return 0.0
        # positive root of a x^2 + b x + c, written to avoid cancellation
        root = -2.0 * c / (b + math.sqrt(b * b - 4.0 * a * c))
        return min((1 - self.sigma2) / self.l, root)


def theorem_bounds(variant, sigma1, sigma2, mu, l) -> TheoremBounds:
    variant = Variant.parse(variant)
    if not (0 <= sigma1 < 1 and 0 <= sigma2 < 1):
        raise ValueError(f"sigmas must lie in [0, 1), got {sigma1}, {sigma2}")
    if not 0 < mu <= l:
        raise ValueError(f"need 0 < mu <= l, got mu={mu}, l={l}")
    if sigma1 == 0:
        beta_max = math.inf
    else:
        beta_max = (1 - sigma1) * (1 - sigma2) / (sigma1 * (1 + sigma2))
    return TheoremBounds(variant, sigma1, sigma2, mu, l, beta_max)


@dataclass(frozen=True)
class RateCertificate:
    variant: Variant
    sigma1: float
    sigma2: float
    alpha: float
    beta: float
    rho: float
    beta_max: float
    alpha_max: float
    admissible: bool
    converges: bool
    rate_matrix: RateMatrix = field(repr=False)

    FIELDS = ("variant", "sigma1", "sigma2", "alpha", "beta", "rho",
              "beta_max", "alpha_max", "admissible", "converges")

    def as_dict(self) -> dict:
        return {name: getattr(self, name) for name in self.FIELDS}

    @staticmethod
    def _fmt(v) -> str:
        if isinstance(v, Variant):
            return v.value
        if isinstance(v, bool):
            return "true" if v else "false"
        if isinstance(v, float):
            if math.isinf(v):
                return "unbounded"
            return f"{v:.17g}"
        return str(v)

    def to_text(self) -> str:
        return "\n".join(f"{k}={self._fmt(v)}" for k, v in self.as_dict().items()) + "\n"

    @classmethod
    def csv_header(cls) -> str:
        return ",".join(cls.FIELDS)

    def csv_row(self) -> str:
        return ",".join(self._fmt(v) for v in self.as_dict().values())


def certify(cfg: UgtConfig, consts: ProblemConstants) -> RateCertificate:
    s1, s2 = cfg.W1.sigma, cfg.W2.sigma
    g = build_rate_matrix(cfg.variant, cfg.alpha, cfg.beta, s1, s2, consts.mu, consts.l, consts.l_bar)
    rho = spectral_radius(g.entries)
    bounds = theorem_bounds(cfg.variant, s1, s2, consts.mu, consts.l)
    if s1 == 0 or s2 == 0:
        # averaging matrices: the closed-form bounds presume sigma in (0, 1)
        alpha_max, admissible = math.nan, False
    else:
        alpha_max = bounds.alpha_max(cfg.beta)
        admissible = (
            cfg.beta < bounds.beta_max * (1 - ADMISSIBLE_MARGIN)
            and cfg.alpha < alpha_max * (1 - ADMISSIBLE_MARGIN)
        )
    return RateCertificate(
        variant=cfg.variant,
        sigma1=s1,
        sigma2=s2,
        alpha=cfg.alpha,
        beta=cfg.beta,
        rho=rho,
        beta_max=bounds.beta_max,
        alpha_max=alpha_max,
        admissible=admissible,
        converges=rho < 1,
        rate_matrix=g,
    )
