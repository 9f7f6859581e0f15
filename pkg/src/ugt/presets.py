"""Known algorithms as UGT parameterizations, their native recursions, and DGD.

Every preset picks ``(variant, W1, W2, beta)`` from a base matrix ``W``,
its support Laplacian ``L`` and a parameter ``c``:

=================  =======  =================  =================  ====
name               variant  W1                 W2                 beta
=================  =======  =================  =================  ====
DIGing             CTA      W                  W                  0
EXTRA              CTA      (I+W)/2            (I+W)/2            1
DLM                CTA      I - cL             I - cL             1
ALG2019            CTA      W                  I - c(I-W)         1
ATC_TRACKING       ATC      W                  W                  0
AUG_DGM            ATC      W^2                I - (I-W)^2        1
EXACT_DIFFUSION    ATC      (I+W)/2            (I+W)/2            1
NIDS               ATC      I - c(I-W)         I - c(I-W)         1
=================  =======  =================  =================  ====
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

from .core import DIVERGENCE_NORM, DivergenceError, UgtConfig, Variant
from .problem import ObjectiveOracle
from .weights import (
    WeightMatrix,
    lazy,
    laplacian_step,
    matrix_power,
    second_order_complement,
    support_laplacian,
    validate_weights,
)

__all__ = [
    "PresetSpec",
    "PRESETS",
    "NATIVE_PRESETS",
    "get_preset",
    "instantiate",
    "default_dlm_c",
    "native_step",
    "native_residuals",
    "ExplicitNativeState",
    "native_explicit_init",
    "native_explicit_step",
    "ConstantStep",
    "HarmonicStep",
    "dgd_step",
    "run_dgd",
]


@dataclass(frozen=True)
class PresetSpec:
    name: str
    variant: Variant
    w1_rule: str
    w2_rule: str
    beta: float
    tracking_type: str
    needs_c: bool = False


PRESETS: dict[str, PresetSpec] = {
    s.name: s
    for s in (
        PresetSpec("DIGING", Variant.CTA, "W", "W", 0.0, "explicit"),
        PresetSpec("EXTRA", Variant.CTA, "(I+W)/2", "(I+W)/2", 1.0, "implicit"),
        PresetSpec("DLM", Variant.CTA, "I-cL", "I-cL", 1.0, "implicit", needs_c=True),
        PresetSpec("ALG2019", Variant.CTA, "W", "I-c(I-W)", 1.0, "implicit", needs_c=True),
        PresetSpec("ATC_TRACKING", Variant.ATC, "W", "W", 0.0, "explicit"),
        PresetSpec("AUG_DGM", Variant.ATC, "W^2", "I-(I-W)^2", 1.0, "explicit"),
        PresetSpec("EXACT_DIFFUSION", Variant.ATC, "(I+W)/2", "(I+W)/2", 1.0, "implicit"),
        PresetSpec("NIDS", Variant.ATC, "I-c(I-W)", "I-c(I-W)", 1.0, "implicit", needs_c=True),
    )
}

# presets whose native recursion is implemented (no primal-dual form for ALG2019)
NATIVE_PRESETS = tuple(name for name in PRESETS if name != "ALG2019")


def get_preset(name: str | PresetSpec) -> PresetSpec:
    if isinstance(name, PresetSpec):
        return name
    key = name.strip().upper().replace("-", "_").replace(" ", "_")
    if key not in PRESETS:
        raise ValueError(f"unknown preset {name!r}; expected one of {', '.join(PRESETS)}")
    return PRESETS[key]


def default_dlm_c(w_base) -> float:
    """``1 / (d_max + 1)`` so that ``I - cL`` is the Laplacian weight matrix."""
    lap = support_laplacian(w_base)
    return 1.0 / (float(np.max(np.diag(lap))) + 1.0)


def _mixing(rule: str, w: WeightMatrix, c: float | None) -> WeightMatrix:
    if rule == "W":
        return w
    if rule == "(I+W)/2":
        return lazy(w, 0.5)
    if rule == "I-c(I-W)":
        return lazy(w, c)
    if rule == "I-cL":
        return laplacian_step(support_laplacian(w), c)
    if rule == "W^2":
        return matrix_power(w, 2)
    if rule == "I-(I-W)^2":
        return second_order_complement(w)
    raise ValueError(f"unknown mixing rule {rule!r}")


def instantiate(spec, w_base: WeightMatrix, alpha: float, c: float | None = None) -> UgtConfig:
    """UGT configuration for a Table-1 row.

    ``c`` is required for ALG2019 and NIDS; DLM falls back to
    :func:`default_dlm_c`.
    """
    spec = get_preset(spec)
    if not isinstance(w_base, WeightMatrix):
        w_base = WeightMatrix(w_base)
    if spec.needs_c and c is None:
        if spec.name != "DLM":
            raise ValueError(f"preset {spec.name} needs the parameter c")
        c = default_dlm_c(w_base)
    if c is not None and c <= 0:
        raise ValueError(f"c must be positive, got {c}")
    mats = []
    strict = True
    for label, rule in (("W1", spec.w1_rule), ("W2", spec.w2_rule)):
        m = _mixing(rule, w_base, c)
        diag = validate_weights(m)
        if rule == "I-(I-W)^2" and not diag.nonnegative:
            # signed but with unit row/column sums; the tracker recursion only needs that
            strict = False
            mats.append(m)
            continue
        if not diag.nonnegative:
            raise ValueError(f"{spec.name}: {label} = {rule} has negative entries (c={c} too large?)")
        if not diag.doubly_stochastic:
            raise ValueError(f"{spec.name}: {label} = {rule} is not doubly stochastic")
        if not diag.primitive:
            raise ValueError(f"{spec.name}: {label} = {rule} is not primitive")
        mats.append(m)
    return UgtConfig(mats[0], mats[1], alpha=alpha, beta=spec.beta, variant=spec.variant, strict=strict)


def _native_matrix(spec: PresetSpec, w_base: WeightMatrix, c: float | None) -> np.ndarray:
    if spec.name == "EXTRA" or spec.name == "EXACT_DIFFUSION":
        return lazy(w_base, 0.5).entries
    if spec.name == "DLM":
        return laplacian_step(support_laplacian(w_base), default_dlm_c(w_base) if c is None else c).entries
    if spec.name == "NIDS":
        if c is None:
            raise ValueError("NIDS needs the parameter c")
        return lazy(w_base, c).entries
    return w_base.entries


def native_step(name, p: ObjectiveOracle, alpha: float, w_base: WeightMatrix, c: float | None,
                x_prev, x_curr, grad_prev, grad_curr) -> np.ndarray:
    """Next iterate of the algorithm's own two-step recursion.

    ``x_prev, x_curr`` are ``x^k, x^{k+1}``; the gradients are evaluated at
    those points. With ``M`` the algorithm's mixing matrix and
    ``d = grad_curr - grad_prev``:

    * EXTRA, DLM:              ``2 M x1 - M x0 - alpha d``
    * Exact diffusion, NIDS:   ``M (2 x1 - x0 - alpha d)``
    * DIGing (tracker removed):  ``2 W x1 - W^2 x0 - alpha d``
    * ATC tracking:            ``2 W x1 - W^2 x0 - alpha W d``
    * Aug-DGM:                 ``2 W x1 - W^2 x0 - alpha W^2 d``
    """
    spec = get_preset(name)
    if spec.name not in NATIVE_PRESETS:
        raise ValueError(f"no native recursion available for {spec.name}")
    if not isinstance(w_base, WeightMatrix):
        w_base = WeightMatrix(w_base)
    x0, x1 = p.as_stacked(x_prev), p.as_stacked(x_curr)
    d = p.as_stacked(grad_curr) - p.as_stacked(grad_prev)
    m = _native_matrix(spec, w_base, c)
    if spec.name in ("EXTRA", "DLM"):
        return 2.0 * (m @ x1) - m @ x0 - alpha * d
    if spec.name in ("EXACT_DIFFUSION", "NIDS"):
        return m @ (2.0 * x1 - x0 - alpha * d)
    w = w_base.entries
    w2x0 = w @ (w @ x0)
    if spec.name == "DIGING":
        return 2.0 * (w @ x1) - w2x0 - alpha * d
    if spec.name == "ATC_TRACKING":
        return 2.0 * (w @ x1) - w2x0 - alpha * (w @ d)
    return 2.0 * (w @ x1) - w2x0 - alpha * (w @ (w @ d))


def native_residuals(name, p: ObjectiveOracle, alpha: float, w_base, c, xs, grads) -> np.ndarray:
    """Max-abs residual of the native recursion along a sequence of iterates.

    Entry ``k`` compares ``xs[k+2]`` with :func:`native_step` applied to
    ``xs[k], xs[k+1]``.
    """
    out = np.empty(max(len(xs) - 2, 0))
    for k in range(len(out)):
        pred = native_step(name, p, alpha, w_base, c, xs[k], xs[k + 1], grads[k], grads[k + 1])
        out[k] = float(np.max(np.abs(pred - xs[k + 2])))
    return out


@dataclass
class ExplicitNativeState:
    k: int
    x: np.ndarray
    y: np.ndarray
    grad: np.ndarray


def native_explicit_init(p: ObjectiveOracle, x0) -> ExplicitNativeState:
    x = np.array(p.as_stacked(x0), dtype=float)
    grad = p.stacked_gradient(x)
    return ExplicitNativeState(0, x, grad.copy(), grad)


def native_explicit_step(name, p: ObjectiveOracle, alpha: float, w_base, s: ExplicitNativeState) -> ExplicitNativeState:
    """Tracker form with ``y^0 = grad f(x^0)``.

    DIGing:        ``x+ = W x - alpha y``,    ``y+ = W y + d``
    ATC tracking:  ``x+ = W (x - alpha y)``,  ``y+ = W y + d``
    Aug-DGM:       ``x+ = W (x - alpha y)``,  ``y+ = W (y + d)``
    """
    spec = get_preset(name)
    w = w_base.entries if isinstance(w_base, WeightMatrix) else np.asarray(w_base)
    if spec.name == "DIGING":
        x_new = w @ s.x - alpha * s.y
    elif spec.name in ("ATC_TRACKING", "AUG_DGM"):
        x_new = w @ (s.x - alpha * s.y)
    else:
        raise ValueError(f"{spec.name} has no explicit tracker form")
    grad_new = p.stacked_gradient(x_new)
    if spec.name == "AUG_DGM":
        y_new = w @ (s.y + grad_new - s.grad)
    else:
        y_new = w @ s.y + grad_new - s.grad
    return ExplicitNativeState(s.k + 1, x_new, y_new, grad_new)


@dataclass(frozen=True)
class ConstantStep:
    alpha: float

    def __call__(self, k: int) -> float:
        return self.alpha


@dataclass(frozen=True)
class HarmonicStep:
    alpha0: float

    def __call__(self, k: int) -> float:
        return self.alpha0 / (k + 1)


def dgd_step(p: ObjectiveOracle, w_base, step_rule: Callable[[int], float], x, k: int) -> np.ndarray:
    """``x+ = W x - alpha(k) grad f(x)``."""
    w = w_base.entries if isinstance(w_base, WeightMatrix) else np.asarray(w_base)
    x = p.as_stacked(x)
    x_new = w @ x - step_rule(k) * p.stacked_gradient(x)
    norm = float(np.linalg.norm(x_new))
    if not np.isfinite(norm) or norm > DIVERGENCE_NORM:
        raise DivergenceError(k + 1, norm)
    return x_new


def run_dgd(p: ObjectiveOracle, w_base, step_rule, x_star, x0=None, max_iters: int = 1000) -> np.ndarray:
    """Relative optimality gaps of DGD for ``k = 0..max_iters``."""
    x = np.zeros((p.n, p.m)) if x0 is None else np.array(p.as_stacked(x0), dtype=float)
    x_star = np.asarray(x_star, dtype=float)
    denom = float(np.linalg.norm(x - x_star))
    gaps = np.empty(max_iters + 1)
    for k in range(max_iters + 1):
        gaps[k] = float(np.linalg.norm(x - x_star)) / denom if denom > 0 else 0.0
        if k < max_iters:
            x = dgd_step(p, w_base, step_rule, x, k)
    return gaps
