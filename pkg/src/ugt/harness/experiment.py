"""Experiment description, resolution and execution."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .. import graph as graphs
from ..core import DivergenceError, Trajectory, UgtConfig, Variant, run
from ..graph import Digraph, GraphNotConnectableError
from ..presets import get_preset, instantiate
from ..problem import ProblemConstants, QuadraticProblem, constants, generate_quadratic, load_problem, save_problem
from ..theory import RateCertificate, certify, theorem_bounds
from ..weights import WeightMatrix, laplacian_weights, write_csv
from .plot import emit_plot
from .tuning import DEFAULT_TUNE_K, TuneResult, default_alpha_grid, default_beta_grid, tune

__all__ = [
    "GRAPH_ALIASES",
    "InvalidSpecError",
    "ExperimentSpec",
    "Resolved",
    "ExperimentResult",
    "resolve",
    "run_experiment",
    "divergence_footer",
]

GRAPH_ALIASES = {
    "cycle-d": "directed_cycle",
    "exp-d": "directed_exponential",
    "cycle-u": "undirected_cycle",
    "er": "erdos_renyi",
}


class InvalidSpecError(ValueError):
    pass


@dataclass
class ExperimentSpec:
    """Everything needed to build and run one experiment.

    Either ``preset`` or ``variant`` selects the algorithm. With ``tune``
    the grids replace ``alpha`` and, in variant mode, ``beta``; missing
    grids fall back to the defaults of :mod:`ugt.harness.tuning`.
    """

    graph: str | None = "cycle-d"
    n: int | None = 10
    e: int | None = None
    p: float | None = None
    graph_seed: int = 0
    graph_file: str | None = None
    m: int = 2
    prob_seed: int = 0
    eig_lo: float = 0.5
    eig_hi: float = 5.0
    c_scale: float = 1.0
    load_problem: str | None = None
    preset: str | None = None
    variant: str | None = None
    beta: float = 0.0
    alpha: float | None = None
    c: float | None = None
    iters: int = 1000
    stop_gap: float | None = None
    tune: bool = False
    alpha_grid: np.ndarray | None = field(default=None, repr=False)
    beta_grid: np.ndarray | None = field(default=None, repr=False)
    tune_k: int = DEFAULT_TUNE_K
    certify: bool = False
    out: str | None = None
    plot: str | None = None
    dump_weights: str | None = None
    dump_problem: str | None = None
    workers: int = 1


@dataclass
class Resolved:
    graph: Digraph
    weights: WeightMatrix
    problem: QuadraticProblem
    consts: ProblemConstants
    config: UgtConfig


@dataclass
class ExperimentResult:
    resolved: Resolved
    trajectory: Trajectory
    diverged: DivergenceError | None = None
    certificate: RateCertificate | None = None
    tuning: TuneResult | None = None
    baseline: Trajectory | None = None


def _build_graph(spec: ExperimentSpec) -> Digraph:
    if spec.graph_file:
        return graphs.read_edge_list(spec.graph_file, n=spec.n)
    if spec.graph is None:
        raise InvalidSpecError("either a graph kind or a graph file is required")
    kind = GRAPH_ALIASES.get(spec.graph, spec.graph)
    if kind not in graphs.GRAPH_KINDS:
        raise InvalidSpecError(f"unknown graph kind {spec.graph!r}; expected one of {', '.join(GRAPH_ALIASES)}")
    if spec.n is None:
        raise InvalidSpecError("the number of agents n is required")
    return graphs.generate_graph(kind, spec.n, seed=spec.graph_seed, e=spec.e, p=spec.p)


def _build_config(spec: ExperimentSpec, w: WeightMatrix, alpha: float) -> UgtConfig:
    if spec.preset and spec.variant:
        raise InvalidSpecError("choose either a preset or a variant, not both")
    if spec.preset:
        return instantiate(get_preset(spec.preset), w, alpha, c=spec.c)
    variant = Variant.parse(spec.variant or "cta")
    return UgtConfig(w, w, alpha=alpha, beta=spec.beta, variant=variant)


def resolve(spec: ExperimentSpec) -> Resolved:
    """Build the graph, problem and configuration, or raise :class:`InvalidSpecError`."""
    try:
        g = _build_graph(spec)
        w = laplacian_weights(g)
        if spec.load_problem:
            prob = load_problem(spec.load_problem)
        else:
            prob = generate_quadratic(g.n, spec.m, seed=spec.prob_seed,
                                      eig_range=(spec.eig_lo, spec.eig_hi), c_scale=spec.c_scale)
        if prob.n != g.n:
            raise InvalidSpecError(f"problem has {prob.n} agents but the graph has {g.n}")
        if spec.iters < 0:
            raise InvalidSpecError(f"iteration count must be nonnegative, got {spec.iters}")
        if spec.tune and spec.tune_k < 1:
            raise InvalidSpecError(f"tuning horizon must be >= 1, got {spec.tune_k}")
        if spec.workers < 1:
            raise InvalidSpecError(f"need at least one worker, got {spec.workers}")
        if spec.alpha is None and not spec.tune:
            raise InvalidSpecError("a step-size is required unless tuning")
        # while tuning, the step-size is a placeholder replaced per grid point
        alpha = spec.alpha if spec.alpha is not None else 1e-3
        cfg = _build_config(spec, w, alpha)
        consts = constants(prob)
    except InvalidSpecError:
        raise
    except (ValueError, OSError, GraphNotConnectableError) as exc:
        raise InvalidSpecError(str(exc)) from exc
    return Resolved(g, w, prob, consts, cfg)


def _grids(spec: ExperimentSpec, r: Resolved) -> tuple[np.ndarray, np.ndarray]:
    alpha_grid = spec.alpha_grid if spec.alpha_grid is not None else default_alpha_grid()
    if spec.beta_grid is not None:
        beta_grid = spec.beta_grid
    elif spec.preset:
        # a preset fixes its own gain
        beta_grid = np.array([r.config.beta])
    else:
        c = r.config
        sig1, sig2 = c.W1.sigma, c.W2.sigma
        if 0 <= sig1 < 1 and 0 <= sig2 < 1:
            bmax = theorem_bounds(c.variant, sig1, sig2, r.consts.mu, r.consts.l).beta_max
        else:
            bmax = math.nan
        beta_grid = default_beta_grid(bmax if math.isfinite(bmax) else 0.5)
    return np.asarray(alpha_grid, dtype=float), np.asarray(beta_grid, dtype=float)


def _sibling(path: str | Path, tag: str) -> Path:
    path = Path(path)
    return path.with_name(f"{path.stem}.{tag}{path.suffix or '.csv'}")


def _execute(r: Resolved, cfg: UgtConfig, spec: ExperimentSpec) -> tuple[Trajectory, DivergenceError | None]:
    try:
        return run(r.problem, cfg, max_iters=spec.iters, stop_gap=spec.stop_gap, x_star=r.consts.x_star), None
    except DivergenceError as exc:
        return exc.trajectory, exc


def divergence_footer(exc: DivergenceError | None) -> str | None:
    if exc is None:
        return None
    return f"diverged at k={exc.k} norm={exc.norm:.17g}"


def run_experiment(spec: ExperimentSpec) -> ExperimentResult:
    """Resolve, optionally tune and certify, run, and write the requested files.

    The trajectory CSV is only written when ``spec.out`` is set. Tuning
    failures propagate as :class:`TuningError`.
    """
    r = resolve(spec)
    if spec.dump_weights:
        write_csv(r.weights, spec.dump_weights)
    if spec.dump_problem:
        save_problem(r.problem, spec.dump_problem)

    tuned = None
    baseline = None
    cfg = r.config
    if spec.tune:
        alpha_grid, beta_grid = _grids(spec, r)
        tuned = tune(r.problem, cfg, alpha_grid, beta_grid, r.consts.x_star,
                     k_eval=spec.tune_k, workers=spec.workers)
        cfg = cfg.with_params(alpha=tuned.best_alpha, beta=tuned.best_beta)
        r.config = cfg

    traj, diverged = _execute(r, cfg, spec)
    cert = certify(cfg, r.consts) if spec.certify else None

    baseline_exc = None
    if tuned is not None and tuned.best_beta != 0.0 and np.any(tuned.grid_table[:, 1] == 0.0):
        a0, s0 = tuned.best_alpha_at(0.0)
        if math.isfinite(s0):
            baseline, baseline_exc = _execute(r, cfg.with_params(alpha=a0, beta=0.0), spec)

    if spec.out:
        traj.write_csv(spec.out, footer=divergence_footer(diverged))
        if baseline is not None:
            baseline.write_csv(_sibling(spec.out, "beta0"), footer=divergence_footer(baseline_exc))

    if spec.plot:
        _plot(spec, cfg, traj, baseline, tuned)

    return ExperimentResult(r, traj, diverged, cert, tuned, baseline)


def _plot(spec, cfg, traj, baseline, tuned) -> None:
    import tempfile

    label = f"{spec.preset or cfg.variant.value} alpha={cfg.alpha:.3g} beta={cfg.beta:.3g}"
    with tempfile.TemporaryDirectory() as tmp:
        paths = [Path(tmp) / "main.csv"]
        traj.write_csv(paths[0])
        labels = [label]
        if baseline is not None:
            paths.append(Path(tmp) / "beta0.csv")
            baseline.write_csv(paths[1])
            a0, _ = tuned.best_alpha_at(0.0)
            labels.append(f"{cfg.variant.value} alpha={a0:.3g} beta=0")
        emit_plot(paths, labels, spec.plot)
