"""Constant-step DGD stalls at a biased point; UGT converges exactly.

Writes ``dgd_dilemma.svg`` next to this script.

    python demos/dgd_dilemma.py
"""

from pathlib import Path

import numpy as np

from ugt import core, graph, presets, problem, theory, weights
from ugt.core import UgtConfig
from ugt.harness import plot

ITERS = 20_000


def main():
    w = weights.laplacian_weights(graph.erdos_renyi(10, 0.4, seed=1))
    p = problem.generate_quadratic(10, 2, seed=0)
    k = problem.constants(p)
    ks = np.arange(ITERS + 1)
    curves = []
    for rule in (presets.ConstantStep(0.01), presets.ConstantStep(0.05), presets.HarmonicStep(0.5)):
        gaps = presets.run_dgd(p, w, rule, k.x_star, max_iters=ITERS)
        print(f"DGD {rule}: gap at k={ITERS} is {gaps[-1]:.3e}")
        curves.append((f"DGD {type(rule).__name__}", ks[: len(gaps)], gaps))
    b = theory.theorem_bounds("CTA", w.sigma, w.sigma, k.mu, k.l)
    cfg = UgtConfig(w, w, alpha=0.9 * b.alpha_max(0.5 * b.beta_max), beta=0.5 * b.beta_max)
    traj = core.run(p, cfg, max_iters=ITERS, x_star=k.x_star)
    print(f"UGT certified: gap at k={ITERS} is {traj.rel_gap[-1]:.3e}")
    curves.append(("UGT certified", traj.k, traj.rel_gap))
    out = Path(__file__).with_name("dgd_dilemma.svg")
    out.write_text(plot.render_svg(curves, "DGD versus UGT"))
    print(f"wrote {out}")


if __name__ == "__main__":
    main()
