"""Run every preset through the unified recursion and check its native form.

    python demos/unification.py
"""

import numpy as np

from ugt import core, graph, presets, problem, weights

STEPS = {"DIGING": 0.02, "ATC_TRACKING": 0.02, "AUG_DGM": 0.02}
C = {"DLM": 1 / 6, "NIDS": 0.5}


def main():
    w = weights.laplacian_weights(graph.directed_exponential(10, 2))
    p = problem.generate_quadratic(10, 3, seed=0)
    x0 = np.random.default_rng(0).uniform(-1, 1, (10, 3))
    print(f"{'preset':<16} {'variant':<7} {'beta':>4}  max native residual")
    for name in presets.NATIVE_PRESETS:
        alpha, c = STEPS.get(name, 0.12), C.get(name)
        cfg = presets.instantiate(name, w, alpha=alpha, c=c)
        states = list(core.iterate(p, cfg, x0, 200))
        res = presets.native_residuals(name, p, alpha, w, c, [s.x for s in states], [s.grad for s in states])
        print(f"{name:<16} {cfg.variant.value:<7} {cfg.beta:>4.0f}  {res.max():.2e}")


if __name__ == "__main__":
    main()
