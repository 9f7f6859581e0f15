"""Tuned gain against the zero gain on a 100-agent directed cycle.

Writes ``beta_tuning.svg`` next to this script.

    python demos/beta_tuning.py
"""

from pathlib import Path

from ugt import core, graph, problem, weights
from ugt.core import UgtConfig
from ugt.harness import plot, tuning

TARGET = 1e-6


def trajectory(p, cfg, x_star, max_iters):
    try:
        return core.run(p, cfg, max_iters=max_iters, stop_gap=TARGET, x_star=x_star), ""
    except core.DivergenceError as exc:
        return exc.trajectory, f" (diverged at k={exc.k})"


def main():
    w = weights.laplacian_weights(graph.directed_cycle(100))
    p = problem.generate_quadratic(100, 2, seed=0)
    k = problem.constants(p)
    curves = []
    for variant in ("CTA", "ATC"):
        base = UgtConfig(w, w, alpha=1e-3, variant=variant)
        res = tuning.tune(p, base, tuning.log_grid(1e-7, 0.3, 20), tuning.linear_grid(0, 1, 6), k.x_star)
        a0, _ = res.best_alpha_at(0.0)
        for alpha, beta in ((res.best_alpha, res.best_beta), (a0, 0.0)):
            traj, note = trajectory(p, base.with_params(alpha=alpha, beta=beta), k.x_star, 60_000)
            label = f"{variant} a={alpha:.3g} b={beta:.2g}"
            print(f"{label:<28} first k below {TARGET:g}: {traj.first_below(TARGET)}{note}")
            curves.append((label, traj.k, traj.rel_gap))
    out = Path(__file__).with_name("beta_tuning.svg")
    out.write_text(plot.render_svg(curves, "directed cycle, n = 100"))
    print(f"wrote {out}")


if __name__ == "__main__":
    main()
