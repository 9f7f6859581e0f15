"""How the certified step-size and rate degrade as the cycle grows.

    python demos/certificates.py
"""

from ugt import graph, problem, theory, weights
from ugt.core import UgtConfig


def main():
    print(f"{'n':>4} {'sigma':>8} {'beta_max':>10} {'alpha_max':>10} {'rho':>12}")
    for n in (5, 10, 20, 50, 100):
        w = weights.laplacian_weights(graph.directed_cycle(n))
        k = problem.constants(problem.generate_quadratic(n, 2, seed=0))
        b = theory.theorem_bounds("CTA", w.sigma, w.sigma, k.mu, k.l)
        beta = 0.5 * b.beta_max
        cfg = UgtConfig(w, w, alpha=0.9 * b.alpha_max(beta), beta=beta)
        cert = theory.certify(cfg, k)
        print(f"{n:>4} {w.sigma:>8.4f} {b.beta_max:>10.3e} {cfg.alpha:>10.3e} {cert.rho:>12.8f}")
    print()
    print(cert.to_text(), end="")


if __name__ == "__main__":
    main()
