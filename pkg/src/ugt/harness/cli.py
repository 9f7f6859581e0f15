"""Command-line front-end.

Exit codes: 0 success, 2 divergence, 3 invalid experiment description,
4 tuning failure. ``--config FILE`` reads ``key = value`` lines whose keys
are flag names without the leading dashes; flags given on the command
line override the file.
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

from .experiment import GRAPH_ALIASES, ExperimentSpec, InvalidSpecError, divergence_footer, run_experiment
from .tuning import DEFAULT_TUNE_K, TuningError, parse_grid

__all__ = ["EXIT_OK", "EXIT_DIVERGED", "EXIT_INVALID", "EXIT_TUNING", "build_parser", "read_config", "main"]

EXIT_OK = 0
EXIT_DIVERGED = 2
EXIT_INVALID = 3
EXIT_TUNING = 4

_SWITCHES = ("tune", "certify")
_TRUE = {"1", "true", "yes", "on"}
_FALSE = {"0", "false", "no", "off"}


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_INVALID, f"{self.prog}: error: {message}\n")


def build_parser() -> argparse.ArgumentParser:
    ap = _Parser(prog="ugt", description="Run, tune and certify unified gradient tracking experiments.")
    ap.add_argument("--config", metavar="FILE", help="key = value file of flag defaults")

    g = ap.add_argument_group("graph")
    g.add_argument("--graph", choices=sorted(GRAPH_ALIASES), default="cycle-d")
    g.add_argument("--n", type=int, help="number of agents (default 10, or inferred from --graph-file)")
    g.add_argument("--e", type=int, help="exponent of the directed exponential graph")
    g.add_argument("--p", type=float, help="edge probability of the Erdos-Renyi graph")
    g.add_argument("--graph-seed", type=int, default=0)
    g.add_argument("--graph-file", help="edge list, one 'src dst' pair per line")

    q = ap.add_argument_group("problem")
    q.add_argument("--m", type=int, default=2, help="dimension of the decision variable")
    q.add_argument("--prob-seed", type=int, default=0)
    q.add_argument("--eig-lo", type=float, default=0.5)
    q.add_argument("--eig-hi", type=float, default=5.0)
    q.add_argument("--c-scale", type=float, default=1.0)
    q.add_argument("--load-problem", metavar="DIR")

    a = ap.add_argument_group("algorithm")
    mode = a.add_mutually_exclusive_group()
    mode.add_argument("--preset", metavar="NAME")
    mode.add_argument("--variant", choices=("cta", "atc"))
    a.add_argument("--beta", type=float, default=0.0)
    a.add_argument("--alpha", type=float)
    a.add_argument("--c", type=float, help="parameter of the DLM, NIDS and ALG2019 mixing rules")
    a.add_argument("--iters", type=int, default=1000)
    a.add_argument("--stop-gap", type=float)

    t = ap.add_argument_group("tuning")
    t.add_argument("--tune", action="store_true")
    t.add_argument("--alpha-grid", metavar="LO:HI:PTS", help="logarithmic step-size grid")
    t.add_argument("--beta-grid", metavar="LO:HI:PTS", help="linear gain grid")
    t.add_argument("--tune-k", type=int, default=DEFAULT_TUNE_K, help="evaluation iteration")
    t.add_argument("--workers", type=int, default=1)

    o = ap.add_argument_group("output")
    o.add_argument("--certify", action="store_true", help="print the rate certificate")
    o.add_argument("--out", metavar="PATH", help="trajectory CSV (stdout when omitted)")
    o.add_argument("--plot", metavar="PATH", help="SVG convergence plot")
    o.add_argument("--dump-weights", metavar="PATH")
    o.add_argument("--dump-problem", metavar="DIR")
    return ap


def read_config(path: str | Path) -> list[str]:
    """Translate a config file into the equivalent argument list."""
    argv = []
    for lineno, raw in enumerate(Path(path).read_text().splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        key, sep, value = line.partition("=")
        key, value = key.strip().lstrip("-"), value.strip()
        if not sep or not key:
            raise ValueError(f"{path}:{lineno}: expected 'key = value'")
        if key == "config":
            raise ValueError(f"{path}:{lineno}: nested config files are not supported")
        if key in _SWITCHES:
            if value.lower() in _TRUE:
                argv.append(f"--{key}")
            elif value.lower() not in _FALSE:
                raise ValueError(f"{path}:{lineno}: {key} must be true or false, got {value!r}")
            continue
        argv += [f"--{key}", value]
    return argv


def _spec_from_args(ns: argparse.Namespace) -> ExperimentSpec:
    return ExperimentSpec(
        graph=None if ns.graph_file else ns.graph,
        n=ns.n if ns.n is not None or ns.graph_file else 10,
        e=ns.e,
        p=ns.p,
        graph_seed=ns.graph_seed,
        graph_file=ns.graph_file,
        m=ns.m,
        prob_seed=ns.prob_seed,
        eig_lo=ns.eig_lo,
        eig_hi=ns.eig_hi,
        c_scale=ns.c_scale,
        load_problem=ns.load_problem,
        preset=ns.preset,
        variant=ns.variant,
        beta=ns.beta,
        alpha=ns.alpha,
        c=ns.c,
        iters=ns.iters,
        stop_gap=ns.stop_gap,
        tune=ns.tune,
        alpha_grid=parse_grid(ns.alpha_grid, "log") if ns.alpha_grid else None,
        beta_grid=parse_grid(ns.beta_grid, "linear") if ns.beta_grid else None,
        tune_k=ns.tune_k,
        certify=ns.certify,
        out=ns.out,
        plot=ns.plot,
        dump_weights=ns.dump_weights,
        dump_problem=ns.dump_problem,
        workers=ns.workers,
    )


def main(argv: list[str] | None = None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    parser = build_parser()
    try:
        pre, _ = parser.parse_known_args(argv)
        if pre.config:
            argv = read_config(pre.config) + argv
        ns = parser.parse_args(argv)
        spec = _spec_from_args(ns)
    except SystemExit as exc:
        # argparse exits on --help and on usage errors
        return exc.code if isinstance(exc.code, int) else EXIT_INVALID
    except (ValueError, OSError) as exc:
        print(f"ugt: error: {exc}", file=sys.stderr)
        return EXIT_INVALID

    stream = sys.stdout
    try:
        result = run_experiment(spec)
    except InvalidSpecError as exc:
        print(f"ugt: error: {exc}", file=sys.stderr)
        return EXIT_INVALID
    except TuningError as exc:
        print(f"ugt: error: {exc}", file=sys.stderr)
        return EXIT_TUNING
    except OSError as exc:
        print(f"ugt: error: {exc}", file=sys.stderr)
        return EXIT_INVALID

    if result.tuning is not None:
        t = result.tuning
        print(f"# tuned alpha={t.best_alpha:.17g} beta={t.best_beta:.17g} score={t.score:.17g}", file=sys.stderr)
    if result.certificate is not None:
        stream.write(result.certificate.to_text())
    if not spec.out:
        # printed after the certificate block when both go to stdout
        result.trajectory.write_csv(stream, footer=divergence_footer(result.diverged))
    if result.diverged is not None:
        print(f"ugt: {result.diverged}", file=sys.stderr)
        return EXIT_DIVERGED
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
