"""Command-line front end (``lqsopt``).

Exit codes: 0 success, 2 invalid input, 3 numerical failure.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
import time
from pathlib import Path

import numpy as np

from . import __version__
from .bench import ALGORITHMS, FIT_ALGORITHMS, run_algorithm, run_bench, write_table
from .breakdown import breakdown_probe
from .datagen import SyntheticSpec, generate, named_example
from .errors import NumericalError, ValidationError
from .fits import lqs_objective, least_squares_fit
from .hybrid import InitKind, InitStrategy
from .io import read_csv, read_result, write_csv, write_result
from .mio import Box, MioLimits, build_model, solve_with_evolution
from .oracle import DEFAULT_SUBSET_LIMIT, enumerate_lqs

EXIT_OK, EXIT_VALIDATION, EXIT_NUMERICAL = 0, 2, 3


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        raise ValidationError(message)


def _residual_summary(data, beta, q):
    a = np.abs(data.residuals(beta))
    return {"q": q, "qth_abs_residual": lqs_objective(data, beta, q),
            "max_abs_residual": float(a.max()), "median_abs_residual": float(np.median(a))}


def _init_strategy(args) -> InitStrategy:
    return InitStrategy(kind=InitKind(args.init), runs=args.runs, seed=args.seed)


def cmd_fit(args) -> int:
    data = read_csv(args.infile)
    init = _init_strategy(args)
    run = run_algorithm(data, args.q, args.algo, init, workers=args.threads)
    doc = {"algo": args.algo, "seed": args.seed, "beta": run.beta,
           "objective": run.objective, "wall_time_s": run.total_time_s,
           "init_time_s": run.init_time_s, "solve_time_s": run.solve_time_s,
           "residuals": _residual_summary(data, run.beta, args.q),
           "config": {"q": args.q, "init": args.init, "runs": args.runs, "input": args.infile,
                      "n": data.n, "p": data.p},
           "info": run.info}
    write_result(doc, args.out)
    return EXIT_OK


def cmd_mio(args) -> int:
    data = read_csv(args.infile)
    warm = None
    if args.warm_start:
        warm = np.asarray(read_result(args.warm_start, expected_p=data.p)["beta"], dtype=float)
    box = None
    if args.box_radius is not None:
        if args.box_center == "ls":
            center = least_squares_fit(data).beta
        else:
            center = np.asarray(read_result(args.box_center, expected_p=data.p)["beta"])
        box = Box(center, args.box_radius)
    elif args.box_center is not None:
        raise ValidationError("--box-center needs --box-radius")
    limits = MioLimits(time_limit=args.time_limit, node_limit=args.node_limit,
                       gap_tol=args.gap_tol)
    model = build_model(data, args.q, box=box)
    t0 = time.perf_counter()
    res, _ = solve_with_evolution(model, warm, limits, trace_path=args.trace)
    wall = time.perf_counter() - t0
    beta = res.incumbent_beta if res.incumbent_beta is not None else np.zeros(data.p)
    doc = {"algo": "mio", "seed": args.seed, "beta": beta, "objective": res.upper_bound,
           "bounds": {"upper": res.upper_bound, "lower": res.lower_bound, "gap": res.gap},
           "status": res.status, "nodes": res.nodes_explored, "wall_time_s": wall,
           "root_bound": res.info["root_bound"],
           "residuals": _residual_summary(data, beta, args.q),
           "config": {"q": args.q, "input": args.infile, "warm_start": args.warm_start,
                      "box_center": args.box_center, "box_radius": args.box_radius,
                      "time_limit": args.time_limit, "node_limit": args.node_limit,
                      "gap_tol": args.gap_tol, "n": data.n, "p": data.p}}
    write_result(doc, args.out)
    return EXIT_OK


def cmd_bench(args) -> int:
    algos = [a.strip() for a in args.algos.split(",") if a.strip()]
    bench = run_bench(args.example, algos, args.instances, args.seed, args.scale,
                      _init_strategy(args), mio_limits=MioLimits(time_limit=args.mio_time_limit),
                      oracle=args.oracle, workers=args.threads)
    write_table(bench, args.out)
    return EXIT_OK


def cmd_datagen(args) -> int:
    if args.example:
        data, q, meta = named_example(args.example, args.scale, args.seed, args.intercept)
    else:
        if args.n is None or args.p is None:
            raise ValidationError("datagen needs --example or both --n and --p")
        inst = generate(SyntheticSpec(n=args.n, p=args.p, pi=args.pi, scheme=args.scheme,
                                      seed=args.seed, intercept=args.intercept))
        data = inst.data
    write_csv(data, args.out)
    return EXIT_OK


def cmd_oracle(args) -> int:
    data = read_csv(args.infile)
    res = enumerate_lqs(data, args.q, args.subset_limit)
    doc = {"objective": res.objective, "beta": [float(v) for v in res.beta],
           "subset": list(res.info["subset"]), "subsets": res.info["subsets"]}
    print(json.dumps(doc, sort_keys=True))
    if args.out:
        Path(args.out).write_text(json.dumps(doc, indent=2, sort_keys=True) + "\n",
                                  encoding="utf-8")
    return EXIT_OK


def cmd_breakdown(args) -> int:
    data = read_csv(args.infile)
    mags = [float(v) for v in args.magnitudes.split(",")]
    rep = breakdown_probe(data, args.q, mags, args.trials, args.seed,
                          covariates=args.covariates,
                          mio_limits=MioLimits(time_limit=args.time_limit))
    text = json.dumps(rep, indent=2, sort_keys=True) + "\n"
    if args.out:
        Path(args.out).write_text(text, encoding="utf-8")
    else:
        sys.stdout.write(text)
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    def global_flags(suppress):
        # flags accepted before or after the subcommand; the subcommand copy
        # must not reset a value given up front
        g = _Parser(add_help=False)
        seed, threads, verbose = (argparse.SUPPRESS,) * 3 if suppress else (0, 1, False)
        g.add_argument("--seed", type=int, default=seed, help="random seed (default 0)")
        g.add_argument("--threads", type=int, default=threads, help="worker threads (default 1)")
        g.add_argument("-v", "--verbose", action="store_true", default=verbose)
        return g

    common = global_flags(True)
    p = _Parser(prog="lqsopt", description="Least quantile regression toolkit",
                parents=[global_flags(False)])
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def init_args(sp):
        sp.add_argument("--init", choices=[k.value for k in InitKind if k is not InitKind.EXPLICIT],
                        default="lad")
        sp.add_argument("--runs", type=int, default=100, help="number of initializations")

    f = sub.add_parser("fit", parents=[common], help="heuristic or classical fit")
    f.add_argument("--algo", choices=FIT_ALGORITHMS, required=True)
    f.add_argument("--q", type=int, required=True)
    init_args(f)
    f.add_argument("--in", dest="infile", required=True)
    f.add_argument("--out", required=True)
    f.set_defaults(func=cmd_fit)

    m = sub.add_parser("mio", parents=[common], help="exact branch-and-bound")
    m.add_argument("--q", type=int, required=True)
    m.add_argument("--warm-start")
    m.add_argument("--box-center", help="'ls' or a result.json whose beta is the center")
    m.add_argument("--box-radius", type=float)
    m.add_argument("--time-limit", type=float, required=True)
    m.add_argument("--node-limit", type=int, default=1_000_000)
    m.add_argument("--gap-tol", type=float, default=1e-6)
    m.add_argument("--in", dest="infile", required=True)
    m.add_argument("--out", required=True)
    m.add_argument("--trace")
    m.set_defaults(func=cmd_mio)

    b = sub.add_parser("bench", parents=[common], help="relative accuracy table")
    b.add_argument("--example", required=True)
    b.add_argument("--scale", type=int)
    b.add_argument("--algos", required=True, help=f"comma list from {','.join(ALGORITHMS)}")
    b.add_argument("--instances", type=int, default=20)
    b.add_argument("--mio-time-limit", type=float, default=60.0)
    b.add_argument("--oracle", action="store_true", help="add oracle-relative columns")
    init_args(b)
    b.add_argument("--out", required=True)
    b.set_defaults(func=cmd_bench)

    d = sub.add_parser("datagen", parents=[common], help="synthetic data to CSV")
    d.add_argument("--example")
    d.add_argument("--scale", type=int)
    d.add_argument("--n", type=int)
    d.add_argument("--p", type=int)
    d.add_argument("--pi", type=float, default=0.4)
    d.add_argument("--scheme", choices=["A", "B"], default="B")
    d.add_argument("--intercept", action="store_true")
    d.add_argument("--out", required=True)
    d.set_defaults(func=cmd_datagen)

    o = sub.add_parser("oracle", parents=[common], help="exact optimum by enumeration")
    o.add_argument("--q", type=int, required=True)
    o.add_argument("--subset-limit", type=int, default=DEFAULT_SUBSET_LIMIT)
    o.add_argument("--in", dest="infile", required=True)
    o.add_argument("--out")
    o.set_defaults(func=cmd_oracle)

    k = sub.add_parser("breakdown", parents=[common], help="breakdown probe report")
    k.add_argument("--q", type=int, required=True)
    k.add_argument("--magnitudes", default="1e3,1e6,1e9")
    k.add_argument("--trials", type=int, default=1)
    k.add_argument("--covariates", action="store_true")
    k.add_argument("--time-limit", type=float, default=600.0)
    k.add_argument("--in", dest="infile", required=True)
    k.add_argument("--out")
    k.set_defaults(func=cmd_breakdown)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                            format="%(levelname)s %(name)s: %(message)s")
        if args.threads < 1:
            raise ValidationError("--threads must be >= 1")
        return args.func(args)
    except ValidationError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    except NumericalError as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL


if __name__ == "__main__":
    sys.exit(main())
