"""Command-line entry point: ``dpevalues <subcommand> ...``.

Exit codes: 0 on success, 1 on configuration errors, 2 when validation fails.
"""

import argparse
import csv
import logging
import math
import sys

import numpy as np

from . import harness
from .batch import calibrate_for, release
from .distributions import TestingPair, parse_distribution
from .errors import ConfigError, DPEvalueError
from .optimal import bernoulli_dual_rate, finite_dual_rate, solve_lambda_star
from .rng import ObservationStream, derive_seed
from .sequential import run_two_sided_test, two_sided_processes
from .tslr import STATISTICS, select_evariable

EXIT_OK, EXIT_CONFIG, EXIT_VALIDATION = 0, 1, 2


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_CONFIG, f"{self.prog}: error: {message}\n")


def _pair(args):
    try:
        return TestingPair(parse_distribution(args.null), parse_distribution(args.alt))
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc


def _add_pair(p, alt="bernoulli p=0.7"):
    p.add_argument("--null", default="bernoulli p=0.3", help="null distribution, e.g. 'bernoulli p=0.3'")
    p.add_argument("--alt", default=alt, help="alternate distribution")


def cmd_rate(args, out):
    pair = _pair(args)
    con = solve_lambda_star(pair, args.epsilon)
    rows = [
        ("epsilon", con.epsilon), ("lambda_star", con.lambda_star), ("c1", con.c1), ("c2", con.c2),
        ("P(A)", con.mass_a_p), ("P(B)", con.mass_b_p), ("Q(M)", con.mass_m_q),
        ("KL(Qtilde||P)", con.kl_qtilde_p), ("TV(Qtilde,Q)", con.tv_qtilde_q), ("rate", con.rate),
        ("calibration_residual", con.residual), ("degenerate", con.degenerate),
    ]
    if args.dual_check:
        if not pair.is_finite:
            raise ConfigError("--dual-check needs finite-support distributions")
        if len(pair.support) == 2:
            dual, _ = bernoulli_dual_rate(float(pair.p[1]), float(pair.q[1]), args.epsilon)
        else:
            dual = finite_dual_rate(pair, args.epsilon)
        rows += [("dual_rate", dual), ("primal_minus_dual", con.rate - dual)]
    for k, v in rows:
        out.write(f"{k}\t{v}\n")
    return EXIT_OK


def cmd_batch(args, out):
    pair = _pair(args)
    ev, used = select_evariable(pair, args.epsilon, args.statistic)
    logging.info("statistic: %s", used)
    cal = calibrate_for(ev, args.epsilon, args.n)
    dist = pair.null if args.under == "null" else pair.alt
    threshold = math.log(1.0 / args.alpha)
    w = csv.writer(out, lineterminator="\n")
    w.writerow(["trial", "log_e", "reject_at_alpha"])
    for i in range(args.trials):
        seed = derive_seed(args.seed, i)
        data = ObservationStream(dist, derive_seed(seed, 0)).take(args.n)
        rel = release(ev, data, args.epsilon, derive_seed(seed, 1), calibration=cal)
        w.writerow([i, repr(rel.log_evalue), int(rel.log_evalue >= threshold)])
    logging.info("lambda=%.6g b=%.6g compensator=%.6g%s", cal.lam, cal.b, cal.compensator,
                 " (near-noiseless regime)" if cal.near_noiseless else "")
    return EXIT_OK


def cmd_sequential(args, out):
    pair = _pair(args)
    procs = two_sided_processes(pair, args.epsilon, args.rho, statistic=args.statistic, horizon=args.max_n)
    dist = pair.null if args.under == "null" else pair.alt
    w = csv.writer(out, lineterminator="\n")
    w.writerow(["trial", "decision", "N", "censored"])
    ns, cens = [], []
    for i in range(args.trials):
        seed = derive_seed(args.seed, i)
        stream = ObservationStream(dist, derive_seed(seed, 0))
        res = run_two_sided_test(pair, args.epsilon, args.rho, args.alpha, args.beta, stream, args.max_n,
                                 seed=seed, statistic=args.statistic, processes=procs)
        w.writerow([i, res.decision, res.stopping_time, int(res.censored)])
        ns.append(res.stopping_time)
        cens.append(res.censored)
    out.write("\n")
    w.writerow(["N", "F"])
    grid, f, _ = harness.ecdf_table(ns, cens, ns, cens)
    for g, v in zip(grid, f):
        w.writerow([int(g), repr(float(v))])
    return EXIT_OK


def _config_from_args(args, mode):
    overrides = {
        "null": args.null, "epsilons": args.epsilons, "qs": args.qs, "alpha": args.alpha,
        "beta": args.beta, "rho": args.rho, "trials": args.trials, "max_n": args.max_n,
        "seed": args.seed, "output_dir": args.output_dir, "workers": args.workers, "mode": mode,
    }
    return harness.load_config(args.config, **overrides)


def cmd_compare(args, out):
    config = _config_from_args(args, "compare")
    result = harness.run_compare(config)
    out.write(harness.compare_report(config, result))
    out.write(f"outputs written to {result.output_dir}\n")
    return EXIT_OK


def cmd_validate(args, out):
    config = _config_from_args(args, "validate")
    report = harness.run_validate(config, fault=args.inject_fault)
    out.write(report.text())
    return EXIT_OK if report.passed else EXIT_VALIDATION


def cmd_plan(args, out):
    pair = _pair(args)
    out.write(harness.plan(args.alpha, args.beta, pair, args.epsilon, args.rho).text())
    return EXIT_OK


def build_parser():
    parser = _Parser(prog="dpevalues", description="Private e-values and e-processes for P vs Q testing.")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("rate", help="optimal construction and rate for a pair")
    _add_pair(p)
    p.add_argument("--epsilon", type=float, required=True)
    p.add_argument("--dual-check", action="store_true", help="compare with the dual minimization")
    p.set_defaults(func=cmd_rate)

    p = sub.add_parser("batch", help="private batch e-values, one row per trial")
    _add_pair(p)
    p.add_argument("--statistic", choices=STATISTICS, default="auto")
    p.add_argument("--epsilon", type=float, required=True)
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--trials", type=int, default=100)
    p.add_argument("--alpha", type=float, default=0.05)
    p.add_argument("--under", choices=("null", "alt"), default="alt")
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=cmd_batch)

    p = sub.add_parser("sequential", help="two-sided private sequential test")
    _add_pair(p)
    p.add_argument("--statistic", choices=STATISTICS, default="auto")
    p.add_argument("--epsilon", type=float, required=True)
    p.add_argument("--rho", type=float, default=3.0)
    p.add_argument("--alpha", type=float, default=1 / 40)
    p.add_argument("--beta", type=float, default=1 / 40)
    p.add_argument("--trials", type=int, default=100)
    p.add_argument("--max-n", type=int, default=10**5)
    p.add_argument("--under", choices=("null", "alt"), default="alt")
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=cmd_sequential)

    for name, func, helptext in (
        ("compare", cmd_compare, "paired e-process vs DP-SPRT experiment"),
        ("validate", cmd_validate, "run the cross-module oracle checks"),
    ):
        p = sub.add_parser(name, help=helptext)
        p.add_argument("--config", help="key = value config file")
        p.add_argument("--null")
        p.add_argument("--epsilons", help="comma-separated epsilon grid")
        p.add_argument("--qs", help="comma-separated alternate Bernoulli parameters")
        p.add_argument("--alpha")
        p.add_argument("--beta")
        p.add_argument("--rho")
        p.add_argument("--trials")
        p.add_argument("--max-n", dest="max_n")
        p.add_argument("--seed")
        p.add_argument("--output-dir", dest="output_dir")
        p.add_argument("--workers")
        if name == "validate":
            p.add_argument("--inject-fault", choices=("omit_compensator",))
        p.set_defaults(func=func)

    p = sub.add_parser("plan", help="rate, stopping-time lower bound and minimum stopping time")
    _add_pair(p)
    p.add_argument("--epsilon", type=float, required=True)
    p.add_argument("--alpha", type=float, default=1 / 40)
    p.add_argument("--beta", type=float, default=1 / 40)
    p.add_argument("--rho", type=float, default=3.0)
    p.set_defaults(func=cmd_plan)
    return parser


def main(argv=None, out=None):
    out = out or sys.stdout
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(message)s")
    try:
        return args.func(args, out)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except DPEvalueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except ValueError as exc:
        print(f"invalid input: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
