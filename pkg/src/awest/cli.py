"""Command line entry point: simulate, estimate, aw, mixing, bounds, experiment.

Exit codes: 0 success, 1 usage error, 2 numeric or precondition error.
Data goes to standard output or files, diagnostics to standard error.
"""

from __future__ import annotations

import argparse
import logging
import math
import sys
from dataclasses import replace
from pathlib import Path

from . import bounds
from .adapted_ot import aw_distance, smoothed_adapted_estimator, wasserstein_paths
from .errors import AwestError, PreconditionError, StateSpaceTooLarge, UnsupportedPrefixError, ValidationError
from .experiments import ExperimentConfig, fmt, run_experiment
from .mixing import mixing_profile, read_law_csv
from .path_measure import adapted_empirical_measure, load_path_measure, load_path_sample, paths_csv_string
from .processes import MemoryChainParams, SeasonalParams, simulate_memory_chain, simulate_seasonal


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(1, f"{self.prog}: error: {message}\n")


def _common() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(add_help=False)
    p.add_argument("--seed", type=int, default=argparse.SUPPRESS, help="run seed (default 0)")
    p.add_argument("--threads", type=int, default=argparse.SUPPRESS, help="worker processes (default 1)")
    p.add_argument("--out", default=argparse.SUPPRESS, help="output file or directory (default stdout)")
    return p


def _emit(text: str, out) -> None:
    if out:
        Path(out).write_text(text)
    else:
        sys.stdout.write(text)


def _num(x) -> str:
    return fmt(float(x) + 0.0)


# ---------------------------------------------------------------- commands


def cmd_simulate(args) -> str:
    cfg = ExperimentConfig.from_ini(args.config) if args.config else ExperimentConfig()
    kind = args.kind or cfg.kind
    rho = cfg.rho if args.rho is None else args.rho
    if kind == "memory":
        lag = args.lag or cfg.lags[0]
        sample = simulate_memory_chain(MemoryChainParams(rho, lag, args.horizon), args.n, args.seed, args.replication)
    elif kind == "seasonal":
        theta = cfg.theta if args.theta is None else args.theta
        tau = args.tau or cfg.tau
        sample = simulate_seasonal(SeasonalParams(rho, theta, tau, args.horizon), args.n, args.seed, args.replication)
    else:
        raise UsageError(f"unknown process kind {kind!r}")
    return paths_csv_string(sample)


def cmd_estimate(args) -> str:
    sample = load_path_sample(args.sample)
    if args.smooth:
        nu = smoothed_adapted_estimator(sample, args.smooth, seed=args.seed)
    else:
        nu = adapted_empirical_measure(sample, delta=args.delta, anchor=args.anchor)
    if args.reference:
        mu = load_path_measure(args.reference)
        print(_num(aw_distance(mu, nu)[0]), file=sys.stderr)
    return paths_csv_string(nu)


def cmd_aw(args) -> str:
    mu, nu = load_path_measure(args.first), load_path_measure(args.second)
    value = wasserstein_paths(mu, nu) if args.wasserstein else aw_distance(mu, nu)[0]
    return _num(value) + "\n"


def cmd_mixing(args) -> str:
    law = read_law_csv(args.law, exact=args.exact)
    lags = [args.s] if args.s else list(range(1, law.length))
    prof = mixing_profile(law, lags)
    lines = ["name,s,value"]
    show = (lambda v: str(v)) if args.exact else _num
    for name, table in (("eta", prof.eta), ("eta_bar", prof.eta_bar), ("eta_hat", prof.eta_hat)):
        for s, v in zip(lags, table):
            lines.append(f"{name},{s},{show(v)}")
    lines.append(f"eta_sum,,{show(prof.eta_sum)}")
    lines.append(f"eta_bar_sum,,{show(prof.eta_bar_sum)}")
    return "\n".join(lines) + "\n"


def _spec(args) -> bounds.RateSpec:
    return bounds.RateSpec(d=args.d, T=args.t, p=args.p, eta_sum=args.eta_sum, C=args.C)


_BOUNDS = {
    "rate-inf": lambda a: bounds.rate_inf(a.n, a.d, a.t),
    "rate-p": lambda a: bounds.rate_p(a.n, a.d, a.t, a.p),
    "moment-compact": lambda a: bounds.moment_bound_compact(a.n, _spec(a)),
    "moment-general": lambda a: bounds.moment_bound_general(a.n, _spec(a)),
    "concentration-compact": lambda a: bounds.concentration_bound_compact(a.n, a.eps, a.diam, a.t, a.eta_bar_sum, a.c),
    "concentration-general": lambda a: bounds.concentration_bound_general(
        a.n, a.eps, a.alpha, a.eta_bar_sum, a.e_mu, a.c, a.d, a.t
    ),
    "bdd": lambda a: bounds.bdd_bound(a.n, a.L, a.eps, a.eta_bar_sum),
    "mcdiarmid": lambda a: bounds.mcdiarmid_bound(a.n, a.L, a.eps),
}


def cmd_bounds(args) -> str:
    return _num(_BOUNDS[args.which](args)) + "\n"


def cmd_experiment(args) -> str:
    cfg = ExperimentConfig.from_ini(args.config)
    out = args.out or cfg.out_dir
    if args.seed_given:
        cfg = replace(cfg, seed=args.seed)
    run_experiment(cfg, out, args.threads)
    print(f"wrote results to {out}", file=sys.stderr)
    return ""


# ------------------------------------------------------------------ parser


def build_parser() -> argparse.ArgumentParser:
    common = _common()
    parser = _Parser(prog="awest", description="Adapted Wasserstein estimation toolkit.", parents=[common])
    parser.add_argument("-v", "--verbose", action="store_true", help="log progress to standard error")
    sub = parser.add_subparsers(dest="command", metavar="command", parser_class=_Parser)
    sub.required = True

    p = sub.add_parser("simulate", parents=[common], help="simulate sliced paths as CSV")
    p.add_argument("--config", help="experiment INI file supplying the process")
    p.add_argument("--kind", choices=("memory", "seasonal"), help="process kind")
    p.add_argument("--rho", type=float, help="keep probability")
    p.add_argument("--theta", type=float, help="seasonal copy probability")
    p.add_argument("--tau", type=int, help="seasonal period")
    p.add_argument("--lag", type=int, help="slice stride D for the memory chain")
    p.add_argument("--horizon", type=int, default=2, help="slice length T")
    p.add_argument("--n", type=int, required=True, help="number of slices")
    p.add_argument("--replication", type=int, default=0, help="replication index")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("estimate", parents=[common], help="adapted empirical measure of a path sample")
    p.add_argument("sample", help="path sample CSV")
    p.add_argument("--delta", type=float, help="grid edge (default N-dependent)")
    p.add_argument("--anchor", type=float, default=0.0, help="grid anchor")
    p.add_argument("--smooth", type=int, default=0, help="Gaussian copies per atom (0 disables smoothing)")
    p.add_argument("--reference", help="measure CSV; AW to it is printed on standard error")
    p.set_defaults(func=cmd_estimate)

    p = sub.add_parser("aw", parents=[common], help="adapted Wasserstein distance between two measures")
    p.add_argument("first", help="measure CSV")
    p.add_argument("second", help="measure CSV")
    p.add_argument("--wasserstein", action="store_true", help="plain Wasserstein-1 on paths instead")
    p.set_defaults(func=cmd_aw)

    p = sub.add_parser("mixing", parents=[common], help="mixing coefficients of a finite law")
    p.add_argument("--law", required=True, help="law CSV with columns z_1..z_N,prob")
    p.add_argument("--s", type=int, help="single lag (default all)")
    p.add_argument("--exact", action="store_true", help="rational arithmetic")
    p.set_defaults(func=cmd_mixing)

    p = sub.add_parser("bounds", parents=[common], help="evaluate a closed-form bound")
    bsub = p.add_subparsers(dest="which", metavar="bound", parser_class=_Parser)
    bsub.required = True
    flags = {
        "n": dict(type=float, required=True, help="sample size N"),
        "d": dict(type=int, default=1, help="state dimension"),
        "t": dict(type=int, default=2, help="horizon T"),
        "p": dict(type=float, default=math.inf, help="moment order"),
        "eta_sum": dict(type=float, default=1.0, help="1 + 2 sum eta"),
        "eta_bar_sum": dict(type=float, default=1.0, help="1 + sum eta_bar"),
        "C": dict(type=float, default=1.0, help="moment constant"),
        "c": dict(type=float, default=1.0, help="tail constant"),
        "eps": dict(type=float, required=True, help="deviation level"),
        "diam": dict(type=float, required=True, help="support diameter"),
        "alpha": dict(type=float, required=True, help="exponential moment order"),
        "e_mu": dict(type=float, required=True, help="exponential moment"),
        "L": dict(type=float, required=True, help="Hamming-Lipschitz constant"),
    }
    uses = {
        "rate-inf": ("n", "d", "t"),
        "rate-p": ("n", "d", "t", "p"),
        "moment-compact": ("n", "d", "t", "eta_sum", "C"),
        "moment-general": ("n", "d", "t", "p", "eta_sum", "C"),
        "concentration-compact": ("n", "eps", "diam", "t", "eta_bar_sum", "c"),
        "concentration-general": ("n", "eps", "alpha", "eta_bar_sum", "e_mu", "c", "d", "t"),
        "bdd": ("n", "L", "eps", "eta_bar_sum"),
        "mcdiarmid": ("n", "L", "eps"),
    }
    for name, keys in uses.items():
        bp = bsub.add_parser(name, parents=[common], help=f"{name} bound")
        for k in keys:
            bp.add_argument("--" + k.replace("_", "-"), dest=k, **flags[k])
        if "p" not in keys:
            bp.set_defaults(p=math.inf)
    p.set_defaults(func=cmd_bounds)

    p = sub.add_parser("experiment", parents=[common], help="run Monte-Carlo experiments from an INI file")
    p.add_argument("--config", required=True, help="experiment INI file")
    p.set_defaults(func=cmd_experiment)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    args.seed_given = hasattr(args, "seed")
    for key, default in (("seed", 0), ("threads", 1), ("out", None)):
        if not hasattr(args, key):
            setattr(args, key, default)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, stream=sys.stderr, format="%(message)s")
    try:
        text = args.func(args)
        if args.command != "experiment":
            _emit(text, args.out)
    except UsageError as exc:
        print(f"awest: error: {exc}", file=sys.stderr)
        return 1
    except OSError as exc:
        print(f"awest: error: {exc}", file=sys.stderr)
        return 1
    except (ValidationError, PreconditionError, UnsupportedPrefixError, StateSpaceTooLarge, AwestError, ValueError) as exc:
        print(f"awest: error: {exc}", file=sys.stderr)
        return 2
    return 0


if __name__ == "__main__":
    sys.exit(main())
