"""Command-line entry point: ``kpartite {thresholds,simulate,sweep,certify,oracle}``.

Exit codes: 0 success, 1 validation error (including bad flags), 2 solver
non-convergence in ``certify``.
"""

from __future__ import annotations

import argparse
import logging
import sys

import numpy as np

from . import matrices as mx
from .experiments import (
    build_config,
    config_to_dict,
    env_overrides,
    fit_crossing,
    read_config_file,
    run_trial,
    sample_truth,
    sweep,
)
from .model import ModelError, Palette, SampleSpace
from .sdp import SdpParams, dual_certificate, round_solution, solve_sdp
from .mle import recovery_check
from .statistics import threshold, write_threshold_csv

log = logging.getLogger("kpartite")

MODEL_ALIASES = {
    "vector": mx.VECTOR_T,
    "partition": mx.PARTITION_R,
    "gue": mx.GUE_U,
    "goe": mx.GOE_V,
}


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        raise UsageError(f"{self.prog}: error: {message}")


def _model(text: str) -> str:
    model = MODEL_ALIASES.get(text, text)
    if model not in mx.MODELS:
        raise argparse.ArgumentTypeError(f"unknown model {text!r}")
    return model


def _add_experiment_flags(p: argparse.ArgumentParser) -> None:
    # one flag per config key; unset flags leave the config file value alone
    p.add_argument("--config", help="INI config file ([experiment] and [solver] sections)")
    p.add_argument("--model", type=_model, help="vector-T|partition-R|gue-U|conjugated-goe-V (or vector/partition/gue/goe)")
    p.add_argument("--estimator", choices=("mle", "sdp"))
    p.add_argument("--n", type=int)
    p.add_argument("--k", type=int)
    p.add_argument("--colors", help="comma-separated real palette")
    p.add_argument("--counts", help="comma-separated group sizes (fixed-counts space)")
    p.add_argument("--fraction", type=float, help="min group fraction c (min_fraction space)")
    p.add_argument("--space", choices=("omega", "fixed", "min_fraction", "theta"))
    p.add_argument("--sigmas", help="comma-separated sigma values")
    p.add_argument("--sigma-sq-rel", dest="sigma_sq_rel", help="lo,hi,steps: geometric grid of sigma^2/threshold")
    p.add_argument("--trials", type=int)
    p.add_argument("--seed", type=int)
    p.add_argument("--threads", type=int)
    p.add_argument("--output", help="output prefix for <prefix>_trials.csv and <prefix>_summary.csv")
    p.add_argument("--timing", action="store_const", const=True, help="record wall_ms per trial")
    p.add_argument("--cap", type=int, help="enumeration cap for the MLE")
    _add_solver_flags(p)


def _add_solver_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--max-iters", dest="max_iters", type=int)
    p.add_argument("--rho", type=float)
    p.add_argument("--alpha", type=float)
    p.add_argument("--tol-primal", dest="tol_primal", type=float)
    p.add_argument("--tol-constraint", dest="tol_constraint", type=float)
    p.add_argument("--warm-start", dest="warm_start", choices=("spectral", "identity"))
    p.add_argument("--embedding", choices=("complex", "real"))


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="kpartite", description="Noisy k-partite community recovery: MLE, SDP and thresholds.")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("thresholds", help="print the critical sigma^2 of each recovery threshold")
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--k", type=int, required=True)
    p.add_argument("--colors", help="comma-separated real palette (default 0..k-1)")
    p.add_argument("--counts", help="comma-separated group sizes (default balanced)")
    p.add_argument("--csv", help="also write the table as CSV to this path")

    p = sub.add_parser("simulate", help="run a single verbose trial")
    _add_experiment_flags(p)
    p.add_argument("--sigma", type=float, help="noise level (default: first grid point)")
    p.add_argument("--trial", type=int, default=0)

    p = sub.add_parser("sweep", help="Monte Carlo sweep over a sigma grid")
    _add_experiment_flags(p)
    p.add_argument("--fit", action="store_true", help="fit a logistic curve and report the 50%% crossing")

    p = sub.add_parser("certify", help="build V, solve the SDP and check the dual certificate")
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--k", type=int, required=True)
    p.add_argument("--sigma", type=float, required=True)
    p.add_argument("--seed", type=int, default=0)
    _add_solver_flags(p)

    p = sub.add_parser("oracle", help="exhaustive closed-form identity checks")
    p.add_argument("--max-n", type=int, default=8)
    p.add_argument("--max-k", type=int, default=3)
    return parser


def _flag_layer(args: argparse.Namespace, skip=("command", "config", "verbose", "sigma", "trial", "fit")) -> dict:
    return {k: v for k, v in vars(args).items() if k not in skip and v is not None}


def _experiment_config(args):
    file_layer = read_config_file(args.config) if args.config else {}
    flags = _flag_layer(args)
    if getattr(args, "sigma", None) is not None and "sigmas" not in flags and "sigmas" not in file_layer:
        flags["sigmas"] = str(args.sigma)
    return build_config(file_layer, env_overrides(), flags)


def cmd_thresholds(args) -> int:
    n, k = args.n, args.k
    colors = [float(v) for v in args.colors.split(",")] if args.colors else list(range(k))
    counts = [int(v) for v in args.counts.split(",")] if args.counts else None
    reports = [
        threshold("thm1", n, k, colors=colors),
        threshold("thm2", n, k, group_sizes=counts),
        threshold("thm3", n, k),
        threshold("thm5-bound", n, k),
    ]
    for rep in reports:
        print(f"{rep.formula_id:<11} sigma^2 = {rep.sigma_sq_critical:.4f}  ({rep.problem})")
    if args.csv:
        with open(args.csv, "w", newline="") as fh:
            write_threshold_csv(reports, fh)
    return 0


def cmd_simulate(args) -> int:
    cfg = _experiment_config(args)
    sigma = args.sigma if args.sigma is not None else cfg.sigma_grid()[0]
    rec = run_trial(cfg, args.trial, sigma)
    print(f"model={cfg.model} estimator={cfg.estimator} n={cfg.n} k={cfg.k} space={cfg.sample_space.kind}")
    print(f"sigma={sigma:g} threshold_sigma_sq={cfg.threshold().sigma_sq_critical:.6g} seed={rec.seed}")
    print(f"recovered={'true' if rec.recovered else 'false'} margin={rec.margin:.6g}")
    if rec.certified is not None:
        print(f"certified={'true' if rec.certified else 'false'}")
    return 0


def cmd_sweep(args) -> int:
    cfg = _experiment_config(args)
    log.info("sweep config: %s", config_to_dict(cfg))
    rows = sweep(cfg)
    crit = cfg.threshold().sigma_sq_critical
    print("sigma,sigma_sq_over_threshold,rate,trials,mean_margin")
    for r in rows:
        print(f"{r.sigma:.6g},{r.sigma**2 / crit:.4g},{r.rate:.4f},{r.trials},{r.mean_margin:.6g}")
    if args.fit:
        crossing = fit_crossing(rows)
        if crossing is None:
            print("logistic fit: unavailable")
        else:
            print(f"logistic 50% crossing sigma^2 = {crossing:.6g} (theory {crit:.6g}, ratio {crossing / crit:.3f})")
    return 0


def cmd_certify(args) -> int:
    n, k = args.n, args.k
    solver = build_config({"sigmas": "0"}, _flag_layer(args, skip=("command", "verbose", "n", "k", "sigma", "seed"))).solver
    y = sample_truth(SampleSpace.omega(n, k), Palette.roots(k), mx.stream(args.seed, 0, "truth"))
    obs = mx.observe(y, mx.GOE_V, args.sigma, mx.stream(args.seed, 0, "noise"))
    rep = dual_certificate(obs.matrix, y)
    sol = solve_sdp(obs.matrix, solver)
    est = round_solution(sol.X, k)
    err = float(np.linalg.norm(sol.X - mx.build_P(y))) / n
    print(
        f"certified={'true' if rep.certified else 'false'} lambda2={rep.lambda_second:.6g} "
        f"lambda_min={rep.lambda_min:.3g} null_residual={rep.null_vector_residual:.3g}"
    )
    print(
        f"solver converged={'true' if sol.converged else 'false'} iterations={sol.iterations} "
        f"primal_residual={sol.primal_residual:.3g} constraint_residual={sol.constraint_residual:.3g}"
    )
    print(f"recovered={'true' if recovery_check(est, y, 'phase') else 'false'} |X - yy*|_F/n={err:.3g}")
    return 0 if sol.converged else 2


def cmd_oracle(args) -> int:
    from .oracle import main_report

    return 0 if main_report(args.max_n, args.max_k) else 1


COMMANDS = {
    "thresholds": cmd_thresholds,
    "simulate": cmd_simulate,
    "sweep": cmd_sweep,
    "certify": cmd_certify,
    "oracle": cmd_oracle,
}


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except UsageError as exc:
        print(exc, file=sys.stderr)
        return 1
    except SystemExit as exc:  # --help
        return int(exc.code or 0)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    try:
        return COMMANDS[args.command](args)
    except (ModelError, ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
