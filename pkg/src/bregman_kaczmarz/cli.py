"""Experiment harness: instance generation, single runs, benchmark sweeps
and hypothesis audits, all emitting deterministic CSV files.

Exit codes: 0 converged/complete, 2 max-iters, 3 degenerate, 4 validation
error.
"""

from __future__ import annotations

import argparse
import csv
import statistics
import sys
from pathlib import Path

import numpy as np

from . import diagnostics as diag
from . import generators as gen
from . import selection as sel
from . import solver as slv
from .priors import SparsePrior

EXIT_OK = 0
EXIT_MAX_ITERS = 2
EXIT_DEGENERATE = 3
EXIT_VALIDATION = 4

# Paper-preset parameters: lambda = 2, tol 1e-6, at most 1000 iterations,
# ABNBK-c (alpha, theta) = (1.9, 0.1), ABNBK-a (delta, theta) = (1.3, 0.1).
DEFAULT_LAMBDA = 2.0
DEFAULT_TOL = 1e-6
DEFAULT_MAX_ITERS = 1000
SOLVER_NAMES = ["nbk", "mrnbk", "abnbk-c", "abnbk-a"]

TABLE_HEADER = ["m", "n", "sp", "solver", "it_median", "it_mean",
                "elapsed_median_ns", "converged_frac"]
SIGNAL_HEADER = ["index", "recovered", "truth"]


def preset_config(name, seed=0, alpha=None, delta=None, theta=None,
                  tol=DEFAULT_TOL, max_iters=DEFAULT_MAX_ITERS, **kwargs):
    """SolverConfig for one of the four named methods, paper defaults."""
    if name == "nbk":
        selection = sel.ResidualProbability()
        stepsize = sel.Constant(alpha if alpha is not None else 1.0)
    elif name == "mrnbk":
        selection = sel.MaxResidual()
        stepsize = sel.Constant(alpha if alpha is not None else 1.0)
    elif name == "abnbk-c":
        selection = sel.GreedyBlock(theta if theta is not None else 0.1)
        stepsize = sel.Constant(alpha if alpha is not None else 1.9)
        kwargs.setdefault("block_norm", "spectral")
    elif name == "abnbk-a":
        selection = sel.GreedyBlock(theta if theta is not None else 0.1)
        stepsize = sel.Adaptive(delta if delta is not None else 1.3)
    else:
        raise ValueError(f"unknown solver {name!r}; expected one of {SOLVER_NAMES}")
    return slv.SolverConfig(selection=selection, stepsize=stepsize, tol=tol,
                            max_iters=max_iters, seed=seed, **kwargs)


def derived_seeds(base_seed, rep):
    """Portable (instance, x0, solver) seeds for one benchmark repetition."""
    state = np.random.SeedSequence([int(base_seed), int(rep)]).generate_state(
        3, dtype=np.uint64)
    return tuple(int(s) for s in state)


def initial_dual(n, seed):
    """Standard-normal dual start; x0 is its mirror image under the prior."""
    return np.random.default_rng(seed).standard_normal(n)


def _status_exit(status):
    return {slv.CONVERGED: EXIT_OK, slv.MAX_ITERS: EXIT_MAX_ITERS,
            slv.DEGENERATE: EXIT_DEGENERATE}[status]


def cmd_generate(args):
    spec = gen.GeneratorSpec(kind=args.kind, m=args.m, n=args.n, sp=args.sp,
                             seed=args.seed)
    instance = gen.generate(spec, matrix_free=args.matrix_free)
    out = Path(args.out)
    out.parent.mkdir(parents=True, exist_ok=True)
    gen.save_instance(out, instance)
    print(f"wrote {out} ({spec.kind}, m={spec.m}, n={spec.n}, sp={spec.sp}, "
          f"seed={spec.seed})")
    return EXIT_OK


def cmd_run(args):
    instance = gen.load_instance(args.instance)
    prior = SparsePrior(args.lam)
    config = preset_config(args.solver, seed=args.seed, alpha=args.alpha,
                           delta=args.delta, theta=args.theta, tol=args.tol,
                           max_iters=args.max_iters)
    x0_star = initial_dual(instance.system.n, args.seed)
    record = slv.run(instance.system, prior, config, x0_star,
                     truth=instance.truth)

    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    record.to_csv(out / "history.csv")
    with open(out / "signal.csv", "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(SIGNAL_HEADER)
        for j, (xj, tj) in enumerate(zip(record.final_primal, instance.truth)):
            w.writerow([j, xj, tj])
    print(f"{args.solver}: status={record.status} iterations={record.iterations} "
          f"rel_res_sq={record.terminal_row[1]:.3e}")
    return _status_exit(record.status)


def cmd_bench(args):
    solvers = [args.solver] if args.solver else SOLVER_NAMES
    spec_template = dict(kind=args.kind, m=args.m, n=args.n, sp=args.sp)
    if not args.force_large and args.m * args.n ** 2 > 400 * 200 ** 2:
        print(f"refusing m*n^2 = {args.m * args.n ** 2} beyond desk scale; "
              "pass --force-large to override", file=sys.stderr)
        return EXIT_VALIDATION

    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    prior = SparsePrior(args.lam)
    results = {name: [] for name in solvers}
    for rep in range(args.reps):
        inst_seed, x0_seed, solver_seed = derived_seeds(args.seed, rep)
        instance = gen.generate(gen.GeneratorSpec(seed=inst_seed,
                                                  **spec_template))
        x0_star = initial_dual(instance.system.n, x0_seed)
        for name in solvers:
            config = preset_config(name, seed=solver_seed, alpha=args.alpha,
                                   delta=args.delta, theta=args.theta,
                                   tol=args.tol, max_iters=args.max_iters)
            record = slv.run(instance.system, prior, config, x0_star,
                             truth=instance.truth)
            elapsed = int(record.column("elapsed_ns").sum())
            results[name].append((record.iterations, elapsed,
                                  record.status == slv.CONVERGED))
            if args.curves:
                record.to_csv(out / f"curve_{name}_rep{rep}.csv")

    with open(out / "table.csv", "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(TABLE_HEADER)
        for name in solvers:
            its = [r[0] for r in results[name]]
            times = [r[1] for r in results[name]]
            conv = [r[2] for r in results[name]]
            w.writerow([args.m, args.n, args.sp, name,
                        statistics.median(its), statistics.mean(its),
                        int(statistics.median(times)),
                        sum(conv) / len(conv)])
    for name in solvers:
        its = sorted(r[0] for r in results[name])
        print(f"{name}: median_it={statistics.median(its)} "
              f"converged={sum(r[2] for r in results[name])}/{args.reps}")
    return EXIT_OK


def cmd_diagnose(args):
    instance = gen.load_instance(args.instance)
    prior = SparsePrior(args.lam)
    config = preset_config(args.solver, seed=args.seed, alpha=args.alpha,
                           delta=args.delta, theta=args.theta, tol=args.tol,
                           max_iters=args.max_iters)
    rng = np.random.default_rng(args.seed)
    if args.local_start is not None:
        # start near the stored ground truth: the tangential cone condition
        # is local, so the contraction hypotheses only hold close to the root
        truth = instance.truth
        x0_star = (truth + args.lam * np.sign(truth)
                   + args.local_start * rng.standard_normal(instance.system.n))
    else:
        x0_star = initial_dual(instance.system.n, args.seed)

    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    grad_dev = diag.check_gradients(instance.system, trials=20, rng=rng)
    try:
        record, est, audit = diag.audit_run(instance, prior, config, x0_star)
    except diag.HypothesisViolated as exc:
        print(f"hypothesis violated: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    record.to_csv(out / "history.csv")
    audit.to_csv(out / "contraction.csv")
    verdict = "PASS" if audit.all_satisfied else "FAIL"
    print(f"{verdict}: eta={est.eta:.4g} grad_dev={grad_dev:.3e} "
          f"contraction_satisfied={audit.fraction_satisfied:.3f}")
    return EXIT_OK if audit.all_satisfied else EXIT_DEGENERATE


def _add_solver_flags(p):
    p.add_argument("--solver", choices=SOLVER_NAMES, default="abnbk-a")
    p.add_argument("--alpha", type=float, default=None)
    p.add_argument("--delta", type=float, default=None)
    p.add_argument("--theta", type=float, default=None)
    p.add_argument("--lambda", dest="lam", type=float, default=DEFAULT_LAMBDA)
    p.add_argument("--tol", type=float, default=DEFAULT_TOL)
    p.add_argument("--max-iters", type=int, default=DEFAULT_MAX_ITERS)
    p.add_argument("--seed", type=int, default=0)


def build_parser():
    parser = argparse.ArgumentParser(
        prog="bkz",
        description="Sparse nonlinear system solving via block "
                    "Bregman-Kaczmarz iterations")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("generate", help="write a problem instance file")
    p.add_argument("--kind", choices=[gen.GAUSSIAN, gen.DCT], required=True)
    p.add_argument("--m", type=int, required=True)
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--sp", type=float, required=True)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--matrix-free", action="store_true")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_generate)

    p = sub.add_parser("run", help="solve one instance, dump history + signal")
    p.add_argument("instance")
    _add_solver_flags(p)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_run)

    p = sub.add_parser("bench", help="solver comparison table over seeds")
    p.add_argument("--kind", choices=[gen.GAUSSIAN, gen.DCT], required=True)
    p.add_argument("--m", type=int, required=True)
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--sp", type=float, required=True)
    p.add_argument("--reps", type=int, default=20)
    p.add_argument("--curves", action="store_true")
    p.add_argument("--force-large", action="store_true")
    _add_solver_flags(p)
    p.set_defaults(solver=None)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_bench)

    p = sub.add_parser("diagnose", help="eta estimate and contraction audit")
    p.add_argument("instance")
    _add_solver_flags(p)
    p.add_argument("--local-start", type=float, default=None,
                   help="perturbation scale for a start near the ground truth")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_diagnose)
    return parser


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (ValueError, FileNotFoundError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION


if __name__ == "__main__":
    sys.exit(main())
