"""Command-line front end.

Subcommands: ``solve`` (UoI-optimal policy), ``index`` (threshold policy),
``simulate`` (Monte Carlo of one policy), ``sweep`` (policy grid over the
bimodal delay tail, CSV output) and ``plot`` (figure from a sweep CSV).

Exit codes: 0 success, 2 invalid input, 3 solver non-convergence,
4 file I/O failure.
"""

from __future__ import annotations

import argparse
import contextlib
import sys
import warnings
from typing import IO, Iterator, Sequence

from . import __version__
from .errors import ConfigError, ModelError, NonConvergence
from .evaluation import evaluate_policy
from .experiments import POLICIES, ExperimentSpec, parse_policies, parse_range, solve_policy, sweep
from .index import IndexConfig, bisec_index
from .markov import Belief, DelayPmf
from .report import fmt, read_sweep_csv, write_gnuplot, write_policy_csv, write_sweep_csv
from .simulator import DEFAULT_HORIZON, DEFAULT_WARMUP, SimConfig, replicate, run_episode
from .smdp import KERNELS, SolverConfig, bisec_rvi

EXIT_OK = 0
EXIT_VALIDATION = 2
EXIT_CONVERGENCE = 3
EXIT_IO = 4


class UsageError(Exception):
    pass


def _add_model_args(p: argparse.ArgumentParser) -> None:
    p.add_argument("--p", type=float, required=True, help="P[1|0] per slot")
    p.add_argument("--q", type=float, required=True, help="P[0|1] per slot")
    g = p.add_mutually_exclusive_group()
    g.add_argument("--delay", help="delay PMF as 'y1:m1,y2:m2,...'")
    g.add_argument("--bimodal", type=int, metavar="Y", help="P[Y=1]=0.8, P[Y=Y]=0.2")
    p.add_argument("--kernel", choices=KERNELS, default="corrected")
    p.add_argument("--tol", type=float, default=1e-4, help="bisection tolerance")
    p.add_argument("--z-max", type=int, default=None, help="waiting-time cap (default: auto)")


def _add_sim_args(p: argparse.ArgumentParser) -> None:
    p.add_argument("--horizon", type=int, default=DEFAULT_HORIZON)
    p.add_argument("--warmup", type=int, default=DEFAULT_WARMUP)
    p.add_argument("--seed", type=int, default=42)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="uoi-sampling",
        description="Optimal sampling of a binary Markov source over a random-delay channel.",
    )
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("solve", help="UoI-optimal policy by bisection + RVI")
    _add_model_args(p)
    _add_sim_args(p)
    p.add_argument("--compare-kernels", action="store_true",
                   help="solve under both kernels and check each against simulation")
    p.add_argument("--out", help="write the policy table as CSV")

    p = sub.add_parser("index", help="index-based threshold policy")
    _add_model_args(p)
    p.add_argument("--out", help="write the policy table as CSV")

    p = sub.add_parser("simulate", help="Monte Carlo of one policy")
    _add_model_args(p)
    _add_sim_args(p)
    p.add_argument("--policy", choices=POLICIES, default="optimal")
    p.add_argument("--reps", type=int, default=1)
    p.add_argument("--trace", help="per-slot trace CSV (single episode)")

    p = sub.add_parser("sweep", help="all policies over the bimodal tail y")
    p.add_argument("--p", type=float, required=True)
    p.add_argument("--q", type=float, required=True)
    p.add_argument("--ys", default="2-20", help="tail delays, e.g. '2-20' or '2,6,10'")
    p.add_argument("--policy", action="append", default=None,
                   help=f"comma list or repeated; default {','.join(POLICIES)}")
    p.add_argument("--kernel", choices=KERNELS, default="corrected")
    p.add_argument("--tol", type=float, default=1e-4)
    p.add_argument("--z-max", type=int, default=None)
    _add_sim_args(p)
    p.add_argument("--jobs", type=int, default=1, help="worker processes")
    p.add_argument("--out", help="CSV path (default stdout)")
    p.add_argument("--gnuplot", help="also write two-column 'y avg_uoi' blocks here")
    p.add_argument("--plot", help="also render a figure (png/pdf/svg) here")

    p = sub.add_parser("plot", help="render a sweep CSV as a figure")
    p.add_argument("csv")
    p.add_argument("--out", required=True)
    p.add_argument("--title", default=None)
    return parser


def _delay(args) -> DelayPmf:
    if args.delay:
        return DelayPmf.parse(args.delay)
    if args.bimodal is not None:
        return DelayPmf.bimodal(args.bimodal)
    raise UsageError("one of --delay or --bimodal is required")


@contextlib.contextmanager
def _output(path: str | None) -> Iterator[IO[str]]:
    if path is None or path == "-":
        yield sys.stdout
    else:
        with open(path, "w", encoding="utf-8", newline="") as fh:
            yield fh


def _spec(args, policies=("optimal",)) -> ExperimentSpec:
    return ExperimentSpec(
        p=args.p, q=args.q, policies=policies, delay=_delay(args),
        horizon=getattr(args, "horizon", DEFAULT_HORIZON),
        warmup=getattr(args, "warmup", DEFAULT_WARMUP),
        seed=getattr(args, "seed", 42), tol=args.tol, z_max=args.z_max, kernel=args.kernel,
    )


def cmd_solve(args) -> int:
    spec = _spec(args)
    kernels = KERNELS if args.compare_kernels else (args.kernel,)
    results = {}
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always")
        for k in kernels:
            results[k] = bisec_rvi(spec.model, spec.delay,
                                   SolverConfig(z_max=args.z_max, bisection_tol=args.tol, kernel=k))
    for w in caught:
        print(f"warning: {w.message}", file=sys.stderr)

    main = results[args.kernel] if args.kernel in results else next(iter(results.values()))
    print(f"p={spec.p:g} q={spec.q:g} delay={spec.delay} kernel={main.kernel}")
    print(f"beta_opt={main.beta_opt:.6f}")
    print(f"bisection_steps={main.bisection_steps} rvi_iterations={main.rvi_iterations} "
          f"z_max={main.z_max} anchor={tuple(main.anchor)}")
    print("s,y,Z,V")
    for s, y, z, v in main.rows():
        print(f"{s},{y},{z},{v:.6g}")

    if args.compare_kernels:
        print("kernel,beta,sim_avg_uoi,sim_stderr,gap_in_stderr,exact_avg_uoi")
        gaps = {}
        for k, res in results.items():
            rep = run_episode(SimConfig(spec.model, spec.delay, res.policy, args.horizon, args.warmup, args.seed))
            exact = evaluate_policy(spec.model, spec.delay, res.policy).avg_uoi
            gaps[k] = abs(res.beta_opt - rep.avg_uoi) / rep.stderr_uoi
            print(f"{k},{res.beta_opt:.6f},{rep.avg_uoi:.6f},{rep.stderr_uoi:.3g},{gaps[k]:.3g},{exact:.6f}")
        best = min(gaps, key=gaps.get)
        print(f"matches_simulation={best}")

    if args.out:
        with _output(args.out) as fh:
            write_policy_csv(main.rows(), fh, ("s", "y", "Z", "V"),
                             {**spec.provenance(), "beta_opt": fmt(main.beta_opt)})
    return EXIT_OK


def cmd_index(args) -> int:
    spec = _spec(args, policies=("index",))
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always")
        res = bisec_index(spec.model, spec.delay, IndexConfig(bisection_tol=args.tol))
    for w in caught:
        print(f"warning: {w.message}", file=sys.stderr)
    f1, f2 = res.f_diagnostics
    print(f"p={spec.p:g} q={spec.q:g} delay={spec.delay}")
    print(f"beta_psi={res.beta_psi:.6f}")
    print(f"f1={f1:.6g} f2={f2:.6g} f={res.f_value:.3g} bisection_steps={res.bisection_steps}")
    print("s,y,Z,eta")
    rows = []
    for s, y, z in res.policy.rows():
        eta = res.eta_table.get(Belief.observed(spec.model, s, y))
        rows.append((s, y, z, eta))
        print(f"{s},{y},{z},{fmt(eta)}")
    if args.out:
        with _output(args.out) as fh:
            write_policy_csv(rows, fh, ("s", "y", "Z", "eta"),
                             {**spec.provenance(), "beta_psi": fmt(res.beta_psi)})
    return EXIT_OK


def cmd_simulate(args) -> int:
    spec = _spec(args, policies=(args.policy,))
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        sol = solve_policy(args.policy, spec.model, spec.delay, spec.solver_config())
    cfg = SimConfig(spec.model, spec.delay, sol.table, args.horizon, args.warmup, args.seed)
    if args.trace:
        if args.reps != 1:
            raise UsageError("--trace needs --reps 1")
        with _output(args.trace) as fh:
            rep = run_episode(cfg, trace=fh)
    else:
        rep = replicate(cfg, args.reps)
    print(f"policy={args.policy} p={spec.p:g} q={spec.q:g} delay={spec.delay}")
    print(f"beta_analytic={fmt(sol.beta_analytic)}")
    print(f"avg_uoi={rep.avg_uoi:.6g} stderr_uoi={rep.stderr_uoi:.3g}")
    print(f"avg_aoi={rep.avg_aoi:.6g} stderr_aoi={rep.stderr_aoi:.3g}")
    print(f"avg_uoi_untrimmed={rep.avg_uoi_untrimmed:.6g} avg_aoi_untrimmed={rep.avg_aoi_untrimmed:.6g}")
    print(f"cycles={rep.cycles} mean_cycle={rep.mean_cycle_len:.6g} slots={rep.slots} reps={rep.n_reps}")
    return EXIT_OK


def cmd_sweep(args) -> int:
    policies = parse_policies(args.policy) if args.policy is not None else POLICIES
    spec = ExperimentSpec(
        p=args.p, q=args.q, policies=policies, ys=tuple(parse_range(args.ys)),
        horizon=args.horizon, warmup=args.warmup, seed=args.seed, tol=args.tol,
        z_max=args.z_max, kernel=args.kernel,
    )
    rows = sweep(spec, jobs=args.jobs)
    with _output(args.out) as fh:
        write_sweep_csv(rows, fh, spec.provenance())
    if args.gnuplot:
        with _output(args.gnuplot) as fh:
            write_gnuplot(rows, fh)
    if args.plot:
        from dataclasses import asdict

        from .plotting import plot_sweep

        plot_sweep([asdict(r) for r in rows], args.plot, title=f"p={spec.p:g}, q={spec.q:g}")
    return EXIT_OK


def cmd_plot(args) -> int:
    from .plotting import plot_sweep

    with open(args.csv, encoding="utf-8") as fh:
        rows = read_sweep_csv(fh)
    plot_sweep(rows, args.out, title=args.title)
    return EXIT_OK


COMMANDS = {
    "solve": cmd_solve,
    "index": cmd_index,
    "simulate": cmd_simulate,
    "sweep": cmd_sweep,
    "plot": cmd_plot,
}


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        return COMMANDS[args.command](args)
    except (ModelError, ConfigError, UsageError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    except NonConvergence as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONVERGENCE
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_IO


def run() -> None:
    sys.exit(main())
