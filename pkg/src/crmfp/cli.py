"""Command line interface.

Subcommands: gen (write a random instance to json), run (solve one
instance with a chosen method), bench (run a benchmark grid to csv),
summarize and profile (aggregate a results csv).
"""
from __future__ import annotations

import argparse
import json
import pathlib
import sys

import numpy as np

from .bench import (
    GridConfig,
    export,
    performance_profile,
    read_results_csv,
    run_experiment,
    summarize,
)
from .ellipsoid import AdmmConfig
from .instance_gen import InstanceSpec, gen_instance, initial_point, load_instance, save_instance
from .operators import set_fused_evaluation
from .product_space import BlockOperator, DiagonalSubspace, embed, extract
from .solvers import SolverConfig, run

# Named iteration budgets for the benchmark grid.
PRESETS = {"max50k": 50000, "max25k": 25000}


def _add_gen(sub):
    p = sub.add_parser("gen", help="generate a random instance and save it as json")
    p.add_argument("--n", type=int, required=True, help="ambient dimension")
    p.add_argument("--p", type=int, required=True, help="number of operators")
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--gamma", type=float, default=1.0, help="curvature floor of each ellipsoid")
    p.add_argument("--density", type=float, default=None, help="fill ratio of the random factor")
    p.add_argument("--out", required=True, help="output json path")


def _add_run(sub):
    p = sub.add_parser("run", help="solve one stored instance")
    p.add_argument("--instance", required=True, help="instance json path")
    p.add_argument("--solver", choices=("crm", "map", "ppm", "spm"), required=True)
    p.add_argument("--tol", type=float, default=1e-6)
    p.add_argument("--max-iter", type=int, default=50000)
    p.add_argument("--diagnostics", action="store_true",
                   help="check membership and distance monotonicity each step (crm only)")
    p.add_argument("--out", default=None, help="optional json report path")


def _add_bench(sub):
    p = sub.add_parser("bench", help="run the benchmark grid and write a results csv")
    p.add_argument("--n", type=int, nargs="+", default=[10, 30, 50, 100, 200],
                   help="ambient dimensions of the grid")
    p.add_argument("--p", type=int, nargs="+", default=[10, 30, 50, 100, 200],
                   help="operator counts of the grid")
    p.add_argument("--replicates", type=int, default=10)
    p.add_argument("--master-seed", type=int, default=2024)
    p.add_argument("--tol", type=float, default=1e-6)
    p.add_argument("--preset", choices=sorted(PRESETS), default="max50k",
                   help="named iteration budget")
    p.add_argument("--max-iter", type=int, default=None,
                   help="explicit iteration budget; overrides --preset")
    p.add_argument("--admm-tol", type=float, default=1e-8)
    p.add_argument("--no-diagnostics", action="store_true")
    p.add_argument("--no-fused-blocks", action="store_true",
                   help="evaluate operator blocks one by one (same results, slower)")
    p.add_argument("--workers", type=int, default=1)
    p.add_argument("--out-dir", required=True,
                   help="directory for results.csv, summary csvs, and the profile csv")


def _add_summarize(sub):
    p = sub.add_parser("summarize", help="aggregate a results csv")
    p.add_argument("--results", required=True, help="results csv path")
    p.add_argument("--group-by", default="solver",
                   help="comma separated result fields, e.g. solver,n")
    p.add_argument("--metric", choices=("iterations", "elapsed_s", "final_residual"),
                   default="iterations")
    p.add_argument("--out", default=None, help="optional csv path; default prints")


def _add_profile(sub):
    p = sub.add_parser("profile", help="performance profile curves from a results csv")
    p.add_argument("--results", required=True, help="results csv path")
    p.add_argument("--metric", choices=("iterations", "elapsed_s"), default="iterations")
    p.add_argument("--out", required=True, help="output csv path")


def _cmd_gen(args) -> int:
    spec = InstanceSpec(n=args.n, p=args.p, seed=args.seed,
                        gamma=args.gamma, density=args.density)
    save_instance(gen_instance(spec), args.out)
    print(f"wrote instance n={args.n} p={args.p} seed={args.seed} to {args.out}")
    return 0


def _cmd_run(args) -> int:
    instance = load_instance(args.instance)
    n, p = instance.spec.n, instance.spec.p
    x0 = initial_point(instance)
    diagnostics: tuple[str, ...] = ()
    if args.diagnostics:
        if args.solver != "crm":
            print("diagnostics are only available for the crm solver", file=sys.stderr)
            return 2
        diagnostics = ("fejer", "membership")
    cfg = SolverConfig(tolerance=args.tol, max_iterations=args.max_iter,
                       diagnostics=diagnostics)
    if args.solver in ("crm", "map"):
        problem = (BlockOperator(instance.operators), DiagonalSubspace(n, p))
        start = embed(x0, p)
        solution = embed(instance.fixed_point, p) if diagnostics else None
        trace = run(args.solver, problem, start, cfg, solution=solution)
        final = extract(trace.final_point, tol=np.inf)
    else:
        trace = run(args.solver, instance.operators, x0, cfg)
        final = trace.final_point
    report = {
        "solver": args.solver,
        "n": n,
        "p": p,
        "seed": instance.spec.seed,
        "iterations": trace.iterations,
        "stop_reason": trace.stop_reason,
        "final_residual": trace.residual_history[-1],
        "elapsed_s": trace.elapsed_s,
        "final_point": [float(v) for v in final],
    }
    if args.out:
        with open(args.out, "w", encoding="utf-8") as fh:
            json.dump(report, fh, indent=2)
            fh.write("\n")
    print(f"{args.solver}: {trace.stop_reason} after {trace.iterations} iterations, "
          f"residual {trace.residual_history[-1]:.3e}")
    return 0 if trace.stop_reason == "converged" else 1


def _cmd_bench(args) -> int:
    max_iter = args.max_iter if args.max_iter is not None else PRESETS[args.preset]
    grid = GridConfig(
        n_values=tuple(args.n),
        p_values=tuple(args.p),
        replicates=args.replicates,
        master_seed=args.master_seed,
        tolerance=args.tol,
        max_iterations=max_iter,
        admm=AdmmConfig(tolerance=args.admm_tol),
        diagnostics=not args.no_diagnostics,
    )
    if args.no_fused_blocks:
        set_fused_evaluation(False)
    results = run_experiment(grid, workers=args.workers)
    out = pathlib.Path(args.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    export(results, out / "results.csv", format="csv")
    for name, fields in (("summary_overall.csv", ("solver",)),
                         ("summary_by_n.csv", ("solver", "n")),
                         ("summary_by_p.csv", ("solver", "p"))):
        export(summarize(results, group_by=fields, metric="iterations"),
               out / name, format="csv")
    export(performance_profile(results, metric="iterations"),
           out / "profile_iterations.csv", format="csv")
    for key, stats in summarize(results, group_by=("solver",), metric="iterations"):
        print(f"{key['solver']}: mean {stats.mean:.1f} iterations over {stats.count} runs "
              f"(max {stats.max:.0f})")
    print(f"wrote {len(results)} rows and 4 report files to {out}")
    return 0


def _cmd_summarize(args) -> int:
    results = read_results_csv(args.results)
    group_by = tuple(s.strip() for s in args.group_by.split(",") if s.strip())
    stats = summarize(results, group_by=group_by, metric=args.metric)
    if args.out:
        export(stats, args.out, format="csv")
        print(f"wrote {len(stats)} groups to {args.out}")
        return 0
    for key, st in stats:
        label = ",".join(f"{k}={v}" for k, v in key.items())
        print(f"{label}: mean={st.mean:.6g} max={st.max:.6g} min={st.min:.6g} "
              f"std={st.std:.6g} count={st.count}")
    return 0


def _cmd_profile(args) -> int:
    results = read_results_csv(args.results)
    curves = performance_profile(results, metric=args.metric)
    export(curves, args.out, format="csv")
    print(f"wrote {sum(len(c.breakpoints) for c in curves)} breakpoints to {args.out}")
    return 0


_COMMANDS = {
    "gen": _cmd_gen,
    "run": _cmd_run,
    "bench": _cmd_bench,
    "summarize": _cmd_summarize,
    "profile": _cmd_profile,
}


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="crmfp",
        description="Circumcentered and averaged projection methods for "
                    "common fixed point problems.",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    _add_gen(sub)
    _add_run(sub)
    _add_bench(sub)
    _add_summarize(sub)
    _add_profile(sub)
    args = parser.parse_args(argv)
    return _COMMANDS[args.command](args)


if __name__ == "__main__":
    sys.exit(main())
