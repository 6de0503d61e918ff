"""Command-line interface: place, simulate, estimate, experiment, compare."""

from __future__ import annotations

import argparse
import sys

import numpy as np

from . import placement as pl
from .epidemic import TransmissionModel, observe, simulate, format_trace, Observation
from .estimation import gaussian_ml_estimate, zero_variance_estimate
from .experiments import (compare_objectives, emit_csv, emit_plotdata,
                          format_comparison_csv, parse_config, run_experiment)
from .graphs import load_edge_list_file
from .resolution import ObserverSet, Prior, load_prior


def _write_placement(path, g, result: pl.PlacementResult) -> None:
    m = result.metrics
    lines = [
        f"algorithm = {result.algorithm}",
        f"k = {result.params.get('k')}",
        f"observers = {' '.join(g.label(o) for o in result.observers)}",
        f"p_s = {m.p_s!r}",
        f"e_d_weighted = {m.e_d_weighted!r}",
        f"e_d_hops = {m.e_d_hops!r}",
        f"entropy = {m.entropy!r}",
    ]
    if m.p_l_size is not None:
        lines.append(f"p_l_size = {m.p_l_size}")
    if "L" in result.params:
        lines.append(f"L = {result.params['L']!r}")
    lines.append("objective_trace = " + " ".join(repr(x) for x in result.objective_trace))
    text = "\n".join(lines) + "\n"
    if path == "-":
        sys.stdout.write(text)
    else:
        with open(path, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)


def _cmd_place(args) -> int:
    g = load_edge_list_file(args.graph)
    seeds = None
    if args.seeds:
        with open(args.seeds) as fh:
            seeds = [g.index(tok) for tok in fh.read().split()]
    algo = args.algo
    if algo == "lv":
        result = pl.lv_obs(g, args.k, seeds)
    elif algo == "hv":
        if args.L is not None:
            L = args.L
        elif args.L_grid:
            grid = [float(x) for x in args.L_grid.split(",")]
            L = pl.select_L(g, args.k, grid).value
        else:
            L = g.weighted_diameter()
        result = pl.hv_obs(g, args.k, L, seeds)
    elif algo == "bc":
        result = pl.betweenness_placement(g, args.k)
    elif algo == "coverage":
        result = pl.coverage_rate_placement(g, args.k)
    elif algo == "kmedian":
        result = pl.k_median_placement(g, args.k)
    elif algo == "entropy":
        result = pl.entropy_greedy_placement(g, args.k, seeds)
    elif algo == "edist":
        result = pl.expected_distance_greedy_placement(g, args.k, seeds=seeds)
    elif algo == "exhaustive":
        result = pl.exhaustive_optimal_placement(g, args.k, args.objective)
    else:  # unreachable; argparse restricts choices
        raise AssertionError(algo)
    _write_placement(args.out, g, result)
    return 0


def _cmd_simulate(args) -> int:
    g = load_edge_list_file(args.graph)
    model = _model_from_args(args)
    trace = simulate(g, model, g.index(args.source), args.seed)
    text = format_trace(g, trace, model)
    if args.out == "-":
        sys.stdout.write(text)
    else:
        with open(args.out, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)
    return 0


def _model_from_args(args) -> TransmissionModel:
    if args.model == "deterministic":
        return TransmissionModel.deterministic()
    if args.model == "truncated_gaussian":
        return TransmissionModel.truncated_gaussian(args.sigma)
    if args.model == "uniform_factor":
        return TransmissionModel.uniform_factor(args.epsilon)
    raise AssertionError(args.model)


def _cmd_estimate(args) -> int:
    g = load_edge_list_file(args.graph)
    with open(args.observers) as fh:
        observers = ObserverSet([g.index(tok) for tok in fh.read().split()])
    times_by_node: dict[int, float] = {}
    with open(args.times) as fh:
        for raw in fh.read().splitlines():
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            tok, val = line.split()
            times_by_node[g.index(tok)] = float(val)
    missing = [o for o in observers if o not in times_by_node]
    if missing:
        raise SystemExit(f"no infection time for observer(s) {[g.label(o) for o in missing]}")
    times = np.array([times_by_node[o] for o in observers.observers])
    obs = Observation(observers=observers, times=times, tau=times[1:] - times[0])
    if args.limit is not None:
        # re-apply the limit against the supplied times
        ranked = sorted(observers.observers, key=lambda o: (times_by_node[o], o))
        kept = ObserverSet(sorted(ranked[:args.limit]))
        times = np.array([times_by_node[o] for o in kept.observers])
        obs = Observation(observers=kept, times=times, tau=times[1:] - times[0])
    if args.prior:
        with open(args.prior) as fh:
            prior = load_prior(g, fh.read())
    else:
        prior = Prior.uniform(g.node_count)
    mode = args.mode
    if mode == "zero" or (mode == "auto" and args.sigma == 0):
        result = zero_variance_estimate(g, obs, prior, np.random.default_rng(args.seed))
    else:
        result = gaussian_ml_estimate(g, obs, args.sigma, prior=prior,
                                      rng=np.random.default_rng(args.seed))
    print(f"estimate = {g.label(result.estimate)}")
    print(f"mode = {result.mode}")
    print(f"tie_set = {' '.join(g.label(t) for t in result.tie_info)}")
    if result.mode == "zero_variance":
        print(f"no_exact_match = {str(result.no_exact_match).lower()}")
    top = sorted(result.score_table.items(), key=lambda kv: (-kv[1], kv[0]))[:10]
    for node, score in top:
        print(f"score[{g.label(node)}] = {score!r}")
    return 0


def _cmd_experiment(args) -> int:
    with open(args.config) as fh:
        cfg = parse_config(fh.read())
    rows = run_experiment(cfg, jobs=args.jobs)
    emit_csv(rows, args.out)
    if args.plotdata:
        emit_plotdata(rows, args.plotdata)
    return 0


def _cmd_compare(args) -> int:
    ks = [int(x) for x in args.k.split(",")]
    rows = compare_objectives(args.family, ks, args.trials, args.seed,
                              n=args.n, param=args.param)
    text = format_comparison_csv(rows)
    if args.out == "-":
        sys.stdout.write(text)
    else:
        with open(args.out, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="epiloc",
        description="Observer placement and source localization for epidemics "
                    "on weighted networks.")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("place", help="compute an observer placement")
    p.add_argument("--graph", required=True, help="edge-list file (u v w per line)")
    p.add_argument("--algo", required=True,
                   choices=["lv", "hv", "bc", "coverage", "kmedian", "entropy",
                            "edist", "exhaustive"])
    p.add_argument("--k", type=int, required=True, help="observer budget")
    p.add_argument("--L", type=float, default=None, help="length constraint for hv")
    p.add_argument("--L-grid", dest="L_grid", default=None,
                   help="comma-separated L grid; the best value is selected")
    p.add_argument("--seeds", default=None, help="file of seed-node tokens to restrict the start loop")
    p.add_argument("--objective", choices=["p_s", "e_d"], default="p_s",
                   help="objective for --algo exhaustive")
    p.add_argument("--out", default="-", help="output file ('-' for stdout)")
    p.set_defaults(func=_cmd_place)

    p = sub.add_parser("simulate", help="run one epidemic and dump infection times")
    p.add_argument("--graph", required=True)
    p.add_argument("--source", required=True, help="source node token")
    p.add_argument("--model", choices=["deterministic", "truncated_gaussian", "uniform_factor"],
                   default="deterministic")
    p.add_argument("--sigma", type=float, default=0.0)
    p.add_argument("--epsilon", type=float, default=0.0)
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--out", default="-")
    p.set_defaults(func=_cmd_simulate)

    p = sub.add_parser("estimate", help="estimate the source from observer times")
    p.add_argument("--graph", required=True)
    p.add_argument("--observers", required=True, help="file of observer node tokens")
    p.add_argument("--times", required=True, help="file of `node time` lines")
    p.add_argument("--sigma", type=float, required=True)
    p.add_argument("--limit", type=int, default=None, help="keep only the m earliest observers")
    p.add_argument("--mode", choices=["zero", "ml", "auto"], default="auto")
    p.add_argument("--prior", default=None, help="prior file (`node probability` lines)")
    p.add_argument("--seed", type=int, default=0, help="seed for the in-class draw")
    p.set_defaults(func=_cmd_estimate)

    p = sub.add_parser("experiment", help="run a configured Monte-Carlo sweep")
    p.add_argument("--config", required=True, help="flat key = value config file")
    p.add_argument("--out", required=True, help="metrics CSV output path")
    p.add_argument("--plotdata", default=None, help="directory for `sigma ps` files")
    p.add_argument("--jobs", type=int, default=1, help="worker processes (1 = serial)")
    p.set_defaults(func=_cmd_experiment)

    p = sub.add_parser("compare", help="compare greedy objectives on random graphs")
    p.add_argument("--family", choices=["rgg", "ba"], required=True)
    p.add_argument("--k", default="2,4,8", help="comma-separated budgets")
    p.add_argument("--trials", type=int, required=True)
    p.add_argument("--n", type=int, default=100)
    p.add_argument("--param", type=float, default=None,
                   help="radius for rgg (default 0.2) or attachment count for ba (default 3)")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", default="-")
    p.set_defaults(func=_cmd_compare)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    raise SystemExit(main())
