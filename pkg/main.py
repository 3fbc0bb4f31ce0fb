import argparse
import json
import logging
import os
import sys

import numpy as np

from bench.competition import DEFAULT_SPLITS, competition_heatmaps
from bench.external import import_external_trace
from bench.hyperparams import DEFAULT_K_MAX, run_hyperparameter_grid, select_defaults
from bench.results import ResultsFile
from bench.runner import ExperimentPlan, run_experiment
from bench.statistics import DEFAULT_ALPHA, fraction_curve
from core.cache import SearchSpaceCache
from core.exceptions import TuningError
from core.fitness import FitnessMode
from core.generators import RidgeProfile, generate_nk_landscape, generate_synthetic_kernel_space
from core.space import NeighbourhoodKind, ParameterSpace
from helpers.constants import (
    CENTRALITY_P_MAX,
    DEFAULT_DAMPING,
    DEFAULT_GRID_REPETITIONS,
    DEFAULT_NODE_LIMIT,
    SPACES_DIR,
    WORKERS_ENV,
)
from landscape.centrality import centrality_report, descent_rank_correlation, pagerank, simulate_descents
from landscape.export import ExportFormat, export_graph
from landscape.flow_graph import build_ffg
from optimizers import OptimizerSpec, algorithm_names, run_optimizer
from optimizers.defaults import HyperparameterDefaults

logFormatter = ' %(asctime)s %(name)s - %(levelname)s: %(message)s'

logger = logging.getLogger("main")


def cmd_tune(args) -> int:
    cache = SearchSpaceCache.load(args.cache)
    if args.hyperparameters is not None:
        hyperparameters = args.hyperparameters
    else:
        hyperparameters = HyperparameterDefaults.load().lookup(args.algo, args.budget, strict=False)

    run = run_optimizer(OptimizerSpec(args.algo, hyperparameters, args.seed), cache, args.budget, FitnessMode.parse(args.mode))
    values = cache.space.to_values(run.best_config) if run.best_config is not None else None
    print(f"algorithm:     {args.algo} {json.dumps(run.hyperparameters, sort_keys=True)}")
    print(f"best config:   {dict(zip(cache.space.names, values)) if values else None}")
    print(f"best fitness:  {run.best_fitness}")
    print(f"fraction:      {cache.fraction_of_optimum(run.best_fitness):.4f}")
    print(f"evals used:    {run.evals_used} / {args.budget}")

    if args.trace:
        with open(args.trace, "w") as f:
            json.dump(run.to_dict(cache), f)
        logger.info(f"Trace written to {args.trace}")
    return 0


def cmd_analyze(args) -> int:
    cache = SearchSpaceCache.load(args.cache)
    f_opt = cache.f_opt
    kind = NeighbourhoodKind.parse(args.neighbourhood)
    graph = build_ffg(cache, kind, args.node_limit)
    report = centrality_report(cache, kind, args.damping, args.p_max, graph=graph)

    if args.fidelity_walks:
        rank = pagerank(graph, args.damping)
        arrivals = simulate_descents(graph, args.fidelity_walks, np.random.default_rng(args.seed))
        report.metadata["descent_rank_correlation"] = descent_rank_correlation(graph, rank, arrivals)

    os.makedirs(args.output_dir, exist_ok=True)
    stem = os.path.join(args.output_dir, cache.metadata.label.replace("@", "_"))
    report.write_json(f"{stem}_centrality.json")
    report.write_minima_csv(f"{stem}_minima.csv")
    report.write_curve_csv(f"{stem}_cp.csv")
    if args.export:
        fmt = ExportFormat(args.export)
        rank = pagerank(graph, args.damping)
        export_graph(graph, f"{stem}_ffg.{fmt.value}", fmt, f_opt, rank)

    print(f"cache:         {cache.metadata.label} ({cache.size} points, {cache.fail_count} failing)")
    print(f"census:        {report.census}")
    print(f"C_0 / C_{args.p_max}:     {report.curve[0][1]:.4f} / {report.curve[-1][1]:.4f}")
    return 0


def cmd_bench(args) -> int:
    plan = ExperimentPlan.load(args.plan)
    if args.seed is not None:
        plan.base_seed = args.seed
    run_experiment(plan, args.results, args.workers)

    records = ResultsFile(args.results).load()
    if args.external:
        caches = {c.metadata.label: c for c in (SearchSpaceCache.load(p) for p in plan.caches)}
        for trace in args.external:
            records += import_external_trace(trace, caches).records

    os.makedirs(args.report_dir, exist_ok=True)
    competition = competition_heatmaps(records, args.splits, args.exclude_devices, args.alpha)
    for band in competition.bands:
        name = band.label.replace("<=", "le").replace(">", "gt")
        competition.write_heatmap_csv(band.label, os.path.join(args.report_dir, f"heatmap_{name}.csv"))
    competition.write_totals_csv(os.path.join(args.report_dir, "totals.csv"))

    with open(os.path.join(args.report_dir, "curves.csv"), "w") as f:
        f.write("cache,algorithm,budget,mean_evals,mean_fraction,ci,reps\n")
        for cache, algorithm in sorted({(r.cache, r.algorithm) for r in records}):
            for point in fraction_curve(records, cache, algorithm):
                f.write(f"{cache},{algorithm},{','.join(str(v) for v in point)}\n")

    for row in competition.totals():
        print(f"{row.band:>8} {row.algorithm:<24} wins {row.wins:>4} losses {row.losses:>4}")
    return 0


def cmd_hyperopt(args) -> int:
    with open(args.grid) as f:
        grid = json.load(f)
    caches = [SearchSpaceCache.load(path) for path in args.caches]
    entries = run_hyperparameter_grid(
        args.algorithm, grid, caches, args.budgets, args.repetitions, args.seed, FitnessMode.parse(args.mode)
    )
    defaults = HyperparameterDefaults.load(args.output) if os.path.exists(args.output) else None
    defaults = select_defaults(args.algorithm, entries, args.budgets, defaults, k_max=args.k_max)
    defaults.save(args.output)
    for budget in args.budgets:
        print(f"{budget:>6}: {json.dumps(defaults.lookup(args.algorithm, budget), sort_keys=True)}")
    return 0


def cmd_generate(args) -> int:
    if args.kind == "nk":
        cache = generate_nk_landscape(args.n, args.k, args.seed)
    else:
        space_path = args.space if os.path.exists(args.space) else os.path.join(SPACES_DIR, f"{args.space}.json")
        space = ParameterSpace.load(space_path)
        cache = generate_synthetic_kernel_space(space, args.fail_fraction, RidgeProfile(args.profile), args.seed, args.scale_ms)
    cache.save(args.output)
    print(f"{cache.metadata.label}: {cache.size} entries written to {args.output}")
    return 0


def cmd_import_cache(args) -> int:
    cache = SearchSpaceCache.load(args.path)
    output = args.output or f"{os.path.splitext(args.path)[0]}.normalized.json"
    cache.save(output)
    print(f"{cache.metadata.label}: {cache.size} configurations, {cache.ok_count} ok, {cache.fail_count} failing")
    print(f"normalized cache written to {output}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(description="Black-box auto-tuning optimizers and fitness landscape analysis")
    parser.add_argument("--config", help="JSON file whose keys set flag defaults")
    parser.add_argument("--log-level", default="INFO", choices=["DEBUG", "INFO", "WARNING", "ERROR"])
    subparsers = parser.add_subparsers(dest="command", required=True)

    tune = subparsers.add_parser("tune", help="run one optimizer on a cache")
    tune.add_argument("cache")
    tune.add_argument("--algo", required=True, choices=algorithm_names())
    tune.add_argument("--budget", type=int, required=True)
    tune.add_argument("--seed", type=int, default=0)
    tune.add_argument("--mode", default=FitnessMode.DETERMINISTIC_MEAN.value, choices=[m.value for m in FitnessMode])
    tune.add_argument("--hyperparameters", type=json.loads, help="JSON object, replaces the budget defaults")
    tune.add_argument("--trace", default="trace.json", help="trace output file, empty to skip")
    tune.set_defaults(handler=cmd_tune)

    analyze = subparsers.add_parser("analyze", help="fitness flow graph, PageRank and proportion of centrality")
    analyze.add_argument("cache")
    analyze.add_argument("--neighbourhood", default="adjacent", choices=[k.value for k in NeighbourhoodKind])
    analyze.add_argument("--damping", type=float, default=DEFAULT_DAMPING)
    analyze.add_argument("--p-max", type=int, default=CENTRALITY_P_MAX)
    analyze.add_argument("--node-limit", type=int, default=DEFAULT_NODE_LIMIT)
    analyze.add_argument("--export", choices=[f.value for f in ExportFormat])
    analyze.add_argument("--fidelity-walks", type=int, default=0, help="simulated descents for the PageRank check")
    analyze.add_argument("--seed", type=int, default=0)
    analyze.add_argument("--output-dir", default="reports")
    analyze.set_defaults(handler=cmd_analyze)

    bench = subparsers.add_parser("bench", help="run an experiment plan and its competitions")
    bench.add_argument("--plan", required=True)
    bench.add_argument("--results", default="results.jsonl")
    bench.add_argument("--workers", type=int, default=int(os.getenv(WORKERS_ENV, "1")))
    bench.add_argument("--seed", type=int, help="overrides the plan's base seed")
    bench.add_argument("--splits", type=int, nargs="+", default=list(DEFAULT_SPLITS))
    bench.add_argument("--exclude-devices", nargs="*", default=[])
    bench.add_argument("--alpha", type=float, default=DEFAULT_ALPHA)
    bench.add_argument("--external", nargs="*", help="CSV traces of external tuners")
    bench.add_argument("--report-dir", default="reports")
    bench.set_defaults(handler=cmd_bench)

    hyperopt = subparsers.add_parser("hyperopt", help="grid search and selection of default hyperparameters")
    hyperopt.add_argument("--algorithm", required=True, choices=algorithm_names())
    hyperopt.add_argument("--grid", required=True, help="JSON file mapping hyperparameter names to candidate values")
    hyperopt.add_argument("--caches", nargs="+", required=True)
    hyperopt.add_argument("--budgets", type=int, nargs="+", required=True)
    hyperopt.add_argument("--repetitions", type=int, default=DEFAULT_GRID_REPETITIONS)
    hyperopt.add_argument("--seed", type=int, default=0)
    hyperopt.add_argument("--mode", default=FitnessMode.DETERMINISTIC_MEAN.value, choices=[m.value for m in FitnessMode])
    hyperopt.add_argument("--k-max", type=float, default=DEFAULT_K_MAX)
    hyperopt.add_argument("--output", default="defaults.json")
    hyperopt.set_defaults(handler=cmd_hyperopt)

    generate = subparsers.add_parser("generate", help="synthetic caches")
    kinds = generate.add_subparsers(dest="kind", required=True)
    nk = kinds.add_parser("nk")
    nk.add_argument("--n", type=int, required=True)
    nk.add_argument("--k", type=int, required=True)
    nk.add_argument("--seed", type=int, default=0)
    nk.add_argument("--output", required=True)
    synthetic = kinds.add_parser("synthetic")
    synthetic.add_argument("--space", required=True, help="space file or bundled space name")
    synthetic.add_argument("--fail-fraction", type=float, default=0.0)
    synthetic.add_argument("--profile", default=RidgeProfile.RIDGE.value, choices=[p.value for p in RidgeProfile])
    synthetic.add_argument("--scale-ms", type=float, default=1.0)
    synthetic.add_argument("--seed", type=int, default=0)
    synthetic.add_argument("--output", required=True)
    for sub in (nk, synthetic):
        sub.set_defaults(handler=cmd_generate)

    import_cache = subparsers.add_parser("import-cache", help="normalize a native or Kernel Tuner cache")
    import_cache.add_argument("path")
    import_cache.add_argument("--output")
    import_cache.set_defaults(handler=cmd_import_cache)

    return parser


def _subparsers(parser: argparse.ArgumentParser):
    for action in parser._actions:
        if isinstance(action, argparse._SubParsersAction):
            for sub in action.choices.values():
                yield sub
                yield from _subparsers(sub)


def apply_config(parser: argparse.ArgumentParser, path: str):
    """Values of the config file become defaults of every parser defining that flag"""
    with open(path) as f:
        config = json.load(f)
    if not isinstance(config, dict):
        parser.error(f"config file {path} must hold a JSON object")

    known = set()
    for sub in [parser, *_subparsers(parser)]:
        dests = {a.dest for a in sub._actions}
        known |= dests
        sub.set_defaults(**{k: v for k, v in config.items() if k in dests})
        for action in sub._actions:
            if action.dest in config and action.option_strings:
                action.required = False
    unknown = sorted(set(config) - known)
    if unknown:
        parser.error(f"unknown keys in config file {path}: {unknown}")


def main(argv=None) -> int:
    parser = build_parser()
    preparser = argparse.ArgumentParser(add_help=False)
    preparser.add_argument("--config")
    pre, _ = preparser.parse_known_args(argv)
    if pre.config:
        apply_config(parser, pre.config)

    args = parser.parse_args(argv)
    logging.basicConfig(level=getattr(logging, args.log_level), format=logFormatter)
    try:
        return args.handler(args)
    except (TuningError, OSError) as e:
        logger.error(str(e))
        print(f"error: {e}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
