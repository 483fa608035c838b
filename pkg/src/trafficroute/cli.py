"""Command-line front end.

Exit codes: 0 success, 1 usage/config error, 2 no path, 3 missing
artifact, 4 validation error.
"""

from __future__ import annotations

import argparse
import csv
import json
import logging
import platform
import sys
import time
from contextlib import contextmanager
from pathlib import Path

import filelock
import numpy as np

from . import __version__, artifacts as art
from .apsp import floyd_warshall, lookup_route
from .bench import Artifacts, generate_trials, standard_configs, read_trial_costs, render_report
from .bench import compute_statistics, report_statistics, run_benchmark, write_stats
from .config import RunConfig
from .errors import ArtifactError, ConfigError, GraphValidationError, ImputationError, NoPath
from .graph import distance_view, load_graph, resolve_parallel, save_graph
from .ksp import CandidateStore, preprocess_pairs, select_best
from .search import Heuristic, a_star, build_heuristic_table, dijkstra, heuristic_scale
from .synth import generate_synthetic_city
from .traffic import REGIME_ORDER, CostModel, path_metrics, read_scenario, sample_scenario

log = logging.getLogger("trafficroute")

EXIT_OK, EXIT_ERROR, EXIT_NO_PATH, EXIT_MISSING_ARTIFACT, EXIT_VALIDATION = 0, 1, 2, 3, 4

_HEURISTIC_FLAGS = {"zero": "zero", "euclidean": "euclidean", "greatcircle": "great_circle"}
_DIVISOR_FLAGS = {"max": "max_speed", "avg": "avg_speed"}
ALL_PAIRS_KSP_LIMIT = 50


@contextmanager
def _artifact_lock(directory):
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    lock = filelock.FileLock(str(directory / ".lock"), timeout=30)
    with lock:
        yield


def _load(args):
    return load_graph(args.nodes, args.edges)


# -- commands -----------------------------------------------------------------


def cmd_validate(args) -> int:
    graph = _load(args)
    normalized = graph.normalized()
    max_speed, avg_speed = normalized.speed_bounds()
    imputed = [e for e in normalized.edges if not e.raw_maxspeeds]
    preview = {}
    for e in imputed:
        preview.setdefault(";".join(e.road_types), e.speed_kmh)
    print(f"vertices={graph.node_count}")
    print(f"edges={len(graph.edges)}")
    print(f"parallel_pairs={graph.parallel_pair_count()}")
    print(f"missing_maxspeed={graph.missing_speed_count()}")
    print(f"multi_maxspeed={sum(1 for e in graph.edges if len(e.raw_maxspeeds) > 1)}")
    print(f"max_speed_kmh={max_speed:g}")
    print(f"avg_speed_kmh={avg_speed:.4f}")
    for types, speed in sorted(preview.items()):
        print(f"imputed[{types}]={speed:g}")
    print(f"graph_hash={graph.content_hash()}")
    return EXIT_OK


def cmd_synth(args) -> int:
    graph = generate_synthetic_city(
        args.rows,
        args.cols,
        args.seed,
        args.detour,
        one_way_prob=args.one_way,
        diagonal_prob=args.diagonal,
        removal_prob=args.removal,
    )
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    save_graph(graph, out / "nodes.csv", out / "edges.csv")
    print(f"nodes={out / 'nodes.csv'}")
    print(f"edges={out / 'edges.csv'}")
    print(f"vertices={graph.node_count}")
    print(f"edge_count={len(graph.edges)}")
    return EXIT_OK


def _read_pairs(path) -> list[tuple[int, int]]:
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header != ["src", "dst"]:
            raise ConfigError(f"{path}: pairs file header must be src,dst")
        return [(int(r[0]), int(r[1])) for r in reader if r]


def cmd_preprocess(args) -> int:
    graph = _load(args).normalized()
    ghash = graph.content_hash()
    with _artifact_lock(args.artifacts):
        if args.kind == "fw":
            tables = floyd_warshall(distance_view(graph))
            path = art.fw_path(args.artifacts)
            art.save_apsp(tables, path, ghash)
            seconds = tables.build_time_s
        elif args.kind == "heuristic":
            kind = _HEURISTIC_FLAGS[args.heuristic]
            if kind == "zero":
                raise ConfigError("the zero heuristic needs no table")
            table = build_heuristic_table(graph, kind)
            path = art.heuristic_path(args.artifacts, kind)
            art.save_heuristic(table, path, ghash)
            seconds = table.build_time_s
        else:
            if args.pairs:
                pairs = _read_pairs(args.pairs)
            elif graph.node_count <= ALL_PAIRS_KSP_LIMIT:
                pairs = [(u, v) for u in graph.nodes for v in graph.nodes if u != v]
            else:
                raise ConfigError(
                    f"all-pairs K shortest paths on {graph.node_count} vertices is not feasible; "
                    "pass --pairs"
                )
            path = art.ksp_path(args.artifacts, args.k)
            store = CandidateStore(path, args.k, ghash)
            before = len(store.entries)
            start = time.perf_counter()
            preprocess_pairs(distance_view(graph), pairs, args.k, store)
            seconds = time.perf_counter() - start
            print(f"pairs_computed={len(store.entries) - before}")
            print(f"pairs_total={len(store.entries)}")
    print(f"artifact={path}")
    print(f"preprocessing_s={seconds:.6f}")
    return EXIT_OK


def cmd_route(args) -> int:
    graph = _load(args).normalized()
    ghash = graph.content_hash()
    model = CostModel(args.cost)
    if args.scenario:
        scenario = read_scenario(args.scenario, graph, args.regime)
    else:
        scenario = sample_scenario(graph, args.regime, args.seed)
    for node in (args.src, args.dst):
        if node not in graph.nodes:
            raise GraphValidationError(f"unknown node {node}")

    algo = args.algo
    if algo == "fw":
        tables = art.load_apsp(art.fw_path(args.artifacts), ghash)
        result = lookup_route(tables, distance_view(graph), scenario, args.src, args.dst, model)
    elif algo == "ksp":
        store = CandidateStore.open_existing(art.ksp_path(args.artifacts, args.k), args.k, ghash)
        if (args.src, args.dst) not in store:
            raise ArtifactError(f"no stored candidates for pair ({args.src}, {args.dst})")
        result = select_best(store.get(args.src, args.dst), scenario, distance_view(graph), model)
    else:
        cost_fn = scenario.cost_fn(model)
        tview = resolve_parallel(graph, cost_fn)
        adj = tview.weighted(cost_fn)
        kind = _HEURISTIC_FLAGS[args.heuristic] if algo == "astar" else "zero"
        if kind == "zero":
            result = dijkstra(adj, args.src, args.dst)
        else:
            h = Heuristic(kind, args.alpha, _DIVISOR_FLAGS[args.divisor])
            table_path = art.heuristic_path(args.artifacts, kind) if args.artifacts else None
            if table_path is not None and table_path.exists():
                table = art.load_heuristic(table_path, ghash)
            else:
                table = build_heuristic_table(graph, kind)
            result = a_star(adj, args.src, args.dst, h, table, heuristic_scale(model, h, graph))
        m = path_metrics(result.path, tview, scenario)
        result = type(result)(result.path, result.cost, result.expanded, result.runtime_s, m.length_km, m.eta_min)

    print("status=ok")
    print(f"algo={algo}")
    print(f"src={args.src}")
    print(f"dst={args.dst}")
    print(f"path={'-'.join(str(v) for v in result.path)}")
    print(f"cost={result.cost!r}")
    print(f"cost_units={model.units}")
    print(f"length_km={result.length_km!r}")
    print(f"eta_min={result.eta_min!r}")
    print(f"expanded={'' if result.expanded is None else result.expanded}")
    print(f"runtime_s={result.runtime_s:.9f}")
    return EXIT_OK


def _bench_config(args) -> RunConfig:
    if args.config:
        return RunConfig.load(args.config)
    if not (args.nodes and args.edges):
        raise ConfigError("bench needs --config or --nodes/--edges")
    return RunConfig(
        nodes=str(Path(args.nodes).resolve()),
        edges=str(Path(args.edges).resolve()),
        artifact_dir=str(Path(args.artifacts).resolve()),
        output_dir=str(Path(args.out).resolve()),
        cost_model=args.cost,
        trials=args.trials,
        seed=args.seed,
        k=args.k,
        alphas=tuple(args.alpha) if args.alpha else (10.0, 100.0),
        divisor=_DIVISOR_FLAGS[args.divisor],
        regimes=tuple(args.regime) if args.regime else REGIME_ORDER,
    )


def _load_artifacts(config: RunConfig, graph, ghash, configs) -> Artifacts:
    artifacts = Artifacts()
    fw = art.fw_path(config.artifact_dir)
    if fw.exists():
        artifacts.apsp = art.load_apsp(fw, ghash)
    for kind in ("euclidean", "great_circle"):
        p = art.heuristic_path(config.artifact_dir, kind)
        if p.exists():
            artifacts.tables[kind] = art.load_heuristic(p, ghash)
    for k in sorted({c.k for c in configs if c.approach == "ksp"}):
        artifacts.candidates[k] = CandidateStore(art.ksp_path(config.artifact_dir, k), k, ghash)
    return artifacts


def run_bench(config: RunConfig) -> dict[str, Path]:
    graph = load_graph(config.nodes, config.edges).normalized()
    ghash = graph.content_hash()
    configs = standard_configs(config.k, config.alphas, config.heuristics, config.divisor)
    if config.algorithms:
        unknown = set(config.algorithms) - {c.label for c in configs}
        if unknown:
            raise ConfigError(f"unknown algorithm labels {sorted(unknown)}")
        configs = [c for c in configs if c.label in config.algorithms]
    trials = generate_trials(graph, config.trials, config.seed, config.regimes)
    with _artifact_lock(config.artifact_dir):
        artifacts = _load_artifacts(config, graph, ghash, configs)
        had = {
            "fw": artifacts.apsp is not None,
            **{f"heuristic_{k}": k in artifacts.tables for k in ("euclidean", "great_circle")},
        }
        report = run_benchmark(graph, configs, trials, config.cost_model, artifacts)
        if artifacts.apsp is not None and not had["fw"]:
            art.save_apsp(artifacts.apsp, art.fw_path(config.artifact_dir), ghash)
        for kind, table in artifacts.tables.items():
            if not had[f"heuristic_{kind}"]:
                art.save_heuristic(table, art.heuristic_path(config.artifact_dir, kind), ghash)
    stat_rows = report_statistics(report)
    out = Path(config.output_dir)
    paths = render_report(report, out, config.breakdown, stat_rows)
    config.save(out / "run.cfg")
    manifest = {
        "package_version": __version__,
        "python": platform.python_version(),
        "numpy": np.__version__,
        "config_hash": config.config_hash(),
        "graph_hash": ghash,
        "cost_model": CostModel(config.cost_model).value,
        "trials": len(trials),
        "common_solvable": len(report.common_solvable),
        "algorithms": [c.label for c in configs],
    }
    paths["manifest"] = out / "manifest.json"
    paths["manifest"].write_text(json.dumps(manifest, indent=2, sort_keys=True) + "\n")
    return paths


def cmd_bench(args) -> int:
    config = _bench_config(args)
    if args.write_config:
        config.save(args.write_config)
    paths = run_bench(config)
    for name, path in paths.items():
        print(f"{name}={path}")
    return EXIT_OK


def cmd_stats(args) -> int:
    costs = read_trial_costs(args.trials)
    rows = compute_statistics(costs)
    path = write_stats(rows, args.out)
    print(f"stats={path}")
    print(f"tests={len(rows)}")
    return EXIT_OK


# -- parser -------------------------------------------------------------------


def _graph_args(p, required=True):
    p.add_argument("--nodes", required=required, help="nodes.csv (id,lat,lon)")
    p.add_argument("--edges", required=required, help="edges.csv (u,v,key,length_m,road_types,maxspeed)")


class _Parser(argparse.ArgumentParser):
    # argparse exits with 2 on usage errors, which is taken by NoPath here
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_ERROR, f"{self.prog}: error: {message}\n")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="trafficroute", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=__version__)
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("validate", help="check graph files and print dataset statistics")
    _graph_args(p)
    p.set_defaults(func=cmd_validate)

    p = sub.add_parser("synth", help="generate a synthetic grid city")
    p.add_argument("--rows", type=int, default=20)
    p.add_argument("--cols", type=int, default=20)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--detour", type=float, default=1.3, help="max edge length / arc length")
    p.add_argument("--one-way", type=float, default=0.1)
    p.add_argument("--diagonal", type=float, default=0.05)
    p.add_argument("--removal", type=float, default=0.0, help="directed edge removal probability")
    p.add_argument("--out", required=True, help="output directory")
    p.set_defaults(func=cmd_synth)

    p = sub.add_parser("preprocess", help="build an artifact: fw, heuristic or ksp")
    p.add_argument("kind", choices=["fw", "heuristic", "ksp"])
    _graph_args(p)
    p.add_argument("--artifacts", required=True, help="artifact directory")
    p.add_argument("--heuristic", choices=list(_HEURISTIC_FLAGS), default="euclidean")
    p.add_argument("--k", type=int, default=5)
    p.add_argument("--pairs", help="CSV of src,dst pairs for ksp")
    p.set_defaults(func=cmd_preprocess)

    p = sub.add_parser("route", help="answer one routing query")
    _graph_args(p)
    p.add_argument("--src", type=int, required=True)
    p.add_argument("--dst", type=int, required=True)
    p.add_argument("--algo", choices=["dijkstra", "astar", "fw", "ksp"], default="dijkstra")
    p.add_argument("--heuristic", choices=list(_HEURISTIC_FLAGS), default="euclidean")
    p.add_argument("--alpha", type=float, default=1.0)
    p.add_argument("--cost", choices=["v1", "v2"], default="v1")
    p.add_argument("--divisor", choices=list(_DIVISOR_FLAGS), default="max")
    p.add_argument("--regime", choices=list(REGIME_ORDER), default="none")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--scenario", help="scenario.csv (u,v,key,weight) instead of --regime/--seed")
    p.add_argument("--artifacts", default="artifacts")
    p.add_argument("--k", type=int, default=5)
    p.set_defaults(func=cmd_route)

    p = sub.add_parser("bench", help="run the full benchmark and write reports")
    p.add_argument("--config", help="run config file; other flags ignored when given")
    _graph_args(p, required=False)
    p.add_argument("--artifacts", default="artifacts")
    p.add_argument("--out", default="out")
    p.add_argument("--trials", type=int, default=200)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--k", type=int, default=5)
    p.add_argument("--alpha", type=float, action="append", help="inflation factor (repeatable)")
    p.add_argument("--cost", choices=["v1", "v2"], default="v1")
    p.add_argument("--divisor", choices=list(_DIVISOR_FLAGS), default="max")
    p.add_argument("--regime", choices=list(REGIME_ORDER), action="append", help="regime block (repeatable)")
    p.add_argument("--write-config", help="also save the effective config here")
    p.set_defaults(func=cmd_bench)

    p = sub.add_parser("stats", help="significance tests from a per-trial cost file")
    p.add_argument("--trials", required=True, help="trials.csv from bench")
    p.add_argument("--out", required=True, help="output stats.csv")
    p.set_defaults(func=cmd_stats)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(
        level=logging.INFO if args.verbose else logging.WARNING,
        format="%(levelname)s %(name)s: %(message)s",
    )
    try:
        return args.func(args)
    except NoPath as exc:
        print("status=no_path")
        print(f"reason=no_path src={exc.src} dst={exc.dst}")
        return EXIT_NO_PATH
    except ArtifactError as exc:
        print("status=missing_artifact")
        print(f"reason={exc}")
        return EXIT_MISSING_ARTIFACT
    except (GraphValidationError, ImputationError) as exc:
        print("status=invalid")
        print(f"reason={exc}")
        return EXIT_VALIDATION
    except (ConfigError, ValueError, OSError) as exc:
        print("status=error")
        print(f"reason={exc}")
        return EXIT_ERROR


if __name__ == "__main__":
    sys.exit(main())
