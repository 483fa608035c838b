"""Trial generation, benchmark execution, aggregation and report files."""

from __future__ import annotations

import csv
import logging
import math
import time
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Iterable, Sequence

from . import rng, stats
from .apsp import ApspTables, floyd_warshall, lookup_route
from .errors import ConfigError, NoPath
from .graph import RoadGraph, distance_view, resolve_parallel
from .ksp import CandidateStore, preprocess_pairs, select_best
from .search import (
    Heuristic,
    HeuristicTable,
    RouteResult,
    a_star,
    build_heuristic_table,
    dijkstra,
    heuristic_scale,
)
from .traffic import REGIME_ORDER, CostModel, get_regime, path_metrics, sample_scenario

log = logging.getLogger(__name__)

APPROACHES = ("multi_query_lookup", "single_query", "ksp")
REPORT_HEADER = [
    "approach",
    "algorithm",
    "preprocessing_min",
    "avg_runtime_s",
    "avg_cost",
    "avg_expanded",
    "avg_length_km",
    "avg_eta_min",
    "solved",
    "unsolved",
]
TRIALS_HEADER = ["trial_id", "algorithm", "regime", "cost", "length_km", "eta_min", "runtime_s", "expanded"]
STATS_HEADER = ["test", "algo_a", "algo_b", "statistic", "p_value", "degenerate"]
TIMING_COLUMNS = frozenset({"preprocessing_min", "avg_runtime_s", "runtime_s"})

_KIND_TITLES = {"euclidean": "Euclidean", "great_circle": "Great-Circle"}


@dataclass(frozen=True)
class TrialSpec:
    trial_id: int
    src: int
    dst: int
    regime: str
    scenario_seed: int


@dataclass(frozen=True)
class AlgorithmConfig:
    label: str
    approach: str
    heuristic: str = "zero"
    alpha: float = 1.0
    k: int | None = None
    divisor: str = "max_speed"

    def __post_init__(self):
        if self.approach not in APPROACHES:
            raise ConfigError(f"unknown approach {self.approach!r}")
        if self.approach == "ksp" and not self.k:
            raise ConfigError(f"{self.label}: ksp needs k")

    @property
    def display_name(self) -> str:
        if self.approach == "multi_query_lookup":
            return "Floyd-Warshall-Ingerman"
        if self.approach == "ksp":
            return f"Yen's (K={self.k})"
        if self.heuristic == "zero":
            return "Dijkstra's"
        title = _KIND_TITLES[self.heuristic]
        if self.alpha == 1.0:
            return f"A* ({title})"
        return f"Inflated A* ({title}, α={self.alpha:g})"

    def as_heuristic(self) -> Heuristic:
        return Heuristic(self.heuristic, self.alpha, self.divisor)


def standard_configs(
    k: int = 5,
    alphas: Sequence[float] = (10.0, 100.0),
    heuristics: Sequence[str] = ("euclidean", "great_circle"),
    divisor: str = "max_speed",
) -> list[AlgorithmConfig]:
    """Lookup, Dijkstra, A* per heuristic, inflated A* per (heuristic,
    alpha), and Yen.  Nine configurations with the defaults."""
    configs = [
        AlgorithmConfig("fw", "multi_query_lookup"),
        AlgorithmConfig("dijkstra", "single_query"),
    ]
    configs += [
        AlgorithmConfig(f"astar_{h}", "single_query", h, 1.0, divisor=divisor) for h in heuristics
    ]
    configs += [
        AlgorithmConfig(f"astar_{h}_a{a:g}", "single_query", h, float(a), divisor=divisor)
        for h in heuristics
        for a in alphas
    ]
    configs.append(AlgorithmConfig(f"yen_k{k}", "ksp", k=k))
    return configs


def generate_trials(
    graph: RoadGraph, n: int, seed: int, regimes: Sequence[str] = REGIME_ORDER
) -> list[TrialSpec]:
    """``n`` start-goal pairs over ``2n`` distinct vertices, split into
    equal consecutive blocks, one per regime."""
    if n <= 0 or n % len(regimes):
        raise ValueError(f"trial count {n} must be a positive multiple of {len(regimes)}")
    for r in regimes:
        get_regime(r)
    if 2 * n > graph.node_count:
        raise ValueError(f"{n} trials need {2 * n} distinct vertices, graph has {graph.node_count}")
    gen = rng.SplitMix64(rng.substream_seed(seed, "trials"))
    verts = gen.sample(sorted(graph.nodes), 2 * n)
    scenario_base = rng.substream_seed(seed, "scenario")
    block = n // len(regimes)
    return [
        TrialSpec(i, verts[2 * i], verts[2 * i + 1], regimes[i // block], scenario_base ^ i)
        for i in range(n)
    ]


@dataclass
class Artifacts:
    """Preprocessed data a benchmark may reuse.  Missing pieces are built by
    :func:`run_benchmark` unless ``build_missing`` is off."""

    apsp: ApspTables | None = None
    tables: dict[str, HeuristicTable] = field(default_factory=dict)
    candidates: dict[int, CandidateStore | dict] = field(default_factory=dict)
    # seconds spent on candidate pairs computed in-memory (no store)
    candidate_seconds: dict[int, float] = field(default_factory=dict)


@dataclass(frozen=True)
class TrialRecord:
    trial_id: int
    algorithm: str
    regime: str
    solved: bool
    cost: float = math.nan
    length_km: float = math.nan
    eta_min: float = math.nan
    runtime_s: float = math.nan
    expanded: int | None = None
    path: tuple[int, ...] = ()


@dataclass(frozen=True)
class AlgoSummary:
    label: str
    approach: str
    display_name: str
    preprocessing_min: float
    avg_runtime_s: float
    avg_cost: float
    avg_expanded: float | None
    avg_length_km: float
    avg_eta_min: float
    solved: int
    unsolved: int
    regime_costs: dict[str, float]


@dataclass
class BenchReport:
    cost_model: CostModel
    configs: list[AlgorithmConfig]
    trials: list[TrialSpec]
    records: list[TrialRecord]
    summaries: list[AlgoSummary]
    common_solvable: list[int]

    def summary(self, label: str) -> AlgoSummary:
        return next(s for s in self.summaries if s.label == label)

    def costs(self, label: str) -> list[float]:
        """Per-trial costs over the common-solvable set, in trial order."""
        by_trial = {r.trial_id: r for r in self.records if r.algorithm == label}
        return [by_trial[t].cost for t in self.common_solvable]


def _prepare(graph, configs, trials, artifacts, build_missing, dview):
    need_fw = any(c.approach == "multi_query_lookup" for c in configs)
    kinds = sorted({c.heuristic for c in configs if c.approach == "single_query"} - {"zero"})
    ks = sorted({c.k for c in configs if c.approach == "ksp"})
    pairs = [(t.src, t.dst) for t in trials]
    missing = []
    if need_fw and artifacts.apsp is None:
        missing.append("fw")
    missing += [f"heuristic:{k}" for k in kinds if k not in artifacts.tables]
    for k in ks:
        store = artifacts.candidates.get(k)
        if store is None or any(p not in store for p in pairs):
            missing.append(f"ksp:k={k}")
    if missing and not build_missing:
        raise ConfigError(f"missing preprocessed artifacts: {', '.join(missing)}")
    if need_fw and artifacts.apsp is None:
        log.info("building APSP tables for %d vertices", graph.node_count)
        artifacts.apsp = floyd_warshall(dview)
    for kind in kinds:
        if kind not in artifacts.tables:
            artifacts.tables[kind] = build_heuristic_table(graph, kind)
    for k in ks:
        store = artifacts.candidates.setdefault(k, {})
        todo = [p for p in pairs if p not in store]
        if todo:
            log.info("running Yen (K=%d) for %d pairs", k, len(todo))
            start = time.perf_counter()
            preprocess_pairs(dview, todo, k, store)
            if not isinstance(store, CandidateStore):
                artifacts.candidate_seconds[k] = (
                    artifacts.candidate_seconds.get(k, 0.0) + time.perf_counter() - start
                )


def _preprocessing_seconds(config, artifacts, trials) -> float:
    if config.approach == "multi_query_lookup":
        return artifacts.apsp.build_time_s
    if config.approach == "ksp":
        store = artifacts.candidates[config.k]
        if isinstance(store, CandidateStore):
            return store.seconds_for((t.src, t.dst) for t in trials)
        return artifacts.candidate_seconds.get(config.k, 0.0)
    if config.heuristic == "zero":
        return 0.0
    return artifacts.tables[config.heuristic].build_time_s


def run_benchmark(
    graph: RoadGraph,
    configs: Sequence[AlgorithmConfig],
    trials: Sequence[TrialSpec],
    cost_model: CostModel | str = CostModel.V1,
    artifacts: Artifacts | None = None,
    build_missing: bool = True,
    progress: Callable[[int, int], None] | None = None,
) -> BenchReport:
    """Run every configuration on every trial, sequentially and timed.

    Each query is timed on its own; the first trial is run twice per
    configuration and the first timing discarded.  Averages use only the
    trials every configuration solved.
    """
    cost_model = CostModel(cost_model)
    labels = [c.label for c in configs]
    if len(set(labels)) != len(labels):
        raise ConfigError("algorithm labels must be unique")
    if any(e.speed_kmh is None for e in graph.edges):
        graph = graph.normalized()
    artifacts = artifacts if artifacts is not None else Artifacts()
    dview = distance_view(graph)
    _prepare(graph, configs, trials, artifacts, build_missing, dview)
    scales = {c.label: heuristic_scale(cost_model, c.as_heuristic(), graph) for c in configs if c.approach == "single_query"}

    records: list[TrialRecord] = []
    for n, trial in enumerate(trials):
        scenario = sample_scenario(graph, trial.regime, trial.scenario_seed)
        cost_fn = scenario.cost_fn(cost_model)
        tview = resolve_parallel(graph, cost_fn)
        adj = tview.weighted(cost_fn)

        def run(config: AlgorithmConfig) -> RouteResult:
            if config.approach == "multi_query_lookup":
                return lookup_route(artifacts.apsp, dview, scenario, trial.src, trial.dst, cost_model)
            if config.approach == "ksp":
                entry = artifacts.candidates[config.k][(trial.src, trial.dst)]
                if entry is None:
                    raise NoPath(trial.src, trial.dst)
                return select_best(entry, scenario, dview, cost_model)
            h = config.as_heuristic()
            if h.kind == "zero":
                return dijkstra(adj, trial.src, trial.dst)
            table = artifacts.tables[h.kind]
            return a_star(adj, trial.src, trial.dst, h, table, scales[config.label])

        for config in configs:
            try:
                if n == 0:
                    run(config)  # warm-up
                result = run(config)
            except NoPath:
                records.append(TrialRecord(trial.trial_id, config.label, trial.regime, False))
                continue
            view = tview if config.approach == "single_query" else dview
            m = path_metrics(result.path, view, scenario)
            records.append(
                TrialRecord(
                    trial.trial_id,
                    config.label,
                    trial.regime,
                    True,
                    m.cost(cost_model),
                    m.length_km,
                    m.eta_min,
                    result.runtime_s,
                    result.expanded,
                    result.path,
                )
            )
        if progress is not None:
            progress(n + 1, len(trials))

    solved_by = {}
    for r in records:
        solved_by.setdefault(r.trial_id, []).append(r.solved)
    common = [t.trial_id for t in trials if all(solved_by[t.trial_id])]
    common_set = set(common)
    regimes_present = [r for r in REGIME_ORDER if any(t.regime == r for t in trials)]
    regimes_present += sorted({t.regime for t in trials} - set(regimes_present))

    summaries = []
    for config in configs:
        rs = [r for r in records if r.algorithm == config.label and r.trial_id in common_set]
        expanded = None
        if config.approach == "single_query" and rs:
            expanded = _avg(r.expanded for r in rs)
        summaries.append(
            AlgoSummary(
                config.label,
                config.approach,
                config.display_name,
                _preprocessing_seconds(config, artifacts, trials) / 60.0,
                _avg(r.runtime_s for r in rs),
                _avg(r.cost for r in rs),
                expanded,
                _avg(r.length_km for r in rs),
                _avg(r.eta_min for r in rs),
                len(rs),
                len(trials) - len(rs),
                {reg: _avg(r.cost for r in rs if r.regime == reg) for reg in regimes_present},
            )
        )
    return BenchReport(cost_model, list(configs), list(trials), records, summaries, common)


def _avg(values: Iterable[float]) -> float:
    values = list(values)
    return sum(values) / len(values) if values else math.nan


# -- statistics ---------------------------------------------------------------


@dataclass(frozen=True)
class StatRow:
    test: str
    algo_a: str
    algo_b: str
    statistic: float
    p_value: float
    degenerate: bool


def compute_statistics(costs: dict[str, list[float]]) -> list[StatRow]:
    """ANOVA across all algorithms plus paired t and Wilcoxon tests for
    every unordered pair.  ``costs`` must be aligned by trial."""
    labels = list(costs)
    rows: list[StatRow] = []
    if len(labels) < 2 or len(next(iter(costs.values()))) < 2:
        return rows
    res = stats.one_way_anova([costs[l] for l in labels])
    rows.append(StatRow("anova", "all", "", res.statistic, res.p_value, res.degenerate))
    for i, a in enumerate(labels):
        for b in labels[i + 1 :]:
            t = stats.paired_t_test(costs[a], costs[b])
            rows.append(StatRow("paired_t", a, b, t.statistic, t.p_value, t.degenerate))
            w = stats.wilcoxon_signed_rank(costs[a], costs[b])
            rows.append(StatRow("wilcoxon", a, b, w.statistic, w.p_value, w.degenerate))
    return rows


def report_statistics(report: BenchReport) -> list[StatRow]:
    return compute_statistics({c.label: report.costs(c.label) for c in report.configs})


# -- rendering ----------------------------------------------------------------


def _num(x: float | None) -> str:
    if x is None or (isinstance(x, float) and math.isnan(x)):
        return ""
    return repr(float(x))


def _fmt(x: float | None, digits: int) -> str:
    if x is None or (isinstance(x, float) and math.isnan(x)):
        return "-"
    return f"{x:.{digits}f}"


def render_report(
    report: BenchReport,
    out_dir,
    breakdown: bool = True,
    stat_rows: list[StatRow] | None = None,
) -> dict[str, Path]:
    """Write ``report.csv``, ``report.md``, ``trials.csv`` and, when
    ``stat_rows`` is given, ``stats.csv`` under ``out_dir``."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    regimes = list(report.summaries[0].regime_costs) if (breakdown and report.summaries) else []
    units = report.cost_model.units

    paths = {"report": out / "report.csv", "markdown": out / "report.md", "trials": out / "trials.csv"}
    with open(paths["report"], "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(REPORT_HEADER + [f"cost_{r}" for r in regimes])
        for s in report.summaries:
            writer.writerow(
                [
                    s.approach,
                    s.label,
                    _num(s.preprocessing_min),
                    _num(s.avg_runtime_s),
                    _num(s.avg_cost),
                    _num(s.avg_expanded),
                    _num(s.avg_length_km),
                    _num(s.avg_eta_min),
                    s.solved,
                    s.unsolved,
                ]
                + [_num(s.regime_costs[r]) for r in regimes]
            )

    head = [
        "Approach",
        "Algorithm",
        "Preprocessing (min)",
        "Avg runtime (s)",
        f"Avg cost ({units})",
        "Avg # expanded",
        "Avg length (km)",
        "Avg ETA (min)",
        "Solved",
        "Unsolved",
    ] + [f"Cost: {r} ({units})" for r in regimes]
    body = [
        [
            s.approach,
            s.display_name,
            _fmt(s.preprocessing_min, 4),
            _fmt(s.avg_runtime_s, 6),
            _fmt(s.avg_cost, 3),
            _fmt(s.avg_expanded, 1),
            _fmt(s.avg_length_km, 3),
            _fmt(s.avg_eta_min, 3),
            str(s.solved),
            str(s.unsolved),
        ]
        + [_fmt(s.regime_costs[r], 3) for r in regimes]
        for s in report.summaries
    ]
    widths = [max(len(row[i]) for row in [head] + body) for i in range(len(head))]
    lines = ["| " + " | ".join(c.ljust(w) for c, w in zip(row, widths)) + " |" for row in [head] + body]
    lines.insert(1, "|" + "|".join("-" * (w + 2) for w in widths) + "|")
    paths["markdown"].write_text("\n".join(lines) + "\n", encoding="utf-8")

    common = set(report.common_solvable)
    with open(paths["trials"], "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(TRIALS_HEADER)
        for r in sorted(report.records, key=lambda r: (r.trial_id, _label_order(report, r.algorithm))):
            if r.trial_id not in common:
                continue
            writer.writerow(
                [
                    r.trial_id,
                    r.algorithm,
                    r.regime,
                    _num(r.cost),
                    _num(r.length_km),
                    _num(r.eta_min),
                    _num(r.runtime_s),
                    "" if r.expanded is None else r.expanded,
                ]
            )

    if stat_rows is not None:
        paths["stats"] = write_stats(stat_rows, out / "stats.csv")
    return paths


def _label_order(report: BenchReport, label: str) -> int:
    return [c.label for c in report.configs].index(label)


def write_stats(rows: Iterable[StatRow], path) -> Path:
    path = Path(path)
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(STATS_HEADER)
        for r in rows:
            writer.writerow([r.test, r.algo_a, r.algo_b, _num(r.statistic), _num(r.p_value), int(r.degenerate)])
    return path


def read_trial_costs(path) -> dict[str, list[float]]:
    """Per-algorithm cost lists from a ``trials.csv``, aligned by trial id
    (only trials present for every algorithm are kept)."""
    table: dict[str, dict[int, float]] = {}
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames != TRIALS_HEADER:
            raise ConfigError(f"{path}: header must be {','.join(TRIALS_HEADER)}")
        for row in reader:
            table.setdefault(row["algorithm"], {})[int(row["trial_id"])] = float(row["cost"])
    if not table:
        return {}
    common = sorted(set.intersection(*(set(v) for v in table.values())))
    return {label: [v[t] for t in common] for label, v in table.items()}
