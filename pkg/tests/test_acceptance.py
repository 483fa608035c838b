"""Acceptance suite: one test per criterion, each tagged with
``@pytest.mark.criterion``; the terminal summary prints a PASS/FAIL line
per criterion."""

import csv
import heapq
import io
import math
import random
import time

import numpy as np
import pytest

from trafficroute import stats
from trafficroute.apsp import INF, floyd_warshall, reconstruct_path
from trafficroute.bench import (
    TIMING_COLUMNS,
    AlgorithmConfig,
    generate_trials,
    standard_configs,
    run_benchmark,
)
from trafficroute.cli import run_bench
from trafficroute.config import RunConfig
from trafficroute.graph import GeoPoint, RoadEdge, RoadGraph, distance_view, resolve_parallel, save_graph
from trafficroute.ksp import yen_k_shortest
from trafficroute.search import dijkstra
from trafficroute.synth import generate_synthetic_city
from trafficroute.traffic import REGIMES, path_metrics, sample_scenario, uniform_scenario

from builders import graph_from_lengths, path_sum, simple_paths

REL = 1e-9

# 25 cities of 14 x 14 = 196 vertices, 20 trials each
CORPUS_SEEDS = range(25)
# city 2, trial 0 of the corpus: A* with the mean-speed divisor returns a
# costlier V2 route than Dijkstra (0.40213... vs 0.38949... min)
AVG_DIVISOR_CITY, AVG_DIVISOR_TRIAL = 2, 0
# 20 x 20 city seed 0, trials seed 0: heavy trial 150 shows the FW length/cost inversion
INVERSION_TRIAL = 150


def _corpus():
    for cs in CORPUS_SEEDS:
        g = generate_synthetic_city(14, 14, cs).normalized()
        yield cs, g, generate_trials(g, 20, cs)


SINGLE_QUERY = [
    AlgorithmConfig("dijkstra", "single_query"),
    AlgorithmConfig("astar_euclidean", "single_query", "euclidean"),
    AlgorithmConfig("astar_great_circle", "single_query", "great_circle"),
]


@pytest.fixture(scope="module")
def city20():
    return generate_synthetic_city(20, 20, 0).normalized()


@pytest.fixture(scope="module")
def full_report(city20):
    trials = generate_trials(city20, 200, 0)
    start = time.perf_counter()
    report = run_benchmark(city20, standard_configs(), trials)
    return report, time.perf_counter() - start


def _by_trial(report, label):
    return {r.trial_id: r for r in report.records if r.algorithm == label}


@pytest.mark.criterion(1, "Dijkstra and admissible A* agree on optimal cost")
def test_c01_optimal_cost_agreement():
    start = time.perf_counter()
    checked = 0
    for _, g, trials in _corpus():
        assert g.node_count <= 200
        report = run_benchmark(g, SINGLE_QUERY, trials)
        opt = report.costs("dijkstra")
        assert len(opt) == 20
        for label in ("astar_euclidean", "astar_great_circle"):
            assert report.costs(label) == pytest.approx(opt, rel=REL)
        checked += len(opt)
    assert checked == 500
    assert time.perf_counter() - start < 60


def _single_source(adj, src):
    # plain textbook Dijkstra used as an independent oracle
    dist = {src: 0.0}
    heap = [(0.0, src)]
    done = set()
    while heap:
        d, u = heapq.heappop(heap)
        if u in done:
            continue
        done.add(u)
        for v, c in adj.get(u, ()):
            if d + c < dist.get(v, math.inf):
                dist[v] = d + c
                heapq.heappush(heap, (d + c, v))
    return dist


@pytest.mark.criterion(2, "Floyd-Warshall matches per-pair Dijkstra")
def test_c02_fw_oracle():
    start = time.perf_counter()
    g = generate_synthetic_city(10, 20, 4, removal_prob=0.02).normalized()
    assert g.node_count == 200
    view = distance_view(g)
    tables = floyd_warshall(view)
    adj = view.weighted(lambda e: e.length_m / 1000.0)
    ones = uniform_scenario(g)
    for src in g.nodes:
        oracle = _single_source(adj, src)
        for dst in g.nodes:
            got = tables.distance(src, dst)
            if dst not in oracle:
                assert got == INF
                continue
            assert got == pytest.approx(oracle[dst], rel=REL, abs=0.0)
            path = reconstruct_path(tables, src, dst)
            assert path_metrics(path, view, ones).length_km == pytest.approx(got, rel=REL, abs=0.0)
    assert time.perf_counter() - start < 120


def _random_graph(seed):
    r = random.Random(seed)
    n = r.randint(2, 12)
    density = r.uniform(0.1, 0.35)
    edges = [
        (u, v, r.randint(1, 9))
        for u in range(n)
        for v in range(n)
        if u != v and r.random() < density
    ]
    return graph_from_lengths(edges, n_nodes=n), n, r


@pytest.mark.criterion(3, "Yen top-5 equals exhaustive simple-path enumeration")
def test_c03_yen_oracle():
    start = time.perf_counter()
    compared = 0
    seed = 0
    while compared < 200:
        g, n, r = _random_graph(seed)
        seed += 1
        view = distance_view(g)
        src, dst = r.randrange(n), r.randrange(n)
        cost = lambda u, v: view.edge(u, v).length_m
        ranked = sorted((path_sum(p, cost), p) for p in simple_paths(view.succ, src, dst))
        if not ranked:
            continue  # only graphs with at least one src -> dst path count
        got = yen_k_shortest(view, src, dst, 5)
        assert [p for p, _ in got.paths] == [p for _, p in ranked[:5]]
        assert [d for _, d in got.paths] == pytest.approx([c / 1000 for c, _ in ranked[:5]], rel=REL)
        compared += 1
    assert time.perf_counter() - start < 120


@pytest.mark.criterion(4, "Dijkstra <= Yen(K=5) <= FW lookup per trial and on average")
def test_c04_cost_sandwich(full_report):
    report, elapsed = full_report
    assert len(report.common_solvable) == 200
    d, y, f = (_by_trial(report, lab) for lab in ("dijkstra", "yen_k5", "fw"))
    for t in report.common_solvable:
        assert d[t].cost <= y[t].cost * (1 + 1e-12)
        assert y[t].cost <= f[t].cost * (1 + 1e-12)
    avg = {lab: report.summary(lab).avg_cost for lab in ("dijkstra", "yen_k5", "fw")}
    assert avg["dijkstra"] <= avg["yen_k5"] <= avg["fw"]
    assert elapsed < 300


@pytest.mark.criterion(5, "inflated A* cost within [optimal, alpha x optimal]")
def test_c05_inflated_bound(full_report):
    report, _ = full_report
    opt = _by_trial(report, "dijkstra")
    for kind in ("euclidean", "great_circle"):
        for alpha in (10, 100):
            got = _by_trial(report, f"astar_{kind}_a{alpha}")
            for t in report.common_solvable:
                assert opt[t].cost * (1 - 1e-12) <= got[t].cost <= alpha * opt[t].cost


@pytest.mark.criterion(6, "FW route shorter but costlier than Dijkstra on a heavy trial")
def test_c06_length_cost_inversion(full_report):
    report, _ = full_report
    trial = report.trials[INVERSION_TRIAL]
    assert trial.regime == "heavy"
    fw = _by_trial(report, "fw")[INVERSION_TRIAL]
    dj = _by_trial(report, "dijkstra")[INVERSION_TRIAL]
    assert fw.length_km < dj.length_km
    assert fw.cost > dj.cost


@pytest.mark.criterion(7, "optimal cost under traffic >= optimal cost with all-ones weights")
def test_c07_regime_monotonicity(city20, full_report):
    report, _ = full_report
    dview = distance_view(city20)
    ones_v2 = uniform_scenario(city20).cost_fn("v2")
    base_adj = {
        "v1": dview.weighted(lambda e: e.length_m / 1000.0),
        "v2": resolve_parallel(city20, ones_v2).weighted(ones_v2),
    }
    opt = _by_trial(report, "dijkstra")
    for trial in report.trials:
        base = dijkstra(base_adj["v1"], trial.src, trial.dst).cost
        assert opt[trial.trial_id].cost >= base
        # same check under V2 travel-time costs
        s = sample_scenario(city20, trial.regime, trial.scenario_seed)
        adj = resolve_parallel(city20, s.cost_fn("v2")).weighted(s.cost_fn("v2"))
        assert dijkstra(adj, trial.src, trial.dst).cost >= dijkstra(base_adj["v2"], trial.src, trial.dst).cost


def _graph_with_edges(n_edges):
    n_nodes = 1000
    nodes = {i: GeoPoint(44.0 + i * 1e-5, -76.0) for i in range(n_nodes)}
    edges = [
        RoadEdge(i % n_nodes, (i // n_nodes + 1 + i % n_nodes) % n_nodes, 0, 10.0, ("residential",))
        for i in range(n_edges)
    ]
    return RoadGraph.build(nodes, edges)


@pytest.mark.criterion(8, "traffic sampler frequencies within 0.01 on 1e5 edges")
def test_c08_sampler_distribution():
    g = _graph_with_edges(100_000)
    assert len(g.edges) == 100_000
    for name in ("light", "moderate", "heavy"):
        w = np.fromiter(sample_scenario(g, name, 2024).weights.values(), dtype=np.int64)
        for level, p in zip((1, 3, 5), REGIMES[name].probabilities):
            assert abs(float(np.mean(w == level)) - float(p)) <= 0.01
    none = sample_scenario(g, "none", 2024).weights.values()
    assert all(w == 1 for w in none)


@pytest.mark.criterion(9, "statistics match exact and reference values")
def test_c09_statistics():
    w = stats.wilcoxon_signed_rank([1, 2, 3, 4, 5], [0, 0, 0, 0, 0])
    assert w.p_value == 0.0625
    a = [3.2, 4.1, 2.9, 5.0, 3.8, 4.4]
    b = [4.0, 4.9, 3.1, 5.5, 4.6, 5.2, 4.8]
    f = stats.one_way_anova([a, b]).statistic
    t = stats.unpaired_t_test(a, b).statistic
    assert f == pytest.approx(t * t, rel=REL)
    # frozen values from an independent statistics library
    x = [2.1, 3.4, 1.9, 4.0, 2.8]
    y = [v - 0.5 + e for v, e in zip(x, [0.03, -0.02, 0.05, -0.04, 0.01])]
    pt = stats.paired_t_test(x, y)
    assert pt.statistic == pytest.approx(30.289083370557293, rel=1e-3)
    assert pt.p_value == pytest.approx(7.077134023300951e-06, rel=1e-3)
    u = [math.sin(1.7 * i) * 2 + math.cos(0.3 * i) for i in range(100)]
    v = [s + 0.15 + 0.5 * math.cos(3.1 * i + 0.2) for i, s in enumerate(u)]
    wl = stats.wilcoxon_signed_rank(u, v)
    assert wl.statistic == 1428.0
    assert wl.p_value == pytest.approx(0.00016316698614999805, rel=1e-3)


@pytest.mark.criterion(10, "V2 max-speed divisor keeps A* optimal; mean-speed divisor can lose")
def test_c10_v2_divisor():
    worse = []
    avg_configs = [
        AlgorithmConfig("dijkstra", "single_query"),
        AlgorithmConfig("astar_euclidean", "single_query", "euclidean", divisor="avg_speed"),
        AlgorithmConfig("astar_great_circle", "single_query", "great_circle", divisor="avg_speed"),
    ]
    for cs, g, trials in _corpus():
        admissible = run_benchmark(g, SINGLE_QUERY, trials, "v2")
        opt = admissible.costs("dijkstra")
        for label in ("astar_euclidean", "astar_great_circle"):
            assert admissible.costs(label) == pytest.approx(opt, rel=REL)
        compat = run_benchmark(g, avg_configs, trials, "v2")
        for label in ("astar_euclidean", "astar_great_circle"):
            for t, c, o in zip(compat.common_solvable, compat.costs(label), opt):
                assert c >= o * (1 - 1e-12)
                if c > o * (1 + REL):
                    worse.append((cs, t, label))
    assert (AVG_DIVISOR_CITY, AVG_DIVISOR_TRIAL, "astar_euclidean") in worse
    assert (AVG_DIVISOR_CITY, AVG_DIVISOR_TRIAL, "astar_great_circle") in worse


def _strip_timing_csv(path):
    with open(path, newline="", encoding="utf-8") as fh:
        rows = list(csv.reader(fh))
    keep = [i for i, name in enumerate(rows[0]) if name not in TIMING_COLUMNS]
    out = io.StringIO()
    csv.writer(out, lineterminator="\n").writerows([[r[i] for i in keep] for r in rows])
    return out.getvalue().encode()


def _strip_timing_md(path):
    rows = [[c.strip() for c in line.strip("|").split("|")] for line in path.read_text().splitlines()]
    drop = {i for i, c in enumerate(rows[0]) if c.startswith(("Preprocessing", "Avg runtime"))}
    return [[c for i, c in enumerate(r) if i not in drop] for r in rows if not set(r[0]) <= {"-"}]


@pytest.mark.criterion(11, "bench reruns are identical apart from timings; 9 configs x 200 trials < 10 min")
def test_c11_reproducibility(tmp_path, city20):
    save_graph(city20, tmp_path / "nodes.csv", tmp_path / "edges.csv")
    cfg = RunConfig(
        nodes=str(tmp_path / "nodes.csv"),
        edges=str(tmp_path / "edges.csv"),
        artifact_dir=str(tmp_path / "artifacts"),
        output_dir=str(tmp_path / "out"),
        trials=200,
        seed=0,
    )
    cfg.save(tmp_path / "run.cfg")
    cfg = RunConfig.load(tmp_path / "run.cfg")

    def snapshot():
        out = tmp_path / "out"
        return {
            "report.csv": _strip_timing_csv(out / "report.csv"),
            "trials.csv": _strip_timing_csv(out / "trials.csv"),
            "report.md": _strip_timing_md(out / "report.md"),
            **{name: (out / name).read_bytes() for name in ("stats.csv", "manifest.json", "run.cfg")},
        }

    start = time.perf_counter()
    run_bench(cfg)
    elapsed = time.perf_counter() - start
    first = snapshot()
    # second run starts from a clean artifact directory as well
    for p in (tmp_path / "artifacts").iterdir():
        p.unlink()
    run_bench(cfg)
    second = snapshot()
    assert first == second
    with open(tmp_path / "out" / "report.csv", newline="") as fh:
        assert len(list(csv.DictReader(fh))) == 9
    assert elapsed < 600


@pytest.mark.criterion(12, "unreachable trials are excluded from averages and counted as unsolved")
def test_c12_unsolvable(city_with_holes):
    trials = generate_trials(city_with_holes, 200, 0)
    report = run_benchmark(city_with_holes, standard_configs(), trials)
    unsolved = {r.trial_id for r in report.records if not r.solved}
    assert unsolved == {26, 75}
    assert not unsolved & set(report.common_solvable)
    for s in report.summaries:
        assert s.unsolved == 2 and s.solved == 198
        costs = [r.cost for r in report.records if r.algorithm == s.label and r.trial_id not in unsolved]
        assert s.avg_cost == pytest.approx(sum(costs) / len(costs), rel=1e-12)
        assert all(math.isfinite(c) for c in costs)
