import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from trafficroute import rng
from trafficroute.errors import InvalidPathError
from trafficroute.graph import GeoPoint, RoadEdge, RoadGraph, distance_view
from trafficroute.synth import generate_synthetic_city
from trafficroute.traffic import (
    REGIMES,
    CostModel,
    TrafficScenario,
    draw_weights,
    edge_cost,
    path_metrics,
    read_scenario,
    sample_scenario,
    write_scenario,
)

from builders import scenario_with


@pytest.mark.parametrize(
    "model, w, length, speed, expected",
    [
        ("v1", 1, 2000, None, 2.0),
        ("v1", 5, 2000, None, 10.0),
        ("v2", 3, 2000, 80, 4.5),
    ],
)
def test_edge_cost(model, w, length, speed, expected):
    assert edge_cost(model, w, length, speed) == pytest.approx(expected, rel=1e-15)


@pytest.mark.parametrize("length, speed", [(0, 50), (-1, 50), (100, 0), (100, -3)])
def test_edge_cost_domain(length, speed):
    with pytest.raises(ValueError):
        edge_cost(CostModel.V2, 1, length, speed)


def test_units():
    assert CostModel.V1.units == "km"
    assert CostModel.V2.units == "min"


def test_regime_tables():
    probs = {name: tuple(float(p) for p in r.probabilities) for name, r in REGIMES.items()}
    assert probs["none"] == (1.0, 0.0, 0.0)
    assert probs["light"] == (0.7, 0.2, 0.1)
    assert probs["moderate"] == pytest.approx((1 / 3, 1 / 3, 1 / 3))
    assert probs["heavy"] == (0.2, 0.3, 0.5)
    assert all(sum(r.probabilities) == 1 for r in REGIMES.values())


def test_no_traffic_is_all_ones():
    g = generate_synthetic_city(6, 6, seed=4)
    for seed in (0, 1, 12345):
        assert set(sample_scenario(g, "none", seed).weights.values()) == {1}


def test_scenario_deterministic():
    g = generate_synthetic_city(6, 6, seed=4)
    a = sample_scenario(g, "heavy", 99)
    b = sample_scenario(g, "heavy", 99)
    assert a == b
    assert list(a.weights.items()) == list(b.weights.items())
    assert a != sample_scenario(g, "heavy", 100)


def test_every_edge_weighted():
    g = generate_synthetic_city(5, 5, seed=4)
    s = sample_scenario(g, "moderate", 3)
    assert set(s.weights) == {e.ident for e in g.edges}
    assert set(s.weights.values()) <= {1, 3, 5}


def test_streams_are_counter_based():
    # draw i depends only on (seed, i): a prefix of a longer stream matches
    long = draw_weights(REGIMES["moderate"], 5, 1000)
    short = draw_weights(REGIMES["moderate"], 5, 10)
    assert (long[:10] == short).all()


def _big_graph(n_edges: int) -> RoadGraph:
    n_nodes = 1000
    nodes = {i: GeoPoint(44.0 + i * 1e-5, -76.0) for i in range(n_nodes)}
    edges = [
        RoadEdge(i % n_nodes, (i // n_nodes + 1 + i % n_nodes) % n_nodes, i // (n_nodes * n_nodes), 10.0, ("residential",))
        for i in range(n_edges)
    ]
    return RoadGraph.build(nodes, edges)


def test_light_frequencies_on_100k_edges():
    g = _big_graph(100_000)
    weights = np.array(list(sample_scenario(g, "light", 7).weights.values()))
    freq = [float(np.mean(weights == w)) for w in (1, 3, 5)]
    for got, want in zip(freq, (0.7, 0.2, 0.1)):
        assert abs(got - want) <= 0.01


@pytest.mark.parametrize("name", ["light", "moderate", "heavy"])
@pytest.mark.parametrize("seed", [0, 1, 2])
def test_frequency_convergence_bound(name, seed):
    n = 50_000
    levels = draw_weights(REGIMES[name], seed, n)
    for w, p in zip((1, 3, 5), REGIMES[name].probabilities):
        p = float(p)
        emp = float(np.mean(levels == w))
        assert abs(emp - p) <= 4 * math.sqrt(p * (1 - p) / n)


def test_path_metrics_examples():
    nodes = {0: GeoPoint(44.0, -76.0), 1: GeoPoint(44.01, -76.0), 2: GeoPoint(44.03, -76.0)}
    g = RoadGraph.build(
        nodes,
        [RoadEdge(0, 1, 0, 1000.0, ("residential",), (), 50.0), RoadEdge(1, 2, 0, 2000.0, ("motorway",), (), 100.0)],
    )
    view = distance_view(g)
    s = scenario_with(g, {(1, 2, 0): 3})
    m = path_metrics([0, 1, 2], view, s)
    assert m.length_km == pytest.approx(3.0, rel=1e-12)
    assert m.cost_v1_km == pytest.approx(7.0, rel=1e-12)
    assert m.eta_min == pytest.approx(1.2 + 3.6, rel=1e-12)
    assert path_metrics([0], view, s) == type(m)(0.0, 0.0, 0.0)
    with pytest.raises(InvalidPathError):
        path_metrics([0, 2], view, s)


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 2**32), st.sampled_from(["light", "moderate", "heavy"]))
def test_cost_at_least_length(seed, regime):
    g = generate_synthetic_city(4, 4, seed=1).normalized()
    view = distance_view(g)
    s = sample_scenario(g, regime, seed)
    path = [0, 1, 2, 3, 7, 11, 15]
    path = [u for u in path]
    ok = all(view.has_edge(u, v) for u, v in zip(path, path[1:]))
    if not ok:
        return
    m = path_metrics(path, view, s)
    assert m.cost_v1_km >= m.length_km
    on_path = [s.weights[view.edge(u, v).ident] for u, v in zip(path, path[1:])]
    assert (m.cost_v1_km == m.length_km) == all(w == 1 for w in on_path)


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 2**32), st.integers(0, 5))
def test_metrics_monotone_in_one_weight(seed, pick):
    g = generate_synthetic_city(3, 3, seed=2).normalized()
    view = distance_view(g)
    path = None
    for cand in ([0, 1, 2, 5, 8], [0, 3, 6, 7, 8], [0, 1, 4, 7, 8], [0, 3, 4, 5, 8]):
        if all(view.has_edge(u, v) for u, v in zip(cand, cand[1:])):
            path = cand
            break
    assert path is not None
    s = sample_scenario(g, "moderate", seed)
    edges = [view.edge(u, v).ident for u, v in zip(path, path[1:])]
    target = edges[pick % len(edges)]
    base = path_metrics(path, view, s)
    for w in (1, 3, 5):
        if w < s.weights[target]:
            continue
        bumped = TrafficScenario(s.regime, s.seed, {**s.weights, target: w})
        m = path_metrics(path, view, bumped)
        assert m.cost_v1_km >= base.cost_v1_km
        assert m.eta_min >= base.eta_min


def test_scenario_file_round_trip(tmp_path):
    g = generate_synthetic_city(4, 4, seed=3)
    s = sample_scenario(g, "heavy", 8)
    write_scenario(s, tmp_path / "scenario.csv")
    text = (tmp_path / "scenario.csv").read_text()
    assert text.startswith("u,v,key,weight\n")
    again = read_scenario(tmp_path / "scenario.csv", g, "heavy")
    assert dict(again.weights) == dict(s.weights)


def test_rng_sequential_matches_counter():
    gen = rng.SplitMix64(42)
    seq = [gen.next_u64() for _ in range(5)]
    assert seq == [int(x) for x in rng.counter_u64(42, np.arange(5))]


def test_rng_sample_distinct():
    gen = rng.SplitMix64(1)
    s = gen.sample(list(range(50)), 50)
    assert sorted(s) == list(range(50))
