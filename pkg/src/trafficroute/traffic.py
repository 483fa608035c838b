"""Traffic scenarios, edge-cost models and path metrics."""

from __future__ import annotations

import csv
import enum
from dataclasses import dataclass
from fractions import Fraction
from pathlib import Path
from typing import Mapping, Sequence

import numpy as np

from . import rng
from .errors import InvalidPathError, RoutingError
from .graph import EdgeKey, ResolvedView, RoadEdge, RoadGraph

TRAFFIC_LEVELS = (1, 3, 5)
SCENARIO_HEADER = ["u", "v", "key", "weight"]


@dataclass(frozen=True)
class TrafficRegime:
    name: str
    probabilities: tuple[Fraction, Fraction, Fraction]

    def __post_init__(self):
        if sum(self.probabilities) != 1 or any(p < 0 for p in self.probabilities):
            raise ValueError(f"regime {self.name!r} probabilities must be >= 0 and sum to 1")
        # thresholds are compared as r * den < num * 2**53 in uint64
        if any(p.denominator >= 2048 for p in self.probabilities):
            raise ValueError("regime probabilities need denominators below 2048")


REGIMES: dict[str, TrafficRegime] = {
    r.name: r
    for r in (
        TrafficRegime("none", (Fraction(1), Fraction(0), Fraction(0))),
        TrafficRegime("light", (Fraction(7, 10), Fraction(2, 10), Fraction(1, 10))),
        TrafficRegime("moderate", (Fraction(1, 3), Fraction(1, 3), Fraction(1, 3))),
        TrafficRegime("heavy", (Fraction(2, 10), Fraction(3, 10), Fraction(5, 10))),
    )
}
REGIME_ORDER = ("none", "light", "moderate", "heavy")


def get_regime(name: str | TrafficRegime) -> TrafficRegime:
    if isinstance(name, TrafficRegime):
        return name
    try:
        return REGIMES[name]
    except KeyError:
        raise ValueError(f"unknown traffic regime {name!r}") from None


class CostModel(str, enum.Enum):
    """V1: traffic-weighted distance (km).  V2: traffic-weighted travel time
    at the speed limit (minutes)."""

    V1 = "v1"
    V2 = "v2"

    @property
    def units(self) -> str:
        return "km" if self is CostModel.V1 else "min"


def edge_cost(model: CostModel | str, w: float, length_m: float, speed_kmh: float | None) -> float:
    model = CostModel(model)
    if not length_m > 0:
        raise ValueError(f"edge length must be positive, got {length_m}")
    if model is CostModel.V1:
        return w * length_m / 1000.0
    if speed_kmh is None or not speed_kmh > 0:
        raise ValueError(f"edge speed must be positive, got {speed_kmh}")
    return 60.0 * w * (length_m / 1000.0) / speed_kmh


@dataclass(frozen=True, eq=False)
class TrafficScenario:
    regime: TrafficRegime
    seed: int
    weights: Mapping[EdgeKey, int]

    def weight(self, edge: RoadEdge) -> int:
        return self.weights[edge.ident]

    def __eq__(self, other):
        if not isinstance(other, TrafficScenario):
            return NotImplemented
        return (
            self.regime == other.regime
            and self.seed == other.seed
            and dict(self.weights) == dict(other.weights)
        )

    def cost_fn(self, model: CostModel | str):
        model = CostModel(model)
        weights = self.weights

        def cost(e: RoadEdge) -> float:
            return edge_cost(model, weights[e.ident], e.length_m, e.speed_kmh)

        return cost


def draw_weights(regime: TrafficRegime, seed: int, n: int) -> np.ndarray:
    """Traffic levels for stream positions ``0..n-1`` as an int array."""
    r = rng.counter_bits53(seed, np.arange(n, dtype=np.uint64))
    scale = 1 << rng.UNIFORM_BITS
    out = np.full(n, TRAFFIC_LEVELS[-1], dtype=np.int64)
    cumulative = Fraction(0)
    # assign from the top class down so lower thresholds overwrite
    thresholds = []
    for level, p in zip(TRAFFIC_LEVELS, regime.probabilities):
        cumulative += p
        thresholds.append((level, cumulative))
    for level, cum in reversed(thresholds[:-1]):
        below = r * np.uint64(cum.denominator) < np.uint64(cum.numerator * scale)
        out[below] = level
    return out


def sample_scenario(graph: RoadGraph, regime: TrafficRegime | str, seed: int) -> TrafficScenario:
    """Independent per-edge draw; edge ``i`` in canonical order uses stream
    position ``i`` of ``seed``."""
    regime = get_regime(regime)
    levels = draw_weights(regime, seed, len(graph.edges)).tolist()
    weights = {e.ident: w for e, w in zip(graph.edges, levels)}
    return TrafficScenario(regime, seed, weights)


def uniform_scenario(graph: RoadGraph) -> TrafficScenario:
    return TrafficScenario(REGIMES["none"], 0, {e.ident: 1 for e in graph.edges})


def write_scenario(scenario: TrafficScenario, path):
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(SCENARIO_HEADER)
        for (u, v, key), w in sorted(scenario.weights.items()):
            writer.writerow([u, v, key, w])


def read_scenario(path, graph: RoadGraph, regime: str = "none") -> TrafficScenario:
    weights: dict[EdgeKey, int] = {}
    with open(Path(path), newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header != SCENARIO_HEADER:
            raise RoutingError(f"scenario header must be {','.join(SCENARIO_HEADER)}")
        for row in reader:
            if not row:
                continue
            u, v, key, w = (int(x) for x in row)
            if w not in TRAFFIC_LEVELS:
                raise RoutingError(f"line {reader.line_num}: traffic weight {w} not in {TRAFFIC_LEVELS}")
            weights[(u, v, key)] = w
    missing = [e.ident for e in graph.edges if e.ident not in weights]
    if missing:
        raise RoutingError(f"scenario lacks weights for {len(missing)} edges, e.g. {missing[0]}")
    return TrafficScenario(get_regime(regime), 0, weights)


@dataclass(frozen=True)
class PathMetrics:
    length_km: float
    cost_v1_km: float
    eta_min: float

    def cost(self, model: CostModel | str) -> float:
        return self.cost_v1_km if CostModel(model) is CostModel.V1 else self.eta_min


def path_metrics(path: Sequence[int], view: ResolvedView, scenario: TrafficScenario) -> PathMetrics:
    length = cost = eta = 0.0
    for u, v in zip(path, path[1:]):
        try:
            e = view.chosen[(u, v)]
        except KeyError:
            raise InvalidPathError(f"no edge {u}->{v} in view") from None
        w = scenario.weights[e.ident]
        length += e.length_m / 1000.0
        cost += edge_cost(CostModel.V1, w, e.length_m, e.speed_kmh)
        eta += edge_cost(CostModel.V2, w, e.length_m, e.speed_kmh)
    return PathMetrics(length, cost, eta)
