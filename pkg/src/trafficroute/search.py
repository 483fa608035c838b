"""Single-query search: Dijkstra, A* and inflated (weighted) A*."""

from __future__ import annotations

import heapq
import time
from dataclasses import dataclass, field
from typing import Callable, Mapping, Sequence

import numpy as np

from . import geo
from .errors import NoPath
from .graph import ResolvedView, RoadGraph
from .traffic import CostModel

HEURISTIC_KINDS = ("zero", "euclidean", "great_circle")
DIVISOR_MODES = ("max_speed", "avg_speed")

Adjacency = Mapping[int, Sequence[tuple[int, float]]]


@dataclass(frozen=True)
class RouteResult:
    path: tuple[int, ...]
    cost: float
    expanded: int | None = None
    runtime_s: float = 0.0
    length_km: float | None = None
    eta_min: float | None = None


@dataclass(frozen=True)
class Heuristic:
    kind: str = "zero"
    alpha: float = 1.0
    divisor: str = "max_speed"

    def __post_init__(self):
        if self.kind not in HEURISTIC_KINDS:
            raise ValueError(f"unknown heuristic {self.kind!r}")
        if not self.alpha >= 1.0:
            raise ValueError(f"inflation must be >= 1, got {self.alpha}")
        if self.divisor not in DIVISOR_MODES:
            raise ValueError(f"unknown divisor mode {self.divisor!r}")


@dataclass(frozen=True, eq=False)
class HeuristicTable:
    """All-pairs straight-line distances in meters, indexed densely."""

    kind: str
    node_ids: tuple[int, ...]
    values: np.ndarray = field(repr=False)
    build_time_s: float = 0.0

    def __post_init__(self):
        object.__setattr__(self, "_index", {nid: i for i, nid in enumerate(self.node_ids)})

    @property
    def index(self) -> dict[int, int]:
        return self._index

    def value(self, a: int, b: int) -> float:
        return float(self.values[self._index[a], self._index[b]])

    def column(self, goal: int, scale: float) -> dict[int, float]:
        """``vertex -> scale * distance(vertex, goal)``."""
        col = (self.values[:, self._index[goal]] * scale).tolist()
        return dict(zip(self.node_ids, col))


def build_heuristic_table(graph: RoadGraph, kind: str) -> HeuristicTable:
    if kind not in ("euclidean", "great_circle"):
        raise ValueError(f"no table for heuristic kind {kind!r}")
    start = time.perf_counter()
    ids = tuple(graph.nodes)
    lat = np.fromiter((graph.nodes[i].lat for i in ids), dtype=np.float64, count=len(ids))
    lon = np.fromiter((graph.nodes[i].lon for i in ids), dtype=np.float64, count=len(ids))
    values = geo.pairwise(lat, lon, kind)
    return HeuristicTable(kind, ids, values, time.perf_counter() - start)


def heuristic_scale(model: CostModel | str, heuristic: Heuristic, graph: RoadGraph) -> float:
    """Factor converting table meters into cost units.

    V1 costs are km.  V2 costs are minutes, so the distance is divided by a
    speed: the graph-wide maximum keeps the bound admissible, the mean
    reproduces the inadmissible variant.
    """
    if CostModel(model) is CostModel.V1:
        return 1.0 / 1000.0
    max_speed, avg_speed = graph.speed_bounds()
    speed = max_speed if heuristic.divisor == "max_speed" else avg_speed
    return 60.0 / (1000.0 * speed)


def _search(
    adj: Adjacency,
    src: int,
    dst: int,
    h: Callable[[int], float] | Mapping[int, float] | None,
    alpha: float,
) -> RouteResult:
    """Best-first search on ``f = g + alpha * h``.

    The frontier is ordered by ``(f, -g, vertex)``.  Stale heap entries are
    skipped; a vertex whose ``g`` improves after expansion is pushed again
    and may be re-expanded.
    """
    if h is None:
        hv = None
    elif callable(h):
        hv = h
    else:
        hv = h.__getitem__
    g = {src: 0.0}
    parent: dict[int, int] = {}
    h0 = 0.0 if hv is None else alpha * hv(src)
    frontier = [(h0, -0.0, src)]
    expanded = 0
    push, pop = heapq.heappush, heapq.heappop
    while frontier:
        _, neg_g, u = pop(frontier)
        gu = -neg_g
        if gu > g[u]:
            continue
        expanded += 1
        if u == dst:
            path = [u]
            while u != src:
                u = parent[u]
                path.append(u)
            path.reverse()
            return RouteResult(tuple(path), gu, expanded)
        for v, c in adj.get(u, ()):
            gv = gu + c
            old = g.get(v)
            if old is None or gv < old:
                g[v] = gv
                parent[v] = u
                f = gv if hv is None else gv + alpha * hv(v)
                push(frontier, (f, -gv, v))
    raise NoPath(src, dst)


def dijkstra(adj: Adjacency, src: int, dst: int) -> RouteResult:
    """Cost-minimal route; stops as soon as ``dst`` is settled.

    ``adj`` maps each vertex to ``(successor, cost)`` pairs with positive
    costs.  ``expanded`` counts settled vertices, including ``dst``.
    """
    start = time.perf_counter()
    result = _search(adj, src, dst, None, 1.0)
    return _timed(result, start)


def a_star(
    adj: Adjacency,
    src: int,
    dst: int,
    heuristic: Heuristic,
    table: HeuristicTable | None = None,
    scale: float = 1.0,
) -> RouteResult:
    """A* with priority ``g + alpha * scale * table(v, dst)``.

    ``scale`` converts the table's meters into the cost units of ``adj``
    (see :func:`heuristic_scale`).  With the zero heuristic this is exactly
    :func:`dijkstra`, expansions included.
    """
    start = time.perf_counter()
    if heuristic.kind == "zero":
        result = _search(adj, src, dst, None, 1.0)
    else:
        if table is None or table.kind != heuristic.kind:
            raise ValueError(f"A* with {heuristic.kind} needs a matching heuristic table")
        result = _search(adj, src, dst, table.column(dst, scale), heuristic.alpha)
    return _timed(result, start)


def _timed(result: RouteResult, start: float) -> RouteResult:
    elapsed = time.perf_counter() - start
    return RouteResult(result.path, result.cost, result.expanded, elapsed)


def reachable_count(view: ResolvedView, src: int) -> int:
    seen = {src}
    stack = [src]
    while stack:
        u = stack.pop()
        for v in view.succ.get(u, ()):
            if v not in seen:
                seen.add(v)
                stack.append(v)
    return len(seen)
