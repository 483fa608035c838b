"""All-pairs shortest distances (Floyd-Warshall-Ingerman) with next-hop
reconstruction and traffic-evaluated lookups."""

from __future__ import annotations

import time
from dataclasses import dataclass, field

import numpy as np

from .errors import NoPath
from .graph import ResolvedView
from .search import RouteResult
from .traffic import CostModel, TrafficScenario, path_metrics

INF = float(np.finfo(np.float64).max)
NO_HOP = np.iinfo(np.uint32).max


@dataclass(frozen=True, eq=False)
class ApspTables:
    node_ids: tuple[int, ...]
    dist: np.ndarray = field(repr=False)  # km, INF when unreachable
    next_hop: np.ndarray = field(repr=False)  # uint32 dense index, NO_HOP when none
    build_time_s: float = 0.0

    def __post_init__(self):
        object.__setattr__(self, "_index", {nid: i for i, nid in enumerate(self.node_ids)})

    @property
    def index(self) -> dict[int, int]:
        return self._index

    def distance(self, src: int, dst: int) -> float:
        return float(self.dist[self._index[src], self._index[dst]])


def floyd_warshall(view: ResolvedView) -> ApspTables:
    """Distance-only APSP on ``view``.

    The k loop is outermost; each k layer updates all ``(i, j)`` at once,
    which is the same recurrence as the scalar triple loop.
    """
    start = time.perf_counter()
    ids = tuple(view.nodes)
    index = {nid: i for i, nid in enumerate(ids)}
    n = len(ids)
    dist = np.full((n, n), np.inf)
    nxt = np.full((n, n), NO_HOP, dtype=np.uint32)
    for (u, v), e in view.chosen.items():
        i, j = index[u], index[v]
        dist[i, j] = e.length_m / 1000.0
        nxt[i, j] = j
    diag = np.arange(n)
    dist[diag, diag] = 0.0
    for k in range(n):
        through = dist[:, k, None] + dist[None, k, :]
        better = through < dist
        if not better.any():
            continue
        np.copyto(dist, through, where=better)
        np.copyto(nxt, np.broadcast_to(nxt[:, k, None], (n, n)), where=better)
    dist[np.isinf(dist)] = INF
    return ApspTables(ids, dist, nxt, time.perf_counter() - start)


def reconstruct_path(tables: ApspTables, src: int, dst: int) -> list[int]:
    index = tables.index
    i, j = index[src], index[dst]
    if i == j:
        return [src]
    if tables.next_hop[i, j] == NO_HOP:
        raise NoPath(src, dst)
    ids = tables.node_ids
    nxt = tables.next_hop
    path = [src]
    while i != j:
        i = int(nxt[i, j])
        path.append(ids[i])
    return path


def lookup_route(
    tables: ApspTables,
    view: ResolvedView,
    scenario: TrafficScenario,
    src: int,
    dst: int,
    model: CostModel | str = CostModel.V1,
) -> RouteResult:
    """Distance-optimal path, reported at its traffic-evaluated cost.

    ``view`` must be the distance-resolved view the tables were built from.
    """
    start = time.perf_counter()
    path = reconstruct_path(tables, src, dst)
    metrics = path_metrics(path, view, scenario)
    elapsed = time.perf_counter() - start
    return RouteResult(
        tuple(path), metrics.cost(model), None, elapsed, metrics.length_km, metrics.eta_min
    )
