"""Road-network graph: CSV ingestion, validation, speed imputation and
parallel-edge resolution.

Units: lengths in meters, speeds in km/h.  Conversion to km/minutes happens
only when metrics are reported.
"""

from __future__ import annotations

import csv
import hashlib
import io
import math
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Callable, Iterable, Mapping

from .errors import GraphValidationError, ImputationError

NODE_HEADER = ["id", "lat", "lon"]
EDGE_HEADER = ["u", "v", "key", "length_m", "road_types", "maxspeed"]

DEFAULT_CLASS_SPEED = 50.0
CLASS_SPEEDS: dict[str, float] = {
    **dict.fromkeys(
        [
            "residential",
            "primary",
            "unclassified",
            "motorway_link",
            "secondary_link",
            "primary_link",
            "tertiary_link",
        ],
        50.0,
    ),
    "secondary": 80.0,
    "tertiary": 80.0,
    "motorway": 100.0,
}

EdgeKey = tuple[int, int, int]


@dataclass(frozen=True)
class GeoPoint:
    lat: float
    lon: float

    def __post_init__(self):
        if not (math.isfinite(self.lat) and math.isfinite(self.lon)):
            raise GraphValidationError(f"non-finite coordinate ({self.lat}, {self.lon})")
        if not -90.0 <= self.lat <= 90.0 or not -180.0 <= self.lon <= 180.0:
            raise GraphValidationError(f"coordinate out of range ({self.lat}, {self.lon})")


@dataclass(frozen=True)
class RoadEdge:
    u: int
    v: int
    key: int
    length_m: float
    road_types: tuple[str, ...]
    raw_maxspeeds: tuple[float, ...] = ()
    speed_kmh: float | None = None

    @property
    def ident(self) -> EdgeKey:
        return (self.u, self.v, self.key)


def impute_speed(road_types: Iterable[str], raw_maxspeeds: Iterable[float]) -> float:
    """Speed limit for an edge in km/h.

    Recorded limits win and are averaged; otherwise each road type is mapped
    to its class speed (unknown tags count as 50) and those are averaged.
    """
    speeds = [float(s) for s in raw_maxspeeds]
    if speeds:
        return sum(speeds) / len(speeds)
    types = list(road_types)
    if not types:
        raise ImputationError("edge has neither road types nor recorded speed limits")
    class_speeds = [CLASS_SPEEDS.get(t, DEFAULT_CLASS_SPEED) for t in types]
    return sum(class_speeds) / len(class_speeds)


@dataclass(frozen=True, eq=False)
class RoadGraph:
    """Directed multigraph.  Immutable after construction.

    ``edges`` is kept in canonical ``(u, v, key)`` order, which is also the
    order traffic streams are assigned in.
    """

    nodes: Mapping[int, GeoPoint]
    edges: tuple[RoadEdge, ...]
    adjacency: Mapping[int, tuple[RoadEdge, ...]] = field(repr=False)

    @classmethod
    def build(cls, nodes: Mapping[int, GeoPoint], edges: Iterable[RoadEdge]) -> RoadGraph:
        nodes = dict(sorted(nodes.items()))
        for nid in nodes:
            if nid < 0 or nid >= 1 << 64:
                raise GraphValidationError(f"node id {nid} is not a non-negative 64-bit integer")
        ordered = sorted(edges, key=lambda e: e.ident)
        seen: set[EdgeKey] = set()
        adjacency: dict[int, list[RoadEdge]] = {nid: [] for nid in nodes}
        for e in ordered:
            if e.u not in nodes or e.v not in nodes:
                missing = e.u if e.u not in nodes else e.v
                raise GraphValidationError(f"dangling endpoint {missing} in edge {e.ident}")
            if not (math.isfinite(e.length_m) and e.length_m > 0):
                raise GraphValidationError(f"non-positive length {e.length_m} in edge {e.ident}")
            if not e.road_types:
                raise GraphValidationError(f"edge {e.ident} has no road types")
            if e.speed_kmh is not None and not (math.isfinite(e.speed_kmh) and e.speed_kmh > 0):
                raise GraphValidationError(f"non-positive speed {e.speed_kmh} in edge {e.ident}")
            if e.ident in seen:
                raise GraphValidationError(f"duplicate edge {e.ident}")
            seen.add(e.ident)
            adjacency[e.u].append(e)
        return cls(nodes, tuple(ordered), {k: tuple(v) for k, v in adjacency.items()})

    @property
    def node_count(self) -> int:
        return len(self.nodes)

    def __eq__(self, other):
        if not isinstance(other, RoadGraph):
            return NotImplemented
        return dict(self.nodes) == dict(other.nodes) and self.edges == other.edges

    def normalized(self) -> RoadGraph:
        """Copy with ``speed_kmh`` imputed on every edge."""
        edges = [
            replace(e, speed_kmh=impute_speed(e.road_types, e.raw_maxspeeds)) for e in self.edges
        ]
        return RoadGraph.build(self.nodes, edges)

    def parallel_pair_count(self) -> int:
        """Number of ordered ``(u, v)`` pairs carrying more than one edge."""
        counts: dict[tuple[int, int], int] = {}
        for e in self.edges:
            counts[(e.u, e.v)] = counts.get((e.u, e.v), 0) + 1
        return sum(1 for c in counts.values() if c > 1)

    def missing_speed_count(self) -> int:
        return sum(1 for e in self.edges if not e.raw_maxspeeds)

    def speed_bounds(self) -> tuple[float, float]:
        """(max, mean) of imputed edge speeds."""
        speeds = [e.speed_kmh for e in self.edges]
        if any(s is None for s in speeds):
            raise ImputationError("graph speeds have not been imputed; call normalized()")
        return max(speeds), sum(speeds) / len(speeds)

    def content_hash(self) -> str:
        buf_n, buf_e = io.StringIO(), io.StringIO()
        write_nodes(self, buf_n)
        write_edges(self, buf_e)
        h = hashlib.sha256()
        h.update(buf_n.getvalue().encode())
        h.update(b"\0")
        h.update(buf_e.getvalue().encode())
        return h.hexdigest()


# -- resolution ---------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class ResolvedView:
    """Simple-digraph view of a :class:`RoadGraph` with one edge per
    ``(u, v)``."""

    nodes: Mapping[int, GeoPoint]
    chosen: Mapping[tuple[int, int], RoadEdge]
    succ: Mapping[int, tuple[int, ...]]
    pred: Mapping[int, tuple[int, ...]]

    def edge(self, u: int, v: int) -> RoadEdge:
        return self.chosen[(u, v)]

    def has_edge(self, u: int, v: int) -> bool:
        return (u, v) in self.chosen

    def weighted(self, edge_cost: Callable[[RoadEdge], float]) -> dict[int, list[tuple[int, float]]]:
        """Adjacency lists ``u -> [(v, cost), ...]`` for search."""
        return {
            u: [(v, edge_cost(self.chosen[(u, v)])) for v in vs] for u, vs in self.succ.items()
        }


def resolve_parallel(graph: RoadGraph, edge_cost: Callable[[RoadEdge], float]) -> ResolvedView:
    """Keep, for every ``(u, v)``, the edge minimising ``edge_cost``; ties go
    to the smallest key.  The graph itself is untouched."""
    chosen: dict[tuple[int, int], RoadEdge] = {}
    best: dict[tuple[int, int], float] = {}
    # edges arrive sorted by key within (u, v), so strict < keeps the smallest key
    for e in graph.edges:
        pair = (e.u, e.v)
        c = edge_cost(e)
        if pair not in best or c < best[pair]:
            best[pair] = c
            chosen[pair] = e
    succ: dict[int, list[int]] = {nid: [] for nid in graph.nodes}
    pred: dict[int, list[int]] = {nid: [] for nid in graph.nodes}
    for u, v in chosen:
        succ[u].append(v)
        pred[v].append(u)
    return ResolvedView(
        graph.nodes,
        chosen,
        {k: tuple(sorted(v)) for k, v in succ.items()},
        {k: tuple(sorted(v)) for k, v in pred.items()},
    )


def distance_view(graph: RoadGraph) -> ResolvedView:
    return resolve_parallel(graph, lambda e: e.length_m)


# -- CSV I/O ------------------------------------------------------------------


def _split_list(cell: str) -> list[str]:
    return [part.strip() for part in cell.split(";") if part.strip()]


def _format_float(x: float) -> str:
    return repr(float(x))


def _check_header(header: list[str] | None, expected: list[str], what: str):
    if header is None:
        raise GraphValidationError(f"{what} file is empty", line=1)
    if [h.strip() for h in header] != expected:
        raise GraphValidationError(
            f"{what} header must be {','.join(expected)}, got {','.join(header)}", line=1
        )


def read_nodes(stream) -> dict[int, GeoPoint]:
    reader = csv.reader(stream)
    _check_header(next(reader, None), NODE_HEADER, "nodes")
    nodes: dict[int, GeoPoint] = {}
    for row in reader:
        line = reader.line_num
        if not row:
            continue
        if len(row) != len(NODE_HEADER):
            raise GraphValidationError(
                f"node row has {len(row)} columns, expected {len(NODE_HEADER)}", line=line
            )
        try:
            nid, lat, lon = int(row[0]), float(row[1]), float(row[2])
            point = GeoPoint(lat, lon)
        except ValueError as exc:
            raise GraphValidationError(f"bad node row: {exc}", line=line) from None
        except GraphValidationError as exc:
            raise GraphValidationError(str(exc), line=line) from None
        if nid in nodes:
            raise GraphValidationError(f"duplicate node id {nid}", line=line)
        nodes[nid] = point
    return nodes


def read_edges(stream) -> list[RoadEdge]:
    reader = csv.reader(stream)
    _check_header(next(reader, None), EDGE_HEADER, "edges")
    edges = []
    for row in reader:
        line = reader.line_num
        if not row:
            continue
        if len(row) != len(EDGE_HEADER):
            raise GraphValidationError(
                f"edge row has {len(row)} columns, expected {len(EDGE_HEADER)}", line=line
            )
        try:
            u, v, key = int(row[0]), int(row[1]), int(row[2])
            length = float(row[3])
            speeds = tuple(float(s) for s in _split_list(row[5]))
        except ValueError as exc:
            raise GraphValidationError(f"bad edge row: {exc}", line=line) from None
        if any(not (math.isfinite(s) and s > 0) for s in speeds):
            raise GraphValidationError(f"non-positive maxspeed in edge {(u, v, key)}", line=line)
        edges.append(RoadEdge(u, v, key, length, tuple(_split_list(row[4])), speeds))
    return edges


def load_graph(nodes_source, edges_source) -> RoadGraph:
    """Load a graph from two CSV sources (paths or open text streams).

    Speeds are not imputed here; see :meth:`RoadGraph.normalized`.
    """
    nodes = _with_stream(nodes_source, read_nodes)
    edges = _with_stream(edges_source, read_edges)
    return RoadGraph.build(nodes, edges)


def _with_stream(source, fn):
    if isinstance(source, (str, Path)):
        with open(source, newline="", encoding="utf-8") as fh:
            return fn(fh)
    return fn(source)


def write_nodes(graph: RoadGraph, stream):
    writer = csv.writer(stream, lineterminator="\n")
    writer.writerow(NODE_HEADER)
    for nid, p in graph.nodes.items():
        writer.writerow([nid, _format_float(p.lat), _format_float(p.lon)])


def write_edges(graph: RoadGraph, stream):
    writer = csv.writer(stream, lineterminator="\n")
    writer.writerow(EDGE_HEADER)
    for e in graph.edges:
        writer.writerow(
            [
                e.u,
                e.v,
                e.key,
                _format_float(e.length_m),
                ";".join(e.road_types),
                ";".join(_format_float(s) for s in e.raw_maxspeeds),
            ]
        )


def save_graph(graph: RoadGraph, nodes_path, edges_path):
    with open(nodes_path, "w", newline="", encoding="utf-8") as fh:
        write_nodes(graph, fh)
    with open(edges_path, "w", newline="", encoding="utf-8") as fh:
        write_edges(graph, fh)
