"""Grid-shaped synthetic road networks for desk-scale experiments."""

from __future__ import annotations

import math

from . import geo, rng
from .graph import GeoPoint, RoadEdge, RoadGraph

# (road types, weight) for whole grid lines, so corridors share a class
_LINE_CLASSES = [
    (("residential",), 0.55),
    (("tertiary",), 0.12),
    (("secondary",), 0.10),
    (("primary",), 0.06),
    (("unclassified",), 0.05),
    (("motorway",), 0.08),
    (("secondary", "motorway"), 0.02),
    (("primary_link",), 0.02),
]
_RECORDED_SPEEDS = (40.0, 50.0, 60.0, 70.0, 80.0, 100.0)
_METERS_PER_DEG_LAT = 111_320.0


def _pick(gen: rng.SplitMix64, choices):
    u = gen.random() * sum(w for _, w in choices)
    for value, w in choices:
        u -= w
        if u < 0:
            return value
    return choices[-1][0]


def generate_synthetic_city(
    n_rows: int,
    n_cols: int,
    seed: int = 0,
    detour_factor: float = 1.3,
    *,
    spacing_m: float = 150.0,
    jitter: float = 0.3,
    one_way_prob: float = 0.1,
    diagonal_prob: float = 0.05,
    removal_prob: float = 0.0,
    parallel_prob: float = 0.03,
    speed_record_prob: float = 0.2,
    origin: tuple[float, float] = (44.23, -76.49),
) -> RoadGraph:
    """Jittered grid city.

    Every edge is at least as long as the great-circle distance between its
    endpoints (``length = arc * f`` with ``1 <= f <= detour_factor``), so
    straight-line heuristics stay admissible.  ``removal_prob`` drops
    directed edges independently, which can leave pairs unreachable.
    """
    if n_rows < 2 or n_cols < 2:
        raise ValueError("city needs at least 2 rows and 2 columns")
    if detour_factor < 1.0:
        raise ValueError("detour_factor must be >= 1")
    gen = rng.SplitMix64(rng.substream_seed(seed, "city"))
    lat0, lon0 = origin
    dlat = spacing_m / _METERS_PER_DEG_LAT
    dlon = spacing_m / (_METERS_PER_DEG_LAT * math.cos(math.radians(lat0)))

    nodes = {}
    for r in range(n_rows):
        for c in range(n_cols):
            nodes[r * n_cols + c] = GeoPoint(
                lat0 + (r + gen.uniform(-jitter, jitter)) * dlat,
                lon0 + (c + gen.uniform(-jitter, jitter)) * dlon,
            )
    row_class = [_pick(gen, _LINE_CLASSES) for _ in range(n_rows)]
    col_class = [_pick(gen, _LINE_CLASSES) for _ in range(n_cols)]

    streets = []  # (a, b, road types)
    for r in range(n_rows):
        for c in range(n_cols):
            a = r * n_cols + c
            if c + 1 < n_cols:
                streets.append((a, a + 1, row_class[r]))
            if r + 1 < n_rows:
                streets.append((a, a + n_cols, col_class[c]))
            if r + 1 < n_rows and c + 1 < n_cols and gen.random() < diagonal_prob:
                streets.append((a, a + n_cols + 1, ("residential",)))

    edges: list[RoadEdge] = []
    next_key: dict[tuple[int, int], int] = {}

    def add(u, v, length, types, speeds):
        key = next_key.get((u, v), 0)
        next_key[(u, v)] = key + 1
        edges.append(RoadEdge(u, v, key, length, types, speeds))

    for a, b, types in streets:
        arc = geo.great_circle(nodes[a], nodes[b])
        length = arc * (1.0 + gen.random() * (detour_factor - 1.0))
        speeds: tuple[float, ...] = ()
        if gen.random() < speed_record_prob:
            speeds = (_RECORDED_SPEEDS[gen.randbelow(len(_RECORDED_SPEEDS))],)
            if gen.random() < 0.1:
                speeds += (_RECORDED_SPEEDS[gen.randbelow(len(_RECORDED_SPEEDS))],)
        directions = [(a, b), (b, a)]
        if gen.random() < one_way_prob:
            directions = [directions[gen.randbelow(2)]]
        for u, v in directions:
            if gen.random() < removal_prob:
                continue
            add(u, v, length, types, speeds)
            if gen.random() < parallel_prob:
                alt = arc * (1.0 + gen.random() * (detour_factor - 1.0)) * 1.1
                add(u, v, alt, ("residential",), ())
    return RoadGraph.build(nodes, edges)
