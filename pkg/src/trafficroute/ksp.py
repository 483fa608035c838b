"""K shortest loopless paths (Yen) as preprocessing, plus runtime
re-ranking of the stored candidates under a traffic scenario."""

from __future__ import annotations

import csv
import heapq
import json
import logging
import time
from dataclasses import dataclass
from pathlib import Path
from typing import Callable, Iterable, Mapping

from .errors import ArtifactError, NoPath
from .graph import ResolvedView
from .search import RouteResult
from .traffic import CostModel, TrafficScenario, path_metrics

log = logging.getLogger(__name__)

STORE_HEADER = ["src", "dst", "k_index", "distance_km", "path"]
STORE_VERSION = 1

Path_ = tuple[int, ...]


@dataclass(frozen=True)
class CandidateSet:
    src: int
    dst: int
    k: int
    paths: tuple[tuple[Path_, float], ...]  # (vertices, distance_km), best first

    def __len__(self):
        return len(self.paths)


def _meters(view: ResolvedView) -> Callable[[int, int], float]:
    chosen = view.chosen
    return lambda u, v: chosen[(u, v)].length_m


def _path_cost(path: Path_, cost) -> float:
    total = 0.0
    for u, v in zip(path, path[1:]):
        total += cost(u, v)
    return total


def _lexmin_shortest(view, cost, src, dst, banned_vertices, banned_edges):
    """Shortest ``src -> dst`` path avoiding the masks; among equal-cost
    paths the lexicographically smallest vertex sequence.

    A reverse Dijkstra from ``dst`` settles exact distances-to-go, then the
    path is walked forward taking the smallest successor on a tight edge.
    """
    if src in banned_vertices or dst in banned_vertices:
        return None
    togo = {dst: 0.0}
    settled: set[int] = set()
    heap = [(0.0, dst)]
    pred = view.pred
    while heap:
        d, v = heapq.heappop(heap)
        if v in settled:
            continue
        settled.add(v)
        if v == src:
            break
        for u in pred.get(v, ()):
            if u in banned_vertices or u in settled or (u, v) in banned_edges:
                continue
            du = cost(u, v) + d
            if du < togo.get(u, float("inf")):
                togo[u] = du
                heapq.heappush(heap, (du, u))
    if src not in settled:
        return None
    path = [src]
    u = src
    while u != dst:
        du = togo[u]
        for v in view.succ[u]:
            if v in settled and (u, v) not in banned_edges and v not in banned_vertices:
                if cost(u, v) + togo[v] == du:
                    u = v
                    break
        else:  # pragma: no cover - a tight successor always exists
            raise RuntimeError("lost the shortest-path tree while walking forward")
        path.append(u)
    return tuple(path)


def yen_k_shortest(
    view: ResolvedView,
    src: int,
    dst: int,
    k: int,
    cost: Callable[[int, int], float] | None = None,
) -> CandidateSet:
    """The ``k`` cheapest loopless paths, ordered by (distance, vertex
    sequence).  Fewer are returned when fewer exist.

    ``cost(u, v)`` defaults to the edge length in meters; reported
    distances are always ``cost / 1000``.
    """
    if k < 1:
        raise ValueError("k must be >= 1")
    cost = cost or _meters(view)
    first = _lexmin_shortest(view, cost, src, dst, frozenset(), frozenset())
    if first is None:
        raise NoPath(src, dst)
    accepted = [first]
    accepted_costs = [_path_cost(first, cost)]
    seen = {first}
    pool: list[tuple[float, Path_]] = []
    while len(accepted) < k:
        last = accepted[-1]
        for i in range(len(last) - 1):
            root = last[: i + 1]
            banned_edges = {p[i : i + 2] for p in accepted if len(p) > i + 1 and p[: i + 1] == root}
            spur = _lexmin_shortest(view, cost, last[i], dst, frozenset(root[:-1]), banned_edges)
            if spur is None:
                continue
            candidate = root[:-1] + spur
            if candidate not in seen:
                seen.add(candidate)
                heapq.heappush(pool, (_path_cost(candidate, cost), candidate))
        if not pool:
            break
        c, p = heapq.heappop(pool)
        accepted.append(p)
        accepted_costs.append(c)
    return CandidateSet(
        src, dst, k, tuple((p, c / 1000.0) for p, c in zip(accepted, accepted_costs))
    )


def select_best(
    candidates: CandidateSet | None,
    scenario: TrafficScenario,
    view: ResolvedView,
    model: CostModel | str = CostModel.V1,
) -> RouteResult:
    """Cheapest stored candidate under ``scenario``; ties keep the earlier
    candidate.  Timing covers the metric evaluations and the argmin only."""
    if candidates is None or not candidates.paths:
        src, dst = (candidates.src, candidates.dst) if candidates else (-1, -1)
        raise NoPath(src, dst)
    start = time.perf_counter()
    best = None
    best_cost = float("inf")
    for path, _ in candidates.paths:
        m = path_metrics(path, view, scenario)
        c = m.cost(model)
        if c < best_cost:
            best, best_cost = (path, m), c
    elapsed = time.perf_counter() - start
    path, m = best
    return RouteResult(path, best_cost, None, elapsed, m.length_km, m.eta_min)


# -- persistence --------------------------------------------------------------


class CandidateStore:
    """Append-only CSV of candidate sets with a JSON sidecar.

    A pair counts as computed once it appears in the sidecar; NoPath pairs
    are stored as a single row with ``k_index = -1``.
    """

    def __init__(self, path, k: int, graph_hash: str):
        self.path = Path(path)
        self.meta_path = self.path.with_name(self.path.name + ".meta.json")
        self.k = k
        self.graph_hash = graph_hash
        self.entries: dict[tuple[int, int], CandidateSet | None] = {}
        self.pair_seconds: dict[tuple[int, int], float] = {}
        if self.path.exists() or self.meta_path.exists():
            self._load()
        else:
            self.path.parent.mkdir(parents=True, exist_ok=True)
            with open(self.path, "w", newline="", encoding="utf-8") as fh:
                csv.writer(fh, lineterminator="\n").writerow(STORE_HEADER)
            self._write_meta()

    @classmethod
    def open_existing(cls, path, k: int, graph_hash: str | None) -> CandidateStore:
        path = Path(path)
        if not path.exists():
            raise ArtifactError(f"missing candidate store {path}")
        store = cls.__new__(cls)
        store.path = path
        store.meta_path = path.with_name(path.name + ".meta.json")
        store.k = k
        store.graph_hash = graph_hash
        store.entries, store.pair_seconds = {}, {}
        store._load()
        return store

    def _load(self):
        if not self.meta_path.exists():
            raise ArtifactError(f"candidate store {self.path} has no sidecar {self.meta_path}")
        meta = json.loads(self.meta_path.read_text())
        if meta.get("version") != STORE_VERSION:
            raise ArtifactError(f"{self.meta_path}: unsupported version {meta.get('version')}")
        if self.graph_hash is not None and meta["graph_hash"] != self.graph_hash:
            raise ArtifactError(f"{self.path}: built for a different graph")
        self.graph_hash = meta["graph_hash"]
        if meta["k"] != self.k:
            raise ArtifactError(f"{self.path}: holds K={meta['k']}, requested K={self.k}")
        done = {}
        for key, secs in meta["pair_seconds"].items():
            s, d = key.split("-")
            done[(int(s), int(d))] = secs
        rows: dict[tuple[int, int], list] = {}
        with open(self.path, newline="", encoding="utf-8") as fh:
            reader = csv.reader(fh)
            if next(reader, None) != STORE_HEADER:
                raise ArtifactError(f"{self.path}: bad header")
            for row in reader:
                if row:
                    rows.setdefault((int(row[0]), int(row[1])), []).append(row)
        stray = set(rows) - set(done)
        for pair, pair_rows in rows.items():
            if pair not in done:
                continue
            if pair_rows[0][2] == "-1":
                self.entries[pair] = None
                continue
            paths = tuple(
                (tuple(int(x) for x in r[4].split("-")), float(r[3]))
                for r in sorted(pair_rows, key=lambda r: int(r[2]))
            )
            self.entries[pair] = CandidateSet(pair[0], pair[1], self.k, paths)
        missing = set(done) - set(rows)
        if missing:
            raise ArtifactError(f"{self.path}: sidecar lists {len(missing)} pairs with no rows")
        self.pair_seconds = done
        if stray:
            log.warning("dropping %d partially written pairs from %s", len(stray), self.path)
            self._rewrite()

    def _rewrite(self):
        tmp = self.path.with_suffix(".tmp")
        with open(tmp, "w", newline="", encoding="utf-8") as fh:
            writer = csv.writer(fh, lineterminator="\n")
            writer.writerow(STORE_HEADER)
            for pair, entry in self.entries.items():
                writer.writerows(_rows(pair, entry))
        tmp.replace(self.path)

    def _write_meta(self):
        meta = {
            "version": STORE_VERSION,
            "graph_hash": self.graph_hash,
            "k": self.k,
            "pair_seconds": {f"{s}-{d}": t for (s, d), t in self.pair_seconds.items()},
        }
        tmp = self.meta_path.with_suffix(".tmp")
        tmp.write_text(json.dumps(meta, indent=1, sort_keys=True))
        tmp.replace(self.meta_path)

    def __contains__(self, pair) -> bool:
        return tuple(pair) in self.entries

    def __getitem__(self, pair) -> CandidateSet | None:
        """Stored set, or ``None`` for a stored NoPath.  KeyError if absent."""
        return self.entries[tuple(pair)]

    def get(self, src: int, dst: int) -> CandidateSet | None:
        return self.entries[(src, dst)]

    def add(self, src: int, dst: int, entry: CandidateSet | None, seconds: float):
        with open(self.path, "a", newline="", encoding="utf-8") as fh:
            csv.writer(fh, lineterminator="\n").writerows(_rows((src, dst), entry))
        self.entries[(src, dst)] = entry
        self.pair_seconds[(src, dst)] = seconds
        self._write_meta()

    def seconds_for(self, pairs: Iterable[tuple[int, int]]) -> float:
        return sum(self.pair_seconds.get(tuple(p), 0.0) for p in pairs)


def _rows(pair, entry: CandidateSet | None):
    if entry is None:
        return [[pair[0], pair[1], -1, "", ""]]
    return [
        [pair[0], pair[1], i, repr(dist), "-".join(str(v) for v in path)]
        for i, (path, dist) in enumerate(entry.paths)
    ]


def preprocess_pairs(
    view: ResolvedView,
    pairs: Iterable[tuple[int, int]],
    k: int,
    store: CandidateStore | Mapping | None = None,
    progress: Callable[[int, int], None] | None = None,
) -> CandidateStore | dict:
    """Run Yen for every pair not already in ``store``.

    Without a store an in-memory dict ``(src, dst) -> CandidateSet | None``
    is returned.
    """
    pairs = list(dict.fromkeys(tuple(p) for p in pairs))
    if store is None:
        store = {}
    todo = [p for p in pairs if p not in store]
    for n, (src, dst) in enumerate(todo, 1):
        start = time.perf_counter()
        try:
            entry = yen_k_shortest(view, src, dst, k)
        except NoPath:
            entry = None
        elapsed = time.perf_counter() - start
        if isinstance(store, CandidateStore):
            try:
                store.add(src, dst, entry, elapsed)
            except OSError as exc:
                raise OSError(f"writing candidates for pair ({src}, {dst}): {exc}") from exc
        else:
            store[(src, dst)] = entry
        if progress is not None:
            progress(n, len(todo))
    return store
