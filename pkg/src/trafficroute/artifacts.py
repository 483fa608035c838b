"""Binary persistence for APSP and heuristic tables.

Both formats are little-endian and share a fixed header::

    magic       4 bytes   b"TRFW" (APSP) or b"TRHT" (heuristic table)
    version     uint16    currently 1
    kind        uint16    0 for APSP, 1 euclidean, 2 great_circle
    graph_hash  32 bytes  sha256 of the canonical nodes/edges CSV text
    build_time  float64   seconds
    n           uint64    vertex count
    node_ids    uint64[n] dense index -> node id

followed by the payload in row-major order:

* APSP: ``dist`` float64[n*n] (km, float max when unreachable) then
  ``next_hop`` uint32[n*n] (0xFFFFFFFF when there is no next hop).
* heuristic: ``values`` float64[n*n] (meters).
"""

from __future__ import annotations

import struct
from pathlib import Path

import numpy as np

from .apsp import ApspTables
from .errors import ArtifactError
from .search import HeuristicTable

VERSION = 1
_HEADER = struct.Struct("<4sHH32sdQ")
_KIND_CODES = {"apsp": 0, "euclidean": 1, "great_circle": 2}
_KIND_NAMES = {v: k for k, v in _KIND_CODES.items()}


def _write(path, magic: bytes, kind: str, graph_hash: str, build_time: float, ids, arrays):
    path = Path(path)
    tmp = path.with_suffix(path.suffix + ".tmp")
    with open(tmp, "wb") as fh:
        fh.write(
            _HEADER.pack(
                magic, VERSION, _KIND_CODES[kind], bytes.fromhex(graph_hash), build_time, len(ids)
            )
        )
        fh.write(np.asarray(ids, dtype="<u8").tobytes())
        for arr in arrays:
            fh.write(np.ascontiguousarray(arr).tobytes())
    tmp.replace(path)


def _read(path, magic: bytes, graph_hash: str | None):
    path = Path(path)
    if not path.exists():
        raise ArtifactError(f"missing artifact {path}")
    data = path.read_bytes()
    if len(data) < _HEADER.size:
        raise ArtifactError(f"{path}: truncated header")
    got_magic, version, kind, ghash, build_time, n = _HEADER.unpack_from(data, 0)
    if got_magic != magic:
        raise ArtifactError(f"{path}: wrong magic {got_magic!r}")
    if version != VERSION:
        raise ArtifactError(f"{path}: unsupported version {version}")
    if graph_hash is not None and ghash.hex() != graph_hash:
        raise ArtifactError(f"{path}: built for a different graph ({ghash.hex()[:12]}...)")
    offset = _HEADER.size
    ids = np.frombuffer(data, dtype="<u8", count=n, offset=offset)
    offset += 8 * n
    return data, offset, _KIND_NAMES.get(kind), build_time, tuple(int(i) for i in ids), n


def save_apsp(tables: ApspTables, path, graph_hash: str):
    _write(
        path,
        b"TRFW",
        "apsp",
        graph_hash,
        tables.build_time_s,
        tables.node_ids,
        [tables.dist.astype("<f8", copy=False), tables.next_hop.astype("<u4", copy=False)],
    )


def load_apsp(path, graph_hash: str | None = None) -> ApspTables:
    data, offset, _, build_time, ids, n = _read(path, b"TRFW", graph_hash)
    expected = offset + n * n * (8 + 4)
    if len(data) != expected:
        raise ArtifactError(f"{path}: expected {expected} bytes, found {len(data)}")
    dist = np.frombuffer(data, dtype="<f8", count=n * n, offset=offset).reshape(n, n).copy()
    offset += 8 * n * n
    nxt = np.frombuffer(data, dtype="<u4", count=n * n, offset=offset).reshape(n, n).copy()
    return ApspTables(ids, dist.astype(np.float64), nxt.astype(np.uint32), build_time)


def save_heuristic(table: HeuristicTable, path, graph_hash: str):
    _write(
        path,
        b"TRHT",
        table.kind,
        graph_hash,
        table.build_time_s,
        table.node_ids,
        [table.values.astype("<f8", copy=False)],
    )


def load_heuristic(path, graph_hash: str | None = None) -> HeuristicTable:
    data, offset, kind, build_time, ids, n = _read(path, b"TRHT", graph_hash)
    expected = offset + n * n * 8
    if len(data) != expected:
        raise ArtifactError(f"{path}: expected {expected} bytes, found {len(data)}")
    values = np.frombuffer(data, dtype="<f8", count=n * n, offset=offset).reshape(n, n).copy()
    return HeuristicTable(kind, ids, values.astype(np.float64), build_time)


def fw_path(artifact_dir) -> Path:
    return Path(artifact_dir) / "fw.bin"


def heuristic_path(artifact_dir, kind: str) -> Path:
    return Path(artifact_dir) / f"heuristic_{kind}.bin"


def ksp_path(artifact_dir, k: int) -> Path:
    return Path(artifact_dir) / f"ksp_k{k}.csv"
