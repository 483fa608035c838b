"""Spherical distances on a mean-radius Earth."""

from __future__ import annotations

import math

import numpy as np

EARTH_RADIUS_M = 6_371_000.0


def _haversine_term(lat1, lon1, lat2, lon2):
    phi1 = math.radians(lat1)
    phi2 = math.radians(lat2)
    dphi = phi2 - phi1
    dlam = math.radians(lon2 - lon1)
    a = math.sin(dphi / 2.0) ** 2 + math.cos(phi1) * math.cos(phi2) * math.sin(dlam / 2.0) ** 2
    return min(1.0, max(0.0, a))


def great_circle(a, b) -> float:
    """Arc length in meters between two points with ``lat``/``lon`` attributes."""
    h = _haversine_term(a.lat, a.lon, b.lat, b.lon)
    return 2.0 * EARTH_RADIUS_M * math.asin(math.sqrt(h))


def euclidean_chord(a, b) -> float:
    """Straight-line (through the sphere) distance in meters.

    ``sin(central_angle / 2)`` is exactly ``sqrt(haversine)``, which keeps the
    chord consistent with :func:`great_circle` and never larger than it.
    """
    h = _haversine_term(a.lat, a.lon, b.lat, b.lon)
    return 2.0 * EARTH_RADIUS_M * math.sqrt(h)


def pairwise(lat: np.ndarray, lon: np.ndarray, kind: str) -> np.ndarray:
    """Dense ``n x n`` matrix of distances in meters for ``kind`` in
    ``{"euclidean", "great_circle"}``.  Built row block by row block to keep
    the temporaries small."""
    phi = np.radians(np.asarray(lat, dtype=np.float64))
    lam = np.radians(np.asarray(lon, dtype=np.float64))
    cos_phi = np.cos(phi)
    n = phi.size
    out = np.empty((n, n), dtype=np.float64)
    block = max(1, min(n, 4_000_000 // max(n, 1)))
    for start in range(0, n, block):
        stop = min(n, start + block)
        dphi = phi[None, :] - phi[start:stop, None]
        dlam = lam[None, :] - lam[start:stop, None]
        h = np.sin(dphi / 2.0) ** 2 + cos_phi[start:stop, None] * cos_phi[None, :] * np.sin(dlam / 2.0) ** 2
        np.clip(h, 0.0, 1.0, out=h)
        root = np.sqrt(h)
        if kind == "euclidean":
            out[start:stop] = 2.0 * EARTH_RADIUS_M * root
        elif kind == "great_circle":
            out[start:stop] = 2.0 * EARTH_RADIUS_M * np.arcsin(root)
        else:
            raise ValueError(f"unknown distance kind {kind!r}")
    # exact symmetry regardless of rounding in the block computation
    out = np.minimum(out, out.T)
    np.fill_diagonal(out, 0.0)
    return out
