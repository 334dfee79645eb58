"""Clustering of salient pixel coordinates and seed-point selection.

Salient pixels are grouped by single-linkage connected components (two points
link when their Euclidean distance is at most link_radius). Components smaller
than min_cluster_size are dropped as outliers, except that the largest
component is always retained so a seed point always exists. The seed is the
centre of the cluster whose centre pixel has the highest intensity.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .image import Image, PixelCoord


@dataclass(frozen=True)
class ClusterConfig:
    link_radius: float = 10.0
    min_cluster_size: int = 3

    def __post_init__(self):
        if self.link_radius <= 0:
            raise ValueError("link_radius must be > 0")
        if self.min_cluster_size < 1:
            raise ValueError("min_cluster_size must be >= 1")


@dataclass(frozen=True)
class Cluster:
    members: tuple  # PixelCoords
    centre: PixelCoord  # member nearest the coordinate centroid
    centre_intensity: float | None = None


def _coord_key(c: PixelCoord) -> tuple[int, int]:
    # row-major ordering: by row, then column
    return (c.row, c.col)


class _UnionFind:
    def __init__(self, n: int):
        self.parent = list(range(n))

    def find(self, i: int) -> int:
        while self.parent[i] != i:
            self.parent[i] = self.parent[self.parent[i]]
            i = self.parent[i]
        return i

    def union(self, a: int, b: int) -> None:
        ra, rb = self.find(a), self.find(b)
        if ra != rb:
            self.parent[max(ra, rb)] = min(ra, rb)


def _medoid(members: list[PixelCoord]) -> PixelCoord:
    pts = np.array([(m.col, m.row) for m in members], dtype=np.float64)
    centroid = pts.mean(axis=0)
    d2 = ((pts - centroid) ** 2).sum(axis=1)
    best = min(range(len(members)), key=lambda i: (d2[i], _coord_key(members[i])))
    return members[best]


def cluster_coords(coords: list[PixelCoord], cfg: ClusterConfig) -> list[Cluster]:
    """Single-linkage components under distance <= link_radius, outliers dropped.

    Components with fewer than min_cluster_size members are discarded; if that
    would discard everything, the largest component survives. Clusters are
    returned ordered by their lowest member coordinate.
    """
    if not coords:
        raise ValueError("cluster_coords needs at least one coordinate")
    n = len(coords)
    pts = np.array([(c.col, c.row) for c in coords], dtype=np.float64)
    uf = _UnionFind(n)
    limit2 = cfg.link_radius**2
    for i in range(n):
        d2 = ((pts[i + 1 :] - pts[i]) ** 2).sum(axis=1)
        for off in np.nonzero(d2 <= limit2)[0]:
            uf.union(i, i + 1 + int(off))

    groups: dict[int, list[PixelCoord]] = {}
    for i, c in enumerate(coords):
        groups.setdefault(uf.find(i), []).append(c)
    components = sorted(
        groups.values(), key=lambda ms: min(_coord_key(m) for m in ms)
    )

    kept = [ms for ms in components if len(ms) >= cfg.min_cluster_size]
    if not kept:
        kept = [max(components, key=lambda ms: (len(ms), [-k for k in min(_coord_key(m) for m in ms)]))]
    return [Cluster(members=tuple(ms), centre=_medoid(ms)) for ms in kept]


def select_seed(clusters: list[Cluster], img: Image) -> PixelCoord:
    """Seed point: centre of the cluster with the highest centre-pixel intensity.

    Ties prefer the larger cluster, then the lowest row-major centre index.
    """
    if not clusters:
        raise ValueError("select_seed needs at least one cluster")
    scored = []
    for cl in clusters:
        if not cl.centre.in_bounds(img.width, img.height):
            raise ValueError(f"cluster centre {cl.centre} outside image bounds")
        scored.append((float(img.pixels[cl.centre.row, cl.centre.col]), cl))
    best = max(
        scored,
        key=lambda sc: (sc[0], len(sc[1].members), [-k for k in _coord_key(sc[1].centre)]),
    )
    return best[1].centre
