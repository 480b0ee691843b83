"""Static R-tree over parking-lot polygons with exact nearest queries.

The tree is STR-packed once at construction and read-only afterwards, so
concurrent queries are safe. Nearest search is best-first over bbox lower
bounds computed in the same local-meter frame as the exact polygon distance,
which makes results identical to a linear scan (including the lot-id tie
rule).
"""

from __future__ import annotations

import heapq
import math

from .geomath import meters_per_degree, point_to_bbox_distance_m, point_to_polygon_distance_m

_NODE_CAPACITY = 8


class _Node:
    __slots__ = ("bbox", "children", "lots")

    def __init__(self, bbox, children=None, lots=None):
        self.bbox = bbox
        self.children = children
        self.lots = lots


def _merge_bbox(boxes):
    return (
        min(b[0] for b in boxes),
        min(b[1] for b in boxes),
        max(b[2] for b in boxes),
        max(b[3] for b in boxes),
    )


class SpatialIndex:
    """Nearest-lot queries by point over an immutable set of parking lots."""

    def __init__(self, lots):
        lots = list(lots)
        if not lots:
            raise ValueError("cannot index an empty lot list")
        self._root = self._build(lots)

    @staticmethod
    def _pack_level(entries):
        """One STR pass: sort by x center, slab by y center, chunk into nodes."""
        n = len(entries)
        n_nodes = math.ceil(n / _NODE_CAPACITY)
        n_slabs = math.ceil(math.sqrt(n_nodes))
        slab_size = math.ceil(n / n_slabs) if n_slabs else n
        entries = sorted(entries, key=lambda e: (e[0][0] + e[0][2], e[0][1] + e[0][3]))
        groups = []
        for s in range(0, n, slab_size):
            slab = sorted(entries[s : s + slab_size], key=lambda e: (e[0][1] + e[0][3], e[0][0] + e[0][2]))
            for c in range(0, len(slab), _NODE_CAPACITY):
                groups.append(slab[c : c + _NODE_CAPACITY])
        return groups

    def _build(self, lots):
        leaves = []
        for group in self._pack_level([(lot.geometry.bbox(), lot) for lot in lots]):
            leaves.append(_Node(_merge_bbox([g[0] for g in group]), lots=[g[1] for g in group]))
        level = leaves
        while len(level) > 1:
            next_level = []
            for group in self._pack_level([(node.bbox, node) for node in level]):
                next_level.append(_Node(_merge_bbox([g[0] for g in group]), children=[g[1] for g in group]))
            level = next_level
        return level[0]

    def nearest(self, lon: float, lat: float):
        """(lot, distance_m) of the closest lot; equal distances pick the smaller id."""
        m_lat, m_lon = meters_per_degree(lat)
        best_lot = None
        best_dist = math.inf
        counter = 0  # heap tiebreaker; nodes are not orderable
        frontier = [(0.0, counter, self._root)]
        while frontier:
            bound, _, node = heapq.heappop(frontier)
            if bound > best_dist:
                break
            if node.lots is not None:
                for lot in node.lots:
                    d = point_to_polygon_distance_m(lon, lat, lot.geometry)
                    if d < best_dist or (d == best_dist and (best_lot is None or lot.id < best_lot.id)):
                        best_lot, best_dist = lot, d
            else:
                for child in node.children:
                    child_bound = point_to_bbox_distance_m(lon, lat, child.bbox, m_lat, m_lon)
                    if child_bound <= best_dist:
                        counter += 1
                        heapq.heappush(frontier, (child_bound, counter, child))
        if best_lot is None:
            return None
        return best_lot, best_dist


def build_spatial_index(lots) -> SpatialIndex:
    """Index lots for nearest queries; raises on an empty input."""
    return SpatialIndex(lots)
