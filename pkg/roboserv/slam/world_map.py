"""World map of ground-plane landmarks"""

import json
from dataclasses import dataclass
from typing import Dict, List, Optional

import numpy as np
from scipy.spatial import cKDTree


@dataclass
class MapPoint:
    id: int
    x: float
    y: float
    height: float
    descriptor: np.ndarray
    observation_count: int = 1

    @property
    def position(self) -> np.ndarray:
        return np.array([self.x, self.y])


class WorldMap:
    """
    Map points with a radius index

    No two points are ever closer than merge_radius: an insertion that lands
    within merge_radius of an existing point is averaged into it (weighted by
    observation counts), and merges cascade until the invariant holds again.
    """

    def __init__(self, merge_radius: float = 0.05):
        if merge_radius <= 0:
            raise ValueError(f"merge_radius must be positive, got {merge_radius}")
        self.merge_radius = merge_radius
        self._points: Dict[int, MapPoint] = {}
        self._next_id = 0
        self._tree: Optional[cKDTree] = None
        self._tree_ids: List[int] = []

    def __len__(self) -> int:
        return len(self._points)

    def __iter__(self):
        return iter(self.points())

    def points(self) -> List[MapPoint]:
        return [self._points[i] for i in sorted(self._points)]

    def get(self, point_id: int) -> MapPoint:
        return self._points[point_id]

    def _positions(self) -> np.ndarray:
        return np.array([[p.x, p.y] for p in self.points()]).reshape(-1, 2)

    def _index(self) -> Optional[cKDTree]:
        if self._tree is None and self._points:
            self._tree_ids = sorted(self._points)
            self._tree = cKDTree(self._positions())
        return self._tree

    def query_radius(self, xy, radius: float) -> List[MapPoint]:
        """Map points within radius of xy, ordered by id"""
        tree = self._index()
        if tree is None:
            return []
        hits = tree.query_ball_point(np.asarray(xy, dtype=np.float64), radius)
        return [self._points[self._tree_ids[i]] for i in sorted(hits)]

    def _nearest_other(self, point: MapPoint) -> Optional[MapPoint]:
        best, best_d = None, self.merge_radius
        for other in self._points.values():
            if other.id == point.id:
                continue
            d = float(np.hypot(other.x - point.x, other.y - point.y))
            if d < best_d or (d == best_d and best is not None and other.id < best.id):
                best, best_d = other, d
        return best

    @staticmethod
    def _absorb(target: MapPoint, x: float, y: float, height: float, descriptor: np.ndarray, count: int) -> None:
        n = target.observation_count
        total = n + count
        target.x = (target.x * n + x * count) / total
        target.y = (target.y * n + y * count) / total
        target.height = (target.height * n + height * count) / total
        merged = target.descriptor * n + descriptor * count
        norm = np.linalg.norm(merged)
        if norm > 0:
            target.descriptor = merged / norm
        target.observation_count = total

    def insert(self, xy, height: float, descriptor: np.ndarray) -> MapPoint:
        """Add an observation, merging it into a nearby point when one exists"""
        x, y = float(xy[0]), float(xy[1])
        candidate = MapPoint(-1, x, y, height, descriptor)
        target = self._nearest_other(candidate)
        if target is None:
            target = MapPoint(self._next_id, x, y, float(height), np.asarray(descriptor, dtype=np.float64).copy())
            self._points[target.id] = target
            self._next_id += 1
        else:
            self._absorb(target, x, y, float(height), np.asarray(descriptor, dtype=np.float64), 1)
            neighbour = self._nearest_other(target)
            while neighbour is not None:
                keep, drop = (target, neighbour) if target.id < neighbour.id else (neighbour, target)
                self._absorb(keep, drop.x, drop.y, drop.height, drop.descriptor, drop.observation_count)
                del self._points[drop.id]
                target = keep
                neighbour = self._nearest_other(target)
        self._tree = None
        return target

    def min_separation(self) -> float:
        """Smallest distance between two map points (inf with fewer than two)"""
        if len(self._points) < 2:
            return float("inf")
        distances, _ = cKDTree(self._positions()).query(self._positions(), k=2)
        return float(distances[:, 1].min())

    def to_json(self) -> str:
        points = [
            {"id": p.id, "x": p.x, "y": p.y, "height": p.height, "observation_count": p.observation_count}
            for p in self.points()
        ]
        return json.dumps({"merge_radius": self.merge_radius, "points": points}, indent=2, sort_keys=True)
