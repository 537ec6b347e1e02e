"""Geometric primitives for polygon targets and directional range sensors.

Angles are radians normalized into [0, 2π). A target boundary is a list of
directed edges (length, direction) walked counterclockwise from an anchor;
vertex coordinates are always derived from the edges.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Dict, Iterable, List, Optional, Sequence, Tuple

import numpy as np
import shapely
from shapely.geometry import LineString, Polygon

from .errors import InvalidPolygonError

TWO_PI = 2.0 * math.pi
ANGLE_TOL = 1e-12
EPS_HIT = 1e-9
CLOSURE_REL_TOL = 1e-9


def normalize_angle(phi: float) -> float:
    """Map any angle into [0, 2π)."""
    value = math.fmod(float(phi), TWO_PI)
    if value < 0.0:
        value += TWO_PI
    if value >= TWO_PI - ANGLE_TOL:
        value = 0.0
    return value


def normalize_angles(phi: np.ndarray) -> np.ndarray:
    values = np.mod(np.asarray(phi, dtype=float), TWO_PI)
    values[values >= TWO_PI - ANGLE_TOL] = 0.0
    return values


def angle_distance(a: float, b: float) -> float:
    """Shortest circular distance between two angles."""
    d = normalize_angle(a - b)
    return min(d, TWO_PI - d)


@dataclass(frozen=True)
class AngleInterval:
    """Half-open wrapped interval [start, start + length) mod 2π."""
    start: float
    length: float

    def __post_init__(self):
        if not (0.0 < self.length <= TWO_PI + ANGLE_TOL):
            raise ValueError(f"Interval length must be in (0, 2π], got {self.length}")
        object.__setattr__(self, 'start', normalize_angle(self.start))
        object.__setattr__(self, 'length', min(float(self.length), TWO_PI))

    @classmethod
    def from_bounds(cls, start: float, end: float) -> 'AngleInterval':
        """Interval ⟦start, end⟧; equal bounds mean the full circle."""
        length = normalize_angle(end - start)
        if length == 0.0:
            length = TWO_PI
        return cls(start, length)

    @property
    def end(self) -> float:
        return normalize_angle(self.start + self.length)

    @property
    def is_full(self) -> bool:
        return self.length >= TWO_PI

    def contains(self, phi: float) -> bool:
        if self.is_full:
            return True
        offset = normalize_angle(phi - self.start)
        return offset < self.length - ANGLE_TOL


def angle_in_interval(phi: float, iv: AngleInterval) -> bool:
    return iv.contains(phi)


def edge_detectable(xi: float, theta: float) -> bool:
    """A sensor facing ``theta`` can see the front of an edge with direction ``xi``."""
    return AngleInterval(xi, math.pi).contains(theta)


def detectable_mask(xi: float, thetas: np.ndarray) -> np.ndarray:
    offsets = normalize_angles(np.asarray(thetas) - xi)
    return offsets < math.pi - ANGLE_TOL


@dataclass(frozen=True)
class DirectedEdge:
    length: float
    direction: float

    def __post_init__(self):
        if not math.isfinite(self.length) or self.length <= 0.0:
            raise InvalidPolygonError(f"Edge length must be positive and finite, got {self.length}")
        if not math.isfinite(self.direction):
            raise InvalidPolygonError(f"Edge direction must be finite, got {self.direction}")
        object.__setattr__(self, 'length', float(self.length))
        object.__setattr__(self, 'direction', normalize_angle(self.direction))

    @property
    def dx(self) -> float:
        return self.length * math.cos(self.direction)

    @property
    def dy(self) -> float:
        return self.length * math.sin(self.direction)

    def to_dict(self) -> Dict[str, float]:
        return {'lambda': self.length, 'xi': self.direction}


def closure_gap(edges: Sequence[DirectedEdge]) -> Tuple[float, float]:
    """Head of the last edge relative to the tail of the first."""
    if not edges:
        raise ValueError("closure_gap needs at least one edge")
    dx = math.fsum(e.dx for e in edges)
    dy = math.fsum(e.dy for e in edges)
    return dx, dy


@dataclass(frozen=True)
class PolygonTarget:
    """Target boundary as counterclockwise directed edges from ``anchor``.

    ``closed=False`` describes an open chain (a single edge or a corner) used
    for calibration runs: it has no interior, and each edge is hit only from
    its front side.
    """
    edges: Tuple[DirectedEdge, ...]
    anchor: Tuple[float, float] = (0.0, 0.0)
    closed: bool = True
    _shape: object = field(default=None, init=False, repr=False, compare=False)

    def __post_init__(self):
        object.__setattr__(self, 'edges', tuple(self.edges))
        object.__setattr__(self, 'anchor', (float(self.anchor[0]), float(self.anchor[1])))
        if not self.edges:
            raise InvalidPolygonError("A target needs at least one edge")

    @classmethod
    def from_vertices(cls, points: Iterable[Sequence[float]], closed: bool = True) -> 'PolygonTarget':
        pts = [(float(p[0]), float(p[1])) for p in points]
        if len(pts) < 2:
            raise InvalidPolygonError("Need at least two vertices")
        chain = pts + [pts[0]] if closed else pts
        edges = []
        for (x0, y0), (x1, y1) in zip(chain[:-1], chain[1:]):
            edges.append(DirectedEdge(math.hypot(x1 - x0, y1 - y0), math.atan2(y1 - y0, x1 - x0)))
        return cls(tuple(edges), pts[0], closed)

    @classmethod
    def from_dict(cls, data: Dict) -> 'PolygonTarget':
        try:
            edges = tuple(DirectedEdge(float(e['lambda']), float(e['xi'])) for e in data['edges'])
            anchor = data.get('anchor', (0.0, 0.0))
            return cls(edges, (float(anchor[0]), float(anchor[1])), bool(data.get('closed', True)))
        except (KeyError, TypeError, IndexError) as exc:
            raise InvalidPolygonError(f"Malformed polygon definition: {exc}") from exc

    def to_dict(self) -> Dict:
        data = {
            'edges': [e.to_dict() for e in self.edges],
            'anchor': [self.anchor[0], self.anchor[1]],
        }
        if not self.closed:
            data['closed'] = False
        return data

    def chain(self) -> np.ndarray:
        """Vertex chain of shape (n + 1, 2); a closed chain ends on its anchor."""
        steps = np.array([[e.dx, e.dy] for e in self.edges])
        pts = np.vstack([[0.0, 0.0], np.cumsum(steps, axis=0)]) + np.asarray(self.anchor)
        if self.closed:
            pts[-1] = pts[0]
        return pts

    def vertices(self) -> np.ndarray:
        pts = self.chain()
        return pts[:-1] if self.closed else pts

    def segments(self) -> np.ndarray:
        """Edge endpoints, shape (n, 2, 2)."""
        pts = self.chain()
        return np.stack([pts[:-1], pts[1:]], axis=1)

    @property
    def perimeter(self) -> float:
        return math.fsum(e.length for e in self.edges)

    @property
    def signed_area(self) -> float:
        pts = self.chain()
        x, y = pts[:, 0], pts[:, 1]
        return 0.5 * float(np.sum(x[:-1] * y[1:] - x[1:] * y[:-1]))

    @property
    def closure_gap(self) -> Tuple[float, float]:
        return closure_gap(self.edges)

    def bounds(self) -> Tuple[float, float, float, float]:
        pts = self.chain()
        return float(pts[:, 0].min()), float(pts[:, 1].min()), float(pts[:, 0].max()), float(pts[:, 1].max())

    def translated(self, dx: float, dy: float = 0.0) -> 'PolygonTarget':
        return PolygonTarget(self.edges, (self.anchor[0] + dx, self.anchor[1] + dy), self.closed)

    def placed(self, anchor: Tuple[float, float]) -> 'PolygonTarget':
        return PolygonTarget(self.edges, anchor, self.closed)

    def scaled(self, factor: float) -> 'PolygonTarget':
        if factor <= 0:
            raise InvalidPolygonError(f"Scale factor must be positive, got {factor}")
        return PolygonTarget(
            tuple(DirectedEdge(e.length * factor, e.direction) for e in self.edges),
            self.anchor,
            self.closed,
        )

    def shape(self):
        """Shapely geometry of the boundary (Polygon when closed)."""
        if self._shape is None:
            pts = self.chain()
            geom = Polygon(pts[:-1]) if self.closed else LineString(pts)
            shapely.prepare(geom)
            object.__setattr__(self, '_shape', geom)
        return self._shape

    def validate(self) -> 'PolygonTarget':
        """Raise InvalidPolygonError unless closed, simple and counterclockwise."""
        if not self.closed:
            if len(self.edges) > 1 and not LineString(self.chain()).is_simple:
                raise InvalidPolygonError("Open chain crosses itself")
            return self
        if len(self.edges) < 3:
            raise InvalidPolygonError("A closed target needs at least three edges")
        dx, dy = self.closure_gap
        tol = CLOSURE_REL_TOL * self.perimeter
        if abs(dx) > tol or abs(dy) > tol:
            raise InvalidPolygonError(f"Boundary does not close: gap=({dx:.3g}, {dy:.3g})")
        ring = Polygon(self.chain()[:-1])
        if not ring.is_valid or not ring.exterior.is_simple:
            raise InvalidPolygonError("Boundary is not simple")
        if self.signed_area <= 0.0:
            raise InvalidPolygonError("Edges must be ordered counterclockwise")
        return self


def ray_distances(
    segments: np.ndarray,
    ox: np.ndarray,
    oy: np.ndarray,
    theta: float,
    r_max: float,
    inside: Optional[np.ndarray] = None,
) -> np.ndarray:
    """Range along one direction from many origins to a set of edges.

    ``segments`` has shape (n, 2, 2); ``ox``/``oy`` broadcast to the number of
    origins. Returns distances clipped to [0, r_max], NaN for no detection.
    Only front-facing hits count; ``inside`` marks origins inside the target.
    """
    ox = np.atleast_1d(np.asarray(ox, dtype=float))
    oy = np.broadcast_to(np.asarray(oy, dtype=float), ox.shape)
    ux, uy = math.cos(theta), math.sin(theta)

    a = segments[:, 0, :]
    b = segments[:, 1, :]
    ex = (b[:, 0] - a[:, 0])[None, :]
    ey = (b[:, 1] - a[:, 1])[None, :]
    edge_len = np.hypot(ex, ey)
    qx = a[:, 0][None, :] - ox[:, None]
    qy = a[:, 1][None, :] - oy[:, None]

    denom = ux * ey - uy * ex
    facing = (ex * uy - ey * ux) >= -EPS_HIT * edge_len

    with np.errstate(divide='ignore', invalid='ignore'):
        s = (qx * ey - qy * ex) / denom
        w = (qx * uy - qy * ux) / denom
    w_tol = EPS_HIT / edge_len
    crossing = (np.abs(denom) > EPS_HIT * edge_len) & (s >= -EPS_HIT) & (w >= -w_tol) & (w <= 1.0 + w_tol)
    dist = np.where(crossing, np.maximum(s, 0.0), np.inf)

    # Ray running along an edge: nearest endpoint ahead of the origin.
    parallel = np.abs(denom) <= EPS_HIT * edge_len
    if parallel.any():
        offset = np.abs(qx * uy - qy * ux)
        collinear = parallel & (offset <= EPS_HIT)
        sa = qx * ux + qy * uy
        sb = (b[:, 0][None, :] - ox[:, None]) * ux + (b[:, 1][None, :] - oy[:, None]) * uy
        near = np.where((sa <= 0) & (sb >= 0) | (sb <= 0) & (sa >= 0), 0.0, np.minimum(sa, sb))
        ahead = np.maximum(sa, sb) >= -EPS_HIT
        dist = np.where(collinear & ahead, np.minimum(dist, np.maximum(near, 0.0)), dist)

    dist = np.where(facing, dist, np.inf)
    best = dist.min(axis=1)
    if inside is not None:
        best = np.where(inside, 0.0, best)
    out = np.where(best <= r_max + EPS_HIT, np.minimum(best, r_max), np.nan)
    return out


def ray_polygon_distance(
    origin: Sequence[float],
    theta: float,
    poly: PolygonTarget,
    r_max: float,
) -> Optional[float]:
    """Distance to the target along ``theta`` from ``origin``; None when nothing is detected."""
    if r_max <= 0:
        raise ValueError(f"r_max must be positive, got {r_max}")
    x, y = float(origin[0]), float(origin[1])
    inside = None
    if poly.closed:
        inside = np.array([bool(shapely.intersects_xy(poly.shape(), x, y))])
    value = ray_distances(poly.segments(), np.array([x]), np.array([y]), theta, r_max, inside)[0]
    if np.isnan(value):
        return None
    return float(value)


def points_inside(poly: PolygonTarget, x: np.ndarray, y: np.ndarray) -> np.ndarray:
    """Point-in-target test including the boundary; always False for open chains."""
    x = np.asarray(x, dtype=float)
    if not poly.closed:
        return np.zeros(x.shape, dtype=bool)
    return np.asarray(shapely.intersects_xy(poly.shape(), x, np.broadcast_to(y, x.shape)), dtype=bool)


def edges_from_points(points: List[Tuple[float, float]]) -> List[DirectedEdge]:
    return list(PolygonTarget.from_vertices(points, closed=True).edges)
