"""Assemble edge estimates into an outline."""
import itertools
import logging
import math
from dataclasses import dataclass
from typing import Dict, List, Optional, Sequence, Set, Tuple

import numpy as np

from .estimator import ConnectivityRecord, EdgeEstimate
from .extraction import Vertex
from .geometry import TWO_PI

logger = logging.getLogger(__name__)

MAX_INSTANCES = 12
MAX_CYCLES = 200
MAX_DFS_STEPS = 200_000
TURN_TOL = 1e-9


@dataclass(frozen=True)
class ShapeEdge:
    estimate: int
    length: float
    direction: float

    def to_dict(self) -> Dict:
        return {'estimate': self.estimate, 'lambda': self.length, 'xi': self.direction}


@dataclass(frozen=True)
class ShapeEstimate:
    ordered_edges: Tuple[ShapeEdge, ...]
    closure_gap: Tuple[float, float]
    complete: bool
    perimeter: float
    cyclic: bool = False

    @property
    def gap_norm(self) -> float:
        return math.hypot(*self.closure_gap)

    def to_dict(self) -> Dict:
        return {
            'ordered_edges': [e.to_dict() for e in self.ordered_edges],
            'closure_gap': [self.closure_gap[0], self.closure_gap[1]],
            'complete': self.complete,
            'perimeter': self.perimeter,
        }


def _instances(estimates: Sequence[EdgeEstimate]) -> List[EdgeEstimate]:
    counts = [max(0, e.n_e_rounded) for e in estimates]
    if not any(counts):
        counts = [1] * len(estimates)
    ranked = sorted(zip(estimates, counts), key=lambda item: -item[0].support_count)
    out: List[EdgeEstimate] = []
    for est, count in ranked:
        out.extend([est] * count)
    if len(out) > MAX_INSTANCES:
        logger.warning(f"Shape assembly keeps the {MAX_INSTANCES} best-supported of {len(out)} edge instances")
        out = out[:MAX_INSTANCES]
    return out


def _links(records: Sequence[ConnectivityRecord]) -> Dict[Tuple[int, int], ConnectivityRecord]:
    """Strongest significant record per unordered estimate pair."""
    links: Dict[Tuple[int, int], ConnectivityRecord] = {}
    for rec in records:
        if not rec.significant:
            continue
        key = (min(rec.head, rec.tail), max(rec.head, rec.tail))
        if key not in links or rec.n_c > links[key].n_c:
            links[key] = rec
    return links


def _hamiltonian_cycles(adjacency: List[List[int]], max_missing: int = 0) -> List[List[int]]:
    """Orders visiting every instance once, starting at instance 0.

    Consecutive instances, and the last and first, must be linked except for
    at most ``max_missing`` pairs.
    """
    n = len(adjacency)
    linked = [set(a) for a in adjacency]
    cycles: List[List[int]] = []
    steps = 0
    path = [0]
    visited = [False] * n
    visited[0] = True

    def walk(missing: int) -> bool:
        nonlocal steps
        steps += 1
        if steps > MAX_DFS_STEPS or len(cycles) >= MAX_CYCLES:
            return False
        last = path[-1]
        if len(path) == n:
            if missing + (0 not in linked[last]) <= max_missing:
                cycles.append(list(path))
            return True
        # Linked neighbours first so complete cycles are found before gapped ones
        ranked = sorted(range(n), key=lambda j: j not in linked[last])
        for nxt in ranked:
            if visited[nxt]:
                continue
            cost = missing + (nxt not in linked[last])
            if cost > max_missing:
                continue
            visited[nxt] = True
            path.append(nxt)
            keep_going = walk(cost)
            path.pop()
            visited[nxt] = False
            if not keep_going:
                return False
        return True

    walk(0)
    return cycles


def _turn_is_convex(turns: np.ndarray) -> np.ndarray:
    return (turns < math.pi) | (turns >= TWO_PI - TURN_TOL)


def _sign_search(
    order: List[EdgeEstimate],
    link_vertices: List[Optional[Vertex]],
    require_closed_ccw: bool,
) -> Optional[Tuple[float, np.ndarray]]:
    """Best direction choice per edge for a fixed order; returns (gap, directions)."""
    n = len(order)
    choices = np.array(list(itertools.product((0, 1), repeat=n)), dtype=int)
    cands = np.array([e.xi_candidates for e in order])
    lengths = np.array([e.lambda_hat for e in order])
    dirs = cands[np.arange(n)[None, :], choices]
    dx = lengths * np.cos(dirs)
    dy = lengths * np.sin(dirs)
    gaps = np.hypot(dx.sum(axis=1), dy.sum(axis=1))
    ok = np.ones(choices.shape[0], dtype=bool)

    if require_closed_ccw:
        x = np.concatenate([np.zeros((dx.shape[0], 1)), np.cumsum(dx, axis=1)], axis=1)
        y = np.concatenate([np.zeros((dy.shape[0], 1)), np.cumsum(dy, axis=1)], axis=1)
        area = 0.5 * np.sum(x[:, :-1] * y[:, 1:] - x[:, 1:] * y[:, :-1], axis=1)
        ok &= area > 0
        for i, vertex in enumerate(link_vertices):
            if vertex is None:
                continue
            turns = np.mod(dirs[:, (i + 1) % n] - dirs[:, i], TWO_PI)
            convex = _turn_is_convex(turns)
            ok &= convex if vertex == Vertex.CONVEX else ~convex

    if not ok.any():
        return None
    best = int(np.argmin(np.where(ok, gaps, np.inf)))
    return float(gaps[best]), dirs[best]


def _build(order: List[EdgeEstimate], dirs: np.ndarray, closure_tol: float, cyclic: bool) -> ShapeEstimate:
    edges = tuple(ShapeEdge(e.index, e.lambda_hat, float(d)) for e, d in zip(order, dirs))
    gap = (
        math.fsum(e.length * math.cos(e.direction) for e in edges),
        math.fsum(e.length * math.sin(e.direction) for e in edges),
    )
    perimeter = math.fsum(e.length for e in edges)
    complete = cyclic and math.hypot(*gap) <= closure_tol * perimeter
    return ShapeEstimate(edges, gap, complete, perimeter, cyclic)


def _path_cover(instances: List[EdgeEstimate], adjacency: List[List[int]]) -> List[int]:
    """Greedy walk along links, then any instance left over."""
    order = [0]
    seen = {0}
    while True:
        nxt = next((j for j in adjacency[order[-1]] if j not in seen), None)
        if nxt is None:
            break
        order.append(nxt)
        seen.add(nxt)
    order.extend(i for i in range(len(instances)) if i not in seen)
    return order


def _best_cycle(
    instances: List[EdgeEstimate],
    adjacency: List[List[int]],
    links: Dict[Tuple[int, int], ConnectivityRecord],
    ordered_links: Set[Tuple[int, int]],
    move_direction: int,
    max_missing: int,
) -> Optional[Tuple[List[int], np.ndarray]]:
    """Closed order with the smallest gap over the direction choices its links allow."""
    n = len(instances)
    best: Optional[Tuple[Tuple[float, int], List[int], np.ndarray]] = None
    for cycle in _hamiltonian_cycles(adjacency, max_missing):
        order = [instances[i] for i in cycle]
        vertices = []
        for k in range(n):
            a, b = order[k].index, order[(k + 1) % n].index
            rec = links.get((min(a, b), max(a, b)))
            vertices.append(rec.vertex_majority if rec else None)
        found = _sign_search(order, vertices, require_closed_ccw=True)
        if found is None:
            continue
        gap, dirs = found
        # Tie-break: links whose traversal matches a recorded head/tail order.
        agreement = sum(
            1 for k in range(n)
            if ((order[(k + 1) % n].index, order[k].index) if move_direction >= 0
                else (order[k].index, order[(k + 1) % n].index)) in ordered_links
        )
        score = (round(gap, 9), -agreement)
        if best is None or score < best[0]:
            best = (score, cycle, dirs)
    if best is None:
        return None
    return best[1], best[2]


def assemble_shape(
    estimates: Sequence[EdgeEstimate],
    records: Sequence[ConnectivityRecord],
    move_direction: int = 1,
    closure_tol: float = 0.05,
) -> Optional[ShapeEstimate]:
    """Order the edge instances into a cycle and pick each edge's direction.

    Cycles come from significant connectivity records; every cycle is scored
    by the closure gap over all direction choices that keep the outline
    counterclockwise and agree with the recorded vertex convexity. When
    detection order is available it breaks ties between equal gaps.

    Without a fully linked cycle, an order linked everywhere but one
    neighbour pair is accepted when it closes within ``closure_tol`` of the
    perimeter.
    """
    if not estimates:
        return None
    instances = _instances(estimates)
    if len(instances) == 1:
        est = instances[0]
        return _build(instances, np.array([est.xi_candidates[0]]), closure_tol, cyclic=False)

    links = _links(records)
    n = len(instances)
    adjacency: List[List[int]] = [[] for _ in range(n)]
    for i in range(n):
        for j in range(n):
            if i == j:
                continue
            a, b = instances[i].index, instances[j].index
            if (min(a, b), max(a, b)) in links:
                adjacency[i].append(j)

    ordered_links = {(r.head, r.tail) for r in records if r.significant}
    if n >= 3:
        found = _best_cycle(instances, adjacency, links, ordered_links, move_direction, max_missing=0)
        if found is not None:
            cycle, dirs = found
            shape = _build([instances[i] for i in cycle], dirs, closure_tol, cyclic=True)
            logger.info(f"Assembled closed outline of {n} edges, gap {shape.gap_norm:.2f}")
            return shape

        found = _best_cycle(instances, adjacency, links, ordered_links, move_direction, max_missing=1)
        if found is not None:
            cycle, dirs = found
            shape = _build([instances[i] for i in cycle], dirs, closure_tol, cyclic=True)
            if shape.complete:
                logger.info(f"Closed outline of {n} edges across one unlinked vertex, gap {shape.gap_norm:.2f}")
                return shape
            logger.debug(f"Outline with one unlinked vertex leaves gap {shape.gap_norm:.2f}")

    logger.warning("No consistent edge cycle; returning an open path of edges")
    order_idx = _path_cover(instances, adjacency)
    order = [instances[i] for i in order_idx]
    found = _sign_search(order, [None] * n, require_closed_ccw=False)
    _, dirs = found
    return _build(order, dirs, closure_tol, cyclic=False)
