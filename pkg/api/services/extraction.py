"""Range trace segmentation into whole-edge detections.

A detection run (consecutive positive samples) is cut at jumps and at slope
changes; every piece becomes a DetectionSegment whose boundary events decide
whether it covers a whole edge.
"""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass, replace
from enum import Enum
from typing import Dict, Iterable, List, Optional, Sequence, Tuple

import numpy as np

from .errors import ConfigurationError, InvalidSpeedError
from .simulation import RangeTrace

logger = logging.getLogger(__name__)


class BoundaryEvent(str, Enum):
    SLOPE_CHANGE = 'SlopeChange'
    JUMP_DOWN = 'JumpDown'
    JUMP_UP = 'JumpUp'
    APPEAR = 'AppearBelowMax'
    DISAPPEAR = 'DisappearBelowMax'
    TRACE_EDGE = 'TraceEdge'
    LOST_GAP = 'LostGap'


START_ADMISSIBLE = frozenset({BoundaryEvent.SLOPE_CHANGE, BoundaryEvent.JUMP_DOWN, BoundaryEvent.APPEAR})
END_ADMISSIBLE = frozenset({BoundaryEvent.SLOPE_CHANGE, BoundaryEvent.JUMP_UP, BoundaryEvent.DISAPPEAR})

LOST_POLICIES = ('invalidate', 'split')
SLOPE_METHODS = ('endpoint', 'least_squares')

# Sample states inside a trace
_NONE, _LOST, _ZERO, _POS = 0, 1, 2, 3

_R_FLOOR = 1e-12


@dataclass(frozen=True)
class ExtractionParams:
    tol_slope_change: float = 0.05
    min_samples: int = 3
    jump_factor: float = 5.0
    speed_prior: float = 1.0
    eps_max: float = 1e-6
    zero_step_tol: float = 0.1
    r_max: float = 100.0
    endpoint_centering: bool = True
    slope_method: str = 'endpoint'
    lost_policy: str = 'invalidate'

    def __post_init__(self):
        if self.tol_slope_change <= 0 or self.jump_factor <= 0 or self.speed_prior <= 0:
            raise ConfigurationError("Extraction thresholds must be positive")
        if self.min_samples < 2:
            raise ConfigurationError("min_samples must be at least 2")
        if self.r_max <= 0:
            raise ConfigurationError("r_max must be positive")
        if self.lost_policy not in LOST_POLICIES:
            raise ConfigurationError(f"lost_policy must be one of {LOST_POLICIES}")
        if self.slope_method not in SLOPE_METHODS:
            raise ConfigurationError(f"slope_method must be one of {SLOPE_METHODS}")

    def with_r_max(self, r_max: float) -> 'ExtractionParams':
        return replace(self, r_max=float(r_max))

    def to_dict(self) -> Dict:
        return {
            'tol_slope_change': self.tol_slope_change,
            'min_samples': self.min_samples,
            'jump_factor': self.jump_factor,
            'speed_prior': self.speed_prior,
            'eps_max': self.eps_max,
            'zero_step_tol': self.zero_step_tol,
            'r_max': self.r_max,
            'endpoint_centering': self.endpoint_centering,
            'slope_method': self.slope_method,
            'lost_policy': self.lost_policy,
        }


@dataclass(frozen=True)
class DetectionSegment:
    sensor_id: int
    index: int
    t_s: float
    t_e: float
    r_s: float
    r_e: float
    start_event: BoundaryEvent
    end_event: BoundaryEvent
    n_samples: int = 0
    max_step: float = math.inf
    raw_slope: Optional[float] = None
    s_d: Optional[float] = None
    forced_zero: bool = False

    def __post_init__(self):
        if not self.t_e > self.t_s:
            raise ValueError(f"Segment must have t_e > t_s (got {self.t_s}, {self.t_e})")
        if self.raw_slope is None:
            object.__setattr__(self, 'raw_slope', (self.r_e - self.r_s) / (self.t_e - self.t_s))

    @property
    def l_d(self) -> float:
        return self.t_e - self.t_s

    @property
    def key(self) -> Tuple[int, int]:
        return self.sensor_id, self.index

    @property
    def mid_time(self) -> float:
        return 0.5 * (self.t_s + self.t_e)

    @property
    def valid_whole_edge(self) -> bool:
        return self.start_event in START_ADMISSIBLE and self.end_event in END_ADMISSIBLE

    def to_dict(self) -> Dict:
        return {
            'sensor_id': self.sensor_id,
            'index': self.index,
            't_s': self.t_s,
            't_e': self.t_e,
            'r_s': self.r_s,
            'r_e': self.r_e,
            'l_d': self.l_d,
            's_d': self.s_d,
            'raw_slope': self.raw_slope,
            'forced_zero': self.forced_zero,
            'n_samples': self.n_samples,
            'max_step': self.max_step if math.isfinite(self.max_step) else None,
            'start_event': self.start_event.value,
            'end_event': self.end_event.value,
            'valid': self.valid_whole_edge,
        }

    @classmethod
    def from_dict(cls, data: Dict) -> 'DetectionSegment':
        max_step = data.get('max_step')
        return cls(
            sensor_id=int(data['sensor_id']),
            index=int(data.get('index', 0)),
            t_s=float(data['t_s']),
            t_e=float(data['t_e']),
            r_s=float(data['r_s']),
            r_e=float(data['r_e']),
            start_event=BoundaryEvent(data['start_event']),
            end_event=BoundaryEvent(data['end_event']),
            n_samples=int(data.get('n_samples', 0)),
            max_step=math.inf if max_step is None else float(max_step),
            raw_slope=data.get('raw_slope'),
            s_d=data.get('s_d'),
            forced_zero=bool(data.get('forced_zero', False)),
        )


class Vertex(str, Enum):
    CONVEX = 'Convex'
    CONCAVE = 'Concave'


class PairOrder(str, Enum):
    FIRST_NEARER_HEAD = 'FirstNearerHead'
    FIRST_NEARER_TAIL = 'FirstNearerTail'


@dataclass(frozen=True)
class ConsecutivePair:
    first: DetectionSegment
    second: DetectionSegment
    vertex: Vertex
    order: PairOrder

    @property
    def head(self) -> DetectionSegment:
        return self.first if self.order == PairOrder.FIRST_NEARER_HEAD else self.second

    @property
    def tail(self) -> DetectionSegment:
        return self.second if self.order == PairOrder.FIRST_NEARER_HEAD else self.first

    def to_dict(self) -> Dict:
        return {
            'sensor_id': self.first.sensor_id,
            'first': self.first.index,
            'second': self.second.index,
            't': self.first.t_e,
            'vertex': self.vertex.value,
            'order': self.order.value,
        }


@dataclass
class _Piece:
    """Sample range of one segment plus how each end was produced."""
    i0: int
    i1: int
    start: BoundaryEvent
    end: BoundaryEvent
    knee_start: Optional[Tuple[float, float]] = None
    knee_end: Optional[Tuple[float, float]] = None


def _states(trace: RangeTrace, params: ExtractionParams) -> Tuple[np.ndarray, np.ndarray]:
    values = trace.values.copy()
    state = np.full(values.shape, _NONE, dtype=np.int8)
    present = ~np.isnan(values)
    state[present & (values > 0.0)] = _POS
    state[present & (values <= 0.0)] = _ZERO
    if params.lost_policy == 'invalidate':
        state[trace.lost] = _LOST
    else:
        state[trace.lost] = _NONE
    values[state != _POS] = np.nan
    return values, state


def _runs(state: np.ndarray) -> List[Tuple[int, int]]:
    pos = np.concatenate([[False], state == _POS, [False]])
    edges = np.flatnonzero(np.diff(pos.astype(np.int8)))
    return [(int(a), int(b) - 1) for a, b in zip(edges[::2], edges[1::2])]


def _jump_cuts(r: np.ndarray, a: int, b: int, dt: float, params: ExtractionParams) -> List[int]:
    """Indices k where r[k] -> r[k + 1] is a jump."""
    cuts = []
    steps = np.diff(r[a:b + 1])
    for j, step in enumerate(steps):
        rate = 0.0
        if j > 0:
            rate = max(rate, abs(steps[j - 1]) / dt)
        if j + 1 < steps.size:
            rate = max(rate, abs(steps[j + 1]) / dt)
        threshold = params.jump_factor * dt * (params.speed_prior + rate)
        if abs(step) > threshold:
            cuts.append(a + j)
    return cuts


def _line(r: np.ndarray, t: np.ndarray, i: int, j: int) -> Tuple[float, float]:
    """Slope and value at t[i] of the line through samples i and j."""
    if i == j:
        return 0.0, float(r[i])
    return float((r[j] - r[i]) / (t[j] - t[i])), float(r[i])


def _knee(r: np.ndarray, t: np.ndarray, f0: int, f1: int) -> Tuple[float, float]:
    m1, r1 = _line(r, t, f0 - 1, f0)
    r1 = float(r[f0])
    m2, r2 = _line(r, t, f1, f1 + 1)
    if abs(m1 - m2) < 1e-12:
        t_star = 0.5 * (t[f0] + t[f1])
    else:
        t_star = (r2 - r1 + m1 * t[f0] - m2 * t[f1]) / (m1 - m2)
    t_star = float(min(max(t_star, t[f0]), t[f1]))
    r_star = 0.5 * ((r1 + m1 * (t_star - t[f0])) + (r2 + m2 * (t_star - t[f1])))
    return t_star, r_star


def _split_piece(
    r: np.ndarray, t: np.ndarray, piece: _Piece, params: ExtractionParams, dt: float,
) -> Tuple[List[_Piece], int]:
    """Cut a jump-free piece at slope changes."""
    p, q = piece.i0, piece.i1
    if q - p < 2:
        return [piece], 0
    second = np.abs(r[p:q - 1] - 2.0 * r[p + 1:q] + r[p + 2:q + 1]) / (dt * dt)
    flagged = np.flatnonzero(second > params.tol_slope_change) + p + 1
    if flagged.size == 0:
        return [piece], 0

    clusters = []
    start = prev = int(flagged[0])
    for k in flagged[1:]:
        k = int(k)
        if k == prev + 1:
            prev = k
            continue
        clusters.append((start, prev))
        start = prev = k
    clusters.append((start, prev))

    out: List[_Piece] = []
    dropped = 0
    current = _Piece(p, q, piece.start, piece.end, piece.knee_start, None)
    for f0, f1 in clusters:
        if f1 - f0 <= 1:
            knee = _knee(r, t, f0, f1)
            out.append(_Piece(current.i0, f0, current.start, BoundaryEvent.SLOPE_CHANGE, current.knee_start, knee))
            current = _Piece(f1, q, BoundaryEvent.SLOPE_CHANGE, piece.end, knee, None)
        else:
            # Too short to resolve; the samples between the two knees are dropped.
            out.append(_Piece(current.i0, f0, current.start, BoundaryEvent.SLOPE_CHANGE, current.knee_start, None))
            current = _Piece(f1, q, BoundaryEvent.SLOPE_CHANGE, piece.end, None, None)
            dropped += 1
    current.knee_end = piece.knee_end
    out.append(current)
    return out, dropped


def _neighbour_event(state: int, at_start: bool, extrapolated: float, params: ExtractionParams) -> BoundaryEvent:
    if state == _LOST:
        return BoundaryEvent.LOST_GAP
    if state == _NONE and extrapolated < params.r_max - params.eps_max:
        return BoundaryEvent.APPEAR if at_start else BoundaryEvent.DISAPPEAR
    return BoundaryEvent.TRACE_EDGE


def _piece_slope(r: np.ndarray, t: np.ndarray, piece: _Piece) -> float:
    return _line(r, t, piece.i0, piece.i1)[0]


def segment_trace(trace: RangeTrace, params: Optional[ExtractionParams] = None) -> Tuple[List[DetectionSegment], int]:
    """Split a trace into detection segments.

    Returns the kept segments and the number of pieces discarded for having
    fewer than ``min_samples`` samples (or lying between unresolved knees).
    """
    params = params or ExtractionParams()
    dt = trace.dt
    r, state = _states(trace, params)
    t = trace.times
    n = r.size

    pieces: List[_Piece] = []
    discarded = 0
    for a, b in _runs(state):
        jumps = _jump_cuts(r, a, b, dt, params)
        bounds = [a] + [k + 1 for k in jumps]
        ends = [k for k in jumps] + [b]
        run_pieces = []
        for idx, (i0, i1) in enumerate(zip(bounds, ends)):
            start = BoundaryEvent.TRACE_EDGE
            end = BoundaryEvent.TRACE_EDGE
            if idx > 0:
                k = jumps[idx - 1]
                start = BoundaryEvent.JUMP_DOWN if r[k + 1] < r[k] else BoundaryEvent.JUMP_UP
            if idx < len(jumps):
                k = jumps[idx]
                end = BoundaryEvent.JUMP_DOWN if r[k + 1] < r[k] else BoundaryEvent.JUMP_UP
            split, dropped = _split_piece(r, t, _Piece(i0, i1, start, end), params, dt)
            discarded += dropped
            run_pieces.extend(split)

        # Events at the edges of the run depend on the neighbouring sample.
        first, last = run_pieces[0], run_pieces[-1]
        slope = _piece_slope(r, t, first)
        if a > 0:
            first.start = _neighbour_event(int(state[a - 1]), True, r[a] - slope * dt, params)
        slope = _piece_slope(r, t, last)
        if b < n - 1:
            last.end = _neighbour_event(int(state[b + 1]), False, r[b] + slope * dt, params)
        pieces.extend(run_pieces)

    segments: List[DetectionSegment] = []
    for piece in pieces:
        count = piece.i1 - piece.i0 + 1
        if count < params.min_samples:
            discarded += 1
            continue
        segments.append(_build_segment(trace.sensor_id, len(segments), r, t, piece, params, dt))

    if discarded:
        logger.debug(f"Sensor {trace.sensor_id}: discarded {discarded} short pieces")
    return segments, discarded


def _build_segment(
    sensor_id: int, index: int, r: np.ndarray, t: np.ndarray, piece: _Piece, params: ExtractionParams, dt: float,
) -> DetectionSegment:
    i0, i1 = piece.i0, piece.i1
    slope = _piece_slope(r, t, piece)
    half = 0.5 * dt if params.endpoint_centering else 0.0

    if piece.knee_start is not None:
        t_s, r_s = piece.knee_start
    else:
        t_s, r_s = t[i0] - half, r[i0] - slope * half
    if piece.knee_end is not None:
        t_e, r_e = piece.knee_end
    else:
        t_e, r_e = t[i1] + half, r[i1] + slope * half

    r_s = float(min(max(r_s, _R_FLOOR), params.r_max))
    r_e = float(min(max(r_e, _R_FLOOR), params.r_max))
    steps = np.abs(np.diff(r[i0:i1 + 1]))
    max_step = float(steps.max()) if steps.size else 0.0

    if params.slope_method == 'least_squares' and i1 > i0:
        raw_slope = float(np.polyfit(t[i0:i1 + 1], r[i0:i1 + 1], 1)[0])
    else:
        raw_slope = (r_e - r_s) / (t_e - t_s)

    return DetectionSegment(
        sensor_id=sensor_id,
        index=index,
        t_s=float(t_s),
        t_e=float(t_e),
        r_s=r_s,
        r_e=r_e,
        start_event=piece.start,
        end_event=piece.end,
        n_samples=i1 - i0 + 1,
        max_step=max_step,
        raw_slope=float(raw_slope),
    )


def extract_segments(
    traces: Iterable[RangeTrace], params: Optional[ExtractionParams] = None,
) -> Tuple[List[DetectionSegment], int]:
    params = params or ExtractionParams()
    segments: List[DetectionSegment] = []
    discarded = 0
    for trace in traces:
        found, dropped = segment_trace(trace, params)
        segments.extend(found)
        discarded += dropped
    valid = sum(1 for s in segments if s.valid_whole_edge)
    logger.info(f"Extracted {len(segments)} segments ({valid} whole-edge), discarded {discarded}")
    return segments, discarded


def finalize_sd(seg: DetectionSegment, v_hat: float, zero_step_tol: float = 0.1) -> DetectionSegment:
    """Scale the raw slope by the speed estimate; small steps force s_d = 0."""
    if not v_hat > 0:
        raise InvalidSpeedError(f"Speed estimate must be positive, got {v_hat}")
    if seg.max_step < zero_step_tol:
        return replace(seg, s_d=0.0, forced_zero=True)
    return replace(seg, s_d=seg.raw_slope / v_hat, forced_zero=False)


def apply_sd_noise(
    segments: Sequence[DetectionSegment], sigma_s: float, rng: np.random.Generator,
) -> List[DetectionSegment]:
    """Add N(0, sigma_s²) to every finalized slope; forced zeros stay zero."""
    if sigma_s < 0:
        raise ConfigurationError(f"sigma_s must be non-negative, got {sigma_s}")
    if sigma_s == 0 or not segments:
        return list(segments)
    noise = rng.normal(0.0, sigma_s, len(segments))
    out = []
    for seg, eps in zip(segments, noise):
        if seg.s_d is None:
            raise ValueError("apply_sd_noise needs finalized slopes")
        if seg.forced_zero:
            out.append(seg)
        else:
            out.append(replace(seg, s_d=seg.s_d + float(eps)))
    return out


def count_nonzero_detectors(traces: Iterable[RangeTrace]) -> int:
    """Sensors that saw the target at a positive range and were never inside it."""
    count = 0
    for trace in traces:
        seen = trace.values[~np.isnan(trace.values) & ~trace.lost]
        if seen.size and (seen > 0).any() and not (seen == 0).any():
            count += 1
    return count


def pair_consecutive(
    segments: Sequence[DetectionSegment],
    v_hat: float,
    dt: float = 1.0,
    move_direction: int = 1,
) -> List[ConsecutivePair]:
    """Adjacent whole-edge segments of one sensor joined at a slope change."""
    by_sensor: Dict[int, List[DetectionSegment]] = {}
    for seg in segments:
        by_sensor.setdefault(seg.sensor_id, []).append(seg)

    order = PairOrder.FIRST_NEARER_HEAD if move_direction >= 0 else PairOrder.FIRST_NEARER_TAIL
    pairs: List[ConsecutivePair] = []
    for sensor_id in sorted(by_sensor):
        ordered = sorted(by_sensor[sensor_id], key=lambda s: s.t_s)
        for first, second in zip(ordered[:-1], ordered[1:]):
            if first.s_d is None or second.s_d is None:
                continue
            if not (first.valid_whole_edge and second.valid_whole_edge):
                continue
            if first.end_event != BoundaryEvent.SLOPE_CHANGE or second.start_event != BoundaryEvent.SLOPE_CHANGE:
                continue
            if abs(first.t_e - second.t_s) > 1e-9 * max(1.0, abs(first.t_e)):
                continue
            eps_cont = 2.0 * v_hat * dt * max(1.0, abs(first.s_d), abs(second.s_d))
            if abs(first.r_e - second.r_s) > eps_cont:
                continue
            vertex = Vertex.CONCAVE if first.s_d > second.s_d else Vertex.CONVEX
            pairs.append(ConsecutivePair(first, second, vertex, order))
    return pairs
