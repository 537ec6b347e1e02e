"""Full estimation from range traces: speed, edges, order, concave counts, shape."""
import logging
import math
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence

import numpy as np

from .concave import concave_compensation
from .errors import DegenerateEstimateError, NoDetectionError
from .estimator import (
    ConnectivityRecord, EdgeEstimate, EstimatorParams, PsiLabel, PsiSet,
    adopt_estimates, classify_segments, connectivity, estimate_parallel_edges,
    estimate_speed, rescue_counts, support_assignment,
)
from .extraction import (
    ConsecutivePair, DetectionSegment, ExtractionParams, apply_sd_noise,
    count_nonzero_detectors, extract_segments, finalize_sd, pair_consecutive,
)
from .seeds import int_seed, stream
from .shape import ShapeEstimate, assemble_shape
from .simulation import DeploymentInfo, RangeTrace

logger = logging.getLogger(__name__)


@dataclass
class EstimationResult:
    v_hat: float
    n_r: int
    m_t: float
    segments: List[DetectionSegment]
    discarded: int
    pairs: List[ConsecutivePair]
    psi_sets: List[PsiSet]
    estimates: List[EdgeEstimate]
    connectivity: List[ConnectivityRecord]
    shape: Optional[ShapeEstimate]
    params: EstimatorParams = field(default_factory=EstimatorParams)

    @property
    def valid_segments(self) -> List[DetectionSegment]:
        return [s for s in self.segments if s.valid_whole_edge]

    @property
    def edge_count(self) -> int:
        return sum(e.n_e_rounded for e in self.estimates)

    def to_dict(self) -> Dict:
        return {
            'v_hat': self.v_hat,
            'n_r': self.n_r,
            'm_t': self.m_t,
            'segment_count': len(self.segments),
            'valid_segment_count': len(self.valid_segments),
            'edges': [e.to_dict() for e in self.estimates],
            'connectivity': [r.to_dict() for r in self.connectivity],
            'shape': self.shape.to_dict() if self.shape else None,
        }


def observation_span(traces: Sequence[RangeTrace]) -> float:
    """Time from the first to the last detection over all sensors."""
    first, last = math.inf, -math.inf
    for trace in traces:
        hits = np.flatnonzero(trace.detected)
        if hits.size:
            times = trace.times
            first = min(first, float(times[hits[0]]))
            last = max(last, float(times[hits[-1]]))
    return last - first if last >= first else 0.0


def run_estimation(
    traces: Sequence[RangeTrace],
    deployment: DeploymentInfo,
    m_t: Optional[float] = None,
    extraction: Optional[ExtractionParams] = None,
    params: Optional[EstimatorParams] = None,
    seed: int = 0,
    sigma_s: float = 0.0,
    move_direction: int = 1,
) -> EstimationResult:
    params = params or EstimatorParams()
    extraction = (extraction or ExtractionParams()).with_r_max(deployment.r_max)
    if m_t is None:
        m_t = observation_span(traces)

    segments, discarded = extract_segments(traces, extraction)
    n_r = count_nonzero_detectors(traces)
    if m_t <= 0 or n_r == 0:
        raise NoDetectionError("No sensor detected the target at a positive range")

    v_hat = estimate_speed(n_r, m_t, deployment)
    logger.info(f"n_r={n_r}, m_t={m_t:g}, v_hat={v_hat:.4f}")

    segments = [finalize_sd(s, v_hat, extraction.zero_step_tol) for s in segments]
    segments = apply_sd_noise(segments, sigma_s, stream(seed, 'noise'))

    gmm_seed = int_seed(seed, 'gmm')
    sets = classify_segments(segments, params, deployment.dt, gmm_seed)
    zero_set = next((s for s in sets if s.label == PsiLabel.ZERO), None)
    estimates = estimate_parallel_edges(zero_set, v_hat, deployment, m_t, params, gmm_seed)
    estimates += adopt_estimates(
        [s for s in sets if s.label != PsiLabel.ZERO], v_hat, deployment, m_t, params,
        stream(seed, 'pairs'), start_index=len(estimates),
    )
    if not estimates:
        raise DegenerateEstimateError(
            f"No edge estimate from {sum(s.valid_whole_edge for s in segments)} whole-edge detections"
        )

    pairs = pair_consecutive(segments, v_hat, deployment.dt, move_direction)
    records = connectivity(pairs, support_assignment(estimates), estimates, params.n_c_min)
    estimates = rescue_counts(estimates, records)
    if params.compensate_concave:
        estimates = concave_compensation(estimates, records, v_hat, m_t, deployment, params)
    shape = assemble_shape(estimates, records, move_direction, params.closure_tol)

    return EstimationResult(
        v_hat=v_hat,
        n_r=n_r,
        m_t=m_t,
        segments=segments,
        discarded=discarded,
        pairs=pairs,
        psi_sets=sets,
        estimates=estimates,
        connectivity=records,
        shape=shape,
        params=params,
    )
