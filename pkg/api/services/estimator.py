"""Speed, edge length/direction and edge-count estimation from detection segments.

The estimator only sees what a deployment would know: the segments, the
extent of omega, the number of sensors and their range. Directions always
come in pairs because a target and its mirror image produce the same data.
"""
from __future__ import annotations

import logging
import math
from dataclasses import asdict, dataclass, replace
from enum import Enum
from typing import Dict, Iterable, List, Optional, Sequence, Tuple

import numpy as np

from .clustering import cluster_1d
from .errors import (
    ConfigurationError, DegenerateEstimateError, InvalidExpectationError,
    InvalidSpeedError, NoDetectionError,
)
from .extraction import ConsecutivePair, DetectionSegment, Vertex
from .geometry import TWO_PI, normalize_angle
from .simulation import DeploymentInfo

logger = logging.getLogger(__name__)

EPS_MU = 1e-9
SIGN_TOL = 1e-9
# Candidate pairs evaluated against all segments per block of the consistency matrix
_CHUNK = 512


@dataclass(frozen=True)
class EstimatorParams:
    s_small: float = 0.3
    s_large: float = 3.0
    max_pairs: int = 5000
    eps_l: float = 0.05
    band_low: float = 0.85
    band_high: float = 1.15
    k_max: int = 16
    min_support_abs: int = 10
    min_support_frac: float = 0.01
    n_c_min: int = 30
    closure_tol: float = 0.05
    max_components: int = 6
    consistency_method: str = 'mu'
    xi_tol: float = 0.1
    compensate_concave: bool = True

    def __post_init__(self):
        if not 0 < self.s_small < self.s_large:
            raise ConfigurationError("Need 0 < s_small < s_large")
        if not 0 < self.band_low <= 1.0 <= self.band_high:
            raise ConfigurationError("Consistency band must bracket 1")
        if self.max_pairs < 1 or self.k_max < 1 or self.max_components < 1:
            raise ConfigurationError("max_pairs, k_max and max_components must be positive")
        if self.consistency_method not in ('mu', 'xi'):
            raise ConfigurationError("consistency_method must be 'mu' or 'xi'")

    @classmethod
    def from_settings(cls, **overrides) -> 'EstimatorParams':
        from django.conf import settings

        values = dict(getattr(settings, 'SHAPESENSE_ESTIMATOR', {}))
        values.update(overrides)
        known = {f for f in cls.__dataclass_fields__}
        return cls(**{k: v for k, v in values.items() if k in known})

    @property
    def band(self) -> Tuple[float, float]:
        return self.band_low, self.band_high

    def min_support(self, pool_size: int) -> int:
        return max(self.min_support_abs, int(math.ceil(self.min_support_frac * pool_size)))

    def to_dict(self) -> Dict:
        return asdict(self)


# -- part 1: speed -----------------------------------------------------------

def estimate_speed(n_r: int, m_t: float, deployment: DeploymentInfo) -> float:
    """v̂ = π n_r |Ω| / (2 m_t n_s r_max)."""
    if m_t <= 0:
        raise NoDetectionError("Cannot estimate speed: the target was never detected (m_t = 0)")
    if deployment.n_s <= 0 or deployment.r_max <= 0:
        raise ConfigurationError("n_s and r_max must be positive")
    return math.pi * n_r * deployment.area / (2.0 * m_t * deployment.n_s * deployment.r_max)


def expected_nonzero_detectors(v: float, m_t: float, deployment: DeploymentInfo) -> float:
    return 2.0 * v * m_t * deployment.n_s * deployment.r_max / (math.pi * deployment.area)


# -- segment sets --------------------------------------------------------------

class PsiLabel(str, Enum):
    ZERO = 'Zero'
    SMALL_POS = 'SmallPos'
    SMALL_NEG = 'SmallNeg'
    LARGE_POS = 'LargePos'
    LARGE_NEG = 'LargeNeg'
    NEAR_PLUS_ONE = 'NearPlusOne'
    NEAR_MINUS_ONE = 'NearMinusOne'


@dataclass(frozen=True)
class PsiSet:
    label: PsiLabel
    members: Tuple[DetectionSegment, ...]
    sub: Optional[int] = None

    @property
    def name(self) -> str:
        return self.label.value if self.sub is None else f"{self.label.value}#{self.sub}"

    def __len__(self) -> int:
        return len(self.members)


def psi_label(seg: DetectionSegment, params: EstimatorParams) -> PsiLabel:
    if seg.forced_zero:
        return PsiLabel.ZERO
    s = seg.s_d
    if 0.0 <= s <= params.s_small:
        return PsiLabel.SMALL_POS
    if -params.s_small <= s < 0.0:
        return PsiLabel.SMALL_NEG
    if s >= params.s_large:
        return PsiLabel.LARGE_POS
    if s <= -params.s_large:
        return PsiLabel.LARGE_NEG
    return PsiLabel.NEAR_PLUS_ONE if s > 0 else PsiLabel.NEAR_MINUS_ONE


def classify_segments(
    segments: Iterable[DetectionSegment],
    params: Optional[EstimatorParams] = None,
    dt: float = 1.0,
    seed: int = 0,
) -> List[PsiSet]:
    """Partition finalized whole-edge segments by slope regime.

    The two steep sets are split further by clustering l_d·|s_d|, which
    tracks the edge length for nearly vertical edges.
    """
    params = params or EstimatorParams()
    buckets: Dict[PsiLabel, List[DetectionSegment]] = {label: [] for label in PsiLabel}
    for seg in segments:
        if not seg.valid_whole_edge:
            continue
        if seg.s_d is None:
            raise ValueError("classify_segments needs finalized slopes")
        buckets[psi_label(seg, params)].append(seg)

    sets: List[PsiSet] = []
    for label in PsiLabel:
        members = buckets[label]
        if not members:
            continue
        if label in (PsiLabel.LARGE_POS, PsiLabel.LARGE_NEG) and len(members) > 1:
            spans = np.array([s.l_d * abs(s.s_d) for s in members])
            result = cluster_1d(spans, dt, params.max_components, seed)
            for k in range(result.n_clusters):
                sets.append(PsiSet(label, tuple(members[i] for i in result.members(k)), k))
        else:
            sets.append(PsiSet(label, tuple(members)))
    logger.debug("Segment sets: " + ", ".join(f"{s.name}={len(s)}" for s in sets))
    return sets


# -- estimates -----------------------------------------------------------------

class EstimateSource(str, Enum):
    PARALLEL = 'ParallelPart'
    GENERAL = 'GeneralPart'


@dataclass(frozen=True)
class EdgeEstimate:
    index: int
    source: EstimateSource
    lambda_hat: float
    xi_candidates: Tuple[float, float]
    n_e_hat: float
    n_e_rounded: int
    support: Tuple[Tuple[int, int], ...] = ()
    e_nd: float = 0.0
    psi: str = ''
    ties: int = 0
    rescued: bool = False
    compensated: bool = False
    n_e_convex: Optional[float] = None

    @property
    def support_count(self) -> int:
        return len(self.support)

    def to_dict(self) -> Dict:
        return {
            'index': self.index,
            'source': self.source.value,
            'lambda': self.lambda_hat,
            'xi_candidates': list(self.xi_candidates),
            'n_e': self.n_e_hat,
            'n_e_rounded': self.n_e_rounded,
            'support_count': self.support_count,
            'e_nd': self.e_nd,
            'psi': self.psi,
            'rescued': self.rescued,
            'compensated': self.compensated,
        }


def expected_nd(lam: float, xi: float, v: float, m_t: float, deployment: DeploymentInfo) -> float:
    """Expected whole-edge detections of an unoccluded edge."""
    if lam < 0:
        raise ValueError(f"Edge length must be non-negative, got {lam}")
    r = deployment.r_max
    x = lam * abs(math.sin(xi))
    if x >= r:
        return 0.0
    theta = math.asin(x / r)
    core = 2.0 * r * math.cos(theta) - (math.pi - 2.0 * theta) * x
    return v * m_t * deployment.n_s * core / (2.0 * math.pi * deployment.area)


def estimate_edge_count(n_d: int, e_nd: float) -> Tuple[float, int]:
    if not e_nd > 0:
        raise InvalidExpectationError(f"Expected detection count must be positive, got {e_nd}")
    n_hat = n_d / e_nd
    return n_hat, int(math.floor(n_hat + 0.5))


def _count_for(lam: float, xi: float, n_d: int, v_hat: float, m_t: float, deployment: DeploymentInfo):
    e_nd = expected_nd(lam, xi, v_hat, m_t, deployment)
    if e_nd <= 0:
        logger.warning(f"Edge ({lam:.1f}, {xi:.3f}) is too steep to be detected whole; counting it once")
        return e_nd, 1.0, 1
    n_hat, rounded = estimate_edge_count(n_d, e_nd)
    return e_nd, n_hat, rounded


def estimate_parallel_edges(
    zero_set: Optional[PsiSet],
    v_hat: float,
    deployment: DeploymentInfo,
    m_t: float,
    params: Optional[EstimatorParams] = None,
    seed: int = 0,
    start_index: int = 0,
) -> List[EdgeEstimate]:
    """Horizontal edges: λ = v l_d, ξ ∈ {0, π}, one estimate per l_d cluster."""
    params = params or EstimatorParams()
    if zero_set is None or not zero_set.members:
        return []
    if not v_hat > 0:
        raise InvalidSpeedError(f"Speed estimate must be positive, got {v_hat}")
    lengths = np.array([v_hat * s.l_d for s in zero_set.members])
    result = cluster_1d(lengths, v_hat * deployment.dt, params.max_components, seed)

    estimates = []
    for k in range(result.n_clusters):
        idx = result.members(k)
        lam = float(lengths[idx].mean())
        e_nd, n_hat, rounded = _count_for(lam, 0.0, idx.size, v_hat, m_t, deployment)
        estimates.append(EdgeEstimate(
            index=start_index + len(estimates),
            source=EstimateSource.PARALLEL,
            lambda_hat=lam,
            xi_candidates=(0.0, math.pi),
            n_e_hat=n_hat,
            n_e_rounded=rounded,
            support=tuple(zero_set.members[i].key for i in idx),
            e_nd=e_nd,
            psi=zero_set.name,
        ))
    logger.info(f"Parallel part: {len(estimates)} horizontal edge estimate(s)")
    return estimates


# -- two-pair solution and consistency -------------------------------------------

@dataclass(frozen=True)
class TwoPairSolution:
    lambda_tilde: float
    mu: float
    xi_candidates: Tuple[float, float]


def _ls(seg) -> Tuple[float, float]:
    if isinstance(seg, DetectionSegment):
        return seg.l_d, seg.s_d
    l_d, s_d = seg
    return float(l_d), float(s_d)


def mu_of(lam, l_d, s_d, v_hat):
    """μ = ((λ/v)² + l_d²(1 − s_d²)) / (2 λ l_d / v); works elementwise."""
    ratio = np.asarray(lam, dtype=float) / v_hat
    l_d = np.asarray(l_d, dtype=float)
    s_d = np.asarray(s_d, dtype=float)
    value = (ratio ** 2 + l_d ** 2 * (1.0 - s_d ** 2)) / (2.0 * ratio * l_d)
    return float(value) if value.ndim == 0 else value


def xi_candidates_for(mu: float, s_d: float) -> Tuple[float, float]:
    xi0 = math.acos(min(1.0, max(-1.0, mu)))
    if s_d < 0:
        return normalize_angle(xi0), normalize_angle(math.pi - xi0)
    return normalize_angle(-xi0), normalize_angle(-math.pi + xi0)


def _solve_pairs(l1, s1, l2, s2, v_hat: float, eps_l: float):
    """Vectorised two-pair solve; returns (ok mask, λ̃, clamped μ)."""
    with np.errstate(divide='ignore', invalid='ignore'):
        separated = np.abs(l1 - l2) > eps_l * np.maximum(l1, l2)
        rad = l1 * l2 / (l2 - l1) * (l2 * (1.0 - s2 ** 2) - l1 * (1.0 - s1 ** 2))
        ok = separated & (l1 > 0) & (l2 > 0) & np.isfinite(rad) & (rad > 0)
        lam = np.where(ok, v_hat * np.sqrt(np.where(ok, rad, 1.0)), np.nan)
        mu = np.where(ok, mu_of(np.where(ok, lam, 1.0), l1, s1, v_hat), np.nan)
    ok &= np.abs(mu) <= 1.0 + EPS_MU
    return ok, lam, np.clip(mu, -1.0, 1.0)


def two_pair_solve(seg, seg2, v_hat: float, eps_l: float = 0.05) -> Optional[TwoPairSolution]:
    """Length and direction candidates from two segments of one edge; None when degenerate."""
    if not v_hat > 0:
        raise InvalidSpeedError(f"Speed estimate must be positive, got {v_hat}")
    l1, s1 = _ls(seg)
    l2, s2 = _ls(seg2)
    ok, lam, mu = _solve_pairs(np.array([l1]), np.array([s1]), np.array([l2]), np.array([s2]), v_hat, eps_l)
    if not ok[0]:
        return None
    return TwoPairSolution(float(lam[0]), float(mu[0]), xi_candidates_for(float(mu[0]), s1))


def _mu_band(l_d: np.ndarray, s_d: np.ndarray, lam: float, v_hat: float, band: Tuple[float, float]):
    """Range of |μ| over λ in [band_low·λ̃, band_high·λ̃]."""
    lo_lam, hi_lam = band[0] * lam, band[1] * lam
    a = mu_of(lo_lam, l_d, s_d, v_hat)
    b = mu_of(hi_lam, l_d, s_d, v_hat)
    lo = np.minimum(a, b)
    hi = np.maximum(a, b)
    # μ(λ) has its minimum sqrt(1 - s²) at λ = v l_d sqrt(1 - s²) when |s| < 1.
    one_minus = 1.0 - s_d ** 2
    lam_star = v_hat * l_d * np.sqrt(np.clip(one_minus, 0.0, None))
    inside = (one_minus > 0) & (lam_star >= lo_lam) & (lam_star <= hi_lam)
    lo = np.where(inside, np.sqrt(np.clip(one_minus, 0.0, None)), lo)
    crosses = (lo <= 0) & (hi >= 0)
    abs_lo = np.where(crosses, 0.0, np.minimum(np.abs(lo), np.abs(hi)))
    abs_hi = np.maximum(np.abs(lo), np.abs(hi))
    return np.minimum(abs_lo, 1.0), np.minimum(abs_hi, 1.0)


def consistency_mask(
    l_d: np.ndarray,
    s_d: np.ndarray,
    lam: float,
    xi: float,
    v_hat: float,
    band: Tuple[float, float] = (0.85, 1.15),
    method: str = 'mu',
    xi_tol: float = 0.1,
) -> np.ndarray:
    """Which segments agree with the temporary estimate (λ̃, ξ̃)."""
    l_d = np.asarray(l_d, dtype=float)
    s_d = np.asarray(s_d, dtype=float)
    xi = np.asarray(xi, dtype=float)
    sign_ok = s_d * np.sin(xi) <= SIGN_TOL
    if method == 'xi':
        mu = mu_of(lam, l_d, s_d, v_hat)
        mu = np.atleast_1d(mu)
        usable = np.abs(mu) <= 1.0 + EPS_MU
        xi0 = np.arccos(np.clip(mu, -1.0, 1.0))
        c1 = np.where(s_d < 0, xi0, -xi0)
        c2 = np.where(s_d < 0, math.pi - xi0, -math.pi + xi0)
        d1 = np.abs((c1 - xi + math.pi) % TWO_PI - math.pi)
        d2 = np.abs((c2 - xi + math.pi) % TWO_PI - math.pi)
        return usable & sign_ok & (np.minimum(d1, d2) <= xi_tol)
    lo, hi = _mu_band(l_d, s_d, lam, v_hat, band)
    c = np.abs(np.cos(xi))
    return sign_ok & (c >= lo - 1e-12) & (c <= hi + 1e-12)


def consistency_test(
    seg,
    lam: float,
    xi: float,
    v_hat: float,
    band: Tuple[float, float] = (0.85, 1.15),
    method: str = 'mu',
    xi_tol: float = 0.1,
) -> bool:
    l_d, s_d = _ls(seg)
    return bool(consistency_mask(np.array([l_d]), np.array([s_d]), lam, xi, v_hat, band, method, xi_tol)[0])


def _sample_pairs(n: int, max_pairs: int, rng: np.random.Generator) -> Tuple[np.ndarray, np.ndarray]:
    if n < 2:
        return np.zeros(0, dtype=int), np.zeros(0, dtype=int)
    if n * (n - 1) // 2 <= max_pairs:
        return np.triu_indices(n, 1)
    i = rng.integers(0, n, max_pairs)
    j = rng.integers(0, n - 1, max_pairs)
    j = j + (j >= i)
    pairs = np.unique(np.stack([np.minimum(i, j), np.maximum(i, j)], axis=1), axis=0)
    return pairs[:, 0], pairs[:, 1]


def _temporary_estimates(
    L: np.ndarray,
    S: np.ndarray,
    members_by_set: Sequence[Tuple[str, np.ndarray]],
    active: np.ndarray,
    v_hat: float,
    params: EstimatorParams,
    rng: np.random.Generator,
):
    """Solve freshly sampled pairs of the still active segments of every set.

    Returns ``(lams, xis, names, columns, consistent)`` where ``consistent[i, j]``
    tells whether pool segment ``columns[j]`` agrees with temporary estimate
    ``i``, or None when no pair is solvable.
    """
    lams, xis, names = [], [], []
    for name, members in members_by_set:
        members = members[active[members]]
        a, b = _sample_pairs(members.size, params.max_pairs, rng)
        ia, ib = members[a], members[b]
        ok, lam, mu = _solve_pairs(L[ia], S[ia], L[ib], S[ib], v_hat, params.eps_l)
        for k in np.flatnonzero(ok):
            lams.append(lam[k])
            xis.append(xi_candidates_for(float(mu[k]), float(S[ia[k]])))
            names.append(name)
    if not lams:
        return None

    lams = np.array(lams)
    columns = np.flatnonzero(active)
    L_act, S_act = L[columns], S[columns]
    xi_first = np.array([c[0] for c in xis])
    consistent = np.zeros((lams.size, columns.size), dtype=bool)
    for start in range(0, lams.size, _CHUNK):
        stop = min(start + _CHUNK, lams.size)
        consistent[start:stop] = consistency_mask(
            L_act[None, :], S_act[None, :], lams[start:stop, None], xi_first[start:stop, None],
            v_hat, params.band, params.consistency_method, params.xi_tol,
        )
    return lams, xis, names, columns, consistent


def adopt_estimates(
    nonzero_sets: Sequence[PsiSet],
    v_hat: float,
    deployment: DeploymentInfo,
    m_t: float,
    params: Optional[EstimatorParams] = None,
    rng: Optional[np.random.Generator] = None,
    start_index: int = 0,
) -> List[EdgeEstimate]:
    """Greedy adoption of the temporary estimate with the most consistent segments.

    Every iteration samples new pairs from the segments still in the pool;
    the adopted estimate removes its supporting segments. Iteration stops
    when the best support drops below the minimum or after ``k_max``
    adoptions.
    """
    params = params or EstimatorParams()
    rng = rng if rng is not None else np.random.default_rng(0)
    if not v_hat > 0:
        raise InvalidSpeedError(f"Speed estimate must be positive, got {v_hat}")

    pool: List[DetectionSegment] = [seg for psi in nonzero_sets for seg in psi.members]
    if not pool:
        return []
    L = np.array([s.l_d for s in pool])
    S = np.array([s.s_d for s in pool])

    members_by_set = []
    offset = 0
    for psi in nonzero_sets:
        members_by_set.append((psi.name, np.arange(offset, offset + len(psi))))
        offset += len(psi)

    active = np.ones(L.size, dtype=bool)
    min_support = params.min_support(L.size)
    estimates: List[EdgeEstimate] = []

    for k in range(params.k_max):
        found = _temporary_estimates(L, S, members_by_set, active, v_hat, params, rng)
        if found is None:
            if k == 0:
                logger.warning("No usable segment pairs for the general part")
            else:
                logger.debug(f"Adoption stops at k={k + 1}: no solvable pair left")
            break
        lams, xis, names, columns, consistent = found
        counts = consistent.sum(axis=1)
        best = int(np.argmax(counts))
        if counts[best] < min_support:
            logger.debug(f"Adoption stops at k={k + 1}: best support {counts[best]} < {min_support}")
            break
        ties = int(np.count_nonzero(counts == counts[best])) - 1
        if ties:
            logger.warning(f"Adoption k={k + 1}: {ties} tied candidate(s), keeping pair #{best}")
        support = columns[consistent[best]]
        lam = float(lams[best])
        xi_c = xis[best]
        n_d = int(support.size)
        e_nd, n_hat, rounded = _count_for(lam, xi_c[0], n_d, v_hat, m_t, deployment)
        estimates.append(EdgeEstimate(
            index=start_index + len(estimates),
            source=EstimateSource.GENERAL,
            lambda_hat=lam,
            xi_candidates=xi_c,
            n_e_hat=n_hat,
            n_e_rounded=rounded,
            support=tuple(pool[i].key for i in support),
            e_nd=e_nd,
            psi=names[best],
            ties=ties,
        ))
        logger.debug(f"Adopted λ={lam:.2f}, ξ={xi_c} with {n_d} segments")
        active[support] = False
        if not active.any():
            break

    logger.info(f"General part: adopted {len(estimates)} estimate(s) from {L.size} segments")
    return estimates


# -- order --------------------------------------------------------------------

@dataclass(frozen=True)
class ConnectivityRecord:
    head: int
    tail: int
    head_set: str
    tail_set: str
    n_c: int
    concave_count: int
    vertex_majority: Vertex
    significant: bool

    def to_dict(self) -> Dict:
        return {
            'head': self.head,
            'tail': self.tail,
            'head_set': self.head_set,
            'tail_set': self.tail_set,
            'n_c': self.n_c,
            'concave_count': self.concave_count,
            'vertex': self.vertex_majority.value,
            'significant': self.significant,
        }


def support_assignment(estimates: Iterable[EdgeEstimate]) -> Dict[Tuple[int, int], int]:
    assignment = {}
    for est in estimates:
        for key in est.support:
            assignment.setdefault(key, est.index)
    return assignment


def connectivity(
    pairs: Iterable[ConsecutivePair],
    assignment: Dict[Tuple[int, int], int],
    estimates: Sequence[EdgeEstimate] = (),
    n_c_min: int = 30,
) -> List[ConnectivityRecord]:
    """Count consecutive detections per (head estimate, tail estimate)."""
    names = {e.index: e.psi for e in estimates}
    tallies: Dict[Tuple[int, int], List[int]] = {}
    for pair in pairs:
        head = assignment.get(pair.head.key)
        tail = assignment.get(pair.tail.key)
        if head is None or tail is None:
            continue
        tally = tallies.setdefault((head, tail), [0, 0])
        tally[0] += 1
        if pair.vertex == Vertex.CONCAVE:
            tally[1] += 1

    records = []
    for (head, tail), (n_c, concave) in sorted(tallies.items()):
        majority = Vertex.CONCAVE if concave > n_c - concave else Vertex.CONVEX
        records.append(ConnectivityRecord(
            head, tail, names.get(head, ''), names.get(tail, ''),
            n_c, concave, majority, n_c >= n_c_min,
        ))
    significant = sum(1 for r in records if r.significant)
    logger.info(f"Connectivity: {len(records)} record(s), {significant} significant")
    return records


def rescue_counts(estimates: Sequence[EdgeEstimate], records: Iterable[ConnectivityRecord]) -> List[EdgeEstimate]:
    """An estimate rounded to zero edges but well connected counts as one edge."""
    linked = set()
    for rec in records:
        if rec.significant:
            linked.update((rec.head, rec.tail))
    out = []
    for est in estimates:
        if est.n_e_rounded == 0 and est.index in linked:
            logger.debug(f"Rescued estimate {est.index} through connectivity")
            est = replace(est, n_e_rounded=1, rescued=True)
        out.append(est)
    return out


# -- diagnostics --------------------------------------------------------------

def length_error_sensitivity(seg, seg2, lam: Optional[float], v_hat: float) -> float:
    """∂λ/∂l_d of the two-pair length with the slopes held fixed."""
    l1, s1 = _ls(seg)
    l2, s2 = _ls(seg2)
    if lam is None:
        sol = two_pair_solve((l1, s1), (l2, s2), v_hat, eps_l=0.0)
        if sol is None:
            raise DegenerateEstimateError("Segments do not determine a length")
        lam = sol.lambda_tilde
    x = l1 / l2
    if abs(1.0 - x) < 1e-12 or lam <= 0:
        raise DegenerateEstimateError("Sensitivity undefined for equal durations")
    dr1 = v_hat * l1 * s1
    dr2 = v_hat * l2 * s2
    v2 = v_hat ** 2
    brace = 2.0 * (dr1 ** 2 / l1 - v2 * l1) - (dr2 ** 2 / l2 - v2 * l2) + lam ** 2 / l2
    return brace / (2.0 * lam * (1.0 - x))
