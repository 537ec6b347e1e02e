"""Expected detection counts at concave vertices.

At a concave vertex one edge hides part of its neighbour from some sensor
directions. ``f_theta_x`` integrates ``r_max |sin z| - x`` over the sensor
directions that still see the current edge whole; the domain depends on
which angular zone each of the two edge directions falls in.
"""
import logging
import math
from dataclasses import replace
from typing import Dict, Iterable, List, Optional, Sequence

from .errors import ConvexVertexError, InvalidCaseError
from .estimator import ConnectivityRecord, EdgeEstimate, EstimatorParams
from .extraction import Vertex
from .geometry import TWO_PI, normalize_angle
from .simulation import DeploymentInfo

logger = logging.getLogger(__name__)

ZONE_TOL = 1e-12


def zone_of(xi: float, theta: float) -> int:
    """Zone 1..4 of direction ``xi`` for half-width ``theta``."""
    a = normalize_angle(xi)
    if a < theta or a >= TWO_PI - theta:
        return 1
    if a < math.pi - theta:
        return 2
    if a < math.pi + theta:
        return 3
    return 4


def is_concave_pair(xi_prev: float, xi_cur: float) -> bool:
    """The boundary turns right from the previous edge into the current one (reflex interior angle)."""
    offset = normalize_angle(xi_prev - xi_cur)
    return offset <= math.pi + ZONE_TOL or offset >= TWO_PI - ZONE_TOL


def f_theta_x(theta: float, x: float, xi_prev: float, xi_cur: float, r_max: float) -> float:
    if not -ZONE_TOL <= theta <= math.pi / 2 + ZONE_TOL:
        raise InvalidCaseError(f"theta must lie in [0, π/2], got {theta}")
    if not is_concave_pair(xi_prev, xi_cur):
        raise InvalidCaseError(
            f"Directions ({xi_prev:.4f}, {xi_cur:.4f}) do not form a concave vertex"
        )
    r = r_max
    p = normalize_angle(xi_prev)
    c = normalize_angle(xi_cur)
    zc = zone_of(c, theta)
    zp = zone_of(p, theta)
    cos_t = math.cos(theta)

    if zc == 1:
        if zp == 1:
            return 2.0 * r * cos_t - x * (math.pi - 2.0 * theta)
        if zp == 2:
            return r * (math.cos(p) + cos_t) - x * (math.pi - theta - p)
        if zp == 3:
            return 0.0
    elif zc == 2:
        if zp == 2:
            return r * (2.0 * cos_t + math.cos(p) - math.cos(c)) - x * (math.pi - 2.0 * theta - p + c)
        if zp == 3:
            return r * (cos_t - math.cos(c)) - x * (c - theta)
        if zp == 4:
            return -r * (math.cos(p) + math.cos(c)) - x * (c + math.pi - p)
    elif zc == 3:
        if zp == 3:
            return 2.0 * r * cos_t - x * (math.pi - 2.0 * theta)
        if zp == 4:
            return r * (cos_t - math.cos(p)) - x * (TWO_PI - theta - p)
        if zp == 1:
            return 0.0
    else:
        if zp == 4:
            return r * (2.0 * cos_t - math.cos(p) + math.cos(c)) - x * (math.pi - 2.0 * theta - p + c)
        if zp == 1:
            return r * (cos_t + math.cos(c)) - x * (c - math.pi - theta)
        if zp == 2:
            return r * (math.cos(p) + math.cos(c)) - x * (c - math.pi - p)
    raise InvalidCaseError(f"No case for zones (current={zc}, previous={zp})")


def _expectation(lam: float, xi_own: float, xi_prev: float, xi_cur: float,
                 v: float, m_t: float, deployment: DeploymentInfo) -> float:
    r = deployment.r_max
    x = lam * abs(math.sin(xi_own))
    if x >= r:
        return 0.0
    theta = math.asin(x / r)
    f = f_theta_x(theta, x, xi_prev, xi_cur, r)
    return max(0.0, v * m_t * deployment.n_s * f / (2.0 * math.pi * deployment.area))


def expected_nd_concave(lam: float, xi: float, xi_prev: float, v: float, m_t: float,
                        deployment: DeploymentInfo) -> float:
    """Expected whole-edge detections of an edge whose predecessor forms a concave vertex."""
    if not is_concave_pair(xi_prev, xi):
        raise ConvexVertexError("Vertex is convex; use expected_nd instead")
    return _expectation(lam, xi, xi_prev, xi, v, m_t, deployment)


def expected_nd_concave_previous(lam_prev: float, xi_prev: float, xi_cur: float, v: float,
                                 m_t: float, deployment: DeploymentInfo) -> float:
    """Same as ``expected_nd_concave`` for the edge entering the concave vertex."""
    if not is_concave_pair(xi_prev, xi_cur):
        raise ConvexVertexError("Vertex is convex; use expected_nd instead")
    return _expectation(lam_prev, xi_prev, xi_prev, xi_cur, v, m_t, deployment)


def _strongest_concave_records(records: Iterable[ConnectivityRecord],
                               by_index: Dict[int, EdgeEstimate]) -> Dict[int, ConnectivityRecord]:
    """Per estimate, the significant concave-majority record with the most concave pairs."""
    strongest: Dict[int, ConnectivityRecord] = {}
    for rec in records:
        if not rec.significant or rec.vertex_majority != Vertex.CONCAVE:
            continue
        if rec.head not in by_index or rec.tail not in by_index or rec.head == rec.tail:
            continue
        for index in (rec.head, rec.tail):
            held = strongest.get(index)
            if held is None or (rec.concave_count, rec.n_c) > (held.concave_count, held.n_c):
                strongest[index] = rec
    return strongest


def concave_expectations(est: EdgeEstimate, other: EdgeEstimate, v_hat: float, m_t: float,
                         deployment: DeploymentInfo) -> List[float]:
    """Expected counts of ``est`` over every concave direction combination with ``other``.

    ``est`` takes both roles: the edge leaving the vertex and the edge entering it.
    """
    values = []
    for xi_own in est.xi_candidates:
        for xi_other in other.xi_candidates:
            if is_concave_pair(xi_other, xi_own):
                values.append(expected_nd_concave(est.lambda_hat, xi_own, xi_other, v_hat, m_t, deployment))
            if is_concave_pair(xi_own, xi_other):
                values.append(expected_nd_concave_previous(
                    est.lambda_hat, xi_own, xi_other, v_hat, m_t, deployment,
                ))
    return [e for e in values if e > 0]


def concave_compensation(
    estimates: Sequence[EdgeEstimate],
    records: Iterable[ConnectivityRecord],
    v_hat: float,
    m_t: float,
    deployment: DeploymentInfo,
    params: Optional[EstimatorParams] = None,
) -> List[EdgeEstimate]:
    """Re-count edges next to concave vertices; counts never go down.

    Each estimate is re-evaluated against its strongest concave record only,
    with the expectation averaged over the direction combinations that record
    allows.
    """
    params = params or EstimatorParams()
    by_index = {e.index: e for e in estimates}
    strongest = _strongest_concave_records(records, by_index)

    out = []
    for est in estimates:
        rec = strongest.get(est.index)
        if rec is None or est.support_count == 0:
            out.append(est)
            continue
        other = by_index[rec.tail if rec.head == est.index else rec.head]
        values = concave_expectations(est, other, v_hat, m_t, deployment)
        if not values:
            out.append(est)
            continue
        e_new = sum(values) / len(values)
        n_new = est.support_count / e_new
        rounded = max(est.n_e_rounded, int(math.floor(n_new + 0.5)))
        n_hat = max(est.n_e_hat, n_new)
        if rounded != est.n_e_rounded or n_hat != est.n_e_hat:
            logger.info(
                f"Concave reevaluation of estimate {est.index} against {other.index}: "
                f"n_e {est.n_e_hat:.2f}->{n_hat:.2f} ({est.n_e_rounded}->{rounded})"
            )
            est = replace(
                est, n_e_hat=n_hat, n_e_rounded=rounded, e_nd=min(est.e_nd, e_new),
                compensated=True, n_e_convex=est.n_e_hat,
            )
        out.append(est)
    return out
