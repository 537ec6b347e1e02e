"""Synthetic field: random sensor deployment, target motion and range traces."""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field, replace
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

from .errors import ConfigurationError
from .geometry import TWO_PI, PolygonTarget, points_inside, ray_distances
from .seeds import stream

logger = logging.getLogger(__name__)

# Samples added on each side of the computed detection window.
WINDOW_PAD = 2


@dataclass(frozen=True)
class DeploymentInfo:
    """What the estimator is allowed to know about the deployment."""
    omega_width: float
    omega_height: float
    n_s: int
    r_max: float
    dt: float = 1.0

    @property
    def area(self) -> float:
        return self.omega_width * self.omega_height

    def to_dict(self) -> Dict:
        return {
            'omega_width': self.omega_width,
            'omega_height': self.omega_height,
            'n_s': self.n_s,
            'r_max': self.r_max,
            'dt': self.dt,
        }

    @classmethod
    def from_dict(cls, data: Dict) -> 'DeploymentInfo':
        try:
            return cls(
                float(data['omega_width']), float(data['omega_height']),
                int(data['n_s']), float(data['r_max']), float(data.get('dt', 1.0)),
            )
        except (KeyError, TypeError, ValueError) as exc:
            raise ConfigurationError(f"Malformed deployment description: {exc}") from exc


@dataclass(frozen=True)
class SimConfig:
    omega_width: float = 5000.0
    omega_height: float = 300.0
    n_s: int = 2000
    r_max: float = 100.0
    v: float = 1.0
    dt: float = 1.0
    seed: int = 0
    p_b: float = 0.0
    sigma_s: float = 0.0
    y_offset: float = 0.0

    def __post_init__(self):
        problems = []
        if self.omega_width <= 0 or self.omega_height <= 0:
            problems.append("omega dimensions must be positive")
        if self.n_s < 1:
            problems.append("n_s must be at least 1")
        if self.r_max <= 0:
            problems.append("r_max must be positive")
        if self.v <= 0:
            problems.append("v must be positive")
        if self.dt <= 0:
            problems.append("dt must be positive")
        if not 0.0 <= self.p_b <= 1.0:
            problems.append("p_b must be in [0, 1]")
        if self.sigma_s < 0:
            problems.append("sigma_s must be non-negative")
        if abs(self.y_offset) >= self.omega_height / 2.0:
            problems.append("y_offset must keep the trajectory inside omega")
        if problems:
            raise ConfigurationError("; ".join(problems))

    @property
    def area(self) -> float:
        return self.omega_width * self.omega_height

    @property
    def deployment(self) -> DeploymentInfo:
        return DeploymentInfo(self.omega_width, self.omega_height, self.n_s, self.r_max, self.dt)

    def with_updates(self, **changes) -> 'SimConfig':
        return replace(self, **changes)

    def to_dict(self) -> Dict:
        return {
            'omega_width': self.omega_width,
            'omega_height': self.omega_height,
            'n_s': self.n_s,
            'r_max': self.r_max,
            'v': self.v,
            'dt': self.dt,
            'seed': self.seed,
            'p_b': self.p_b,
            'sigma_s': self.sigma_s,
            'y_offset': self.y_offset,
        }


@dataclass(frozen=True)
class SensorPose:
    sensor_id: int
    x: float
    y: float
    theta: float

    def to_dict(self) -> Dict:
        return {'sensor_id': self.sensor_id, 'x': self.x, 'y': self.y, 'theta': self.theta}


@dataclass(frozen=True)
class TargetMotion:
    """Anchor position of the target as a function of time."""
    start_x: float
    y: float
    v: float
    n_samples: int
    dt: float

    @classmethod
    def for_polygon(cls, poly: PolygonTarget, cfg: SimConfig) -> 'TargetMotion':
        margin = poly.perimeter + cfg.r_max
        start_x = -margin
        end_x = cfg.omega_width + margin
        n_samples = int(math.ceil((end_x - start_x) / (cfg.v * cfg.dt))) + 1
        # Put the vertical middle of the outline on the trajectory line.
        pts = poly.placed((0.0, 0.0)).chain()
        mid = 0.5 * (pts[:, 1].min() + pts[:, 1].max())
        y = cfg.omega_height / 2.0 + cfg.y_offset - mid
        return cls(start_x, y, cfg.v, n_samples, cfg.dt)

    def anchor_x(self, t: np.ndarray) -> np.ndarray:
        return self.start_x + self.v * np.asarray(t, dtype=float)

    def time_of(self, k: int) -> float:
        return k * self.dt

    def to_dict(self) -> Dict:
        return {'start_x': self.start_x, 'y': self.y, 'v': self.v, 'n_samples': self.n_samples, 'dt': self.dt}

    @classmethod
    def from_dict(cls, data: Dict) -> 'TargetMotion':
        return cls(float(data['start_x']), float(data['y']), float(data['v']), int(data['n_samples']), float(data['dt']))


@dataclass
class RangeTrace:
    """Samples of one sensor over its detection window.

    ``values`` holds distances with NaN for no detection; ``lost`` marks
    samples dropped in transit. Epochs outside the window are no detection.
    """
    sensor_id: int
    t0: float
    dt: float
    values: np.ndarray
    lost: np.ndarray = field(default=None)

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=float)
        if self.values.size == 0:
            raise ValueError("A trace needs at least one sample")
        if self.lost is None:
            self.lost = np.zeros(self.values.shape, dtype=bool)
        else:
            self.lost = np.asarray(self.lost, dtype=bool)

    @property
    def times(self) -> np.ndarray:
        return self.t0 + self.dt * np.arange(self.values.size)

    @property
    def detected(self) -> np.ndarray:
        return ~np.isnan(self.values) & ~self.lost

    def samples(self) -> List:
        """Samples in file form: number, None for no detection, 'lost'."""
        out = []
        for value, lost in zip(self.values, self.lost):
            if lost:
                out.append('lost')
            elif np.isnan(value):
                out.append(None)
            else:
                out.append(float(value))
        return out

    @classmethod
    def from_samples(cls, sensor_id: int, t0: float, dt: float, samples: Sequence) -> 'RangeTrace':
        values = np.full(len(samples), np.nan)
        lost = np.zeros(len(samples), dtype=bool)
        for i, sample in enumerate(samples):
            if sample == 'lost':
                lost[i] = True
            elif sample is not None:
                values[i] = float(sample)
        return cls(int(sensor_id), float(t0), float(dt), values, lost)

    def to_dict(self) -> Dict:
        return {'sensor_id': self.sensor_id, 't0': self.t0, 'dt': self.dt, 'samples': self.samples()}


@dataclass
class SimulationResult:
    traces: List[RangeTrace]
    m_t: float
    detected: bool
    motion: TargetMotion
    sensors: List[SensorPose]
    first_epoch: Optional[int] = None
    last_epoch: Optional[int] = None


def deploy_sensors(cfg: SimConfig, rng: Optional[np.random.Generator] = None) -> List[SensorPose]:
    """Uniform positions over omega and uniform directions, deterministic per seed."""
    if rng is None:
        rng = stream(cfg.seed, 'deploy')
    xs = rng.uniform(0.0, cfg.omega_width, cfg.n_s)
    ys = rng.uniform(0.0, cfg.omega_height, cfg.n_s)
    thetas = rng.uniform(0.0, TWO_PI, cfg.n_s)
    return [SensorPose(i, float(x), float(y), float(t)) for i, (x, y, t) in enumerate(zip(xs, ys, thetas))]


def _window(sensor: SensorPose, bounds: Tuple[float, float, float, float], motion: TargetMotion, r_max: float):
    """Sample index range during which the ray can touch the target, or None."""
    xmin, ymin, xmax, ymax = bounds
    ex, ey = r_max * math.cos(sensor.theta), r_max * math.sin(sensor.theta)
    ray_ylo, ray_yhi = sensor.y + min(0.0, ey), sensor.y + max(0.0, ey)
    if ray_yhi < motion.y + ymin - 1e-9 or ray_ylo > motion.y + ymax + 1e-9:
        return None
    ray_xlo, ray_xhi = sensor.x + min(0.0, ex), sensor.x + max(0.0, ex)
    step = motion.v * motion.dt
    k_lo = int(math.floor((ray_xlo - xmax - motion.start_x) / step)) - WINDOW_PAD
    k_hi = int(math.ceil((ray_xhi - xmin - motion.start_x) / step)) + WINDOW_PAD
    k_lo = max(k_lo, 0)
    k_hi = min(k_hi, motion.n_samples - 1)
    if k_hi < k_lo:
        return None
    return k_lo, k_hi


def simulate_traces(
    poly: PolygonTarget,
    cfg: SimConfig,
    sensors: Sequence[SensorPose],
) -> SimulationResult:
    """Sample every sensor's range while the target crosses omega.

    Works in the target frame: the edges stay put and each sensor origin moves
    by -v t, so one ray kernel call covers a sensor's whole window.
    """
    motion = TargetMotion.for_polygon(poly, cfg)
    local = poly.placed((0.0, 0.0))
    segments = local.segments()
    bounds = local.bounds()

    traces: List[RangeTrace] = []
    first_epoch: Optional[int] = None
    last_epoch: Optional[int] = None

    for sensor in sensors:
        window = _window(sensor, bounds, motion, cfg.r_max)
        if window is None:
            traces.append(RangeTrace(sensor.sensor_id, 0.0, cfg.dt, np.array([np.nan])))
            continue
        k_lo, k_hi = window
        ks = np.arange(k_lo, k_hi + 1)
        ox = sensor.x - motion.anchor_x(ks * cfg.dt)
        oy = sensor.y - motion.y
        inside = points_inside(local, ox, oy)
        values = ray_distances(segments, ox, oy, sensor.theta, cfg.r_max, inside)
        hits = np.flatnonzero(~np.isnan(values))
        if hits.size:
            lo, hi = int(ks[hits[0]]), int(ks[hits[-1]])
            first_epoch = lo if first_epoch is None else min(first_epoch, lo)
            last_epoch = hi if last_epoch is None else max(last_epoch, hi)
        traces.append(RangeTrace(sensor.sensor_id, float(k_lo * cfg.dt), cfg.dt, values))

    detected = first_epoch is not None
    if detected:
        m_t = (last_epoch - first_epoch) * cfg.dt
        logger.info(
            f"Simulated {len(sensors)} sensors over {motion.n_samples} epochs; "
            f"first detection at epoch {first_epoch}, last at {last_epoch}, m_t={m_t:g}"
        )
    else:
        m_t = 0.0
        logger.warning("No sensor detected the target during the simulation")
    return SimulationResult(traces, m_t, detected, motion, list(sensors), first_epoch, last_epoch)


def inject_loss(traces: Sequence[RangeTrace], p_b: float, rng: np.random.Generator) -> List[RangeTrace]:
    """Mark each detection sample lost with probability ``p_b``.

    Each trace draws from its own child stream spawned in sensor order, so the
    outcome of one trace never depends on how many samples another holds.
    """
    if not 0.0 <= p_b <= 1.0:
        raise ConfigurationError(f"p_b must be in [0, 1], got {p_b}")
    if p_b == 0.0:
        return list(traces)
    children = rng.spawn(len(traces))
    out = []
    for trace, child in zip(traces, children):
        candidates = ~np.isnan(trace.values) & ~trace.lost
        if not candidates.any():
            out.append(trace)
            continue
        draws = child.random(trace.values.size)
        lost = trace.lost | (candidates & (draws < p_b))
        out.append(RangeTrace(trace.sensor_id, trace.t0, trace.dt, trace.values.copy(), lost))
    return out


def simulate(poly: PolygonTarget, cfg: SimConfig) -> SimulationResult:
    """Deploy, simulate and apply sample loss with the config's seed."""
    sensors = deploy_sensors(cfg, stream(cfg.seed, 'deploy'))
    result = simulate_traces(poly, cfg, sensors)
    if cfg.p_b > 0:
        result.traces = inject_loss(result.traces, cfg.p_b, stream(cfg.seed, 'loss'))
    return result


def check_boundary_ratios(poly: PolygonTarget, cfg: SimConfig) -> Dict[str, float]:
    """Ratios |omega|/r_max² and |omega|/|T|; both should exceed 10."""
    area_t = abs(poly.signed_area) if poly.closed else 0.0
    ratios = {
        'omega_over_rmax_sq': cfg.area / cfg.r_max ** 2,
        'omega_over_target': cfg.area / area_t if area_t > 0 else math.inf,
    }
    for name, value in ratios.items():
        if value <= 10:
            logger.warning(f"Boundary effects likely: {name}={value:.2f} is not above 10")
    return ratios
