"""Experiment orchestration and error metrics."""
from __future__ import annotations

import copy
import csv
import itertools
import json
import logging
import math
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Any, Dict, Iterable, List, Mapping, Optional, Sequence, Tuple, Union

import numpy as np

from .errors import ConfigurationError, DegenerateEstimateError, NoDetectionError
from .estimator import EdgeEstimate, EstimatorParams
from .extraction import DetectionSegment, ExtractionParams
from .geometry import DirectedEdge, PolygonTarget, ray_distances
from .pipeline import EstimationResult, run_estimation
from .presets import get_preset
from .seeds import run_seed
from .simulation import SensorPose, SimConfig, TargetMotion, check_boundary_ratios, simulate

logger = logging.getLogger(__name__)

SWEEP_AXES = ('n_s', 'v', 'p_b', 'sigma_s')

# The sweeps behind the published error plots. A lost sample ends the
# detection in the loss sweep, so a broken l_d reaches the estimator.
STANDARD_EXPERIMENTS: Dict[str, Dict[str, Any]] = {
    'sensor_count': {'preset': 'triangle', 'sweep': {'n_s': [500, 1000, 2000]}},
    'half_scale': {'preset': 'small_triangle', 'sweep': {'n_s': [500, 1000, 2000]}},
    'noise': {'preset': 'triangle', 'sweep': {'sigma_s': [0.0, 0.05, 0.1]}},
    'loss': {
        'preset': 'triangle',
        'extraction': {'lost_policy': 'split'},
        'sweep': {'p_b': [0.0, 0.005, 0.01]},
    },
    'speed': {'preset': 'triangle', 'sim': {'n_s': 500}, 'sweep': {'v': [1.0, 2.0, 5.0]}},
}


def standard_experiment(name: str) -> Dict[str, Any]:
    """Experiment mapping of a named standard sweep, ready for ``load_experiment_spec``."""
    try:
        return copy.deepcopy(STANDARD_EXPERIMENTS[name])
    except KeyError:
        raise ConfigurationError(
            f"Unknown experiment '{name}'. Available: {', '.join(STANDARD_EXPERIMENTS)}"
        ) from None


@dataclass(frozen=True)
class ExperimentSpec:
    target: PolygonTarget
    preset: Optional[str] = None
    name: str = ''
    sim: SimConfig = field(default_factory=SimConfig)
    extraction: ExtractionParams = field(default_factory=ExtractionParams)
    estimator: EstimatorParams = field(default_factory=EstimatorParams)
    runs: int = 10
    seed: int = 20240917
    sweep: Dict[str, Tuple] = field(default_factory=dict)

    def __post_init__(self):
        if self.runs < 1:
            raise ConfigurationError("runs must be at least 1")
        for axis, values in self.sweep.items():
            if axis not in SWEEP_AXES:
                raise ConfigurationError(f"Unknown sweep axis '{axis}'")
            if not values:
                raise ConfigurationError(f"Sweep axis '{axis}' is empty")

    def to_dict(self) -> Dict:
        return {
            'name': self.name,
            'preset': self.preset,
            'target': self.target.to_dict(),
            'sim': self.sim.to_dict(),
            'extraction': self.extraction.to_dict(),
            'estimator': self.estimator.to_dict(),
            'runs': self.runs,
            'seed': self.seed,
            'sweep': {k: list(v) for k, v in self.sweep.items()},
        }


def load_experiment_spec(
    source: Union[str, Path, Mapping, None] = None,
    overrides: Optional[Mapping[str, Any]] = None,
) -> ExperimentSpec:
    """Build an ExperimentSpec from a JSON file or mapping, applying CLI overrides."""
    from api.serializers import ExperimentSpecSerializer

    if source is None:
        data: Dict[str, Any] = {}
    elif isinstance(source, Mapping):
        data = dict(source)
    else:
        path = Path(source)
        try:
            data = json.loads(path.read_text())
        except FileNotFoundError as exc:
            raise ConfigurationError(f"Config file not found: {path}") from exc
        except json.JSONDecodeError as exc:
            raise ConfigurationError(f"Config file {path} is not valid JSON: {exc}") from exc
    for key, value in (overrides or {}).items():
        if value is not None:
            data[key] = value
    if 'target' in data and data.get('preset'):
        data.pop('target')

    serializer = ExperimentSpecSerializer(data=data)
    if not serializer.is_valid():
        raise ConfigurationError(f"Invalid experiment spec: {serializer.errors}")
    return serializer.save()


@dataclass(frozen=True)
class SweepPoint:
    index: int
    values: Dict[str, Any]

    def apply(self, cfg: SimConfig) -> SimConfig:
        return cfg.with_updates(**self.values) if self.values else cfg


def sweep_points(spec: ExperimentSpec) -> List[SweepPoint]:
    axes = [a for a in SWEEP_AXES if a in spec.sweep]
    if not axes:
        return [SweepPoint(0, {})]
    grid = itertools.product(*(spec.sweep[a] for a in axes))
    return [SweepPoint(i, dict(zip(axes, combo))) for i, combo in enumerate(grid)]


@dataclass
class RunResult:
    run_index: int
    seed: int
    sweep_index: int = 0
    sweep_values: Dict[str, Any] = field(default_factory=dict)
    v_hat: Optional[float] = None
    m_t: float = 0.0
    n_r: int = 0
    estimate_count: int = 0
    edge_count: int = 0
    edge_count_correct: bool = False
    squared_errors: List[float] = field(default_factory=list)
    unmatched: List[bool] = field(default_factory=list)
    flagged: bool = False
    closure_gap: Tuple[float, float] = (math.nan, math.nan)
    shape_complete: bool = False
    error: str = ''

    def to_dict(self) -> Dict:
        return {
            'run_index': self.run_index,
            'seed': self.seed,
            'sweep_index': self.sweep_index,
            'sweep_values': self.sweep_values,
            'v_hat': self.v_hat,
            'm_t': self.m_t,
            'n_r': self.n_r,
            'estimate_count': self.estimate_count,
            'edge_count': self.edge_count,
            'edge_count_correct': self.edge_count_correct,
            'squared_errors': self.squared_errors,
            'flagged': self.flagged,
            'closure_gap': [None if math.isnan(g) else g for g in self.closure_gap],
            'shape_complete': self.shape_complete,
            'error': self.error,
        }


def epsilon_sq(true_edge: DirectedEdge, lam_hat: float, xi_candidates: Iterable[float]) -> float:
    """Squared distance between edge vectors, using the closest direction candidate."""
    tx, ty = true_edge.dx, true_edge.dy
    return min(
        (tx - lam_hat * math.cos(xi)) ** 2 + (ty - lam_hat * math.sin(xi)) ** 2
        for xi in xi_candidates
    )


def match_estimates(
    true_edges: Sequence[DirectedEdge], estimates: Sequence[EdgeEstimate],
) -> Tuple[List[float], List[bool]]:
    """Greedy minimum-error matching of the first estimates to the true edges.

    Unmatched true edges get the sentinel error λ² (an estimate of length 0).
    """
    used = list(estimates[:min(len(estimates), len(true_edges))])
    errors = [e.length ** 2 for e in true_edges]
    unmatched = [True] * len(true_edges)
    if used:
        cost = np.array([[epsilon_sq(t, e.lambda_hat, e.xi_candidates) for e in used] for t in true_edges])
        free_true = set(range(len(true_edges)))
        free_est = set(range(len(used)))
        while free_true and free_est:
            rows = sorted(free_true)
            cols = sorted(free_est)
            sub = cost[np.ix_(rows, cols)]
            r, c = np.unravel_index(int(np.argmin(sub)), sub.shape)
            i, j = rows[r], cols[c]
            errors[i] = float(cost[i, j])
            unmatched[i] = False
            free_true.discard(i)
            free_est.discard(j)
    return errors, unmatched


def _field(record: Any, key: str):
    return record[key] if isinstance(record, Mapping) else getattr(record, key)


@dataclass
class MetricsReport:
    true_lengths: List[float]
    runs: List[RunResult]
    mse: float
    rsr_mse: List[float]
    mean_v_hat: Optional[float]
    edge_count_accuracy: float
    flagged_runs: int

    @classmethod
    def from_runs(cls, runs: Sequence[RunResult], true_lengths: Sequence[float]) -> 'MetricsReport':
        rows = [(r.squared_errors, r.v_hat, r.edge_count_correct, r.flagged) for r in runs]
        report = cls._aggregate(rows, true_lengths)
        report.runs = list(runs)
        return report

    @classmethod
    def from_run_records(cls, records: Iterable[Any], true_lengths: Sequence[float]) -> 'MetricsReport':
        """Recompute from persisted rows (model instances or dicts)."""
        rows = []
        for rec in records:
            rows.append((
                list(_field(rec, 'squared_errors')),
                _field(rec, 'v_hat'),
                bool(_field(rec, 'edge_count_correct')),
                bool(_field(rec, 'flagged')),
            ))
        return cls._aggregate(rows, true_lengths)

    @classmethod
    def _aggregate(cls, rows, true_lengths) -> 'MetricsReport':
        n = len(rows)
        lengths = [float(x) for x in true_lengths]
        if n == 0:
            return cls(lengths, [], math.nan, [math.nan] * len(lengths), None, 0.0, 0)
        sums = [math.fsum(row[0][i] for row in rows) for i in range(len(lengths))]
        mse = math.fsum(sums) / n
        rsr = [math.sqrt(s / n) / lam for s, lam in zip(sums, lengths)]
        speeds = [row[1] for row in rows if row[1] is not None]
        return cls(
            true_lengths=lengths,
            runs=[],
            mse=mse,
            rsr_mse=rsr,
            mean_v_hat=float(np.mean(speeds)) if speeds else None,
            edge_count_accuracy=sum(1 for row in rows if row[2]) / n,
            flagged_runs=sum(1 for row in rows if row[3]),
        )

    def to_dict(self) -> Dict:
        return {
            'true_lengths': self.true_lengths,
            'mse': self.mse,
            'rsr_mse': self.rsr_mse,
            'mean_v_hat': self.mean_v_hat,
            'edge_count_accuracy': self.edge_count_accuracy,
            'flagged_runs': self.flagged_runs,
            'runs': len(self.runs),
        }


@dataclass
class SweepResult:
    point: SweepPoint
    report: MetricsReport


def sweep_metrics(results: Sequence[SweepResult]) -> Dict:
    """JSON summary with one entry per sweep point."""
    return {
        'points': [
            {'index': res.point.index, 'values': res.point.values, **res.report.to_dict()}
            for res in results
        ]
    }


def attribute_segment(
    seg: DetectionSegment,
    sensor: SensorPose,
    motion: TargetMotion,
    polygon: PolygonTarget,
    r_max: float,
) -> Optional[int]:
    """Index of the true edge the sensor's ray hits at the segment's mid-time."""
    local = polygon.placed((0.0, 0.0))
    segments = local.segments()
    ox = np.array([sensor.x - float(motion.anchor_x(seg.mid_time))])
    oy = np.array([sensor.y - motion.y])
    dists = np.array([
        ray_distances(segments[i:i + 1], ox, oy, sensor.theta, r_max)[0]
        for i in range(len(segments))
    ])
    if np.all(np.isnan(dists)):
        return None
    return int(np.nanargmin(dists))


def _score(result: Optional[EstimationResult], polygon: PolygonTarget, run: RunResult) -> RunResult:
    true_edges = polygon.edges
    if result is None or not result.estimates:
        run.squared_errors = [e.length ** 2 for e in true_edges]
        run.unmatched = [True] * len(true_edges)
        run.flagged = True
        return run
    errors, unmatched = match_estimates(true_edges, result.estimates)
    run.v_hat = result.v_hat
    run.n_r = result.n_r
    run.estimate_count = len(result.estimates)
    run.edge_count = result.edge_count
    run.edge_count_correct = result.edge_count == len(true_edges)
    run.squared_errors = errors
    run.unmatched = unmatched
    run.flagged = any(unmatched)
    if result.shape is not None:
        run.closure_gap = result.shape.closure_gap
        run.shape_complete = result.shape.complete
    if run.flagged:
        logger.warning(f"Run {run.run_index}: {sum(unmatched)} true edge(s) without an estimate")
    return run


def run_single(spec: ExperimentSpec, run_index: int, point: Optional[SweepPoint] = None) -> RunResult:
    point = point or SweepPoint(0, {})
    seed = run_seed(spec.seed, run_index)
    cfg = replace(point.apply(spec.sim), seed=seed)
    run = RunResult(run_index=run_index, seed=seed, sweep_index=point.index, sweep_values=dict(point.values))
    result = None
    try:
        sim = simulate(spec.target, cfg)
        run.m_t = sim.m_t
        result = run_estimation(
            sim.traces, cfg.deployment, sim.m_t, spec.extraction, spec.estimator,
            seed=seed, sigma_s=cfg.sigma_s,
        )
    except (NoDetectionError, DegenerateEstimateError) as exc:
        logger.warning(f"Run {run_index} produced no estimate: {exc}")
        run.error = str(exc)
    return _score(result, spec.target, run)


def run_experiment(spec: ExperimentSpec, point: Optional[SweepPoint] = None) -> MetricsReport:
    point = point or SweepPoint(0, {})
    check_boundary_ratios(spec.target, point.apply(spec.sim))
    runs = [run_single(spec, i, point) for i in range(spec.runs)]
    report = MetricsReport.from_runs(runs, [e.length for e in spec.target.edges])
    logger.info(
        f"Experiment '{spec.name or spec.preset}' point {point.values or '-'}: "
        f"MSE={report.mse:.3f}, flagged={report.flagged_runs}/{spec.runs}"
    )
    return report


def run_sweep(spec: ExperimentSpec) -> List[SweepResult]:
    """All sweep points in axis order; every point reuses the same run seeds."""
    return [SweepResult(point, run_experiment(spec, point)) for point in sweep_points(spec)]


def _fmt(value) -> str:
    if value is None:
        return ''
    if isinstance(value, float):
        return repr(value)
    return str(value)


def emit_plot_data(results: Sequence[SweepResult], out_dir: Union[str, Path], sim: Optional[SimConfig] = None) -> List[Path]:
    """Write the three plot CSVs; one row per sweep point (per edge for RSR-MSE)."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    sim = sim or SimConfig()

    def axis(point: SweepPoint, name: str):
        return point.values.get(name, getattr(sim, name))

    files = {
        'rsr_mse_vs_ns.csv': (['n_s', 'edge', 'lambda_true', 'rsr_mse'], []),
        'mse_vs_noise.csv': (['p_b', 'sigma_s', 'mse'], []),
        'mse_vs_speed.csv': (['v', 'mse'], []),
    }
    for res in results:
        point, report = res.point, res.report
        for i, (lam, rsr) in enumerate(zip(report.true_lengths, report.rsr_mse)):
            files['rsr_mse_vs_ns.csv'][1].append([axis(point, 'n_s'), i, lam, rsr])
        files['mse_vs_noise.csv'][1].append([axis(point, 'p_b'), axis(point, 'sigma_s'), report.mse])
        files['mse_vs_speed.csv'][1].append([axis(point, 'v'), report.mse])

    written = []
    for name, (header, rows) in files.items():
        path = out / name
        with path.open('w', newline='') as fh:
            writer = csv.writer(fh, lineterminator='\n')
            writer.writerow(header)
            for row in rows:
                writer.writerow([_fmt(v) for v in row])
        written.append(path)
    return written


def persist_report(experiment, results: Sequence[SweepResult]) -> int:
    """Store every run of every sweep point under ``experiment``; returns the row count."""
    from api.models import ExperimentRun

    rows = []
    for res in results:
        for run in res.report.runs:
            gap_x, gap_y = run.closure_gap
            rows.append(ExperimentRun(
                experiment=experiment,
                run_index=run.run_index,
                seed=run.seed,
                sweep_point_index=run.sweep_index,
                sweep_point=run.sweep_values,
                v_hat=run.v_hat,
                m_t=run.m_t,
                n_r=run.n_r,
                estimate_count=run.estimate_count,
                edge_count_correct=run.edge_count_correct,
                squared_errors=run.squared_errors,
                flagged=run.flagged,
                closure_gap_x=None if math.isnan(gap_x) else gap_x,
                closure_gap_y=None if math.isnan(gap_y) else gap_y,
                shape_complete=run.shape_complete,
            ))
    ExperimentRun.objects.bulk_create(rows)
    return len(rows)


def spec_for_preset(name: str, **sim_changes) -> ExperimentSpec:
    """Quick spec for a named preset with optional SimConfig changes."""
    return ExperimentSpec(target=get_preset(name), preset=name, name=name, sim=SimConfig(**sim_changes))
