"""JSON and JSON Lines files exchanged between the command-line verbs."""
import json
import logging
from pathlib import Path
from typing import Dict, Iterable, List, Tuple, Union

from .errors import ConfigurationError
from .extraction import ConsecutivePair, DetectionSegment
from .geometry import PolygonTarget
from .simulation import RangeTrace, SensorPose, SimConfig, SimulationResult

logger = logging.getLogger(__name__)

PathLike = Union[str, Path]


def _write_jsonl(path: PathLike, rows: Iterable[Dict]) -> int:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    count = 0
    with path.open('w') as fh:
        for row in rows:
            fh.write(json.dumps(row, allow_nan=False))
            fh.write('\n')
            count += 1
    logger.debug(f"Wrote {count} rows to {path}")
    return count


def _read_jsonl(path: PathLike) -> List[Dict]:
    path = Path(path)
    if not path.exists():
        raise ConfigurationError(f"File not found: {path}")
    rows = []
    with path.open() as fh:
        for lineno, line in enumerate(fh, 1):
            line = line.strip()
            if not line:
                continue
            try:
                rows.append(json.loads(line))
            except json.JSONDecodeError as exc:
                raise ConfigurationError(f"{path}:{lineno}: invalid JSON ({exc})") from exc
    return rows


def write_json(path: PathLike, data: Dict) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(data, indent=2, allow_nan=False))
    return path


def read_json(path: PathLike) -> Dict:
    path = Path(path)
    if not path.exists():
        raise ConfigurationError(f"File not found: {path}")
    try:
        return json.loads(path.read_text())
    except json.JSONDecodeError as exc:
        raise ConfigurationError(f"{path}: invalid JSON ({exc})") from exc


def write_polygon(path: PathLike, poly: PolygonTarget) -> Path:
    return write_json(path, poly.to_dict())


def read_polygon(path: PathLike) -> PolygonTarget:
    return PolygonTarget.from_dict(read_json(path)).validate()


def write_traces(path: PathLike, result: SimulationResult, cfg: SimConfig, poly: PolygonTarget) -> int:
    """Header line with the run context, then one line per sensor trace."""
    header = {
        'type': 'header',
        'sim': cfg.to_dict(),
        'm_t': result.m_t,
        'detected': result.detected,
        'motion': result.motion.to_dict(),
        'polygon': poly.to_dict(),
    }
    rows = [header] + [trace.to_dict() for trace in result.traces]
    return _write_jsonl(path, rows)


def read_traces(path: PathLike) -> Tuple[Dict, List[RangeTrace]]:
    rows = _read_jsonl(path)
    header: Dict = {}
    traces = []
    for row in rows:
        if row.get('type') == 'header':
            header = row
            continue
        try:
            traces.append(RangeTrace.from_samples(row['sensor_id'], row['t0'], row['dt'], row['samples']))
        except (KeyError, TypeError, ValueError) as exc:
            raise ConfigurationError(f"Malformed trace row for sensor {row.get('sensor_id')}: {exc}") from exc
    return header, traces


def write_sensors(path: PathLike, sensors: Iterable[SensorPose]) -> int:
    return _write_jsonl(path, (s.to_dict() for s in sensors))


def read_sensors(path: PathLike) -> List[SensorPose]:
    return [SensorPose(int(r['sensor_id']), float(r['x']), float(r['y']), float(r['theta'])) for r in _read_jsonl(path)]


def write_segments(path: PathLike, segments: Iterable[DetectionSegment]) -> int:
    return _write_jsonl(path, (s.to_dict() for s in segments))


def read_segments(path: PathLike) -> List[DetectionSegment]:
    return [DetectionSegment.from_dict(row) for row in _read_jsonl(path)]


def write_pairs(path: PathLike, pairs: Iterable[ConsecutivePair]) -> int:
    return _write_jsonl(path, (p.to_dict() for p in pairs))
