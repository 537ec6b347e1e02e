"""Named target outlines.

The triangle is exact. Truck, sports car and tank are approximate side
profiles digitized so that their edge lengths and directions agree with the
estimated-edge tables they are compared against; they are approximations, not
measured outlines. ``single_edge`` and ``concave_corner`` are calibration
fixtures for detection-count checks.
"""
import math
from typing import Dict, List

from .errors import ConfigurationError
from .geometry import DirectedEdge, PolygonTarget

SQRT3 = math.sqrt(3.0)


def _triangle(scale: float = 1.0) -> PolygonTarget:
    return PolygonTarget(
        (
            DirectedEdge(50.0 * SQRT3 * scale, 0.0),
            DirectedEdge(100.0 * scale, 5.0 * math.pi / 6.0),
            DirectedEdge(50.0 * scale, 3.0 * math.pi / 2.0),
        ),
        (0.0, 0.0),
    )


def _truck() -> PolygonTarget:
    return PolygonTarget.from_vertices([
        (0.0, 0.0), (139.0, 0.0), (143.5, 4.5), (148.0, 35.0), (143.5, 39.5), (4.5, 39.5),
    ])


def _sports_car() -> PolygonTarget:
    return PolygonTarget.from_vertices([
        (0.0, 0.0), (61.0, 0.0), (69.0, 6.7), (70.0, 16.2), (62.0, 23.0),
        (1.0, 23.0), (-6.5, 16.7), (-7.3, 6.1),
    ])


def _tank() -> PolygonTarget:
    return PolygonTarget.from_vertices([
        (0.0, 0.0), (137.5, 0.0), (147.0, 12.0), (147.0, 19.5), (101.2, 19.5),
        (101.2, 40.0), (65.2, 40.0), (65.2, 19.5), (19.4, 19.5),
    ])


def _single_edge() -> PolygonTarget:
    return PolygonTarget((DirectedEdge(100.0, 0.0),), (0.0, 0.0), closed=False)


def _concave_corner() -> PolygonTarget:
    """L-shaped block whose reflex corner sits at the tail of the 100-long bottom edge."""
    return PolygonTarget.from_vertices([
        (-60.0, -60.0), (0.0, -60.0), (0.0, 0.0), (100.0, 0.0), (100.0, 60.0), (-60.0, 60.0),
    ])


PRESETS = {
    'triangle': lambda: _triangle(1.0),
    'small_triangle': lambda: _triangle(0.5),
    'truck': _truck,
    'sports_car': _sports_car,
    'tank': _tank,
    'single_edge': _single_edge,
    'concave_corner': _concave_corner,
}

FIXTURES = {'single_edge', 'concave_corner'}

# Index of the edge whose count is reduced by an occluding neighbour.
CONCAVE_CORNER_EDGE = 2


def preset_names(include_fixtures: bool = True) -> List[str]:
    return [name for name in PRESETS if include_fixtures or name not in FIXTURES]


def get_preset(name: str) -> PolygonTarget:
    try:
        factory = PRESETS[name]
    except KeyError:
        raise ConfigurationError(
            f"Unknown preset '{name}'. Available: {', '.join(PRESETS)}"
        ) from None
    return factory().validate()


def describe_preset(name: str) -> Dict:
    poly = get_preset(name)
    data = poly.to_dict()
    data.update({
        'name': name,
        'perimeter': poly.perimeter,
        'area': poly.signed_area if poly.closed else 0.0,
        'vertices': poly.vertices().tolist(),
        'fixture': name in FIXTURES,
    })
    return data
