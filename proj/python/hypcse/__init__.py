"""Structural-entropy hierarchical clustering in hyperbolic space."""

from . import _core
from ._core import (
    DataError,
    NumericError,
    UsageError,
    decode_tree,
    dendrogram_purity,
    geodesic_origin_distance,
    run_check,
    structural_entropy,
)


def _text(value):
    if isinstance(value, bool):
        return "true" if value else "false"
    return str(value)


def run(**settings):
    """Train with config keys given as keyword arguments; returns a metrics dict."""
    return _core.run({key: _text(value) for key, value in settings.items()})


__all__ = [
    "DataError",
    "NumericError",
    "UsageError",
    "decode_tree",
    "dendrogram_purity",
    "geodesic_origin_distance",
    "run",
    "run_check",
    "structural_entropy",
]
