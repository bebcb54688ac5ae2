"""Numerical Kontsevich weights with a compiled kernel and a numpy fallback."""
from .cache import WeightCache, compute_weight_table, default_cache_path
from .engine import (
    BACKENDS,
    MAX_WEIGHT_ORDER,
    WeightEstimate,
    default_backend,
    derive_seed,
    propagator_angle,
    propagator_gradient,
    weight_estimate,
)

__all__ = [
    "BACKENDS",
    "MAX_WEIGHT_ORDER",
    "WeightCache",
    "WeightEstimate",
    "compute_weight_table",
    "default_backend",
    "default_cache_path",
    "derive_seed",
    "propagator_angle",
    "propagator_gradient",
    "weight_estimate",
]
