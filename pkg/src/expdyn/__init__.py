"""Escaping-set dynamics of the exponential family E(z) = lam * exp(z)."""
from .core import Classification, Parameter, eval_map, inverse_branch, iterate_orbit
from .points import find_periodic_point, find_preperiodic_point, verify_misiurewicz
from .rays import Address, find_ray_landing_at, landing_point, trace_ray
from .symbolic import (
    StaticPartition,
    build_dynamic_partition,
    dynamic_strip_index,
    itinerary,
    static_strip_index,
)

__version__ = "0.1.0"

__all__ = [
    "Address",
    "Classification",
    "Parameter",
    "StaticPartition",
    "build_dynamic_partition",
    "dynamic_strip_index",
    "eval_map",
    "find_periodic_point",
    "find_preperiodic_point",
    "find_ray_landing_at",
    "inverse_branch",
    "iterate_orbit",
    "itinerary",
    "landing_point",
    "static_strip_index",
    "trace_ray",
    "verify_misiurewicz",
]
