"""Dual-unitary base-gate lattices: exact reduction, line tensions, defects, links and numerics."""

from .diagram import build_zalpha, is_completely_reducible, reduce_lattice
from .elt import elt_curve, elt_point, v_butterfly, v_entanglement
from .lattice import BUILTIN_NAMES, BaseGateSpec, builtin, load_lattice, trace_worldlines

__version__ = "0.1.0"

__all__ = [
    "BUILTIN_NAMES",
    "BaseGateSpec",
    "build_zalpha",
    "builtin",
    "elt_curve",
    "elt_point",
    "is_completely_reducible",
    "load_lattice",
    "reduce_lattice",
    "trace_worldlines",
    "v_butterfly",
    "v_entanglement",
]
