"""Gauge-Higgs subsystem-code laboratory.

Exact lattice codes, Clifford mapping checks, gauge-operator decoherence,
random-bond Ising correspondence and logical-stability diagnostics.
"""

__version__ = "0.1.0"

from .pauli import PauliOperator, PauliSpan, PauliSum, centralizer_in_span
from .lattice import LatticeGeometry, build_geometry, logical_supports, symmetry_supports

__all__ = [
    "PauliOperator",
    "PauliSpan",
    "PauliSum",
    "centralizer_in_span",
    "LatticeGeometry",
    "build_geometry",
    "logical_supports",
    "symmetry_supports",
    "__version__",
]
