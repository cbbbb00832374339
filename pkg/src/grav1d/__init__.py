"""Exact-arithmetic engine for a one-dimensional topological gravity model:

partition function and free energy over the coupling ring, correlators,
triangular coordinate changes, Feynman-graph oracles, differential-operator
constraints, n-point functions, and the quantized spectral deformation.
"""

from .series import (
    QQ,
    OuterSeries,
    Series,
    Slot,
    TruncationSpec,
    rat,
    rat_str,
)
from . import constraints, graphs, icoords, npoint, partition, spectral, verify

__version__ = "0.1.0"

__all__ = [
    "QQ",
    "OuterSeries",
    "Series",
    "Slot",
    "TruncationSpec",
    "rat",
    "rat_str",
    "constraints",
    "graphs",
    "icoords",
    "npoint",
    "partition",
    "spectral",
    "verify",
    "__version__",
]
