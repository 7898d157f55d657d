"""Numerical kernel backend selection.

The compiled Cython extension is preferred when importable; otherwise the
NumPy fallback is used.  Set ``SUBWAVE_PURE_PYTHON=1`` to force the fallback
(used by the backend-equivalence tests and the benchmark).
"""
import os

from . import _pykernels
from ._pykernels import K0, field_coupling, pair_coupling

if os.environ.get("SUBWAVE_PURE_PYTHON", "") == "1":
    _impl = _pykernels
    BACKEND = "python"
else:
    try:
        from . import _ckernels as _impl
        BACKEND = "compiled"
    except ImportError:
        _impl = _pykernels
        BACKEND = "python"

coupling_matrices = _impl.coupling_matrices
field_coupling_matrix = _impl.field_coupling_matrix
lattice_mode_sums = _impl.lattice_mode_sums

__all__ = [
    "BACKEND",
    "K0",
    "coupling_matrices",
    "field_coupling",
    "field_coupling_matrix",
    "lattice_mode_sums",
    "pair_coupling",
]
