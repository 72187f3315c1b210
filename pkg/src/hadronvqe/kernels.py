"""Backend selection for the statevector kernels.

The compiled extension is used when it was built; set ``HADRONVQE_PURE_PYTHON=1``
to force the numpy fallback.
"""

import os

from . import _kernels_py

GATE_CODES = {"RX": 0, "RY": 1, "RZ": 2, "X": 3, "H": 4, "Sdg": 5, "CX": 6}


def _load_compiled():
    try:
        from . import _kernels
    except ImportError:
        return None
    return _kernels


def get_backend(name: str = "auto"):
    """Return a kernel module: ``"cython"``, ``"python"`` or ``"auto"``."""
    if name == "python":
        return _kernels_py
    compiled = _load_compiled()
    if name == "cython":
        if compiled is None:
            raise ImportError("compiled kernels are not built")
        return compiled
    return compiled if compiled is not None else _kernels_py


_FORCE_PURE = os.environ.get("HADRONVQE_PURE_PYTHON", "").lower() in ("1", "true", "yes")
_impl = get_backend("python" if _FORCE_PURE else "auto")
BACKEND = "python" if _impl is _kernels_py else "cython"

apply_gates = _impl.apply_gates
pauli_expectations = _impl.pauli_expectations
