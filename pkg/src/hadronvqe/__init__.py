"""Meson mass spectra, decay constants and PDFs from variational quantum eigensolvers."""

import os as _os

# BLAS pools read these once, at numpy import, so the cap is exported here.
_cap = _os.environ.get("HADRONVQE_THREADS", "")
if _cap.isdigit() and int(_cap) > 0:
    for _var in ("OMP_NUM_THREADS", "OPENBLAS_NUM_THREADS", "MKL_NUM_THREADS"):
        _os.environ[_var] = _cap

from .ansatz import AnsatzSpec, build_hea, build_ucc_single  # noqa: E402
from .blfq import (BasisCatalog, BlfqQuantumNumbers, ModelParams, builtin_catalog, builtin_hamiltonian,  # noqa: E402
                   exact_eigensolve, load_external_hamiltonian)
from .circuit import (Circuit, Gate, NoiseSpec, QuantumState, apply_circuit, expectation_exact,  # noqa: E402
                      expectation_sampled)
from .engine import SsvqeSpec, run_ssvqe, run_vqe  # noqa: E402
from .kernels import BACKEND  # noqa: E402
from .observables import measure_decay_constant, pdf_operator, pdf_scan  # noqa: E402
from .optimizers import OptimizerConfig, minimize  # noqa: E402
from .pauli import PauliOperator, PauliString, compact_encode, jw_encode_one_body  # noqa: E402

__version__ = "0.1.0"

__all__ = [
    "AnsatzSpec", "BACKEND", "BasisCatalog", "BlfqQuantumNumbers", "Circuit", "Gate", "ModelParams", "NoiseSpec",
    "OptimizerConfig", "PauliOperator", "PauliString", "QuantumState", "SsvqeSpec", "apply_circuit", "build_hea",
    "build_ucc_single", "builtin_catalog", "builtin_hamiltonian", "compact_encode", "exact_eigensolve",
    "expectation_exact", "expectation_sampled", "jw_encode_one_body", "load_external_hamiltonian",
    "measure_decay_constant", "minimize", "pdf_operator", "pdf_scan", "run_ssvqe", "run_vqe",
]
