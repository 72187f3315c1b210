"""Hardware-efficient and single-excitation UCC circuits."""

from __future__ import annotations

import math
from dataclasses import dataclass

from .circuit import Circuit, Gate

ANSATZ_KINDS = ("HEA", "UCC_single")


def build_hea(n_qubits: int, reps: int) -> Circuit:
    """(reps+1) layers of RY then RZ on every qubit, linear CX chains in between."""
    if n_qubits < 1 or reps < 0:
        raise ValueError("need n_qubits >= 1 and reps >= 0")
    gates = []
    k = 0
    for layer in range(reps + 1):
        for kind in ("RY", "RZ"):
            for q in range(n_qubits):
                gates.append(Gate(kind, q, param=k))
                k += 1
        if layer < reps:
            gates += [Gate("CX", q + 1, control=q) for q in range(n_qubits - 1)]
    return Circuit(n_qubits, gates, k)


def pauli_exponential(n_qubits: int, factors: dict[int, str], param: int, scale: float) -> list[Gate]:
    """Gates for exp(-i (scale*theta/2) P) with P given as {qubit: 'X'|'Y'|'Z'}.

    The RZ rotation carries ``scale * theta``; the CX ladder runs over the
    support in ascending qubit order.
    """
    support = sorted(factors)
    pre, post = [], []
    for q in support:
        f = factors[q]
        if f == "X":
            pre.append(Gate("H", q))
            post.append(Gate("H", q))
        elif f == "Y":
            pre.append(Gate("RX", q, angle=math.pi / 2))
            post.append(Gate("RX", q, angle=-math.pi / 2))
        elif f != "Z":
            raise ValueError(f"bad factor {f!r}")
    ladder = [Gate("CX", b, control=a) for a, b in zip(support, support[1:])]
    rz = Gate("RZ", support[-1], param=param, scale=scale)
    return pre + ladder + [rz] + ladder[::-1] + post


def build_ucc_single(n_qubits: int, occupied_mode: int, trotter_rho: int = 1) -> Circuit:
    """Trotterized exp(theta_p (a_p^+ a_r - a_r^+ a_p)) for every virtual mode p."""
    if not 0 <= occupied_mode < n_qubits:
        raise IndexError(f"occupied mode {occupied_mode} out of range")
    if trotter_rho < 1:
        raise ValueError("trotter_rho must be positive")
    r = occupied_mode
    virtuals = [p for p in range(n_qubits) if p != r]
    gates = []
    for _ in range(trotter_rho):
        for k, p in enumerate(virtuals):
            lo, hi = min(p, r), max(p, r)
            chain = {q: "Z" for q in range(lo + 1, hi)}
            # generator = (i/2) Zchain (Y_r X_p - X_r Y_p)
            gates += pauli_exponential(n_qubits, {**chain, r: "Y", p: "X"}, k, -1.0 / trotter_rho)
            gates += pauli_exponential(n_qubits, {**chain, r: "X", p: "Y"}, k, 1.0 / trotter_rho)
    return Circuit(n_qubits, gates, len(virtuals))


@dataclass(frozen=True)
class AnsatzSpec:
    kind: str
    n_qubits: int
    reps: int = 1
    occupied_mode: int = 0
    trotter_rho: int = 1

    def __post_init__(self):
        if self.kind not in ANSATZ_KINDS:
            raise ValueError(f"unknown ansatz {self.kind!r}; expected one of {ANSATZ_KINDS}")
        if self.n_qubits < 1:
            raise ValueError("n_qubits must be positive")

    @property
    def n_parameters(self) -> int:
        if self.kind == "HEA":
            return 2 * self.n_qubits * (self.reps + 1)
        return self.n_qubits - 1

    def build(self) -> Circuit:
        if self.kind == "HEA":
            return build_hea(self.n_qubits, self.reps)
        return build_ucc_single(self.n_qubits, self.occupied_mode, self.trotter_rho)
