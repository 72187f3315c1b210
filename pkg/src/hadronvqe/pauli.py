"""Pauli strings, Pauli-sum operators and qubit encodings of Hermitian matrices.

Qubit 0 is the least-significant bit of a basis index.  Display strings list
the highest-index qubit first, so ``"XZ"`` is X on qubit 1 and Z on qubit 0.
"""

from __future__ import annotations

from dataclasses import dataclass
from types import MappingProxyType
from typing import Iterable, Mapping

import numpy as np

_SYMBOLS = "IXZY"  # index = x + 2 z
_PHASES = (1, 1j, -1, -1j)
DEFAULT_QUBIT_CAP = 12


def _popcount(v: int) -> int:
    return bin(v).count("1")


def parity_signs(indices: np.ndarray, mask: int) -> np.ndarray:
    """(-1)^popcount(index & mask) as float64."""
    bits = np.bitwise_count(np.asarray(indices, dtype=np.int64) & mask).astype(np.int64) & 1
    return 1.0 - 2.0 * bits


@dataclass(frozen=True, order=True)
class PauliString:
    """Symplectic Pauli string: P = i^{|x&z|} X^x Z^z, with bit q for qubit q."""

    n_qubits: int
    x: int = 0
    z: int = 0

    def __post_init__(self):
        if self.n_qubits < 1:
            raise ValueError("n_qubits must be positive")
        full = (1 << self.n_qubits) - 1
        if self.x & ~full or self.z & ~full:
            raise ValueError("mask exceeds qubit count")

    @classmethod
    def from_label(cls, label: str) -> "PauliString":
        label = label.strip().upper()
        if not label or any(c not in "IXYZ" for c in label):
            raise ValueError(f"bad Pauli label {label!r}")
        x = z = 0
        for q, c in enumerate(reversed(label)):
            if c in "XY":
                x |= 1 << q
            if c in "ZY":
                z |= 1 << q
        return cls(len(label), x, z)

    @classmethod
    def identity(cls, n_qubits: int) -> "PauliString":
        return cls(n_qubits)

    @classmethod
    def single(cls, n_qubits: int, qubit: int, symbol: str) -> "PauliString":
        chars = ["I"] * n_qubits
        chars[n_qubits - 1 - qubit] = symbol
        return cls.from_label("".join(chars))

    @property
    def label(self) -> str:
        return "".join(self.factor(q) for q in reversed(range(self.n_qubits)))

    def factor(self, qubit: int) -> str:
        return _SYMBOLS[((self.x >> qubit) & 1) + 2 * ((self.z >> qubit) & 1)]

    @property
    def n_y(self) -> int:
        return _popcount(self.x & self.z)

    @property
    def is_identity(self) -> bool:
        return self.x == 0 and self.z == 0

    @property
    def support(self) -> int:
        return self.x | self.z

    def __str__(self) -> str:
        return self.label

    def __repr__(self) -> str:
        return f"PauliString({self.label!r})"

    def to_matrix(self) -> np.ndarray:
        dim = 1 << self.n_qubits
        cols = np.arange(dim)
        out = np.zeros((dim, dim), dtype=complex)
        out[cols ^ self.x, cols] = _PHASES[self.n_y % 4] * parity_signs(cols, self.z)
        return out


def _check_pair(a: PauliString, b: PauliString) -> None:
    if a.n_qubits != b.n_qubits:
        raise ValueError(f"qubit count mismatch: {a.n_qubits} vs {b.n_qubits}")


def multiply(a: PauliString, b: PauliString) -> tuple[complex, PauliString]:
    """Return (phase, product) with phase * product == a @ b."""
    _check_pair(a, b)
    prod = PauliString(a.n_qubits, a.x ^ b.x, a.z ^ b.z)
    power = a.n_y + b.n_y - prod.n_y + 2 * _popcount(a.z & b.x)
    return _PHASES[power % 4], prod


def commutes_qubitwise(a: PauliString, b: PauliString) -> bool:
    _check_pair(a, b)
    both = a.support & b.support
    return ((a.x ^ b.x) & both) == 0 and ((a.z ^ b.z) & both) == 0


def commutes(a: PauliString, b: PauliString) -> bool:
    _check_pair(a, b)
    return (_popcount(a.x & b.z) + _popcount(a.z & b.x)) % 2 == 0


class PauliOperator:
    """Immutable weighted sum of Pauli strings."""

    __slots__ = ("_n", "_terms")

    def __init__(self, n_qubits: int, terms: Mapping[PauliString, complex] | Iterable = (),
                 drop_tol: float = 1e-12):
        if n_qubits < 1:
            raise ValueError("n_qubits must be positive")
        items = terms.items() if isinstance(terms, Mapping) else terms
        acc: dict[PauliString, complex] = {}
        for key, coeff in items:
            p = PauliString.from_label(key) if isinstance(key, str) else key
            if p.n_qubits != n_qubits:
                raise ValueError("term qubit count does not match operator")
            acc[p] = acc.get(p, 0) + complex(coeff)
        if acc:
            cut = drop_tol * max(abs(c) for c in acc.values())
            acc = {p: c for p, c in acc.items() if abs(c) > cut}
        self._n = n_qubits
        self._terms = MappingProxyType(dict(sorted(acc.items(), key=lambda kv: kv[0].label)))

    @classmethod
    def from_dict(cls, terms: Mapping[str, complex]) -> "PauliOperator":
        labels = list(terms)
        if not labels:
            raise ValueError("empty operator needs an explicit qubit count")
        return cls(len(labels[0]), terms)

    @classmethod
    def identity(cls, n_qubits: int, coeff: complex = 1.0) -> "PauliOperator":
        return cls(n_qubits, {PauliString.identity(n_qubits): coeff})

    @property
    def n_qubits(self) -> int:
        return self._n

    @property
    def terms(self) -> Mapping[PauliString, complex]:
        return self._terms

    def __len__(self):
        return len(self._terms)

    def __iter__(self):
        return iter(self._terms.items())

    def coeff(self, label: str) -> complex:
        return self._terms.get(PauliString.from_label(label), 0.0)

    def labels(self) -> dict[str, complex]:
        return {p.label: c for p, c in self._terms.items()}

    def is_hermitian(self, tol: float = 1e-9) -> bool:
        scale = max((abs(c) for c in self._terms.values()), default=0.0)
        return all(abs(c.imag) <= tol * max(scale, 1.0) for c in self._terms.values())

    def real(self) -> "PauliOperator":
        return PauliOperator(self._n, {p: c.real for p, c in self._terms.items()})

    def adjoint(self) -> "PauliOperator":
        return PauliOperator(self._n, {p: c.conjugate() for p, c in self._terms.items()})

    def max_abs_coeff(self) -> float:
        return max((abs(c) for c in self._terms.values()), default=0.0)

    def _coerce(self, other) -> "PauliOperator":
        if isinstance(other, PauliOperator):
            if other.n_qubits != self._n:
                raise ValueError("qubit count mismatch")
            return other
        if isinstance(other, PauliString):
            return PauliOperator(self._n, {other: 1.0})
        return PauliOperator.identity(self._n, other)

    def __add__(self, other):
        other = self._coerce(other)
        return PauliOperator(self._n, list(self._terms.items()) + list(other.terms.items()))

    __radd__ = __add__

    def __neg__(self):
        return self * -1

    def __sub__(self, other):
        return self + (-self._coerce(other))

    def __rsub__(self, other):
        return self._coerce(other) - self

    def __mul__(self, other):
        if isinstance(other, (PauliOperator, PauliString)):
            other = self._coerce(other)
            acc = []
            for pa, ca in self._terms.items():
                for pb, cb in other.terms.items():
                    phase, prod = multiply(pa, pb)
                    acc.append((prod, phase * ca * cb))
            return PauliOperator(self._n, acc)
        return PauliOperator(self._n, {p: c * other for p, c in self._terms.items()})

    def __rmul__(self, other):
        return PauliOperator(self._n, {p: other * c for p, c in self._terms.items()})

    def __eq__(self, other):
        return isinstance(other, PauliOperator) and self._n == other._n and dict(self._terms) == dict(other._terms)

    def __hash__(self):
        return hash((self._n, tuple(self._terms.items())))

    def allclose(self, other: "PauliOperator", atol: float = 1e-9) -> bool:
        keys = set(self._terms) | set(other.terms)
        return all(abs(self._terms.get(k, 0) - other.terms.get(k, 0)) <= atol for k in keys)

    def __repr__(self):
        body = " + ".join(f"{_fmt(c)}*{p.label}" for p, c in list(self._terms.items())[:6])
        more = " + ..." if len(self._terms) > 6 else ""
        return f"PauliOperator({body}{more})"

    def to_text(self) -> str:
        return "".join(f"{_fmt(c)} {p.label}\n" for p, c in self._terms.items())

    @classmethod
    def from_text(cls, text: str) -> "PauliOperator":
        terms = []
        n = None
        for lineno, raw in enumerate(text.splitlines(), 1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            parts = line.split()
            if len(parts) != 2:
                raise ValueError(f"line {lineno}: expected '<coefficient> <string>', got {raw!r}")
            coeff = complex(parts[0].replace("i", "j")) if "i" in parts[0] or "j" in parts[0] else float(parts[0])
            p = PauliString.from_label(parts[1])
            if n is None:
                n = p.n_qubits
            elif p.n_qubits != n:
                raise ValueError(f"line {lineno}: string length {p.n_qubits} differs from {n}")
            terms.append((p, coeff))
        if n is None:
            raise ValueError("no terms found")
        return cls(n, terms)


def _fmt(c: complex) -> str:
    c = complex(c)
    if c.imag == 0:
        return f"{c.real:.12g}"
    return f"{c.real:.12g}{c.imag:+.12g}j"


def group_commuting(op: PauliOperator) -> list[list[tuple[PauliString, complex]]]:
    """Greedy first-fit partition into qubit-wise commuting groups, largest |coeff| first."""
    order = sorted(op.terms.items(), key=lambda kv: (-abs(kv[1]), kv[0].label))
    groups: list[list[tuple[PauliString, complex]]] = []
    for p, c in order:
        for g in groups:
            if all(commutes_qubitwise(p, q) for q, _ in g):
                g.append((p, c))
                break
        else:
            groups.append([(p, c)])
    return groups


# --- fermionic (Jordan-Wigner) encoding -------------------------------------

def jw_lower(j: int, n: int) -> PauliOperator:
    """a_j = Z_0 ... Z_{j-1} (X_j + i Y_j) / 2."""
    if not 0 <= j < n:
        raise IndexError(f"mode {j} out of range for {n} qubits")
    chain = (1 << j) - 1
    xs = PauliString(n, 1 << j, chain)
    ys = PauliString(n, 1 << j, chain | (1 << j))
    return PauliOperator(n, {xs: 0.5, ys: 0.5j})


def jw_raise(j: int, n: int) -> PauliOperator:
    return jw_lower(j, n).adjoint()


def _hermitian_check(h: np.ndarray, tol: float = 1e-9) -> None:
    if h.ndim != 2 or h.shape[0] != h.shape[1]:
        raise ValueError("matrix must be square")
    scale = max(np.abs(h).max(), 1e-300)
    if np.abs(h - h.conj().T).max() > tol * scale:
        raise ValueError("matrix is not Hermitian")


def jw_encode_one_body(h, n: int) -> PauliOperator:
    """Sum_ij h_ij a_i^dagger a_j with mode i on qubit i."""
    h = np.asarray(h, dtype=complex)
    _hermitian_check(h)
    if h.shape[0] != n:
        raise ValueError(f"matrix dimension {h.shape[0]} != qubit count {n}")
    total = PauliOperator(n)
    lowers = [jw_lower(j, n) for j in range(n)]
    raises = [op.adjoint() for op in lowers]
    for i in range(n):
        for j in range(n):
            if h[i, j] != 0:
                total = total + h[i, j] * (raises[i] * lowers[j])
    return total.real() if total.is_hermitian() else total


# --- compact encoding --------------------------------------------------------

def _walsh_hadamard(v: np.ndarray) -> np.ndarray:
    """out[z] = sum_k (-1)^{popcount(k & z)} v[k]."""
    out = np.array(v, dtype=complex)
    h = 1
    while h < len(out):
        out = out.reshape(-1, 2, h)
        a, b = out[:, 0, :].copy(), out[:, 1, :].copy()
        out[:, 0, :], out[:, 1, :] = a + b, a - b
        out = out.reshape(-1)
        h *= 2
    return out


def compact_encode(H, drop_tol: float = 1e-12) -> PauliOperator:
    """Expand a 2^n x 2^n Hermitian matrix as (1/N) sum_P Tr(P H) P."""
    H = np.asarray(H, dtype=complex)
    _hermitian_check(H)
    N = H.shape[0]
    n = N.bit_length() - 1
    if N < 2 or (1 << n) != N:
        raise ValueError(f"dimension {N} is not a power of two >= 2")
    rows = np.arange(N)
    terms = {}
    for x in range(N):
        # Tr(P H) = i^{ny} sum_k (-1)^{pc(k&z)} H[k, k^x]
        traces = _walsh_hadamard(H[rows, rows ^ x])
        for z in range(N):
            t = traces[z] * _PHASES[_popcount(x & z) % 4] / N
            if t != 0:
                terms[PauliString(n, x, z)] = t
    op = PauliOperator(n, terms, drop_tol=drop_tol)
    return op.real() if op.is_hermitian() else op


def reconstruct_matrix(op: PauliOperator, qubit_cap: int = DEFAULT_QUBIT_CAP) -> np.ndarray:
    n = op.n_qubits
    if n > qubit_cap:
        raise ValueError(f"{n} qubits exceeds cap {qubit_cap}")
    dim = 1 << n
    cols = np.arange(dim)
    out = np.zeros((dim, dim), dtype=complex)
    for p, c in op.terms.items():
        out[cols ^ p.x, cols] += c * _PHASES[p.n_y % 4] * parity_signs(cols, p.z)
    return out


def operator_from_matrix_outer(v) -> PauliOperator:
    """Compact encoding of |v><v| for a real or complex vector of length 2^n."""
    v = np.asarray(v, dtype=complex)
    return compact_encode(np.outer(v, v.conj()))
