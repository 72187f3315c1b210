"""Light-front basis catalogs, basis functions, bundled Hamiltonians and the exact eigensolver."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import lru_cache
from importlib import resources
from pathlib import Path
from typing import Callable, Optional, Sequence

import numpy as np

from .pauli import PauliOperator, reconstruct_matrix

BUILTIN_LABELS = ("builtin_1_1", "builtin_4_1")


@dataclass(frozen=True)
class ModelParams:
    kappa: float
    m_q: float
    N_f: int = 3
    alpha_s0: float = 0.89
    m_qbar: Optional[float] = None

    def __post_init__(self):
        if self.kappa <= 0 or self.m_q <= 0:
            raise ValueError("kappa and m_q must be positive")
        if self.m_qbar is not None and self.m_qbar != self.m_q:
            raise ValueError("only the equal-mass case is supported")

    @property
    def alpha(self) -> float:
        mb = self.m_q if self.m_qbar is None else self.m_qbar
        return 2 * mb * (self.m_q + mb) / self.kappa ** 2

    @property
    def beta(self) -> float:
        mb = self.m_q if self.m_qbar is None else self.m_qbar
        return 2 * self.m_q * (self.m_q + mb) / self.kappa ** 2


# Model parameter rows by truncation (kappa, m_q in MeV).
PARAMS_1_1 = ModelParams(kappa=560.0, m_q=300.0)
PARAMS_4_1 = ModelParams(kappa=560.0, m_q=380.0)
PARAMS_4_3 = ModelParams(kappa=560.0, m_q=400.0)


@dataclass(frozen=True)
class BlfqQuantumNumbers:
    n: int
    m: int
    l: int
    two_s: int
    two_sbar: int

    def __post_init__(self):
        if self.n < 0 or self.l < 0:
            raise ValueError("n and l must be nonnegative")
        if self.two_s not in (1, -1) or self.two_sbar not in (1, -1):
            raise ValueError("spin projections must be +-1/2")

    @property
    def s(self) -> float:
        return self.two_s / 2

    @property
    def sbar(self) -> float:
        return self.two_sbar / 2

    @property
    def m_j(self) -> int:
        return self.m + (self.two_s + self.two_sbar) // 2

    def within(self, n_max: int, l_max: int) -> bool:
        return 2 * self.n + abs(self.m) + 1 <= n_max and self.l <= l_max


@dataclass(frozen=True)
class BasisCatalog:
    """Ordered basis states; position i is computational basis index i (compact) or mode i (direct).

    ``labels`` and ``printed_bitstrings`` carry the reference-table row label
    and bitstring of each state for cross-referencing.
    """

    truncation: tuple[int, int]
    states: tuple[BlfqQuantumNumbers, ...]
    labels: tuple[str, ...] = ()
    printed_bitstrings: tuple[str, ...] = ()
    name: str = ""

    def __post_init__(self):
        if len(set(self.states)) != len(self.states):
            raise ValueError("duplicate states in catalog")
        n_max, l_max = self.truncation
        bad = [s for s in self.states if not s.within(n_max, l_max)]
        if bad:
            raise ValueError(f"states violate truncation {self.truncation}: {bad}")
        if len({s.m_j for s in self.states}) > 1:
            raise ValueError("m_j is not conserved across the catalog")

    def __len__(self):
        return len(self.states)

    @property
    def n_qubits(self) -> int:
        return max(1, (len(self.states) - 1).bit_length())

    def index_of(self, state: BlfqQuantumNumbers) -> int:
        return self.states.index(state)

    def bitstring(self, index: int) -> str:
        return format(index, f"0{self.n_qubits}b")

    def direct_bitstring(self, index: int) -> str:
        return format(1 << index, f"0{len(self.states)}b")

    def by_label(self, label: str) -> tuple[int, BlfqQuantumNumbers]:
        i = self.labels.index(label)
        return i, self.states[i]


@dataclass(frozen=True)
class HamiltonianSource:
    label: str
    matrix: np.ndarray = field(repr=False)
    catalog: Optional[BasisCatalog]
    params: Optional[ModelParams]
    n_physical: Optional[int] = None

    def __post_init__(self):
        m = self.matrix
        if m.ndim != 2 or m.shape[0] != m.shape[1]:
            raise ValueError("Hamiltonian must be square")
        _check_hermitian(m)
        phys = self.n_physical if self.n_physical is not None else m.shape[0]
        if self.catalog is not None and len(self.catalog) != phys:
            raise ValueError(f"catalog size {len(self.catalog)} != matrix dimension {phys}")

    @property
    def dim(self) -> int:
        return self.matrix.shape[0]


def _check_hermitian(m: np.ndarray, rtol: float = 1e-9) -> None:
    scale = max(float(np.abs(m).max()), 1e-300)
    if np.abs(m - m.conj().T).max() > rtol * scale:
        raise ValueError("matrix is not Hermitian")


# --- text formats -----------------------------------------------------------

def parse_catalog(text: str, truncation: tuple[int, int], name: str = "") -> BasisCatalog:
    states, labels, printed = [], [], []
    for lineno, raw in enumerate(text.splitlines(), 1):
        body, _, comment = raw.partition("#")
        parts = body.split()
        if not parts:
            continue
        if len(parts) != 7:
            raise ValueError(f"catalog line {lineno}: expected 'index n m l 2s 2sbar bitstring'")
        idx, n, m, l, s2, sb2 = (int(p) for p in parts[:6])
        if idx != len(states):
            raise ValueError(f"catalog line {lineno}: index {idx} out of order")
        if int(parts[6], 2) != idx:
            raise ValueError(f"catalog line {lineno}: bitstring {parts[6]} does not encode index {idx}")
        states.append(BlfqQuantumNumbers(n, m, l, s2, sb2))
        extra = comment.split()
        labels.append(extra[0] if extra else str(idx + 1))
        printed.append(extra[1].strip("|>") if len(extra) > 1 else parts[6])
    return BasisCatalog(truncation, tuple(states), tuple(labels), tuple(printed), name)


def parse_matrix(text: str) -> np.ndarray:
    rows, dim = [], None
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if dim is None:
            head = line.split()
            if len(head) != 4 or head[0] != "dim" or head[2] != "units" or head[3] != "MeV2":
                raise ValueError(f"line {lineno}: expected header 'dim N units MeV2'")
            dim = int(head[1])
            continue
        vals = [float(v) for v in line.split()]
        if len(vals) != dim:
            raise ValueError(f"line {lineno}: expected {dim} entries, got {len(vals)}")
        rows.append(vals)
    if dim is None:
        raise ValueError("missing header")
    if len(rows) != dim:
        raise ValueError(f"expected {dim} rows, got {len(rows)}")
    return np.array(rows, dtype=float)


def format_matrix(m: np.ndarray) -> str:
    lines = [f"dim {m.shape[0]} units MeV2"]
    lines += [" ".join(f"{v:.12g}" for v in row) for row in np.real(m)]
    return "\n".join(lines) + "\n"


def _data(name: str) -> str:
    return resources.files("hadronvqe").joinpath("data", name).read_text()


@lru_cache(maxsize=None)
def builtin_catalog(truncation: tuple[int, int]) -> BasisCatalog:
    files = {(1, 1): "catalog_11.txt", (4, 1): "catalog_41.txt"}
    if truncation not in files:
        raise ValueError(f"no bundled catalog for truncation {truncation}")
    return parse_catalog(_data(files[truncation]), truncation, name=f"{truncation[0]}_{truncation[1]}")


@lru_cache(maxsize=None)
def builtin_operator_4_1() -> PauliOperator:
    return PauliOperator.from_text(_data("h41_compact.txt"))


def builtin_hamiltonian(label: str) -> HamiltonianSource:
    if label == "builtin_1_1":
        return HamiltonianSource(label, parse_matrix(_data("h11.txt")), builtin_catalog((1, 1)), PARAMS_1_1)
    if label == "builtin_4_1":
        mat = reconstruct_matrix(builtin_operator_4_1()).real
        return HamiltonianSource(label, mat, builtin_catalog((4, 1)), PARAMS_4_1)
    raise ValueError(f"unknown builtin Hamiltonian {label!r}; expected one of {BUILTIN_LABELS}")


def pad_to_power_of_two(matrix: np.ndarray, penalty_factor: float = 1e3) -> np.ndarray:
    """Embed in the next 2^n dimension; padded rows get a large diagonal penalty."""
    dim = matrix.shape[0]
    target = 1 << max(1, (dim - 1).bit_length())
    if target == dim:
        return np.array(matrix)
    bound = float(np.max(np.sum(np.abs(matrix), axis=1)))  # Gershgorin estimate of max |eigenvalue|
    out = np.zeros((target, target), dtype=matrix.dtype)
    out[:dim, :dim] = matrix
    out[np.arange(dim, target), np.arange(dim, target)] = penalty_factor * max(bound, 1.0)
    return out


def load_external_hamiltonian(path, catalog_path=None, params: Optional[ModelParams] = None,
                              truncation: Optional[tuple[int, int]] = None) -> HamiltonianSource:
    matrix = parse_matrix(Path(path).read_text())
    _check_hermitian(matrix)
    catalog = None
    if catalog_path is not None:
        text = Path(catalog_path).read_text()
        if truncation is None:
            # smallest truncation that admits every listed state
            probe = parse_catalog(text, (10 ** 6, 10 ** 6))
            truncation = (max(2 * s.n + abs(s.m) + 1 for s in probe.states), max(s.l for s in probe.states))
        catalog = parse_catalog(text, truncation, name=Path(catalog_path).stem)
        if len(catalog) != matrix.shape[0]:
            raise ValueError(f"catalog size {len(catalog)} != matrix dimension {matrix.shape[0]}")
    phys = matrix.shape[0]
    return HamiltonianSource("external", pad_to_power_of_two(matrix), catalog, params, n_physical=phys)


# --- exact eigensolver -------------------------------------------------------

def jacobi_eigh(a, tol: float = 1e-12, max_sweeps: int = 100) -> tuple[np.ndarray, np.ndarray]:
    """Cyclic Jacobi diagonalization of a Hermitian matrix; eigenvalues ascending."""
    a = np.array(a, dtype=complex)
    _check_hermitian(a)
    n = a.shape[0]
    a = 0.5 * (a + a.conj().T)
    v = np.eye(n, dtype=complex)
    norm = max(np.linalg.norm(a), 1e-300)
    for _ in range(max_sweeps):
        off = np.linalg.norm(a - np.diag(np.diag(a)))
        if off <= tol * norm:
            break
        for p in range(n - 1):
            for q in range(p + 1, n):
                b = a[p, q]
                mag = abs(b)
                if mag <= 1e-20 * norm:
                    continue
                ph = b / mag
                # phase the q column so the pair becomes real symmetric
                a[:, q] *= ph.conjugate()
                a[q, :] *= ph
                v[:, q] *= ph.conjugate()
                theta = (a[q, q].real - a[p, p].real) / (2 * mag)
                t = math.copysign(1.0, theta) / (abs(theta) + math.sqrt(theta * theta + 1))
                c = 1 / math.sqrt(t * t + 1)
                s = t * c
                cp, cq = a[:, p].copy(), a[:, q].copy()
                a[:, p], a[:, q] = c * cp - s * cq, s * cp + c * cq
                rp, rq = a[p, :].copy(), a[q, :].copy()
                a[p, :], a[q, :] = c * rp - s * rq, s * rp + c * rq
                a[p, q] = a[q, p] = 0.0
                vp, vq = v[:, p].copy(), v[:, q].copy()
                v[:, p], v[:, q] = c * vp - s * vq, s * vp + c * vq
    w = np.real(np.diag(a))
    order = np.argsort(w, kind="stable")
    w, v = w[order], v[:, order]
    # fix phases so the largest component of each vector is real positive
    for k in range(n):
        j = int(np.argmax(np.abs(v[:, k])))
        v[:, k] *= abs(v[j, k]) / v[j, k]
    if np.allclose(v.imag, 0, atol=1e-14):
        v = v.real
    return w, v


def exact_eigensolve(h) -> tuple[np.ndarray, np.ndarray]:
    """Eigenvalues (ascending) and orthonormal eigenvectors of a HamiltonianSource or matrix."""
    m = h.matrix if isinstance(h, HamiltonianSource) else np.asarray(h)
    if m.shape[0] > 4096:
        raise ValueError("dimension exceeds 4096")
    if m.shape[0] <= 64:
        return jacobi_eigh(m)
    w, v = np.linalg.eigh(m)
    return w, v


# --- orthogonal polynomials and basis functions ---------------------------------

def jacobi_polynomial(n: int, a: float, b: float, z):
    z = np.asarray(z, dtype=float)
    p0 = np.ones_like(z)
    if n == 0:
        return p0
    p1 = (a + 1) + (a + b + 2) * (z - 1) / 2
    for k in range(2, n + 1):
        s = 2 * k + a + b
        c1 = 2 * k * (k + a + b) * (s - 2)
        c2 = (s - 1) * (s * (s - 2) * z + a * a - b * b)
        c3 = 2 * (k + a - 1) * (k + b - 1) * s
        p0, p1 = p1, (c2 * p1 - c3 * p0) / c1
    return p1


def laguerre_polynomial(n: int, a: float, t):
    t = np.asarray(t, dtype=float)
    p0 = np.ones_like(t)
    if n == 0:
        return p0
    p1 = 1 + a - t
    for k in range(1, n):
        p0, p1 = p1, ((2 * k + 1 + a - t) * p1 - (k + a) * p0) / (k + 1)
    return p1


def _chi_norm(l: int, a: float, b: float) -> float:
    log_ratio = math.lgamma(l + 1) + math.lgamma(l + a + b + 1) - math.lgamma(l + a + 1) - math.lgamma(l + b + 1)
    return math.sqrt(4 * math.pi * (2 * l + a + b + 1)) * math.exp(0.5 * log_ratio)


def chi_l(x, l: int, params: ModelParams):
    """Longitudinal basis function, normalized to 4 pi on (0, 1)."""
    xa = np.asarray(x, dtype=float)
    if np.any((xa <= 0) | (xa >= 1)):
        raise ValueError("x must lie in the open interval (0, 1)")
    a, b = params.alpha, params.beta
    val = xa ** (b / 2) * (1 - xa) ** (a / 2) * jacobi_polynomial(l, a, b, 2 * xa - 1) * _chi_norm(l, a, b)
    return float(val) if np.ndim(x) == 0 else val


def phi_nm(q_perp, n: int, m: int, kappa: float) -> complex:
    """Transverse 2D oscillator function; normalized with measure d^2q / (2 pi)^2."""
    if n < 0:
        raise ValueError("n must be nonnegative")
    qx, qy = float(q_perp[0]), float(q_perp[1])
    q = math.hypot(qx, qy)
    am = abs(m)
    norm = math.sqrt(4 * math.pi * math.exp(math.lgamma(n + 1) - math.lgamma(n + am + 1))) / kappa
    radial = (q / kappa) ** am * math.exp(-q * q / (2 * kappa * kappa)) * float(laguerre_polynomial(n, am, q * q / kappa ** 2))
    return norm * radial * complex(math.cos(m * math.atan2(qy, qx)), math.sin(m * math.atan2(qy, qx)))


def phi_n0_transverse_integral(n: int, kappa: float) -> float:
    """Closed form of the d^2q integral of phi_n0."""
    return 2 * math.pi * kappa * math.sqrt(4 * math.pi) * (-1) ** n


# --- quadrature ----------------------------------------------------------------

_GL_NODES, _GL_WEIGHTS = np.polynomial.legendre.leggauss(20)


def _gl(f, a, b):
    mid, half = 0.5 * (a + b), 0.5 * (b - a)
    return half * float(np.dot(_GL_WEIGHTS, f(mid + half * _GL_NODES)))


def integrate(f: Callable, a: float, b: float, atol: float = 1e-10, depth: int = 40) -> float:
    """Adaptive Gauss-Legendre (20-point panels, bisection on disagreement)."""
    whole = _gl(f, a, b)
    stack = [(a, b, whole, atol, 0)]
    total = 0.0
    while stack:
        lo, hi, est, tol, d = stack.pop()
        mid = 0.5 * (lo + hi)
        left, right = _gl(f, lo, mid), _gl(f, mid, hi)
        if abs(left + right - est) <= tol or d >= depth:
            total += left + right
        else:
            stack.append((lo, mid, left, tol / 2, d + 1))
            stack.append((mid, hi, right, tol / 2, d + 1))
    return total


def integrate_unit_interval(f: Callable, atol: float = 1e-10) -> float:
    """Integral over (0, 1) with x = sin^2(u) to tame endpoint power laws."""
    def g(u):
        s, c = np.sin(u), np.cos(u)
        x = np.clip(s * s, 1e-300, 1 - 1e-16)
        return f(x) * 2 * s * c
    return integrate(g, 0.0, math.pi / 2, atol=atol)


def decay_coefficient(l: int, params: ModelParams) -> float:
    """C_l = int_0^1 sqrt(x(1-x)) chi_l(x) dx / (2 sqrt(pi))."""
    a, b = params.alpha, params.beta
    norm = _chi_norm(l, a, b)

    def f(x):
        return np.sqrt(x * (1 - x)) * x ** (b / 2) * (1 - x) ** (a / 2) * jacobi_polynomial(l, a, b, 2 * x - 1) * norm

    return integrate_unit_interval(f, atol=1e-12) / (2 * math.sqrt(math.pi))


def chi_overlap(l1: int, l2: int, params: ModelParams) -> float:
    a, b = params.alpha, params.beta
    n1, n2 = _chi_norm(l1, a, b), _chi_norm(l2, a, b)

    def f(x):
        w = x ** b * (1 - x) ** a
        return w * jacobi_polynomial(l1, a, b, 2 * x - 1) * jacobi_polynomial(l2, a, b, 2 * x - 1) * n1 * n2

    return integrate_unit_interval(f, atol=1e-12)


def masses(eigenvalues: Sequence[float]) -> np.ndarray:
    return np.sqrt(np.asarray(eigenvalues, dtype=float))
