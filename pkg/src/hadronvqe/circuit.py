"""Gate-level statevector simulation with exact, shot-sampled and noisy tiers."""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Optional, Sequence

import numpy as np
from scipy.optimize import nnls

from . import kernels
from .kernels import GATE_CODES
from .pauli import PauliOperator, PauliString, group_commuting, parity_signs

ROTATIONS = ("RX", "RY", "RZ")
SIM_QUBIT_CAP = 20


@dataclass(frozen=True)
class Gate:
    """One gate.  Rotation angles are either ``angle`` or ``scale * params[param]``."""

    kind: str
    target: int
    control: Optional[int] = None
    angle: Optional[float] = None
    param: Optional[int] = None
    scale: float = 1.0

    def __post_init__(self):
        if self.kind not in GATE_CODES:
            raise ValueError(f"unknown gate {self.kind!r}")
        if (self.kind == "CX") != (self.control is not None):
            raise ValueError("CX needs a control; other gates must not have one")
        if self.control is not None and self.control == self.target:
            raise ValueError("control equals target")
        if self.kind in ROTATIONS and (self.angle is None) == (self.param is None):
            raise ValueError("rotation needs exactly one of angle or param")
        if self.kind not in ROTATIONS and (self.angle is not None or self.param is not None):
            raise ValueError(f"{self.kind} takes no angle")

    def describe(self) -> str:
        parts = [self.kind, str(self.target)]
        if self.control is not None:
            parts.append(str(self.control))
        if self.param is not None:
            parts.append(f"p{self.param}" if self.scale == 1.0 else f"p{self.param}*{self.scale:g}")
        elif self.angle is not None:
            parts.append(f"{self.angle:.12g}")
        return " ".join(parts)


class Circuit:
    """Immutable ordered gate list with packed arrays for the kernels."""

    def __init__(self, n_qubits: int, gates: Sequence[Gate], n_parameters: Optional[int] = None):
        self.n_qubits = int(n_qubits)
        self.gates = tuple(gates)
        used = [g.param for g in self.gates if g.param is not None]
        self.n_parameters = int(n_parameters if n_parameters is not None else (max(used) + 1 if used else 0))
        for g in self.gates:
            if not 0 <= g.target < self.n_qubits or (g.control is not None and not 0 <= g.control < self.n_qubits):
                raise ValueError(f"gate {g.describe()} outside {self.n_qubits} qubits")
            if g.param is not None and not 0 <= g.param < self.n_parameters:
                raise ValueError(f"parameter index {g.param} out of range")
        self._kinds = np.array([GATE_CODES[g.kind] for g in self.gates], dtype=np.int32)
        self._targets = np.array([g.target for g in self.gates], dtype=np.int32)
        self._controls = np.array([-1 if g.control is None else g.control for g in self.gates], dtype=np.int32)
        self._const = np.array([g.angle or 0.0 for g in self.gates], dtype=float)
        self._pidx = np.array([-1 if g.param is None else g.param for g in self.gates], dtype=np.int64)
        self._scale = np.array([g.scale if g.param is not None else 0.0 for g in self.gates], dtype=float)
        self.parameterized = np.flatnonzero(self._pidx >= 0)

    def __len__(self):
        return len(self.gates)

    def angles(self, params) -> np.ndarray:
        params = np.asarray(params, dtype=float)
        if params.shape != (self.n_parameters,):
            raise ValueError(f"expected {self.n_parameters} parameters, got {params.shape}")
        out = self._const.copy()
        sel = self.parameterized
        out[sel] = self._scale[sel] * params[self._pidx[sel]]
        return out

    def param_of_gate(self, g: int) -> tuple[int, float]:
        return int(self._pidx[g]), float(self._scale[g])

    def compose(self, other: "Circuit") -> "Circuit":
        if other.n_qubits != self.n_qubits:
            raise ValueError("qubit count mismatch")
        return Circuit(self.n_qubits, self.gates + other.gates, max(self.n_parameters, other.n_parameters))

    def dump(self) -> str:
        return "".join(g.describe() + "\n" for g in self.gates)

    def depth(self) -> int:
        level = [0] * self.n_qubits
        for g in self.gates:
            qs = [g.target] + ([g.control] if g.control is not None else [])
            d = max(level[q] for q in qs) + 1
            for q in qs:
                level[q] = d
        return max(level, default=0)

    def run(self, angles: np.ndarray, initial: int = 0, state: Optional[np.ndarray] = None) -> np.ndarray:
        """Raw kernel call on explicit gate angles; returns the amplitude vector."""
        if state is None:
            state = np.zeros(1 << self.n_qubits, dtype=complex)
            state[initial] = 1.0
        kernels.apply_gates(state, self._kinds, self._targets, self._controls, np.ascontiguousarray(angles, dtype=float))
        return state


@dataclass(frozen=True)
class QuantumState:
    amplitudes: np.ndarray = field(repr=False)

    def __post_init__(self):
        a = self.amplitudes
        n = a.shape[0].bit_length() - 1
        if a.ndim != 1 or (1 << n) != a.shape[0]:
            raise ValueError("state length must be a power of two")
        if abs(np.vdot(a, a).real - 1) > 1e-10:
            raise ValueError("state is not normalized")

    @property
    def n_qubits(self) -> int:
        return self.amplitudes.shape[0].bit_length() - 1

    @classmethod
    def basis(cls, n_qubits: int, index: int) -> "QuantumState":
        a = np.zeros(1 << n_qubits, dtype=complex)
        a[index] = 1
        return cls(a)

    @classmethod
    def from_vector(cls, v) -> "QuantumState":
        v = np.asarray(v, dtype=complex)
        return cls(v / np.linalg.norm(v))

    def overlap(self, other: "QuantumState") -> complex:
        return complex(np.vdot(self.amplitudes, other.amplitudes))

    def fidelity(self, other) -> float:
        b = other.amplitudes if isinstance(other, QuantumState) else np.asarray(other, dtype=complex)
        return float(abs(np.vdot(self.amplitudes, b)) ** 2 / np.vdot(b, b).real)


def apply_circuit(c: Circuit, params, initial: int = 0) -> QuantumState:
    if not 0 <= initial < (1 << c.n_qubits):
        raise ValueError(f"initial index {initial} invalid for {c.n_qubits} qubits")
    amps = c.run(c.angles(params), initial)
    return QuantumState(amps)


# --- exact expectations --------------------------------------------------------

@lru_cache(maxsize=256)
def _packed(op: PauliOperator):
    items = list(op.terms.items())
    xs = np.array([p.x for p, _ in items], dtype=np.int64)
    zs = np.array([p.z for p, _ in items], dtype=np.int64)
    nys = np.array([p.n_y for p, _ in items], dtype=np.int64)
    cs = np.array([c.real for _, c in items], dtype=float)
    return xs, zs, nys, cs


def _require_hermitian(op: PauliOperator) -> None:
    if not op.is_hermitian():
        raise ValueError("operator is not Hermitian")


def expectation_amplitudes(amps: np.ndarray, op: PauliOperator) -> float:
    xs, zs, nys, cs = _packed(op)
    return float(np.dot(cs, kernels.pauli_expectations(amps, xs, zs, nys)))


def expectation_exact(state: QuantumState, op: PauliOperator) -> float:
    _require_hermitian(op)
    if state.n_qubits != op.n_qubits:
        raise ValueError("qubit count mismatch")
    return expectation_amplitudes(np.ascontiguousarray(state.amplitudes, dtype=complex), op)


def density_matrix(state: QuantumState) -> np.ndarray:
    a = state.amplitudes
    return np.outer(a, a.conj())


def density_matrix_json(rho: np.ndarray, labels: Sequence[str]) -> str:
    return json.dumps({"labels": list(labels), "real": np.real(rho).tolist(), "imag": np.imag(rho).tolist()})


def counts_csv(counts, n_qubits: int) -> str:
    lines = ["bitstring,count"]
    lines += [f"{format(i, f'0{n_qubits}b')},{int(c)}" for i, c in enumerate(counts) if c]
    return "\n".join(lines) + "\n"


# --- randomness ----------------------------------------------------------------

def make_rng(*keys) -> np.random.Generator:
    """Counter-based generator keyed by a tuple of nonnegative integers."""
    flat = []
    for k in keys:
        if isinstance(k, (tuple, list)):
            flat.extend(int(v) for v in k)
        elif k is not None:
            flat.append(int(k))
    return np.random.Generator(np.random.Philox(np.random.SeedSequence([v & 0xFFFFFFFF for v in flat])))


# --- noise model ---------------------------------------------------------------

@dataclass(frozen=True)
class NoiseSpec:
    """Readout flips (p10: 0 read as 1, p01: 1 read as 0) and depolarizing rates per gate."""

    readout_p01: float | tuple = 0.0
    readout_p10: float | tuple = 0.0
    depol_1q: float = 0.0
    depol_2q: float = 0.0
    seed: int = 0

    def __post_init__(self):
        for name in ("readout_p01", "readout_p10"):
            vals = np.atleast_1d(getattr(self, name))
            if np.any(vals < 0) or np.any(vals > 1):
                raise ValueError(f"{name} must lie in [0, 1]")
        for name in ("depol_1q", "depol_2q"):
            if not 0 <= getattr(self, name) <= 1:
                raise ValueError(f"{name} must lie in [0, 1]")

    def flips(self, n_qubits: int) -> tuple[np.ndarray, np.ndarray]:
        p01 = np.broadcast_to(np.asarray(self.readout_p01, dtype=float), (n_qubits,))
        p10 = np.broadcast_to(np.asarray(self.readout_p10, dtype=float), (n_qubits,))
        return p01, p10

    def confusion_matrix(self, n_qubits: int) -> np.ndarray:
        """A[observed][prepared] for independent per-qubit flips (qubit 0 least significant)."""
        p01, p10 = self.flips(n_qubits)
        a = np.ones((1, 1))
        for q in reversed(range(n_qubits)):
            a = np.kron(a, np.array([[1 - p10[q], p01[q]], [p10[q], 1 - p01[q]]]))
        return a

    @property
    def has_gate_noise(self) -> bool:
        return self.depol_1q > 0 or self.depol_2q > 0


@dataclass(frozen=True)
class MitigationFilter:
    calibration_matrix: np.ndarray

    def __post_init__(self):
        a = self.calibration_matrix
        if a.ndim != 2 or a.shape[0] != a.shape[1]:
            raise ValueError("calibration matrix must be square")
        if np.abs(a.sum(axis=0) - 1).max() > 1e-10:
            raise ValueError("calibration matrix columns must sum to 1")

    @property
    def dim(self) -> int:
        return self.calibration_matrix.shape[0]

    def apply(self, frequencies: np.ndarray) -> np.ndarray:
        """Nonnegative least-squares estimate of the prepared distribution."""
        q, _ = nnls(self.calibration_matrix, np.asarray(frequencies, dtype=float))
        s = q.sum()
        return q / s if s > 0 else q


_SINGLE = {
    "X": np.array([[0, 1], [1, 0]], dtype=complex),
    "H": np.array([[1, 1], [1, -1]], dtype=complex) / np.sqrt(2),
    "Sdg": np.diag([1, -1j]),
}


def _gate_matrix(kind: str, angle: float) -> np.ndarray:
    c, s = np.cos(angle / 2), np.sin(angle / 2)
    if kind == "RX":
        return np.array([[c, -1j * s], [-1j * s, c]])
    if kind == "RY":
        return np.array([[c, -s], [s, c]], dtype=complex)
    if kind == "RZ":
        return np.diag([np.exp(-0.5j * angle), np.exp(0.5j * angle)])
    return _SINGLE[kind]


class DensityMatrixSimulator:
    """Mixed-state evolution with a depolarizing channel after every gate.

    Density matrices may carry leading batch axes; every operation acts on the
    last two axes, so several initial states evolve in one pass.
    """

    def __init__(self, n_qubits: int, noise: NoiseSpec):
        self.n = n_qubits
        self.noise = noise
        self.dim = 1 << n_qubits
        self._idx = np.arange(self.dim)
        self._flip = [self._idx ^ (1 << q) for q in range(n_qubits)]
        self._zsign = [np.outer(z, z) for z in (1 - 2 * ((self._idx >> q) & 1) for q in range(n_qubits))]
        self._cx_perm: dict = {}

    def _left(self, rho, u, q):
        v = rho.reshape(rho.shape[:-2] + (-1, 2, 1 << q, self.dim))
        return np.einsum("ij,...ajbk->...aibk", u, v).reshape(rho.shape)

    def _unitary_1q(self, rho, u, q):
        t = self._left(rho, u, q).conj().swapaxes(-1, -2)
        return self._left(t, u, q)

    @staticmethod
    def _permute(rho, perm):
        return rho[..., perm, :][..., perm]

    def _cx(self, rho, c, t):
        perm = self._cx_perm.get((c, t))
        if perm is None:
            perm = self._cx_perm[c, t] = np.where((self._idx >> c) & 1 == 1, self._idx ^ (1 << t), self._idx)
        return self._permute(rho, perm)

    def _conj_x(self, rho, q):
        return self._permute(rho, self._flip[q])

    def _conj_z(self, rho, q):
        return rho * self._zsign[q]

    def _pauli_twirls(self, rho, q):
        # [rho, X rho X, Y rho Y, Z rho Z]
        x = self._conj_x(rho, q)
        z = self._conj_z(rho, q)
        return [rho, x, self._conj_x(z, q), z]

    def _depolarize_1q(self, rho, q, p):
        if p == 0:
            return rho
        _, x, y, z = self._pauli_twirls(rho, q)
        return (1 - p) * rho + (p / 3) * (x + y + z)

    def _depolarize_2q(self, rho, a, b, p):
        if p == 0:
            return rho
        total = np.zeros_like(rho)
        for k, ra in enumerate(self._pauli_twirls(rho, a)):
            for j, rab in enumerate(self._pauli_twirls(ra, b)):
                if k or j:
                    total += rab
        return (1 - p) * rho + (p / 15) * total

    def evolve(self, circuit: Circuit, angles: np.ndarray, rho: np.ndarray) -> np.ndarray:
        for g, ang in zip(circuit.gates, angles):
            if g.kind == "CX":
                rho = self._cx(rho, g.control, g.target)
                rho = self._depolarize_2q(rho, g.control, g.target, self.noise.depol_2q)
            else:
                rho = self._unitary_1q(rho, _gate_matrix(g.kind, ang), g.target)
                rho = self._depolarize_1q(rho, g.target, self.noise.depol_1q)
        return rho

    def initial(self, index) -> np.ndarray:
        """|i><i| for one index, or a stack of them for a sequence of indices."""
        idx = np.atleast_1d(index)
        rho = np.zeros((idx.size, self.dim, self.dim), dtype=complex)
        rho[np.arange(idx.size), idx, idx] = 1
        return rho if np.ndim(index) else rho[0]


# --- sampled expectations ------------------------------------------------------------

@dataclass(frozen=True)
class MeasurementGroup:
    basis: Circuit
    supports: np.ndarray  # z-mask of each term after the basis change
    coeffs: np.ndarray


@lru_cache(maxsize=256)
def measurement_groups(op: PauliOperator) -> tuple[MeasurementGroup, ...]:
    out = []
    n = op.n_qubits
    for group in group_commuting(op):
        xmask = ymask = 0
        for p, _ in group:
            xmask |= p.x & ~p.z
            ymask |= p.x & p.z
        gates = []
        for q in range(n):
            if (ymask >> q) & 1:
                gates += [Gate("Sdg", q), Gate("H", q)]
            elif (xmask >> q) & 1:
                gates.append(Gate("H", q))
        supports = np.array([p.support for p, _ in group], dtype=np.int64)
        coeffs = np.array([c.real for _, c in group], dtype=float)
        out.append(MeasurementGroup(Circuit(n, gates, 0), supports, coeffs))
    return tuple(out)


def outcome_values(group: MeasurementGroup, n_qubits: int) -> np.ndarray:
    """Per-bitstring value sum_t c_t (-1)^{parity(b & support_t)}."""
    idx = np.arange(1 << n_qubits)
    vals = np.zeros(1 << n_qubits)
    for s, c in zip(group.supports, group.coeffs):
        vals += c * parity_signs(idx, int(s))
    return vals


@dataclass
class SampledResult:
    mean: float
    std_error: float
    counts: list = field(default_factory=list)


class Sampler:
    """Shot-based estimator of one operator, optionally noisy and mitigated."""

    def __init__(self, op: PauliOperator, shots: int, noise: Optional[NoiseSpec] = None,
                 mitigation: Optional[MitigationFilter] = None):
        _require_hermitian(op)
        if shots < 1:
            raise ValueError("shots must be >= 1")
        n = op.n_qubits
        if mitigation is not None and mitigation.dim != 1 << n:
            raise ValueError(f"filter dimension {mitigation.dim} does not match {n} qubits")
        self.op, self.shots, self.noise, self.mitigation = op, int(shots), noise, mitigation
        self.n = n
        self.groups = measurement_groups(op)
        self.values = [outcome_values(g, n) for g in self.groups]
        self.confusion = noise.confusion_matrix(n) if noise is not None else None
        self._dm = DensityMatrixSimulator(n, noise) if noise is not None and noise.has_gate_noise else None

    def _group_probabilities(self, circuit: Circuit, angles, initials: Sequence[int]) -> list[list[np.ndarray]]:
        """Outcome distributions indexed [initial][group]."""
        if self._dm is None:
            out = []
            for i in initials:
                amps = circuit.run(angles, i)
                out.append([np.abs(g.basis.run(np.zeros(len(g.basis)), state=amps.copy())) ** 2
                            for g in self.groups])
            return out
        rho = self._dm.evolve(circuit, angles, self._dm.initial(list(initials)))
        per_group = []
        for g in self.groups:
            r = self._dm.evolve(g.basis, np.zeros(len(g.basis)), rho)
            per_group.append(np.clip(np.real(np.diagonal(r, axis1=-2, axis2=-1)), 0, None))
        return [[p[k] for p in per_group] for k in range(len(initials))]

    def estimate(self, circuit: Circuit, angles, initial: int, seed, keep_counts: bool = False) -> SampledResult:
        return self._from_probabilities(self._group_probabilities(circuit, angles, [initial])[0], seed, keep_counts)

    def estimate_many(self, circuit: Circuit, angles, initials: Sequence[int], seeds) -> list[SampledResult]:
        """One estimate per initial state; the noisy path evolves them as one batch."""
        probs = self._group_probabilities(circuit, angles, initials)
        return [self._from_probabilities(p, s, False) for p, s in zip(probs, seeds)]

    def estimate_amplitudes(self, amps: np.ndarray, seed, keep_counts: bool = False) -> SampledResult:
        """Sample a given pure state; only readout noise applies here."""
        amps = np.ascontiguousarray(amps, dtype=complex)
        probs = (np.abs(g.basis.run(np.zeros(len(g.basis)), state=amps.copy())) ** 2 for g in self.groups)
        return self._from_probabilities(probs, seed, keep_counts)

    def _from_probabilities(self, group_probs, seed, keep_counts: bool) -> SampledResult:
        mean, var = 0.0, 0.0
        kept = []
        seed_key = seed if isinstance(seed, (tuple, list)) else (seed,)
        noise_key = (self.noise.seed,) if self.noise is not None else ()
        for gi, (probs, vals) in enumerate(zip(group_probs, self.values)):
            if self.confusion is not None:
                probs = self.confusion @ probs
            probs = probs / probs.sum()
            rng = make_rng(seed_key, noise_key, gi)
            counts = rng.multinomial(self.shots, probs)
            freq = counts / self.shots
            if self.mitigation is not None:
                freq = self.mitigation.apply(freq)
            m = float(np.dot(freq, vals))
            spread = float(np.dot(freq, (vals - m) ** 2))
            if self.shots > 1:
                spread *= self.shots / (self.shots - 1)
            mean += m
            var += spread / self.shots
            if keep_counts:
                kept.append(counts)
        return SampledResult(mean, float(np.sqrt(var)), kept)


def expectation_sampled(c: Circuit, params, initial: int, op: PauliOperator, shots: int, seed,
                        noise: Optional[NoiseSpec] = None,
                        filter: Optional[MitigationFilter] = None) -> tuple[float, float]:
    if shots < 1:
        raise ValueError("shots must be >= 1")
    if not 0 <= initial < (1 << c.n_qubits):
        raise ValueError("invalid initial index")
    res = Sampler(op, shots, noise, filter).estimate(c, c.angles(params), initial, seed)
    return res.mean, res.std_error


def build_calibration_filter(n_qubits: int, noise: NoiseSpec, shots_per_state: int, seed: int = 0) -> MitigationFilter:
    """Prepare every basis state under the noise model and tabulate observed outcome frequencies."""
    if n_qubits > 6:
        raise ValueError("calibration limited to 6 qubits")
    dim = 1 << n_qubits
    confusion = noise.confusion_matrix(n_qubits)
    dm = DensityMatrixSimulator(n_qubits, noise) if noise.has_gate_noise else None
    cal = np.zeros((dim, dim))
    for b in range(dim):
        if dm is None:
            probs = np.zeros(dim)
            probs[b] = 1
        else:
            prep = Circuit(n_qubits, [Gate("X", q) for q in range(n_qubits) if (b >> q) & 1], 0)
            probs = np.real(np.diag(dm.evolve(prep, np.zeros(len(prep)), dm.initial(0))))
        probs = np.clip(confusion @ probs, 0, None)
        counts = make_rng(seed, noise.seed, 0xCA1, b).multinomial(shots_per_state, probs / probs.sum())
        cal[:, b] = counts / shots_per_state
    return MitigationFilter(cal)
