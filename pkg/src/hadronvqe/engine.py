"""VQE and SSVQE drivers over the exact, shot-sampled and noisy simulator tiers."""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from .ansatz import AnsatzSpec
from .circuit import (Circuit, MitigationFilter, NoiseSpec, QuantumState, Sampler, apply_circuit,
                      build_calibration_filter, expectation_amplitudes)
from .optimizers import ObjectiveHandle, OptimizerConfig, OptTrace, Tracked, minimize, parameter_shift_gradient
from .pauli import PauliOperator

TIERS = ("SV", "SHOTS", "NOISY")
DEFAULT_WEIGHTS = (1.0, 0.5, 0.25, 0.125)
TAIL = 10


def geometric_weights(k: int) -> tuple[float, ...]:
    return tuple(0.5 ** i for i in range(k))


@dataclass(frozen=True)
class SsvqeSpec:
    """Reference states and weights.  ``target`` selects the single-target weighting variant."""

    reference_states: tuple
    weights: Optional[tuple] = None
    target: Optional[int] = None
    other_weight: float = 0.5

    def __post_init__(self):
        refs = tuple(int(r) for r in self.reference_states)
        object.__setattr__(self, "reference_states", refs)
        if not refs:
            raise ValueError("at least one reference state is required")
        if len(set(refs)) != len(refs):
            raise ValueError("reference states must be distinct")
        if self.target is not None:
            if not 0 <= self.target < len(refs) or not 0 < self.other_weight < 1:
                raise ValueError("target index or other_weight out of range")
            w = tuple(1.0 if i == self.target else self.other_weight for i in range(len(refs)))
        else:
            w = geometric_weights(len(refs)) if self.weights is None else tuple(float(v) for v in self.weights)
            if len(w) != len(refs):
                raise ValueError("weights and references differ in length")
            if any(v <= 0 for v in w) or any(b >= a for a, b in zip(w, w[1:])):
                raise ValueError("weights must be positive and strictly decreasing")
        object.__setattr__(self, "weights", w)


@dataclass
class StateEstimate:
    reference: int
    energy: float
    std_error: float

    @property
    def mass(self) -> float:
        return float(np.sqrt(max(self.energy, 0.0)))


@dataclass
class SpectrumResult:
    states: list
    trace: OptTrace
    circuit: Circuit
    params: np.ndarray
    tier: str
    weights: tuple
    ordering: dict = field(default_factory=dict)

    @property
    def energies(self) -> np.ndarray:
        return np.array([s.energy for s in self.states])

    @property
    def std_errors(self) -> np.ndarray:
        return np.array([s.std_error for s in self.states])

    def reference_trace(self, index: int) -> list[tuple[int, float, float]]:
        out = []
        for rec in self.trace.records:
            e, s = rec.extras[2 * index], rec.extras[2 * index + 1]
            out.append((rec.iteration, e, s))
        return out

    def reference_trace_csv(self, index: int) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["iteration", "E_i", "std_error"])
        for it, e, s in self.reference_trace(index):
            w.writerow([it, repr(e), repr(s)])
        return buf.getvalue()


class EnergyEvaluator:
    """Per-reference energies of U(theta)|ref> for one operator and tier."""

    def __init__(self, op: PauliOperator, circuit: Circuit, tier: str, shots: int = 8192,
                 noise: Optional[NoiseSpec] = None, mitigation: Optional[MitigationFilter] = None):
        if tier not in TIERS:
            raise ValueError(f"unknown tier {tier!r}; expected one of {TIERS}")
        if op.n_qubits != circuit.n_qubits:
            raise ValueError("operator and ansatz act on different qubit counts")
        if tier == "NOISY" and noise is None:
            raise ValueError("NOISY tier needs a noise specification")
        self.op, self.circuit, self.tier = op, circuit, tier
        self.sampler = None
        if tier != "SV":
            self.sampler = Sampler(op, shots, noise if tier == "NOISY" else None,
                                   mitigation if tier == "NOISY" else None)

    def exact_from_angles(self, angles: np.ndarray, refs: Sequence[int]) -> np.ndarray:
        return np.array([expectation_amplitudes(self.circuit.run(angles, r), self.op) for r in refs])

    def exact(self, params, refs: Sequence[int]) -> np.ndarray:
        return self.exact_from_angles(self.circuit.angles(params), refs)

    def measured(self, params, refs: Sequence[int], seed) -> tuple[np.ndarray, np.ndarray]:
        if self.sampler is None:
            return self.exact(params, refs), np.zeros(len(refs))
        angles = self.circuit.angles(params)
        base = seed if isinstance(seed, tuple) else (seed,)
        res = self.sampler.estimate_many(self.circuit, angles, refs, [base + (i,) for i in range(len(refs))])
        return np.array([x.mean for x in res]), np.array([x.std_error for x in res])


def _objective(ev: EnergyEvaluator, spec: SsvqeSpec) -> ObjectiveHandle:
    refs, w = spec.reference_states, np.array(spec.weights)

    def evaluate(params, seed):
        e, _ = ev.measured(params, refs, seed)
        return float(np.dot(w, e))

    def track(params, seed):
        e, s = ev.measured(params, refs, seed)
        extras = tuple(v for pair in zip(e, s) for v in (float(pair[0]), float(pair[1])))
        return Tracked(float(np.dot(w, e)), float(np.sqrt(np.dot(w ** 2, s ** 2))), extras)

    gradient = None
    if ev.tier == "SV":
        def angle_cost(angles):
            return float(np.dot(w, ev.exact_from_angles(angles, refs)))

        def gradient(params):
            return parameter_shift_gradient(None, params, circuit=ev.circuit, angle_fn=angle_cost)

    return ObjectiveHandle(evaluate, ev.circuit.n_parameters, deterministic=ev.tier == "SV",
                           gradient=gradient, track=track, scale=max(ev.op.max_abs_coeff(), 1e-300))


def run_ssvqe(H: PauliOperator, ansatz: AnsatzSpec, spec: SsvqeSpec, tier: str = "SV", shots: int = 8192,
              noise: Optional[NoiseSpec] = None, optimizer: Optional[OptimizerConfig] = None, seed: int = 0,
              mitigation: bool = False, calibration_shots: int = 100_000,
              initial_params: Optional[np.ndarray] = None) -> SpectrumResult:
    if ansatz.n_qubits != H.n_qubits:
        raise ValueError("ansatz and Hamiltonian qubit counts differ")
    if any(not 0 <= r < (1 << H.n_qubits) for r in spec.reference_states):
        raise ValueError("reference state index out of range")
    optimizer = optimizer or OptimizerConfig(kind="GRAD" if tier == "SV" else "SPSA",
                                             max_iterations=500 if tier == "SV" else 1500)
    circuit = ansatz.build()
    filt = None
    if tier == "NOISY" and mitigation:
        filt = build_calibration_filter(H.n_qubits, noise, calibration_shots, seed)
    ev = EnergyEvaluator(H, circuit, tier, shots, noise, filt)
    trace = minimize(_objective(ev, spec), optimizer, seed, initial_params)
    refs = spec.reference_states
    if tier == "SV":
        energies = ev.exact(trace.final_params, refs)
        errors = np.zeros(len(refs))
    else:
        tail = trace.records[-TAIL:]
        energies = np.mean([[r.extras[2 * i] for i in range(len(refs))] for r in tail], axis=0)
        errors = np.sqrt(np.mean([[r.extras[2 * i + 1] ** 2 for i in range(len(refs))] for r in tail], axis=0))
    states = [StateEstimate(r, float(e), float(s)) for r, e, s in zip(refs, energies, errors)]
    return SpectrumResult(states, trace, circuit, trace.final_params, tier, spec.weights,
                          {r: i for i, r in enumerate(refs)})


def run_vqe(H: PauliOperator, ansatz: AnsatzSpec, initial: int = 0, tier: str = "SV", shots: int = 8192,
            noise: Optional[NoiseSpec] = None, optimizer: Optional[OptimizerConfig] = None, seed: int = 0,
            mitigation: bool = False, **kw) -> SpectrumResult:
    return run_ssvqe(H, ansatz, SsvqeSpec((initial,), (1.0,)), tier, shots, noise, optimizer, seed, mitigation, **kw)


def final_state(result: SpectrumResult, index: int) -> QuantumState:
    """Noiseless state U(theta*)|ref_index>."""
    if not 0 <= index < len(result.states):
        raise IndexError(f"state index {index} out of range")
    return apply_circuit(result.circuit, result.params, result.states[index].reference)
