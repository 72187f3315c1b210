"""Decay constants and parton distribution functions measured as operator expectations."""

from __future__ import annotations

import json
import math
import warnings
from dataclasses import dataclass
from functools import lru_cache
from typing import Optional, Sequence

import numpy as np
from scipy.integrate import simpson

from .blfq import BasisCatalog, ModelParams, chi_l, decay_coefficient
from .circuit import NoiseSpec, QuantumState, Sampler, expectation_exact
from .pauli import PauliOperator, compact_encode

CHANNELS = ("pseudoscalar", "vector")
N_COLORS = 3
DEFAULT_GRID_SIZE = 19


def default_grid(size: int = DEFAULT_GRID_SIZE) -> np.ndarray:
    """Evenly spaced interior points: 0.05 .. 0.95 for 19 points."""
    h = 1.0 / (size + 1)
    return np.linspace(h, 1 - h, size)


def _check_channel(channel: str) -> None:
    if channel not in CHANNELS:
        raise ValueError(f"unknown channel {channel!r}; expected one of {CHANNELS}")


def _padded_dim(catalog: BasisCatalog) -> int:
    return 1 << catalog.n_qubits


def decay_vector(channel: str, catalog: BasisCatalog, params: ModelParams) -> np.ndarray:
    """nu over the catalog ordering: (-1)^n C_l / C_0 on m = 0 states, spin sign per channel."""
    _check_channel(channel)
    c0 = decay_coefficient(0, params)
    ratios = {}
    nu = np.zeros(_padded_dim(catalog))
    for i, st in enumerate(catalog.states):
        if st.m != 0 or st.two_s == st.two_sbar:
            continue
        if st.l not in ratios:
            r = decay_coefficient(st.l, params) / c0
            ratios[st.l] = 0.0 if abs(r) < 1e-10 else r
        spin = 1.0 if (channel == "vector" or st.two_s > 0) else -1.0
        nu[i] = (-1) ** st.n * ratios[st.l] * spin
    return nu + 0.0


def decay_projector(channel: str, catalog: Optional[BasisCatalog] = None, params: Optional[ModelParams] = None,
                    vector=None) -> PauliOperator:
    """Compact encoding of |nu><nu| (unnormalized nu)."""
    if vector is None:
        if catalog is None or params is None:
            raise ValueError("need a catalog with model parameters, or an explicit vector")
        vector = decay_vector(channel, catalog, params)
    v = np.asarray(vector, dtype=float)
    dim = 1 << max(1, (len(v) - 1).bit_length())
    if dim != len(v):
        v = np.concatenate([v, np.zeros(dim - len(v))])
    return compact_encode(np.outer(v, v))


@lru_cache(maxsize=None)
def calibrate_decay_prefactor(catalog: BasisCatalog, params: ModelParams) -> float:
    """K in MeV with f = K |<nu|psi>|; K = (kappa sqrt(Nc) / pi) C_0."""
    c0 = decay_coefficient(0, params)
    if abs(c0) < 1e-14:
        raise ZeroDivisionError("vanishing longitudinal overlap")
    return params.kappa * math.sqrt(N_COLORS) / math.pi * c0


def classical_decay_constant(vec, channel: str, catalog: BasisCatalog, params: ModelParams) -> float:
    """Direct basis sum sum_{n,l} (-1)^n C_l (psi_ud -/+ psi_du) times kappa sqrt(Nc)/pi."""
    _check_channel(channel)
    total = 0.0
    for amp, st in zip(np.asarray(vec), catalog.states):
        if st.m != 0 or st.two_s == st.two_sbar:
            continue
        spin = 1.0 if (channel == "vector" or st.two_s > 0) else -1.0
        total += (-1) ** st.n * decay_coefficient(st.l, params) * spin * amp
    return params.kappa * math.sqrt(N_COLORS) / math.pi * abs(total)


@dataclass
class DecayResult:
    channel: str
    f_MeV: float
    std_error: float
    K_MeV: float
    tier: str
    flagged: bool = False

    def to_json(self) -> str:
        return json.dumps({"channel": self.channel, "f_MeV": self.f_MeV, "std_error": self.std_error,
                           "K_MeV": self.K_MeV, "tier": self.tier})


def _state_expectation(state: QuantumState, op: PauliOperator, tier: str, shots: int, seed,
                       noise: Optional[NoiseSpec]) -> tuple[float, float]:
    if tier == "SV":
        return expectation_exact(state, op), 0.0
    if tier not in ("SHOTS", "NOISY"):
        raise ValueError(f"unknown tier {tier!r}")
    sampler = Sampler(op, shots, noise if tier == "NOISY" else None)
    res = sampler.estimate_amplitudes(state.amplitudes, seed)
    return res.mean, res.std_error


def measure_decay_constant(state: QuantumState, channel: str, catalog: BasisCatalog, params: ModelParams,
                           tier: str = "SV", shots: int = 20_000, seed=0,
                           noise: Optional[NoiseSpec] = None) -> DecayResult:
    proj = decay_projector(channel, catalog, params)
    if state.n_qubits != proj.n_qubits:
        raise ValueError("state and catalog qubit counts differ")
    K = calibrate_decay_prefactor(catalog, params)
    mean, err = _state_expectation(state, proj, tier, shots, seed, noise)
    flagged = False
    if mean < 0:
        flagged = mean < -4 * err - 1e-12
        if flagged:
            warnings.warn(f"negative projector expectation {mean:.4g} beyond 4 sigma; clamped to 0")
        mean = 0.0
    f = K * math.sqrt(mean)
    sigma = K * err / (2 * math.sqrt(mean)) if mean > 0 else K * math.sqrt(err)
    return DecayResult(channel, f, sigma, K, tier, flagged)


# --- parton distribution functions -----------------------------------------------

def _pdf_matrix(x: float, catalog: BasisCatalog, params: ModelParams) -> np.ndarray:
    if not 0 < x < 1:
        raise ValueError("x must lie in (0, 1)")
    dim = _padded_dim(catalog)
    chis = {}
    out = np.zeros((dim, dim))
    groups: dict = {}
    for i, st in enumerate(catalog.states):
        groups.setdefault((st.two_s, st.two_sbar, st.n, st.m), []).append(i)
        if st.l not in chis:
            chis[st.l] = chi_l(x, st.l, params)
    for members in groups.values():
        for i in members:
            for j in members:
                out[i, j] = chis[catalog.states[i].l] * chis[catalog.states[j].l] / (4 * math.pi)
    return out


def pdf_operator(x: float, catalog: BasisCatalog, params: ModelParams) -> PauliOperator:
    return compact_encode(_pdf_matrix(x, catalog, params))


def classical_pdf(vec, catalog: BasisCatalog, params: ModelParams, x: float) -> float:
    """Basis double sum over (l, lbar) at fixed (s, sbar, n, m)."""
    if not 0 < x < 1:
        raise ValueError("x must lie in (0, 1)")
    vec = np.asarray(vec)
    total = 0.0
    for i, a in enumerate(catalog.states):
        for j, b in enumerate(catalog.states):
            if (a.two_s, a.two_sbar, a.n, a.m) == (b.two_s, b.two_sbar, b.n, b.m):
                total += (np.conj(vec[i]) * vec[j]).real * chi_l(x, a.l, params) * chi_l(x, b.l, params)
    return total / (4 * math.pi)


def pdf_scan(state: QuantumState, catalog: BasisCatalog, params: ModelParams, x_grid: Optional[Sequence[float]] = None,
             tier: str = "SV", shots: int = 20_000, seed=0,
             noise: Optional[NoiseSpec] = None) -> list[tuple[float, float, float]]:
    xs = default_grid() if x_grid is None else np.asarray(x_grid, dtype=float)
    out = []
    base = seed if isinstance(seed, tuple) else (seed,)
    for k, x in enumerate(xs):
        op = pdf_operator(float(x), catalog, params)
        mean, err = _state_expectation(state, op, tier, shots, base + (k,), noise)
        out.append((float(x), float(mean), float(err)))
    return out


def integrate_pdf(xs, qs) -> float:
    """Simpson integral over [0, 1], closing the grid with q(0) = q(1) = 0."""
    x = np.concatenate([[0.0], np.asarray(xs, dtype=float), [1.0]])
    q = np.concatenate([[0.0], np.asarray(qs, dtype=float), [0.0]])
    return float(simpson(q, x=x))


def pdf_csv(scan) -> str:
    return "x,q,std_error\n" + "".join(f"{x!r},{q!r},{s!r}\n" for x, q, s in scan)
