"""SPSA, Nelder-Mead and quasi-Newton gradient descent with restarts."""

from __future__ import annotations

import csv
import hashlib
import io
import math
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from .circuit import Circuit, make_rng

OPTIMIZER_KINDS = ("SPSA", "SIMPLEX", "GRAD")
SHIFT = math.pi / 2


@dataclass
class Tracked:
    cost: float
    std_error: float = 0.0
    extras: tuple = ()


@dataclass
class ObjectiveHandle:
    """Cost function wrapper.

    ``track`` optionally returns a :class:`Tracked` record (cost plus per-state
    details) and is used for trace entries; ``gradient`` is used by GRAD when
    present.  Costs are divided by ``scale`` inside the optimizers.
    """

    evaluate: Callable[[np.ndarray, object], float]
    dimension: int
    deterministic: bool = True
    gradient: Optional[Callable[[np.ndarray], np.ndarray]] = None
    track: Optional[Callable[[np.ndarray, object], Tracked]] = None
    scale: float = 1.0


@dataclass(frozen=True)
class SpsaSettings:
    a: Optional[float] = None  # None: calibrate from the first-step target
    c: float = 0.1
    A: Optional[float] = None  # None: 0.1 * max_iterations
    alpha: float = 0.602
    gamma: float = 0.101
    target_step: float = 0.1
    calibration_samples: int = 10


@dataclass(frozen=True)
class OptimizerConfig:
    kind: str = "GRAD"
    max_iterations: int = 500
    tolerance: float = 1e-12
    spsa: SpsaSettings = field(default_factory=SpsaSettings)
    restarts: int = 5
    init_range: tuple = (-math.pi, math.pi)
    simplex_step: float = 0.5
    lbfgs_memory: int = 10

    def __post_init__(self):
        if self.kind not in OPTIMIZER_KINDS:
            raise ValueError(f"unknown optimizer {self.kind!r}; expected one of {OPTIMIZER_KINDS}")
        if self.max_iterations < 1:
            raise ValueError("max_iterations must be >= 1")
        if self.restarts < 1:
            raise ValueError("restarts must be >= 1")


@dataclass
class IterationRecord:
    iteration: int
    params_hash: str
    cost: float
    std_error: float = 0.0
    extras: tuple = ()


@dataclass
class OptTrace:
    records: list
    final_params: np.ndarray
    final_cost: float
    termination: str
    restart: int = 0
    evaluations: int = 0
    restart_costs: tuple = ()

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["iteration", "cost", "std_error"])
        for r in self.records:
            w.writerow([r.iteration, repr(r.cost), repr(r.std_error)])
        return buf.getvalue()


def params_hash(params: np.ndarray) -> str:
    return hashlib.sha1(np.ascontiguousarray(params, dtype=float).tobytes()).hexdigest()[:16]


class _NonFinite(Exception):
    pass


class _Run:
    """State shared by one restart: counts evaluations, scales costs, records the trace."""

    def __init__(self, obj: ObjectiveHandle, seed, restart: int, max_records: int):
        self.obj, self.seed, self.restart = obj, seed, restart
        self.evals = 0
        self.records: list[IterationRecord] = []
        self.max_records = max_records

    def f(self, x, *key) -> float:
        self.evals += 1
        v = self.obj.evaluate(x, (self.seed, self.restart) + key)
        if not np.isfinite(v):
            raise _NonFinite()
        return v / self.obj.scale

    def record(self, it: int, x: np.ndarray, cost: Optional[float] = None) -> Tracked:
        if self.obj.track is not None:
            t = self.obj.track(x, (self.seed, self.restart, it, 7))
        elif cost is not None:
            t = Tracked(cost * self.obj.scale)
        else:
            t = Tracked(self.obj.evaluate(x, (self.seed, self.restart, it, 7)))
        if not np.isfinite(t.cost):
            raise _NonFinite()
        self.records.append(IterationRecord(it, params_hash(x), float(t.cost), float(t.std_error), t.extras))
        return t


def _spsa(run: _Run, x0: np.ndarray, cfg: OptimizerConfig) -> tuple[np.ndarray, str]:
    s = cfg.spsa
    n = cfg.max_iterations
    A = 0.1 * n if s.A is None else s.A
    rng = make_rng(run.seed, run.restart, 0x5B5A)
    x = x0.copy()
    a = s.a
    if a is None:
        mags = []
        for i in range(s.calibration_samples):
            d = rng.choice([-1.0, 1.0], size=x.size)
            mags.append(abs(run.f(x + s.c * d, -1, i, 0) - run.f(x - s.c * d, -1, i, 1)) / (2 * s.c))
        avg = float(np.mean(mags))
        a = s.target_step * (A + 1) ** s.alpha / avg if avg > 0 else s.target_step
    for k in range(n):
        ak = a / (k + 1 + A) ** s.alpha
        ck = s.c / (k + 1) ** s.gamma
        d = rng.choice([-1.0, 1.0], size=x.size)
        yp = run.f(x + ck * d, k, 0)
        ym = run.f(x - ck * d, k, 1)
        x = x - ak * (yp - ym) / (2 * ck) * d
        run.record(k, x)
    return x, "max_iterations"


def _simplex(run: _Run, x0: np.ndarray, cfg: OptimizerConfig) -> tuple[np.ndarray, str]:
    # Nelder-Mead with reflection 1, expansion 2, contraction 0.5, shrink 0.5
    n = x0.size
    pts = [x0.copy()] + [x0 + cfg.simplex_step * np.eye(n)[i] for i in range(n)]
    vals = [run.f(p, 0, i) for i, p in enumerate(pts)]
    reason = "max_iterations"
    for it in range(cfg.max_iterations):
        order = np.argsort(vals, kind="stable")
        pts = [pts[i] for i in order]
        vals = [vals[i] for i in order]
        run.record(it, pts[0], vals[0])
        if vals[-1] - vals[0] < cfg.tolerance:
            reason = "converged"
            break
        centroid = np.mean(pts[:-1], axis=0)
        xr = centroid + (centroid - pts[-1])
        fr = run.f(xr, it + 1, 0)
        if fr < vals[0]:
            xe = centroid + 2 * (centroid - pts[-1])
            fe = run.f(xe, it + 1, 1)
            pts[-1], vals[-1] = (xe, fe) if fe < fr else (xr, fr)
        elif fr < vals[-2]:
            pts[-1], vals[-1] = xr, fr
        else:
            if fr < vals[-1]:
                xc = centroid + 0.5 * (xr - centroid)
                fc = run.f(xc, it + 1, 2)
                accept = fc <= fr
            else:
                xc = centroid + 0.5 * (pts[-1] - centroid)
                fc = run.f(xc, it + 1, 3)
                accept = fc < vals[-1]
            if accept:
                pts[-1], vals[-1] = xc, fc
            else:
                for i in range(1, n + 1):
                    pts[i] = pts[0] + 0.5 * (pts[i] - pts[0])
                    vals[i] = run.f(pts[i], it + 1, 4 + i)
    best = int(np.argmin(vals))
    return pts[best], reason


def _finite_difference(f, x, h=1e-6):
    g = np.zeros_like(x)
    for i in range(x.size):
        e = np.zeros_like(x)
        e[i] = h
        g[i] = (f(x + e) - f(x - e)) / (2 * h)
    return g


def _grad(run: _Run, x0: np.ndarray, cfg: OptimizerConfig) -> tuple[np.ndarray, str]:
    obj = run.obj

    def fval(x):
        return run.f(x, 0)

    def gval(x):
        if obj.gradient is not None:
            run.evals += 2 * x.size
            return np.asarray(obj.gradient(x), dtype=float) / obj.scale
        return _finite_difference(fval, x)

    x = x0.copy()
    fx, gx = fval(x), gval(x)
    mem_s, mem_y = [], []
    reason = "max_iterations"
    stall = 0
    for it in range(cfg.max_iterations):
        # two-loop recursion
        q = gx.copy()
        alphas = []
        for s, y in zip(reversed(mem_s), reversed(mem_y)):
            rho = 1.0 / np.dot(y, s)
            a = rho * np.dot(s, q)
            alphas.append((rho, a))
            q -= a * y
        if mem_s:
            q *= np.dot(mem_s[-1], mem_y[-1]) / np.dot(mem_y[-1], mem_y[-1])
        for (s, y), (rho, a) in zip(zip(mem_s, mem_y), reversed(alphas)):
            q += s * (a - rho * np.dot(y, q))
        d = -q
        slope = float(np.dot(gx, d))
        if not slope < 0:
            d, slope = -gx, -float(np.dot(gx, gx))
            mem_s, mem_y = [], []
        if slope == 0:
            run.record(it, x, fx)
            reason = "converged"
            break
        t = 1.0 if mem_s else min(1.0, 1.0 / max(np.linalg.norm(gx), 1e-300))
        while True:
            xn = x + t * d
            fn = fval(xn)
            if fn <= fx + 1e-4 * t * slope or t < 1e-14:
                break
            t *= 0.5
        if fn > fx:
            run.record(it, x, fx)
            reason = "line_search_failed"
            break
        gn = gval(xn)
        s, y = xn - x, gn - gx
        if np.dot(s, y) > 1e-16 * np.dot(s, s):
            mem_s.append(s)
            mem_y.append(y)
            if len(mem_s) > cfg.lbfgs_memory:
                mem_s.pop(0)
                mem_y.pop(0)
        drop = fx - fn
        x, fx, gx = xn, fn, gn
        run.record(it, x, fx)
        stall = stall + 1 if drop <= cfg.tolerance * max(1.0, abs(fx)) else 0
        if stall >= 3 or np.max(np.abs(gx)) < 1e-12:
            reason = "converged"
            break
    return x, reason


_METHODS = {"SPSA": _spsa, "SIMPLEX": _simplex, "GRAD": _grad}


def _final_cost(records: list[IterationRecord], deterministic: bool) -> float:
    if deterministic:
        return records[-1].cost
    tail = records[-10:]
    return float(np.mean([r.cost for r in tail]))


def minimize(obj: ObjectiveHandle, cfg: OptimizerConfig, seed: int = 0,
             initial_params: Optional[np.ndarray] = None) -> OptTrace:
    """Run ``cfg.restarts`` seeded starts and return the best trace."""
    if obj.dimension < 1:
        raise ValueError("objective dimension must be >= 1")
    lo, hi = cfg.init_range
    best: Optional[OptTrace] = None
    costs = []
    for r in range(cfg.restarts):
        if initial_params is not None and r == 0:
            x0 = np.array(initial_params, dtype=float)
        else:
            x0 = make_rng(seed, r, 0x1A17).uniform(lo, hi, obj.dimension)
        run = _Run(obj, seed, r, cfg.max_iterations)
        try:
            x, reason = _METHODS[cfg.kind](run, x0, cfg)
        except _NonFinite:
            costs.append(math.inf)
            continue
        if not run.records:
            run.record(0, x)
        trace = OptTrace(run.records, x, _final_cost(run.records, obj.deterministic), reason, r, run.evals)
        costs.append(trace.final_cost)
        if best is None or trace.final_cost < best.final_cost:
            best = trace
    if best is None:
        raise FloatingPointError("every restart hit a non-finite cost")
    best.restart_costs = tuple(costs)
    return best


# --- gradients --------------------------------------------------------------------

def parameter_shift_gradient(fn: Callable[[np.ndarray], float], params, circuit: Optional[Circuit] = None,
                             angle_fn: Optional[Callable[[np.ndarray], float]] = None) -> np.ndarray:
    """Shift-rule gradient.

    Without a circuit, component k is (fn(theta + pi/2 e_k) - fn(theta - pi/2 e_k)) / 2.
    With ``circuit`` and ``angle_fn`` (cost as a function of the raw gate angles),
    the rule is applied to every gate occurrence of a parameter and summed with
    the occurrence's angle scale.
    """
    params = np.asarray(params, dtype=float)
    grad = np.zeros(params.size)
    if circuit is None:
        for k in range(params.size):
            e = np.zeros(params.size)
            e[k] = SHIFT
            grad[k] = (fn(params + e) - fn(params - e)) / 2
        return grad
    base = circuit.angles(params)
    for g in circuit.parameterized:
        p, scale = circuit.param_of_gate(g)
        a = base.copy()
        a[g] += SHIFT
        up = angle_fn(a)
        a[g] -= 2 * SHIFT
        down = angle_fn(a)
        grad[p] += scale * (up - down) / 2
    return grad
