"""Command-line front end: ``hadronvqe {encode,exact,solve,pdf-scan,calibrate}``."""

from __future__ import annotations

import argparse
import json
import logging
import os
import sys
import traceback
from pathlib import Path
from typing import Optional

import numpy as np

from . import kernels
from .blfq import (BasisCatalog, HamiltonianSource, ModelParams, builtin_hamiltonian, builtin_operator_4_1,
                   exact_eigensolve, load_external_hamiltonian, masses)
from .circuit import QuantumState, build_calibration_filter, density_matrix, density_matrix_json
from .config import ConfigError, RunConfig, bundled_configs
from .engine import final_state, run_ssvqe
from .observables import (CHANNELS, calibrate_decay_prefactor, classical_decay_constant, classical_pdf,
                          default_grid, integrate_pdf, measure_decay_constant, pdf_csv, pdf_scan)
from .pauli import PauliOperator, compact_encode, jw_encode_one_body

log = logging.getLogger("hadronvqe")

THREAD_ENV = "HADRONVQE_THREADS"
DENSITY_EXPORT_MAX_QUBITS = 6


class RunError(RuntimeError):
    pass


# --- problem assembly -----------------------------------------------------------

def load_source(cfg: RunConfig) -> HamiltonianSource:
    h = cfg.data["hamiltonian"]
    if isinstance(h, str):
        return builtin_hamiltonian(h)
    base = Path(cfg.source).parent if cfg.source and not cfg.source.startswith("<") else Path(".")

    def rel(p):
        return None if p is None else (Path(p) if Path(p).is_absolute() else base / p)

    params = ModelParams(**h["params"]) if h.get("params") else None
    trunc = tuple(h["truncation"]) if h.get("truncation") else None
    return load_external_hamiltonian(rel(h["external"]), rel(h.get("catalog")), params, trunc)


def encode_operator(cfg: RunConfig, src: HamiltonianSource) -> PauliOperator:
    if cfg.data["encoding"] == "direct":
        return jw_encode_one_body(src.matrix, src.dim)
    if src.label == "builtin_4_1":
        return builtin_operator_4_1()
    return compact_encode(src.matrix)


def _observable_context(cfg: RunConfig, src: HamiltonianSource) -> Optional[tuple[BasisCatalog, ModelParams]]:
    obs = cfg.data["observables"]
    wanted = obs["decay"] or obs["pdf"]["enabled"]
    if not wanted:
        return None
    if cfg.data["encoding"] != "compact":
        raise RunError("observables are measured in the compact encoding only")
    if src.catalog is None or src.params is None:
        raise RunError("observables need a basis catalog and model parameters for this Hamiltonian")
    return src.catalog, src.params


def _grid(cfg: RunConfig) -> np.ndarray:
    return default_grid(cfg.data["observables"]["pdf"]["grid_size"])


# --- output helpers ---------------------------------------------------------------

def _write(out: Path, name: str, text: str) -> str:
    out.mkdir(parents=True, exist_ok=True)
    (out / name).write_text(text)
    return name


def _write_json(out: Path, name: str, payload: dict) -> str:
    return _write(out, name, json.dumps(payload, indent=2, sort_keys=False) + "\n")


def _header(cfg: RunConfig, command: str) -> dict:
    return {"command": command, "config": cfg.snapshot()}


def _bitstring(index: int, n: int) -> str:
    return format(index, f"0{n}b")


def _decay_entries(cfg: RunConfig, states, ctx, tier: str, noise, classical=None) -> list[dict]:
    catalog, params = ctx
    entries = []
    shots = cfg.data["observables"]["shots"]
    for i, st in enumerate(states):
        for ch in CHANNELS:
            res = measure_decay_constant(st, ch, catalog, params, tier, shots, (cfg.seed, 0xDEC, i, CHANNELS.index(ch)),
                                         noise)
            e = {"state": i, "channel": ch, "f_MeV": res.f_MeV, "std_error": res.std_error, "K_MeV": res.K_MeV,
                 "tier": tier, "flagged": res.flagged}
            if classical is not None:
                e["f_exact_MeV"] = classical_decay_constant(classical[i], ch, catalog, params)
            entries.append(e)
    return entries


def _pdf_entries(cfg: RunConfig, states, ctx, tier: str, noise, out: Path, classical=None) -> list[dict]:
    catalog, params = ctx
    xs = _grid(cfg)
    shots = cfg.data["observables"]["shots"]
    entries = []
    for i, st in enumerate(states):
        scan = pdf_scan(st, catalog, params, xs, tier, shots, (cfg.seed, 0x9DF, i), noise)
        name = _write(out, f"pdf_state{i}.csv", pdf_csv(scan))
        entry = {"state": i, "file": name, "integral": integrate_pdf(xs, [q for _, q, _ in scan])}
        if classical is not None:
            exact = [classical_pdf(classical[i], catalog, params, float(x)) for x in xs]
            entry["max_abs_deviation_from_exact"] = float(max(abs(q - e) for (_, q, _), e in zip(scan, exact)))
        entries.append(entry)
    return entries


# --- subcommands ----------------------------------------------------------------------

def cmd_encode(cfg: RunConfig, out: Path) -> dict:
    src = load_source(cfg)
    op = encode_operator(cfg, src)
    name = f"operator_{cfg.data['encoding']}.txt"
    header = (f"# {src.label} {cfg.data['encoding']} encoding, {op.n_qubits} qubits, {len(op.terms)} terms\n"
              "# columns: coefficient (MeV^2) and Pauli string, highest qubit first\n")
    _write(out, name, header + op.to_text())
    _write(out, "config_snapshot.yaml", cfg.to_yaml())
    return {**_header(cfg, "encode"), "operator_file": name, "n_qubits": op.n_qubits, "n_terms": len(op.terms)}


def cmd_exact(cfg: RunConfig, out: Path) -> dict:
    src = load_source(cfg)
    ctx = _observable_context(cfg, src)
    vals, vecs = exact_eigensolve(src.matrix)
    phys = src.n_physical or src.dim
    keep = [k for k in range(len(vals)) if k < phys]
    vals = vals[keep]
    vecs = vecs[:, keep]
    result = {**_header(cfg, "exact"), "hamiltonian": src.label, "dimension": phys,
              "energies_MeV2": [float(v) for v in vals], "masses_MeV": [float(m) for m in masses(vals)]}
    if ctx is not None:
        k = min(cfg.data["observables"]["states"], len(vals))
        vectors = [vecs[:, i] for i in range(k)]
        states = [QuantumState.from_vector(v) for v in vectors]
        obs = {}
        if cfg.data["observables"]["decay"]:
            obs["decay"] = _decay_entries(cfg, states, ctx, "SV", None, vectors)
        if cfg.data["observables"]["pdf"]["enabled"]:
            obs["pdf"] = _pdf_entries(cfg, states, ctx, "SV", None, out, vectors)
        result["observables"] = obs
    _write_json(out, "exact.json", result)
    return result


def cmd_solve(cfg: RunConfig, out: Path) -> dict:
    src = load_source(cfg)
    ctx = _observable_context(cfg, src)
    op = encode_operator(cfg, src)
    spec = cfg.ssvqe_spec()
    ansatz = cfg.ansatz_spec(op.n_qubits)
    noise = cfg.noise_spec()
    d = cfg.data
    log.info("solving %s with %s on %d qubits, tier %s", src.label, ansatz.kind, op.n_qubits, cfg.tier)
    res = run_ssvqe(op, ansatz, spec, cfg.tier, d["shots"], noise, cfg.optimizer_config(), cfg.seed,
                    d["mitigation"], d["calibration_shots"])
    n = op.n_qubits
    files = {"trace": _write(out, "trace.csv", res.trace.to_csv())}
    for i in range(len(res.states)):
        files[f"trace_ref{i}"] = _write(out, f"trace_ref{i}.csv", res.reference_trace_csv(i))
    tr = res.trace
    result = {
        **_header(cfg, "solve"),
        "hamiltonian": src.label,
        "n_qubits": n,
        "backend": kernels.BACKEND,
        "states": [{"reference": s.reference, "bitstring": _bitstring(s.reference, n), "energy_MeV2": s.energy,
                    "std_error": s.std_error, "mass_MeV": s.mass} for s in res.states],
        "weights": list(res.weights),
        "optimizer": {"kind": cfg.optimizer_config().kind, "termination": tr.termination, "restart": tr.restart,
                      "evaluations": tr.evaluations, "final_cost": tr.final_cost,
                      "restart_costs": list(tr.restart_costs)},
        "params": [float(p) for p in res.params],
        "files": files,
    }
    states = [final_state(res, i) for i in range(len(res.states))]
    if n <= DENSITY_EXPORT_MAX_QUBITS:
        labels = [_bitstring(k, n) for k in range(1 << n)]
        for i, st in enumerate(states):
            files[f"density_state{i}"] = _write(out, f"density_state{i}.json",
                                                density_matrix_json(density_matrix(st), labels))
    if ctx is not None:
        k = min(d["observables"]["states"], len(states))
        obs = {}
        if d["observables"]["decay"]:
            obs["decay"] = _decay_entries(cfg, states[:k], ctx, cfg.tier, noise)
        if d["observables"]["pdf"]["enabled"]:
            obs["pdf"] = _pdf_entries(cfg, states[:k], ctx, cfg.tier, noise, out)
        result["observables"] = obs
    _write_json(out, "result.json", result)
    return result


def _states_from_result(path: Path) -> tuple[RunConfig, list[QuantumState]]:
    payload = json.loads(Path(path).read_text())
    if payload.get("command") != "solve":
        raise RunError(f"{path} is not a solve result")
    cfg = RunConfig.from_dict(payload["config"], str(path))
    src = load_source(cfg)
    op = encode_operator(cfg, src)
    circuit = cfg.ansatz_spec(op.n_qubits).build()
    params = np.array(payload["params"], dtype=float)
    from .circuit import apply_circuit
    return cfg, [apply_circuit(circuit, params, s["reference"]) for s in payload["states"]]


def cmd_pdf_scan(cfg: RunConfig, out: Path, result_path: Optional[str] = None) -> dict:
    """PDF scans on exact eigenstates, or on the final states of a previous solve."""
    if result_path is not None:
        solved_cfg, states = _states_from_result(Path(result_path))
        src = load_source(solved_cfg)
        vectors = None
    else:
        src = load_source(cfg)
        vals, vecs = exact_eigensolve(src.matrix)
        vectors = [vecs[:, i] for i in range(min(cfg.data["observables"]["states"], src.n_physical or src.dim))]
        states = [QuantumState.from_vector(v) for v in vectors]
    if src.catalog is None or src.params is None:
        raise RunError("PDF scans need a basis catalog and model parameters")
    states = states[:cfg.data["observables"]["states"]]
    entries = _pdf_entries(cfg, states, (src.catalog, src.params), cfg.tier, cfg.noise_spec(), out, vectors)
    result = {**_header(cfg, "pdf-scan"), "hamiltonian": src.label, "source": result_path or "exact",
              "tier": cfg.tier, "pdf": entries}
    _write_json(out, "pdf.json", result)
    return result


def cmd_calibrate(cfg: RunConfig, out: Path) -> dict:
    src = load_source(cfg)
    n = src.dim.bit_length() - 1
    result = {**_header(cfg, "calibrate"), "hamiltonian": src.label, "n_qubits": n}
    noise = cfg.noise_spec()
    if noise is not None:
        filt = build_calibration_filter(n, noise, cfg.data["calibration_shots"], cfg.seed)
        result["readout_calibration"] = {"shots_per_state": cfg.data["calibration_shots"],
                                         "matrix": np.asarray(filt.calibration_matrix).tolist(),
                                         "ideal": noise.confusion_matrix(n).tolist()}
    if src.catalog is not None and src.params is not None:
        result["decay_prefactor_K_MeV"] = calibrate_decay_prefactor(src.catalog, src.params)
    _write_json(out, "calibration.json", result)
    return result


# --- entry point -------------------------------------------------------------------------

def apply_thread_cap() -> Optional[int]:
    """Validate HADRONVQE_THREADS and export it to the BLAS/OpenMP variables.

    The package import already exported it before numpy loaded; this re-check
    turns a malformed value into a structured error.
    """
    raw = os.environ.get(THREAD_ENV)
    if not raw:
        return None
    try:
        n = int(raw)
        if n < 1:
            raise ValueError
    except ValueError:
        raise ConfigError(f"{THREAD_ENV} must be a positive integer, got {raw!r}") from None
    for var in ("OMP_NUM_THREADS", "OPENBLAS_NUM_THREADS", "MKL_NUM_THREADS"):
        os.environ[var] = str(n)
    return n


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="hadronvqe", description="Light-front meson spectroscopy with VQE/SSVQE.")
    p.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")
    sub = p.add_subparsers(dest="command", required=True)
    for name, help_ in (("encode", "write the qubit operator"), ("exact", "classical diagonalization"),
                        ("solve", "run VQE/SSVQE and observables"), ("pdf-scan", "PDF scan"),
                        ("calibrate", "readout calibration and decay prefactor")):
        s = sub.add_parser(name, help=help_)
        s.add_argument("--config", required=True,
                       help=f"YAML file or bundled name ({', '.join(bundled_configs())})")
        s.add_argument("--seed", type=int, help="override the config seed")
        s.add_argument("--output", help="output directory (default results/<name>)")
        if name == "pdf-scan":
            s.add_argument("--result", help="scan the final states of this solve result.json")
    return p


COMMANDS = {"encode": cmd_encode, "exact": cmd_exact, "solve": cmd_solve, "calibrate": cmd_calibrate}


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    out = Path(args.output) if args.output else None
    try:
        apply_thread_cap()
        cfg = RunConfig.load(args.config).with_overrides(args.seed, args.output)
        out = cfg.output_dir()
        if args.command == "pdf-scan":
            cmd_pdf_scan(cfg, out, args.result)
        else:
            COMMANDS[args.command](cfg, out)
    except ConfigError as exc:
        return _fail(exc.to_dict(), out, 2)
    except Exception as exc:  # noqa: BLE001 - every failure becomes structured output
        log.debug("%s", traceback.format_exc())
        return _fail({"type": type(exc).__name__, "message": str(exc), "location": None}, out, 1)
    print(json.dumps({"status": "ok", "command": args.command, "output_dir": str(out)}))
    return 0


def _fail(err: dict, out: Optional[Path], code: int) -> int:
    payload = {"status": "error", "error": err}
    print(json.dumps(payload), file=sys.stderr)
    if out is not None:
        try:
            _write_json(out, "error.json", payload)
        except OSError:
            pass
    return code


if __name__ == "__main__":
    sys.exit(main())
