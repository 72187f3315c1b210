"""Run configuration: YAML files validated against a fixed schema.

Every key has a documented default (see ``DEFAULTS``).  Unknown keys, wrong
types and out-of-range values are hard errors that carry the file name and
line number of the offending node.
"""

from __future__ import annotations

import copy
import math
from dataclasses import dataclass
from importlib import resources
from pathlib import Path
from typing import Any, Optional

import yaml

from .ansatz import ANSATZ_KINDS, AnsatzSpec
from .circuit import NoiseSpec
from .engine import SsvqeSpec
from .optimizers import OPTIMIZER_KINDS, OptimizerConfig, SpsaSettings

BUILTIN_HAMILTONIANS = ("builtin_1_1", "builtin_4_1")
ENCODINGS = ("compact", "direct")
METHODS = ("vqe", "ssvqe")
TIER_NAMES = ("sv", "shots", "noisy")

DEFAULTS: dict[str, Any] = {
    "name": "run",
    "hamiltonian": "builtin_1_1",
    "encoding": "compact",
    "ansatz": {"kind": "HEA", "reps": 1, "occupied_mode": 0, "trotter_rho": 1},
    "method": "vqe",
    "initial_state": 0,
    "ssvqe": {"reference_states": [0, 1, 2, 3], "weights": None, "target": None, "other_weight": 0.5},
    "tier": "sv",
    "shots": 8192,
    "noise": {"readout_p01": 0.0, "readout_p10": 0.0, "depol_1q": 0.0, "depol_2q": 0.0, "seed": 0},
    "mitigation": False,
    "calibration_shots": 100000,
    "optimizer": {
        "kind": None,
        "max_iterations": None,
        "tolerance": 1e-12,
        "restarts": 5,
        "init_range": [-math.pi, math.pi],
        "simplex_step": 0.5,
        "lbfgs_memory": 10,
        "spsa": {"a": None, "c": 0.1, "A": None, "alpha": 0.602, "gamma": 0.101, "target_step": 0.1},
    },
    "observables": {
        "decay": False,
        "pdf": {"enabled": False, "grid_size": 19},
        "states": 2,
        "shots": 20000,
    },
    "seed": 0,
    "output_dir": None,
}


class ConfigError(ValueError):
    """Validation failure; ``where`` is ``file:line`` when known."""

    def __init__(self, message: str, where: Optional[str] = None):
        self.message = message
        self.where = where
        super().__init__(f"{where}: {message}" if where else message)

    def to_dict(self) -> dict:
        return {"type": "ConfigError", "message": self.message, "location": self.where}


# --- schema -------------------------------------------------------------------
# leaf validators return the converted value or raise ValueError

def _int(lo=None, hi=None):
    def check(v):
        if isinstance(v, bool) or not isinstance(v, int):
            raise ValueError(f"expected an integer, got {v!r}")
        if (lo is not None and v < lo) or (hi is not None and v > hi):
            raise ValueError(f"{v} outside [{lo}, {hi}]")
        return v
    return check


def _float(lo=None, hi=None, optional=False):
    def check(v):
        if v is None and optional:
            return None
        if isinstance(v, bool) or not isinstance(v, (int, float)):
            raise ValueError(f"expected a number, got {v!r}")
        v = float(v)
        if not math.isfinite(v) or (lo is not None and v < lo) or (hi is not None and v > hi):
            raise ValueError(f"{v} outside [{lo}, {hi}]")
        return v
    return check


def _choice(options, optional=False, fold=False):
    def check(v):
        if v is None and optional:
            return None
        key = v.upper() if fold and isinstance(v, str) else v
        opts = [o.upper() for o in options] if fold else list(options)
        if key not in opts:
            raise ValueError(f"{v!r} is not one of {list(options)}")
        return options[opts.index(key)]
    return check


def _bool(v):
    if not isinstance(v, bool):
        raise ValueError(f"expected true/false, got {v!r}")
    return v


def _str(v):
    if not isinstance(v, str):
        raise ValueError(f"expected a string, got {v!r}")
    return v


def _opt(check):
    return lambda v: None if v is None else check(v)


def _list(item, length=None):
    def check(v):
        if not isinstance(v, list):
            raise ValueError(f"expected a list, got {v!r}")
        if length is not None and len(v) != length:
            raise ValueError(f"expected {length} entries, got {len(v)}")
        return [item(x) for x in v]
    return check


def _hamiltonian(v):
    if isinstance(v, str):
        if v not in BUILTIN_HAMILTONIANS:
            raise ValueError(f"{v!r} is not a builtin ({list(BUILTIN_HAMILTONIANS)}); "
                             "use {external: PATH} for matrix files")
        return v
    raise ValueError("expected a builtin label or a mapping with 'external'")


_EXTERNAL = {
    "external": _str,
    "catalog": _opt(_str),
    "params": {"kappa": _float(1e-9), "m_q": _float(1e-9), "m_qbar": _float(1e-9, optional=True)},
    "truncation": _opt(_list(_int(0), 2)),
}

SCHEMA: dict[str, Any] = {
    "name": _str,
    "hamiltonian": ("union", _hamiltonian, _EXTERNAL),
    "encoding": _choice(ENCODINGS),
    "ansatz": {"kind": _choice(ANSATZ_KINDS), "reps": _int(0), "occupied_mode": _int(0), "trotter_rho": _int(1)},
    "method": _choice(METHODS),
    "initial_state": _int(0),
    "ssvqe": {"reference_states": _list(_int(0)), "weights": _opt(_list(_float(0))),
              "target": _opt(_int(0)), "other_weight": _float(0, 1)},
    "tier": _choice(TIER_NAMES, fold=True),
    "shots": _int(1),
    "noise": {"readout_p01": _float(0, 1), "readout_p10": _float(0, 1), "depol_1q": _float(0, 1),
              "depol_2q": _float(0, 1), "seed": _int(0)},
    "mitigation": _bool,
    "calibration_shots": _int(1),
    "optimizer": {
        "kind": _choice(OPTIMIZER_KINDS, optional=True, fold=True),
        "max_iterations": _opt(_int(1)),
        "tolerance": _float(0),
        "restarts": _int(1),
        "init_range": _list(_float(), 2),
        "simplex_step": _float(1e-12),
        "lbfgs_memory": _int(1),
        "spsa": {"a": _float(1e-300, optional=True), "c": _float(1e-12), "A": _float(0, optional=True),
                 "alpha": _float(0), "gamma": _float(0), "target_step": _float(1e-12)},
    },
    "observables": {"decay": _bool, "pdf": {"enabled": _bool, "grid_size": _int(1)},
                    "states": _int(1), "shots": _int(1)},
    "seed": _int(0),
    "output_dir": _opt(_str),
}


def _where(node, source):
    if node is None:
        return source
    return f"{source}:{node.start_mark.line + 1}"


def _validate(value, node, schema, source, path):
    """Check ``value`` (plain data) against ``schema``; ``node`` supplies line numbers."""
    if isinstance(schema, tuple) and schema[0] == "union":
        _, leaf, mapping = schema
        if isinstance(value, dict):
            return _validate(value, node, mapping, source, path)
        schema = leaf
    if isinstance(schema, dict):
        if not isinstance(value, dict):
            raise ConfigError(f"{path or 'config'}: expected a mapping", _where(node, source))
        key_nodes = {}
        if isinstance(node, yaml.MappingNode):
            key_nodes = {k.value: (k, v) for k, v in node.value}
        out = {}
        for key, val in value.items():
            knode, vnode = key_nodes.get(key, (None, None))
            full = f"{path}.{key}" if path else str(key)
            if key not in schema:
                raise ConfigError(f"unknown key {full!r}", _where(knode, source))
            out[key] = _validate(val, vnode, schema[key], source, full)
        return out
    try:
        return schema(value)
    except ValueError as exc:
        raise ConfigError(f"{path}: {exc}", _where(node, source)) from None


def _merge(base: dict, over: dict) -> dict:
    out = copy.deepcopy(base)
    for k, v in over.items():
        if isinstance(v, dict) and isinstance(out.get(k), dict):
            out[k] = _merge(out[k], v)
        else:
            out[k] = copy.deepcopy(v)
    return out


@dataclass
class RunConfig:
    """Validated, fully defaulted run settings; ``data`` is the snapshot written with every artifact."""

    data: dict
    source: str = "<memory>"

    # -- construction ----------------------------------------------------------
    @classmethod
    def from_dict(cls, raw: Optional[dict], source: str = "<memory>", node=None) -> "RunConfig":
        raw = {} if raw is None else raw
        checked = _validate(raw, node, SCHEMA, source, "")
        data = _merge(DEFAULTS, checked)
        if isinstance(checked.get("hamiltonian"), dict):
            data["hamiltonian"] = checked["hamiltonian"]
        cfg = cls(data, source)
        cfg._check_invariants(node)
        return cfg

    @classmethod
    def from_text(cls, text: str, source: str = "<string>") -> "RunConfig":
        try:
            node = yaml.compose(text, Loader=yaml.SafeLoader)
            raw = yaml.safe_load(text)
        except yaml.YAMLError as exc:
            mark = getattr(exc, "problem_mark", None)
            where = f"{source}:{mark.line + 1}" if mark is not None else source
            raise ConfigError(f"YAML syntax error: {getattr(exc, 'problem', exc)}", where) from None
        if raw is not None and not isinstance(raw, dict):
            raise ConfigError("top level must be a mapping", _where(node, source))
        return cls.from_dict(raw, source, node)

    @classmethod
    def load(cls, path) -> "RunConfig":
        p = resolve_config_path(path)
        return cls.from_text(p.read_text(), str(p))

    def _check_invariants(self, node) -> None:
        d = self.data

        def fail(msg, key):
            knode = None
            if isinstance(node, yaml.MappingNode):
                knode = next((k for k, _ in node.value if k.value == key), None)
            raise ConfigError(msg, _where(knode, self.source))

        if d["encoding"] == "direct":
            if d["hamiltonian"] != "builtin_1_1":
                fail("direct encoding is only available for builtin_1_1", "encoding")
            if d["ansatz"]["kind"] != "UCC_single":
                fail("direct encoding requires the UCC_single ansatz", "ansatz")
            occ = 1 << d["ansatz"]["occupied_mode"]
            if d["method"] == "vqe" and d["initial_state"] != occ:
                fail(f"direct encoding starts from the occupied mode: initial_state must be {occ}", "initial_state")
        elif d["ansatz"]["kind"] == "UCC_single":
            fail("the UCC_single ansatz needs direct encoding", "ansatz")
        if d["tier"] == "noisy" and not any(d["noise"][k] > 0 for k in
                                             ("readout_p01", "readout_p10", "depol_1q", "depol_2q")):
            fail("noisy tier needs at least one nonzero noise rate", "noise")
        if d["mitigation"] and d["tier"] != "noisy":
            fail("mitigation only applies to the noisy tier", "mitigation")
        s = d["ssvqe"]
        if d["method"] == "ssvqe":
            if s["weights"] is not None and len(s["weights"]) != len(s["reference_states"]):
                fail("ssvqe.weights and ssvqe.reference_states differ in length", "ssvqe")
            try:
                self.ssvqe_spec()
            except ValueError as exc:
                fail(f"ssvqe: {exc}", "ssvqe")
        if d["optimizer"]["init_range"][0] >= d["optimizer"]["init_range"][1]:
            fail("optimizer.init_range must be increasing", "optimizer")

    # -- typed views -------------------------------------------------------------
    @property
    def tier(self) -> str:
        return self.data["tier"].upper()

    @property
    def seed(self) -> int:
        return self.data["seed"]

    def with_overrides(self, seed: Optional[int] = None, output_dir: Optional[str] = None) -> "RunConfig":
        data = copy.deepcopy(self.data)
        if seed is not None:
            if seed < 0:
                raise ConfigError("seed must be non-negative")
            data["seed"] = seed
        if output_dir is not None:
            data["output_dir"] = output_dir
        return RunConfig(data, self.source)

    def ansatz_spec(self, n_qubits: int) -> AnsatzSpec:
        a = self.data["ansatz"]
        return AnsatzSpec(a["kind"], n_qubits, a["reps"], a["occupied_mode"], a["trotter_rho"])

    def ssvqe_spec(self) -> SsvqeSpec:
        if self.data["method"] == "vqe":
            return SsvqeSpec((self.data["initial_state"],), (1.0,))
        s = self.data["ssvqe"]
        w = None if s["weights"] is None else tuple(s["weights"])
        return SsvqeSpec(tuple(s["reference_states"]), w, s["target"], s["other_weight"])

    def noise_spec(self) -> Optional[NoiseSpec]:
        if self.tier != "NOISY":
            return None
        n = self.data["noise"]
        return NoiseSpec(n["readout_p01"], n["readout_p10"], n["depol_1q"], n["depol_2q"], n["seed"])

    def optimizer_config(self) -> OptimizerConfig:
        o = self.data["optimizer"]
        sv = self.tier == "SV"
        kind = o["kind"] or ("GRAD" if sv else "SPSA")
        iters = o["max_iterations"] or (500 if sv else 1500)
        sp = o["spsa"]
        spsa = SpsaSettings(a=sp["a"], c=sp["c"], A=sp["A"], alpha=sp["alpha"], gamma=sp["gamma"],
                            target_step=sp["target_step"])
        return OptimizerConfig(kind=kind, max_iterations=iters, tolerance=o["tolerance"], spsa=spsa,
                               restarts=o["restarts"], init_range=tuple(o["init_range"]),
                               simplex_step=o["simplex_step"], lbfgs_memory=o["lbfgs_memory"])

    def output_dir(self) -> Path:
        return Path(self.data["output_dir"] or Path("results") / self.data["name"])

    def snapshot(self) -> dict:
        return copy.deepcopy(self.data)

    def to_yaml(self) -> str:
        return yaml.safe_dump(self.data, sort_keys=False)


def bundled_configs() -> list[str]:
    root = resources.files("hadronvqe") / "configs"
    return sorted(p.name[:-5] for p in root.iterdir() if p.name.endswith(".yaml"))


def resolve_config_path(path) -> Path:
    """A filesystem path, or the name of a bundled config (with or without .yaml)."""
    p = Path(path)
    if p.exists():
        return p
    name = p.name if p.suffix == ".yaml" else p.name + ".yaml"
    candidate = resources.files("hadronvqe") / "configs" / name
    if str(path) == p.name and candidate.is_file():
        return Path(str(candidate))
    raise ConfigError(f"config {str(path)!r} not found (bundled: {', '.join(bundled_configs())})")
