"""Run configuration: JSON schema, defaults and dotted-path overrides."""

from __future__ import annotations

import copy
import hashlib
import json
from pathlib import Path

import jsonschema

COMMANDS = (
    "ete",
    "dynamics",
    "sweep",
    "trap-scan",
    "ensemble",
    "site-scan",
    "robustness",
    "paths",
    "export-fmo",
)

_num = {"type": "number"}
_int = {"type": "integer"}
_opt_num = {"type": ["number", "null"]}
_opt_int = {"type": ["integer", "null"]}
_opt_str = {"type": ["string", "null"]}


def _obj(props: dict, required=()) -> dict:
    return {"type": "object", "properties": props, "additionalProperties": False, "required": list(required)}


SCHEMA = _obj(
    {
        "command": {"enum": list(COMMANDS)},
        "seed": {"type": "integer", "minimum": 0},
        "threads": {"type": ["integer", "null"], "minimum": 1},
        "model": _obj(
            {
                "source": {"enum": ["builtin-fmo", "geometry"]},
                "geometry_file": _opt_str,
                "initial_site": {"type": "integer", "minimum": 1},
                "trap_site": {"type": ["integer", "null"], "minimum": 1},
                "trap_rate_ps": {"type": "number", "minimum": 0},
                "loss_rate_ps": {"type": "number", "minimum": 0},
                "initial_state": {"enum": ["site", "mixed"]},
            }
        ),
        "bath": _obj(
            {
                "family": {"enum": ["lorentzian", "ohmic"]},
                "lambda_cm1": {"type": "number", "minimum": 0},
                "gamma_cm1": {"type": "number", "exclusiveMinimum": 0},
                "temperature_K": {"type": "number", "exclusiveMinimum": 0},
                "r_cor_angstrom": {"type": "number", "minimum": 0},
                "correlation_sign": {"enum": [1, -1]},
                "matsubara_terms": {"type": ["integer", "null"], "minimum": 0},
            }
        ),
        "solver": _obj(
            {
                "time_convention": {"enum": ["linear", "angular"]},
                "ohmic_fit_terms": {"type": "integer", "minimum": 2, "maximum": 12},
                "ohmic_t_max": {"type": ["number", "null"], "exclusiveMinimum": 0},
                "ohmic_rel_tol": {"type": "number", "exclusiveMinimum": 0},
                "t_max_ps": {"type": "number", "exclusiveMinimum": 0},
                "n_points": {"type": "integer", "minimum": 2},
                "method": {"enum": ["eig", "expm", "rk"]},
            }
        ),
        "sweep": _obj(
            {
                "axis1": {"type": "string"},
                "axis2": {"type": "string"},
                "metrics": {"type": "boolean"},
                "frobenius": {"type": "boolean"},
            }
        ),
        "ensemble": _obj(
            {
                "sites": {"type": "integer", "minimum": 2},
                "diameter": {"type": "number", "exclusiveMinimum": 10},
                "samples": {"type": "integer", "minimum": 1},
                "endpoint_mode": {"enum": ["poles", "free"]},
                "energy_max": {"type": "number", "minimum": 0},
            }
        ),
        "site_scan": _obj(
            {
                "diameter": {"type": "number", "exclusiveMinimum": 10},
                "n_min": {"type": "integer", "minimum": 2},
                "n_max": {"type": "integer", "minimum": 2},
                "samples": {"type": "integer", "minimum": 1},
            }
        ),
        "robustness": _obj(
            {
                "mode": {"enum": ["small", "large"]},
                "samples": {"type": "integer", "minimum": 1},
                "pos_jitter": {"type": "number", "minimum": 0},
                "angle_jitter_deg": {"type": "number", "minimum": 0},
                "energy_jitter": {"type": "number", "minimum": 0},
            }
        ),
        "paths": _obj({"threshold_cm1": {"type": "number", "minimum": 0}}),
        "output": _obj({"out": _opt_str, "dump_geometries": _opt_str}),
    },
    required=["command"],
)

DEFAULTS = {
    "seed": 0,
    "threads": None,
    "model": {
        "source": "builtin-fmo",
        "geometry_file": None,
        "initial_site": 1,
        "trap_site": None,
        "trap_rate_ps": 1.0,
        "loss_rate_ps": 1e-3,
        "initial_state": "site",
    },
    "bath": {
        "family": "lorentzian",
        "lambda_cm1": 35.0,
        "gamma_cm1": 50.0,
        "temperature_K": 298.0,
        "r_cor_angstrom": 0.0,
        "correlation_sign": 1,
        "matsubara_terms": None,
    },
    "solver": {
        "time_convention": "linear",
        "ohmic_fit_terms": 6,
        "ohmic_t_max": None,
        "ohmic_rel_tol": 1e-3,
        "t_max_ps": 1e4,
        "n_points": 201,
        "method": "eig",
    },
    "sweep": {
        "axis1": "lambda:1:500:60:log",
        "axis2": "gamma:5:500:60:log",
        "metrics": False,
        "frobenius": False,
    },
    "ensemble": {"sites": 7, "diameter": 30.0, "samples": 1000, "endpoint_mode": "poles", "energy_max": 500.0},
    "site_scan": {"diameter": 30.0, "n_min": 2, "n_max": 20, "samples": 200},
    "robustness": {
        "mode": "small",
        "samples": 500,
        "pos_jitter": 2.5,
        "angle_jitter_deg": 5.0,
        "energy_jitter": 10.0,
    },
    "paths": {"threshold_cm1": 1000.0},
    "output": {"out": None, "dump_geometries": None},
}


def _merge(base: dict, extra: dict) -> dict:
    out = copy.deepcopy(base)
    for k, v in extra.items():
        if isinstance(v, dict) and isinstance(out.get(k), dict):
            out[k] = _merge(out[k], v)
        else:
            out[k] = copy.deepcopy(v)
    return out


def parse_value(text: str):
    """Command-line override value: JSON literal if it parses, else a string."""
    try:
        return json.loads(text)
    except json.JSONDecodeError:
        return text


def set_dotted(config: dict, path: str, value) -> None:
    keys = path.split(".")
    node = config
    for k in keys[:-1]:
        nxt = node.setdefault(k, {})
        if not isinstance(nxt, dict):
            raise ValueError(f"cannot override {path!r}: {k!r} is not a section")
        node = nxt
    node[keys[-1]] = value


def load_config_file(path) -> dict:
    try:
        data = json.loads(Path(path).read_text())
    except json.JSONDecodeError as exc:
        raise ValueError(f"config {path} is not valid JSON: {exc}") from None
    if not isinstance(data, dict):
        raise ValueError("config file must hold a JSON object")
    return data


def build_config(command: str, file_config: dict | None = None, overrides=()) -> dict:
    """Defaults <- config file <- overrides, then schema validation.

    ``overrides`` is a sequence of (dotted_path, value) pairs.
    """
    cfg = _merge(DEFAULTS, file_config or {})
    cfg["command"] = command
    for path, value in overrides:
        set_dotted(cfg, path, value)
    validate(cfg)
    return cfg


def validate(cfg: dict) -> None:
    try:
        jsonschema.validate(cfg, SCHEMA)
    except jsonschema.ValidationError as exc:
        where = ".".join(str(p) for p in exc.absolute_path) or "<root>"
        raise ValueError(f"invalid config at {where}: {exc.message}") from None
    m = cfg["model"]
    if m["source"] == "geometry" and not m.get("geometry_file"):
        raise ValueError("model.source 'geometry' needs model.geometry_file")
    if m["source"] == "builtin-fmo" and m.get("geometry_file"):
        raise ValueError("give exactly one model source: builtin-fmo or a geometry file")
    s = cfg["site_scan"]
    if s["n_min"] > s["n_max"]:
        raise ValueError("site_scan.n_min must not exceed n_max")


def config_hash(cfg: dict) -> str:
    """SHA-256 of the canonical config, ignoring worker count and output paths."""
    payload = {k: v for k, v in cfg.items() if k not in ("threads", "output")}
    text = json.dumps(payload, sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(text.encode()).hexdigest()
