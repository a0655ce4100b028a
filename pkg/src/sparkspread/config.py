"""Run configuration and result files (JSON, schema ``sparkspread-params-v1``)."""
from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

import jsonschema

from .models import SCHEMA_VERSION, Contract, SpotModel, model_from_dict

METHODS = ("bs", "margrabe", "kirk", "quadrature", "merton_series", "linear_reduction", "series", "mc")

_num = {"type": "number"}
_seasonal = {
    "type": "object",
    "required": ["c0"],
    "properties": {
        "c0": _num, "c1": _num, "positive_on": _num,
        "harmonics": {"type": "array", "items": {"type": "array", "items": _num, "minItems": 3, "maxItems": 3}},
    },
    "additionalProperties": False,
}
_two_factor = {
    "type": "object",
    "required": ["alpha", "sigma", "beta", "eta", "jump_intensity", "jump_mean", "jump_sd", "seasonal"],
    "properties": {**{k: _num for k in ("alpha", "sigma", "beta", "eta", "jump_intensity", "jump_mean",
                                         "jump_sd", "x0", "y0")}, "seasonal": _seasonal},
    "additionalProperties": False,
}
_merton = {
    "type": "object",
    "required": ["s0", "r"],
    "properties": {k: _num for k in ("s0", "r", "q", "sigma", "lambda", "m", "s")},
    "additionalProperties": False,
}

RUN_SCHEMA = {
    "type": "object",
    "required": ["schema", "model"],
    "properties": {
        "schema": {"const": SCHEMA_VERSION},
        "model": {
            "oneOf": [
                {"type": "object", "required": ["family", "electricity", "gas"],
                 "properties": {"family": {"const": "merton"}, "rho": _num,
                                "electricity": _merton, "gas": _merton},
                 "additionalProperties": False},
                {"type": "object", "required": ["family", "electricity", "gas"],
                 "properties": {"family": {"const": "two_factor"}, "rho": _num,
                                "electricity": _two_factor, "gas": _two_factor},
                 "additionalProperties": False},
            ]
        },
        "contract": {
            "type": "object",
            "required": ["t", "tau", "tau1", "tau2", "heat_rate"],
            "properties": {k: _num for k in ("t", "tau", "tau1", "tau2", "heat_rate", "cost", "r_f", "grid_step")},
            "additionalProperties": False,
        },
        "method": {
            "type": "object",
            "required": ["name"],
            "properties": {
                "name": {"enum": list(METHODS)},
                "inner": {"enum": ["kirk", "quadrature"]},
                "n_nodes": {"type": "integer", "minimum": 8},
                "truncation": {
                    "type": "object",
                    "properties": {"stop_tol": _num, "max_diagonal": {"type": "integer"}, "weight_tail_tol": _num},
                    "additionalProperties": False,
                },
                "n_paths": {"type": "integer", "minimum": 100},
                "tail_tol": _num,
                "a": _num, "b": _num, "map_kind": {"enum": ["identity", "log"]},
                "gas_forward": _num, "gas_sigma": _num, "jumps": {"type": "boolean"},
            },
            "additionalProperties": False,
        },
        "simulation": {
            "type": "object",
            "required": ["start", "end", "n_steps", "n_paths"],
            "properties": {"start": _num, "end": _num, "n_steps": {"type": "integer", "minimum": 1},
                           "n_paths": {"type": "integer", "minimum": 1}},
            "additionalProperties": False,
        },
        "seed": {"type": "integer", "minimum": 0, "maximum": 2**64 - 1},
        "output": {"type": "object", "properties": {"dir": {"type": "string"}}, "additionalProperties": False},
    },
    "additionalProperties": False,
}


class ConfigError(ValueError):
    """Config failed validation; ``path`` names the offending field."""

    def __init__(self, path: str, message: str):
        super().__init__(f"{path}: {message}" if path else message)
        self.path = path


@dataclass(frozen=True)
class RunConfig:
    model: SpotModel
    contract: Contract | None = None
    method: dict | None = None
    simulation: dict | None = None
    seed: int = 0
    output_dir: str | None = None

    def to_dict(self) -> dict:
        d = {"schema": SCHEMA_VERSION, "model": self.model.to_dict()}
        if self.contract is not None:
            d["contract"] = self.contract.to_dict()
        if self.method is not None:
            d["method"] = dict(self.method)
        if self.simulation is not None:
            d["simulation"] = dict(self.simulation)
        d["seed"] = self.seed
        if self.output_dir is not None:
            d["output"] = {"dir": self.output_dir}
        return d


def _section(name: str, fn, *args):
    try:
        return fn(*args)
    except ConfigError:
        raise
    except (ValueError, KeyError) as exc:
        raise ConfigError(name, str(exc).strip("'\"")) from None


def parse_config(data: dict) -> RunConfig:
    """Validate a config dict structurally (JSON schema) and semantically."""
    validator = jsonschema.Draft7Validator(RUN_SCHEMA)
    errors = sorted(validator.iter_errors(data), key=lambda e: list(e.absolute_path))
    if errors:
        err = errors[0]
        path = ".".join(str(p) for p in err.absolute_path) or "<root>"
        raise ConfigError(path, err.message)
    model = _section("model", model_from_dict, data["model"])
    contract = _section("contract", Contract.from_dict, data["contract"]) if "contract" in data else None
    sim = data.get("simulation")
    if sim is not None and not sim["start"] < sim["end"]:
        raise ConfigError("simulation.end", "must exceed simulation.start")
    return RunConfig(
        model=model,
        contract=contract,
        method=data.get("method"),
        simulation=sim,
        seed=int(data.get("seed", 0)),
        output_dir=data.get("output", {}).get("dir"),
    )


def load_config(path: str | Path) -> RunConfig:
    try:
        data = json.loads(Path(path).read_text())
    except FileNotFoundError:
        raise ConfigError("", f"config file not found: {path}") from None
    except json.JSONDecodeError as exc:
        raise ConfigError("", f"invalid JSON in {path}: {exc}") from None
    return parse_config(data)


def dump_json(obj: dict, path: str | Path) -> None:
    Path(path).write_text(json.dumps(obj, indent=2) + "\n")
