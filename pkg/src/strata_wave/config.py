"""Run configuration: JSON schema, defaults and dotted-key overrides."""

from __future__ import annotations

import copy
import json
from pathlib import Path
from typing import Any, Dict, Iterable, Optional

import jsonschema

from .errors import ConfigError
from .function_space import KINDS

_NUM = {"type": "number"}
_POS_INT = {"type": "integer", "minimum": 1}

_COEFF = {
    "type": "object",
    "additionalProperties": False,
    "required": ["kind", "coeffs"],
    "properties": {
        "kind": {"enum": list(KINDS)},
        "coeffs": {"type": "array", "items": _NUM, "minItems": 1},
        "p0": {"type": "number", "exclusiveMaximum": 0},
        "s": {"type": "number", "minimum": 1},
        "M": {"type": "number", "exclusiveMinimum": 0},
    },
}

SCHEMA = {
    "type": "object",
    "additionalProperties": False,
    "required": ["params"],
    "properties": {
        "params": {
            "type": "object",
            "additionalProperties": False,
            "required": ["g", "sigma", "d", "p0", "rho", "beta"],
            "properties": {
                "g": {"type": "number", "minimum": 0},
                "sigma": {"type": "number", "minimum": 0},
                "Q": _NUM,
                "d": {"type": "number", "exclusiveMinimum": 0},
                "p0": {"type": "number", "exclusiveMaximum": 0},
                "rho": _COEFF,
                "beta": _COEFF,
                "regime": {"enum": ["capillary", "gravity", "capillary-gravity"]},
            },
        },
        "grid": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "n_q": {"type": "integer", "minimum": 2, "multipleOf": 2},
                "n_p": {"type": "integer", "minimum": 3},
                "wavelength": {"type": "number", "exclusiveMinimum": 0},
            },
        },
        "solver": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "tol": {"type": "number", "exclusiveMinimum": 0},
                "max_iter": _POS_INT,
                "amplitude_targets": {"type": "array", "items": {"type": "number", "minimum": 0}},
                "kappa0": {"type": "number", "exclusiveMinimum": 0},
                "find_bifurcation": {"type": "boolean"},
            },
        },
        "diagnostics": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "m_max": {"type": "integer", "minimum": 3},
                "mu": {"type": "number", "exclusiveMinimum": 0, "exclusiveMaximum": 1},
                "order_budget": {"type": "integer", "minimum": 2},
                "k_max": {"type": "integer", "minimum": 5},
                "s": {"type": "number", "minimum": 1},
                "noise_floor": {"type": "number", "minimum": 0},
            },
        },
        "lemmas": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "lemma_sums": {"$ref": "#/definitions/order_range"},
                "binomial": {"$ref": "#/definitions/order_range"},
                "kernel_sum": {
                    "type": "object",
                    "additionalProperties": False,
                    "properties": {
                        "m_max": {"type": "integer", "minimum": 0},
                        "k": {"type": "array", "items": {"enum": [2, 3]}},
                    },
                },
                "superadditivity": {
                    "type": "object",
                    "additionalProperties": False,
                    "properties": {
                        "max_total": {"type": "integer", "minimum": -1},
                        "s": {"type": "array", "items": {"type": "number", "minimum": 1}},
                    },
                },
            },
        },
        "output_dir": {"type": "string"},
    },
    "definitions": {
        "order_range": {
            "type": "object",
            "additionalProperties": False,
            "properties": {"max_order": {"type": "integer", "minimum": -1}},
        },
    },
}

DEFAULTS = {
    "grid": {"n_q": 64, "n_p": 32, "wavelength": 6.283185307179586},
    "solver": {"tol": 1e-10, "max_iter": 25, "amplitude_targets": [1e-3], "find_bifurcation": True},
    "diagnostics": {"m_max": 12, "mu": 0.5, "order_budget": 8, "k_max": 20, "s": 1.0,
                    "noise_floor": 1e-13},
    "lemmas": {
        "lemma_sums": {"max_order": 60},
        "binomial": {"max_order": 30},
        "kernel_sum": {"m_max": 200, "k": [2, 3]},
        "superadditivity": {"max_total": 60, "s": [1.0, 1.5, 2.0]},
    },
    "output_dir": "out",
}


def validate(config: Dict[str, Any]) -> Dict[str, Any]:
    try:
        jsonschema.validate(config, SCHEMA)
    except jsonschema.ValidationError as err:
        where = "/".join(str(x) for x in err.absolute_path) or "<root>"
        raise ConfigError(f"config error at {where}: {err.message}") from None
    return config


def with_defaults(config: Dict[str, Any]) -> Dict[str, Any]:
    """Fill omitted sections and keys.  A given ``lemmas`` section is used as is,
    so listing only some inequalities restricts the sweep to them."""
    out = copy.deepcopy(config)
    for key, default in DEFAULTS.items():
        if key == "lemmas" and key in out:
            continue
        if isinstance(default, dict):
            merged = copy.deepcopy(default)
            merged.update(out.get(key, {}))
            out[key] = merged
        else:
            out.setdefault(key, default)
    return out


def _parse_scalar(text: str):
    try:
        return json.loads(text)
    except json.JSONDecodeError:
        return text


def apply_overrides(config: Dict[str, Any], overrides: Iterable[str]) -> Dict[str, Any]:
    """Apply ``section.key=value`` overrides; values are parsed as JSON when possible."""
    out = copy.deepcopy(config)
    for item in overrides:
        if "=" not in item:
            raise ConfigError(f"override {item!r} is not of the form key=value")
        path, raw = item.split("=", 1)
        keys = path.split(".")
        node = out
        for k in keys[:-1]:
            node = node.setdefault(k, {})
            if not isinstance(node, dict):
                raise ConfigError(f"override {item!r} does not address a scalar key")
        node[keys[-1]] = _parse_scalar(raw)
    return out


def load_config(path, overrides: Optional[Iterable[str]] = None) -> Dict[str, Any]:
    try:
        raw = json.loads(Path(path).read_text())
    except FileNotFoundError:
        raise ConfigError(f"config file {path} not found") from None
    except json.JSONDecodeError as err:
        raise ConfigError(f"config file {path} is not valid JSON: {err}") from None
    raw = apply_overrides(raw, overrides or ())
    return with_defaults(validate(raw))
