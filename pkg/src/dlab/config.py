"""Experiment configuration files: schema validation and canonical identity."""
from __future__ import annotations

import copy
import hashlib
import json
from pathlib import Path

import jsonschema

from .errors import ConfigInvalid, IoFailure

SCHEMA_VERSION = "dlab-config/1"
COMMANDS = ("analyze-phase", "strichartz", "bilinear", "extremize", "counterexample", "nls-probe")

_pos_int = {"type": "integer", "minimum": 1}
_N_list = {"type": "array", "items": _pos_int, "minItems": 3}
_interval = {"type": "array", "items": {"type": "number"}, "minItems": 2, "maxItems": 2}
_band = {"type": "number", "exclusiveMinimum": 0}
_tol = {"type": "number", "exclusiveMinimum": 0, "maximum": 0.1}
_family = {"enum": ["flat_annulus", "random_phase", "random_sparse", "null_cone", "extremized"]}

PHASE_SCHEMA = {
    "oneOf": [
        {"type": "object", "additionalProperties": False, "required": ["kind", "alphas"],
         "properties": {"kind": {"const": "quadratic"},
                        "alphas": {"type": "array", "items": {"type": "number"}, "minItems": 1}}},
        {"type": "object", "additionalProperties": False, "required": ["kind", "a"],
         "properties": {"kind": {"const": "fractional"},
                        "a": {"type": "number", "exclusiveMinimum": 0},
                        "n": _pos_int}},
    ]
}

_common = {
    "schema": {"const": SCHEMA_VERSION},
    "command": {"enum": list(COMMANDS)},
    "seed": {"type": "integer", "minimum": 0},
    "band": _band,
    "plotdata": {"type": "boolean"},
    "description": {"type": "string"},
}

_per_command = {
    "analyze-phase": ({
        "phase": PHASE_SCHEMA, "N_list": _N_list,
        "samples_per_shell": _pos_int,
        "transversality": {
            "type": "object", "additionalProperties": False, "required": ["K_list", "N_list"],
            "properties": {"K_list": {"type": "array", "items": _pos_int, "minItems": 1},
                           "N_list": _N_list, "sign": {"enum": ["+", "-"]}}},
    }, ["phase", "N_list"]),
    "strichartz": ({
        "phase": PHASE_SCHEMA, "p": {"type": "number", "minimum": 2},
        "interval": _interval, "N_list": {"type": "array", "items": _pos_int, "minItems": 4},
        "families": {"type": "array", "items": _family, "minItems": 1, "uniqueItems": True},
        "density": {"type": "number", "exclusiveMinimum": 0, "maximum": 1},
        "rel_tol": _tol, "extremizer_restarts": _pos_int,
    }, ["phase", "p", "N_list"]),
    "bilinear": ({
        "phase": PHASE_SCHEMA, "interval": _interval,
        "N_list": {"type": "array", "items": _pos_int, "minItems": 1},
        "K": _pos_int, "K_list": {"type": "array", "items": _pos_int, "minItems": 3},
        "signs": {"type": "array", "items": {"enum": ["+", "-"]}, "minItems": 2, "maxItems": 2},
        "family": _family, "rel_tol": _tol,
    }, ["phase", "N_list"]),
    "extremize": ({
        "phase": PHASE_SCHEMA, "p": {"enum": [2, 4, 6, 8]}, "N": _pos_int,
        "interval": _interval, "restarts": _pos_int, "max_iter": _pos_int, "tol": _tol,
    }, ["phase", "p", "N"]),
    "counterexample": ({
        "variant": {"enum": ["hyperbolic_2d", "hyperbolic_4d"]},
        "s": {"type": "number", "minimum": 0}, "N_list": _N_list,
        "T": {"type": "number", "exclusiveMinimum": 0},
    }, ["variant", "s", "N_list"]),
    "nls-probe": ({
        "phase": PHASE_SCHEMA, "s": {"type": "number", "minimum": 0}, "N_list": _N_list,
        "epsilon": {"type": "number", "exclusiveMinimum": 0, "exclusiveMaximum": 0.5},
        "T": {"type": "number", "exclusiveMinimum": 0},
        "family": {"enum": ["wang", "flat_annulus", "random_phase"]},
        "sign": {"enum": [-1, 0, 1]}, "dt": {"type": "number", "exclusiveMinimum": 0},
        "dealias": {"enum": ["alias_free_cubic", "two_thirds"]},
    }, ["phase", "s", "N_list", "epsilon", "T"]),
}


def command_schema(command):
    props, required = _per_command[command]
    return {
        "type": "object",
        "additionalProperties": False,
        "required": ["schema", "command"] + required,
        "properties": {**_common, **props},
    }


def _describe(err: jsonschema.ValidationError):
    if err.context:
        # oneOf: report against the branch whose discriminator matched
        kind = err.instance.get("kind") if isinstance(err.instance, dict) else None
        branch = [e for e in err.context
                  if err.schema["oneOf"][e.schema_path[0]]["properties"]["kind"].get("const") == kind]
        if branch:
            return _describe(sorted(branch, key=lambda e: e.message)[0])
        return f"invalid value for key '{'/'.join(map(str, err.absolute_path))}/kind': {kind!r}"
    path = "/".join(str(p) for p in err.absolute_path)
    if err.validator == "additionalProperties":
        extra = sorted(set(err.instance) - set(err.schema.get("properties", {})))
        key = "/".join(filter(None, [path, ",".join(extra)]))
        return f"unknown key '{key}'"
    if err.validator == "required":
        missing = err.message.split("'")[1] if "'" in err.message else err.message
        return f"missing key '{'/'.join(filter(None, [path, missing]))}'"
    return f"invalid value for key '{path or '<root>'}': {err.message}"


def validate(cfg: dict) -> dict:
    """Validate against the command's schema; returns a deep copy."""
    if not isinstance(cfg, dict):
        raise ConfigInvalid("configuration must be a JSON object")
    if cfg.get("schema") != SCHEMA_VERSION:
        raise ConfigInvalid(f"invalid value for key 'schema': expected {SCHEMA_VERSION!r}")
    command = cfg.get("command")
    if command not in COMMANDS:
        raise ConfigInvalid(f"invalid value for key 'command': {command!r}")
    validator = jsonschema.Draft202012Validator(command_schema(command))
    errors = sorted(validator.iter_errors(cfg), key=lambda e: (list(e.absolute_path), e.message))
    if errors:
        raise ConfigInvalid(_describe(errors[0]))
    _semantic_checks(cfg)
    return copy.deepcopy(cfg)


def _semantic_checks(cfg):
    iv = cfg.get("interval")
    if iv is not None and not iv[1] > iv[0]:
        raise ConfigInvalid("invalid value for key 'interval': need t1 > t0")
    for key in ("N_list", "K_list"):
        vals = cfg.get(key)
        if vals is not None and any(b <= a for a, b in zip(vals, vals[1:])):
            raise ConfigInvalid(f"invalid value for key '{key}': must be strictly increasing")
    if cfg["command"] in ("strichartz", "bilinear"):
        for key in ("N_list", "K_list"):
            if any(v & (v - 1) for v in cfg.get(key) or ()):
                raise ConfigInvalid(f"invalid value for key '{key}': entries must be powers of two")
    if cfg["command"] == "bilinear" and "K" not in cfg and "K_list" not in cfg:
        raise ConfigInvalid("missing key 'K' (or 'K_list')")


def load(path) -> dict:
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise IoFailure(f"cannot read config {path}: {exc}") from exc
    try:
        cfg = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigInvalid(f"config {path} is not valid JSON: {exc}") from exc
    return validate(cfg)


def config_id(cfg: dict) -> str:
    canon = json.dumps(cfg, sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(canon.encode()).hexdigest()[:12]
