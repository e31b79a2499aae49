"""JSON schemas for scenario files and the objects they embed."""
from __future__ import annotations

from jsonschema import Draft202012Validator

_NUMBER = {"type": "number"}
_PAIR = {"type": "array", "items": _NUMBER, "minItems": 2, "maxItems": 2}
MATRIX = {
    "type": "array",
    "minItems": 1,
    "items": {"type": "array", "minItems": 1, "items": {"anyOf": [_NUMBER, _PAIR]}},
}
_POS_INT = {"type": "integer", "minimum": 1}

DEFS = {
    "matrix": MATRIX,
    "channel": {
        "type": "object",
        "required": ["kraus"],
        "properties": {
            "dim_in": _POS_INT,
            "dim_out": _POS_INT,
            "kraus": {"type": "array", "minItems": 1, "items": {"$ref": "#/$defs/matrix"}},
        },
    },
    "extension": {
        "type": "object",
        "required": ["base", "vac_blocks"],
        "properties": {
            "base": {"$ref": "#/$defs/channel"},
            "vac_dim": _POS_INT,
            "vac_blocks": {"type": "array", "minItems": 1, "items": {"$ref": "#/$defs/matrix"}},
        },
    },
    "memory_step": {
        "type": "object",
        "required": ["unitary", "memory_dim"],
        "properties": {"unitary": {"$ref": "#/$defs/matrix"}, "memory_dim": _POS_INT},
    },
    "stochastic": {
        "type": "array",
        "minItems": 1,
        "items": {"type": "array", "minItems": 1, "items": {"type": "number", "minimum": 0}},
    },
    "decode": {
        "type": "object",
        "properties": {
            "path_basis": {
                "anyOf": [
                    {"enum": ["fourier", "computational", "uniform_vs_rest"]},
                    {"type": "array", "minItems": 1, "items": {"$ref": "#/$defs/matrix"}},
                ]
            },
            "corrections": {
                "anyOf": [
                    {"const": "search_unitary"},
                    {"type": "array", "minItems": 1, "items": {"$ref": "#/$defs/channel"}},
                ]
            },
        },
    },
}

KINDS = ["validate", "superpose", "switch", "switch_circuit", "correlated_env", "capacity", "memory_comb"]


def _kind(name: str, required: list[str], properties: dict) -> dict:
    return {
        "if": {"properties": {"kind": {"const": name}}, "required": ["kind"]},
        "then": {"required": required, "properties": properties},
    }


SCENARIO = {
    "$schema": "https://json-schema.org/draft/2020-12/schema",
    "$defs": DEFS,
    "type": "object",
    "required": ["kind"],
    "properties": {
        "kind": {"enum": KINDS},
        "seed": {"type": "integer", "minimum": 0},
        "precision": {"type": "integer", "minimum": 1, "maximum": 17},
        "report": {"type": "string"},
        "tol": {"type": "number", "exclusiveMinimum": 0},
    },
    "allOf": [
        {
            "if": {"properties": {"kind": {"const": "validate"}}, "required": ["kind"]},
            "then": {
                "oneOf": [{"required": ["channel"]}, {"required": ["extension"]}],
                "properties": {
                    "channel": {"$ref": "#/$defs/channel"},
                    "extension": {"$ref": "#/$defs/extension"},
                },
            },
        },
        _kind(
            "superpose",
            ["extensions", "omega"],
            {
                "extensions": {"type": "array", "minItems": 1, "items": {"$ref": "#/$defs/extension"}},
                "omega": {"$ref": "#/$defs/matrix"},
                "route": {"enum": ["independent", "cswap", "closed_form"]},
                "decode": {"$ref": "#/$defs/decode"},
            },
        ),
        _kind(
            "switch",
            ["a", "b", "omega"],
            {
                "a": {"$ref": "#/$defs/channel"},
                "b": {"$ref": "#/$defs/channel"},
                "omega": {"$ref": "#/$defs/matrix"},
                "decode": {"$ref": "#/$defs/decode"},
            },
        ),
        _kind(
            "switch_circuit",
            ["stepA", "stepB", "etaE", "etaF", "omega"],
            {
                "stepA": {"$ref": "#/$defs/memory_step"},
                "stepB": {"$ref": "#/$defs/memory_step"},
                "etaE": {"$ref": "#/$defs/matrix"},
                "etaF": {"$ref": "#/$defs/matrix"},
                "omega": {"$ref": "#/$defs/matrix"},
            },
        ),
        _kind(
            "correlated_env",
            ["V_AE", "W_BF", "sigma_EF", "env_dims", "omega"],
            {
                "V_AE": {"$ref": "#/$defs/matrix"},
                "W_BF": {"$ref": "#/$defs/matrix"},
                "sigma_EF": {"$ref": "#/$defs/matrix"},
                "env_dims": {"type": "array", "items": _POS_INT, "minItems": 2, "maxItems": 2},
                "omega": {"$ref": "#/$defs/matrix"},
            },
        ),
        _kind(
            "capacity",
            ["method"],
            {
                "method": {"enum": ["blahut_arimoto", "coherent_info_max", "induced_classical"]},
                "stochastic": {"$ref": "#/$defs/stochastic"},
                "channel": {"$ref": "#/$defs/channel"},
                "extensions": {"type": "array", "minItems": 1, "items": {"$ref": "#/$defs/extension"}},
                "omega": {"$ref": "#/$defs/matrix"},
                "inputs": {"type": "array", "minItems": 1, "items": {"$ref": "#/$defs/matrix"}},
                "povm": {"type": "array", "minItems": 1, "items": {"$ref": "#/$defs/matrix"}},
                "max_iter": _POS_INT,
                "restarts": _POS_INT,
            },
        ),
        _kind(
            "memory_comb",
            ["stepsA", "stepsB", "repeaters", "omega"],
            {
                "stepsA": {"type": "array", "minItems": 1, "items": {"$ref": "#/$defs/memory_step"}},
                "stepsB": {"type": "array", "minItems": 1, "items": {"$ref": "#/$defs/memory_step"}},
                "repeaters": {
                    "type": "array",
                    "items": {
                        "anyOf": [
                            {
                                "type": "object",
                                "required": ["message", "path"],
                                "properties": {
                                    "message": {"$ref": "#/$defs/channel"},
                                    "path": {"$ref": "#/$defs/channel"},
                                },
                            },
                            {
                                "type": "object",
                                "required": ["joint"],
                                "properties": {"joint": {"$ref": "#/$defs/channel"}},
                            },
                        ]
                    },
                },
                "etaE": {"$ref": "#/$defs/matrix"},
                "etaF": {"$ref": "#/$defs/matrix"},
                "omega": {"$ref": "#/$defs/matrix"},
            },
        ),
    ],
}

CHANNEL_FILE = {
    "$schema": "https://json-schema.org/draft/2020-12/schema",
    "$defs": DEFS,
    "anyOf": [{"$ref": "#/$defs/channel"}, {"$ref": "#/$defs/extension"}],
}


def json_pointer(path) -> str:
    """RFC 6901 pointer for a jsonschema error path."""
    parts = [str(p).replace("~", "~0").replace("/", "~1") for p in path]
    return "/" + "/".join(parts) if parts else ""


def schema_errors(instance, schema) -> list[dict]:
    """All validation problems, deepest first, as ``{path, message}`` records."""
    validator = Draft202012Validator(schema)
    found = []
    for err in validator.iter_errors(instance):
        # descend into anyOf/oneOf branches to find the most specific location
        leaves = [err]
        while leaves and leaves[0].context:
            leaves = sorted(leaves[0].context, key=lambda e: -len(e.absolute_path))
        best = leaves[0] if leaves else err
        found.append({"path": json_pointer(best.absolute_path), "message": best.message})
    found.sort(key=lambda e: e["path"])
    return found
