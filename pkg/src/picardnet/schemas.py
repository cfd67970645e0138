"""JSON Schema descriptions of every JSON document the command line prints."""

from __future__ import annotations

_NUMBER = {"type": "number"}
_INT = {"type": "integer"}

_NETWORK_SUMMARY = {
    "type": "object",
    "required": ["out", "widths", "params", "activation"],
    "properties": {
        "out": {"type": "string"},
        "widths": {"type": "array", "items": _INT},
        "params": _INT,
        "stored": _INT,
        "activation": {"type": "object"},
    },
}

SCHEMAS: dict[str, dict] = {
    "build-hat": _NETWORK_SUMMARY,
    "build-square": {**_NETWORK_SUMMARY, "required": _NETWORK_SUMMARY["required"] + ["bound"]},
    "build-product": {**_NETWORK_SUMMARY, "required": _NETWORK_SUMMARY["required"] + ["bound"]},
    "compile": {
        **_NETWORK_SUMMARY,
        "required": _NETWORK_SUMMARY["required"] + ["provenance", "seed"],
    },
    "solve-mlp": {
        "type": "object",
        "required": ["estimate", "params", "seed", "wall_time"],
        "properties": {
            "estimate": _NUMBER,
            "params": {
                "type": "object",
                "required": ["n", "M", "T", "t", "d", "x", "f", "g"],
            },
            "seed": _INT,
            "wall_time": _NUMBER,
        },
    },
    "schedule": {
        "type": "object",
        "required": ["N_eps", "K_eps", "delta", "gamma", "log_delta", "log_gamma", "seed"],
        "properties": {
            "N_eps": {"type": ["integer", "null"]},
            "K_eps": _INT,
            "delta": _NUMBER,
            "gamma": _NUMBER,
            "log_delta": _NUMBER,
            "log_gamma": _NUMBER,
            "theorem_level": {"type": ["integer", "null"]},
            "seed": _INT,
        },
    },
    "verify": {
        "type": "object",
        "required": ["passed", "suites", "seed"],
        "properties": {
            "passed": {"type": "boolean"},
            "seed": _INT,
            "suites": {
                "type": "object",
                "additionalProperties": {
                    "type": "object",
                    "required": ["passed", "checks"],
                    "properties": {
                        "passed": {"type": "boolean"},
                        "checks": {
                            "type": "array",
                            "items": {
                                "type": "object",
                                "required": ["name", "passed", "value", "threshold"],
                            },
                        },
                    },
                },
            },
        },
    },
    "bench": {
        "type": "object",
        "required": ["out", "slope", "rows", "seed"],
        "properties": {
            "out": {"type": "string"},
            "timing": {"type": "string"},
            "slope": {"type": ["number", "null"]},
            "rows": _INT,
            "seed": _INT,
        },
    },
}
