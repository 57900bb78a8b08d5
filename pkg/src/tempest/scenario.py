"""Scenario files: versioned JSON documents driving the command-line tool."""

from __future__ import annotations

import json
from importlib import resources
from pathlib import Path
from typing import Any

import jsonschema

from .heavy_tails import BaseMeasure
from .limit_lab import REGIMES, ArrayExperiment, ConfigurationError, Schedule
from .numerics import DomainError, QuadratureSpec
from .stable import StableParams
from .tempered import DtsParams, PtsParams
from .tempering import KINDS, TemperingFunction

SCENARIO_VERSION = 1

_num = {"type": "number"}
_pos_int = {"type": "integer", "minimum": 1}
_grid = {"type": "array", "items": _num, "minItems": 1}

_tempering = {
    "type": "object",
    "properties": {"kind": {"enum": list(KINDS)}, "params": {"type": "object"}},
    "required": ["kind"],
    "additionalProperties": False,
}
_base = {
    "type": "object",
    "properties": {"kind": {"enum": ["pareto", "log_pareto", "discrete_pareto"]},
                   "params": {"type": "object"}},
    "required": ["kind", "params"],
    "additionalProperties": False,
}
_schedule = {
    "type": "object",
    "properties": {"kind": {"enum": ["power", "inverse_norming"]},
                   "scale": _num, "exponent": _num, "c": _num},
    "required": ["kind"],
    "additionalProperties": False,
}
_distribution = {
    "type": "object",
    "properties": {
        "family": {"enum": ["ps", "ds", "pts", "dts"]},
        "alpha": _num, "eta": _num, "q": _tempering, "drift": _num, "rate": _num,
        "method": {"enum": ["auto", "rejection", "series"]}, "tol": _num,
    },
    "required": ["family", "alpha", "eta"],
    "additionalProperties": False,
}
_experiment = {
    "type": "object",
    "properties": {
        "type": {"enum": ["array", "embedding", "natural_scale"]},
        "base": _base, "q": _tempering, "schedule": _schedule,
        "n": _pos_int, "m": _pos_int, "discrete": {"type": "boolean"},
        "regime": {"enum": list(REGIMES)}, "grid": _grid,
        "distribution": _distribution, "a_list": _grid,
        "ell": _num, "factor": _num,
    },
    "required": ["type"],
    "additionalProperties": False,
}
_conditions = {
    "type": "object",
    "properties": {
        "base": _base, "q": _tempering, "schedule": _schedule,
        "n_list": _grid, "s_grid": _grid, "eps_grid": _grid, "discrete": {"type": "boolean"},
    },
    "required": ["base", "q", "schedule", "n_list", "s_grid"],
    "additionalProperties": False,
}

SCHEMA = {
    "type": "object",
    "properties": {
        "version": {"const": SCENARIO_VERSION},
        "description": {"type": "string"},
        "seed": {"type": "integer", "minimum": 0},
        "distribution": _distribution,
        "count": _pos_int,
        "grid": _grid,
        "n_max": {"type": "integer", "minimum": 0},
        "quadrature": {
            "type": "object",
            "properties": {"rel_tol": _num, "abs_tol": _num, "max_subdivisions": _pos_int},
            "additionalProperties": False,
        },
        "experiment": _experiment,
        "conditions": _conditions,
    },
    "required": ["version"],
    "additionalProperties": False,
}


class ScenarioError(ValueError):
    pass


def bundled_scenarios() -> list[str]:
    files = resources.files("tempest") / "scenarios"
    return sorted(p.name for p in files.iterdir() if p.name.endswith(".json"))


def load_scenario(ref: str) -> dict[str, Any]:
    """Read a scenario from a path, or from the bundled set by file name."""
    path = Path(ref)
    if path.exists():
        text = path.read_text()
    else:
        name = ref if ref.endswith(".json") else ref + ".json"
        res = resources.files("tempest") / "scenarios" / name
        if not res.is_file():
            raise ScenarioError(f"no scenario file {ref!r} (bundled: {', '.join(bundled_scenarios())})")
        text = res.read_text()
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ScenarioError(f"scenario is not valid JSON: {exc}") from None
    validate(doc)
    return doc


def validate(doc: dict[str, Any]) -> None:
    try:
        jsonschema.validate(doc, SCHEMA)
    except jsonschema.ValidationError as exc:
        where = "/".join(str(p) for p in exc.absolute_path) or "<root>"
        raise ScenarioError(f"schema error at {where}: {exc.message}") from None


def _require(section: dict, key: str, where: str):
    if key not in section:
        raise ScenarioError(f"{where} needs field {key!r}")
    return section[key]


def tempering_from(obj) -> TemperingFunction:
    return TemperingFunction.from_json(obj) if obj is not None else TemperingFunction.identity()


def distribution_from(obj: dict[str, Any]):
    fam = obj["family"]
    alpha, eta = float(obj["alpha"]), float(obj["eta"])
    if fam in ("ps", "ds"):
        for k in ("q", "drift", "rate"):
            if k in obj:
                raise ScenarioError(f"family {fam!r} takes no {k!r}")
        return StableParams(alpha, eta)
    q = tempering_from(obj.get("q"))
    if fam == "pts":
        if "rate" in obj:
            raise ScenarioError("family 'pts' takes no 'rate'")
        return PtsParams(alpha, q, eta, float(obj.get("drift", 0.0)))
    return DtsParams(alpha, q, eta, float(obj.get("rate", 1.0)), float(obj.get("drift", 0.0)))


def quadrature_from(doc) -> QuadratureSpec:
    q = doc.get("quadrature", {})
    return QuadratureSpec(**q)


def array_experiment_from(exp: dict[str, Any], seed: int) -> ArrayExperiment:
    where = "experiment"
    return ArrayExperiment(
        base=BaseMeasure.from_json(_require(exp, "base", where)),
        q=tempering_from(exp.get("q")),
        schedule=Schedule.from_json(_require(exp, "schedule", where)),
        n=int(_require(exp, "n", where)),
        m=int(_require(exp, "m", where)),
        seed=seed,
        discrete=bool(exp.get("discrete", False)),
        grid=tuple(exp["grid"]) if "grid" in exp else None,
        regime=exp.get("regime"),
    )


CONFIG_ERRORS = (ScenarioError, DomainError, ConfigurationError)
