"""Scenario files: JSON schema, defaults and conversion to library objects."""
from __future__ import annotations

import copy
import json
from dataclasses import dataclass, field as dc_field
from pathlib import Path

import jsonschema
import numpy as np

from .constants import MODES, Constants, HamiltonianSpec
from .emfield import builtin_catalog, make_field
from .errors import ConfigurationError, DomainError
from .germ import GermInit, validate_germ_init
from .odeint import Tolerances

OUTPUTS = ("trajectory", "germ", "spin", "eta", "moments", "expectations", "wavefunction", "green", "figures")

_vec3 = {"type": "array", "items": {"type": "number"}, "minItems": 3, "maxItems": 3}
_mat3 = {"type": "array", "items": _vec3, "minItems": 3, "maxItems": 3}

SCENARIO_SCHEMA = {
    "$schema": "https://json-schema.org/draft/2020-12/schema",
    "title": "tcdirac scenario",
    "type": "object",
    "additionalProperties": False,
    "properties": {
        "name": {"type": "string"},
        "constants": {
            "type": "object",
            "additionalProperties": False,
            "properties": {k: {"type": "number"} for k in ("c", "hbar", "m0", "e", "g")},
        },
        "field": {
            "type": "object",
            "additionalProperties": False,
            "required": ["kind"],
            "properties": {
                "kind": {"enum": [k for k, _, _ in builtin_catalog()]},
                "params": {"type": "array", "items": {"type": "number"}},
                "gauge": {"enum": ["symmetric", "landau"]},
            },
        },
        "mode": {"enum": list(MODES)},
        "z0": {
            "type": "object",
            "additionalProperties": False,
            "required": ["p", "x"],
            "properties": {"p": _vec3, "x": _vec3},
        },
        "germ": {
            "oneOf": [
                {"const": "default"},
                {
                    "type": "object",
                    "additionalProperties": False,
                    "required": ["B0_re", "B0_im", "C0_re", "C0_im"],
                    "properties": {k: _mat3 for k in ("B0_re", "B0_im", "C0_re", "C0_im")},
                },
            ]
        },
        "spin": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "ell": _vec3,
                "zeta": {"enum": [1, -1]},
                "zeta_prime": {"enum": [1, -1]},
            },
        },
        "nu": {"type": "array", "items": {"type": "integer", "minimum": 0}, "minItems": 3, "maxItems": 3},
        "nu_max": {"type": "integer", "minimum": 0, "maximum": 12},
        "order": {"enum": [0, 1]},
        "t_span": {"type": "array", "items": {"type": "number"}, "minItems": 2, "maxItems": 2},
        "samples": {"type": "integer", "minimum": 2},
        "tolerances": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "rtol": {"type": "number", "exclusiveMinimum": 0},
                "atol": {"type": "number", "exclusiveMinimum": 0},
                "fixed_step": {"type": ["number", "null"], "exclusiveMinimum": 0},
            },
        },
        "grid": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "scheme": {"enum": ["gauss_hermite", "uniform_box"]},
                "nodes": {"type": "integer", "minimum": 2, "maximum": 64},
                "half_width": {"type": "number", "exclusiveMinimum": 0},
            },
        },
        "slice": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "axis": {"enum": [0, 1, 2]},
                "points": {"type": "integer", "minimum": 2},
                "half_width": {"type": "number", "exclusiveMinimum": 0},
            },
        },
        "green": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "s": {"type": "number"},
                "displacement": {"type": "number"},
            },
        },
        "moments": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "coupling": {"type": "boolean"},
                "prefactor": {"type": "boolean"},
            },
        },
        "outputs": {"type": "array", "items": {"enum": list(OUTPUTS)}, "uniqueItems": True},
        "seed": {"type": "integer", "minimum": 0, "maximum": 2 ** 64 - 1},
    },
}

DEFAULTS = {
    "name": "scenario",
    "constants": {"c": 1.0, "hbar": 0.01, "m0": 1.0, "e": -1.0, "g": 2.0},
    "field": {"kind": "zero", "params": [], "gauge": "symmetric"},
    "mode": "relativistic_plus",
    "z0": {"p": [0.3, 0.0, 0.0], "x": [0.0, 0.0, 0.0]},
    "germ": "default",
    "spin": {"ell": [0.0, 0.0, 1.0], "zeta": 1, "zeta_prime": 1},
    "nu": [0, 0, 0],
    "nu_max": 6,
    "order": 0,
    "t_span": [0.0, 5.0],
    "samples": 201,
    "tolerances": {"rtol": 1e-10, "atol": 1e-12, "fixed_step": None},
    "grid": {"scheme": "gauss_hermite", "nodes": 24, "half_width": 6.0},
    "slice": {"axis": 0, "points": 201, "half_width": 5.0},
    "green": {"s": None, "displacement": 0.5},
    "moments": {"coupling": True, "prefactor": True},
    "outputs": ["trajectory", "germ", "spin", "eta"],
    "seed": 0,
}


def _merge(base, over):
    out = copy.deepcopy(base)
    for k, v in over.items():
        if isinstance(v, dict) and isinstance(out.get(k), dict):
            out[k] = _merge(out[k], v)
        else:
            out[k] = copy.deepcopy(v)
    return out


@dataclass
class Scenario:
    """Validated scenario with every default filled in (``raw`` is the config echo)."""

    raw: dict
    spec: HamiltonianSpec = dc_field(repr=False)
    germ_init: GermInit = dc_field(repr=False)
    tolerances: Tolerances = dc_field(repr=False)

    @property
    def z0(self) -> np.ndarray:
        return np.concatenate([self.raw["z0"]["p"], self.raw["z0"]["x"]]).astype(float)

    @property
    def t_span(self):
        return tuple(float(v) for v in self.raw["t_span"])

    @property
    def outputs(self):
        return tuple(self.raw["outputs"])

    def __getitem__(self, key):
        return self.raw[key]


def build_scenario(cfg: dict, hbar: float | None = None, order: int | None = None, seed: int | None = None) -> Scenario:
    """Validate ``cfg`` and apply command-line overrides.

    Raises ConfigurationError on schema problems and DomainError on
    physically inadmissible values (checked before anything runs).
    """
    try:
        jsonschema.validate(cfg, SCENARIO_SCHEMA)
    except jsonschema.ValidationError as err:
        where = "/".join(str(p) for p in err.absolute_path) or "<root>"
        raise ConfigurationError(f"config invalid at {where}: {err.message}") from None
    raw = _merge(DEFAULTS, cfg)
    if hbar is not None:
        raw["constants"]["hbar"] = float(hbar)
    if order is not None:
        raw["order"] = int(order)
    if seed is not None:
        raw["seed"] = int(seed)
    t0, t1 = raw["t_span"]
    if not t1 > t0:
        raise ConfigurationError("t_span must be increasing")
    if sum(raw["nu"]) > raw["nu_max"]:
        raise DomainError(f"|nu| = {sum(raw['nu'])} exceeds nu_max = {raw['nu_max']}")
    constants = Constants(**raw["constants"])
    f = raw["field"]
    field = make_field(f["kind"], f.get("params", []), f.get("gauge", "symmetric"), constants.c)
    spec = HamiltonianSpec(field, constants, raw["mode"])
    if raw["germ"] == "default":
        init = GermInit.default()
    else:
        g = raw["germ"]
        init = GermInit(np.array(g["B0_re"]) + 1j * np.array(g["B0_im"]),
                        np.array(g["C0_re"]) + 1j * np.array(g["C0_im"]))
    val = validate_germ_init(init)
    if not val.ok:
        raise DomainError("germ initial data rejected: " + "; ".join(val.messages))
    sp = raw["spin"]
    ell = np.asarray(sp["ell"], dtype=float)
    n = np.linalg.norm(ell)
    if n == 0:
        raise DomainError("spin axis must be nonzero")
    ell = ell / n
    raw["spin"]["ell"] = ell.tolist()
    if sp["zeta"] != sp["zeta_prime"] and 1 - ell[2] ** 2 <= 1e-14:
        raise DomainError("initial polarization: zeta != zeta' needs a spin axis not parallel to (0, 0, 1)")
    gs = raw["green"]
    if gs["s"] is not None and not (t0 <= gs["s"] < t1):
        raise DomainError("green.s must lie in [t0, t1)")
    tol = raw["tolerances"]
    tolerances = Tolerances(tol["rtol"], tol["atol"], tol["fixed_step"])
    return Scenario(raw, spec, init, tolerances)


def load_scenario(path, **overrides) -> Scenario:
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as err:
        raise ConfigurationError(f"cannot read config {path}: {err}") from None
    try:
        cfg = json.loads(text)
    except json.JSONDecodeError as err:
        raise ConfigurationError(f"config {path} is not valid JSON: {err}") from None
    return build_scenario(cfg, **overrides)
