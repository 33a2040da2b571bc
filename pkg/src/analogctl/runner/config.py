"""
Experiment configuration: YAML (or JSON) files with a versioned schema.

A minimal file::

    version: 1
    method: optimize            # optimize | dd-sequence | bloch | leakage
    gate: identity              # identity | pi-gate | x | y | z | 2x2 matrix
    bath: {family: lorentzian_dip}
    optimize: {lambdas: [10, 100, 1000]}

Every section and default is listed in ``SCHEMA_DEFAULTS``.  Validation
errors raise :class:`ConfigError` naming the offending field with a dotted
path such as ``bath.params.cutoff``.
"""
from __future__ import annotations

import copy
import os
import re
from dataclasses import dataclass

import numpy as np
import yaml

__all__ = [
    "SCHEMA_VERSION",
    "METHODS",
    "ConfigError",
    "ExperimentConfig",
    "load_config",
    "parse_config",
    "build_bath",
    "make_sequence",
    "parse_gate",
]

SCHEMA_VERSION = 1
METHODS = ("optimize", "dd-sequence", "bloch", "leakage")
BATH_FAMILIES = ("ohmic", "lorentzian_dip", "one_over_omega", "white_noise", "zero")

SCHEMA_DEFAULTS = {
    "version": SCHEMA_VERSION,
    "name": "experiment",
    "method": "optimize",
    "seed": 0,
    "gate": "identity",
    "grid": {"n_t": 256, "t_gate": 1.0},
    "bath": {"family": "lorentzian_dip", "params": {}, "omega_max": None, "n_omega": 4096},
    "optimize": {
        "lambdas": [10.0, 100.0, 1000.0, 10000.0, 100000.0],
        "alpha": 0.3,
        "max_iters": 200,
        "tol": 1e-6,
        "regularize": 1e-6,
        "max_step": 0.05,
        "error_threshold": None,
        "init_noise": 0.0,
    },
    "dd": {
        "sequences": [],
        "pulse_counts": [],
        "pulse_width": 1e-3,
        "points_per_pulse": 16,
    },
    "bloch": {"r_init": [1.0, 0.0, 0.0], "n_steps": 200, "t_final": None, "path": "geodesic"},
    "leakage": {
        "detunes": [0.0],
        "pulse_counts": [],
        "coupling": 0.05,
        "omega_min": 0.1,
        "omega_max": 100.0,
        "n_omega": 8192,
    },
    "spectra": {"n_omega": 512, "omega_max": None},
    "output": {"dir": "out"},
}


class _Loader(yaml.SafeLoader):
    """Safe loader that also reads ``1e-6`` (no dot) as a float."""


_Loader.add_implicit_resolver(
    "tag:yaml.org,2002:float",
    re.compile(r"""^[-+]?(?:[0-9][0-9_]*)(?:\.[0-9_]*)?[eE][-+]?[0-9]+$"""),
    list("-+0123456789"))


class ConfigError(ValueError):
    """Invalid configuration; ``field`` is the dotted path of the culprit."""

    def __init__(self, field: str, message: str):
        super().__init__(f"{field}: {message}")
        self.field = field


@dataclass(frozen=True)
class ExperimentConfig:
    """Validated configuration; ``raw`` is the normalized nested mapping."""

    raw: dict
    source: str = ""

    def __getitem__(self, key):
        return self.raw[key]

    @property
    def method(self) -> str:
        return self.raw["method"]

    @property
    def seed(self) -> int:
        return self.raw["seed"]

    def with_overrides(self, seed=None, out=None) -> "ExperimentConfig":
        raw = copy.deepcopy(self.raw)
        if seed is not None:
            raw["seed"] = int(seed)
        if out is not None:
            raw["output"]["dir"] = str(out)
        return ExperimentConfig(raw, self.source)


def _merge(defaults, given, path=""):
    if not isinstance(given, dict):
        raise ConfigError(path.rstrip(".") or "<root>", "expected a mapping")
    out = copy.deepcopy(defaults)
    for key, val in given.items():
        if key not in defaults:
            raise ConfigError(f"{path}{key}", "unknown field")
        if isinstance(defaults[key], dict) and key != "params":
            out[key] = _merge(defaults[key], val if val is not None else {}, f"{path}{key}.")
        else:
            out[key] = val
    return out


def _check_number(val, path, *, positive=False, nonneg=False, integer=False, allow_none=False):
    if val is None and allow_none:
        return None
    if isinstance(val, bool) or not isinstance(val, (int, float)):
        raise ConfigError(path, f"expected a number, got {val!r}")
    if not np.isfinite(val):
        raise ConfigError(path, "must be finite")
    if integer and int(val) != val:
        raise ConfigError(path, "expected an integer")
    if positive and not val > 0:
        raise ConfigError(path, "must be positive")
    if nonneg and val < 0:
        raise ConfigError(path, "must be nonnegative")
    return int(val) if integer else float(val)


def _number(raw, path, **kw):
    val = raw
    for k in path.split("."):
        val = val[k]
    return _check_number(val, path, **kw)


def _number_list(val, path, *, positive=False, nonneg=False, integer=False, nonempty=True):
    if not isinstance(val, (list, tuple)):
        raise ConfigError(path, "expected a list")
    if nonempty and not val:
        raise ConfigError(path, "must not be empty")
    return [_check_number(item, f"{path}[{i}]", positive=positive, nonneg=nonneg, integer=integer)
            for i, item in enumerate(val)]


def parse_gate(gate, d: int = 2):
    """Gate name or matrix (rows of numbers or complex strings like ``'0-1j'``)."""
    from ..control_path import resolve_target

    try:
        if isinstance(gate, str):
            return gate, resolve_target(gate, d)
        rows = [[complex(str(x).replace(" ", "")) for x in row] for row in gate]
        mat = np.array(rows, dtype=complex)
        return mat, resolve_target(mat, d)
    except (ValueError, TypeError) as exc:
        raise ConfigError("gate", str(exc)) from None


def build_bath(section: dict, t_gate: float = 1.0, path: str = "bath"):
    """Bath model from a ``bath`` config section."""
    from .. import baths

    family = section.get("family")
    if family not in BATH_FAMILIES:
        raise ConfigError(f"{path}.family", f"expected one of {BATH_FAMILIES}, got {family!r}")
    params = dict(section.get("params") or {})
    kw = {"n_omega": int(section.get("n_omega") or baths.DEFAULT_N_OMEGA)}
    if section.get("omega_max") is not None:
        kw["omega_max"] = float(section["omega_max"])
    try:
        if family in baths.BUILTIN_BATHS:
            return baths.builtin_bath(family, **params, **kw, t_gate=t_gate)
        if family == "one_over_omega":
            kw.pop("omega_max", None)
            axis = params.pop("axis", 2)
            return baths.make_one_over_omega(n_axes=3, axis=axis, **params, **kw)
        if family == "white_noise":
            return baths.make_white_noise(**params, **kw)
        return baths.make_zero_bath(3, **kw)
    except TypeError as exc:
        raise ConfigError(f"{path}.params", str(exc)) from None
    except ValueError as exc:
        raise ConfigError(f"{path}.params", str(exc)) from None


def _check_schedule(item, raw, path):
    try:
        make_sequence(item, raw).schedule()
    except ValueError as exc:
        raise ConfigError(path, str(exc)) from None


def make_sequence(item: dict, raw: dict):
    """:class:`PulseSequence` from a normalized ``dd.sequences`` entry."""
    from ..dd_sequences import PulseSequence

    return PulseSequence(item["kind"], n=item.get("n", 1), level=item.get("level", 1),
                         pulse_width=item["pulse_width"], t_gate=raw["grid"]["t_gate"],
                         axis=item.get("axis", "Z"), repetitions=item.get("repetitions", 1),
                         n_t=raw["grid"]["n_t"], points_per_pulse=raw["dd"]["points_per_pulse"],
                         label=item.get("label", ""))


def _validate(raw: dict, base_dir: str):
    if raw["version"] != SCHEMA_VERSION:
        raise ConfigError("version", f"unsupported schema version {raw['version']!r}")
    if raw["method"] not in METHODS:
        raise ConfigError("method", f"expected one of {METHODS}, got {raw['method']!r}")
    if not isinstance(raw["name"], str) or not raw["name"]:
        raise ConfigError("name", "expected a non-empty string")
    raw["seed"] = _number(raw, "seed", nonneg=True, integer=True)
    raw["grid"]["n_t"] = _number(raw, "grid.n_t", positive=True, integer=True)
    if raw["grid"]["n_t"] < 8:
        raise ConfigError("grid.n_t", "need at least 8 intervals")
    raw["grid"]["t_gate"] = _number(raw, "grid.t_gate", positive=True)
    parse_gate(raw["gate"])
    if isinstance(raw["gate"], (list, tuple)):
        raw["gate"] = [[str(complex(str(x).replace(" ", ""))) for x in row] for row in raw["gate"]]
    raw["bath"]["n_omega"] = _number(raw, "bath.n_omega", positive=True, integer=True)
    _number(raw, "bath.omega_max", positive=True, allow_none=True)
    if not isinstance(raw["bath"]["params"], dict):
        raise ConfigError("bath.params", "expected a mapping")
    build_bath(raw["bath"], raw["grid"]["t_gate"])

    opt = raw["optimize"]
    opt["lambdas"] = _number_list(opt["lambdas"], "optimize.lambdas", nonneg=True)
    opt["alpha"] = _number(raw, "optimize.alpha", positive=True)
    if opt["alpha"] > 1:
        raise ConfigError("optimize.alpha", "must lie in (0, 1]")
    opt["max_iters"] = _number(raw, "optimize.max_iters", positive=True, integer=True)
    opt["tol"] = _number(raw, "optimize.tol", positive=True)
    opt["regularize"] = _number(raw, "optimize.regularize", nonneg=True)
    opt["max_step"] = _number(raw, "optimize.max_step", positive=True)
    opt["error_threshold"] = _number(raw, "optimize.error_threshold", positive=True, allow_none=True)
    opt["init_noise"] = _number(raw, "optimize.init_noise", nonneg=True)

    dd = raw["dd"]
    dd["pulse_width"] = _number(raw, "dd.pulse_width", positive=True)
    dd["points_per_pulse"] = _number(raw, "dd.points_per_pulse", positive=True, integer=True)
    if dd["points_per_pulse"] < 8:
        raise ConfigError("dd.points_per_pulse", "need at least 8")
    if not isinstance(dd["sequences"], list):
        raise ConfigError("dd.sequences", "expected a list")
    from ..dd_sequences import KINDS

    norm = []
    for i, seq in enumerate(dd["sequences"]):
        p = f"dd.sequences[{i}]"
        if not isinstance(seq, dict):
            raise ConfigError(p, "expected a mapping")
        unknown = set(seq) - {"kind", "n", "level", "axis", "repetitions", "pulse_width", "label"}
        if unknown:
            raise ConfigError(f"{p}.{sorted(unknown)[0]}", "unknown field")
        kind = str(seq.get("kind", "")).upper()
        if kind not in KINDS:
            raise ConfigError(f"{p}.kind", f"expected one of {KINDS}")
        item = {"kind": kind}
        for key, dflt in (("n", 1), ("level", 1), ("repetitions", 1)):
            item[key] = _check_number(seq.get(key, dflt), f"{p}.{key}", nonneg=True, integer=True)
        item["axis"] = str(seq.get("axis", "Z")).upper()
        if item["axis"] not in ("X", "Z"):
            raise ConfigError(f"{p}.axis", "expected X or Z")
        item["pulse_width"] = _check_number(seq.get("pulse_width", dd["pulse_width"]),
                                            f"{p}.pulse_width", positive=True)
        item["label"] = str(seq.get("label", ""))
        _check_schedule(item, raw, p)
        norm.append(item)
    dd["sequences"] = norm
    dd["pulse_counts"] = _number_list(dd["pulse_counts"], "dd.pulse_counts", positive=True,
                                      integer=True, nonempty=False)
    for i, n in enumerate(dd["pulse_counts"]):
        if n % 2:
            raise ConfigError(f"dd.pulse_counts[{i}]", "bang-bang pulse counts must be even")
        _check_schedule({"kind": "BB", "n": n, "pulse_width": dd["pulse_width"]}, raw,
                        f"dd.pulse_counts[{i}]")
    if raw["method"] == "dd-sequence" and not (norm or dd["pulse_counts"]):
        raise ConfigError("dd.sequences", "empty sweep: give sequences or pulse_counts")

    bl = raw["bloch"]
    bl["r_init"] = _number_list(bl["r_init"], "bloch.r_init")
    if len(bl["r_init"]) != 3:
        raise ConfigError("bloch.r_init", "expected three components")
    if np.linalg.norm(bl["r_init"]) > 1 + 1e-12:
        raise ConfigError("bloch.r_init", "Bloch vector longer than 1")
    bl["n_steps"] = _number(raw, "bloch.n_steps", positive=True, integer=True)
    bl["t_final"] = _number(raw, "bloch.t_final", positive=True, allow_none=True)
    if bl["path"] not in ("geodesic", "static", "optimized"):
        raise ConfigError("bloch.path", "expected geodesic, static or optimized")

    lk = raw["leakage"]
    lk["detunes"] = _number_list(lk["detunes"], "leakage.detunes", nonneg=True)
    lk["pulse_counts"] = _number_list(lk["pulse_counts"], "leakage.pulse_counts", positive=True,
                                      integer=True, nonempty=False)
    for i, n in enumerate(lk["pulse_counts"]):
        if n % 2:
            raise ConfigError(f"leakage.pulse_counts[{i}]", "bang-bang pulse counts must be even")
        _check_schedule({"kind": "BB", "n": n, "pulse_width": dd["pulse_width"]}, raw,
                        f"leakage.pulse_counts[{i}]")
    for key in ("coupling", "omega_min", "omega_max"):
        lk[key] = _number(raw, f"leakage.{key}", nonneg=(key == "coupling"),
                          positive=(key != "coupling"))
    lk["n_omega"] = _number(raw, "leakage.n_omega", positive=True, integer=True)
    if lk["omega_min"] >= lk["omega_max"]:
        raise ConfigError("leakage.omega_min", "must be below leakage.omega_max")

    sp = raw["spectra"]
    sp["n_omega"] = _number(raw, "spectra.n_omega", positive=True, integer=True)
    sp["omega_max"] = _number(raw, "spectra.omega_max", positive=True, allow_none=True)
    if not isinstance(raw["output"]["dir"], str):
        raise ConfigError("output.dir", "expected a path string")
    out = raw["output"]["dir"]
    if not os.path.isabs(out) and base_dir:
        raw["output"]["dir"] = os.path.normpath(os.path.join(base_dir, out))


def parse_config(data, source: str = "", base_dir: str = "") -> ExperimentConfig:
    """Validate a mapping (for example a manifest's ``config`` entry)."""
    if isinstance(data, dict) and "config" in data and "manifest_version" in data:
        data = data["config"]
    raw = _merge(SCHEMA_DEFAULTS, data or {})
    _validate(raw, base_dir)
    return ExperimentConfig(raw, source)


def load_config(path) -> ExperimentConfig:
    """Read and validate a YAML/JSON config file or a run manifest."""
    path = os.fspath(path)
    if not os.path.exists(path):
        raise ConfigError("--config", f"file not found: {path}")
    with open(path, encoding="utf-8") as fh:
        text = fh.read()
    try:
        data = yaml.load(text, Loader=_Loader)
    except yaml.YAMLError as exc:
        raise ConfigError("<file>", f"not valid YAML: {exc}") from None
    return parse_config(data, source=path, base_dir=os.path.dirname(os.path.abspath(path)))
