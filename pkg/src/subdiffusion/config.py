"""
Run configuration for the command-line front end.

Configurations are YAML mappings. Resolution order, lowest to highest
precedence: built-in defaults for the command, the config file, then
command-line flags. The resolved mapping is fully explicit and is what the
run manifest echoes, so feeding a manifest back in reproduces the run.
"""

from __future__ import annotations

import copy
import math
from pathlib import Path
from typing import Any, Callable

import numpy as np
import yaml

from subdiffusion.kernel import Constant, Example1, Polynomial, Samples, TimeProfile
from subdiffusion.spectral import BoxDomain, GridFunction, SpectralCoeffs, default_nodes

__all__ = [
    "COMMANDS",
    "ConfigError",
    "build_domain",
    "build_field",
    "build_profile",
    "catalog_function",
    "load_config",
    "resolve",
]

COMMANDS = ("forward", "invert", "diagnose-modes", "example1", "roundtrip", "verify")

# keys that steer the run but are not part of the problem; kept out of the manifest echo
RUNTIME_KEYS = ("output", "threads", "seed")

_BASE: dict[str, Any] = {
    "domain": {"lengths": [math.pi]},
    "rho": 0.5,
    "count": 64,
    "nodes": None,
    "horizon": 1.0,
    "t0": 1.0,
    "times": [0.1, 0.5, 1.0],
    "phi": {"kind": "zero"},
    "f": {"kind": "zero"},
    "psi": {"kind": "zero"},
    "g": {"kind": "constant", "c": 1.0},
    "free": {},
    "thresholds": {"rel_threshold": 1e-9, "solvability_rtol": 1e-7},
    "kernel": {"method": "auto", "n_cells": 1024},
    "residual_steps": 256,
    "example1": {"b": 0.1, "mode": 1, "t0_alt": 0.5, "residual_steps": 2048},
    "output": "out",
    "threads": None,
    "seed": None,
}

_COMMAND_DEFAULTS: dict[str, dict[str, Any]] = {
    "forward": {"phi": {"kind": "sine-mode", "k": 1}},
    "invert": {},
    "diagnose-modes": {},
    "example1": {},
    "roundtrip": {
        "rho": 0.7,
        "phi": {"kind": "sine-mode", "k": 1},
        "f": {"kind": "poly-bubble"},
    },
    "verify": {},
}


class ConfigError(ValueError):
    """Invalid configuration; the message starts with the offending field path."""


def _merge(base: dict, over: dict) -> dict:
    out = copy.deepcopy(base)
    for key, val in over.items():
        if isinstance(val, dict) and isinstance(out.get(key), dict) and key not in ("phi", "f", "psi", "g", "free"):
            out[key] = _merge(out[key], val)
        else:
            out[key] = copy.deepcopy(val)
    return out


def load_config(path: str | Path) -> dict:
    """Read a YAML config, or the ``config`` entry of a run manifest."""
    path = Path(path)
    if not path.is_file():
        raise ConfigError(f"config: file {path} does not exist")
    try:
        data = yaml.safe_load(path.read_text(encoding="utf-8")) or {}
    except yaml.YAMLError as exc:
        raise ConfigError(f"config: cannot parse {path}: {exc}") from exc
    if not isinstance(data, dict):
        raise ConfigError("config: top level must be a mapping")
    if "manifest_version" in data:
        data = data.get("config", {})
    base = path.parent.resolve()
    for key in ("phi", "f", "psi"):
        _absolutize(data.get(key), base)
    if isinstance(data.get("g"), dict):
        _absolutize(data["g"], base)
    return data


def _absolutize(spec, base: Path) -> None:
    if isinstance(spec, dict):
        if "path" in spec and not Path(spec["path"]).is_absolute():
            spec["path"] = str(base / spec["path"])
        for val in spec.values():
            _absolutize(val, base)


def _number(value, where: str, *, positive: bool = False, allow_zero: bool = True) -> float:
    if isinstance(value, str):
        text = value.replace(" ", "").lower()
        try:
            if "pi" in text:
                lhs, _, rhs = text.partition("pi")
                scale = float(lhs.rstrip("*")) if lhs.rstrip("*") else 1.0
                div = float(rhs.lstrip("/")) if rhs else 1.0
                value = scale * math.pi / div
            else:
                value = float(text)
        except ValueError as exc:
            raise ConfigError(f"{where}: cannot read {value!r} as a number") from exc
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ConfigError(f"{where}: expected a number, got {value!r}")
    value = float(value)
    if not math.isfinite(value):
        raise ConfigError(f"{where}: must be finite")
    if positive and not (value > 0 or (allow_zero and value == 0)):
        raise ConfigError(f"{where}: must be positive")
    return value


def _counts(value, dim: int, where: str):
    if value is None:
        return None
    vals = value if isinstance(value, (list, tuple)) else [value] * dim
    if len(vals) != dim or not all(isinstance(v, int) and not isinstance(v, bool) and v > 0 for v in vals):
        raise ConfigError(f"{where}: expected a positive integer or {dim} of them")
    return list(vals)


def resolve(command: str, config: dict | None = None, overrides: dict | None = None) -> dict:
    """Merge defaults, config and overrides into a validated, explicit mapping."""
    if command not in COMMANDS:
        raise ConfigError(f"command: unknown command {command!r}")
    cfg = _merge(_BASE, _COMMAND_DEFAULTS[command])
    if config:
        if config.get("command", command) != command:
            raise ConfigError(f"command: config is for {config['command']!r}, not {command!r}")
        cfg = _merge(cfg, {k: v for k, v in config.items() if k != "command"})
    if overrides:
        cfg = _merge(cfg, {k: v for k, v in overrides.items() if v is not None})
    unknown = sorted(set(cfg) - set(_BASE))
    if unknown:
        raise ConfigError(f"{unknown[0]}: unknown field")
    cfg["command"] = command

    dom = cfg["domain"]
    if not isinstance(dom, dict) or "lengths" not in dom:
        raise ConfigError("domain.lengths: required")
    lengths = dom["lengths"] if isinstance(dom["lengths"], list) else [dom["lengths"]]
    if len(lengths) not in (1, 2):
        raise ConfigError("domain.lengths: one or two lengths expected")
    cfg["domain"] = {
        "lengths": [_number(v, f"domain.lengths[{i}]", positive=True, allow_zero=False) for i, v in enumerate(lengths)]
    }
    dim = len(lengths)
    cfg["rho"] = _number(cfg["rho"], "rho")
    if not (0.0 < cfg["rho"] <= 1.0):
        raise ConfigError("rho: must lie in (0, 1]")
    cfg["count"] = _counts(cfg["count"], dim, "count")
    cfg["nodes"] = _counts(cfg["nodes"], dim, "nodes")
    if cfg["nodes"] is None:
        cfg["nodes"] = list(default_nodes(BoxDomain(tuple(cfg["domain"]["lengths"]))))
    if any(c > n for c, n in zip(cfg["count"], cfg["nodes"])):
        raise ConfigError("count: exceeds the grid nodes per axis")
    cfg["horizon"] = _number(cfg["horizon"], "horizon", positive=True, allow_zero=False)
    cfg["t0"] = _number(cfg["t0"], "t0", positive=True, allow_zero=False)
    if command in ("invert", "diagnose-modes", "roundtrip") and cfg["t0"] > cfg["horizon"]:
        raise ConfigError("t0: must not exceed horizon")
    times = cfg["times"] if isinstance(cfg["times"], list) else [cfg["times"]]
    cfg["times"] = [_number(t, f"times[{i}]", positive=True) for i, t in enumerate(times)]
    if command == "forward" and any(t > cfg["horizon"] for t in cfg["times"]):
        raise ConfigError("times: must lie in [0, horizon]")
    for key in ("phi", "f", "psi"):
        cfg[key] = _check_field(cfg[key], key, dim)
    cfg["g"] = _check_profile(cfg["g"], "g")
    if not isinstance(cfg["free"], dict):
        raise ConfigError("free: expected a mapping mode -> value")
    cfg["free"] = {str(k): _number(v, f"free.{k}") for k, v in sorted(cfg["free"].items(), key=lambda kv: str(kv[0]))}
    for key in cfg["free"]:
        parts = [p.strip() for p in key.strip("()[] ").split(",")]
        if len(parts) != dim or not all(p.isdigit() and int(p) >= 1 for p in parts):
            raise ConfigError(f"free.{key}: mode key needs {dim} positive integer(s), e.g. {'1' if dim == 1 else '1,2'}")
    th = cfg["thresholds"]
    cfg["thresholds"] = {
        "rel_threshold": _number(th.get("rel_threshold"), "thresholds.rel_threshold", positive=True),
        "solvability_rtol": _number(th.get("solvability_rtol"), "thresholds.solvability_rtol", positive=True),
    }
    kern = cfg["kernel"]
    if kern.get("method") not in ("auto", "closed-form", "product-integration"):
        raise ConfigError("kernel.method: one of auto, closed-form, product-integration")
    n_cells = kern.get("n_cells")
    if not isinstance(n_cells, int) or n_cells < 2 or n_cells % 2:
        raise ConfigError("kernel.n_cells: even integer >= 2 expected")
    if not isinstance(cfg["residual_steps"], int) or cfg["residual_steps"] < 0:
        raise ConfigError("residual_steps: non-negative integer expected")
    ex = cfg["example1"]
    cfg["example1"] = {
        "b": _number(ex.get("b"), "example1.b", positive=True, allow_zero=False),
        "mode": ex.get("mode", 1),
        "t0_alt": _number(ex.get("t0_alt"), "example1.t0_alt", positive=True, allow_zero=False),
        "residual_steps": int(ex.get("residual_steps", 2048)),
    }
    if cfg["threads"] is not None and (not isinstance(cfg["threads"], int) or cfg["threads"] < 1):
        raise ConfigError("threads: positive integer expected")
    cfg["output"] = str(cfg["output"])
    return cfg


_FIELD_KINDS = ("zero", "sine-mode", "poly-bubble", "gaussian-bump", "csv", "coeffs", "snapshot")


def _check_field(spec, where: str, dim: int) -> dict:
    if spec is None:
        spec = {"kind": "zero"}
    if isinstance(spec, str):
        spec = {"kind": spec}
    if not isinstance(spec, dict) or spec.get("kind") not in _FIELD_KINDS:
        raise ConfigError(f"{where}.kind: one of {', '.join(_FIELD_KINDS)}")
    spec = dict(spec)
    kind = spec["kind"]
    if "amplitude" in spec or kind in ("sine-mode", "poly-bubble", "gaussian-bump"):
        spec["amplitude"] = _number(spec.get("amplitude", 1.0), f"{where}.amplitude")
    if kind == "sine-mode":
        k = spec.get("k", 1)
        ks = k if isinstance(k, list) else [k] * 1
        if len(ks) == 1 and dim == 2 and not isinstance(k, list):
            ks = [k, k]
        if len(ks) != dim or not all(isinstance(v, int) and v >= 1 for v in ks):
            raise ConfigError(f"{where}.k: positive integer mode index expected")
        spec["k"] = ks[0] if dim == 1 else ks
    elif kind == "gaussian-bump":
        center = spec.get("center")
        if center is None:
            raise ConfigError(f"{where}.center: required")
        center = center if isinstance(center, list) else [center]
        if len(center) != dim:
            raise ConfigError(f"{where}.center: {dim} coordinates expected")
        spec["center"] = [_number(c, f"{where}.center") for c in center]
        spec["width"] = _number(spec.get("width", 0.3), f"{where}.width", positive=True, allow_zero=False)
    elif kind == "csv":
        if not spec.get("path") or not Path(spec["path"]).is_file():
            raise ConfigError(f"{where}.path: file {spec.get('path')!r} does not exist")
        spec["path"] = str(spec["path"])
    elif kind == "coeffs":
        entries = spec.get("entries")
        if not isinstance(entries, list) or not entries:
            raise ConfigError(f"{where}.entries: list of [mode, value] pairs expected")
        clean = []
        for i, item in enumerate(entries):
            if not (isinstance(item, list) and len(item) == 2):
                raise ConfigError(f"{where}.entries[{i}]: [mode, value] expected")
            clean.append([item[0], _number(item[1], f"{where}.entries[{i}]")])
        spec["entries"] = clean
    elif kind == "snapshot":
        if where != "psi":
            raise ConfigError(f"{where}.kind: snapshot is only valid for psi")
        spec["f"] = _check_field(spec.get("f"), f"{where}.f", dim)
    return spec


_PROFILE_KINDS = ("constant", "polynomial", "example1", "samples")


def _check_profile(spec, where: str) -> dict:
    if not isinstance(spec, dict) or spec.get("kind") not in _PROFILE_KINDS:
        raise ConfigError(f"{where}.kind: one of {', '.join(_PROFILE_KINDS)}")
    spec = dict(spec)
    kind = spec["kind"]
    if kind == "constant":
        spec["c"] = _number(spec.get("c", 1.0), f"{where}.c")
    elif kind == "polynomial":
        coeffs = spec.get("coeffs")
        if not isinstance(coeffs, list) or not coeffs:
            raise ConfigError(f"{where}.coeffs: non-empty list expected")
        spec["coeffs"] = [_number(c, f"{where}.coeffs[{i}]") for i, c in enumerate(coeffs)]
    elif kind == "example1":
        for key in ("rho", "b", "lam"):
            if key not in spec:
                raise ConfigError(f"{where}.{key}: required")
            spec[key] = _number(spec[key], f"{where}.{key}", positive=True, allow_zero=False)
    else:
        if "path" in spec:
            if not Path(spec["path"]).is_file():
                raise ConfigError(f"{where}.path: file {spec['path']!r} does not exist")
        else:
            times, values = spec.get("times"), spec.get("values")
            if not isinstance(times, list) or not isinstance(values, list) or len(times) != len(values):
                raise ConfigError(f"{where}.times: matching lists of times and values expected")
            spec["times"] = [_number(t, f"{where}.times[{i}]") for i, t in enumerate(times)]
            spec["values"] = [_number(v, f"{where}.values[{i}]") for i, v in enumerate(values)]
    return spec


def build_domain(cfg: dict) -> BoxDomain:
    return BoxDomain(tuple(cfg["domain"]["lengths"]))


def catalog_function(spec: dict, domain: BoxDomain) -> Callable[..., np.ndarray]:
    """Callable for the inline catalog: sine-mode, poly-bubble, gaussian-bump."""
    amp = spec.get("amplitude", 1.0)
    lengths = domain.lengths
    kind = spec["kind"]
    if kind == "sine-mode":
        ks = spec["k"] if isinstance(spec["k"], list) else [spec["k"]]

        def func(*xs):
            out = amp
            for x, k, length in zip(xs, ks, lengths):
                out = out * np.sin(k * np.pi * x / length)
            return out

    elif kind == "poly-bubble":

        def func(*xs):
            out = amp
            for x, length in zip(xs, lengths):
                out = out * x * (length - x)
            return out

    elif kind == "gaussian-bump":
        center = np.asarray(spec["center"], dtype=float)
        width = spec["width"]
        # shift down by the value at the nearest wall, so the bump is zero on the boundary
        reach = min(min(c, length - c) for c, length in zip(center, lengths))
        floor = math.exp(-(reach**2) / (2 * width**2)) if reach > 0 else 1.0

        def func(*xs):
            r2 = sum((x - c) ** 2 for x, c in zip(xs, center))
            return amp * np.maximum(np.exp(-r2 / (2 * width**2)) - floor, 0.0)

    else:
        raise ConfigError(f"{kind}: not a catalog function")
    return func


def build_field(spec: dict, domain: BoxDomain, count, nodes) -> GridFunction | SpectralCoeffs | None:
    """Materialize a field spec; ``snapshot`` specs are handled by the caller."""
    kind = spec["kind"]
    if kind == "zero":
        return None
    if kind == "csv":
        grid = GridFunction.from_csv(spec["path"], domain)
        return grid if "amplitude" not in spec else GridFunction(domain, grid.values * spec["amplitude"])
    if kind == "coeffs":
        entries = {}
        for mode, value in spec["entries"]:
            entries[domain.normalize_mode(mode)] = value
        out = SpectralCoeffs.from_modes(domain, entries, count)
        return out if "amplitude" not in spec else out * spec["amplitude"]
    if kind == "snapshot":
        raise ConfigError("snapshot: must be resolved by the command")
    return GridFunction.sample(domain, catalog_function(spec, domain), nodes)


def build_profile(spec: dict) -> TimeProfile:
    kind = spec["kind"]
    if kind == "constant":
        return Constant(spec["c"])
    if kind == "polynomial":
        return Polynomial(tuple(spec["coeffs"]))
    if kind == "example1":
        return Example1(spec["rho"], spec["b"], spec["lam"])
    if "path" in spec:
        data = np.loadtxt(spec["path"], delimiter=",", skiprows=1, ndmin=2)
        return Samples(tuple(data[:, 0]), tuple(data[:, 1]))
    return Samples(tuple(spec["times"]), tuple(spec["values"]))
