"""Run configuration: TOML file + flag overrides, resolved into one plain dict."""

from __future__ import annotations

import copy
import json
from pathlib import Path
from typing import Any, Dict, Iterable, Optional

import tomli

DEFAULTS: Dict[str, Dict[str, Any]] = {
    "model": {"n_levels": 512, "coupling": 0.05, "edge_cutoff": 0.05},
    "initial": {"site": 1, "band": [0.3, 0.7]},
    "ensemble": {"samples": 32, "master_seed": 2024, "threads": 1},
    "time": {"scaled_max": 0.3, "points": 61},
    "fit": {"window": [0.02, 0.15]},
    "sweep": {"couplings": [0.08, 0.05, 0.03], "n_levels": [512]},
    "diagrams": {"n": 3, "m": 3},
    "moments": {"k": 1, "n_levels": 32, "samples": 500},
    "effective": {"p0": [1.0, 0.0], "rate": 12.566370614359172, "coeff": 6.283185307179586,
                  "nbar_max": 60, "scaled_max": 1.0, "points": 101},
    "bounds": {"samples": 1000},
}


class ConfigError(Exception):
    """Invalid configuration; maps to exit code 2."""


def _check_keys(data: Dict[str, Any], source: str) -> None:
    for section, values in data.items():
        if section not in DEFAULTS:
            raise ConfigError(f"{source}: unknown section [{section}]")
        if not isinstance(values, dict):
            raise ConfigError(f"{source}: [{section}] must be a table")
        for key, value in values.items():
            if key not in DEFAULTS[section]:
                raise ConfigError(f"{source}: unknown field {section}.{key}")
            expected = DEFAULTS[section][key]
            if isinstance(expected, bool) or not _compatible(expected, value):
                raise ConfigError(
                    f"{source}: field {section}.{key} should be {type(expected).__name__}, "
                    f"got {value!r}"
                )


def _compatible(expected: Any, value: Any) -> bool:
    if isinstance(expected, list):
        return isinstance(value, list)
    if isinstance(expected, float):
        return isinstance(value, (int, float)) and not isinstance(value, bool)
    if isinstance(expected, int):
        return isinstance(value, int) and not isinstance(value, bool)
    return isinstance(value, type(expected))


def read_config_file(path: Path) -> Dict[str, Any]:
    """Parse a TOML config, or the ``config_snapshot`` of a run manifest."""
    if not path.is_file():
        raise ConfigError(f"config file not found: {path}")
    text = path.read_text(encoding="utf-8")
    if path.suffix == ".json":
        try:
            payload = json.loads(text)
        except json.JSONDecodeError as exc:
            raise ConfigError(f"{path}:{exc.lineno}: {exc.msg}") from exc
        data = payload.get("config_snapshot", payload)
    else:
        try:
            data = tomli.loads(text)
        except tomli.TOMLDecodeError as exc:
            raise ConfigError(f"{path}: {exc}") from exc
    _check_keys(data, str(path))
    return data


def parse_assignment(text: str) -> tuple:
    """``section.key=value`` with a TOML-literal value."""
    if "=" not in text or "." not in text.split("=", 1)[0]:
        raise ConfigError(f"override {text!r} must look like section.key=value")
    dotted, raw = text.split("=", 1)
    section, key = dotted.strip().split(".", 1)
    try:
        value = tomli.loads(f"v = {raw.strip()}")["v"]
    except tomli.TOMLDecodeError as exc:
        raise ConfigError(f"override {text!r}: {exc}") from exc
    return section, key, value


def resolve(
    path: Optional[Path] = None,
    assignments: Iterable[str] = (),
    seed: Optional[int] = None,
    threads: Optional[int] = None,
) -> Dict[str, Any]:
    config = copy.deepcopy(DEFAULTS)
    if path is not None:
        for section, values in read_config_file(Path(path)).items():
            config[section].update(values)
    for text in assignments:
        section, key, value = parse_assignment(text)
        _check_keys({section: {key: value}}, "--set")
        config[section][key] = value
    if seed is not None:
        config["ensemble"]["master_seed"] = int(seed)
    if threads is not None:
        config["ensemble"]["threads"] = int(threads)
    _validate(config)
    return config


def _validate(config: Dict[str, Any]) -> None:
    def need(cond: bool, field: str, msg: str) -> None:
        if not cond:
            raise ConfigError(f"field {field}: {msg}")

    model = config["model"]
    need(model["n_levels"] >= 2, "model.n_levels", "must be >= 2")
    need(model["coupling"] >= 0, "model.coupling", "must be >= 0")
    need(0 <= model["edge_cutoff"] < 0.5, "model.edge_cutoff", "must lie in [0, 0.5)")
    need(config["initial"]["site"] in (1, 2), "initial.site", "must be 1 or 2")
    need(len(config["initial"]["band"]) == 2, "initial.band", "must be [lo, hi]")
    ens = config["ensemble"]
    need(ens["samples"] >= 1, "ensemble.samples", "must be >= 1")
    need(0 <= ens["master_seed"] < 2**64, "ensemble.master_seed", "must be a 64-bit unsigned integer")
    need(ens["threads"] >= 1, "ensemble.threads", "must be >= 1")
    need(config["time"]["points"] >= 2, "time.points", "must be >= 2")
    need(config["time"]["scaled_max"] > 0, "time.scaled_max", "must be > 0")
    need(len(config["fit"]["window"]) == 2, "fit.window", "must be [lo, hi]")
    need(len(config["sweep"]["couplings"]) > 0, "sweep.couplings", "must be nonempty")
    need(len(config["sweep"]["n_levels"]) > 0, "sweep.n_levels", "must be nonempty")
