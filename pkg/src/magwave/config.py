"""Run configuration: INI files validated against a single table.

Every key has a type, a default and a validity predicate, so an empty
file yields the reference run for each command and every rejected value
is reported with its ``section.key`` path.
"""
from __future__ import annotations

import configparser
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Callable

from .errors import ConfigError

COMMANDS = ("spectrum", "hardy-constant", "ab-hardy", "certify", "threshold-scan",
            "trial-function", "bgrs", "curve", "ess-probe", "diamagnetic")

FIELD_KINDS = ("reference", "zero", "constant", "bump", "constant_patch", "aharonov_bohm")


def _floats(text: str) -> tuple[float, ...]:
    return tuple(float(v) for v in text.replace(",", " ").split())


def _pos(v):
    return v > 0


def _nonneg(v):
    return v >= 0


def _all_pos(vs):
    return len(vs) > 0 and all(v > 0 for v in vs)


def _strictly_between(lo, hi):
    return lambda v: lo < v < hi


def _non_integer(v):
    return abs(v - round(v)) > 1e-14


@dataclass(frozen=True)
class Key:
    kind: Callable[[str], Any]
    default: Any
    check: Callable[[Any], bool] | None = None
    rule: str = ""


# section -> key -> specification
TABLE: dict[str, dict[str, Key]] = {
    "run": {
        "seed": Key(int, 0xC0FFEE, _nonneg, "non-negative integer"),
    },
    "geometry": {
        "mode": Key(str, "deformed", lambda v: v in ("deformed", "curved", "straight"),
                    "one of deformed, curved, straight"),
        "profile": Key(str, "bump", lambda v: v in ("bump", "table"), "bump or table"),
        "area": Key(float, 1.0, _pos, "positive"),
        "height": Key(float, 0.0, _nonneg, "non-negative (0 means: use area)"),
        "width": Key(float, 2.0, _pos, "positive"),
        "center": Key(float, 0.0),
        "table_x": Key(_floats, ()),
        "table_values": Key(_floats, ()),
        "curvature_height": Key(float, 1.5, _pos, "positive"),
        "curvature_width": Key(float, 3.0, _pos, "positive"),
        "lambda": Key(float, 0.0, _nonneg, "non-negative"),
        "beta": Key(float, 0.2, _nonneg, "non-negative"),
        "lambdas": Key(_floats, (0.02, 0.04, 0.08), _all_pos, "positive values"),
        "alphas": Key(_floats, (0.1, 0.14, 0.2, 0.28, 0.4), _all_pos, "positive values"),
        "trial_s": Key(float, 1.0, _pos, "positive"),
        "trial_beta": Key(float, 1.0, _pos, "positive"),
    },
    "field": {
        "kind": Key(str, "reference", lambda v: v in FIELD_KINDS, "one of " + ", ".join(FIELD_KINDS)),
        "alpha": Key(float, 1.0, math.isfinite, "finite"),
        "B0": Key(float, 0.5, math.isfinite, "finite"),
        "R_B": Key(float, 1.5, _pos, "positive"),
        "R_in": Key(float, 1.0, _nonneg, "non-negative"),
        "Phi": Key(float, 0.5, _non_integer, "not an integer"),
        "y0": Key(float, math.pi / 2, _strictly_between(0, math.pi), "inside (0, pi)"),
        "R": Key(float, 1.0, _pos, "positive"),
    },
    "discretization": {
        "mesh": Key(str, "uniform", lambda v: v in ("uniform", "graded"), "uniform or graded"),
        "L": Key(float, 40.0, _pos, "positive"),
        "h": Key(float, 0.1, _pos, "positive"),
        "n_x": Key(int, 0, _nonneg, "non-negative (0 means: from L and h)"),
        "n_y": Key(int, 41, lambda v: v >= 3, "at least 3"),
        "L_far": Key(float, 1e7, _pos, "positive"),
        "core": Key(float, 20.0, _pos, "positive"),
        "ratio": Key(float, 1.08, lambda v: 1 < v <= 2, "in (1, 2]"),
        "tol": Key(float, 1e-8, _pos, "positive"),
        "margin": Key(float, 0.01, _nonneg, "non-negative"),
        "bisection_tol": Key(float, 0.02, _strictly_between(0, 1), "inside (0, 1)"),
        "lengths": Key(_floats, (20.0, 40.0, 80.0), _all_pos, "positive values"),
        "resolutions": Key(_floats, (0.2, 0.1), _all_pos, "positive values"),
        "n_random": Key(int, 100, _pos, "positive"),
        "box": Key(float, 4.0, _pos, "positive"),
    },
    "output": {
        "directory": Key(str, "magwave-out"),
        "formats": Key(lambda t: tuple(s.strip() for s in t.split(",") if s.strip()),
                       ("csv", "json"),
                       lambda v: len(v) > 0 and set(v) <= {"csv", "json", "gp"}, "subset of csv, json, gp"),
    },
}


@dataclass
class RunConfig:
    command: str
    values: dict = field(default_factory=dict)
    source: str | None = None

    def __getitem__(self, path: str):
        section, key = path.split(".")
        return self.values[section][key]

    def section(self, name: str) -> dict:
        return dict(self.values[name])

    def to_dict(self) -> dict:
        return {"command": self.command, "values": self.values, "source": self.source}


def _coerce(section: str, key: str, raw: str):
    spec = TABLE[section][key]
    try:
        value = spec.kind(raw)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"cannot parse {raw!r} ({exc})", f"{section}.{key}") from exc
    _check(section, key, value)
    return value


def _check(section: str, key: str, value):
    spec = TABLE[section][key]
    if spec.check is not None and not spec.check(value):
        raise ConfigError(f"value {value!r} must be {spec.rule}", f"{section}.{key}")


def defaults() -> dict:
    return {s: {k: spec.default for k, spec in keys.items()} for s, keys in TABLE.items()}


def load_config(command: str, path: str | Path | None = None, overrides: dict | None = None) -> RunConfig:
    """Parse and validate an INI file; missing keys take their defaults."""
    if command not in COMMANDS:
        raise ConfigError(f"unknown command {command!r}", "command")
    values = defaults()
    if path is not None:
        parser = configparser.ConfigParser(inline_comment_prefixes=(";", "#"))
        parser.optionxform = str  # keys are case sensitive (B0, R_B)
        try:
            with open(path) as fh:
                parser.read_file(fh)
        except configparser.Error as exc:
            raise ConfigError(f"{path}: {exc}") from exc
        for section in parser.sections():
            if section not in TABLE:
                raise ConfigError(f"unknown section [{section}]", section)
            for key, raw in parser.items(section):
                if key not in TABLE[section]:
                    raise ConfigError("unknown key", f"{section}.{key}")
                values[section][key] = _coerce(section, key, raw)
    for path_key, value in (overrides or {}).items():
        section, key = path_key.split(".")
        values[section][key] = value
        _check(section, key, value)
    _cross_checks(values)
    return RunConfig(command, values, None if path is None else str(path))


def _cross_checks(v: dict):
    f, d, g = v["field"], v["discretization"], v["geometry"]
    if f["kind"] == "constant_patch" and not f["R_in"] < f["R_B"]:
        raise ConfigError("R_in must be smaller than R_B", "field.R_in")
    if abs(f["y0"] - math.pi / 2) + f["R"] >= math.pi / 2:
        raise ConfigError("ball B_R(p) leaves the validity window |y0 - pi/2| + R < pi/2", "field.R")
    if g["profile"] == "table":
        xs, vs = g["table_x"], g["table_values"]
        if len(xs) < 3 or len(xs) != len(vs):
            raise ConfigError("table needs at least 3 matching x and value entries", "geometry.table_x")
    if d["mesh"] == "graded" and d["core"] >= d["L_far"]:
        raise ConfigError("core must be smaller than L_far", "discretization.core")
