"""Scenario config files.

A config is a YAML mapping of sections to scalar keys. Every key is optional
and falls back to the documented default; unknown sections or keys are
errors so that a misspelt gain never silently reverts to its default::

    sim:
      dt: 0.0005
    gains:
      K_b: 0.8

``emit_config`` writes every key, and ``load_config(emit_config(c)) == c``.
"""

from __future__ import annotations

import dataclasses
import re
from pathlib import Path

import yaml

from .controller import BoundsConfig, Gains
from .neuralnet import TuningGains
from .plant import PlantParams
from .pwl import PwlParams
from .sim import ReferenceSpec, Scenario, SimConfig

SECTIONS = {
    "reference": ReferenceSpec,
    "pwl": PwlParams,
    "plant": PlantParams,
    "gains": Gains,
    "tuning": TuningGains,
    "bounds": BoundsConfig,
    "scenario": Scenario,
}
SIM_KEYS = ("dt", "duration", "method", "seed", "settle_fraction", "hidden")


class ConfigError(ValueError):
    def __init__(self, message: str, line: int | None = None, source: str | None = None):
        where = ""
        if source:
            where = f"{source}:"
        if line is not None:
            where += f"{line}:"
        super().__init__(f"{where} {message}".strip())
        self.line = line


def _section_fields(section: str) -> dict[str, dataclasses.Field]:
    if section == "sim":
        fields = {f.name: f for f in dataclasses.fields(SimConfig)}
        return {k: fields[k] for k in SIM_KEYS}
    return {f.name: f for f in dataclasses.fields(SECTIONS[section])}


def _default_of(section: str, key: str):
    if section == "sim":
        return getattr(SimConfig, key)
    return getattr(SECTIONS[section](), key)


def _coerce(section: str, key: str, value):
    default = _default_of(section, key)
    name = f"{section}.{key}"
    if isinstance(default, bool):
        if not isinstance(value, bool):
            raise ValueError(f"{name} must be true or false, got {value!r}")
        return value
    if isinstance(default, int):
        if isinstance(value, bool) or not isinstance(value, int):
            raise ValueError(f"{name} must be an integer, got {value!r}")
        return value
    if isinstance(default, float):
        if isinstance(value, bool) or not isinstance(value, (int, float)):
            raise ValueError(f"{name} must be a number, got {value!r}")
        return float(value)
    if not isinstance(value, str):
        raise ValueError(f"{name} must be a string, got {value!r}")
    return value


def parse_config(text: str, source: str | None = None) -> SimConfig:
    """Build a SimConfig from config text, rejecting unknown keys."""
    try:
        root = yaml.compose(text, Loader=yaml.SafeLoader)
        data = yaml.safe_load(text)
    except yaml.YAMLError as exc:
        mark = getattr(exc, "problem_mark", None)
        line = mark.line + 1 if mark is not None else None
        problem = getattr(exc, "problem", None) or str(exc)
        raise ConfigError(f"parse error: {problem}", line, source) from None

    if data is None:
        data = {}
    if not isinstance(data, dict):
        raise ConfigError("top level must be a mapping of sections", 1, source)

    lines = {}
    if root is not None:
        for key_node, value_node in root.value:
            lines[key_node.value] = key_node.start_mark.line + 1
            if isinstance(value_node, yaml.MappingNode):
                for k, _ in value_node.value:
                    lines[(key_node.value, k.value)] = k.start_mark.line + 1

    known = ("sim", *SECTIONS)
    values: dict[str, dict] = {}
    for section, body in data.items():
        line = lines.get(section)
        if section not in known:
            raise ConfigError(f"unknown key {section!r} (expected one of {', '.join(known)})", line, source)
        if body is None:
            body = {}
        if not isinstance(body, dict):
            raise ConfigError(f"section {section!r} must be a mapping", line, source)
        fields = _section_fields(section)
        out = {}
        for key, value in body.items():
            kline = lines.get((section, key), line)
            if key not in fields:
                raise ConfigError(
                    f"unknown key {key!r} in section {section!r} (expected one of {', '.join(fields)})",
                    kline, source,
                )
            try:
                out[key] = _coerce(section, key, value)
            except ValueError as exc:
                raise ConfigError(str(exc), kline, source) from None
        values[section] = out

    try:
        parts = {name: cls(**values.get(name, {})) for name, cls in SECTIONS.items()}
        return SimConfig(**values.get("sim", {}), **parts)
    except ValueError as exc:
        # point at the offending key when the message names one ("section.key ...")
        match = re.match(r"(\w+)\.(\w+)", str(exc))
        line = lines.get((match.group(1), match.group(2))) if match else None
        raise ConfigError(f"invalid config: {exc}", line, source) from None


def load_config(path) -> SimConfig:
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read config: {exc.strerror}", None, str(path)) from None
    return parse_config(text, source=str(path))


def config_to_dict(config: SimConfig) -> dict:
    out = {"sim": {k: getattr(config, k) for k in SIM_KEYS}}
    for name in SECTIONS:
        out[name] = dataclasses.asdict(getattr(config, name))
    return out


def emit_config(config: SimConfig) -> str:
    return yaml.safe_dump(config_to_dict(config), sort_keys=False)
