"""
Configuration plumbing.

Every configurable part of uvtex is a dataclass with defaults. This module
converts such trees to and from plain dicts, reads and writes them as JSON
or YAML (chosen by file suffix), and applies `dotted.path=value` overrides.
Unknown keys are rejected with the dotted path that introduced them.
"""

import dataclasses
import json
import typing
from enum import Enum
from pathlib import Path
from typing import Any, Union

import yaml

from .errors import ConfigError

PathLike = Union[str, Path]

YAML_SUFFIXES = (".yaml", ".yml")


def to_dict(obj: Any) -> Any:
    """Recursively convert dataclasses, enums and tuples to JSON-ready values."""
    if dataclasses.is_dataclass(obj) and not isinstance(obj, type):
        return {f.name: to_dict(getattr(obj, f.name)) for f in dataclasses.fields(obj)}
    if isinstance(obj, Enum):
        return obj.value
    if isinstance(obj, Path):
        return str(obj)
    if isinstance(obj, dict):
        return {str(k): to_dict(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [to_dict(v) for v in obj]
    if hasattr(obj, "tolist"):
        return obj.tolist()
    return obj


def _unwrap_optional(tp: Any) -> Any:
    if typing.get_origin(tp) is Union:
        args = [a for a in typing.get_args(tp) if a is not type(None)]
        if len(args) == 1:
            return args[0]
    return tp


def from_dict(cls: type, data: Any, path: str = "") -> Any:
    """
    Build a dataclass instance from a dict, recursing into nested dataclasses.

    Args:
        cls: Target dataclass type
        data: Mapping of field values; missing fields keep their defaults
        path: Dotted prefix used in error messages

    Raises:
        ConfigError: unknown key, wrong container type or bad enum value
    """
    where = path or "<root>"
    if not isinstance(data, dict):
        raise ConfigError(f"{where}: expected a mapping, got {type(data).__name__}")

    hints = typing.get_type_hints(cls)
    names = {f.name for f in dataclasses.fields(cls)}
    unknown = sorted(set(data) - names)
    if unknown:
        prefix = f"{path}." if path else ""
        raise ConfigError(f"unknown config key '{prefix}{unknown[0]}'")

    kwargs = {}
    for key, value in data.items():
        field_path = f"{path}.{key}" if path else key
        tp = _unwrap_optional(hints[key])
        if value is None:
            kwargs[key] = None
        elif dataclasses.is_dataclass(tp):
            kwargs[key] = from_dict(tp, value, field_path)
        elif isinstance(tp, type) and issubclass(tp, Enum):
            try:
                kwargs[key] = tp(value)
            except ValueError:
                valid = [e.value for e in tp]
                raise ConfigError(f"{field_path}: '{value}' is not one of {valid}")
        elif typing.get_origin(tp) is tuple and isinstance(value, list):
            kwargs[key] = tuple(value)
        else:
            kwargs[key] = value
    return cls(**kwargs)


def load_config_file(path: PathLike) -> dict:
    """Read a JSON or YAML config file into a dict."""
    path = Path(path)
    if not path.exists():
        raise ConfigError(f"config file not found: {path}")
    text = path.read_text()
    try:
        if path.suffix.lower() in YAML_SUFFIXES:
            data = yaml.safe_load(text) or {}
        else:
            data = json.loads(text)
    except (json.JSONDecodeError, yaml.YAMLError) as e:
        raise ConfigError(f"cannot parse {path}: {e}")
    if not isinstance(data, dict):
        raise ConfigError(f"{path}: top level must be a mapping")
    return data


def save_config_file(data: dict, path: PathLike) -> None:
    """Write a config dict as JSON or YAML, keys in declaration order."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    if path.suffix.lower() in YAML_SUFFIXES:
        path.write_text(yaml.safe_dump(data, sort_keys=False))
    else:
        path.write_text(json.dumps(data, indent=2) + "\n")


def parse_override(text: str) -> tuple[list[str], Any]:
    """Split 'a.b.c=value' into (['a', 'b', 'c'], parsed value)."""
    if "=" not in text:
        raise ConfigError(f"override must look like key.path=value, got '{text}'")
    key, raw = text.split("=", 1)
    keys = [k for k in key.strip().split(".") if k]
    if not keys:
        raise ConfigError(f"empty key in override '{text}'")
    try:
        value = json.loads(raw)
    except json.JSONDecodeError:
        value = raw
    return keys, value


def apply_overrides(data: dict, overrides: list[str]) -> dict:
    """Return a copy of `data` with each dotted override applied in order."""
    result = json.loads(json.dumps(data))
    for text in overrides:
        keys, value = parse_override(text)
        node = result
        for k in keys[:-1]:
            child = node.get(k)
            if child is None:
                child = node[k] = {}
            if not isinstance(child, dict):
                raise ConfigError(f"cannot override inside non-mapping '{k}' ({text})")
            node = child
        node[keys[-1]] = value
    return result
