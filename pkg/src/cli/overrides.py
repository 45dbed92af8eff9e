"""`--set key=value` overrides applied to a raw JSON config before validation."""

import copy
import hashlib
import json
from typing import Any, Iterable, Optional

from src.errors import ConfigError


def parse_override(text: str):
    """Split `a.b.c=value` into (["a", "b", "c"], parsed value).

    Values are read as JSON when they parse (numbers, booleans, lists, objects,
    quoted strings) and kept as raw strings otherwise.
    """
    key, sep, raw = text.partition("=")
    key = key.strip()
    if not sep or not key:
        raise ConfigError(f"override '{text}' is not of the form key=value")
    path = key.split(".")
    if any(not part for part in path):
        raise ConfigError(f"override key '{key}' has an empty component")
    try:
        value = json.loads(raw)
    except json.JSONDecodeError:
        value = raw
    return path, value


def apply_overrides(data: dict, overrides: Iterable[str], seed: Optional[int] = None) -> dict:
    """Return a copy of `data` with overrides and then the seed applied."""
    result = copy.deepcopy(data)
    for text in overrides:
        path, value = parse_override(text)
        node: Any = result
        for depth, part in enumerate(path[:-1]):
            child = node.get(part)
            if child is None:
                child = node[part] = {}
            if not isinstance(child, dict):
                prefix = ".".join(path[: depth + 1])
                raise ConfigError(f"override '{text}': '{prefix}' is not an object")
            node = child
        node[path[-1]] = value
    if seed is not None:
        result["seed"] = seed
    return result


def config_hash(data: dict) -> str:
    """SHA-256 of the canonical JSON form of a config document."""
    canonical = json.dumps(data, sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(canonical.encode("utf-8")).hexdigest()
