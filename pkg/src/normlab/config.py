"""Flat ``key = value`` experiment configs with ``#`` comments.

Every key is typed and validated; unknown keys and malformed values raise
:class:`ConfigError` carrying the offending line number. The canonical form
(sorted keys, normalized values) is what gets hashed into the manifest.
"""

from __future__ import annotations

import hashlib
import os
from dataclasses import dataclass, field
from fractions import Fraction
from pathlib import Path

from . import scalar as sc
from .errors import ConfigError

COMMANDS = ("construct", "discretize", "nikolskii", "witness", "frames", "phase", "reproduce")
TARGETS = ("t21", "p32", "p33", "l46", "t47", "s5")
FAMILIES = ("l1", "rademacher", "rademacher_system", "infinite", "mercedes", "random_frame")
STRATEGIES = ("uniform", "random", "greedy", "valid")
BACKENDS = ("exact", "float64")


def _int(text):
    v = int(text)
    if v < 0:
        raise ValueError("negative")
    return v


def _scalar(text):
    return sc.parse_scalar(text)


def _choice(options):
    def parse(text):
        if text not in options:
            raise ValueError(f"expected one of {', '.join(options)}")
        return text
    return parse


def _str(text):
    if not text:
        raise ValueError("empty value")
    return text


# key -> (parser, list allowed)
SCHEMA = {
    "command": (_choice(COMMANDS), False),
    "target": (_choice(TARGETS), False),
    "family": (_choice(FAMILIES), False),
    "n": (_int, True),
    "inv_eps": (_int, True),
    "N": (_int, True),
    "p": (_scalar, True),
    "K": (_int, False),
    "A_p_param": (_scalar, False),
    "strategy": (_choice(STRATEGIES), False),
    "M": (_int, False),
    "cells": (_int, False),
    "seed": (_int, False),
    "budget": (_int, False),
    "probes": (_int, False),
    "trials": (_int, False),
    "sampling": (_str, False),
    "out": (_str, False),
    "backend": (_choice(BACKENDS), False),
    "plots": (_choice(("true", "false")), False),
}


def _canon_value(v) -> str:
    if isinstance(v, list):
        return ",".join(_canon_value(x) for x in v)
    if isinstance(v, (int, Fraction, float)):
        return sc.to_text(v)
    return str(v)


@dataclass
class ExperimentConfig:
    """Parsed key/value settings; ``values`` holds only keys that were given."""

    values: dict = field(default_factory=dict)

    @property
    def command(self) -> str:
        return self.values["command"]

    def get(self, key, default=None):
        return self.values.get(key, default)

    def get_list(self, key, default):
        v = self.values.get(key)
        if v is None:
            return list(default)
        return v if isinstance(v, list) else [v]

    def get_one(self, key, default=None):
        v = self.values.get(key, default)
        if isinstance(v, list):
            if len(v) != 1:
                raise ConfigError(f"{key} takes a single value here")
            return v[0]
        return v

    @property
    def seed(self) -> int:
        return self.values.get("seed", 0)

    @property
    def backend(self) -> str:
        return self.values.get("backend", "exact")

    def with_overrides(self, **kw) -> "ExperimentConfig":
        vals = dict(self.values)
        for k, v in kw.items():
            if v is not None:
                vals[k] = v
        return ExperimentConfig(vals)

    def canonical(self) -> str:
        return "".join(f"{k} = {_canon_value(self.values[k])}\n" for k in sorted(self.values))

    def hash(self, version: str) -> str:
        h = hashlib.sha256()
        h.update(self.canonical().encode())
        h.update(b"\0version=" + version.encode())
        return h.hexdigest()

    def to_json(self) -> dict:
        return {k: _canon_value(self.values[k]) for k in sorted(self.values)}


def parse_config(text: str) -> ExperimentConfig:
    """Parse config text; ``command`` is required, repeated keys are errors."""
    values = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"expected key = value, got {raw.strip()!r}", lineno)
        key, _, val = (part.strip() for part in line.partition("="))
        if key not in SCHEMA:
            raise ConfigError(f"unknown key {key!r}", lineno)
        if key in values:
            raise ConfigError(f"duplicate key {key!r}", lineno)
        parser, many = SCHEMA[key]
        items = [v.strip() for v in val.split(",")] if many else [val]
        try:
            parsed = [parser(v) for v in items]
        except (ValueError, ZeroDivisionError) as exc:
            raise ConfigError(f"bad value for {key}: {val!r} ({exc})", lineno) from None
        values[key] = parsed if many and len(parsed) > 1 else parsed[0]
    if "command" not in values:
        raise ConfigError("missing required key 'command'")
    if values["command"] == "reproduce" and "target" not in values:
        raise ConfigError("reproduce needs a target")
    return ExperimentConfig(values)


def load_config(path) -> ExperimentConfig:
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from None
    return parse_config(text)


def backend_from_env(cfg: ExperimentConfig) -> ExperimentConfig:
    """``NORMLAB_BACKEND`` overrides the config backend."""
    env = os.environ.get("NORMLAB_BACKEND")
    if env is None:
        return cfg
    if env not in BACKENDS:
        raise ConfigError(f"NORMLAB_BACKEND must be one of {', '.join(BACKENDS)}, got {env!r}")
    return cfg.with_overrides(backend=env)
