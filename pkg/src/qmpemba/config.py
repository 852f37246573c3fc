"""Run configuration: JSON schema validation, defaults, angle parsing and hashing.

The schema in ``schemas/config.schema.json`` is the single source of truth
for keys, ranges and defaults.
"""

from __future__ import annotations

import copy
import hashlib
import json
import math
import re
from dataclasses import dataclass
from functools import lru_cache
from importlib import resources
from pathlib import Path

import jsonschema

from .basis import Geometry, parse_spins
from .dynamics import EnsembleSpec
from .model import ModelParams


class ConfigError(ValueError):
    """The configuration document is unreadable or violates the schema."""


_PI_RE = re.compile(r"^\s*(?:([0-9]*\.?[0-9]+)\s*\*?\s*)?pi\s*(?:/\s*([0-9]*\.?[0-9]+))?\s*$")


def parse_angle(value) -> float:
    """Radians from a number or a string like ``"3pi/4"``, ``"pi"`` or ``"0.5"``."""
    if isinstance(value, bool):
        raise ConfigError(f"not an angle: {value!r}")
    if isinstance(value, (int, float)):
        return float(value)
    m = _PI_RE.match(str(value))
    if m:
        num = float(m.group(1)) if m.group(1) else 1.0
        den = float(m.group(2)) if m.group(2) else 1.0
        if den == 0:
            raise ConfigError(f"zero denominator in angle {value!r}")
        return num * math.pi / den
    try:
        return float(value)
    except ValueError:
        raise ConfigError(f"not an angle: {value!r}") from None


@lru_cache(maxsize=None)
def load_schema() -> dict:
    text = resources.files("qmpemba").joinpath("schemas/config.schema.json").read_text(encoding="utf-8")
    return json.loads(text)


_MISSING = object()


def _defaults(node: dict, root: dict):
    if "$ref" in node:
        node = root["$defs"][node["$ref"].rsplit("/", 1)[-1]] | {k: v for k, v in node.items() if k != "$ref"}
    if "default" in node:
        return copy.deepcopy(node["default"])
    if node.get("type") == "object" and "properties" in node:
        out = {}
        for key, sub in node["properties"].items():
            d = _defaults(sub, root)
            if d is not _MISSING:
                out[key] = d
        return out
    return _MISSING


def default_config() -> dict:
    schema = load_schema()
    return _defaults(schema, schema)


def _merge(base: dict, override: dict) -> dict:
    out = copy.deepcopy(base)
    for k, v in override.items():
        if isinstance(v, dict) and isinstance(out.get(k), dict):
            out[k] = _merge(out[k], v)
        else:
            out[k] = copy.deepcopy(v)
    return out


def config_hash(doc: dict) -> str:
    """SHA-256 of the canonical JSON form of a resolved config."""
    canon = json.dumps(doc, sort_keys=True, separators=(",", ":"), ensure_ascii=False)
    return hashlib.sha256(canon.encode("utf-8")).hexdigest()


@dataclass(frozen=True)
class Labeled:
    label: str
    theta_s: float
    theta_b: float


@dataclass(frozen=True)
class RunConfig:
    """Validated configuration with typed accessors; ``doc`` is the resolved JSON."""

    doc: dict

    @property
    def sha256(self) -> str:
        return config_hash(self.doc)

    @property
    def params(self) -> ModelParams:
        m = self.doc["model"]
        return ModelParams(m["L"], float(m["J"]), float(m["h"]))

    @property
    def geometry(self) -> Geometry:
        return Geometry(self.doc["model"]["L"], tuple(self.doc["geometry"]["qos_sites"]))

    @property
    def times(self):
        import numpy as np

        t = self.doc["time"]
        return np.linspace(0.0, float(t["t_max"]), int(t["n_points"]))

    @property
    def ensemble(self) -> EnsembleSpec:
        e = self.doc["ensemble"]
        return EnsembleSpec(e["n_samples"], float(e["dt_min"]), float(e["dt_max"]), int(e["seed"]))

    @property
    def theta_pairs(self) -> list[tuple[float, float]]:
        i = self.doc["init"]
        return [(parse_angle(s), parse_angle(b)) for s in i["theta_s"] for b in i["theta_b"]]

    @property
    def qme_pair(self) -> tuple[Labeled, Labeled]:
        out = []
        for key, fallback in (("first", "first"), ("second", "second")):
            c = self.doc["qme"][key]
            out.append(Labeled(c.get("label", fallback), parse_angle(c["theta_s"]), parse_angle(c["theta_b"])))
        if out[0].label == out[1].label:
            raise ConfigError(f"qme labels must differ, both are {out[0].label!r}")
        return out[0], out[1]

    def element(self, section: str) -> tuple[int, int]:
        """QOS words of ``spectra.element`` or ``theory.element``, checked against the geometry."""
        L_s = self.geometry.L_s
        words = []
        for text in self.doc[section]["element"]:
            if len(text) != L_s:
                raise ConfigError(f"{section}.element entry {text!r} has {len(text)} spins, QOS has {L_s}")
            words.append(parse_spins(text))
        return words[0], words[1]

    @property
    def fit_floor(self) -> float:
        return float(self.doc["analysis"]["fit_floor"])

    @property
    def n_jobs(self) -> int:
        return int(self.doc["runtime"]["n_jobs"])

    @property
    def output_dir(self) -> Path:
        return Path(self.doc["output"]["directory"])


def validate(doc: dict) -> RunConfig:
    """Fill defaults, check the schema and the cross-field constraints."""
    if not isinstance(doc, dict):
        raise ConfigError("configuration must be a JSON object")
    schema = load_schema()
    validator = jsonschema.Draft202012Validator(schema)
    errors = sorted(validator.iter_errors(doc), key=lambda e: list(e.absolute_path))
    if errors:
        lines = [f"  {'/'.join(map(str, e.absolute_path)) or '<root>'}: {e.message}" for e in errors]
        raise ConfigError("configuration does not match the schema:\n" + "\n".join(lines))
    resolved = _merge(default_config(), doc)
    L = resolved["model"]["L"]
    first, last = resolved["geometry"]["qos_sites"]
    if not 1 <= first <= last <= L:
        raise ConfigError(f"geometry.qos_sites [{first}, {last}] must satisfy 1 <= first <= last <= L={L}")
    if last - first + 1 == L:
        raise ConfigError("geometry.qos_sites covers the whole chain; the bath would be empty")
    kL = resolved["krylov"]["L"]
    k1, k2 = resolved["krylov"]["qos_sites"]
    if not (1 <= k1 <= k2 <= kL and k2 - k1 + 1 == 3):
        raise ConfigError(f"krylov.qos_sites must be 3 consecutive sites inside 1..{kL}")
    e = resolved["ensemble"]
    if e["dt_min"] > e["dt_max"]:
        raise ConfigError(f"ensemble.dt_min {e['dt_min']} exceeds dt_max {e['dt_max']}")
    for s in resolved["init"]["theta_s"] + resolved["init"]["theta_b"]:
        parse_angle(s)
    cfg = RunConfig(resolved)
    cfg.qme_pair
    return cfg


def load(path) -> RunConfig:
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from None
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config {path} is not valid JSON: {exc}") from None
    return validate(doc)
