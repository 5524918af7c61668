"""Run configuration: JSON schema, validation, and object construction.

Numbers may be JSON numbers or exact "p/q" strings; rationals are kept exact
where they feed rate classification (target rate, recurrence rate), because
degenerate-rate routing should not depend on float parsing.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from .condition import CertifyPlan
from .errors import ConfigError
from .svf import AffineIFS
from .symbolic import (DegenerateTargets, ExplicitTargets, LinearFloorRule,
                       LinearPatternTargets, TableRule, parse_word)

SCHEMA_VERSION = 1

COMMANDS = (
    "pressure", "alpha", "dim-affinity", "dim-shrinking", "dim-recurrence",
    "certify-condition", "check-matrices", "build-measure", "energy",
    "sample", "boxcount",
)


def parse_number(value, field: str, exact: bool = False):
    """A float, or an exact Fraction for 'p/q' strings when exact=True."""
    if isinstance(value, bool):
        raise ConfigError(f"{field}: expected a number", field)
    if isinstance(value, (int, float)):
        return Fraction(value) if exact else float(value)
    if isinstance(value, str):
        try:
            frac = Fraction(value)
        except (ValueError, ZeroDivisionError) as exc:
            raise ConfigError(f"{field}: cannot parse number {value!r}", field) from exc
        return frac if exact else float(frac)
    raise ConfigError(f"{field}: expected a number or 'p/q' string", field)


def _matrix_rows(raw, d: int, field: str) -> np.ndarray:
    flat = []
    if all(isinstance(x, list) for x in raw):
        for row in raw:
            flat.extend(row)
    else:
        flat = list(raw)
    if len(flat) != d * d:
        raise ConfigError(f"{field}: expected {d * d} row-major entries", field)
    values = [parse_number(x, field) for x in flat]
    return np.array(values, dtype=float).reshape(d, d)


def parse_ifs(raw: dict) -> AffineIFS:
    if not isinstance(raw, dict):
        raise ConfigError("ifs: expected an object", "ifs")
    try:
        d = int(raw["dimension"])
    except (KeyError, TypeError, ValueError):
        raise ConfigError("ifs.dimension: required integer", "ifs.dimension")
    matrices = raw.get("matrices")
    translations = raw.get("translations")
    if not isinstance(matrices, list) or len(matrices) < 2:
        raise ConfigError("ifs.matrices: need at least two matrices", "ifs.matrices")
    mats = np.stack([
        _matrix_rows(m, d, f"ifs.matrices[{i}]") for i, m in enumerate(matrices)
    ])
    if translations is None:
        trans = np.zeros((len(matrices), d))
    else:
        if not isinstance(translations, list) or len(translations) != len(matrices):
            raise ConfigError(
                "ifs.translations: need one vector per matrix", "ifs.translations"
            )
        rows = []
        for i, vec in enumerate(translations):
            if not isinstance(vec, list) or len(vec) != d:
                raise ConfigError(
                    f"ifs.translations[{i}]: expected {d} entries",
                    "ifs.translations",
                )
            rows.append([parse_number(x, f"ifs.translations[{i}]") for x in vec])
        trans = np.array(rows, dtype=float)
    try:
        return AffineIFS(mats, trans)
    except ValueError as exc:
        raise ConfigError(f"ifs: {exc}", "ifs") from exc


def parse_target(raw: dict):
    if not isinstance(raw, dict) or "kind" not in raw:
        raise ConfigError("target: expected an object with a 'kind'", "target")
    kind = raw["kind"]
    if kind == "linear_pattern":
        pattern = parse_word(str(raw.get("pattern", "")))
        if len(pattern) == 0:
            raise ConfigError("target.pattern: nonempty word required", "target.pattern")
        rate = parse_number(raw.get("rate", 1), "target.rate", exact=True)
        return LinearPatternTargets(pattern, rate)
    if kind == "explicit":
        words = raw.get("words")
        if not isinstance(words, list) or not words:
            raise ConfigError("target.words: nonempty list required", "target.words")
        return ExplicitTargets(tuple(parse_word(str(w)) for w in words))
    if kind == "degenerate":
        rate = str(raw.get("rate", ""))
        schedule = str(raw.get("schedule", ""))
        if rate == "zero" and schedule in ("", "sqrt"):
            return DegenerateTargets.sqrt_lengths()
        if rate == "infinite" and schedule in ("", "square"):
            return DegenerateTargets.square_lengths()
        raise ConfigError(
            "target: degenerate kind supports rate 'zero' (sqrt schedule) or "
            "'infinite' (square schedule)", "target")
    raise ConfigError(f"target.kind: unknown kind {kind!r}", "target.kind")


def parse_return_rule(raw: dict):
    if not isinstance(raw, dict) or "kind" not in raw:
        raise ConfigError("psi: expected an object with a 'kind'", "psi")
    kind = raw["kind"]
    if kind == "linear_floor":
        rate = parse_number(raw.get("rate", 0), "psi.rate", exact=True)
        offset = int(raw.get("offset", 0))
        return LinearFloorRule(rate, offset)
    if kind == "table":
        values = raw.get("values")
        if not isinstance(values, list) or not values:
            raise ConfigError("psi.values: nonempty list required", "psi.values")
        return TableRule(tuple(int(v) for v in values))
    raise ConfigError(f"psi.kind: unknown kind {kind!r}", "psi.kind")


def parse_certify_plan(raw: dict | None) -> CertifyPlan | None:
    if raw is None:
        return None
    if not isinstance(raw, dict):
        raise ConfigError("certify: expected an object", "certify")
    kwargs = {}
    if "K" in raw:
        kwargs["K"] = int(raw["K"])
    for key in ("k_max", "exhaustive_len", "random_pairs", "rng_seed"):
        if key in raw:
            kwargs[key] = int(raw[key])
    if "floor" in raw:
        kwargs["floor"] = parse_number(raw["floor"], "certify.floor")
    return CertifyPlan(**kwargs)


@dataclass
class RunConfig:
    """Validated configuration; `raw` keeps the resolved document for records."""

    schema_version: int
    seed: int
    budget: int | None
    ifs: AffineIFS
    raw: dict

    def block(self, name: str) -> dict:
        value = self.raw.get(name, {})
        if not isinstance(value, dict):
            raise ConfigError(f"{name}: expected an object", name)
        return value


def load_config(path: str) -> RunConfig:
    try:
        with open(path, "r", encoding="utf-8") as fh:
            raw = json.load(fh)
    except OSError as exc:
        raise ConfigError(f"cannot read config: {exc}")
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config is not valid JSON: {exc}")
    if not isinstance(raw, dict):
        raise ConfigError("config root must be an object")
    version = raw.get("schema_version", SCHEMA_VERSION)
    if version != SCHEMA_VERSION:
        raise ConfigError(f"unsupported schema_version {version}", "schema_version")
    if "ifs" not in raw:
        raise ConfigError("ifs: section is required", "ifs")
    ifs = parse_ifs(raw["ifs"])
    seed = int(raw.get("seed", 0))
    budget = int(raw["budget"]) if "budget" in raw else None
    return RunConfig(version, seed, budget, ifs, raw)
