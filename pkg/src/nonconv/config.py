"""Run-configuration parsing with a strict schema.

A configuration is one JSON or TOML document (auto-detected by extension)
with blocks ``family``, ``process``, ``observable`` and ``experiment``.
Unknown keys anywhere are rejected with the offending key named, so typos
like ``replicatons`` fail fast instead of silently running defaults.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from fractions import Fraction
from pathlib import Path
from typing import Any, Dict, List, Optional, Tuple

import tomli

from .ordering import PolyFamily
from .polyalg import parse_poly
from .process import BaseM, ContinuedFraction, FiniteMarkov, ProcessModel
from .sums import Observable, TensorTable, indicator_product
from .process import stationary_law


class ConfigError(ValueError):
    """Malformed configuration; message names the offending key or value."""


_TOP_KEYS = {"family", "process", "observable", "experiment"}
_FAMILY_KEYS = {"polys"}
_PROCESS_KEYS = {"kind", "m", "P", "f", "digit_cap"}
_OBSERVABLE_KEYS = {"kind", "targets", "table"}
_EXPERIMENT_KEYS = {"N", "N_grid", "grid", "reps", "seed", "centered",
                    "delta", "threads", "w", "theta", "zeta1"}


def _check_keys(block: Dict[str, Any], allowed: set, where: str) -> None:
    for key in block:
        if key not in allowed:
            raise ConfigError(f"unknown key {key!r} in {where} "
                              f"(allowed: {sorted(allowed)})")


@dataclass
class ExperimentConfig:
    family: PolyFamily
    model: ProcessModel
    observable: Observable
    N: int = 1024
    N_grid: Tuple[int, ...] = ()
    grid: Tuple[float, ...] = (0.25, 0.5, 0.75, 1.0)
    reps: int = 400
    seed: Optional[int] = None
    centered: bool = True
    delta: float = 0.1
    threads: int = 1
    w: float = 8.0
    theta: float = 6.0
    zeta1: Optional[float] = None
    raw: Dict[str, Any] = field(default_factory=dict)


def load_config(path: str) -> ExperimentConfig:
    p = Path(path)
    if not p.exists():
        raise ConfigError(f"config file {path!r} not found")
    text = p.read_bytes()
    if p.suffix.lower() == ".toml":
        try:
            doc = tomli.loads(text.decode("utf-8"))
        except tomli.TOMLDecodeError as e:
            raise ConfigError(f"TOML parse error in {path}: {e}") from e
    else:
        try:
            doc = json.loads(text)
        except json.JSONDecodeError as e:
            raise ConfigError(
                f"JSON parse error in {path} at line {e.lineno} column {e.colno}: {e.msg}"
            ) from e
    return build_config(doc)


def build_config(doc: Dict[str, Any]) -> ExperimentConfig:
    if not isinstance(doc, dict):
        raise ConfigError("configuration root must be a mapping")
    _check_keys(doc, _TOP_KEYS, "configuration root")

    family = _build_family(doc.get("family", {"polys": ["n", "n+N", "n^2"]}))
    model = _build_process(doc.get("process", {"kind": "base_m", "m": 2}))
    observable = _build_observable(doc.get("observable", None), family, model)

    exp = doc.get("experiment", {})
    _check_keys(exp, _EXPERIMENT_KEYS, "experiment block")
    cfg = ExperimentConfig(family=family, model=model, observable=observable, raw=doc)
    if "N" in exp:
        cfg.N = int(exp["N"])
    if "N_grid" in exp:
        cfg.N_grid = tuple(int(v) for v in exp["N_grid"])
    if "grid" in exp:
        cfg.grid = tuple(float(v) for v in exp["grid"])
    if "reps" in exp:
        cfg.reps = int(exp["reps"])
    if "seed" in exp:
        cfg.seed = int(exp["seed"])
    if "centered" in exp:
        cfg.centered = bool(exp["centered"])
    if "delta" in exp:
        cfg.delta = float(exp["delta"])
    if "threads" in exp:
        cfg.threads = int(exp["threads"])
    if "w" in exp:
        cfg.w = float(exp["w"])
    if "theta" in exp:
        cfg.theta = float(exp["theta"])
    if "zeta1" in exp:
        cfg.zeta1 = float(exp["zeta1"])
    return cfg


def _build_family(block: Dict[str, Any]) -> PolyFamily:
    _check_keys(block, _FAMILY_KEYS, "family block")
    polys = block.get("polys")
    if not polys:
        raise ConfigError("family block needs a nonempty 'polys' list")
    try:
        return PolyFamily([parse_poly(s) for s in polys])
    except ValueError as e:
        raise ConfigError(f"bad family polynomial: {e}") from e


def _build_process(block: Dict[str, Any]) -> ProcessModel:
    _check_keys(block, _PROCESS_KEYS, "process block")
    kind = block.get("kind")
    if kind == "base_m":
        m = int(block.get("m", 2))
        if m < 2:
            raise ConfigError("base_m needs m >= 2")
        return BaseM(m)
    if kind == "markov":
        if "P" not in block or "f" not in block:
            raise ConfigError("markov process needs 'P' and 'f'")
        P = tuple(tuple(_to_rational(x) for x in row) for row in block["P"])
        return FiniteMarkov(P=P, f=tuple(int(v) for v in block["f"]))
    if kind == "cf":
        return ContinuedFraction(digit_cap=int(block.get("digit_cap", 20)))
    raise ConfigError(f"unknown process kind {kind!r}")


def _to_rational(x):
    if isinstance(x, str):
        return Fraction(x)
    if isinstance(x, int):
        return Fraction(x)
    return float(x)


def _alphabet_sizes(family: PolyFamily, model: ProcessModel) -> List[int]:
    values, _ = stationary_law(model)
    return [len(values)] * family.ell


def _build_observable(block: Optional[Dict[str, Any]], family: PolyFamily,
                      model: ProcessModel) -> Observable:
    if block is None:
        sizes = _alphabet_sizes(family, model)
        return indicator_product(sizes, [[min(1, s - 1)] for s in sizes])
    _check_keys(block, _OBSERVABLE_KEYS, "observable block")
    kind = block.get("kind")
    if kind == "indicator_product":
        targets = block.get("targets")
        if targets is None or len(targets) != family.ell:
            raise ConfigError("indicator_product needs one target list per "
                              f"family member (ell={family.ell})")
        return indicator_product(_alphabet_sizes(family, model), targets)
    if kind == "tensor":
        table = block.get("table")
        if table is None:
            raise ConfigError("tensor observable needs 'table'")
        import numpy as np
        arr = np.asarray(table, dtype=float)
        if arr.ndim != family.ell:
            raise ConfigError(f"tensor rank {arr.ndim} != family ell {family.ell}")
        return TensorTable(arr)
    raise ConfigError(f"unknown observable kind {kind!r}")
