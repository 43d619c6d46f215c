"""Config loading (TOML or JSON) and spec-to-object helpers."""
from __future__ import annotations

import json
import sys

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

import numpy as np

from .graph import EigenSystem, Graph, generate_er, generate_sbm, load_graph
from .noisy import lowfreq_signal


class ConfigError(ValueError):
    """Malformed or inconsistent configuration."""


def load_config(path: str) -> dict:
    """Parse a TOML or JSON config file; the format is sniffed when the
    extension is ambiguous."""
    with open(path, "rb") as fh:
        raw = fh.read()
    if path.endswith(".json"):
        return json.loads(raw.decode("utf-8"))
    if path.endswith(".toml"):
        return tomllib.loads(raw.decode("utf-8"))
    try:
        return json.loads(raw.decode("utf-8"))
    except json.JSONDecodeError:
        try:
            return tomllib.loads(raw.decode("utf-8"))
        except tomllib.TOMLDecodeError as exc:
            raise ConfigError(f"{path} is neither valid JSON nor valid TOML: {exc}") from exc


def graph_from_spec(spec: dict, seed: int) -> Graph:
    kind = spec.get("type")
    if kind == "sbm":
        return generate_sbm(int(spec["n_per_cluster"]), float(spec["p_intra"]),
                            float(spec["p_inter"]), seed)
    if kind == "er":
        return generate_er(int(spec["n"]), float(spec["p"]), seed)
    if kind == "file":
        return load_graph(spec["path"])
    raise ConfigError(f"unknown graph type {kind!r}")


def signal_from_spec(spec: dict, eig: EigenSystem) -> np.ndarray:
    kind = spec.get("type", "lowfreq")
    if kind == "lowfreq":
        return lowfreq_signal(eig, int(spec["k"]) if "k" in spec else None)
    if kind == "explicit":
        values = np.asarray(spec["values"], dtype=float)
        if len(values) != eig.n:
            raise ConfigError(f"signal has {len(values)} entries for {eig.n} nodes")
        return values
    raise ConfigError(f"unknown signal type {kind!r}")
