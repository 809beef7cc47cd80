"""INI-style configuration files mirroring the config dataclasses.

Example::

    [run]
    seed = 3

    [grid]
    nx = 256
    nt = 100

    [ic]
    preset = one_plus_sin

    [model]
    lr = 1e-3
    lr_schedule = cosine

    [pinn]
    widths = 2, 64, 64, 64, 1
"""

from __future__ import annotations

import configparser
import dataclasses
from pathlib import Path
from typing import Any

from .experiments import ExperimentConfig
from .model import ModelConfig
from .pde import Grid, InitialCondition
from .pinn import PinnConfig

SECTIONS = {"grid": Grid, "ic": InitialCondition, "model": ModelConfig, "pinn": PinnConfig}


def _coerce(text: str, default: Any):
    if isinstance(default, bool):
        low = text.strip().lower()
        if low not in ("true", "false", "1", "0", "yes", "no"):
            raise ValueError(f"not a boolean: {text!r}")
        return low in ("true", "1", "yes")
    if isinstance(default, int):
        return int(text)
    if isinstance(default, float):
        return float(text)
    if isinstance(default, tuple):
        return tuple(int(p) for p in text.replace(",", " ").split())
    return text.strip()


def _section(base_obj, items: dict, name: str):
    known = {f.name for f in dataclasses.fields(base_obj)}
    unknown = set(items) - known
    if unknown:
        raise ValueError(f"[{name}] unknown keys: {sorted(unknown)}")
    return dataclasses.replace(base_obj, **{k: _coerce(v, getattr(base_obj, k)) for k, v in items.items()})


def parse_config(text: str, base: ExperimentConfig = ExperimentConfig()) -> ExperimentConfig:
    parser = configparser.ConfigParser()
    parser.read_string(text)
    updates: dict[str, Any] = {}
    for name in parser.sections():
        items = dict(parser[name])
        if name == "run":
            extra = set(items) - {"seed"}
            if extra:
                raise ValueError(f"[run] unknown keys: {sorted(extra)}")
            if "seed" in items:
                updates["seed"] = int(items["seed"])
        elif name in SECTIONS:
            updates[name] = _section(getattr(base, name), items, name)
        else:
            raise ValueError(f"unknown config section [{name}]")
    return dataclasses.replace(base, **updates)


def load_config(path, base: ExperimentConfig = ExperimentConfig()) -> ExperimentConfig:
    return parse_config(Path(path).read_text(), base)


def dump_config(cfg: ExperimentConfig) -> str:
    lines = ["[run]", f"seed = {cfg.seed}", ""]
    for name in SECTIONS:
        lines.append(f"[{name}]")
        obj = getattr(cfg, name)
        for f in dataclasses.fields(obj):
            v = getattr(obj, f.name)
            lines.append(f"{f.name} = {', '.join(map(str, v)) if isinstance(v, tuple) else v}")
        lines.append("")
    return "\n".join(lines)
