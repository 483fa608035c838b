"""Run configuration stored as a one-section INI file::

    [run]
    nodes = city/nodes.csv
    edges = city/edges.csv
    artifact_dir = artifacts
    output_dir = out
    cost_model = v1
    regimes = none, light, moderate, heavy
    trials = 200
    seed = 0
    k = 5
    alphas = 10, 100
    heuristics = euclidean, great_circle
    divisor = max_speed
    algorithms =
    breakdown = true

An empty ``algorithms`` list means every configuration from
:func:`trafficroute.bench.standard_configs`; otherwise it lists labels to keep.
Relative paths resolve against the config file's directory.
"""

from __future__ import annotations

import configparser
import hashlib
from dataclasses import dataclass, fields
from pathlib import Path

from .errors import ConfigError
from .traffic import REGIME_ORDER, CostModel, get_regime

_LIST_FIELDS = {"regimes", "alphas", "heuristics", "algorithms"}
_PATH_FIELDS = {"nodes", "edges", "artifact_dir", "output_dir"}


@dataclass(frozen=True)
class RunConfig:
    nodes: str
    edges: str
    artifact_dir: str = "artifacts"
    output_dir: str = "out"
    cost_model: str = "v1"
    regimes: tuple[str, ...] = REGIME_ORDER
    trials: int = 200
    seed: int = 0
    k: int = 5
    alphas: tuple[float, ...] = (10.0, 100.0)
    heuristics: tuple[str, ...] = ("euclidean", "great_circle")
    divisor: str = "max_speed"
    algorithms: tuple[str, ...] = ()
    breakdown: bool = True

    def __post_init__(self):
        try:
            CostModel(self.cost_model)
            for r in self.regimes:
                get_regime(r)
        except ValueError as exc:
            raise ConfigError(str(exc)) from None
        if self.divisor not in ("max_speed", "avg_speed"):
            raise ConfigError(f"divisor must be max_speed or avg_speed, got {self.divisor!r}")
        if self.k < 1:
            raise ConfigError("k must be >= 1")

    def to_text(self) -> str:
        lines = ["[run]"]
        for f in fields(self):
            value = getattr(self, f.name)
            if f.name in _LIST_FIELDS:
                value = ", ".join(f"{v:g}" if isinstance(v, float) else str(v) for v in value)
            elif isinstance(value, bool):
                value = "true" if value else "false"
            lines.append(f"{f.name} = {value}")
        return "\n".join(lines) + "\n"

    def config_hash(self) -> str:
        return hashlib.sha256(self.to_text().encode()).hexdigest()

    def save(self, path):
        Path(path).write_text(self.to_text(), encoding="utf-8")

    @classmethod
    def load(cls, path) -> RunConfig:
        path = Path(path)
        parser = configparser.ConfigParser(interpolation=None)
        try:
            with open(path, encoding="utf-8") as fh:
                parser.read_file(fh)
        except (OSError, configparser.Error) as exc:
            raise ConfigError(f"{path}: {exc}") from None
        if not parser.has_section("run"):
            raise ConfigError(f"{path}: missing [run] section")
        section = parser["run"]
        known = {f.name: f for f in fields(cls)}
        unknown = set(section) - set(known)
        if unknown:
            raise ConfigError(f"{path}: unknown keys {sorted(unknown)}")
        kwargs = {}
        base = path.parent
        for name in section:
            raw = section[name].strip()
            try:
                if name in _LIST_FIELDS:
                    items = [x.strip() for x in raw.split(",") if x.strip()]
                    kwargs[name] = tuple(float(x) for x in items) if name == "alphas" else tuple(items)
                elif name in ("trials", "seed", "k"):
                    kwargs[name] = int(raw)
                elif name == "breakdown":
                    kwargs[name] = section.getboolean(name)
                elif name in _PATH_FIELDS:
                    p = Path(raw)
                    kwargs[name] = str(p if p.is_absolute() else base / p)
                else:
                    kwargs[name] = raw
            except ValueError as exc:
                raise ConfigError(f"{path}: bad value for {name}: {exc}") from None
        for required in ("nodes", "edges"):
            if required not in kwargs:
                raise ConfigError(f"{path}: {required} is required")
        return cls(**kwargs)
