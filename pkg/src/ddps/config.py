"""Flat ``key = value`` run configuration.

Blank lines and lines whose first non-blank character is ``#`` are ignored.
Vectors are comma-separated; ``epsilon`` is a number or ``auto``.
Inline anchors list one group per agent separated by ``;``, anchors within a
group separated by whitespace, coordinates by ``,`` (e.g. ``0 ; 1 ; 5 ; ; ``).
"""

from __future__ import annotations

import dataclasses
from dataclasses import dataclass
from pathlib import Path

from .errors import ConfigError

PROBLEMS = ("logistic", "sum_of_distances")
CONSTRAINTS = ("none", "ball", "box")
INITS = ("zero", "consensus")


@dataclass(frozen=True)
class RunConfig:
    # graph: a file, or the random generator
    graph_file: str = ""
    graph_nodes: int = 10
    graph_extra_edge_prob: float = 0.15
    graph_undirected: bool = False
    # problem
    problem: str = "logistic"
    data_file: str = ""
    samples_per_agent: int = 10
    dim: int = 100
    label_flip: float = 0.1
    anchors: str = ""
    # constraint set
    constraint: str = "ball"
    ball_radius: float = 5.0
    ball_center: tuple = ()
    box_lower: tuple = ()
    box_upper: tuple = ()
    # algorithm
    step_a: float = 1.0
    step_exponent: float = 0.5
    epsilon: float | None = None
    epsilon_cap: float = 1e-3
    iters: int = 10000
    record_every: int = 10
    window: int = 100
    init: str = "zero"
    seed: int = 0
    reference_budget: int = 0
    out: str = "trace.csv"

    def __post_init__(self):
        # the text format cannot carry surrounding whitespace
        for f in dataclasses.fields(self):
            value = getattr(self, f.name)
            if isinstance(value, str):
                object.__setattr__(self, f.name, value.strip())

    def validate(self) -> RunConfig:
        def need(cond, msg):
            if not cond:
                raise ConfigError(msg)

        need(self.graph_nodes >= 1, "graph_nodes must be >= 1")
        need(0.0 <= self.graph_extra_edge_prob <= 1.0, "graph_extra_edge_prob must lie in [0, 1]")
        need(self.problem in PROBLEMS, f"problem must be one of {PROBLEMS}")
        need(self.samples_per_agent >= 1, "samples_per_agent must be >= 1")
        need(self.dim >= 1, "dim must be >= 1")
        need(0.0 <= self.label_flip <= 1.0, "label_flip must lie in [0, 1]")
        need(self.constraint in CONSTRAINTS, f"constraint must be one of {CONSTRAINTS}")
        need(self.ball_radius > 0, "ball_radius must be positive")
        need(len(self.box_lower) == len(self.box_upper), "box_lower and box_upper differ in length")
        need(all(lo <= hi for lo, hi in zip(self.box_lower, self.box_upper)),
             "box_lower must not exceed box_upper")
        need(self.step_a > 0, "step_a must be positive")
        need(0.5 <= self.step_exponent <= 1.0, "step_exponent must lie in [0.5, 1]")
        need(self.epsilon is None or self.epsilon > 0, "epsilon must be positive or auto")
        need(self.epsilon_cap > 0, "epsilon_cap must be positive")
        need(self.iters >= 1, "iters must be >= 1")
        need(self.record_every >= 1, "record_every must be >= 1")
        need(self.window >= 1, "window must be >= 1")
        need(self.init in INITS, f"init must be one of {INITS}")
        need(self.reference_budget >= 0, "reference_budget must be >= 0")
        return self


_FIELDS = {f.name: f for f in dataclasses.fields(RunConfig)}


def _parse_value(name, text):
    kind = _FIELDS[name].type
    if kind == "bool":
        if text.lower() in ("true", "yes", "1"):
            return True
        if text.lower() in ("false", "no", "0"):
            return False
        raise ValueError(f"expected true/false, got {text!r}")
    if kind == "int":
        return int(text)
    if kind == "float":
        return float(text)
    if kind == "float | None":
        return None if text.lower() == "auto" else float(text)
    if kind == "tuple":
        return tuple(float(t) for t in text.split(",") if t.strip())
    return text


def _format_value(value):
    if isinstance(value, bool):
        return "true" if value else "false"
    if value is None:
        return "auto"
    if isinstance(value, float):
        return repr(value)
    if isinstance(value, tuple):
        return ",".join(repr(float(v)) for v in value)
    return str(value)


def parse_config(text: str) -> RunConfig:
    values = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        key, sep, value = line.partition("=")
        key, value = key.strip(), value.strip()
        if not sep:
            raise ConfigError(f"expected 'key = value', got {line!r}", line=lineno)
        if key not in _FIELDS:
            raise ConfigError(f"unknown key {key!r}", line=lineno)
        if key in values:
            raise ConfigError(f"duplicate key {key!r}", line=lineno)
        try:
            values[key] = _parse_value(key, value)
        except ValueError as exc:
            raise ConfigError(f"bad value for {key}: {exc}", line=lineno) from None
    return RunConfig(**values).validate()


def serialize_config(cfg: RunConfig) -> str:
    return "".join(f"{name} = {_format_value(getattr(cfg, name))}\n" for name in _FIELDS)


def load_config(path) -> RunConfig:
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from None
    return parse_config(text)
