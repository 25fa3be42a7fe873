"""Experiment configuration: an INI file with ``[experiment]``, ``[optimizer]``,
``[output]`` and ``[run]`` sections.

Example::

    [experiment]
    id = fig2-l5
    L = 5
    u_grid = 0, 1, 2, 4
    sectors = 2, 3
    weights = paper-default
    delta = 0.005
    trotter_steps = 4
    seed = 0

    [optimizer]
    tolerance = 1e-5

    [output]
    dir = results

Every key is optional except ``L``; unknown keys are rejected.
"""

from __future__ import annotations

import configparser
import dataclasses
import re
import warnings
from dataclasses import dataclass, field
from pathlib import Path

from .optim import OptimizerConfig
from .weights import WeightError, WeightVector, paper_default_weights


class ConfigError(ValueError):
    """Invalid configuration, located by section, key and (when known) line."""


@dataclass(frozen=True)
class ExperimentConfig:
    L: int
    experiment_id: str = "experiment"
    u_grid: tuple = (0.0, 1.0, 2.0, 4.0)
    sectors: tuple = (2, 3)
    weights: tuple | None = None  # None means the default ladder 0.5 - 0.5 m / L
    delta: float = 0.005
    trotter_steps: int = 4
    seed: int = 0
    basis: str = "bloch"
    objective: str = "sector"
    extraction: str = "fixed"
    degeneracy_tol: float = 1e-6
    gap_tol: float = 1e-3
    optimizer: OptimizerConfig = field(default_factory=OptimizerConfig)
    out_dir: str = "results"
    timing: bool = False
    jobs: int = 1
    strict: bool = False

    def __post_init__(self):
        if self.L < 2:
            raise ConfigError(f"[experiment] L: need at least 2 sites, got {self.L}")
        bad = [N for N in self.sectors if not 0 <= N <= self.L]
        if bad:
            raise ConfigError(f"[experiment] sectors: {bad} outside 0..{self.L}")
        if not self.delta > 0:
            raise ConfigError(f"[experiment] delta: must be positive, got {self.delta}")
        if self.trotter_steps < 1:
            raise ConfigError("[experiment] trotter_steps: must be at least 1")
        if self.weights is not None and len(self.weights) != self.L:
            raise ConfigError(f"[experiment] weights: expected {self.L} values, got {len(self.weights)}")
        for key, allowed in (("basis", ("bloch", "site")), ("objective", ("sector", "ensemble")),
                             ("extraction", ("fixed", "reoptimize"))):
            if getattr(self, key) not in allowed:
                raise ConfigError(f"[experiment] {key}: expected one of {allowed}, got {getattr(self, key)!r}")
        if self.jobs < 1:
            raise ConfigError("[run] jobs: must be at least 1")
        try:
            self.weight_vector()
            self.perturbed_weights()
        except WeightError as exc:
            raise ConfigError(f"[experiment] weights: {exc}") from exc

    def weight_vector(self) -> WeightVector:
        if self.weights is None:
            return paper_default_weights(self.L)
        with warnings.catch_warnings():
            warnings.simplefilter("ignore")
            return WeightVector(self.weights)

    def perturbed_weights(self) -> WeightVector:
        return self.weight_vector().shifted(self.delta)

    def replace(self, **changes) -> ExperimentConfig:
        return dataclasses.replace(self, **changes)

    def to_dict(self) -> dict:
        d = dataclasses.asdict(self)
        d["u_grid"] = list(self.u_grid)
        d["sectors"] = list(self.sectors)
        d["weights"] = list(self.weight_vector().ws)
        d["weights_source"] = "paper-default" if self.weights is None else "explicit"
        return d


_SCHEMA = {
    "experiment": {
        "id": ("experiment_id", str),
        "l": ("L", int),
        "u_grid": ("u_grid", "floats"),
        "sectors": ("sectors", "ints"),
        "weights": ("weights", "weights"),
        "delta": ("delta", float),
        "trotter_steps": ("trotter_steps", int),
        "seed": ("seed", int),
        "basis": ("basis", str),
        "objective": ("objective", str),
        "extraction": ("extraction", str),
        "degeneracy_tol": ("degeneracy_tol", float),
        "gap_tol": ("gap_tol", float),
    },
    "optimizer": {
        "tolerance": ("tolerance", float),
        "max_iterations": ("max_iterations", int),
        "initial_step": ("initial_step", float),
        "restarts": ("restarts", int),
        "restart_jitter": ("restart_jitter", float),
    },
    "output": {
        "dir": ("out_dir", str),
        "timing": ("timing", "bool"),
    },
    "run": {
        "jobs": ("jobs", int),
        "strict": ("strict", "bool"),
    },
}


def _line_of(text: str, section: str, key: str | None = None) -> int | None:
    current = None
    for no, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        m = re.match(r"\[([^\]]+)\]", line)
        if m:
            current = m.group(1).strip().lower()
            if key is None and current == section:
                return no
            continue
        if current == section and key is not None:
            k = re.split(r"[=:]", line, maxsplit=1)[0].strip().lower()
            if k == key:
                return no
    return None


def _where(text, section, key=None) -> str:
    line = _line_of(text, section, key)
    loc = f"[{section}]" + (f" {key}" if key else "")
    return f"{loc} (line {line})" if line else loc


def _list(raw: str) -> list[str]:
    return [x for x in re.split(r"[,\s]+", raw.strip()) if x]


def _convert(raw: str, kind):
    if kind == "floats":
        return tuple(float(x) for x in _list(raw))
    if kind == "ints":
        return tuple(int(x) for x in _list(raw))
    if kind == "weights":
        return None if raw.strip().lower() == "paper-default" else tuple(float(x) for x in _list(raw))
    if kind == "bool":
        v = raw.strip().lower()
        if v in ("1", "true", "yes", "on"):
            return True
        if v in ("0", "false", "no", "off"):
            return False
        raise ValueError(f"not a boolean: {raw!r}")
    return kind(raw.strip())


def parse_config(text: str) -> ExperimentConfig:
    parser = configparser.ConfigParser(interpolation=None, inline_comment_prefixes=(";", "#"))
    try:
        parser.read_string(text)
    except configparser.Error as exc:
        raise ConfigError(f"malformed config: {exc}") from exc
    values: dict = {}
    opt: dict = {}
    for section in parser.sections():
        sec = section.lower()
        if sec not in _SCHEMA:
            raise ConfigError(f"unknown section {_where(text, sec)}")
        for key, raw in parser.items(section):
            if key not in _SCHEMA[sec]:
                raise ConfigError(f"unknown key {_where(text, sec, key)}")
            name, kind = _SCHEMA[sec][key]
            try:
                value = _convert(raw, kind)
            except ValueError as exc:
                raise ConfigError(f"{_where(text, sec, key)}: {exc}") from exc
            (opt if sec == "optimizer" else values)[name] = value
    if "L" not in values:
        raise ConfigError("[experiment] L: required key missing")
    seed = values.get("seed", 0)
    try:
        values["optimizer"] = OptimizerConfig(seed=seed, **opt)
    except ValueError as exc:
        raise ConfigError(f"[optimizer]: {exc}") from exc
    try:
        return ExperimentConfig(**values)
    except ConfigError as exc:
        msg = str(exc)
        m = re.match(r"\[(\w+)\] (\w+):", msg)
        if m:
            line = _line_of(text, m.group(1), m.group(2).lower())
            if line:
                msg = f"{msg} (line {line})"
        raise ConfigError(msg) from exc


def load_config(path) -> ExperimentConfig:
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    return parse_config(text)


def with_overrides(cfg: ExperimentConfig, out=None, seed=None, jobs=None, strict=None) -> ExperimentConfig:
    """Apply command-line flags on top of file values."""
    changes = {}
    if out is not None:
        changes["out_dir"] = str(out)
    if seed is not None:
        changes["seed"] = seed
        changes["optimizer"] = dataclasses.replace(cfg.optimizer, seed=seed)
    if jobs is not None:
        changes["jobs"] = jobs
    if strict:
        changes["strict"] = True
    return cfg.replace(**changes) if changes else cfg
