"""Plain-text ``key = value`` run and convergence-study configurations."""

from __future__ import annotations

from dataclasses import dataclass, fields, replace
from pathlib import Path

from .errors import ConfigError
from .optimizer import MESH_POLICIES

PROBLEM_NAMES = ("advec1d", "burgers1d", "shuosher")
SCHEMES = ("dirk1", "dirk2", "dirk3")

# standard benchmark settings per problem (everything not listed falls back to RunConfig defaults)
PROBLEM_DEFAULTS = {
    "advec1d": dict(n_elements=20, p=4, q=1, scheme="dirk3", n_steps=25, t_final=0.25,
                    eps1=1e-6, eps2=1e-8),
    "burgers1d": dict(n_elements=20, p=4, q=1, scheme="dirk3", n_steps=20, t_final=1.0,
                      eps1=1e-6, eps2=1e-8),
    "shuosher": dict(n_elements=288, p=4, q=1, scheme="dirk3", n_steps=110, t_final=1.1,
                     eps1=1e-4, eps2=1e-8),
}


def _parse_bool(s: str) -> bool:
    t = s.strip().lower()
    if t in ("1", "true", "yes", "on"):
        return True
    if t in ("0", "false", "no", "off"):
        return False
    raise ValueError(f"not a boolean: {s!r}")


def _parse_int_list(s: str) -> tuple:
    return tuple(int(v) for v in s.replace(",", " ").split())


def _parse_str_list(s: str) -> tuple:
    return tuple(v.strip().lower() for v in s.replace(",", " ").split())


@dataclass(frozen=True)
class RunConfig:
    problem: str
    n_steps: int
    t_final: float
    n_elements: int = 20
    p: int = 4
    q: int = 1
    scheme: str = "dirk3"
    eps1: float = 1e-6
    eps2: float = 1e-8
    lm_gamma: float = 1e-2
    mesh_policy: str = "slaved"
    max_iters: int = 50
    output_dir: str = "output"
    record_every: int = 1
    reference: bool = True
    seed: int = 0

    def validate(self) -> "RunConfig":
        if self.problem not in PROBLEM_NAMES:
            raise ConfigError(f"unknown problem '{self.problem}'", key="problem")
        if self.scheme not in SCHEMES:
            raise ConfigError(f"unknown scheme '{self.scheme}'", key="scheme")
        if self.mesh_policy not in MESH_POLICIES:
            raise ConfigError(f"unknown mesh_policy '{self.mesh_policy}'", key="mesh_policy")
        for k in ("n_steps", "n_elements", "p", "q", "max_iters", "record_every"):
            if getattr(self, k) <= 0:
                raise ConfigError(f"{k} must be positive", key=k)
        for k in ("t_final", "eps1", "eps2", "lm_gamma"):
            if not getattr(self, k) > 0:
                raise ConfigError(f"{k} must be positive", key=k)
        return self


@dataclass(frozen=True)
class ConvergenceStudyConfig:
    step_counts: tuple
    problem: str = "advec1d"
    schemes: tuple = SCHEMES
    n_elements: int = 20
    p: int = 4
    q: int = 1
    t_final: float = 0.25
    eps1: float = 1e-10
    eps2: float = 1e-12
    lm_gamma: float = 1e-8
    mesh_policy: str = "slaved"
    max_iters: int = 50
    oracle_steps: int = 10000
    output_dir: str = "output"
    seed: int = 0

    def validate(self) -> "ConvergenceStudyConfig":
        if self.problem != "advec1d":
            raise ConfigError("convergence studies support problem = advec1d only", key="problem")
        bad = [s for s in self.schemes if s not in SCHEMES]
        if bad or not self.schemes:
            raise ConfigError(f"unknown schemes {bad}", key="schemes")
        n = self.step_counts
        if len(n) < 2:
            raise ConfigError("step_counts needs at least two entries", key="step_counts")
        if any(b <= a for a, b in zip(n, n[1:])) or n[0] <= 0:
            raise ConfigError("step_counts must be positive and strictly increasing", key="step_counts")
        for k in ("t_final", "eps1", "eps2", "lm_gamma"):
            if not getattr(self, k) > 0:
                raise ConfigError(f"{k} must be positive", key=k)
        if self.mesh_policy not in MESH_POLICIES:
            raise ConfigError(f"unknown mesh_policy '{self.mesh_policy}'", key="mesh_policy")
        return self


_CONVERTERS = {int: int, float: float, str: lambda s: s.strip(), bool: _parse_bool}


def _converter(cls, name):
    ftype = {f.name: f.type for f in fields(cls)}[name]
    if name == "step_counts":
        return _parse_int_list
    if name == "schemes":
        return _parse_str_list
    return _CONVERTERS[{"int": int, "float": float, "str": str, "bool": bool, "tuple": str}[ftype]]


def _parse_lines(text: str):
    """``(line_no, key, value)`` triples; blank lines and ``#`` comments skipped."""
    out = []
    for no, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"expected 'key = value', got {raw.strip()!r}", line=no)
        key, value = (s.strip() for s in line.split("=", 1))
        if not key:
            raise ConfigError("empty key", line=no)
        out.append((no, key, value))
    return out


def _build(cls, entries, required, defaults_for=None):
    names = {f.name for f in fields(cls)}
    values, seen = {}, {}
    for no, key, value in entries:
        if key not in names:
            raise ConfigError(f"unknown key '{key}'", line=no, key=key)
        if key in seen:
            raise ConfigError(f"duplicate key '{key}' (first set on line {seen[key]})", line=no, key=key)
        seen[key] = no
        try:
            values[key] = _converter(cls, key)(value)
        except ValueError as exc:
            raise ConfigError(f"bad value for '{key}': {exc}", line=no, key=key) from None
    if defaults_for is not None and values.get("problem") in PROBLEM_DEFAULTS:
        values = {**PROBLEM_DEFAULTS[values["problem"]], **values}
    for key in required:
        if key not in seen:
            raise ConfigError(f"missing required key '{key}'", key=key)
    return cls(**values).validate()


RUN_REQUIRED = ("problem", "n_steps", "t_final")


def parse_run_config(text: str, overrides=()) -> RunConfig:
    """Parse a run config; ``overrides`` are ``KEY=VALUE`` strings applied last."""
    entries = _parse_lines(text)
    entries = _apply_overrides(entries, overrides)
    return _build(RunConfig, entries, RUN_REQUIRED, defaults_for="problem")


def parse_study_config(text: str, overrides=()) -> ConvergenceStudyConfig:
    entries = _apply_overrides(_parse_lines(text), overrides)
    return _build(ConvergenceStudyConfig, entries, ("step_counts",))


def _apply_overrides(entries, overrides):
    entries = list(entries)
    for k, ov in enumerate(overrides, start=1):
        if "=" not in ov:
            raise ConfigError(f"override #{k} is not KEY=VALUE: {ov!r}")
        key, value = (s.strip() for s in ov.split("=", 1))
        entries = [e for e in entries if e[1] != key] + [(0, key, value)]
    return entries


def load_config(path, overrides=(), study: bool = False):
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc.strerror}") from None
    return (parse_study_config if study else parse_run_config)(text, overrides)


def dump_config(cfg) -> str:
    """Serialize to the same text format (round-trips through the parser)."""
    lines = []
    for f in fields(cfg):
        v = getattr(cfg, f.name)
        if isinstance(v, tuple):
            v = ", ".join(str(x) for x in v)
        elif isinstance(v, float):
            v = repr(v)
        elif isinstance(v, bool):
            v = "true" if v else "false"
        lines.append(f"{f.name} = {v}")
    return "\n".join(lines) + "\n"


def with_output_dir(cfg, output_dir):
    return cfg if output_dir is None else replace(cfg, output_dir=str(output_dir))
