"""Run configuration: strict ``[section]`` / ``key = value`` files.

Every section maps onto a dataclass; keys are the dataclass field names
(``gamma`` for the bulk feed vector, ``D0_<substrate>`` and ``rho_<species>``
for the per-component maps of the precipitation model). Unknown keys and
sections are errors.
"""
from __future__ import annotations

import ast
import configparser
import dataclasses
import operator
import typing
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .kinetics import (SRB_SPECIES, SRB_SUBSTRATES, KineticsError, KineticsSRB,
                       KineticsWG, ReactorParams)
from .simulator import TimeStepConfig
from .transform import SRB, WG, ConfigError

# ---------------------------------------------------------------------------
# polynomial expressions
# ---------------------------------------------------------------------------

_BINOPS = {ast.Add: operator.add, ast.Sub: operator.sub, ast.Mult: operator.mul,
           ast.Div: operator.truediv, ast.Pow: operator.pow}


def _has_x(node):
    return any(isinstance(n, ast.Name) for n in ast.walk(node))


def _check_expr(node):
    if isinstance(node, ast.Expression):
        return _check_expr(node.body)
    if isinstance(node, ast.Constant) and isinstance(node.value, (int, float)) \
            and not isinstance(node.value, bool):
        return
    if isinstance(node, ast.Name) and node.id == "x":
        return
    if isinstance(node, ast.UnaryOp) and isinstance(node.op, (ast.UAdd, ast.USub)):
        return _check_expr(node.operand)
    if isinstance(node, ast.BinOp) and type(node.op) in _BINOPS:
        _check_expr(node.left)
        _check_expr(node.right)
        if isinstance(node.op, ast.Div) and _has_x(node.right):
            raise ConfigError("division by an expression in x is not a polynomial")
        if isinstance(node.op, ast.Pow):
            if _has_x(node.right):
                raise ConfigError("exponents must be constants")
            exp = _eval(node.right, 0.0)
            if exp < 0 or exp != int(exp):
                raise ConfigError("exponents must be nonnegative integers")
        return
    raise ConfigError(f"unsupported syntax {ast.dump(node)[:40]!r}")


def _eval(node, x):
    if isinstance(node, ast.Expression):
        return _eval(node.body, x)
    if isinstance(node, ast.Constant):
        return float(node.value)
    if isinstance(node, ast.Name):
        return x
    if isinstance(node, ast.UnaryOp):
        v = _eval(node.operand, x)
        return -v if isinstance(node.op, ast.USub) else v
    return _BINOPS[type(node.op)](_eval(node.left, x), _eval(node.right, x))


def parse_expression(text):
    """Validate a constant/polynomial expression in ``x``; returns a callable."""
    try:
        tree = ast.parse(str(text).strip(), mode="eval")
    except SyntaxError as exc:
        raise ConfigError(f"bad expression {text!r}: {exc.msg}") from exc
    _check_expr(tree)

    def f(x):
        x = np.asarray(x, dtype=float)
        return np.broadcast_to(np.asarray(_eval(tree, x), dtype=float), x.shape).copy()

    return f


# ---------------------------------------------------------------------------
# sections
# ---------------------------------------------------------------------------

EXPR = {"expr": True}


@dataclass
class RunSection:
    model: str = WG
    seed: int = 0
    out: str = "out"

    def __post_init__(self):
        if self.model not in (WG, SRB):
            raise ConfigError("model must be WG or SRB")


@dataclass
class GridSection:
    n: int = 201

    def __post_init__(self):
        if self.n < 5:
            raise ConfigError("n must be at least 5")


@dataclass
class InitialWG:
    X1: str = field(default="1", metadata=EXPR)
    X2: str = field(default="0", metadata=EXPR)
    X3: str = field(default="0", metadata=EXPR)
    C1: str = field(default="2", metadata=EXPR)
    C2: str = field(default="1", metadata=EXPR)
    C3: str = field(default="50", metadata=EXPR)
    Phi: tuple = (2.0, 1.0, 50.0)
    L0: float = 1.0
    from_steady: bool = False

    def __post_init__(self):
        if len(self.Phi) != 3:
            raise ConfigError("Phi needs 3 entries")
        if not self.L0 > 0:
            raise ConfigError("L0 must be positive")


@dataclass
class InitialSRB:
    XE: str = field(default="0.3", metadata=EXPR)
    XA: str = field(default="0.3", metadata=EXPR)
    XI: str = field(default="0.1", metadata=EXPR)
    XPr: str = field(default="0.0", metadata=EXPR)
    XPo: str = field(default="0.3", metadata=EXPR)
    SE: str = field(default="1.0", metadata=EXPR)
    SA: str = field(default="0.5", metadata=EXPR)
    SO: str = field(default="0.2", metadata=EXPR)
    SC: str = field(default="0.0", metadata=EXPR)
    SAn: str = field(default="1.0", metadata=EXPR)
    SCat: str = field(default="0.5", metadata=EXPR)
    Phi: tuple = (1.0, 0.5, 0.2, 0.0, 1.0, 0.5)
    L0: float = 1.0

    def __post_init__(self):
        if len(self.Phi) != 6:
            raise ConfigError("Phi needs 6 entries")
        if not self.L0 > 0:
            raise ConfigError("L0 must be positive")


@dataclass
class SteadySection:
    L_lo: float = 1.0
    L_hi: float = 4.0
    tol: float = 1e-10
    inner_tol: float = 1e-10
    eps: Optional[float] = None
    method: str = "bisect"

    def __post_init__(self):
        if not 0 < self.L_lo < self.L_hi:
            raise ConfigError("L_lo/L_hi must satisfy 0 < L_lo < L_hi")
        if not self.tol > 0 or not self.inner_tol > 0:
            raise ConfigError("tol and inner_tol must be positive")
        if self.method not in ("brent", "bisect"):
            raise ConfigError("method must be brent or bisect")


@dataclass
class StabilitySection:
    delta: float = 1e-2
    omega_min: float = 0.0
    omega_max: float = 10.0
    omega_count: int = 50
    anchor: float = 1.0
    L_star: float = 1.0
    XE: str = field(default="0.5", metadata=EXPR)
    XA: str = field(default="0.4", metadata=EXPR)
    f_Po: str = field(default="0.7", metadata=EXPR)
    printed_m55: bool = False

    def __post_init__(self):
        if not self.delta > 0:
            raise ConfigError("delta must be positive")
        if self.omega_count < 1 or self.omega_max < self.omega_min or self.omega_min < 0:
            raise ConfigError("omega grid must be nonempty and nonnegative")
        if not self.anchor > 0:
            raise ConfigError("anchor must be positive")
        if not self.L_star > 0:
            raise ConfigError("L_star must be positive")


@dataclass
class SweepSpec:
    param: str = ""
    values: tuple = ()
    range: tuple = ()
    command: str = "steady"

    def __post_init__(self):
        if self.command not in ("simulate", "steady", "stability"):
            raise ConfigError("command must be simulate, steady or stability")
        if self.range and (len(self.range) != 3 or self.range[2] < 1
                           or self.range[2] != int(self.range[2])):
            raise ConfigError("range must be lo, hi, count")

    def grid(self):
        if self.values and self.range:
            raise ConfigError("give either values or range, not both")
        if self.values:
            return [float(v) for v in self.values]
        if self.range:
            lo, hi, count = self.range
            return [float(v) for v in np.linspace(lo, hi, int(count))]
        raise ConfigError("values: sweep needs values or range")


@dataclass
class RunConfig:
    run: RunSection = field(default_factory=RunSection)
    kinetics: object = field(default_factory=KineticsWG)
    reactor: ReactorParams = field(default_factory=ReactorParams)
    grid: GridSection = field(default_factory=GridSection)
    time: TimeStepConfig = field(default_factory=TimeStepConfig)
    initial: object = field(default_factory=InitialWG)
    steady: SteadySection = field(default_factory=SteadySection)
    stability: StabilitySection = field(default_factory=StabilitySection)
    sweep: SweepSpec = field(default_factory=SweepSpec)

    @property
    def model(self):
        return self.run.model


def default_config(model=WG) -> RunConfig:
    if model == SRB:
        return RunConfig(run=RunSection(model=SRB), kinetics=KineticsSRB(),
                         initial=InitialSRB())
    return RunConfig()


SECTIONS = ("run", "kinetics", "reactor", "grid", "time", "initial", "steady",
            "stability", "sweep")

# ---------------------------------------------------------------------------
# (de)serialization
# ---------------------------------------------------------------------------

_KEY_ALIASES = {ReactorParams: {"gamma": "Gamma"}}


def _hints(cls):
    return typing.get_type_hints(cls)


def _format(value):
    if value is None:
        return "none"
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        return repr(value)
    if isinstance(value, tuple):
        return ", ".join(_format(float(v)) for v in value)
    return str(value)


def _coerce(key, text, hint, meta):
    text = text.strip()
    origin = typing.get_origin(hint)
    try:
        if origin is typing.Union:
            inner = [a for a in typing.get_args(hint) if a is not type(None)][0]
            return None if text.lower() == "none" else _coerce(key, text, inner, meta)
        if hint is bool:
            low = text.lower()
            if low in ("true", "yes", "1", "on"):
                return True
            if low in ("false", "no", "0", "off"):
                return False
            raise ValueError("expected true/false")
        if hint is int:
            return int(text)
        if hint is float:
            return float(text)
        if hint is tuple:
            if not text:
                return ()
            return tuple(float(v) for v in text.split(","))
        if meta.get("expr"):
            parse_expression(text)
        return text
    except ConfigError as exc:
        raise ConfigError(f"{key}: {exc}") from exc
    except ValueError as exc:
        raise ConfigError(f"{key}: cannot parse {text!r} ({exc})") from exc


def _build(section, cls, items, base):
    hints = _hints(cls)
    fields = {f.name: f for f in dataclasses.fields(cls)}
    aliases = _KEY_ALIASES.get(cls, {})
    values = {name: getattr(base, name) for name in fields}
    maps = {name: dict(values[name]) for name, f in fields.items()
            if hints[name] is dict}
    for key, text in items:
        name = aliases.get(key, key)
        if name in fields and hints[name] is not dict:
            values[name] = _coerce(key, text, hints[name], fields[name].metadata)
            continue
        prefix, _, sub = key.partition("_")
        if prefix in maps and sub in maps[prefix]:
            maps[prefix][sub] = _coerce(key, text, float, {})
            continue
        raise ConfigError(f"[{section}] unknown key {key!r}")
    values.update(maps)
    if cls is ReactorParams:
        gamma = values["Gamma"]
        if len(gamma) != 3 or any(g <= 0 for g in gamma):
            raise ConfigError("gamma: needs three positive entries")
    try:
        return cls(**values)
    except (KineticsError, ConfigError) as exc:
        raise ConfigError(f"[{section}] {exc}") from exc


def parse_text(text, source="<string>") -> RunConfig:
    parser = configparser.ConfigParser(interpolation=None, strict=True,
                                       inline_comment_prefixes=("#", ";"))
    parser.optionxform = str
    try:
        parser.read_string(text, source=source)
    except configparser.MissingSectionHeaderError as exc:
        raise ConfigError(f"{source}: line {exc.lineno}: key outside any section") from exc
    except configparser.ParsingError as exc:
        lineno = exc.errors[0][0] if exc.errors else "?"
        raise ConfigError(f"{source}: line {lineno}: syntax error") from exc
    except (configparser.DuplicateOptionError, configparser.DuplicateSectionError) as exc:
        raise ConfigError(f"{source}: line {exc.lineno}: {exc.message}") from exc
    for name in parser.sections():
        if name not in SECTIONS:
            raise ConfigError(f"unknown section [{name}]")
    run_items = parser.items("run") if parser.has_section("run") else []
    run = _build("run", RunSection, run_items, RunSection())
    cfg = default_config(run.model)
    cfg.run = run
    for name in SECTIONS[1:]:
        if not parser.has_section(name):
            continue
        base = getattr(cfg, name)
        setattr(cfg, name, _build(name, type(base), parser.items(name), base))
    return cfg


def parse_config(path) -> RunConfig:
    try:
        with open(path) as fh:
            text = fh.read()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    return parse_text(text, source=str(path))


def emit_config(cfg: RunConfig) -> str:
    """Full ``key = value`` listing that parses back to ``cfg``."""
    lines = []
    for name in SECTIONS:
        obj = getattr(cfg, name)
        cls = type(obj)
        inverse = {v: k for k, v in _KEY_ALIASES.get(cls, {}).items()}
        lines.append(f"[{name}]")
        for f in dataclasses.fields(obj):
            value = getattr(obj, f.name)
            if isinstance(value, dict):
                for sub, v in value.items():
                    lines.append(f"{f.name}_{sub} = {_format(float(v))}")
                continue
            lines.append(f"{inverse.get(f.name, f.name)} = {_format(value)}")
        lines.append("")
    return "\n".join(lines)


def override(cfg: RunConfig, path, value) -> RunConfig:
    """Copy of ``cfg`` with the dotted key ``section.key`` set to ``value``."""
    section, _, key = path.partition(".")
    if section not in SECTIONS or not key:
        raise ConfigError(f"param: cannot resolve {path!r}")
    obj = getattr(cfg, section)
    items = [(key, _format(value) if not isinstance(value, str) else value)]
    new = dataclasses.replace(cfg)
    setattr(new, section, _build(section, type(obj), items, obj))
    return new


__all__ = ["RunConfig", "SweepSpec", "parse_config", "parse_text", "emit_config",
           "default_config", "override", "parse_expression", "SRB_SPECIES",
           "SRB_SUBSTRATES"]
