"""Experiment configuration: INI-style ``key = value`` lines under ``[section]`` headers."""
from __future__ import annotations

import configparser
import hashlib
import json
import re
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Optional

from .gas import GasLaw, ShockError, solve_rankine_hugoniot
from .profile import Viscosity, default_half_length
from .solver import Grid3, PerturbationSpec, SolverConfig
from .weight import ConfigurationError

MODES = ("simulate", "profile", "verify", "poincare", "accept")


class ConfigError(ValueError):
    def __init__(self, msg, path=None, line=None):
        where = f"{path}:{line}: " if path and line else (f"{path}: " if path else "")
        super().__init__(where + msg)
        self.path = path
        self.line = line


@dataclass(frozen=True)
class GasSpec:
    gamma: float = 2.0
    v_minus: float = 1.0
    v_plus: float = 1.1
    u1_plus: float = 0.0


@dataclass(frozen=True)
class ViscositySpec:
    mu: float = 1.0
    lam: float = 0.0


@dataclass(frozen=True)
class GridSpec:
    L: float = 100.0
    N1: int = 1024
    N2: int = 16
    N3: int = 16


@dataclass(frozen=True)
class PerturbationCfg:
    epsilon: float = 0.01
    shape: str = "gaussian"
    seed: int = 0


@dataclass(frozen=True)
class TimeSpec:
    cfl: float = 1.2
    t_end: float = 50.0
    output_interval: float = 0.1
    snapshot_interval: float = 0.0


@dataclass(frozen=True)
class ExperimentConfig:
    mode: str = "simulate"
    gas: GasSpec = field(default_factory=GasSpec)
    viscosity: ViscositySpec = field(default_factory=ViscositySpec)
    grid: GridSpec = field(default_factory=GridSpec)
    perturbation: PerturbationCfg = field(default_factory=PerturbationCfg)
    time: TimeSpec = field(default_factory=TimeSpec)

    def to_dict(self):
        return asdict(self)

    def digest(self) -> str:
        blob = json.dumps(self.to_dict(), sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(blob.encode()).hexdigest()[:12]

    # builders for the numerical objects
    def law(self) -> GasLaw:
        return GasLaw(self.gas.gamma)

    def shock(self):
        return solve_rankine_hugoniot(self.gas.v_minus, self.gas.v_plus, self.gas.u1_plus, self.law())

    def visc(self) -> Viscosity:
        return Viscosity(self.viscosity.mu, self.viscosity.lam)

    def grid3(self) -> Grid3:
        g = self.grid
        return Grid3(g.L, g.N1, g.N2, g.N3)

    def solver_config(self) -> SolverConfig:
        p = self.perturbation
        return SolverConfig(self.viscosity.mu, self.viscosity.lam, self.time.cfl, self.time.t_end,
                            PerturbationSpec(p.epsilon, p.shape, p.seed))


_SECTIONS = {
    "gas": GasSpec, "viscosity": ViscositySpec, "grid": GridSpec,
    "perturbation": PerturbationCfg, "time": TimeSpec,
}
_ALIASES = {("viscosity", "lambda"): "lam"}


def _line_of(text: str, section: Optional[str], key: Optional[str] = None) -> Optional[int]:
    current = None
    for i, raw in enumerate(text.splitlines(), 1):
        s = raw.strip()
        m = re.match(r"\[(.+)\]$", s)
        if m:
            current = m.group(1).strip().lower()
            if key is None and current == section:
                return i
            continue
        if key is not None and current == section and re.match(rf"{re.escape(key)}\s*[=:]", s, re.IGNORECASE):
            return i
    return None


def _convert(text, path, section, key, raw, typ):
    try:
        if typ is int:
            val = float(raw)
            if val != int(val):
                raise ValueError
            return int(val)
        if typ is float:
            return float(raw)
        return raw.strip()
    except ValueError:
        raise ConfigError(f"[{section}] {key} = {raw!r} is not a valid {typ.__name__}", path,
                          _line_of(text, section, key)) from None


def parse_config(text: str, path: Optional[str] = None, mode: Optional[str] = None) -> ExperimentConfig:
    cp = configparser.ConfigParser(inline_comment_prefixes=("#", ";"), interpolation=None)
    cp.optionxform = str
    try:
        cp.read_string(text, source=path or "<config>")
    except configparser.MissingSectionHeaderError as exc:
        raise ConfigError(f"expected a [section] header before {exc.line.strip()!r}", path, exc.lineno) from None
    except configparser.ParsingError as exc:
        lineno = exc.errors[0][0] if exc.errors else None
        raise ConfigError(f"cannot parse line: {exc.errors[0][1].strip() if exc.errors else exc}", path, lineno) from None
    except configparser.Error as exc:
        raise ConfigError(str(exc).splitlines()[0], path, getattr(exc, "lineno", None)) from None

    parts = {}
    cfg_mode = mode
    for section in cp.sections():
        sec = section.lower()
        if sec == "run":
            for key, raw in cp.items(section):
                if key.lower() == "mode":
                    cfg_mode = cfg_mode or raw.strip()
                else:
                    raise ConfigError(f"unknown key {key!r} in [run]", path, _line_of(text, sec, key))
            continue
        if sec not in _SECTIONS:
            raise ConfigError(f"unknown section [{section}]", path, _line_of(text, sec))
        cls = _SECTIONS[sec]
        types = {f.name: f.type for f in cls.__dataclass_fields__.values()}
        kw = {}
        for key, raw in cp.items(section):
            name = _ALIASES.get((sec, key.lower()), key)
            if name not in types:
                raise ConfigError(f"unknown key {key!r} in [{section}]", path, _line_of(text, sec, key))
            typ = {"float": float, "int": int, "str": str}[types[name]] if isinstance(types[name], str) else types[name]
            kw[name] = _convert(text, path, sec, key, raw, typ)
        parts[sec] = cls(**kw)
    cfg_mode = cfg_mode or "simulate"
    if cfg_mode not in MODES:
        raise ConfigError(f"unknown mode {cfg_mode!r}; choose from {', '.join(MODES)}", path,
                          _line_of(text, "run", "mode"))
    cfg = ExperimentConfig(mode=cfg_mode, **parts)
    validate(cfg, text, path)
    return cfg


def validate(cfg: ExperimentConfig, text: str = "", path: Optional[str] = None):
    """Re-run every module precondition so bad input fails before any work."""
    def fail(msg, section, key=None):
        raise ConfigError(msg, path, _line_of(text, section, key) if text else None)

    try:
        cfg.law()
    except ValueError as exc:
        fail(str(exc), "gas", "gamma")
    try:
        cfg.shock()
    except (ShockError, ValueError) as exc:
        fail(str(exc), "gas", "v_plus")
    try:
        cfg.visc()
    except ValueError as exc:
        fail(str(exc), "viscosity", "mu")
    try:
        cfg.grid3()
    except (ConfigurationError, ValueError) as exc:
        fail(str(exc), "grid")
    reach = default_half_length(cfg.shock()[1], cfg.visc())
    if cfg.grid.L > reach:
        fail(f"grid half-length L={cfg.grid.L:g} exceeds the tabulated profile range {reach:.6g}", "grid", "L")
    try:
        cfg.solver_config()
    except (ConfigurationError, ValueError) as exc:
        fail(str(exc), "time")
    t = cfg.time
    if not t.output_interval > 0:
        fail("output_interval must be positive", "time", "output_interval")
    n = t.t_end / t.output_interval
    if abs(n - round(n)) > 1e-9 * max(n, 1.0):
        fail("t_end must be a whole multiple of output_interval", "time", "output_interval")
    if t.snapshot_interval < 0:
        fail("snapshot_interval must be non-negative", "time", "snapshot_interval")


def load_config(path, mode: Optional[str] = None) -> ExperimentConfig:
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigError(f"cannot read config: {exc.strerror}", str(path)) from None
    return parse_config(text, str(path), mode)


def dump_config(cfg: ExperimentConfig) -> str:
    lines = [f"[run]\nmode = {cfg.mode}\n"]
    d = cfg.to_dict()
    for sec in _SECTIONS:
        lines.append(f"[{sec}]")
        for k, v in d[sec].items():
            key = "lambda" if (sec, k) == ("viscosity", "lam") else k
            lines.append(f"{key} = {v!r}" if isinstance(v, float) else f"{key} = {v}")
        lines.append("")
    return "\n".join(lines)
