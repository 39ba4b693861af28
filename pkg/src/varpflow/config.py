"""INI run configuration.

Sections: ``[run]`` (mode, out, seed), ``[model]``, ``[solver]``, ``[data]``,
``[probes]``, ``[holefill]``, ``[mms]``, ``[audit]``.  Every key is optional
except those a mode needs; see the README for the full list.
"""
from __future__ import annotations

import configparser
import os
from dataclasses import dataclass, field

from .constitutive import Coefficient, ConstitutiveModel, ExponentFunction, SampleSpec
from .diagnostics import ProbeSpec
from .solver import SolverConfig

MODES = ("solve", "mms", "audit", "holefill", "probe")


class ConfigError(ValueError):
    pass


def _floats(text: str) -> list[float]:
    return [float(t) for t in text.replace(",", " ").split()]


@dataclass
class RunConfig:
    mode: str
    out: str = "out"
    seed: int = 0
    model: ConstitutiveModel = field(default_factory=ConstitutiveModel.canonical)
    solver: SolverConfig = field(default_factory=SolverConfig)
    truncation: bool = True
    data_source: str = "manufactured"
    f_path: str | None = None
    g_path: str | None = None
    r: float = 1.0
    probes: ProbeSpec = field(default_factory=ProbeSpec)
    delta: float = 1.0
    nu: float | None = None
    mu_floor: float = 1.0
    mu_grid: tuple = (0.25, 0.5, 1.0)
    mms_levels: tuple = (16, 32, 64)
    audit_A: float = 4.0
    audit_samples: SampleSpec = field(default_factory=SampleSpec)
    holefill: configparser.SectionProxy | None = None
    path: str | None = None


def model_from_section(sec) -> ConstitutiveModel:
    kind = sec.get("exponent", "tanh")
    if kind == "tanh":
        exp = ExponentFunction.tanh(sec.getfloat("a", 0.4), sec.getfloat("b", 1.0))
    elif kind == "constant":
        exp = ExponentFunction.constant(sec.getfloat("p", 2.0))
    elif kind == "quadratic":
        exp = ExponentFunction.quadratic(sec.getfloat("a", 1.0), sec.getfloat("p_plus", 2.9),
                                         sec.getfloat("lipschitz", 1.0))
    else:
        raise ConfigError(f"[model] exponent must be tanh, constant or quadratic, got {kind!r}")
    scale = sec.getfloat("gamma_scale", 1.0)
    gamma = Coefficient.rational(scale) if scale > 0 else Coefficient.zero()
    return ConstitutiveModel(exp, gamma, sec.getfloat("K1", 0.5), sec.getfloat("K2", 1.0))


def load_config(path, mode: str | None = None) -> RunConfig:
    """Parse ``path``; ``mode`` overrides ``[run] mode``."""
    if not os.path.isfile(path):
        raise ConfigError(f"config file not found: {path}")
    cp = configparser.ConfigParser(inline_comment_prefixes=("#", ";"))
    cp.optionxform = str
    try:
        cp.read(path)
    except configparser.Error as exc:
        raise ConfigError(f"cannot parse {path}: {exc}") from exc
    run = cp["run"] if cp.has_section("run") else {}
    mode = mode or run.get("mode")
    if mode not in MODES:
        raise ConfigError(f"mode must be one of {', '.join(MODES)}, got {mode!r}")
    base = os.path.dirname(os.path.abspath(path))
    try:
        cfg = RunConfig(mode=mode, out=run.get("out", "out"), seed=int(run.get("seed", 0)), path=path)
        if cp.has_section("model"):
            cfg.model = model_from_section(cp["model"])
        d = cp["data"] if cp.has_section("data") else {}
        cfg.data_source = d.get("source", "manufactured")
        if cfg.data_source not in ("zero", "manufactured", "file"):
            raise ConfigError(f"[data] source must be zero, manufactured or file, got {cfg.data_source!r}")
        cfg.r = float(d.get("r", 1.0))
        mean_c = float(d.get("mean_c", 0.3 if cfg.data_source == "manufactured" else 0.0))
        if cfg.data_source == "file":
            for key in ("f_path", "g_path"):
                if key not in d:
                    raise ConfigError(f"[data] source=file needs {key}")
                p = os.path.join(base, d[key])
                if not os.path.isfile(p):
                    raise ConfigError(f"[data] {key} does not exist: {p}")
                setattr(cfg, key, p)
        s = cp["solver"] if cp.has_section("solver") else {}
        kw = {"mean_c": mean_c}
        for key, conv in (("n_modes", int), ("n_basis", int), ("A", float), ("relaxation", float),
                          ("tol_residual", float), ("max_picard", int), ("A_margin", float),
                          ("A_growth", float), ("A_max", float), ("linear_rtol", float)):
            if key in s:
                kw[key] = conv(s[key])
        cfg.solver = SolverConfig(**kw)
        cfg.truncation = str(s.get("truncation_loop", "yes")).lower() in ("1", "yes", "true", "on")
        pr = cp["probes"] if cp.has_section("probes") else {}
        cfg.probes = ProbeSpec(int(pr.get("per_side", 8)), float(pr.get("R0", 0.125)),
                               int(pr.get("levels", 5)), int(pr.get("fine_modes", 512)))
        cfg.delta = float(pr.get("delta", 1.0))
        cfg.nu = float(pr["nu"]) if "nu" in pr else None
        cfg.mu_floor = float(pr.get("mu_floor", 1.0))
        if "mu_grid" in pr:
            cfg.mu_grid = tuple(_floats(pr["mu_grid"]))
        if cp.has_section("mms"):
            cfg.mms_levels = tuple(int(x) for x in _floats(cp["mms"].get("levels", "16 32 64")))
        if cp.has_section("audit"):
            a = cp["audit"]
            cfg.audit_A = float(a.get("A", 4.0))
            cfg.audit_samples = SampleSpec(n_samples=int(a.get("n_samples", 4000)),
                                           c_range=tuple(_floats(a.get("c_range", "-4 4"))),
                                           seed=int(a.get("seed", cfg.seed)))
        if cp.has_section("holefill"):
            cfg.holefill = cp["holefill"]
    except (KeyError, ValueError) as exc:
        if isinstance(exc, ConfigError):
            raise
        raise ConfigError(str(exc)) from exc
    if mode == "holefill" and cfg.holefill is None:
        raise ConfigError("mode holefill needs a [holefill] section")
    return cfg
