"""Run configuration: flat ``key = value`` text documents.

Blank lines and ``#`` comments are ignored.  Unknown keys and out-of-range
values raise ConfigError naming the offending key.  render_config is the
exact inverse of parse_config, so configurations round-trip byte-stably
through the run_meta file.
"""

from __future__ import annotations

from dataclasses import dataclass, fields

import numpy as np

from .ensemble import EnsembleConfig
from .hierarchy import MODES, HierarchyParams
from .operators import SIGMA_MINUS, SIGMA_X, SIGMA_Z
from .trajectory import ModelSpec

COUPLING_MODES = ("sigma_x", "sigma_minus")
EQUATIONS = ("nonlinear", "linear")


class ConfigError(ValueError):
    """Invalid configuration document."""


@dataclass(frozen=True)
class RunConfig:
    """Every knob of a run, with the published defaults."""

    omega: float = 1.0
    gamma: float = 0.2
    gamma_Gamma: float = 0.2
    coupling_mode: str = "sigma_x"
    hierarchy_mode: str = "full"
    n_max: int = 100
    eps_thres: float = 1e-8
    eps_tol: float = 1e-4
    dt: float = 0.02
    t_final: float = 12.0
    n_traj: int = 8000
    master_seed: int = 0
    threads: int = 0
    output_stride: int = 1
    n_report: int = 12
    equation: str = "nonlinear"
    nq_hist_include_saturated: bool = False
    error_estimates: bool = False
    psi0: tuple = (1 + 0j, 0j)
    label: str = ""
    output_dir: str = "out"


def _parse_bool(key, raw):
    low = raw.strip().lower()
    if low in ("true", "1", "yes"):
        return True
    if low in ("false", "0", "no"):
        return False
    raise ConfigError(f"key '{key}': expected a boolean (true/false), got {raw!r}")


def _parse_psi0(key, raw):
    parts = [p.strip() for p in raw.split(",")]
    if len(parts) != 2:
        raise ConfigError(f"key '{key}': expected two comma-separated amplitudes, got {raw!r}")
    try:
        return tuple(complex(p) for p in parts)
    except ValueError as exc:
        raise ConfigError(f"key '{key}': {exc}") from exc


def _typed_parser(key, typ):
    def parse(raw):
        try:
            if typ is float:
                return float(raw)
            if typ is int:
                return int(raw)
            return raw
        except ValueError as exc:
            raise ConfigError(f"key '{key}': expected {typ.__name__}, got {raw!r}") from exc

    return parse


_PARSERS = {}
for _f in fields(RunConfig):
    if _f.type == "bool" or isinstance(_f.default, bool):
        _PARSERS[_f.name] = (lambda name: lambda raw: _parse_bool(name, raw))(_f.name)
    elif _f.name == "psi0":
        _PARSERS[_f.name] = lambda raw: _parse_psi0("psi0", raw)
    else:
        _PARSERS[_f.name] = _typed_parser(_f.name, type(_f.default))
del _f


def parse_config(text: str) -> RunConfig:
    """Parse and validate a configuration document.

    An empty document yields the default (paper-scale) configuration.
    """
    values = {}
    for lineno, line in enumerate(text.splitlines(), start=1):
        body = line.split("#", 1)[0].strip()
        if not body:
            continue
        if "=" not in body:
            raise ConfigError(f"line {lineno}: expected 'key = value', got {line.strip()!r}")
        key, raw = (part.strip() for part in body.split("=", 1))
        if key not in _PARSERS:
            raise ConfigError(f"line {lineno}: unknown configuration key '{key}'")
        if key in values:
            raise ConfigError(f"line {lineno}: duplicate key '{key}'")
        values[key] = _PARSERS[key](raw)
    cfg = RunConfig(**values)
    validate_config(cfg)
    return cfg


def validate_config(cfg: RunConfig) -> None:
    """Range and consistency checks; raises ConfigError naming the key."""

    def need(cond, key, requirement, value):
        if not cond:
            raise ConfigError(f"key '{key}' out of range: must be {requirement}, got {value}")

    need(cfg.gamma_Gamma >= 0, "gamma_Gamma", ">= 0", cfg.gamma_Gamma)
    if cfg.gamma_Gamma > 0:
        need(cfg.gamma > 0, "gamma", "> 0 for a coupled bath (gamma_Gamma > 0)", cfg.gamma)
    need(cfg.dt > 0, "dt", "> 0", cfg.dt)
    need(cfg.t_final > 0, "t_final", "> 0", cfg.t_final)
    n_steps = round(cfg.t_final / cfg.dt)
    need(
        n_steps >= 1 and abs(n_steps * cfg.dt - cfg.t_final) <= 1e-9 * max(1.0, cfg.t_final),
        "t_final",
        "a positive multiple of dt",
        cfg.t_final,
    )
    need(cfg.n_max >= 0, "n_max", ">= 0", cfg.n_max)
    need(0 <= cfg.eps_thres < cfg.eps_tol, "eps_thres", "in [0, eps_tol)", cfg.eps_thres)
    need(cfg.n_traj >= 1, "n_traj", ">= 1", cfg.n_traj)
    need(0 <= cfg.master_seed < 2**64, "master_seed", "a 64-bit unsigned integer", cfg.master_seed)
    need(cfg.threads >= 0, "threads", ">= 0 (0 = auto)", cfg.threads)
    need(cfg.output_stride >= 1, "output_stride", ">= 1", cfg.output_stride)
    need(cfg.n_report >= 0, "n_report", ">= 0", cfg.n_report)
    if cfg.coupling_mode not in COUPLING_MODES:
        raise ConfigError(f"key 'coupling_mode' out of range: must be one of {COUPLING_MODES}, got {cfg.coupling_mode!r}")
    if cfg.hierarchy_mode not in MODES:
        raise ConfigError(f"key 'hierarchy_mode' out of range: must be one of {MODES}, got {cfg.hierarchy_mode!r}")
    if cfg.equation not in EQUATIONS:
        raise ConfigError(f"key 'equation' out of range: must be one of {EQUATIONS}, got {cfg.equation!r}")
    if len(cfg.psi0) != 2:
        raise ConfigError(f"key 'psi0' out of range: expected two amplitudes, got {len(cfg.psi0)}")
    norm = float(np.linalg.norm(np.asarray(cfg.psi0, dtype=complex)))
    if abs(norm - 1.0) > 1e-9:
        raise ConfigError(f"key 'psi0' out of range: must be normalized, got norm {norm}")


def render_config(cfg: RunConfig) -> str:
    """Serialize so that parse_config(render_config(cfg)) == cfg."""
    lines = []
    for f in fields(RunConfig):
        value = getattr(cfg, f.name)
        if isinstance(value, bool):
            text = "true" if value else "false"
        elif f.name == "psi0":
            text = ",".join(repr(component) for component in value)
        else:
            text = repr(value) if isinstance(value, float) else str(value)
        lines.append(f"{f.name} = {text}")
    return "\n".join(lines) + "\n"


def to_ensemble_config(cfg: RunConfig) -> EnsembleConfig:
    """Materialize operators and nested parameter sets from a RunConfig."""
    coupling = SIGMA_X if cfg.coupling_mode == "sigma_x" else SIGMA_MINUS
    model = ModelSpec(
        omega=cfg.omega,
        H_sys=0.5 * cfg.omega * SIGMA_Z,
        L=coupling,
        psi0=np.asarray(cfg.psi0, dtype=complex),
    )
    hier = HierarchyParams(
        n_max=cfg.n_max,
        eps_thres=cfg.eps_thres,
        eps_tol=cfg.eps_tol,
        mode=cfg.hierarchy_mode,
    )
    return EnsembleConfig(
        model=model,
        gamma=cfg.gamma,
        gamma_Gamma=cfg.gamma_Gamma,
        hier=hier,
        dt=cfg.dt,
        t_final=cfg.t_final,
        n_traj=cfg.n_traj,
        master_seed=cfg.master_seed,
        threads=cfg.threads,
        output_stride=cfg.output_stride,
        n_report=cfg.n_report,
        equation=cfg.equation,
        nq_hist_include_saturated=cfg.nq_hist_include_saturated,
    )
