"""Run configuration: a nested YAML document validated into ``RunConfig``.

Schema (every key optional except ``experiment``)::

    experiment: energy | long-time | ensemble | compare-fdm | det-converge | strong-converge
    seed: 20140101
    threads: 1
    paper_scale: false
    grid:     {level: 4}
    gamma: 10
    noise:    {lam: 0.5, lam_sweep: [0, 0.5, 1, 5], modes: 200, modes_sweep: [1, 4, 8]}
    time:     {dt: 0.005, T: 20, dt_list: [...], dt_ref: 0.00048828125}
    solver:   {fp_tol: 1.0e-13, fp_max_iters: 200, fdm_order: 2}
    ensemble: {trajectories: 20, bins: 30}
    output:   {dir: out, log_level: INFO}
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

import yaml

from .experiments import KINDS, ExperimentPlan


class ConfigError(ValueError):
    """Invalid configuration; the message names the offending key."""


# per-experiment defaults on top of ExperimentPlan's
KIND_DEFAULTS = {
    "energy": dict(T=20.0, lam=0.5),
    "long-time": dict(T=200.0, lam=1.0),
    "ensemble": dict(T=5.0, lam=0.5),
    "compare-fdm": dict(T=10.0, lam=math.sqrt(2.0), dt=1.0 / 64),
    "det-converge": dict(T=0.1, lam=0.0),
    "strong-converge": dict(T=0.1, lam=math.sqrt(2.0)),
}

PAPER_SCALE = dict(level=5, trajectories=100)

# (section, key) -> (plan field, type)
_SCHEMA = {
    (None, "experiment"): ("kind", str),
    (None, "seed"): ("seed", int),
    (None, "threads"): ("threads", int),
    (None, "gamma"): ("gamma", int),
    ("grid", "level"): ("level", int),
    ("noise", "lam"): ("lam", float),
    ("noise", "lam_sweep"): ("lam_sweep", (float,)),
    ("noise", "modes"): ("modes", int),
    ("noise", "modes_sweep"): ("modes_sweep", (int,)),
    ("time", "dt"): ("dt", float),
    ("time", "T"): ("T", float),
    ("time", "dt_list"): ("dt_list", (float,)),
    ("time", "dt_ref"): ("dt_ref", float),
    ("solver", "fp_tol"): ("fp_tol", float),
    ("solver", "fp_max_iters"): ("fp_max_iters", int),
    ("solver", "fdm_order"): ("fdm_order", int),
    ("ensemble", "trajectories"): ("trajectories", int),
    ("ensemble", "bins"): ("bins", int),
}
_IO_KEYS = {(None, "paper_scale"): bool, ("output", "dir"): str, ("output", "log_level"): str}
_SECTIONS = {s for s, _ in (*_SCHEMA, *_IO_KEYS) if s}
_LOG_LEVELS = ("DEBUG", "INFO", "WARNING", "ERROR")


@dataclass(frozen=True)
class RunConfig:
    plan: ExperimentPlan
    out_dir: str = "out"
    log_level: str = "INFO"
    paper_scale: bool = False

    @property
    def threads(self) -> int:
        return self.plan.threads


def _coerce(key: str, value, typ):
    if isinstance(typ, tuple):
        if not isinstance(value, (list, tuple)) or not value:
            raise ConfigError(f"{key}: expected a non-empty list")
        return tuple(_coerce(f"{key}[{i}]", v, typ[0]) for i, v in enumerate(value))
    if typ is bool:
        if not isinstance(value, bool):
            raise ConfigError(f"{key}: expected true/false, got {value!r}")
        return value
    if typ is int:
        if isinstance(value, bool) or not isinstance(value, int):
            raise ConfigError(f"{key}: expected an integer, got {value!r}")
        return value
    if typ is float:
        if isinstance(value, bool) or not isinstance(value, (int, float)):
            raise ConfigError(f"{key}: expected a number, got {value!r}")
        return float(value)
    if not isinstance(value, str):
        raise ConfigError(f"{key}: expected a string, got {value!r}")
    return value


def _validate(plan: ExperimentPlan) -> None:
    def bad(key, msg):
        raise ConfigError(f"{key}: {msg}")

    if plan.level < 1:
        bad("grid.level", "must be >= 1")
    if plan.gamma < 4 or plan.gamma % 2:
        bad("gamma", "must be an even integer >= 4")
    if not (plan.lam >= 0 and math.isfinite(plan.lam)):
        bad("noise.lam", "must be a finite number >= 0")
    if any(not (lam >= 0) for lam in plan.lam_sweep):
        bad("noise.lam_sweep", "entries must be >= 0")
    if plan.modes < 1:
        bad("noise.modes", "must be >= 1")
    if any(m < 1 for m in plan.modes_sweep):
        bad("noise.modes_sweep", "entries must be >= 1")
    if not plan.dt > 0:
        bad("time.dt", f"must be positive, got {plan.dt}")
    if not plan.T >= 0:
        bad("time.T", f"must be non-negative, got {plan.T}")
    if any(not d > 0 for d in plan.dt_list):
        bad("time.dt_list", "entries must be positive")
    if not plan.dt_ref > 0:
        bad("time.dt_ref", "must be positive")
    if plan.kind in ("det-converge", "strong-converge"):
        for d in plan.dt_list:
            r = d / plan.dt_ref
            if r < 1 or abs(r - round(r)) > 1e-9:
                bad("time.dt_ref", f"must be the finest step and divide every dt_list entry (fails for {d})")
    elif plan.T > 0 and abs(plan.T / plan.dt - round(plan.T / plan.dt)) > 1e-9 * max(1.0, plan.T / plan.dt):
        bad("time.T", f"must be an integer multiple of time.dt={plan.dt}")
    if not plan.fp_tol > 0:
        bad("solver.fp_tol", "must be positive")
    if plan.fp_max_iters < 1:
        bad("solver.fp_max_iters", "must be >= 1")
    if plan.fdm_order < 2 or plan.fdm_order % 2:
        bad("solver.fdm_order", "must be an even integer >= 2")
    if plan.trajectories < 1:
        bad("ensemble.trajectories", "must be >= 1")
    if plan.kind == "strong-converge" and plan.trajectories < 2:
        bad("ensemble.trajectories", "strong convergence needs at least 2")
    if plan.kind == "strong-converge" and not plan.lam > 0:
        bad("noise.lam", "strong convergence needs lam > 0")
    if plan.bins < 1:
        bad("ensemble.bins", "must be >= 1")
    if plan.threads < 1:
        bad("threads", "must be >= 1")


def config_from_dict(doc: dict) -> RunConfig:
    if not isinstance(doc, dict):
        raise ConfigError("config: top level must be a mapping")
    flat: dict = {}
    for key, value in doc.items():
        if key in _SECTIONS:
            if not isinstance(value, dict):
                raise ConfigError(f"{key}: expected a mapping")
            for sub, v in value.items():
                flat[(key, sub)] = v
        else:
            flat[(None, key)] = value

    if (None, "experiment") not in flat:
        raise ConfigError("experiment: required key missing")
    plan_kw, io_kw = {}, {}
    for (section, key), value in flat.items():
        dotted = f"{section}.{key}" if section else key
        if (section, key) in _SCHEMA:
            name, typ = _SCHEMA[(section, key)]
            plan_kw[name] = _coerce(dotted, value, typ)
        elif (section, key) in _IO_KEYS:
            io_kw[key] = _coerce(dotted, value, _IO_KEYS[(section, key)])
        else:
            raise ConfigError(f"{dotted}: unknown key")

    kind = plan_kw["kind"]
    if kind not in KINDS:
        raise ConfigError(f"experiment: unknown kind {kind!r}; choose from {', '.join(KINDS)}")
    merged = {**KIND_DEFAULTS[kind], **plan_kw}
    if io_kw.get("paper_scale"):
        for k, v in PAPER_SCALE.items():
            merged.setdefault(k, v)
    plan = ExperimentPlan(**merged)
    _validate(plan)
    level = io_kw.get("log_level", "INFO").upper()
    if level not in _LOG_LEVELS:
        raise ConfigError(f"output.log_level: must be one of {', '.join(_LOG_LEVELS)}")
    return RunConfig(plan, io_kw.get("dir", "out"), level, io_kw.get("paper_scale", False))


def parse_config(text: str) -> RunConfig:
    """Parse and validate a YAML config document; defaults are filled in."""
    try:
        doc = yaml.safe_load(text)
    except yaml.YAMLError as exc:
        raise ConfigError(f"config: not valid YAML ({exc})") from None
    return config_from_dict(doc if doc is not None else {})


def config_to_dict(cfg: RunConfig) -> dict:
    """Fully explicit nested document for ``cfg``."""
    p = cfg.plan
    doc: dict = {}
    for (section, key), (name, typ) in _SCHEMA.items():
        value = getattr(p, name)
        if isinstance(typ, tuple):
            value = list(value)
        if section is None:
            doc[key] = value
        else:
            doc.setdefault(section, {})[key] = value
    doc["paper_scale"] = cfg.paper_scale
    doc.setdefault("output", {}).update(dir=cfg.out_dir, log_level=cfg.log_level)
    return doc


def emit_config(cfg: RunConfig) -> str:
    return yaml.safe_dump(config_to_dict(cfg), sort_keys=True)


def with_overrides(cfg: RunConfig, *, seed=None, threads=None, out_dir=None, paper_scale=False) -> RunConfig:
    plan = cfg.plan
    if paper_scale:
        plan = replace(plan, **PAPER_SCALE)
    if seed is not None:
        plan = replace(plan, seed=seed)
    if threads is not None:
        if threads < 1:
            raise ConfigError("threads: must be >= 1")
        plan = replace(plan, threads=threads)
    return replace(
        cfg,
        plan=plan,
        out_dir=cfg.out_dir if out_dir is None else str(out_dir),
        paper_scale=cfg.paper_scale or paper_scale,
    )

