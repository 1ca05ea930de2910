"""Run configuration: TOML file plus command-line overrides.

The file is layered under the flags: anything given on the command line wins.
Unknown keys anywhere in the file are rejected.  A run is based either on a
named preset or on a fully specified custom family (section ``[family]``).
"""
from __future__ import annotations

import sys
from dataclasses import dataclass, field
from pathlib import Path

from .analytic import (MmsFamily, SingleCellFamily, TwoCellFamily, build_mms,
                       build_single_cell, build_two_cell)
from .core import (Annulus2D, CellLattice3D, ConfigurationError,
                   HemispherePair3D, ModelParams)
from .presets import PRESET_NAMES, Preset, get_preset
from .signals import TimeSignal

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

__all__ = ["RunConfig", "load_config", "resolve_preset"]

_SCHEMA = {
    "preset": str,
    "schedule": {"rows": list, "t0": float, "t_end": float},
    "output": {"dir": str, "formats": list, "tag": str},
    "solver": {"exp3_boundary": str, "mode": str},
    "export": {"spacing": float, "times": list, "prefix": str},
    "family": {
        "kind": str, "v0": (float, list), "w0": float, "level": float,
        "amplitudes": list,
        "params": {"sigma_i": float, "sigma_e": float, "cm": float, "rm": float,
                   "cm_gap": float, "rm_gap": float, "v_rest": float, "w_rest": float},
        "geometry": {"r_core": float, "r_membrane": float, "r_outer": float,
                     "rho_core": float, "rho_membrane": float, "rho_outer": float,
                     "nx_cells": int, "ny_cells": int, "cell_dims": list,
                     "box_dims": list, "mms_periods": list},
        "coef_a": (dict, list),
        "coef_a2": (dict, list),
    },
}

_SIGNAL_KEYS = {"kind": str, "amplitude": float, "value": float,
                "omega": float, "rate": float}


def _check_keys(data: dict, schema: dict, path: str = ""):
    for key, value in data.items():
        where = f"{path}.{key}" if path else key
        if key not in schema:
            raise ConfigurationError(f"unknown configuration key {where!r}")
        spec = schema[key]
        if isinstance(spec, dict):
            if not isinstance(value, dict):
                raise ConfigurationError(f"configuration key {where!r} must be a table")
            _check_keys(value, spec, where)


@dataclass
class RunConfig:
    preset: str | None = None
    family: dict | None = None
    schedule_rows: list | None = None
    t0: float | None = None
    t_end: float | None = None
    output_dir: str = "reports"
    formats: tuple[str, ...] = ("csv", "md")
    tag: str | None = None
    exp3_boundary: str = "zero"
    solver_mode: str = "auto"
    export_spacing: float = 0.125
    export_times: tuple[float, ...] = (0.0, 0.5, 1.0)
    export_prefix: str = "mms"
    raw: dict = field(default_factory=dict)


def load_config(path) -> RunConfig:
    text = Path(path).read_bytes()
    try:
        data = tomllib.loads(text.decode())
    except tomllib.TOMLDecodeError as exc:
        raise ConfigurationError(f"cannot parse configuration file: {exc}") from exc
    _check_keys(data, _SCHEMA)
    cfg = RunConfig(raw=data)
    cfg.preset = data.get("preset")
    cfg.family = data.get("family")
    sched = data.get("schedule", {})
    if "rows" in sched:
        cfg.schedule_rows = [(float(c), int(n)) for c, n in sched["rows"]]
    cfg.t0 = sched.get("t0", cfg.t0)
    cfg.t_end = sched.get("t_end", cfg.t_end)
    out = data.get("output", {})
    cfg.output_dir = out.get("dir", cfg.output_dir)
    if "formats" in out:
        cfg.formats = tuple(out["formats"])
    cfg.tag = out.get("tag", cfg.tag)
    sol = data.get("solver", {})
    cfg.exp3_boundary = sol.get("exp3_boundary", cfg.exp3_boundary)
    cfg.solver_mode = sol.get("mode", cfg.solver_mode)
    exp = data.get("export", {})
    cfg.export_spacing = exp.get("spacing", cfg.export_spacing)
    if "times" in exp:
        cfg.export_times = tuple(float(t) for t in exp["times"])
    cfg.export_prefix = exp.get("prefix", cfg.export_prefix)
    return cfg


def _parse_signal(spec) -> TimeSignal:
    if isinstance(spec, list):
        total = TimeSignal.zero()
        for term in spec:
            total = total + _parse_signal(term)
        return total
    if not isinstance(spec, dict):
        raise ConfigurationError("a time signal must be a table or list of tables")
    _check_keys(spec, _SIGNAL_KEYS, "signal")
    kind = spec.get("kind")
    amp = float(spec.get("amplitude", spec.get("value", 0.0)))
    omega = float(spec.get("omega", 1.0))
    rate = float(spec.get("rate", 0.0))
    if kind == "constant":
        return TimeSignal.constant(amp)
    if kind == "sine":
        return TimeSignal.sine(amp, omega)
    if kind == "cosine":
        return TimeSignal.cosine(amp, omega)
    if kind == "exponential":
        return TimeSignal.exponential(amp, rate)
    if kind == "damped_cosine":
        return TimeSignal.damped_cosine(amp, rate, omega)
    raise ConfigurationError(f"unknown signal kind {kind!r}")


def _family_preset(fam: dict, cfg: RunConfig) -> Preset:
    kind = fam.get("kind")
    p = fam.get("params", {})
    if kind == "single_cell":
        geometry = Annulus2D(r_core=fam["geometry"]["r_core"],
                             r_membrane=fam["geometry"]["r_membrane"],
                             r_outer=fam["geometry"]["r_outer"])
        params = ModelParams.uniform(
            sigma_i=p.get("sigma_i", 1.0), sigma_e=p.get("sigma_e", 1.0),
            cells=[1], cm=p.get("cm", 1.0), rm=p.get("rm", 1.0),
            v_rest=p.get("v_rest", 0.0), w_rest=p.get("w_rest", 0.0))
        family = SingleCellFamily(params=params, geometry=geometry,
                                  coef_a=_parse_signal(fam["coef_a"]),
                                  coef_a2=_parse_signal(fam["coef_a2"]),
                                  v0=float(fam["v0"]))
        solution = build_single_cell(family)
        variables = ("u_e", "u_i1", "v1")
    elif kind == "two_cell":
        geometry = HemispherePair3D(rho_core=fam["geometry"]["rho_core"],
                                    rho_membrane=fam["geometry"]["rho_membrane"],
                                    rho_outer=fam["geometry"]["rho_outer"])
        params = ModelParams.uniform(
            sigma_i=p.get("sigma_i", 1.0), sigma_e=p.get("sigma_e", 1.0),
            cells=[1, 2], gaps=[(1, 2)], cm=p.get("cm", 1.0), rm=p.get("rm", 1.0),
            cm_gap=p.get("cm_gap", 1.0), rm_gap=p.get("rm_gap", 1.0),
            v_rest=p.get("v_rest", 0.0), w_rest=p.get("w_rest", 0.0))
        v0 = tuple(float(x) for x in fam["v0"])
        family = TwoCellFamily(params=params, geometry=geometry,
                               coef_a=_parse_signal(fam["coef_a"]),
                               coef_a2=_parse_signal(fam["coef_a2"]),
                               v0=v0, w0=float(fam.get("w0", v0[0] - v0[1])))
        solution = build_two_cell(family)
        variables = ("u_e", "u_i1", "u_i2", "v1", "v2", "w1:2")
    elif kind == "lattice_mms":
        geo = fam["geometry"]
        geometry = CellLattice3D(nx_cells=int(geo["nx_cells"]),
                                 ny_cells=int(geo["ny_cells"]),
                                 cell_dims=tuple(float(x) for x in geo["cell_dims"]),
                                 box_dims=tuple(float(x) for x in geo["box_dims"]),
                                 mms_periods=tuple(float(x) for x in geo["mms_periods"]))
        cells = geometry.cells
        params = ModelParams.uniform(
            sigma_i=p.get("sigma_i", 1.0), sigma_e=p.get("sigma_e", 1.0),
            cells=cells, gaps=geometry.gap_pairs(),
            cm=p.get("cm", 1.0), rm=p.get("rm", 1.0),
            cm_gap=p.get("cm_gap", 1.0), rm_gap=p.get("rm_gap", 1.0),
            v_rest=p.get("v_rest", 0.0), w_rest=p.get("w_rest", 0.0))
        amps = fam.get("amplitudes", [])
        if len(amps) != len(cells):
            raise ConfigurationError(
                f"need {len(cells)} amplitudes for the lattice, got {len(amps)}")
        family = MmsFamily(params=params, geometry=geometry,
                           amplitudes={k: float(a) for k, a in zip(cells, amps)},
                           level=float(fam.get("level", 0.0)),
                           boundary=cfg.exp3_boundary if cfg.exp3_boundary else "exact")
        solution = build_mms(family)
        variables = (("u_e",) + tuple(f"u_i{k}" for k in cells)
                     + tuple(f"v{k}" for k in cells)
                     + tuple(f"w{k}:{l}" for k, l in geometry.gap_pairs()))
    else:
        raise ConfigurationError(f"unknown family kind {kind!r}")

    if cfg.t0 is None or cfg.t_end is None:
        raise ConfigurationError("custom families need schedule.t0 and schedule.t_end")
    schedule = tuple(cfg.schedule_rows or ())
    # custom lattice runs take c_l as the grid spacing directly; misaligned
    # values are rejected by the grid builder
    return Preset(name=f"custom-{kind}", family=family, solution=solution,
                  t0=cfg.t0, t_end=cfg.t_end, schedule=schedule,
                  variables=variables, admissible_h=())


def resolve_preset(cfg: RunConfig, name: str | None = None) -> Preset:
    """Preset object from an explicit name, the config preset, or [family]."""
    if name:
        if name not in PRESET_NAMES:
            raise ConfigurationError(f"unknown preset {name!r}; expected {PRESET_NAMES}")
        return get_preset(name, exp3_boundary=cfg.exp3_boundary)
    if cfg.preset:
        return get_preset(cfg.preset, exp3_boundary=cfg.exp3_boundary)
    if cfg.family:
        return _family_preset(cfg.family, cfg)
    raise ConfigurationError("no preset named and no [family] section configured")
