"""Bundled benchmark cases: the three reference experiments.

exp1  sinusoidal pulse on the annulus (single cell, polar symmetry)
exp2  damped cosine pulse on the hemisphere pair (two coupled cells)
exp3  four-cell lattice with the separable-cosine manufactured solution

Parameter values are the raw dimensionless numbers of the benchmark
definitions.  Each preset carries its refinement schedule and time window.
"""
from __future__ import annotations

from dataclasses import dataclass

from .analytic import (MmsFamily, SingleCellFamily, TwoCellFamily,
                       build_mms, build_single_cell, build_two_cell)
from .core import Annulus2D, CellLattice3D, ConfigurationError, HemispherePair3D, ModelParams
from .signals import TimeSignal

__all__ = ["Preset", "PRESET_NAMES", "get_preset"]


@dataclass(frozen=True)
class Preset:
    name: str
    family: object
    solution: object
    t0: float
    t_end: float
    schedule: tuple[tuple[float, int], ...]
    variables: tuple[str, ...]
    # admissible grid spacings for structured-lattice presets, finest last
    admissible_h: tuple[float, ...] = ()


def _exp1() -> Preset:
    params = ModelParams.uniform(sigma_i=1.0, sigma_e=1.0, cells=[1],
                                 cm=1.0, rm=1.0, v_rest=5.0)
    geometry = Annulus2D(r_core=3.0, r_membrane=5.0, r_outer=6.0)
    family = SingleCellFamily(params=params, geometry=geometry,
                              coef_a=TimeSignal.sine(10.0),
                              coef_a2=TimeSignal.constant(5.0), v0=20.0)
    return Preset(
        name="exp1", family=family, solution=build_single_cell(family),
        t0=0.25, t_end=7.0,
        schedule=((0.40, 7), (0.28, 14), (0.20, 28), (0.14, 56), (0.10, 112)),
        variables=("u_e", "u_i1", "v1"),
    )


def _exp2() -> Preset:
    params = ModelParams.uniform(sigma_i=1.0, sigma_e=1.0, cells=[1, 2],
                                 gaps=[(1, 2)], cm=1.0, rm=1.0,
                                 cm_gap=1.0, rm_gap=1.0, v_rest=5.0, w_rest=0.0)
    geometry = HemispherePair3D(rho_core=3.0, rho_membrane=5.0, rho_outer=6.0)
    family = TwoCellFamily(params=params, geometry=geometry,
                           coef_a=TimeSignal.damped_cosine(-50.0, rate=-0.1),
                           coef_a2=TimeSignal.constant(0.0),
                           v0=(10.0, 30.0), w0=-20.0)
    return Preset(
        name="exp2", family=family, solution=build_two_cell(family),
        t0=0.25, t_end=7.0,
        schedule=((0.40, 10), (0.28, 20), (0.20, 40), (0.14, 80), (0.10, 160)),
        variables=("u_e", "u_i1", "u_i2", "v1", "v2", "w1:2"),
    )


def _exp3(boundary: str = "zero") -> Preset:
    params = ModelParams.uniform(sigma_i=1.0, sigma_e=4.0, cells=range(1, 5),
                                 gaps=[(1, 2), (1, 3), (2, 4), (3, 4)],
                                 cm=1.0, rm=1.0, cm_gap=1.0, rm_gap=1.0,
                                 v_rest=0.0, w_rest=0.0)
    geometry = CellLattice3D(nx_cells=2, ny_cells=2,
                             cell_dims=(1.0, 1.0, 1.0),
                             box_dims=(4.75, 4.75, 1.75),
                             mms_periods=(0.5, 0.5, 0.5))
    family = MmsFamily(params=params, geometry=geometry,
                       amplitudes={k: float(k) for k in range(1, 5)},
                       level=1.0, boundary=boundary)
    variables = (["u_e"] + [f"u_i{k}" for k in range(1, 5)]
                 + [f"v{k}" for k in range(1, 5)]
                 + [f"w{k}:{l}" for k, l in geometry.gap_pairs()])
    # the benchmark's characteristic lengths do not all align with the
    # structured grid; the ladder keeps the rows whose nearest admissible
    # spacings are distinct (0.14 -> 0.125, 0.07 -> 0.0625, 0.035 -> 0.03125)
    return Preset(
        name="exp3", family=family, solution=build_mms(family),
        t0=0.0, t_end=1.0,
        schedule=((0.14, 10), (0.07, 40), (0.035, 160)),
        variables=tuple(variables),
        admissible_h=(0.125, 0.0625, 0.03125),
    )


PRESET_NAMES = ("exp1", "exp2", "exp3")


def get_preset(name: str, *, exp3_boundary: str = "zero") -> Preset:
    if name == "exp1":
        return _exp1()
    if name == "exp2":
        return _exp2()
    if name == "exp3":
        return _exp3(exp3_boundary)
    raise ConfigurationError(f"unknown preset {name!r}; expected one of {PRESET_NAMES}")
