"""Model parameters, geometries, and passive cell-model currents.

Orientation conventions used throughout the package:

* ``n_i^k`` is the outward unit normal of the intracellular domain of cell k,
  ``n_e`` the outward unit normal of the extracellular domain.  On a membrane
  they are opposite; on a gap junction between cells k and l, ``n_i^k = -n_i^l``.
* The membrane current density ``I_m^k`` is the conduction current leaving
  cell k through its membrane,

      I_m^k = (sigma_e grad u_e) . n_e = -(sigma_i grad u_i^k) . n_i^k,

  so a positive ``I_m`` transports charge from the cell into the
  extracellular space.
* The gap current density ``I^{k,l}`` is the current leaving cell k through
  the junction into cell l:  I^{k,l} = -(sigma_i grad u_i^k) . n_i^k
  = (sigma_i grad u_i^l) . n_i^l, paired with the jump w^{k,l} = u_i^k - u_i^l.

All quantities are dimensionless; the bundled experiment presets use raw
parameter values without attaching a unit system.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Iterable, Mapping, Union

__all__ = [
    "EmiError",
    "ConfigurationError",
    "FamilyViolationError",
    "NumericError",
    "DomainError",
    "ModelParams",
    "Annulus2D",
    "HemispherePair3D",
    "CellLattice3D",
    "GeometrySpec",
    "gap_key",
    "ion_current_membrane",
    "ion_current_gap",
    "validate",
]


class EmiError(Exception):
    """Base class for toolkit errors."""


class ConfigurationError(EmiError):
    """Invalid parameters, geometry, or run configuration."""


class FamilyViolationError(EmiError):
    """Inputs violate the preconditions of an analytical solution family."""


class NumericError(EmiError):
    """A numerical procedure failed to reach its required tolerance."""


class DomainError(EmiError):
    """A point lies outside the domain of the requested quantity."""


def gap_key(k: int, l: int) -> tuple[int, int]:
    """Canonical unordered key for the gap junction between cells k and l."""
    if k == l:
        raise ConfigurationError(f"gap junction requires two distinct cells, got ({k}, {l})")
    return (k, l) if k < l else (l, k)


def _positive_finite(x: float) -> bool:
    return isinstance(x, (int, float)) and math.isfinite(x) and x > 0


@dataclass(frozen=True)
class ModelParams:
    """Conductivities, capacitances, resistances, and rest potentials.

    Membrane entries are keyed by cell index, gap entries by the unordered
    cell pair; ``(k, l)`` and ``(l, k)`` resolve to the same value.  The
    intracellular conductivity is a single scalar shared by all cells.
    """

    sigma_i: float
    sigma_e: float
    cm_membrane: Mapping[int, float]
    rm_membrane: Mapping[int, float]
    cm_gap: Mapping[tuple[int, int], float] = field(default_factory=dict)
    rm_gap: Mapping[tuple[int, int], float] = field(default_factory=dict)
    v_rest: float = 0.0
    w_rest: float = 0.0

    def __post_init__(self):
        object.__setattr__(self, "cm_membrane", dict(self.cm_membrane))
        object.__setattr__(self, "rm_membrane", dict(self.rm_membrane))
        object.__setattr__(self, "cm_gap", {gap_key(*p): v for p, v in dict(self.cm_gap).items()})
        object.__setattr__(self, "rm_gap", {gap_key(*p): v for p, v in dict(self.rm_gap).items()})

    @classmethod
    def uniform(cls, *, sigma_i: float, sigma_e: float, cells: Iterable[int],
                gaps: Iterable[tuple[int, int]] = (), cm: float = 1.0, rm: float = 1.0,
                cm_gap: float = 1.0, rm_gap: float = 1.0,
                v_rest: float = 0.0, w_rest: float = 0.0) -> "ModelParams":
        """Identical membrane/gap properties for every cell and junction."""
        cells = list(cells)
        gaps = [gap_key(*p) for p in gaps]
        return cls(
            sigma_i=sigma_i, sigma_e=sigma_e,
            cm_membrane={k: cm for k in cells},
            rm_membrane={k: rm for k in cells},
            cm_gap={p: cm_gap for p in gaps},
            rm_gap={p: rm_gap for p in gaps},
            v_rest=v_rest, w_rest=w_rest,
        )

    @property
    def cells(self) -> tuple[int, ...]:
        return tuple(sorted(self.cm_membrane))

    def cm(self, k: int) -> float:
        return self.cm_membrane[k]

    def rm(self, k: int) -> float:
        return self.rm_membrane[k]

    def cm_of_gap(self, k: int, l: int) -> float:
        try:
            return self.cm_gap[gap_key(k, l)]
        except KeyError:
            raise ConfigurationError(f"no gap-junction capacitance for cell pair ({k}, {l})") from None

    def rm_of_gap(self, k: int, l: int) -> float:
        try:
            return self.rm_gap[gap_key(k, l)]
        except KeyError:
            raise ConfigurationError(f"no gap-junction resistance for cell pair ({k}, {l})") from None


@dataclass(frozen=True)
class Annulus2D:
    """Single circular cell with excluded core, polar symmetry.

    Intracellular domain: r_core <= r <= r_membrane.
    Extracellular domain: r_membrane <= r <= r_outer.
    """

    r_core: float
    r_membrane: float
    r_outer: float

    dim = 2

    def violations(self) -> list[str]:
        out = []
        for name in ("r_core", "r_membrane", "r_outer"):
            if not _positive_finite(getattr(self, name)):
                out.append(f"{name} must be positive and finite")
        if not out and not (self.r_core < self.r_membrane < self.r_outer):
            out.append("radii must satisfy 0 < core < membrane < outer")
        return out


@dataclass(frozen=True)
class HemispherePair3D:
    """Two hemispherical cells joined on the equatorial plane, core excluded.

    Cell 1 occupies the upper (z > 0) hemispherical shell
    rho_core <= rho <= rho_membrane, cell 2 the lower one; the gap junction
    is the equatorial annulus between them.  The extracellular domain is the
    spherical shell rho_membrane <= rho <= rho_outer.
    """

    rho_core: float
    rho_membrane: float
    rho_outer: float

    dim = 3

    def violations(self) -> list[str]:
        out = []
        for name in ("rho_core", "rho_membrane", "rho_outer"):
            if not _positive_finite(getattr(self, name)):
                out.append(f"{name} must be positive and finite")
        if not out and not (self.rho_core < self.rho_membrane < self.rho_outer):
            out.append("radii must satisfy 0 < core < membrane < outer")
        return out


def _divides(part: float, whole: float, rel_tol: float = 1e-9) -> bool:
    if part <= 0 or whole <= 0:
        return False
    ratio = whole / part
    return abs(ratio - round(ratio)) <= rel_tol * max(1.0, abs(ratio))


@dataclass(frozen=True)
class CellLattice3D:
    """Sheet of nx x ny identical cuboidal cells inside a cuboidal box.

    The coordinate origin sits at the center of cell 1; cells are numbered
    row-major in the (x, y) sheet starting at 1, so cell k sits at
    ((k-1) % nx, (k-1) // nx) in lattice coordinates.  Adjacent cells share a
    full face, which acts as their gap junction.  ``mms_periods`` are the
    spatial periods of the separable cosine used by the manufactured
    solution; each must divide the matching cell dimension.
    """

    nx_cells: int
    ny_cells: int
    cell_dims: tuple[float, float, float]
    box_dims: tuple[float, float, float]
    mms_periods: tuple[float, float, float]

    dim = 3

    @property
    def n_cells(self) -> int:
        return self.nx_cells * self.ny_cells

    @property
    def cells(self) -> tuple[int, ...]:
        return tuple(range(1, self.n_cells + 1))

    def lattice_coords(self, k: int) -> tuple[int, int]:
        if not 1 <= k <= self.n_cells:
            raise ConfigurationError(f"cell index {k} outside 1..{self.n_cells}")
        return ((k - 1) % self.nx_cells, (k - 1) // self.nx_cells)

    def cell_center(self, k: int) -> tuple[float, float, float]:
        ix, iy = self.lattice_coords(k)
        return (ix * self.cell_dims[0], iy * self.cell_dims[1], 0.0)

    def cell_bounds(self, k: int) -> tuple[tuple[float, ...], tuple[float, ...]]:
        c = self.cell_center(k)
        half = tuple(d / 2 for d in self.cell_dims)
        return (tuple(ci - hi for ci, hi in zip(c, half)),
                tuple(ci + hi for ci, hi in zip(c, half)))

    def sheet_dims(self) -> tuple[float, float, float]:
        ax, by, cz = self.cell_dims
        return (self.nx_cells * ax, self.ny_cells * by, cz)

    def margins(self) -> tuple[float, float, float]:
        return tuple((b - s) / 2 for b, s in zip(self.box_dims, self.sheet_dims()))

    def box_bounds(self) -> tuple[tuple[float, ...], tuple[float, ...]]:
        # sheet lower corner is the lower corner of cell 1
        lo_sheet = self.cell_bounds(1)[0]
        m = self.margins()
        lo = tuple(l - mi for l, mi in zip(lo_sheet, m))
        hi = tuple(l + b for l, b in zip(lo, self.box_dims))
        return lo, hi

    def gap_pairs(self) -> tuple[tuple[int, int], ...]:
        """Cell pairs sharing a full face, in canonical sorted order."""
        pairs = []
        for k in self.cells:
            ix, iy = self.lattice_coords(k)
            if ix + 1 < self.nx_cells:
                pairs.append(gap_key(k, k + 1))
            if iy + 1 < self.ny_cells:
                pairs.append(gap_key(k, k + self.nx_cells))
        return tuple(sorted(pairs))

    def violations(self) -> list[str]:
        out = []
        if self.nx_cells < 1 or self.ny_cells < 1:
            out.append("cell counts must be at least 1")
        for name, triple in (("cell_dims", self.cell_dims),
                             ("box_dims", self.box_dims),
                             ("mms_periods", self.mms_periods)):
            if len(triple) != 3 or not all(_positive_finite(x) for x in triple):
                out.append(f"{name} must be three positive finite lengths")
        if out:
            return out
        for axis, (p, c) in enumerate(zip(self.mms_periods, self.cell_dims)):
            if not _divides(p, c):
                out.append(
                    f"mms period {p} along axis {axis} does not divide the cell dimension {c}")
        for axis, m in enumerate(self.margins()):
            if m <= 0:
                out.append(
                    f"cell sheet does not fit strictly inside the box along axis {axis}"
                    f" (margin {m})")
        return out


GeometrySpec = Union[Annulus2D, HemispherePair3D, CellLattice3D]


def ion_current_membrane(v: float, params: ModelParams, k: int):
    """Passive membrane current 1/R_m^k * (v - v_rest)."""
    return (v - params.v_rest) / params.rm(k)


def ion_current_gap(w: float, params: ModelParams, pair: tuple[int, int]):
    """Passive gap-junction current 1/R_m^{k,l} * (w - w_rest)."""
    return (w - params.w_rest) / params.rm_of_gap(*pair)


def _param_violations(params: ModelParams) -> list[str]:
    out = []
    if not _positive_finite(params.sigma_i):
        out.append("sigma_i must be positive and finite")
    if not _positive_finite(params.sigma_e):
        out.append("sigma_e must be positive and finite")
    for name, table in (("cm_membrane", params.cm_membrane),
                        ("rm_membrane", params.rm_membrane),
                        ("cm_gap", params.cm_gap),
                        ("rm_gap", params.rm_gap)):
        for key, value in table.items():
            if not _positive_finite(value):
                out.append(f"{name}[{key}] must be positive and finite")
    for name in ("v_rest", "w_rest"):
        if not math.isfinite(getattr(params, name)):
            out.append(f"{name} must be finite")
    return out


def validate(params: ModelParams, geometry: GeometrySpec) -> list[str]:
    """Collect every violated invariant; an empty list means the pair is usable.

    Violations are reported as human-readable messages rather than raised, so
    this function is total over finite (and non-finite) numeric input.
    """
    out = _param_violations(params)
    out.extend(geometry.violations())

    if isinstance(geometry, Annulus2D):
        needed_cells, needed_gaps = (1,), ()
    elif isinstance(geometry, HemispherePair3D):
        needed_cells, needed_gaps = (1, 2), ((1, 2),)
    elif isinstance(geometry, CellLattice3D):
        needed_cells = geometry.cells
        needed_gaps = geometry.gap_pairs() if not geometry.violations() else ()
    else:
        return out + [f"unknown geometry type {type(geometry).__name__}"]

    for k in needed_cells:
        if k not in params.cm_membrane:
            out.append(f"missing membrane capacitance for cell {k}")
        if k not in params.rm_membrane:
            out.append(f"missing membrane resistance for cell {k}")
    for pair in needed_gaps:
        if pair not in params.cm_gap:
            out.append(f"missing gap capacitance for cell pair {pair}")
        if pair not in params.rm_gap:
            out.append(f"missing gap resistance for cell pair {pair}")
    return out
