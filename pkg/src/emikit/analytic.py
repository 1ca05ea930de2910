"""Exact solution families: radial single cell, coupled hemispheres, lattice MMS.

Each builder returns a solution object exposing the potentials, transmembrane
jumps, interface currents, forcing terms, and boundary data as closed-form
functions of space and time.  Points are Cartesian arrays of shape ``(d,)`` or
``(n, d)``; the formulas extend smoothly outside their nominal subdomains,
and :meth:`classify` reports which subdomain (if any) contains a point.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Mapping

import numpy as np

from .core import (Annulus2D, CellLattice3D, ConfigurationError, DomainError,
                   FamilyViolationError, HemispherePair3D, ModelParams,
                   gap_key, validate)
from .signals import TimeSignal, membrane_integral

__all__ = [
    "SingleCellFamily", "TwoCellFamily", "MmsFamily",
    "SingleCellSolution", "TwoCellSolution", "LatticeMmsSolution",
    "build_single_cell", "build_two_cell", "build_mms",
]

_INTERFACE_TOL = 1e-9


def _points(p, dim: int) -> np.ndarray:
    arr = np.asarray(p)
    if not np.issubdtype(arr.dtype, np.floating):
        arr = arr.astype(float)
    if arr.shape == (dim,) or (arr.ndim == 2 and arr.shape[1] == dim):
        return arr
    raise DomainError(f"expected a point of dimension {dim}, got shape {arr.shape}")


def _radius(p, dim: int):
    return np.linalg.norm(_points(p, dim), axis=-1)


# ---------------------------------------------------------------------------
# family descriptions

@dataclass(frozen=True)
class SingleCellFamily:
    """Polar family on an annulus; requires equal conductivities."""

    params: ModelParams
    geometry: Annulus2D
    coef_a: TimeSignal
    coef_a2: TimeSignal
    v0: float


@dataclass(frozen=True)
class TwoCellFamily:
    """Spherical family for two identical hemispherical cells.

    Admissible in two regimes: equal initial membrane potentials with a
    quiescent gap (w0 = w_rest = 0), or distinct initial potentials with
    w_rest = 0, matched products C_gap * R_gap = C_m * R_m, and
    w0 = v0[0] - v0[1] (the value forced by the jump identity at t = 0).
    """

    params: ModelParams
    geometry: HemispherePair3D
    coef_a: TimeSignal
    coef_a2: TimeSignal
    v0: tuple[float, float]
    w0: float


@dataclass(frozen=True)
class MmsFamily:
    """Separable cosine solution on the cell lattice.

    ``amplitudes[k]`` is the initial intracellular level above the shared
    extracellular level ``level``; the spatial factor has the geometry's
    ``mms_periods``.  ``boundary`` selects the exported Dirichlet trace:
    "exact" evaluates the solution on the box boundary, "zero" uses the
    homogeneous trace (identical whenever the box boundary lies on cosine
    zeros, as in the bundled preset).
    """

    params: ModelParams
    geometry: CellLattice3D
    amplitudes: Mapping[int, float]
    level: float
    boundary: str = "exact"

    def __post_init__(self):
        object.__setattr__(self, "amplitudes", dict(self.amplitudes))


def _require_valid(params, geometry):
    problems = validate(params, geometry)
    if problems:
        raise ConfigurationError("; ".join(problems))


# ---------------------------------------------------------------------------
# radial families

class _RadialSolutionBase:
    kind: str
    dim: int

    def u_e(self, p, t):
        return self.u_e_profile(_radius(p, self.dim), t)

    def u_i(self, k, p, t):
        return self.u_i_profile(k, _radius(p, self.dim), t)

    def f_e(self, p, t):
        r = _radius(p, self.dim)
        return np.zeros_like(r) if np.ndim(r) else 0.0

    def f_i(self, k, p, t):
        return self.f_e(p, t)

    def g_m(self, k, t):
        return 0.0

    def g_gap(self, pair, p, t):
        t = np.asarray(t, dtype=float)
        out = np.zeros_like(t)
        return out if out.ndim else 0.0


@dataclass(frozen=True)
class SingleCellSolution(_RadialSolutionBase):
    family: SingleCellFamily

    kind = "single-cell"
    dim = 2
    cells = (1,)
    gap_pairs = ()

    @property
    def params(self):
        return self.family.params

    @property
    def geometry(self):
        return self.family.geometry

    def u_e_profile(self, r, t):
        fam = self.family
        a = fam.coef_a(t)
        return a * np.log(r) / fam.params.sigma_e + fam.coef_a2(t)

    def u_i_profile(self, k, r, t):
        if k != 1:
            raise DomainError(f"single-cell family has no cell {k}")
        return self.u_e_profile(r, t) + self.v(1, t)

    def v(self, k, t, p=None):
        if k != 1:
            raise DomainError(f"single-cell family has no cell {k}")
        fam = self.family
        return membrane_integral(
            fam.params.cm(1), fam.params.rm(1), fam.params.v_rest, fam.v0,
            fam.coef_a.scaled(1.0 / fam.geometry.r_membrane), t)

    def w(self, pair, t, p=None):
        raise DomainError("single-cell family has no gap junctions")

    def i_m(self, k, t, p=None):
        if k != 1:
            raise DomainError(f"single-cell family has no cell {k}")
        return -self.family.coef_a(t) / self.family.geometry.r_membrane

    def i_gap(self, pair, t, p=None):
        raise DomainError("single-cell family has no gap junctions")

    def u_app(self, t, p=None):
        return self.u_e_profile(self.geometry.r_outer, t)

    def classify(self, p):
        g = self.geometry
        r = float(_radius(np.asarray(p, float), self.dim))
        tol = _INTERFACE_TOL * g.r_outer
        if abs(r - g.r_membrane) <= tol:
            return ("membrane", 1)
        if g.r_core - tol <= r <= g.r_membrane:
            return ("cell", 1)
        if g.r_membrane <= r <= g.r_outer + tol:
            return ("extracellular", None)
        return None


@dataclass(frozen=True)
class TwoCellSolution(_RadialSolutionBase):
    family: TwoCellFamily

    kind = "two-cell"
    dim = 3
    cells = (1, 2)
    gap_pairs = ((1, 2),)

    @property
    def params(self):
        return self.family.params

    @property
    def geometry(self):
        return self.family.geometry

    def u_e_profile(self, rho, t):
        fam = self.family
        return -fam.coef_a(t) / (fam.params.sigma_e * np.asarray(rho)) + fam.coef_a2(t)

    def u_i_profile(self, k, rho, t):
        return self.u_e_profile(rho, t) + self.v(k, t)

    def v(self, k, t, p=None):
        if k not in (1, 2):
            raise DomainError(f"two-cell family has no cell {k}")
        fam = self.family
        rho1 = fam.geometry.rho_membrane
        return membrane_integral(
            fam.params.cm(1), fam.params.rm(1), fam.params.v_rest, fam.v0[k - 1],
            fam.coef_a.scaled(1.0 / rho1 ** 2), t)

    def w(self, pair, t, p=None):
        if gap_key(*pair) != (1, 2):
            raise DomainError(f"two-cell family has no gap junction {pair}")
        fam = self.family
        tau = fam.params.cm(1) * fam.params.rm(1)
        t = np.asarray(t, dtype=float)
        out = (fam.v0[0] - fam.v0[1]) * np.exp(-t / tau)
        return out if out.ndim else float(out)

    def i_m(self, k, t, p=None):
        if k not in (1, 2):
            raise DomainError(f"two-cell family has no cell {k}")
        return -self.family.coef_a(t) / self.family.geometry.rho_membrane ** 2

    def i_gap(self, pair, t, p=None):
        if gap_key(*pair) != (1, 2):
            raise DomainError(f"two-cell family has no gap junction {pair}")
        t = np.asarray(t, dtype=float)
        out = np.zeros_like(t)
        return out if out.ndim else 0.0

    def u_app(self, t, p=None):
        return self.u_e_profile(self.geometry.rho_outer, t)

    def classify(self, p):
        g = self.geometry
        p = np.asarray(p, dtype=float)
        rho = float(_radius(p, self.dim))
        z = float(p[..., 2]) if p.ndim == 1 else float(p[2])
        tol = _INTERFACE_TOL * g.rho_outer
        if rho > g.rho_outer + tol or rho < g.rho_core - tol:
            return None
        if abs(rho - g.rho_membrane) <= tol:
            return ("membrane", 1 if z > 0 else 2)
        if rho > g.rho_membrane:
            return ("extracellular", None)
        if abs(z) <= tol:
            return ("gap", (1, 2))
        return ("cell", 1 if z > 0 else 2)


def build_single_cell(family: SingleCellFamily) -> SingleCellSolution:
    """Assemble the annulus family; the conductivities must be equal."""
    _require_valid(family.params, family.geometry)
    if family.params.sigma_i != family.params.sigma_e:
        raise FamilyViolationError(
            "the single-cell family requires sigma_i == sigma_e "
            f"(got {family.params.sigma_i} and {family.params.sigma_e})")
    return SingleCellSolution(family)


def build_two_cell(family: TwoCellFamily) -> TwoCellSolution:
    """Assemble the hemisphere-pair family, checking admissibility."""
    p = family.params
    _require_valid(p, family.geometry)
    if p.sigma_i != p.sigma_e:
        raise FamilyViolationError("the two-cell family requires sigma_i == sigma_e")
    if p.rm(1) != p.rm(2) or p.cm(1) != p.cm(2):
        raise FamilyViolationError("the two-cell family requires identical cells "
                                   "(equal membrane capacitance and resistance)")
    v01, v02 = family.v0
    if v01 == v02:
        if not (family.w0 == 0.0 and p.w_rest == 0.0):
            raise FamilyViolationError(
                "with equal initial membrane potentials the family requires "
                "w0 = w_rest = 0")
    else:
        tau_m = p.cm(1) * p.rm(1)
        tau_g = p.cm_of_gap(1, 2) * p.rm_of_gap(1, 2)
        if p.w_rest != 0.0 or not math.isclose(tau_g, tau_m, rel_tol=1e-12):
            raise FamilyViolationError(
                "with distinct initial membrane potentials the family requires "
                "w_rest = 0 and C_gap * R_gap = C_m * R_m "
                f"(got {tau_g} vs {tau_m})")
        if family.w0 != v01 - v02:
            raise FamilyViolationError(
                "the jump identity at t = 0 forces w0 = v0[0] - v0[1] "
                f"= {v01 - v02}, got {family.w0}")
    return TwoCellSolution(family)


# ---------------------------------------------------------------------------
# manufactured lattice family

@dataclass(frozen=True)
class LatticeMmsSolution:
    family: MmsFamily
    _wavenumbers: tuple[float, float, float] = field(init=False)

    kind = "lattice-mms"
    dim = 3

    def __post_init__(self):
        object.__setattr__(self, "_wavenumbers",
                           tuple(2 * math.pi / p for p in self.family.geometry.mms_periods))

    @property
    def params(self):
        return self.family.params

    @property
    def geometry(self):
        return self.family.geometry

    @property
    def cells(self):
        return self.family.geometry.cells

    @property
    def gap_pairs(self):
        return self.family.geometry.gap_pairs()

    @property
    def laplace_factor(self) -> float:
        """Sum of squared wavenumbers; -laplacian(X) = laplace_factor * X."""
        return sum(w * w for w in self._wavenumbers)

    def spatial_factor(self, p):
        p = _points(p, 3)
        kx, ky, kz = self._wavenumbers
        return (np.cos(kx * p[..., 0]) * np.cos(ky * p[..., 1])
                * np.cos(kz * p[..., 2]))

    def spatial_gradient(self, p):
        p = _points(p, 3)
        kx, ky, kz = self._wavenumbers
        cx, cy, cz = np.cos(kx * p[..., 0]), np.cos(ky * p[..., 1]), np.cos(kz * p[..., 2])
        sx, sy, sz = np.sin(kx * p[..., 0]), np.sin(ky * p[..., 1]), np.sin(kz * p[..., 2])
        return np.stack([-kx * sx * cy * cz, -ky * cx * sy * cz, -kz * cx * cy * sz],
                        axis=-1)

    def t_e(self, t):
        t = np.asarray(t, dtype=float)
        out = np.full_like(t, self.family.level)
        return out if out.ndim else float(out)

    def t_i(self, k, t):
        fam = self.family
        tau = fam.params.cm(k) * fam.params.rm(k)
        t = np.asarray(t, dtype=float)
        out = fam.amplitudes[k] * np.exp(-t / tau) + fam.level
        return out if out.ndim else float(out)

    def u_e(self, p, t):
        return self.t_e(t) * self.spatial_factor(p)

    def u_i(self, k, p, t):
        return self.t_i(k, t) * self.spatial_factor(p)

    def v(self, k, t, p=None):
        if p is None:
            raise DomainError("the lattice family needs a membrane point to evaluate v")
        return (self.t_i(k, t) - self.t_e(t)) * self.spatial_factor(p)

    def w(self, pair, t, p=None):
        if p is None:
            raise DomainError("the lattice family needs a gap point to evaluate w")
        k, l = pair
        return (self.t_i(k, t) - self.t_i(l, t)) * self.spatial_factor(p)

    def i_m(self, k, t, p=None):
        return 0.0

    def i_gap(self, pair, t, p=None):
        return 0.0

    def f_e(self, p, t):
        return self.params.sigma_e * self.laplace_factor * self.u_e(p, t)

    def f_i(self, k, p, t):
        return self.params.sigma_i * self.laplace_factor * self.u_i(k, p, t)

    def g_m(self, k, t):
        return -self.params.v_rest / self.params.rm(k)

    def g_gap(self, pair, p, t):
        """Gap forcing that makes the junction ODE hold exactly.

        For equal membrane time constants this reduces to
        (1/R_g - C_g/(C R)) * (u_i^k - u_i^l) - w_rest/R_g; the extra
        extracellular term covers heterogeneous time constants.
        """
        k, l = pair
        prm = self.params
        cg = prm.cm_of_gap(k, l)
        rg = prm.rm_of_gap(k, l)
        inv_tau_k = 1.0 / (prm.cm(k) * prm.rm(k))
        inv_tau_l = 1.0 / (prm.cm(l) * prm.rm(l))
        return ((1.0 / rg - cg * inv_tau_k) * self.u_i(k, p, t)
                - (1.0 / rg - cg * inv_tau_l) * self.u_i(l, p, t)
                + cg * (inv_tau_k - inv_tau_l) * self.u_e(p, t)
                - prm.w_rest / rg)

    def u_app(self, p, t):
        if self.family.boundary == "zero":
            x = self.spatial_factor(p)
            return np.zeros_like(x) if np.ndim(x) else 0.0
        return self.u_e(p, t)

    def i_app(self, p, t, normal):
        normal = np.asarray(normal, dtype=float)
        grad = self.spatial_gradient(p)
        return self.t_e(t) * self.params.sigma_e * np.sum(grad * normal, axis=-1)

    def classify(self, p):
        g = self.geometry
        p = np.asarray(p, dtype=float)
        lo, hi = g.box_bounds()
        tol = _INTERFACE_TOL * max(g.box_dims)
        if np.any(p < np.asarray(lo) - tol) or np.any(p > np.asarray(hi) + tol):
            return None
        for k in g.cells:
            clo, chi = g.cell_bounds(k)
            if np.all(p >= np.asarray(clo) - tol) and np.all(p <= np.asarray(chi) + tol):
                on_face = (np.abs(p - np.asarray(clo)) <= tol) | (np.abs(p - np.asarray(chi)) <= tol)
                if not np.any(on_face):
                    return ("cell", k)
                # face of cell k: gap if it is shared with a neighbour
                for pair in g.gap_pairs():
                    if k not in pair:
                        continue
                    other = pair[0] if pair[1] == k else pair[1]
                    olo, ohi = g.cell_bounds(other)
                    if np.all(p >= np.asarray(olo) - tol) and np.all(p <= np.asarray(ohi) + tol):
                        return ("gap", pair)
                return ("membrane", k)
        return ("extracellular", None)


def build_mms(family: MmsFamily) -> LatticeMmsSolution:
    """Assemble the manufactured lattice solution."""
    _require_valid(family.params, family.geometry)
    missing = [k for k in family.geometry.cells if k not in family.amplitudes]
    if missing:
        raise ConfigurationError(f"missing amplitudes for cells {missing}")
    if family.boundary not in ("exact", "zero"):
        raise ConfigurationError(f"unknown boundary mode {family.boundary!r}")
    return LatticeMmsSolution(family)
