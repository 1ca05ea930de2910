"""Finite-difference verification that a built solution satisfies the model.

For each governing equation the residual is evaluated at randomized space-time
samples with central differences (step ``h``) replacing the derivatives.  Each
equation reports the maximum absolute residual together with the magnitude of
the largest term entering it; the normalized residual divides by
``max(1, term scale)`` so forced and unforced equations are comparable.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .analytic import LatticeMmsSolution, SingleCellSolution, TwoCellSolution
from .core import DomainError

__all__ = ["ResidualEntry", "ResidualReport", "residual_check"]


@dataclass(frozen=True)
class ResidualEntry:
    max_abs: float
    scale: float
    @property
    def normalized(self) -> float:
        return self.max_abs / max(1.0, self.scale)


@dataclass(frozen=True)
class ResidualReport:
    entries: dict

    @property
    def max_normalized(self) -> float:
        return max((e.normalized for e in self.entries.values()), default=0.0)

    def format(self) -> str:
        width = max((len(k) for k in self.entries), default=10)
        lines = [f"{'equation':<{width}}  {'max |residual|':>14}  {'scale':>12}  {'normalized':>12}"]
        for name in sorted(self.entries):
            e = self.entries[name]
            lines.append(f"{name:<{width}}  {e.max_abs:14.3e}  {e.scale:12.3e}  {e.normalized:12.3e}")
        return "\n".join(lines)


def _laplacian_fd(fun, pts, h):
    # extended precision keeps the f64 rounding of u, amplified by 1/h^2,
    # out of the second-difference stencil
    pts = np.atleast_2d(pts).astype(np.longdouble)
    out = np.zeros(pts.shape[0], dtype=np.longdouble)
    center = fun(pts)
    for axis in range(pts.shape[1]):
        shift = np.zeros(pts.shape[1], dtype=np.longdouble)
        shift[axis] = h
        out += fun(pts + shift) - 2.0 * center + fun(pts - shift)
    return (out / (np.longdouble(h) * np.longdouble(h))).astype(float)


def _normal_derivative_fd(fun, pts, normals, h):
    pts = np.atleast_2d(pts).astype(np.longdouble)
    normals = np.atleast_2d(normals).astype(np.longdouble)
    diff = fun(pts + h * normals) - fun(pts - h * normals)
    return (diff / (2.0 * np.longdouble(h))).astype(float)


def _time_derivative_fd(fun, t, h):
    return (fun(t + h) - fun(t - h)) / (2.0 * h)


class _Accumulator:
    def __init__(self):
        self._data = {}

    def add(self, name, residual, *terms):
        residual = np.max(np.abs(np.asarray(residual, dtype=float)))
        scale = max((float(np.max(np.abs(np.asarray(term, dtype=float))))
                     for term in terms if np.asarray(term).size), default=0.0)
        prev = self._data.get(name)
        if prev is None:
            self._data[name] = [residual, scale]
        else:
            prev[0] = max(prev[0], residual)
            prev[1] = max(prev[1], scale)

    def report(self) -> ResidualReport:
        return ResidualReport({k: ResidualEntry(v[0], v[1]) for k, v in self._data.items()})


# ---------------------------------------------------------------------------
# sample generators

def _unit_vectors_2d(rng, n):
    ang = rng.uniform(0.0, 2.0 * np.pi, n)
    return np.stack([np.cos(ang), np.sin(ang)], axis=-1)


def _unit_vectors_3d(rng, n, z_range=(-1.0, 1.0)):
    z = rng.uniform(*z_range, n)
    ang = rng.uniform(0.0, 2.0 * np.pi, n)
    s = np.sqrt(np.maximum(0.0, 1.0 - z * z))
    return np.stack([s * np.cos(ang), s * np.sin(ang), z], axis=-1)


def _single_cell_samples(sol: SingleCellSolution, n, margin, rng):
    g = sol.geometry
    dirs = _unit_vectors_2d(rng, n)
    r_i = rng.uniform(g.r_core + margin, g.r_membrane - margin, n)
    r_e = rng.uniform(g.r_membrane + margin, g.r_outer - margin, n)
    membrane = g.r_membrane * _unit_vectors_2d(rng, n)
    return {
        "interior": {(("e", None)): r_e[:, None] * dirs, (("i", 1)): r_i[:, None] * dirs},
        "membrane": {1: (membrane, membrane / g.r_membrane)},   # n_i^k, outward of the cell
        "gap": {},
    }


def _two_cell_samples(sol: TwoCellSolution, n, margin, rng):
    g = sol.geometry
    r_i = rng.uniform(g.rho_core + margin, g.rho_membrane - margin, n)
    r_e = rng.uniform(g.rho_membrane + margin, g.rho_outer - margin, n)
    up = _unit_vectors_3d(rng, n, (0.05, 0.95))
    dn = _unit_vectors_3d(rng, n, (-0.95, -0.05))
    mem1 = g.rho_membrane * _unit_vectors_3d(rng, n, (0.05, 0.95))
    mem2 = g.rho_membrane * _unit_vectors_3d(rng, n, (-0.95, -0.05))
    ang = rng.uniform(0.0, 2.0 * np.pi, n)
    r_g = rng.uniform(g.rho_core + margin, g.rho_membrane - margin, n)
    gap_pts = np.stack([r_g * np.cos(ang), r_g * np.sin(ang), np.zeros(n)], axis=-1)
    return {
        "interior": {("e", None): r_e[:, None] * _unit_vectors_3d(rng, n),
                     ("i", 1): r_i[:, None] * up,
                     ("i", 2): r_i[:, None] * dn},
        "membrane": {1: (mem1, mem1 / g.rho_membrane),
                     2: (mem2, mem2 / g.rho_membrane)},
        # outward normal of cell 1 (upper hemisphere) on the equatorial plane
        "gap": {(1, 2): (gap_pts, np.tile([0.0, 0.0, -1.0], (n, 1)))},
    }


def _mms_samples(sol: LatticeMmsSolution, n, margin, rng):
    g = sol.geometry
    lo_box, hi_box = (np.asarray(b) for b in g.box_bounds())
    interior = {}
    for k in g.cells:
        lo, hi = (np.asarray(b) for b in g.cell_bounds(k))
        interior[("i", k)] = rng.uniform(lo + margin, hi - margin, (n, 3))
    # rejection sampling for the extracellular region
    pts = []
    bounds = [tuple(np.asarray(b) for b in g.cell_bounds(k)) for k in g.cells]
    while len(pts) < n:
        cand = rng.uniform(lo_box + margin, hi_box - margin, (4 * n, 3))
        keep = np.ones(len(cand), dtype=bool)
        for lo, hi in bounds:
            inside = np.all((cand > lo - margin) & (cand < hi + margin), axis=1)
            keep &= ~inside
        pts.extend(cand[keep])
    interior[("e", None)] = np.asarray(pts[:n])

    pair_lookup = {}
    for pair in g.gap_pairs():
        pair_lookup.setdefault(pair[0], {})[pair[1]] = pair
        pair_lookup.setdefault(pair[1], {})[pair[0]] = pair

    membrane, gap = {}, {}
    for k in g.cells:
        lo, hi = (np.asarray(b) for b in g.cell_bounds(k))
        mem_pts, mem_nrm = [], []
        for axis in range(3):
            for side, coord in ((-1, lo[axis]), (+1, hi[axis])):
                face_center = np.array(g.cell_center(k))
                face_center[axis] = coord
                # which cell (if any) sits on the other side of this face
                neighbor = None
                for other, pair in pair_lookup.get(k, {}).items():
                    oc = np.array(g.cell_center(other))
                    if abs((oc[axis] - g.cell_center(k)[axis]) - side * g.cell_dims[axis]) < 1e-12 \
                            and np.allclose(np.delete(oc, axis), np.delete(g.cell_center(k), axis)):
                        neighbor = (other, pair)
                        break
                m = n // 3 + 1
                face_pts = rng.uniform(lo + margin, hi - margin, (m, 3))
                face_pts[:, axis] = coord
                normal = np.zeros(3)
                normal[axis] = side
                if neighbor is None:
                    mem_pts.append(face_pts)
                    mem_nrm.append(np.tile(normal, (m, 1)))
                elif k < neighbor[0]:
                    gap[neighbor[1]] = (face_pts, np.tile(normal, (m, 1)))
        membrane[k] = (np.concatenate(mem_pts), np.concatenate(mem_nrm))
    return {"interior": interior, "membrane": membrane, "gap": gap}


# ---------------------------------------------------------------------------

def residual_check(solution, n_samples: int = 200, times=(0.25, 0.5, 1.0),
                   h: float = 1e-4, seed: int = 0) -> ResidualReport:
    """Maximum finite-difference residual of every governing equation.

    Checks the interior balances (with forcing where the family defines it),
    the membrane and gap ODEs, the flux-continuity identities, and the jump
    definitions of the transmembrane potentials.
    """
    rng = np.random.default_rng(seed)
    margin = max(3.0 * h, 1e-3)
    if isinstance(solution, SingleCellSolution):
        samples = _single_cell_samples(solution, n_samples, margin, rng)
    elif isinstance(solution, TwoCellSolution):
        samples = _two_cell_samples(solution, n_samples, margin, rng)
    elif isinstance(solution, LatticeMmsSolution):
        samples = _mms_samples(solution, n_samples, margin, rng)
    else:
        raise DomainError(f"unsupported solution type {type(solution).__name__}")

    acc = _Accumulator()
    prm = solution.params
    times = np.asarray(times, dtype=float)

    for t in times:
        # interior balances: sigma * lap(u) + f = 0
        for (tag, k), pts in samples["interior"].items():
            if tag == "e":
                lap = prm.sigma_e * _laplacian_fd(lambda q: solution.u_e(q, t), pts, h)
                f = np.asarray(solution.f_e(pts, t), dtype=float)
                acc.add("poisson_e", lap + f, lap, f)
            else:
                lap = prm.sigma_i * _laplacian_fd(lambda q: solution.u_i(k, q, t), pts, h)
                f = np.asarray(solution.f_i(k, pts, t), dtype=float)
                acc.add("poisson_i", lap + f, lap, f)

        for k, (pts, normals) in samples["membrane"].items():
            u_i = solution.u_i(k, pts, t)
            u_e = solution.u_e(pts, t)
            v = solution.v(k, t, pts)
            acc.add("jump_v", v - (u_i - u_e), v, u_i, u_e)

            i_m = np.asarray(solution.i_m(k, t, pts), dtype=float)
            flux_e = -prm.sigma_e * _normal_derivative_fd(   # n_e = -n_i^k on the membrane
                lambda q: solution.u_e(q, t), pts, normals, h)
            flux_i = -prm.sigma_i * _normal_derivative_fd(
                lambda q: solution.u_i(k, q, t), pts, normals, h)
            acc.add("flux_membrane", i_m - flux_e, i_m, flux_e)
            acc.add("flux_membrane", i_m - flux_i, i_m, flux_i)

            dv = _time_derivative_fd(lambda s: solution.v(k, s, pts), t, h)
            ion = (v - prm.v_rest) / prm.rm(k)
            g = solution.g_m(k, t)
            resid = prm.cm(k) * dv - (i_m - ion + g)
            acc.add("membrane_ode", resid, prm.cm(k) * dv, i_m, ion, g)

        for pair, (pts, normals) in samples["gap"].items():
            k, l = pair
            w = solution.w(pair, t, pts)
            u_k = solution.u_i(k, pts, t)
            u_l = solution.u_i(l, pts, t)
            acc.add("jump_w", w - (u_k - u_l), w, u_k, u_l)

            i_g = np.asarray(solution.i_gap(pair, t, pts), dtype=float)
            # current leaving cell k through the junction: -(sigma_i grad u_k) . n_k
            flux_k = -prm.sigma_i * _normal_derivative_fd(
                lambda q: solution.u_i(k, q, t), pts, normals, h)
            flux_l = prm.sigma_i * _normal_derivative_fd(
                lambda q: solution.u_i(l, q, t), pts, normals, h)
            acc.add("flux_gap", i_g - flux_k, i_g, flux_k)
            acc.add("flux_gap", i_g - flux_l, i_g, flux_l)

            dw = _time_derivative_fd(lambda s: solution.w(pair, s, pts), t, h)
            ion = (w - prm.w_rest) / prm.rm_of_gap(k, l)
            g = solution.g_gap(pair, pts, t)
            resid = prm.cm_of_gap(k, l) * dw - (i_g - ion + g)
            acc.add("gap_ode", resid, prm.cm_of_gap(k, l) * dw, i_g, ion, g)

    return acc.report()
