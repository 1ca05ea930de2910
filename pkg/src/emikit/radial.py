"""Radially reduced finite-volume solvers for the annulus and hemisphere cases.

The radially symmetric problems reduce to one spatial coordinate with the
shell measure r^d (d = 1 polar annulus, d = 2 spherical shell).  Interior
nodes carry conservative flux balances F_{j+1/2} - F_{j-1/2} = 0 with
F = sigma r^d u' evaluated by centered two-point differences; membrane
currents are closed with one-sided three-point (second-order) derivatives and
the implicit capacitive relation C (v^{n+1} - v*) / dt = I_m^{n+1}.  In the
two-cell reduction the equatorial gap junction exchanges current between the
hemispheres through one density unknown per radius, weighted by the annular
measure; the vanishing of the exact gap current is not imposed and must
emerge from the solve.

Dirichlet data (excluded core and outer boundary) is taken from the bound
analytic solution at the implicit target time.
"""
from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .analytic import SingleCellSolution, TwoCellSolution
from .core import Annulus2D, ConfigurationError, DomainError, HemispherePair3D, NumericError
from .splitting import relaxation_update

__all__ = ["RadialMesh", "SingleCellState", "TwoCellState",
           "SingleCellRadialSolver", "TwoCellRadialSolver",
           "solve_steady_radial", "weighted_l2"]

_SOLVE_TOL = 1e-10


def _nodes(lo: float, hi: float, c_l: float) -> np.ndarray:
    n = max(2, round((hi - lo) / c_l))
    return np.linspace(lo, hi, n + 1)


@dataclass(frozen=True)
class RadialMesh:
    """Conforming per-subdomain node arrays; d is the measure exponent."""

    r_intra: np.ndarray
    r_extra: np.ndarray
    d: int

    def __post_init__(self):
        if len(self.r_intra) < 3 or len(self.r_extra) < 3:
            raise ConfigurationError("each subdomain needs at least 3 nodes")
        if abs(self.r_intra[-1] - self.r_extra[0]) > 1e-12:
            raise ConfigurationError("meshes must conform at the membrane radius")

    @classmethod
    def from_geometry(cls, geometry, c_l: float) -> "RadialMesh":
        if isinstance(geometry, Annulus2D):
            return cls(_nodes(geometry.r_core, geometry.r_membrane, c_l),
                       _nodes(geometry.r_membrane, geometry.r_outer, c_l), d=1)
        if isinstance(geometry, HemispherePair3D):
            return cls(_nodes(geometry.rho_core, geometry.rho_membrane, c_l),
                       _nodes(geometry.rho_membrane, geometry.rho_outer, c_l), d=2)
        raise ConfigurationError(f"no radial mesh for {type(geometry).__name__}")

    @property
    def h_intra(self) -> float:
        return float(self.r_intra[1] - self.r_intra[0])

    @property
    def h_extra(self) -> float:
        return float(self.r_extra[1] - self.r_extra[0])


def weighted_l2(nodes: np.ndarray, values: np.ndarray, coeff: float, power: int,
                region: tuple[float, float] | None = None) -> float:
    """Trapezoid-rule L2 norm with the measure coeff * r^power dr.

    ``region`` restricts the integral to [lo, hi]; the integrand is
    interpolated linearly at clipped interval ends.
    """
    f = np.asarray(values, dtype=float) ** 2 * coeff * np.asarray(nodes) ** power
    r = np.asarray(nodes, dtype=float)
    lo, hi = (r[0], r[-1]) if region is None else region
    lo, hi = max(lo, r[0]), min(hi, r[-1])
    if hi <= lo:
        raise DomainError(f"region [{lo}, {hi}] does not overlap the mesh")
    total = 0.0
    for j in range(len(r) - 1):
        a, b = r[j], r[j + 1]
        if b <= lo or a >= hi:
            continue
        aa, bb = max(a, lo), min(b, hi)
        fa = np.interp(aa, [a, b], [f[j], f[j + 1]])
        fb = np.interp(bb, [a, b], [f[j], f[j + 1]])
        total += 0.5 * (fa + fb) * (bb - aa)
    return float(np.sqrt(total))


def _one_sided_left(sigma: float, h: float):
    """Stencil for sigma * du/dr at the left end over nodes (0, 1, 2)."""
    return np.array([-3.0, 4.0, -1.0]) * sigma / (2.0 * h)


def _one_sided_right(sigma: float, h: float):
    """Stencil for sigma * du/dr at the right end over nodes (-3, -2, -1)."""
    return np.array([1.0, -4.0, 3.0]) * sigma / (2.0 * h)


def solve_steady_radial(nodes: np.ndarray, d: int, sigma: float,
                        u_left: float, u_right: float) -> np.ndarray:
    """Steady conservative solve of (sigma r^d u')' = 0 with Dirichlet ends."""
    r = np.asarray(nodes, dtype=float)
    n = len(r) - 2
    h = r[1] - r[0]
    faces = 0.5 * (r[:-1] + r[1:]) ** d * sigma / h
    main = -(faces[:-1] + faces[1:])
    A = sp.diags([faces[1:-1], main, faces[1:-1]], [-1, 0, 1], format="csc")
    b = np.zeros(n)
    b[0] -= faces[0] * u_left
    b[-1] -= faces[-1] * u_right
    inner = spla.spsolve(A, b)
    return np.concatenate([[u_left], inner, [u_right]])


class _Assembler:
    """Sparse rows plus hooks for Dirichlet nodes referenced by stencils."""

    def __init__(self, size: int):
        self.size = size
        self.rows, self.cols, self.vals = [], [], []
        self.hooks: list[tuple[int, str, float]] = []

    def add(self, row: int, ref, coeff: float):
        kind, idx = ref
        if kind == "u":
            self.rows.append(row)
            self.cols.append(idx)
            self.vals.append(coeff)
        else:
            self.hooks.append((row, idx, coeff))

    def matrix(self) -> sp.csc_matrix:
        return sp.csc_matrix(sp.coo_matrix(
            (self.vals, (self.rows, self.cols)), shape=(self.size, self.size)))

    def boundary_rhs(self, b: np.ndarray, values: dict):
        for row, tag, coeff in self.hooks:
            b[row] -= coeff * values[tag]


def _factorize(A: sp.csc_matrix, context: str):
    try:
        return spla.splu(A)
    except RuntimeError as exc:
        raise NumericError(f"singular system in {context}: {exc}") from exc


def _check_solution(A, x, b, context: str):
    if not np.all(np.isfinite(x)):
        raise NumericError(f"{context}: solve produced non-finite values")
    resid = np.abs(A @ x - b).max()
    scale = np.abs(b).max() + 1.0
    if resid / scale > _SOLVE_TOL:
        raise NumericError(f"{context}: relative residual {resid / scale:.3e} "
                           f"exceeds {_SOLVE_TOL:.1e}")


# ---------------------------------------------------------------------------
# single cell

@dataclass
class SingleCellState:
    t: float
    u_i: np.ndarray
    u_e: np.ndarray
    v: float
    i_m: float


class SingleCellRadialSolver:
    """Diffusion backend for the annulus family."""

    def __init__(self, solution: SingleCellSolution, c_l: float):
        self.solution = solution
        self.params = solution.params
        self.mesh = RadialMesh.from_geometry(solution.geometry, c_l)
        self._cache: dict[float, tuple] = {}
        self.max_conservation_residual = 0.0

    def initial_state(self, t0: float) -> SingleCellState:
        sol = self.solution
        return SingleCellState(
            t=t0,
            u_i=np.asarray(sol.u_i_profile(1, self.mesh.r_intra, t0), dtype=float),
            u_e=np.asarray(sol.u_e_profile(self.mesh.r_extra, t0), dtype=float),
            v=float(sol.v(1, t0)),
            i_m=float(sol.i_m(1, t0)),
        )

    def relax(self, state: SingleCellState, t: float, dt: float) -> SingleCellState:
        prm = self.params
        g = self.solution.g_m(1, t + 0.5 * dt)
        v = relaxation_update(state.v, prm.cm(1), 1.0 / prm.rm(1), prm.v_rest, g, dt)
        return replace(state, v=float(v))

    def _system(self, dt: float):
        if dt in self._cache:
            return self._cache[dt]
        mesh, prm = self.mesh, self.params
        ri, re = mesh.r_intra, mesh.r_extra
        hi, he = mesh.h_intra, mesh.h_extra
        N, P = len(ri) - 1, len(re) - 1
        size = N + P + 1
        i_im = N + P

        def node_i(j):
            return ("bc", "core") if j == 0 else ("u", j - 1)

        def node_e(j):
            return ("bc", "outer") if j == P else ("u", N + j)

        asm = _Assembler(size)
        faces_i = prm.sigma_i * (0.5 * (ri[:-1] + ri[1:])) ** mesh.d / hi
        faces_e = prm.sigma_e * (0.5 * (re[:-1] + re[1:])) ** mesh.d / he
        row = 0
        for j in range(1, N):
            asm.add(row, node_i(j - 1), faces_i[j - 1])
            asm.add(row, node_i(j), -(faces_i[j - 1] + faces_i[j]))
            asm.add(row, node_i(j + 1), faces_i[j])
            row += 1
        # membrane current seen from the intracellular side: I_m = -sigma_i u'(r1)
        asm.add(row, ("u", i_im), 1.0)
        for off, c in zip((-2, -1, 0), _one_sided_right(prm.sigma_i, hi)):
            asm.add(row, node_i(N + off), c)
        row += 1
        for j in range(1, P):
            asm.add(row, node_e(j - 1), faces_e[j - 1])
            asm.add(row, node_e(j), -(faces_e[j - 1] + faces_e[j]))
            asm.add(row, node_e(j + 1), faces_e[j])
            row += 1
        # ... and from the extracellular side: I_m = -sigma_e u'(r1)
        asm.add(row, ("u", i_im), 1.0)
        for off, c in zip((0, 1, 2), _one_sided_left(prm.sigma_e, he)):
            asm.add(row, node_e(off), c)
        row += 1
        cap_row = row
        lam = prm.cm(1) / dt
        asm.add(row, node_i(N), lam)
        asm.add(row, node_e(0), -lam)
        asm.add(row, ("u", i_im), -1.0)

        A = asm.matrix()
        lu = _factorize(A, "single-cell diffusion step")
        self._cache[dt] = (A, lu, asm, N, P, cap_row)
        return self._cache[dt]

    def diffusion_step(self, state: SingleCellState, t: float, dt: float) -> SingleCellState:
        A, lu, asm, N, P, cap_row = self._system(dt)
        mesh, prm, sol = self.mesh, self.params, self.solution
        t_new = t + dt
        bc = {"core": float(sol.u_i_profile(1, mesh.r_intra[0], t_new)),
              "outer": float(sol.u_app(t_new))}

        b = np.zeros(N + P + 1)
        asm.boundary_rhs(b, bc)
        b[cap_row] += prm.cm(1) / dt * state.v

        x = lu.solve(b)
        _check_solution(A, x, b, "single-cell diffusion step")
        u_i = np.concatenate([[bc["core"]], x[:N]])
        u_e = np.concatenate([x[N:N + P], [bc["outer"]]])
        i_m = float(x[N + P])
        v_new = float(u_i[-1] - u_e[0])

        flux_i = -float(_one_sided_right(prm.sigma_i, mesh.h_intra) @ u_i[-3:])
        flux_e = -float(_one_sided_left(prm.sigma_e, mesh.h_extra) @ u_e[:3])
        cap = prm.cm(1) * (v_new - state.v) / dt
        scale = max(1.0, abs(i_m), abs(flux_i), abs(flux_e))
        resid = max(abs(flux_i - i_m), abs(flux_e - i_m), abs(cap - i_m)) / scale
        self.max_conservation_residual = max(self.max_conservation_residual, resid)

        return SingleCellState(t=t_new, u_i=u_i, u_e=u_e, v=v_new, i_m=i_m)

    def l2_error(self, state: SingleCellState, var: str,
                 region: tuple[float, float] | None = None) -> float:
        sol, mesh = self.solution, self.mesh
        t = state.t
        two_pi = 2.0 * np.pi
        if var == "u_e":
            diff = state.u_e - sol.u_e_profile(mesh.r_extra, t)
            return weighted_l2(mesh.r_extra, diff, two_pi, 1, region)
        if var in ("u_i", "u_i1"):
            diff = state.u_i - sol.u_i_profile(1, mesh.r_intra, t)
            return weighted_l2(mesh.r_intra, diff, two_pi, 1, region)
        if var in ("v", "v1"):
            r1 = sol.geometry.r_membrane
            return abs(state.v - float(sol.v(1, t))) * float(np.sqrt(two_pi * r1))
        raise DomainError(f"unknown variable {var!r} for the single-cell solver")

    @property
    def variables(self) -> tuple[str, ...]:
        return ("u_e", "u_i1", "v1")


# ---------------------------------------------------------------------------
# two coupled hemispheres

@dataclass
class TwoCellState:
    t: float
    u_i1: np.ndarray
    u_i2: np.ndarray
    u_e: np.ndarray
    v1: float
    v2: float
    w: np.ndarray          # per intracellular node radius, equatorial annulus
    i_m1: float
    i_m2: float
    i_g: np.ndarray        # gap current density at interior/membrane nodes (1..M)


class TwoCellRadialSolver:
    """Diffusion backend for the hemisphere-pair family."""

    def __init__(self, solution: TwoCellSolution, c_l: float):
        self.solution = solution
        self.params = solution.params
        self.mesh = RadialMesh.from_geometry(solution.geometry, c_l)
        self._cache: dict[float, tuple] = {}
        self.max_conservation_residual = 0.0

    def initial_state(self, t0: float) -> TwoCellState:
        sol, mesh = self.solution, self.mesh
        w0 = float(sol.w((1, 2), t0))
        return TwoCellState(
            t=t0,
            u_i1=np.asarray(sol.u_i_profile(1, mesh.r_intra, t0), dtype=float),
            u_i2=np.asarray(sol.u_i_profile(2, mesh.r_intra, t0), dtype=float),
            u_e=np.asarray(sol.u_e_profile(mesh.r_extra, t0), dtype=float),
            v1=float(sol.v(1, t0)), v2=float(sol.v(2, t0)),
            w=np.full(len(mesh.r_intra), w0),
            i_m1=float(sol.i_m(1, t0)), i_m2=float(sol.i_m(2, t0)),
            i_g=np.zeros(len(mesh.r_intra) - 1),
        )

    def relax(self, state: TwoCellState, t: float, dt: float) -> TwoCellState:
        prm, sol = self.params, self.solution
        tm = t + 0.5 * dt
        v1 = relaxation_update(state.v1, prm.cm(1), 1.0 / prm.rm(1), prm.v_rest,
                               sol.g_m(1, tm), dt)
        v2 = relaxation_update(state.v2, prm.cm(2), 1.0 / prm.rm(2), prm.v_rest,
                               sol.g_m(2, tm), dt)
        cg, rg = prm.cm_of_gap(1, 2), prm.rm_of_gap(1, 2)
        nodes = self.mesh.r_intra
        gap_pts = np.stack([nodes, np.zeros_like(nodes), np.zeros_like(nodes)], axis=-1)
        g_gap = np.asarray(sol.g_gap((1, 2), gap_pts, tm), dtype=float)
        w = relaxation_update(state.w, cg, 1.0 / rg, prm.w_rest, g_gap, dt)
        return replace(state, v1=float(v1), v2=float(v2), w=np.asarray(w))

    def _layout(self):
        return len(self.mesh.r_intra) - 1, len(self.mesh.r_extra) - 1

    def _system(self, dt: float):
        if dt in self._cache:
            return self._cache[dt]
        mesh, prm = self.mesh, self.params
        ri, re = mesh.r_intra, mesh.r_extra
        h, he = mesh.h_intra, mesh.h_extra
        M, P = self._layout()
        i_m1, i_m2 = 2 * M + P, 2 * M + P + 1
        size = 3 * M + P + 2

        def node_1(j):
            return ("bc", "core1") if j == 0 else ("u", j - 1)

        def node_2(j):
            return ("bc", "core2") if j == 0 else ("u", M + j - 1)

        def node_e(j):
            return ("bc", "outer") if j == P else ("u", 2 * M + j)

        def i_gap(j):  # j = 1..M
            return ("u", 2 * M + P + 2 + (j - 1))

        asm = _Assembler(size)
        faces_i = prm.sigma_i * (0.5 * (ri[:-1] + ri[1:])) ** 2 / h
        faces_e = prm.sigma_e * (0.5 * (re[:-1] + re[1:])) ** 2 / he
        row = 0
        for node, im, gap_sign in ((node_1, i_m1, -1.0), (node_2, i_m2, +1.0)):
            for j in range(1, M):
                asm.add(row, node(j - 1), faces_i[j - 1])
                asm.add(row, node(j), -(faces_i[j - 1] + faces_i[j]))
                asm.add(row, node(j + 1), faces_i[j])
                asm.add(row, i_gap(j), gap_sign * h * ri[j])
                row += 1
            asm.add(row, ("u", im), 1.0)
            for off, c in zip((-2, -1, 0), _one_sided_right(prm.sigma_i, h)):
                asm.add(row, node(M + off), c)
            row += 1
        for j in range(1, P):
            asm.add(row, node_e(j - 1), faces_e[j - 1])
            asm.add(row, node_e(j), -(faces_e[j - 1] + faces_e[j]))
            asm.add(row, node_e(j + 1), faces_e[j])
            row += 1
        # each hemisphere covers half the inner sphere of the shell
        asm.add(row, ("u", i_m1), 0.5)
        asm.add(row, ("u", i_m2), 0.5)
        for off, c in zip((0, 1, 2), _one_sided_left(prm.sigma_e, he)):
            asm.add(row, node_e(off), c)
        row += 1
        cap_rows = (row, row + 1)
        for node, im, cell in ((node_1, i_m1, 1), (node_2, i_m2, 2)):
            lam = prm.cm(cell) / dt
            asm.add(row, node(M), lam)
            asm.add(row, node_e(0), -lam)
            asm.add(row, ("u", im), -1.0)
            row += 1
        gap_row0 = row
        lam_g = prm.cm_of_gap(1, 2) / dt
        for j in range(1, M + 1):
            asm.add(row, node_1(j), lam_g)
            asm.add(row, node_2(j), -lam_g)
            asm.add(row, i_gap(j), -1.0)
            row += 1

        A = asm.matrix()
        lu = _factorize(A, "two-cell diffusion step")
        self._cache[dt] = (A, lu, asm, M, P, cap_rows, gap_row0)
        return self._cache[dt]

    def diffusion_step(self, state: TwoCellState, t: float, dt: float) -> TwoCellState:
        A, lu, asm, M, P, cap_rows, gap_row0 = self._system(dt)
        mesh, prm, sol = self.mesh, self.params, self.solution
        t_new = t + dt
        h, he = mesh.h_intra, mesh.h_extra
        bc = {"core1": float(sol.u_i_profile(1, mesh.r_intra[0], t_new)),
              "core2": float(sol.u_i_profile(2, mesh.r_intra[0], t_new)),
              "outer": float(sol.u_app(t_new))}

        b = np.zeros(3 * M + P + 2)
        asm.boundary_rhs(b, bc)
        b[cap_rows[0]] += prm.cm(1) / dt * state.v1
        b[cap_rows[1]] += prm.cm(2) / dt * state.v2
        lam_g = prm.cm_of_gap(1, 2) / dt
        b[gap_row0:gap_row0 + M] += lam_g * state.w[1:]

        x = lu.solve(b)
        _check_solution(A, x, b, "two-cell diffusion step")
        u_i1 = np.concatenate([[bc["core1"]], x[:M]])
        u_i2 = np.concatenate([[bc["core2"]], x[M:2 * M]])
        u_e = np.concatenate([x[2 * M:2 * M + P], [bc["outer"]]])
        i_m1, i_m2 = float(x[2 * M + P]), float(x[2 * M + P + 1])
        i_g = np.asarray(x[2 * M + P + 2:])
        v1_new = float(u_i1[-1] - u_e[0])
        v2_new = float(u_i2[-1] - u_e[0])
        w_new = u_i1 - u_i2

        flux1 = -float(_one_sided_right(prm.sigma_i, h) @ u_i1[-3:])
        flux2 = -float(_one_sided_right(prm.sigma_i, h) @ u_i2[-3:])
        flux_e = -float(_one_sided_left(prm.sigma_e, he) @ u_e[:3])
        cap1 = prm.cm(1) * (v1_new - state.v1) / dt
        cap2 = prm.cm(2) * (v2_new - state.v2) / dt
        cap_g = prm.cm_of_gap(1, 2) * (w_new[1:] - state.w[1:]) / dt
        scale = max(1.0, abs(i_m1), abs(i_m2), abs(flux1), abs(flux2), abs(flux_e),
                    float(np.max(np.abs(i_g))) if i_g.size else 0.0)
        resid = max(abs(flux1 - i_m1), abs(flux2 - i_m2),
                    abs(flux_e - 0.5 * (i_m1 + i_m2)),
                    abs(cap1 - i_m1), abs(cap2 - i_m2),
                    float(np.max(np.abs(cap_g - i_g))) if i_g.size else 0.0) / scale
        self.max_conservation_residual = max(self.max_conservation_residual, resid)

        return TwoCellState(t=t_new, u_i1=u_i1, u_i2=u_i2, u_e=u_e,
                            v1=v1_new, v2=v2_new, w=w_new,
                            i_m1=i_m1, i_m2=i_m2, i_g=i_g)

    def l2_error(self, state: TwoCellState, var: str,
                 region: tuple[float, float] | None = None) -> float:
        sol, mesh = self.solution, self.mesh
        t = state.t
        four_pi = 4.0 * np.pi
        if var == "u_e":
            diff = state.u_e - sol.u_e_profile(mesh.r_extra, t)
            return weighted_l2(mesh.r_extra, diff, four_pi, 2, region)
        if var in ("u_i1", "u_i2"):
            k = int(var[-1])
            u = state.u_i1 if k == 1 else state.u_i2
            diff = u - sol.u_i_profile(k, mesh.r_intra, t)
            return weighted_l2(mesh.r_intra, diff, 0.5 * four_pi, 2, region)
        if var in ("v1", "v2"):
            k = int(var[-1])
            v = state.v1 if k == 1 else state.v2
            rho1 = sol.geometry.rho_membrane
            return abs(v - float(sol.v(k, t))) * float(np.sqrt(0.5 * four_pi * rho1 ** 2))
        if var in ("w", "w1:2"):
            diff = state.w - float(sol.w((1, 2), t))
            return weighted_l2(mesh.r_intra, diff, 2.0 * np.pi, 1, region)
        raise DomainError(f"unknown variable {var!r} for the two-cell solver")

    @property
    def variables(self) -> tuple[str, ...]:
        return ("u_e", "u_i1", "u_i2", "v1", "v2", "w1:2")
