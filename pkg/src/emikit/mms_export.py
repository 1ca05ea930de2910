"""CSV export of manufactured-solution fields on a structured sampling grid.

Per requested time three files are written: volume samples (one row per grid
voxel: coordinates, subdomain id, exact potential, forcing), interface samples
(membrane and gap faces with the transmembrane value and its ODE forcing), and
boundary samples (face center, outward normal, Dirichlet trace, Neumann
current).  A metadata file records geometry, parameters, times, and the
column layout.  Floats are written with full round-trip precision so parsed
values compare bitwise-equal with direct evaluator calls.
"""
from __future__ import annotations

import io
from pathlib import Path

import numpy as np

from .analytic import LatticeMmsSolution
from .cartesian import build_grid
from .verify import write_atomic

__all__ = ["export_mms", "read_csv_columns"]

FORMAT_VERSION = "emikit-mms v1"


def _fmt(x) -> str:
    return repr(float(x))


def _write_rows(path: Path, comment: str, header: list[str], columns: list) -> None:
    buf = io.StringIO()
    buf.write(f"# {comment}\n")
    buf.write(",".join(header) + "\n")
    n = len(columns[0])
    for i in range(n):
        buf.write(",".join(col[i] if isinstance(col[i], str) else _fmt(col[i])
                           for col in columns) + "\n")
    write_atomic(path, buf.getvalue())


def read_csv_columns(path) -> tuple[list[str], list[list[str]]]:
    """Header names and string-valued columns of an exported CSV."""
    lines = [ln for ln in Path(path).read_text().splitlines()
             if ln and not ln.startswith("#")]
    header = lines[0].split(",")
    cols = [[] for _ in header]
    for ln in lines[1:]:
        for c, item in zip(cols, ln.split(",")):
            c.append(item)
    return header, cols


def export_mms(solution: LatticeMmsSolution, spacing: float, times,
               outdir, prefix: str = "mms") -> list[Path]:
    """Sample every exported field of the lattice family onto CSV files."""
    outdir = Path(outdir)
    outdir.mkdir(parents=True, exist_ok=True)
    grid = build_grid(solution.geometry, spacing)
    times = [float(t) for t in times]
    prm = solution.params

    centers = grid.voxel_centers()
    sub = grid.subdomain
    written: list[Path] = []

    ids = {0: np.flatnonzero(sub == 0)}
    for k in solution.cells:
        ids[k] = np.flatnonzero(sub == k)

    for it, t in enumerate(times):
        u = np.empty(grid.n_voxels)
        f = np.empty(grid.n_voxels)
        u[ids[0]] = solution.u_e(centers[ids[0]], t)
        f[ids[0]] = solution.f_e(centers[ids[0]], t)
        for k in solution.cells:
            u[ids[k]] = solution.u_i(k, centers[ids[k]], t)
            f[ids[k]] = solution.f_i(k, centers[ids[k]], t)
        path = outdir / f"{prefix}_volume_t{it}.csv"
        _write_rows(path, f"{FORMAT_VERSION} volume t={_fmt(t)}",
                    ["x", "y", "z", "subdomain", "u", "f"],
                    [centers[:, 0], centers[:, 1], centers[:, 2],
                     [str(int(s)) for s in sub], u, f])
        written.append(path)

        kinds, cells_a, cells_b, vals, gs = [], [], [], [], []
        pts = []
        mem = grid.membrane
        for k in solution.cells:
            mask = mem.cell_a == k
            if not mask.any():
                continue
            p = mem.centers[mask]
            pts.append(p)
            kinds.extend(["membrane"] * len(p))
            cells_a.extend([str(k)] * len(p))
            cells_b.extend(["0"] * len(p))
            vals.append(np.asarray(solution.v(k, t, p)))
            gs.append(np.full(len(p), solution.g_m(k, t)))
        for k, l in solution.gap_pairs:
            mask = (grid.gap.cell_a == k) & (grid.gap.cell_b == l)
            if not mask.any():
                continue
            p = grid.gap.centers[mask]
            pts.append(p)
            kinds.extend(["gap"] * len(p))
            cells_a.extend([str(k)] * len(p))
            cells_b.extend([str(l)] * len(p))
            vals.append(np.asarray(solution.w((k, l), t, p)))
            gs.append(np.asarray(solution.g_gap((k, l), p, t), dtype=float)
                      * np.ones(len(p)))
        pts = np.concatenate(pts) if pts else np.zeros((0, 3))
        vals = np.concatenate(vals) if len(vals) else np.zeros(0)
        gs = np.concatenate(gs) if len(gs) else np.zeros(0)
        path = outdir / f"{prefix}_interfaces_t{it}.csv"
        _write_rows(path, f"{FORMAT_VERSION} interfaces t={_fmt(t)}",
                    ["x", "y", "z", "kind", "cell_a", "cell_b", "value", "g"],
                    [pts[:, 0], pts[:, 1], pts[:, 2], kinds, cells_a, cells_b,
                     vals, gs])
        written.append(path)

        bc = grid.boundary_centers
        bn = grid.boundary_normals
        u_app = np.asarray(solution.u_app(bc, t), dtype=float) * np.ones(len(bc))
        i_app = np.asarray(solution.i_app(bc, t, bn), dtype=float)
        path = outdir / f"{prefix}_boundary_t{it}.csv"
        _write_rows(path, f"{FORMAT_VERSION} boundary t={_fmt(t)}",
                    ["x", "y", "z", "nx", "ny", "nz", "u_app", "i_app"],
                    [bc[:, 0], bc[:, 1], bc[:, 2],
                     bn[:, 0], bn[:, 1], bn[:, 2], u_app, i_app])
        written.append(path)

    g = solution.geometry
    meta = io.StringIO()
    meta.write(f"format={FORMAT_VERSION}\n")
    meta.write("kind=lattice-mms\n")
    meta.write(f"nx_cells={g.nx_cells}\nny_cells={g.ny_cells}\n")
    meta.write(f"cell_dims={','.join(_fmt(x) for x in g.cell_dims)}\n")
    meta.write(f"box_dims={','.join(_fmt(x) for x in g.box_dims)}\n")
    meta.write(f"mms_periods={','.join(_fmt(x) for x in g.mms_periods)}\n")
    meta.write(f"level={_fmt(solution.family.level)}\n")
    amps = solution.family.amplitudes
    meta.write("amplitudes=" + ",".join(f"{k}:{_fmt(amps[k])}" for k in sorted(amps)) + "\n")
    meta.write(f"sigma_i={_fmt(prm.sigma_i)}\nsigma_e={_fmt(prm.sigma_e)}\n")
    meta.write(f"v_rest={_fmt(prm.v_rest)}\nw_rest={_fmt(prm.w_rest)}\n")
    for k in solution.cells:
        meta.write(f"cm[{k}]={_fmt(prm.cm(k))}\nrm[{k}]={_fmt(prm.rm(k))}\n")
    for k, l in solution.gap_pairs:
        meta.write(f"cm_gap[{k},{l}]={_fmt(prm.cm_of_gap(k, l))}\n")
        meta.write(f"rm_gap[{k},{l}]={_fmt(prm.rm_of_gap(k, l))}\n")
    meta.write(f"boundary={solution.family.boundary}\n")
    meta.write(f"spacing={_fmt(spacing)}\n")
    meta.write("times=" + ",".join(_fmt(t) for t in times) + "\n")
    meta.write("volume_columns=x,y,z,subdomain,u,f\n")
    meta.write("interface_columns=x,y,z,kind,cell_a,cell_b,value,g\n")
    meta.write("boundary_columns=x,y,z,nx,ny,nz,u_app,i_app\n")
    meta_path = outdir / f"{prefix}_meta.txt"
    write_atomic(meta_path, meta.getvalue())
    written.append(meta_path)
    return written
