"""Command-line interface.

Commands: ``eval`` (query exact fields at a point/time), ``run`` (one
numerical case with an error summary), ``convergence`` (refinement ladder,
report files), ``export-mms`` (manufactured-solution CSV bundle), and
``validate-analytic`` (finite-difference residual suites).

Exit codes: 0 success, 2 configuration/usage error, 3 numeric failure.
"""
from __future__ import annotations

import argparse
import sys
import time
from pathlib import Path

import numpy as np

from .analytic import LatticeMmsSolution
from .config import RunConfig, load_config, resolve_preset
from .core import ConfigurationError, DomainError, EmiError, FamilyViolationError, NumericError
from .mms_export import export_mms
from .presets import PRESET_NAMES
from .residuals import residual_check
from .verify import (ConvergenceReport, RefinementSchedule, emit_report,
                     run_case, run_schedule, write_atomic)

_RESIDUAL_GATE = 1e-6


class _Fmt(argparse.HelpFormatter):
    def __init__(self, prog):
        super().__init__(prog, width=96, max_help_position=30)


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="emikit", formatter_class=_Fmt,
        description="Verification toolkit for the extracellular-membrane-"
                    "intracellular model: exact solution families, reference "
                    "solvers, and convergence studies.")
    parser.add_argument("--config", metavar="FILE",
                        help="TOML configuration file; flags override its values")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("eval", formatter_class=_Fmt,
                       help="evaluate the exact fields at a point and time")
    p.add_argument("--preset", choices=PRESET_NAMES, help="bundled benchmark case")
    p.add_argument("--t", type=float, required=True, help="evaluation time")
    p.add_argument("--r", type=float, help="radius (radial presets)")
    p.add_argument("--x", type=float, help="x coordinate (lattice preset)")
    p.add_argument("--y", type=float, help="y coordinate")
    p.add_argument("--z", type=float, help="z coordinate")
    p.add_argument("--cell", type=int, help="restrict intracellular output to one cell")

    p = sub.add_parser("run", formatter_class=_Fmt,
                       help="run one refinement case and print the error summary")
    p.add_argument("--preset", choices=PRESET_NAMES)
    p.add_argument("--cl", type=float, required=True, help="characteristic length")
    p.add_argument("--nf", type=int, required=True, help="number of time steps")
    p.add_argument("--t0", type=float, help="override the start time")
    p.add_argument("--t-end", type=float, help="override the end time")
    p.add_argument("--snapshot", metavar="FILE",
                   help="write a final-state field snapshot CSV (lattice preset)")

    p = sub.add_parser("convergence", formatter_class=_Fmt,
                       help="run a refinement ladder and write report files")
    p.add_argument("--preset", choices=PRESET_NAMES)
    p.add_argument("--schedule", metavar="CL:NF,...",
                   help="override rows, e.g. 0.4:7,0.28:14")
    p.add_argument("--outdir", help="report directory (default from config)")
    p.add_argument("--formats", help="comma-separated report formats (csv,md)")
    p.add_argument("--tag", help="file-name tag (default: timestamp)")

    p = sub.add_parser("export-mms", formatter_class=_Fmt,
                       help="export manufactured-solution fields as CSV")
    p.add_argument("--preset", choices=("exp3",), help="bundled lattice case")
    p.add_argument("--spacing", type=float, help="sampling grid spacing")
    p.add_argument("--times", help="comma-separated sample times")
    p.add_argument("--outdir", help="output directory")
    p.add_argument("--prefix", help="file-name prefix")
    p.add_argument("--boundary", choices=("zero", "exact"),
                   help="Dirichlet trace variant for the lattice family")

    p = sub.add_parser("validate-analytic", formatter_class=_Fmt,
                       help="finite-difference residual suites for the exact families")
    p.add_argument("--preset", default="all",
                   help="exp1, exp2, exp3, or all (default)")
    p.add_argument("--samples", type=int, default=350, help="spatial samples per region")
    p.add_argument("--fd-step", type=float, default=1e-4, help="finite-difference step")
    p.add_argument("--seed", type=int, default=0, help="sampling seed")
    return parser


def _load_cfg(args) -> RunConfig:
    cfg = load_config(args.config) if args.config else RunConfig()
    boundary = getattr(args, "boundary", None)
    if boundary:
        cfg.exp3_boundary = boundary
    return cfg


def _cmd_eval(args, cfg: RunConfig) -> int:
    preset = resolve_preset(cfg, args.preset)
    sol = preset.solution
    t = args.t
    if sol.kind in ("single-cell", "two-cell"):
        if args.r is None:
            raise ConfigurationError("radial families need --r")
        if sol.kind == "single-cell":
            point = np.array([args.r, 0.0])
        else:
            point = np.array([args.r, 0.0, 0.0])
    else:
        if args.x is None or args.y is None or args.z is None:
            raise ConfigurationError("the lattice family needs --x, --y, and --z")
        point = np.array([args.x, args.y, args.z])

    where = sol.classify(point)
    if where is None:
        raise DomainError(f"point {point.tolist()} lies outside every subdomain")
    region, detail = where
    print(f"preset={preset.name} t={t!r} point={point.tolist()} region={region}"
          + (f" {detail}" if detail is not None else ""))

    def show(name, value):
        print(f"  {name:10s} = {float(value) + 0.0!r}")

    if region == "extracellular" or sol.kind != "lattice-mms":
        show("u_e", sol.u_e(point, t))
        show("f_e", sol.f_e(point, t))
    cells = [args.cell] if args.cell else list(sol.cells)
    for k in cells:
        if k not in sol.cells:
            raise DomainError(f"no cell {k} in this family")
        if sol.kind == "lattice-mms" and region in ("cell", "membrane", "gap"):
            in_cell = (region == "cell" and detail == k) or \
                      (region == "membrane" and detail == k) or \
                      (region == "gap" and k in detail)
            if not in_cell:
                continue
        show(f"u_i[{k}]", sol.u_i(k, point, t))
        show(f"f_i[{k}]", sol.f_i(k, point, t))
        if sol.kind == "lattice-mms":
            show(f"v[{k}]", sol.v(k, t, point))
        else:
            show(f"v[{k}]", sol.v(k, t))
            show(f"I_m[{k}]", sol.i_m(k, t))
        show(f"g[{k}]", sol.g_m(k, t))
    for pair in sol.gap_pairs:
        if sol.kind == "lattice-mms":
            if region == "gap" and tuple(sorted(detail)) == pair:
                show(f"w[{pair[0]},{pair[1]}]", sol.w(pair, t, point))
                show(f"g[{pair[0]},{pair[1]}]", sol.g_gap(pair, point, t))
        else:
            show(f"w[{pair[0]},{pair[1]}]", sol.w(pair, t))
            show(f"I_g[{pair[0]},{pair[1]}]", sol.i_gap(pair, t))
    return 0


def _cmd_run(args, cfg: RunConfig) -> int:
    preset = resolve_preset(cfg, args.preset)
    result = run_case(preset, args.cl, args.nf, t0=args.t0, t_end=args.t_end,
                      exp3_boundary=cfg.exp3_boundary)
    print(f"preset={result.preset} c_l={result.c_l!r} h_used={result.h_used!r} "
          f"n_f={result.n_f} window=[{preset.t0 if args.t0 is None else args.t0}, "
          f"{preset.t_end if args.t_end is None else args.t_end}]")
    for var, err in result.errors.items():
        print(f"  L2[{var:6s}] = {err:.6e}")
    print(f"  conservation residual = {result.conservation:.3e}")
    print(f"  wall time = {result.wall_time:.2f}s")
    if args.snapshot:
        _write_snapshot(args.snapshot, preset, result, cfg)
        print(f"  snapshot -> {args.snapshot}")
    return 0


def _write_snapshot(path, preset, result, cfg: RunConfig):
    from .cartesian import CartesianSolver
    from .splitting import SplitProblem, TimeGrid, lie_trotter_step
    sol = preset.solution
    if not isinstance(sol, LatticeMmsSolution):
        raise ConfigurationError("snapshots are available for the lattice preset only")
    solver = CartesianSolver(sol, result.h_used)
    state = solver.initial_state(preset.t0)
    grid = TimeGrid(preset.t0, preset.t_end, result.n_f)
    problem = SplitProblem(relax=solver.relax, diffuse=solver.diffusion_step,
                           state0=state, grid=grid)
    t = preset.t0
    for step in range(result.n_f):
        state = lie_trotter_step(problem, state, t, grid.dt)
        t = grid.times()[step + 1]
    centers = solver.grid.voxel_centers()
    sub = solver.grid.subdomain
    exact = np.empty(len(centers))
    ids0 = np.flatnonzero(sub == 0)
    exact[ids0] = sol.u_e(centers[ids0], state.t)
    for k in sol.cells:
        idk = np.flatnonzero(sub == k)
        exact[idk] = sol.u_i(k, centers[idk], state.t)
    lines = ["# emikit-snapshot v1", "x,y,z,subdomain,u,u_exact"]
    for p, s, u, ue in zip(centers, sub, state.u, exact):
        lines.append(f"{p[0]!r},{p[1]!r},{p[2]!r},{int(s)},{u!r},{ue!r}")
    write_atomic(path, "\n".join(lines) + "\n")


def _cmd_convergence(args, cfg: RunConfig) -> int:
    preset = resolve_preset(cfg, args.preset)
    if args.schedule:
        rows = []
        for chunk in args.schedule.split(","):
            c, n = chunk.split(":")
            rows.append((float(c), int(n)))
        schedule = RefinementSchedule(rows=tuple(rows), t0=preset.t0, t_end=preset.t_end)
    elif cfg.schedule_rows:
        schedule = RefinementSchedule(rows=tuple(cfg.schedule_rows),
                                      t0=cfg.t0 if cfg.t0 is not None else preset.t0,
                                      t_end=cfg.t_end if cfg.t_end is not None else preset.t_end)
    else:
        schedule = RefinementSchedule.for_preset(preset)

    def progress(result):
        print(f"  c_l={result.c_l:<8g} n_f={result.n_f:<5d} "
              f"[{result.wall_time:6.1f}s]  "
              + "  ".join(f"{v}={e:.3e}" for v, e in result.errors.items()))

    print(f"convergence study: {preset.name}, {len(schedule.rows)} rows, "
          f"window [{schedule.t0}, {schedule.t_end}]")
    report = run_schedule(preset, schedule, exp3_boundary=cfg.exp3_boundary,
                          progress=progress)
    outdir = Path(args.outdir or cfg.output_dir)
    outdir.mkdir(parents=True, exist_ok=True)
    formats = tuple((args.formats or ",".join(cfg.formats)).split(","))
    tag = args.tag or cfg.tag or time.strftime("%Y%m%d-%H%M%S")
    for fmt in formats:
        ext = "md" if fmt in ("md", "markdown") else fmt
        path = outdir / f"{preset.name}_{tag}.{ext}"
        write_atomic(path, emit_report(report, fmt))
        print(f"wrote {path}")
    print(report.to_markdown())
    return 0


def _cmd_export(args, cfg: RunConfig) -> int:
    preset = resolve_preset(cfg, args.preset)
    sol = preset.solution
    if not isinstance(sol, LatticeMmsSolution):
        raise ConfigurationError("export-mms needs the lattice family")
    spacing = args.spacing if args.spacing is not None else cfg.export_spacing
    times = (tuple(float(t) for t in args.times.split(","))
             if args.times else cfg.export_times)
    outdir = args.outdir or cfg.output_dir
    prefix = args.prefix or cfg.export_prefix
    written = export_mms(sol, spacing, times, outdir, prefix=prefix)
    for path in written:
        print(f"wrote {path}")
    return 0


def _cmd_validate(args, cfg: RunConfig) -> int:
    names = PRESET_NAMES if args.preset == "all" else (args.preset,)
    worst = 0.0
    for name in names:
        preset = resolve_preset(cfg, name)
        times = (0.25, 1.0, 4.0, 7.0) if name in ("exp1", "exp2") else (0.0, 0.5, 1.0)
        report = residual_check(preset.solution, n_samples=args.samples,
                                times=times, h=args.fd_step, seed=args.seed)
        print(f"== {name}: max normalized residual {report.max_normalized:.3e}")
        print(report.format())
        worst = max(worst, report.max_normalized)
    if worst > _RESIDUAL_GATE:
        raise NumericError(
            f"residuals exceed the gate: {worst:.3e} > {_RESIDUAL_GATE:.1e}")
    print(f"all residuals within {_RESIDUAL_GATE:.1e}")
    return 0


def main(argv=None) -> int:
    parser = _build_parser()
    args = parser.parse_args(argv)
    try:
        cfg = _load_cfg(args)
        if args.command == "eval":
            return _cmd_eval(args, cfg)
        if args.command == "run":
            return _cmd_run(args, cfg)
        if args.command == "convergence":
            return _cmd_convergence(args, cfg)
        if args.command == "export-mms":
            return _cmd_export(args, cfg)
        if args.command == "validate-analytic":
            return _cmd_validate(args, cfg)
        raise ConfigurationError(f"unknown command {args.command!r}")
    except (ConfigurationError, DomainError, FamilyViolationError, FileNotFoundError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except NumericError as exc:
        print(f"numeric failure: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
