"""End-to-end verification criteria for the toolkit.

Each test implements one numbered criterion at its stated tolerance and prints
one PASS/FAIL line (visible with ``pytest -s``).  The reference error values
quoted for the ladder comparisons are final-row numbers reported by an
independent finite-element implementation of the same benchmark cases; the
solvers here use a different discretization, so those comparisons are
magnitude checks, not value equality.
"""
import functools
import math
import time

import numpy as np
import pytest

from emikit.mms_export import export_mms, read_csv_columns
from emikit.presets import get_preset
from emikit.radial import solve_steady_radial
from emikit.residuals import residual_check
from emikit.signals import TimeSignal, membrane_integral
from emikit.splitting import relaxation_update
from emikit.verify import (RefinementSchedule, run_case, run_schedule,
                           write_atomic)

EXP1_FINAL = {"u_e": 4.932e-2, "u_i1": 1.960e-1, "v1": 3.246e-1}
EXP2_FINAL = {"u_e": 3.404e-2, "u_i1": 4.701e-1, "u_i2": 2.573e-1,
              "v1": 4.182e-1, "v2": 3.174e-1, "w1:2": 1.399e-1}
EXP3_FINAL = {"u_e": 4.982e-2, "u_i1": 1.295e-2, "u_i2": 3.385e-2,
              "u_i3": 1.660e-2, "u_i4": 2.021e-2,
              "v1": 2.021e-2, "v2": 6.181e-2, "v3": 2.338e-2, "v4": 7.824e-2,
              "w1:2": 5.800e-3, "w1:3": 6.865e-3, "w2:4": 8.464e-3,
              "w3:4": 9.078e-3}


def criterion(label, name):
    def wrap(fn):
        @functools.wraps(fn)
        def run(*args, **kwargs):
            try:
                detail = fn(*args, **kwargs)
            except BaseException:
                print(f"[acceptance] {label} {name}: FAIL")
                raise
            print(f"[acceptance] {label} {name}: PASS"
                  + (f" ({detail})" if detail else ""))
        return run
    return wrap


@pytest.fixture(scope="module")
def conservation_log():
    return {}


@pytest.fixture(scope="module")
def temporal_ladder(conservation_log):
    cases = [run_case("exp1", 0.05, n_f) for n_f in (28, 56, 112, 224)]
    conservation_log["temporal"] = max(c.conservation for c in cases)
    return cases


@pytest.fixture(scope="module")
def exp1_report(conservation_log):
    report = run_schedule("exp1")
    conservation_log["exp1"] = report.conservation
    return report


@pytest.fixture(scope="module")
def exp2_report(conservation_log):
    report = run_schedule("exp2")
    conservation_log["exp2"] = report.conservation
    return report


@pytest.fixture(scope="module")
def exp3_report(conservation_log):
    report = run_schedule("exp3")
    conservation_log["exp3"] = report.conservation
    return report


@criterion("C1", "analytic residual suite")
def test_c01_analytic_residuals():
    start = time.perf_counter()
    worst = {}
    for name, times in (("exp1", (0.25, 1.0, 4.0, 7.0)),
                        ("exp2", (0.25, 1.0, 4.0, 7.0)),
                        ("exp3", (0.0, 0.5, 1.0))):
        report = residual_check(get_preset(name).solution, n_samples=350,
                                times=times, h=1e-4, seed=0)
        worst[name] = report.max_normalized
        assert report.max_normalized <= 1e-6, (name, report.format())
    elapsed = time.perf_counter() - start
    assert elapsed < 10.0
    return f"max residuals {worst}, {elapsed:.1f}s"


@criterion("C2", "sinusoidal-pulse closed form")
def test_c02_exp1_closed_form():
    sol = get_preset("exp1").solution
    tgrid = np.linspace(0.25, 7.0, 676)
    got = np.asarray(sol.v(1, tgrid))
    expect = 14 * np.exp(-tgrid) + np.cos(tgrid) - np.sin(tgrid) + 5
    worst = float(np.max(np.abs(got - expect)))
    assert worst <= 1e-12
    return f"max deviation {worst:.2e}"


@criterion("C3", "damped-cosine forms vs quadrature")
def test_c03_exp2_oracle_agreement():
    preset = get_preset("exp2")
    sol = preset.solution
    prm = preset.family.params
    rho1 = preset.family.geometry.rho_membrane
    source = preset.family.coef_a.scaled(1.0 / rho1 ** 2)
    worst = 0.0
    for t in np.linspace(0.25, 7.0, 41):
        for k, v0k in ((1, 10.0), (2, 30.0)):
            closed = sol.v(k, float(t))
            quad = membrane_integral(prm.cm(k), prm.rm(k), prm.v_rest, v0k,
                                     source, float(t), method="quadrature")
            worst = max(worst, abs(closed - quad))
    assert worst <= 1e-10
    tgrid = np.linspace(0.25, 7.0, 200)
    w = np.asarray(sol.w((1, 2), tgrid))
    assert np.max(np.abs(w + 20 * np.exp(-tgrid))) <= 1e-12
    return f"route disagreement {worst:.2e}"


@criterion("C4", "membrane-substep exactness")
def test_c04_relaxation_exactness():
    rng = np.random.default_rng(42)
    worst = 0.0
    for _ in range(100):
        c = rng.uniform(0.1, 10.0)
        r = rng.uniform(0.1, 10.0)
        rest = rng.uniform(-50.0, 50.0)
        g = rng.uniform(-50.0, 50.0)
        v0 = rng.uniform(-50.0, 50.0)
        dt = rng.uniform(1e-4, 2.0)
        got = relaxation_update(v0, c, 1.0 / r, rest, g, dt)
        eq = rest + r * g
        expect = eq + (v0 - eq) * math.exp(-dt / (c * r))
        worst = max(worst, abs(got - expect) / max(1.0, abs(expect)))
    assert worst <= 1e-13
    return f"worst relative deviation {worst:.2e}"


@criterion("C5", "temporal order of the splitting")
def test_c05_temporal_order(temporal_ladder):
    start = time.perf_counter()
    errors = [c.errors["u_e"] for c in temporal_ladder]
    n_fs = [c.n_f for c in temporal_ladder]
    slope = -float(np.polyfit(np.log(n_fs), np.log(errors), 1)[0])
    elapsed = time.perf_counter() - start
    assert abs(slope - 1.0) <= 0.15
    assert sum(c.wall_time for c in temporal_ladder) < 60.0
    return f"observed order {slope:.3f}"


@criterion("C6", "spatial order of the steady profiles")
def test_c06_spatial_order():
    for d, exact in ((1, lambda r: np.log(r / 3) / np.log(2.0)),
                     (2, lambda r: (1 / 3 - 1 / r) / (1 / 3 - 1 / 6))):
        errors = []
        for h in (0.2, 0.1, 0.05, 0.025):
            nodes = np.linspace(3.0, 6.0, round(3.0 / h) + 1)
            u = solve_steady_radial(nodes, d, 1.0, 0.0, 1.0)
            errors.append(float(np.max(np.abs(u - exact(nodes)))))
        slope = float(np.polyfit(np.log([0.2, 0.1, 0.05, 0.025]),
                                 np.log(errors), 1)[0])
        assert abs(slope - 2.0) <= 0.2, (d, errors)
    return "both measure exponents at order 2"


def _check_ladder(report, finals, *, factor_two_sided=("u_e",), w_exceptions=1):
    # per-variable monotone decrease, allowing the stated number of
    # non-monotone rows for gap variables only
    allowed = w_exceptions
    for var in report.variables:
        errs = [row.errors[var] for row in report.rows]
        for a, b in zip(errs, errs[1:]):
            if b >= a:
                assert var.startswith("w") and allowed > 0, \
                    f"{report.preset}:{var} not monotone: {errs}"
                allowed -= 1
    final = report.rows[-1].errors
    for var, ref in finals.items():
        ratio = final[var] / ref
        if var in factor_two_sided:
            assert 0.2 <= ratio <= 5.0, (report.preset, var, ratio)
        else:
            assert ratio <= 5.0, (report.preset, var, ratio)


@criterion("C7", "table-pattern reproduction")
def test_c07_convergence_tables(exp1_report, exp2_report, exp3_report):
    assert exp1_report.wall_time < 120.0
    assert exp2_report.wall_time < 120.0
    assert exp3_report.wall_time < 900.0
    _check_ladder(exp1_report, EXP1_FINAL)
    _check_ladder(exp2_report, EXP2_FINAL)
    _check_ladder(exp3_report, EXP3_FINAL)
    ratios = {p.preset: p.rows[-1].errors["u_e"] / f["u_e"]
              for p, f in ((exp1_report, EXP1_FINAL), (exp2_report, EXP2_FINAL),
                           (exp3_report, EXP3_FINAL))}
    return ("monotone ladders; final u_e ratios vs reference "
            + ", ".join(f"{k}={v:.2f}" for k, v in ratios.items())
            + f"; exp3 wall {exp3_report.wall_time:.0f}s")


@criterion("C8", "discrete current balance")
def test_c08_conservation(conservation_log, temporal_ladder, exp1_report,
                          exp2_report, exp3_report):
    assert conservation_log, "no runs recorded"
    worst = max(conservation_log.values())
    assert worst <= 1e-9, conservation_log
    return f"worst residual {worst:.2e} over {sorted(conservation_log)}"


@criterion("C9", "manufactured-solution export round-trip")
def test_c09_export_round_trip(tmp_path):
    sol = get_preset("exp3").solution
    times = (0.0, 0.5, 1.0)
    export_mms(sol, 0.125, times, tmp_path, prefix="acc")
    for it, t in enumerate(times):
        _, cols = read_csv_columns(tmp_path / f"acc_volume_t{it}.csv")
        pts = np.array([[float(a), float(b), float(c)]
                        for a, b, c in zip(cols[0], cols[1], cols[2])])
        sub = np.array([int(s) for s in cols[3]])
        u = np.array([float(s) for s in cols[4]])
        f = np.array([float(s) for s in cols[5]])
        ids = sub == 0
        assert np.array_equal(u[ids], np.asarray(sol.u_e(pts[ids], t)))
        assert np.array_equal(f[ids], np.asarray(sol.f_e(pts[ids], t)))
        for k in sol.cells:
            ids = sub == k
            assert np.array_equal(u[ids], np.asarray(sol.u_i(k, pts[ids], t)))
            assert np.array_equal(f[ids], np.asarray(sol.f_i(k, pts[ids], t)))
        _, bcols = read_csv_columns(tmp_path / f"acc_boundary_t{it}.csv")
        bpts = np.array([[float(a), float(b), float(c)]
                         for a, b, c in zip(bcols[0], bcols[1], bcols[2])])
        bnrm = np.array([[float(a), float(b), float(c)]
                         for a, b, c in zip(bcols[3], bcols[4], bcols[5])])
        i_app = np.array([float(s) for s in bcols[7]])
        assert np.array_equal(i_app, np.asarray(sol.i_app(bpts, t, bnrm)))
    amplitude = float(sol.f_e(np.zeros(3), 0.0))
    assert abs(amplitude - 192 * math.pi ** 2) <= 1e-10
    return f"bitwise equal; forcing amplitude {amplitude:.6f}"


@criterion("C10", "byte-level determinism of reports")
def test_c10_determinism(tmp_path, exp1_report, exp2_report, exp3_report,
                         temporal_ladder):
    # full radial ladders and the temporal study are re-run outright; the
    # lattice ladder re-runs its first row (the full ladder dominates the
    # suite's runtime budget and each case is covered by the same code path)
    again1 = run_schedule("exp1")
    again2 = run_schedule("exp2")
    for first, second in ((exp1_report, again1), (exp2_report, again2)):
        a = tmp_path / f"{first.preset}_a.csv"
        b = tmp_path / f"{first.preset}_b.csv"
        write_atomic(a, first.to_csv())
        write_atomic(b, second.to_csv())
        assert a.read_bytes() == b.read_bytes()

    redo = [run_case("exp1", 0.05, n_f) for n_f in (28, 56, 112, 224)]
    assert [c.errors for c in redo] == [c.errors for c in temporal_ladder]

    c_l, n_f = get_preset("exp3").schedule[0]
    first_row = run_case("exp3", c_l, n_f)
    assert first_row.errors == exp3_report.rows[0].errors
    return "reports byte-identical across repeated runs"
