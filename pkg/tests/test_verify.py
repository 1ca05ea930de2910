import math

import numpy as np
import pytest

from emikit.core import ConfigurationError
from emikit.presets import get_preset
from emikit.verify import (ConvergenceReport, RefinementSchedule, emit_report,
                           nearest_admissible, observed_order, parse_report,
                           run_case, run_schedule, temporal_order_study)


def test_observed_order_examples():
    assert observed_order(0.4, 0.1, 2.0) == pytest.approx(2.0)
    got = observed_order(9.035e-1, 4.164e-1, 2.0)
    assert got == pytest.approx(math.log(9.035 / 4.164) / math.log(2), abs=1e-12)
    assert got == pytest.approx(1.12, abs=5e-3)
    assert observed_order(0.3, 0.3, 2.0) == pytest.approx(0.0)
    assert observed_order(0.0, 0.1, 2.0) is None
    assert observed_order(0.1, -0.1, 2.0) is None
    assert observed_order(0.1, 0.05, 1.0) is None


def test_nearest_admissible_snapping():
    admissible = (0.125, 0.0625, 0.03125)
    assert nearest_admissible(0.14, admissible) == 0.125
    assert nearest_admissible(0.10, admissible) == 0.125
    assert nearest_admissible(0.07, admissible) == 0.0625
    assert nearest_admissible(0.049, admissible) == 0.0625
    assert nearest_admissible(0.035, admissible) == 0.03125
    assert nearest_admissible(0.2, ()) == 0.2


def test_schedule_must_refine_strictly():
    with pytest.raises(ConfigurationError):
        RefinementSchedule(rows=((0.2, 10), (0.2, 20)), t0=0.0, t_end=1.0)
    with pytest.raises(ConfigurationError):
        RefinementSchedule(rows=((0.2, 10), (0.1, 10)), t0=0.0, t_end=1.0)
    with pytest.raises(ConfigurationError):
        RefinementSchedule(rows=(), t0=0.0, t_end=1.0)


def test_zero_width_window_reproduces_initial_data():
    result = run_case("exp1", 0.2, 1, t_end=0.25)
    assert all(err <= 1e-12 for err in result.errors.values())


def test_case_errors_match_direct_solver_run():
    result = run_case("exp1", 0.4, 7)
    assert set(result.errors) == {"u_e", "u_i1", "v1"}
    assert result.h_used == 0.4
    assert result.conservation < 1e-9
    assert result.errors["u_e"] == pytest.approx(0.6269, rel=1e-2)


def test_exp2_truncated_region_is_applied():
    # against an untruncated norm the intracellular error is strictly larger
    full = run_case("exp2", 0.4, 10)
    from emikit.radial import TwoCellRadialSolver
    from emikit.splitting import SplitProblem, TimeGrid, lie_trotter_step
    preset = get_preset("exp2")
    solver = TwoCellRadialSolver(preset.solution, 0.4)
    state = solver.initial_state(preset.t0)
    grid = TimeGrid(preset.t0, preset.t_end, 10)
    problem = SplitProblem(relax=solver.relax, diffuse=solver.diffusion_step,
                           state0=state, grid=grid)
    t = preset.t0
    for step in range(10):
        state = lie_trotter_step(problem, state, t, grid.dt)
        t = grid.times()[step + 1]
    untruncated = solver.l2_error(state, "u_i1")
    assert full.errors["u_i1"] < untruncated


def _tiny_exp1_report():
    schedule = RefinementSchedule(rows=((0.4, 7), (0.28, 14)), t0=0.25, t_end=7.0)
    return run_schedule("exp1", schedule)


def test_report_round_trip_is_lossless():
    report = _tiny_exp1_report()
    text = report.to_csv()
    assert parse_report(text) == report
    # repeated emission is reproducible
    assert text == _tiny_exp1_report().to_csv()


def test_report_csv_shape_for_full_ladder():
    report = run_schedule("exp1")
    lines = [ln for ln in report.to_csv().splitlines()
             if ln and not ln.startswith("#") and not ln.startswith("preset,")]
    assert len(lines) == 5 * 3
    orders = report.orders()
    assert len(orders["u_e"]) == 4
    assert all(o is not None for o in orders["u_e"])


def test_empty_rows_rejected_but_header_only_emission_possible():
    report = ConvergenceReport(preset="exp1", t0=0.25, t_end=7.0,
                               solver="radial-single", variables=("u_e",),
                               rows=(), conservation=0.0)
    text = report.to_csv()
    assert text.splitlines()[-1] == "preset,c_l,n_f,variable,l2_error,observed_order"
    assert report.to_markdown().startswith("### Convergence report")


def test_emit_report_formats():
    report = _tiny_exp1_report()
    assert emit_report(report, "csv") == report.to_csv()
    assert emit_report(report, "markdown") == report.to_markdown()
    with pytest.raises(ConfigurationError):
        emit_report(report, "xml")


def test_parse_report_rejects_garbage():
    with pytest.raises(ConfigurationError):
        parse_report("no header here\n")


def test_exp3_case_records_substitution():
    result = run_case("exp3", 0.14, 2, t_end=0.1)
    assert result.h_used == 0.125
    report = ConvergenceReport(preset="exp3", t0=0.0, t_end=0.1,
                               solver="cartesian-lattice",
                               variables=tuple(result.errors),
                               rows=(tuple(),), conservation=0.0)
    # substitutions survive the CSV round trip
    from emikit.verify import ReportRow
    row = ReportRow(c_l=0.14, n_f=2, h_used=0.125, errors=result.errors)
    report = ConvergenceReport(preset="exp3", t0=0.0, t_end=0.1,
                               solver="cartesian-lattice",
                               variables=tuple(result.errors),
                               rows=(row,), conservation=result.conservation)
    text = report.to_csv()
    assert "# substitution c_l=0.14 h=0.125" in text
    assert parse_report(text) == report


def test_temporal_order_study_on_coarse_ladder():
    errors, slope = temporal_order_study("exp1", c_l=0.1, n_fs=(8, 16, 32))
    assert all(a > b for a, b in zip(errors, errors[1:]))
    assert slope == pytest.approx(1.0, abs=0.2)
