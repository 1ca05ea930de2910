import numpy as np
import pytest

from emikit.analytic import MmsFamily, build_mms
from emikit.core import DomainError
from emikit.presets import get_preset
from emikit.residuals import residual_check

RADIAL_TIMES = (0.25, 1.0, 4.0, 7.0)
MMS_TIMES = (0.0, 0.5, 1.0)


def test_sinusoidal_family_residuals_small():
    report = residual_check(get_preset("exp1").solution, n_samples=150,
                            times=RADIAL_TIMES, h=1e-4, seed=1)
    assert report.max_normalized <= 1e-6
    # the unforced interior balance is also small in absolute terms
    assert report.entries["poisson_e"].max_abs <= 1e-6
    assert report.entries["poisson_i"].max_abs <= 1e-6
    assert report.entries["jump_v"].max_abs <= 1e-12


def test_damped_cosine_family_residuals_small():
    report = residual_check(get_preset("exp2").solution, n_samples=150,
                            times=RADIAL_TIMES, h=1e-4, seed=2)
    assert report.max_normalized <= 1e-6
    assert report.entries["jump_w"].max_abs <= 1e-12
    assert "gap_ode" in report.entries


def test_lattice_family_interior_residual_relative():
    report = residual_check(get_preset("exp3").solution, n_samples=150,
                            times=MMS_TIMES, h=1e-4, seed=3)
    assert report.entries["poisson_e"].normalized <= 1e-5
    assert report.entries["poisson_i"].normalized <= 1e-5
    assert report.max_normalized <= 1e-6


def test_zero_solution_has_exactly_zero_residuals():
    preset = get_preset("exp3")
    fam = MmsFamily(params=preset.family.params, geometry=preset.family.geometry,
                    amplitudes={k: 0.0 for k in range(1, 5)}, level=0.0)
    report = residual_check(build_mms(fam), n_samples=60, times=(0.0, 1.0), seed=4)
    assert report.max_normalized == 0.0
    for entry in report.entries.values():
        assert entry.max_abs == 0.0


def test_report_formatting_lists_every_equation():
    report = residual_check(get_preset("exp2").solution, n_samples=40,
                            times=(0.5,), seed=5)
    text = report.format()
    for name in ("poisson_e", "poisson_i", "membrane_ode", "gap_ode",
                 "flux_membrane", "flux_gap", "jump_v", "jump_w"):
        assert name in text


def test_unsupported_solution_type_rejected():
    with pytest.raises(DomainError):
        residual_check(object(), n_samples=10)


def test_residuals_deterministic_for_fixed_seed():
    sol = get_preset("exp1").solution
    a = residual_check(sol, n_samples=50, times=(0.5, 2.0), seed=9)
    b = residual_check(sol, n_samples=50, times=(0.5, 2.0), seed=9)
    assert a.entries == b.entries
