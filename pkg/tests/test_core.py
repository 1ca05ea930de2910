import math

import pytest
from hypothesis import assume, given, settings
import hypothesis.strategies as st

from emikit.core import (Annulus2D, CellLattice3D, ConfigurationError,
                         HemispherePair3D, ModelParams, gap_key,
                         ion_current_gap, ion_current_membrane, validate)

finite_positive = st.floats(min_value=1e-3, max_value=1e3,
                            allow_nan=False, allow_infinity=False)
potentials = st.floats(min_value=-1e3, max_value=1e3,
                       allow_nan=False, allow_infinity=False)


def uniform_params(**kw):
    defaults = dict(sigma_i=1.0, sigma_e=1.0, cells=[1], cm=1.0, rm=1.0)
    defaults.update(kw)
    return ModelParams.uniform(**defaults)


def test_gap_key_canonicalizes():
    assert gap_key(2, 1) == (1, 2)
    assert gap_key(1, 2) == (1, 2)
    with pytest.raises(ConfigurationError):
        gap_key(3, 3)


def test_gap_tables_accept_either_order():
    p = ModelParams.uniform(sigma_i=1, sigma_e=1, cells=[1, 2], gaps=[(2, 1)],
                            cm_gap=3.5, rm_gap=0.5)
    assert p.cm_of_gap(1, 2) == 3.5
    assert p.cm_of_gap(2, 1) == 3.5
    assert p.rm_of_gap(2, 1) == 0.5


def test_unknown_gap_pair_is_configuration_error():
    p = uniform_params(cells=[1, 2])
    with pytest.raises(ConfigurationError):
        ion_current_gap(1.0, p, (1, 2))


def test_membrane_current_examples():
    assert ion_current_membrane(5.0, uniform_params(v_rest=5.0), 1) == 0.0
    p = ModelParams.uniform(sigma_i=1, sigma_e=1, cells=[1], rm=1.0, v_rest=5.0)
    assert ion_current_membrane(20.0, p, 1) == 15.0
    p = ModelParams.uniform(sigma_i=1, sigma_e=1, cells=[1], rm=2.0, v_rest=0.0)
    assert ion_current_membrane(3.0, p, 1) == 1.5


def test_gap_current_examples():
    p = ModelParams.uniform(sigma_i=1, sigma_e=1, cells=[1, 2], gaps=[(1, 2)],
                            rm_gap=1.0, w_rest=0.0)
    assert ion_current_gap(0.0, p, (1, 2)) == 0.0
    assert ion_current_gap(-20.0, p, (1, 2)) == -20.0
    p = ModelParams.uniform(sigma_i=1, sigma_e=1, cells=[1, 2], gaps=[(1, 2)],
                            rm_gap=4.0, w_rest=1.0)
    assert ion_current_gap(1.0, p, (2, 1)) == 0.0


@given(rm=finite_positive, v_rest=potentials, va=potentials, vb=potentials)
@settings(max_examples=100)
def test_membrane_current_is_affine_with_root_at_rest(rm, v_rest, va, vb):
    assume(abs(va - vb) > 1e-3)
    p = ModelParams.uniform(sigma_i=1, sigma_e=1, cells=[1], rm=rm, v_rest=v_rest)
    ia = ion_current_membrane(va, p, 1)
    ib = ion_current_membrane(vb, p, 1)
    slope = (ia - ib) / (va - vb)
    assert slope == pytest.approx(1.0 / rm, rel=1e-7, abs=1e-12)
    assert ion_current_membrane(v_rest, p, 1) == 0.0


def test_validate_accepts_benchmark_annulus():
    geom = Annulus2D(3.0, 5.0, 6.0)
    assert validate(uniform_params(v_rest=5.0), geom) == []


def test_validate_rejects_unordered_radii():
    geom = Annulus2D(5.0, 3.0, 6.0)
    problems = validate(uniform_params(), geom)
    assert any("core < membrane" in m or "core" in m for m in problems)


def test_validate_rejects_bad_mms_period():
    geom = CellLattice3D(2, 2, (1.0, 1.0, 1.0), (4.75, 4.75, 1.75), (0.3, 0.5, 0.5))
    p = ModelParams.uniform(sigma_i=1, sigma_e=4, cells=range(1, 5),
                            gaps=[(1, 2), (1, 3), (2, 4), (3, 4)])
    problems = validate(p, geom)
    assert any("does not divide" in m for m in problems)


def test_validate_reports_missing_gap_entries():
    geom = HemispherePair3D(3.0, 5.0, 6.0)
    p = uniform_params(cells=[1, 2])        # no gap tables
    problems = validate(p, geom)
    assert any("gap capacitance" in m for m in problems)
    assert any("gap resistance" in m for m in problems)


@given(st.floats(allow_nan=True, allow_infinity=True),
       st.floats(allow_nan=True, allow_infinity=True))
@settings(max_examples=60)
def test_validate_is_total_over_weird_numbers(a, b):
    geom = Annulus2D(a, b, 6.0)
    p = ModelParams(sigma_i=a, sigma_e=b, cm_membrane={1: a}, rm_membrane={1: b},
                    v_rest=a, w_rest=b)
    validate(p, geom)   # must never raise


def test_lattice_numbering_and_neighbors():
    geom = CellLattice3D(2, 2, (1.0, 1.0, 1.0), (4.75, 4.75, 1.75), (0.5, 0.5, 0.5))
    assert geom.cells == (1, 2, 3, 4)
    assert geom.lattice_coords(2) == (1, 0)
    assert geom.lattice_coords(3) == (0, 1)
    assert geom.gap_pairs() == ((1, 2), (1, 3), (2, 4), (3, 4))
    assert geom.cell_center(1) == (0.0, 0.0, 0.0)
    assert geom.cell_center(4) == (1.0, 1.0, 0.0)
    assert geom.margins() == pytest.approx((1.375, 1.375, 0.375))
    lo, hi = geom.box_bounds()
    assert lo == pytest.approx((-1.875, -1.875, -0.875))
    assert hi == pytest.approx((2.875, 2.875, 0.875))


def test_lattice_must_fit_inside_box():
    geom = CellLattice3D(3, 1, (1.0, 1.0, 1.0), (2.5, 2.0, 2.0), (0.5, 0.5, 0.5))
    assert any("fit strictly inside" in m for m in geom.violations())
