import math

import pytest

import frozen as F
import oracles as O


def test_random_spectrum_edges():
    assert O.soft_edge_mp(F.RANDOM_SPECTRUM, F.RANDOM_SPECTRUM_PHI, "lower") == pytest.approx(F.RANDOM_SPECTRUM_LOWER, rel=1e-15)
    assert O.soft_edge_mp(F.RANDOM_SPECTRUM, F.RANDOM_SPECTRUM_PHI, "upper") == pytest.approx(F.RANDOM_SPECTRUM_UPPER, rel=1e-15)


def test_diag13_edges_match_closed_form():
    lo, up = O.diag13_edges()
    assert lo == pytest.approx(F.DIAG13_LOWER, abs=1e-15)
    assert up == pytest.approx(F.DIAG13_UPPER, abs=1e-15)
    assert O.soft_edge_mp([1, 3], 1, "lower") == pytest.approx(lo, abs=1e-15)
    assert O.soft_edge_mp([1, 3], 1, "upper") == pytest.approx(up, abs=1e-15)


def test_moment_and_tail_oracles():
    assert O.delta2_closed_form(0.25) == pytest.approx(F.DELTA2_TAU_QUARTER, rel=1e-15)
    assert O.gaussian_abs_moment(3) == pytest.approx(2 * math.sqrt(2 / math.pi), rel=1e-10)
    assert O.gaussian_abs_moment(3) == pytest.approx(F.GAUSSIAN_ABS_MOMENT_3, rel=1e-12)
    assert O.cube_moment(4) == pytest.approx(F.CUBE_MOMENT_4, rel=1e-12)
    assert O.chi2_tail(50, 150) == pytest.approx(F.CHI2_50_TAIL_150, rel=1e-10)


def test_scalar_law_tail():
    assert O.scalar_law_tail_sup(F.SCALAR_LAW_XM, 3) == pytest.approx(F.SCALAR_LAW_TAIL_SUP, rel=1e-12)
    assert F.SCALAR_LAW_TAIL_SUP <= 1.0
