import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from qillum import ChannelParams, SceneGeometry, overlap_coefficients
from qillum.discrimination import pe_bound_from_exponent
from qillum.fock_oracle import pc_count_moments_fock, qi_hypothesis_fock
from qillum.pc_receiver import (
    StatisticMoments,
    pc_error_exponent,
    pc_error_probability,
    pc_statistic_moments,
    pc_threshold,
)
from qillum.sweep import transmitter_bound


def test_h1_mean_is_zero(ref_point):
    mom = pc_statistic_moments(*ref_point, m_modes=1)
    assert abs(mom.mean_h1) <= 1e-12
    assert mom.mean_h2 > mom.mean_h1


@given(st.floats(1e-4, 1.0), st.floats(1e-4, 2.0), st.floats(0.0, 30.0), st.floats(0.02, 2.0))
@settings(max_examples=50, deadline=None)
def test_h2_mean_closed_form(kappa, n_s, n_b, frac):
    ch = ChannelParams(kappa, n_s, n_b)
    geom = SceneGeometry.from_rayleigh(frac)
    b = overlap_coefficients(geom).b
    mom = pc_statistic_moments(ch, geom, m_modes=1)
    expected = 2 * b * math.sqrt(kappa) * math.sqrt(n_s * (n_s + 1))
    assert mom.mean_h2 == pytest.approx(expected, rel=1e-10, abs=1e-15)
    assert mom.mean_h1 == 0.0
    assert pc_error_exponent(ch, geom) > 0


def test_kappa_zero():
    ch = ChannelParams(0.0, 0.02, 0.3)
    geom = SceneGeometry.from_rayleigh(0.5)
    mom = pc_statistic_moments(ch, geom, m_modes=1)
    assert mom.mean_h1 == mom.mean_h2 == 0.0
    assert mom.var_h1 == pytest.approx(mom.var_h2, rel=1e-14)
    assert pc_error_exponent(ch, geom) == 0.0
    assert pc_error_probability(mom) == 0.5


@pytest.mark.parametrize("m", [1, 10, 1000])
def test_moments_linear_in_m(ref_point, m):
    one = pc_statistic_moments(*ref_point, m_modes=1)
    many = pc_statistic_moments(*ref_point, m_modes=m)
    for field in ("mean_h1", "mean_h2", "var_h1", "var_h2"):
        assert getattr(many, field) == pytest.approx(m * getattr(one, field), rel=1e-14, abs=1e-300)


def test_error_probability_limits():
    assert pc_error_probability(StatisticMoments(1.0, 1.0, 2.0, 3.0)) == 0.5
    assert pc_error_probability(StatisticMoments(0.0, 1e3, 1.0, 1.0)) == 0.0
    # d = 1: Pe = erfc(1/sqrt 2)/2
    assert pc_error_probability(StatisticMoments(0.0, 2.0, 1.0, 1.0)) == pytest.approx(0.15865525393145707)
    with pytest.raises(ValueError):
        StatisticMoments(0.0, 1.0, 0.0, 1.0)


def test_threshold_between_means():
    mom = StatisticMoments(0.0, 3.0, 1.0, 4.0)
    assert pc_threshold(mom) == pytest.approx(1.0)


@pytest.mark.parametrize(
    "kappa, n_s, n_b, frac",
    [(0.01, 0.01, 20.0, 0.5), (0.1, 0.05, 0.5, 0.5), (1e-3, 1e-3, 100.0, 0.05), (0.5, 1.0, 1.0, 1.0), (0.2, 0.1, 0.0, 0.3)],
)
def test_pc_exponent_below_qcb(kappa, n_s, n_b, frac):
    ch = ChannelParams(kappa, n_s, n_b)
    geom = SceneGeometry.from_rayleigh(frac)
    r_qi = transmitter_bound("qi", ch, geom).exponent
    assert pc_error_exponent(ch, geom) <= r_qi + 1e-12


def test_pc_curve_above_qi_bound_at_large_m(ref_point):
    # the QCB is an upper bound on the optimal Pe, not a lower bound, so a
    # Gaussian-approximated receiver can undercut it at small M; the exponent
    # ordering only fixes the large-M behaviour
    ch, geom = ref_point
    r_qi = transmitter_bound("qi", ch, geom).exponent
    per_mode = pc_statistic_moments(ch, geom, m_modes=1)
    for m in np.logspace(7, 9, 9):
        m = int(m)
        assert pc_error_probability(per_mode.scaled(m)) > pe_bound_from_exponent(r_qi, m)


@pytest.mark.parametrize(
    "kappa, n_s, n_b, frac",
    [(0.05, 0.02, 0.2, 0.5), (0.1, 0.05, 0.1, 0.25), (0.1, 0.03, 0.0, 1.0)],
)
def test_moments_match_fock(kappa, n_s, n_b, frac):
    ch = ChannelParams(kappa, n_s, n_b)
    geom = SceneGeometry.from_rayleigh(frac)
    mom = pc_statistic_moments(ch, geom, m_modes=1)
    for h, mean, var in ((1, mom.mean_h1, mom.var_h1), (2, mom.mean_h2, mom.var_h2)):
        f_mean, f_var = pc_count_moments_fock(qi_hypothesis_fock(ch, geom, h))
        assert abs(f_mean - mean) <= 1e-6
        assert abs(f_var - var) <= 1e-6
