import math
from fractions import Fraction

import numpy as np
import pytest
import scipy.special as ss
from hypothesis import given, settings, strategies as st

from gapcross.muffintin import (
    bessel_disc_eigenvalues,
    bessel_j,
    bessel_zeros,
    cut_disc_curve,
    cut_disc_eigenvalues,
    fd_disc_eigenvalues,
    finite_height_spectrum,
    isolated_disc_trend,
    rotated_gap_scan,
    rotated_geometry,
)
from gapcross.rotation import Angle


@settings(max_examples=60)
@given(st.integers(0, 8), st.floats(0.0, 40.0))
def test_bessel_against_scipy(m, x):
    assert bessel_j(m, x) == pytest.approx(ss.jv(m, x), abs=1e-11)


@pytest.mark.parametrize("m", [0, 1, 2, 5])
def test_bessel_zeros_against_scipy(m):
    assert np.allclose(bessel_zeros(m, 6), ss.jn_zeros(m, 6), atol=1e-10)


@given(st.floats(0.05, 0.49), st.floats(0.05, 0.49))
def test_disc_eigenvalues_scale_as_inverse_square_radius(r1, r2):
    a = np.array(bessel_disc_eigenvalues(r1, 6).values)
    b = np.array(bessel_disc_eigenvalues(r2, 6).values)
    assert np.allclose(a * r1**2, b * r2**2, rtol=1e-12)


def test_disc_multiplicities():
    s = bessel_disc_eigenvalues(0.4, 6)
    assert s.values[1] == s.values[2] and s.labels[1] == (1, 1)
    assert s.values[0] < s.values[1]
    assert len(s.distinct()) == 4
    with pytest.raises(ValueError):
        bessel_disc_eigenvalues(0.5, 3)


def test_fd_disc_matches_bessel():
    exact = bessel_disc_eigenvalues(0.4, 5).values
    fd = fd_disc_eigenvalues(0.4, 5).values
    assert np.max(np.abs(np.array(fd) / np.array(exact) - 1)) < 5e-3


def test_half_disc_is_an_odd_disc_mode():
    # cut through the centre: lowest value is the first m = 1 level
    r = 0.3
    v = cut_disc_eigenvalues(r, 0.5, 0.01, 1)[0]
    assert v == pytest.approx((ss.jn_zeros(1, 1)[0] / r) ** 2, rel=2e-3)


def test_cut_disc_curve_decreases():
    r = 0.3
    curve = cut_disc_curve(r, 1, t_grid=np.linspace(0.5 - r + 0.05, 0.5 + r - 0.05, 6), h_ladder=(0.04, 0.02))
    assert curve.monotone(1)
    mu1 = bessel_disc_eigenvalues(r, 1).values[0]
    assert curve.interpolate(0.5 + r, 1) == pytest.approx(mu1)
    assert all(v > mu1 for v in curve.values[:, 0])


def test_exact_cut_test_agrees_with_float_away_from_ties():
    geo = rotated_geometry(0.3, Fraction(1, 4), window=(-10, 10))
    for d in geo.discs:
        if d.side == "left" and abs(abs(d.cx) - 0.3) > 1e-9:
            assert d.cut == (abs(d.cx) < 0.3)


def test_r_theta_and_excluded_family():
    g = rotated_geometry(0.2, Fraction(1, 2), window=(-5, 5))
    assert g.r_theta == pytest.approx(1 / (2 * math.sqrt(5)))
    assert not g.excluded_family
    assert rotated_geometry(0.2, Fraction(1, 3), window=(-5, 5)).excluded_family


def test_below_r_theta_nothing_is_cut():
    r_th = 1 / (2 * math.sqrt(5))
    assert rotated_geometry(0.999 * r_th, Fraction(1, 2), window=(-20, 20)).cut_discs == []
    assert rotated_geometry(1.01 * r_th, Fraction(1, 2), window=(-20, 20)).cut_discs


def test_unrotated_geometry_has_no_cut_discs():
    assert rotated_geometry(0.3, 0.0, window=(-10, 10)).cut_discs == []
    assert rotated_gap_scan(0.3, 0.0, window=(-10, 10))["values"] == []


def test_gap_scan_values_come_from_cut_discs():
    out = rotated_gap_scan(0.3, 0.05, window=(-10, 10), h_ladder=(0.04, 0.02))
    a, b = out["gap"]
    assert all(a < v < b for v in out["values"])
    assert len(out["discs"]) == len(out["values"])
    assert all(d.cut for d in out["discs"])


def test_finite_height_unrotated_gap_is_empty():
    gap = (70.0, 110.0)
    out = finite_height_spectrum(0.3, 0.0, 800.0, window=((-1, 1), (-1, 1)), gap=gap, h=1 / 16)
    assert out["count"] == 0


def test_isolated_disc_approaches_dirichlet_value():
    d = isolated_disc_trend(0.3, heights=(50, 400), h=1 / 32)["distance"]
    assert d[1] < d[0]
