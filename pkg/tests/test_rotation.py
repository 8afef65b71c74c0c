import math
from fractions import Fraction

import pytest
from hypothesis import given, settings, strategies as st

from gapcross.potentials import default_potential_2d
from gapcross.rotation import (
    Angle,
    _exact_defects,
    find_alignment,
    orbit_frequency,
    theta_ladder,
    window_deviation,
)


def test_pythagorean_angle_has_exact_secant():
    a = Angle.from_tan(3, 4)
    assert a.sec == Fraction(5, 4) and a.kind == "rational-tan"
    assert isinstance(Angle.from_tan(1, 2).sec, float)


def test_alignment_for_three_four_five():
    w = find_alignment(Fraction(3, 4), 0.0, 0.01)
    assert (w.k, w.eta) == (4, 5) and w.defects == (0.0, 0.0)


def test_alignment_generic_angle_meets_both_conditions():
    golden = (math.sqrt(5) - 1) / 2
    w = find_alignment(math.atan(golden / 10), 0.25, 0.02, k_max=10**5)
    assert w is not None
    d1, d2, eta = _exact_defects(w.angle, w.k, 0.25)
    assert abs(d1) < 0.02 and abs(d2) < 0.02 and eta == w.eta
    # no smaller k qualifies
    for k in range(1, w.k):
        e1, e2, _ = _exact_defects(w.angle, k, 0.25)
        assert not (abs(e1) < 0.02 and abs(e2) < 0.02)


def test_alignment_absent_returns_none():
    assert find_alignment(Fraction(1, 2), 0.25, 0.01, k_max=50) is None


def _brute_visits(tan: Fraction, sec: Fraction, t: Fraction, eps: Fraction, M: int) -> int:
    def near(x, c):
        d = (x - c) % 1
        return min(d, 1 - d) < eps

    return sum(1 for m in range(M) if near(m * tan, t) and near(m * sec, 0))


@settings(max_examples=25)
@given(st.sampled_from([(3, 4), (5, 12), (8, 15), (7, 24)]), st.integers(0, 7), st.integers(1, 9),
       st.integers(1, 400))
def test_exact_orbit_matches_brute_force(pq, ti, ei, M):
    p, q = pq
    t, eps = Fraction(ti, 8), Fraction(ei, 20)
    s = orbit_frequency(Fraction(p, q), float(t), float(eps), M)
    assert s.exact
    tan = Fraction(p, q)
    sec = Angle(tan).sec
    assert s.visits == _brute_visits(tan, sec, t, Fraction(float(eps)), M)


def test_float_orbit_close_to_area_for_generic_angle():
    s = orbit_frequency(0.3, 0.25, 0.1, M=20000)
    assert not s.exact
    assert float(s.frequency) == pytest.approx(0.04, abs=0.01)


def test_theta_ladder_is_exact():
    for a in theta_ladder(0.25):
        k = Fraction(1, 4) / a.tan
        assert k.denominator == 1 and (k * a.tan) == Fraction(1, 4)


def test_window_deviation_below_lipschitz_bound():
    V = default_potential_2d()
    a = theta_ladder(0.25, ks=(200,))[0]
    out = window_deviation(V, a, 0.25, 2, eta=200, h=1 / 16, k=200)
    assert out["sup"] <= out["bound"]
