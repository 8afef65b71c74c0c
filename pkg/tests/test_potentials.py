import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from gapcross.potentials import (
    DislocationPotential,
    InterfacePotential,
    MuffinTinPotential,
    RotatedPotential,
    ShiftedPotential,
    TrigPotential1D,
    TrigPotential2D,
    default_potential_2d,
    default_step_potential,
    make_step_potential,
    split_separable,
)

unit = st.floats(0.0, 1.0, allow_nan=False)


def test_step_levels_and_periodicity():
    V = default_step_potential()
    assert V(np.array([0.0, 0.25, 0.5, 0.75, 1.25, -0.25])).tolist() == [0, 0, 20, 20, 0, 20]
    assert V.minimum() == 0.0
    assert V.segments() == [(0.5, 0.0), (0.5, 20.0)]


def test_step_partition_errors():
    with pytest.raises(ValueError, match="gap in partition"):
        make_step_potential([((0.0, 0.4), 1.0), ((0.5, 1.0), 2.0)])
    with pytest.raises(ValueError, match="overlaps"):
        make_step_potential([((0.0, 0.6), 1.0), ((0.5, 1.0), 2.0)])
    with pytest.raises(ValueError, match="ends at"):
        make_step_potential([((0.0, 0.5), 1.0)])


@given(st.floats(-3, 3), st.floats(0, 2), st.floats(0, 2))
def test_step_integral_is_additive(a, l1, l2):
    V = default_step_potential()
    b, c = a + l1, a + l1 + l2
    assert V.integral(a, c) == pytest.approx(V.integral(a, b) + V.integral(b, c), abs=1e-9)


@given(st.floats(-3, 3))
def test_step_integral_over_period_is_mean(a):
    assert default_step_potential().integral(a, a + 1.0) == pytest.approx(10.0, abs=1e-9)


@given(unit, st.floats(-2, 2), st.floats(-2, 2))
def test_dislocation_pieces(t, x, y):
    V = default_potential_2d()
    W = DislocationPotential(V, t)
    expect = V(x + t, y) if x < 0 else V(x, y)
    assert W(x, y) == pytest.approx(float(expect))


@given(st.floats(-2, 2), st.floats(-2, 2))
def test_dislocation_endpoints_equal_base(x, y):
    # t = 0 and t = 1 both give back the periodic potential
    V = default_potential_2d()
    for t in (0.0, 1.0):
        assert DislocationPotential(V, t)(x, y) == pytest.approx(float(V(x, y)), abs=1e-9)


def test_dislocation_integral_matches_quadrature():
    W = DislocationPotential(default_step_potential(), 0.3)
    xs = np.linspace(-1.7, 0.9, 260001)
    quad = float(np.sum(0.5 * (W(xs)[1:] + W(xs)[:-1]) * np.diff(xs)))
    assert W.integral(-1.7, 0.9) == pytest.approx(quad, abs=1e-3)


def test_rotation_identity_and_right_half():
    V = default_potential_2d()
    R0 = RotatedPotential(V, 0.0)
    x, y = np.meshgrid(np.linspace(-2, 2, 9), np.linspace(-2, 2, 9))
    assert np.allclose(R0(x, y), V(x, y))
    R = RotatedPotential(V, 0.3)
    right = x >= 0
    assert np.allclose(R(x, y)[right], V(x, y)[right])
    with pytest.raises(ValueError):
        RotatedPotential(V, math.pi / 2)


def test_separable_split_of_default_2d():
    vx, vy = split_separable(default_potential_2d())
    x = np.linspace(0, 1, 7)
    assert np.allclose(vx(x), -40 * np.cos(2 * np.pi * x))
    assert np.allclose(vy(x), -40 * np.cos(2 * np.pi * x))
    assert split_separable(TrigPotential2D(terms=((1, 1, 1.0, 0.0),))) is None


def test_shifted_and_interface():
    V = default_potential_2d()
    I = InterfacePotential(ShiftedPotential(V, 0.5, 0.0), V)
    assert I(-0.25, 0.0) == pytest.approx(float(V(0.25, 0.0)))
    assert I(0.25, 0.0) == pytest.approx(float(V(0.25, 0.0)))
    assert split_separable(I) is not None


def test_muffin_tin_inside_and_infinite_height():
    M = MuffinTinPotential(0.3, (0.5, 0.5), 5.0)
    assert M(0.5, 0.5) == 0.0 and M(0.0, 0.0) == 5.0 and M(3.5, -1.5) == 0.0
    with pytest.raises(ValueError):
        MuffinTinPotential(0.3)(0.0, 0.0)
    with pytest.raises(ValueError):
        MuffinTinPotential(0.6)


def test_trig_bounds():
    V = TrigPotential1D(1.0, ((1, 2.0),), ((2, 0.5),))
    assert V.bound == pytest.approx(3.5)
    assert V.lipschitz_constant == pytest.approx(2 * np.pi * 2 + 4 * np.pi * 0.5)
    assert V.minimum() <= float(V(np.array([0.5]))[0])
