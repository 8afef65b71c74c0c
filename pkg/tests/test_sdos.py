import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from gapcross.dislocation import bulk_gaps_2d
from gapcross.potentials import DislocationPotential, default_potential_2d
from gapcross.sdos import box_gap_count, default_interface, fit_through_origin, surface_dos_sweep


def test_tensor_count_equals_inertia_count():
    V = DislocationPotential(default_potential_2d(), 0.25)
    win = bulk_gaps_2d(default_potential_2d(), 1 / 8)[0]
    a = box_gap_count(V, 3, win, 1 / 8, method="tensor")
    b = box_gap_count(V, 3, win, 1 / 8, method="inertia")
    assert a["count"] == b["count"]


def test_undislocated_box_count_is_small():
    V = default_potential_2d()
    win = bulk_gaps_2d(V, 1 / 8)[0]
    counts = [box_gap_count(V, n, win, 1 / 8)["count"] for n in (2, 4)]
    assert all(c >= 0 for c in counts)


def test_interface_default_uses_half_shift():
    V = default_potential_2d()
    I = default_interface(V)
    x = np.array([-0.3, 0.7])
    y = np.array([0.2, 0.2])
    assert I(x, y)[0] == pytest.approx(V(x[0] + 0.5, y[0]))
    assert I(x, y)[1] == pytest.approx(V(x[1], y[1]))


@given(st.floats(-5, 5), st.lists(st.floats(1, 50), min_size=2, max_size=8, unique=True))
def test_fit_through_origin_exact_line(c, xs):
    c_hat, se = fit_through_origin(xs, [c * x for x in xs])
    assert c_hat == pytest.approx(c, abs=1e-9)
    assert se == pytest.approx(0.0, abs=1e-7)


def test_sweep_small_sizes():
    V = DislocationPotential(default_potential_2d(), 0.25)
    win = bulk_gaps_2d(default_potential_2d(), 1 / 16)[0]
    r = surface_dos_sweep(V, win, sizes=(4, 8), h=1 / 16)
    assert len(r.rows()) == 2
    assert all(d > 0 for d in r.differenced)
    assert r.scaled_upper[0] == pytest.approx(r.raw[0] / (4 * math.log(4)))
