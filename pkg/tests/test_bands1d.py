import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from gapcross.bands1d import (
    DegenerateGapError,
    GapIndexError,
    band_structure,
    bloch_oracle_edges,
    discriminant,
    locate_gap,
)
from gapcross.potentials import TrigPotential1D, default_step_potential, make_step_potential

# frozen from an independent run; the FD oracle below re-derives them
STEP_EDGES = [8.01070108, 13.01806847, 25.61824788, 48.8480766, 51.28296749]


def test_step_potential_edges_frozen():
    bs = band_structure(default_step_potential(), 60.0)
    assert np.allclose(bs.edges()[:5], STEP_EDGES, rtol=1e-8)
    assert locate_gap(bs, 1) == pytest.approx((13.01806847, 25.61824788))


def test_step_edges_match_fd_oracle():
    bs = band_structure(default_step_potential(), 60.0)
    oracle = bloch_oracle_edges(default_step_potential(), 5)
    assert np.max(np.abs(np.array(bs.edges()[:5]) - oracle) / oracle) < 1e-6


def test_trig_potential_edges_match_fd_oracle():
    V = TrigPotential1D(0.0, ((1, 8.0),))
    bs = band_structure(V, 60.0)
    oracle = bloch_oracle_edges(V, 6)
    assert np.allclose(bs.edges()[:6], oracle, rtol=1e-6)


def test_free_particle_gaps_are_closed():
    V = make_step_potential([((0, 1), 0.0)])
    bs = band_structure(V, 50.0)
    assert bs.open_gaps() == []
    assert bs.bands[0][0] == pytest.approx(0.0, abs=1e-8)
    assert bs.bands[0][1] == pytest.approx(math.pi**2, rel=1e-8)
    with pytest.raises(DegenerateGapError):
        locate_gap(bs, 1)
    with pytest.raises(GapIndexError):
        locate_gap(bs, 40)


def test_free_discriminant_closed_form():
    V = make_step_potential([((0, 1), 0.0)])
    E = np.array([1.0, 10.0, 55.5])
    assert np.allclose(discriminant(V, E), 2 * np.cos(np.sqrt(E)))


@settings(max_examples=8)
@given(st.floats(0.5, 30.0), st.floats(0.1, 0.9))
def test_edges_ordered_and_discriminant_at_edges(v, w):
    V = make_step_potential([((0, w), v), ((w, 1), 0.0)])
    bs = band_structure(V, 40.0)
    e = bs.edges()
    assert all(x <= y + 1e-9 for x, y in zip(e, e[1:]))
    for g in bs.open_gaps():
        assert abs(abs(discriminant(V, g.lower)) - 2) < 1e-6
        assert abs(abs(discriminant(V, g.upper)) - 2) < 1e-6
