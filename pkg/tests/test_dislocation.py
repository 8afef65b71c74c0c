import numpy as np
import pytest

from gapcross.dislocation import (
    band_count_check,
    bulk_gaps_2d,
    crossing_count,
    discrete_gap,
    section_spectrum_1d,
    strip_gaps,
    track_branches,
)
from gapcross.potentials import TrigPotential2D, default_potential_2d, default_step_potential


@pytest.fixture(scope="module")
def V():
    return default_step_potential()


@pytest.mark.parametrize("t,expected", [(0.0, 6), (1.0, 7)])
def test_band_count_check_cell_count(V, t, expected):
    r = band_count_check(V, 3, 1, t)
    assert r["ok"] and r["count"] == expected


def test_discrete_gap_close_to_continuum(V):
    a, b = discrete_gap(V, 1, 1e-3)
    assert a == pytest.approx(13.01806847, rel=1e-4)
    assert b == pytest.approx(25.61824788, rel=1e-4)


def test_section_spectrum_empty_at_t0(V):
    # the t = 0 section is a whole number of cells, so gap 1 stays empty
    vals, t_used = section_spectrum_1d(V, 0.0, 2, discrete_gap(V, 1, 2e-3), h=2e-3)
    assert t_used == 0.0 and len(vals) == 0


@pytest.mark.parametrize("k", [1, 2])
def test_crossing_count_small_run(V, k):
    r = crossing_count(V, k, 2, t_steps=20, h=2e-3)
    assert r.N_k == k and r.seams == 0 and r.upward == 0


def test_reverse_flips_sign(V):
    fam = track_branches(V, 1, 2, t_steps=20, h=2e-3)
    assert crossing_count(V, 1, 2, family=fam, reverse=True).N_k == -crossing_count(V, 1, 2, family=fam).N_k


def test_branch_ends_sit_on_gap_edges(V):
    fam = track_branches(V, 1, 2, t_steps=20, h=2e-3)
    a, b = fam.gap
    for br in fam.branches:
        for end, edge in ((br.values[0], br.entry_edge), (br.values[-1], br.exit_edge)):
            if edge == "a":
                assert end == pytest.approx(a, abs=1e-4 * (b - a))
            elif edge == "b":
                assert end == pytest.approx(b, abs=1e-4 * (b - a))


def test_bulk_gap_inside_strip_gap():
    V2 = default_potential_2d()
    bulk = bulk_gaps_2d(V2, 1 / 16)
    strip = strip_gaps(V2, 1 / 16)
    assert bulk[0] == pytest.approx((-28.418365689945517, 7.881785793260393), rel=1e-9)
    lo, hi = strip[0]
    assert lo <= bulk[0][0] and hi >= bulk[0][1] - 1e-9


def test_bulk_gaps_need_separable():
    V = TrigPotential2D(0.0, ((1, 1, -10.0, 0.0),))
    with pytest.raises(ValueError):
        bulk_gaps_2d(V, 1 / 8)
