import numpy as np
import pytest
import scipy.linalg as sla

from gapcross.discretize import (
    EmptyDomainError,
    GridError,
    apply_box_operator,
    assemble_1d,
    assemble_box,
    assemble_disc,
    assemble_section_1d,
    assemble_strip,
    node_values,
    section_grid,
)
from gapcross.potentials import DislocationPotential, default_potential_2d, default_step_potential


def test_free_periodic_ring_eigenvalues():
    op = assemble_1d(None, (0.0, 1.0), "periodic", 0.25)
    assert np.allclose(np.sort(np.linalg.eigvalsh(op.matrix.toarray())), [0, 32, 32, 64])


def test_dirichlet_interval_matches_closed_form():
    h = 1 / 50
    op = assemble_1d(None, (0.0, 1.0), "dirichlet", h)
    w = np.sort(np.linalg.eigvalsh(op.matrix.toarray()))[:3]
    k = np.arange(1, 4)
    assert np.allclose(w, 4 / h**2 * np.sin(k * np.pi * h / 2) ** 2)


def test_bloch_phase_is_hermitian_and_shifts_spectrum():
    op = assemble_1d(None, (0.0, 1.0), ("bloch", np.pi), 1 / 20)
    A = op.matrix.toarray()
    assert np.allclose(A, A.conj().T)
    # antiperiodic: lowest eigenvalue (4/h^2) sin^2(pi h / 2)
    assert np.linalg.eigvalsh(A)[0] == pytest.approx(4 * 400 * np.sin(np.pi / 40) ** 2)


def test_section_grid_snaps_and_stretches():
    x, s, t_used, NL, hL = section_grid(0.3004, 2, 1e-3)
    assert t_used == pytest.approx(0.3) and hL == 1e-3
    assert s.sum() == pytest.approx(2 * 2 + t_used)
    x2, s2, t2, NL2, hL2 = section_grid(0.3004, 2, 1e-3, n_left=NL)
    assert t2 == 0.3004 and NL2 == NL and hL2 == pytest.approx((2 + 0.3004) / NL)


def test_section_operator_symmetric_and_continuous_in_t():
    V = default_step_potential()
    a = assemble_section_1d(V, 0.5, 2, 1e-2)
    NL = a.meta["n_left"]
    w = [np.linalg.eigvalsh(assemble_section_1d(V, t, 2, 1e-2, snap=False, n_left=NL).matrix.toarray())[:6]
         for t in (0.5, 0.5 + 1e-6)]
    assert a.symmetry_defect() == 0.0
    assert np.max(np.abs(w[0] - w[1])) < 1e-3


def test_node_values_average_across_a_jump():
    V = default_step_potential()
    v = node_values(V, np.array([0.5, 0.25]), 0.1, 0.1)
    assert v == pytest.approx([10.0, 0.0])


def test_strip_shape_and_grid_roundtrip():
    op = assemble_strip(default_potential_2d(), 0.25, 1, "periodic", 1 / 8)
    Nx, Ny = op.shape
    assert Ny == 8 and op.dimension == Nx * Ny
    g = op.to_grid(np.arange(op.dimension, dtype=float))
    assert g.shape == (Nx, Ny)


def test_box_operator_matvec_agrees_with_assembly():
    V = DislocationPotential(default_potential_2d(), 0.25)
    op = assemble_box(V, ((-1, 1), (-1, 1)), 1 / 8)
    x, y = op.meta["x"], op.meta["y"]
    X, Y = np.meshgrid(x, y, indexing="ij")
    w = np.random.default_rng(0).standard_normal(X.shape)
    assert np.allclose(apply_box_operator(w, V(X, Y), 1 / 8).ravel(), op.matrix @ w.ravel())


def test_disc_mask_and_errors():
    op = assemble_disc((0.0, 0.0), 0.4, 0.05)
    assert op.dimension > 0 and op.symmetry_defect() == 0.0
    with pytest.raises(EmptyDomainError):
        assemble_disc((0.0, 0.0), 0.4, 0.05, cut_x=-0.45)
    with pytest.raises(GridError):
        assemble_disc((0.0, 0.0), 0.1, 0.05)


def test_grid_errors():
    with pytest.raises(GridError):
        assemble_box(None, ((0, 1), (0, 1)), 0.3)
    with pytest.raises(ValueError):
        assemble_1d(None, (0, 1), "robin", 0.1)
