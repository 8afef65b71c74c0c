import numpy as np
import pytest
import scipy.sparse as sp
from hypothesis import given, strategies as st

from gapcross import eigensolve
from gapcross.discretize import assemble_box, assemble_section_1d
from gapcross.eigensolve import (
    count_in_interval,
    eig_count_below,
    inertia_bisection,
    interior_eigs,
    ldlt_inertia,
    lowest_eigs,
    sturm_count,
    tridiag_bisection,
)
from gapcross.potentials import DislocationPotential, default_potential_2d, default_step_potential


def _tridiag(d, e):
    return np.diag(d) + np.diag(e, 1) + np.diag(e, -1)


@given(st.lists(st.floats(-5, 5), min_size=2, max_size=30), st.floats(-8, 8), st.integers(0, 2**31))
def test_sturm_count_matches_dense(d, s, seed):
    d = np.array(d)
    e = np.random.default_rng(seed).uniform(-2, 2, len(d) - 1)
    w = np.linalg.eigvalsh(_tridiag(d, e))
    if np.min(np.abs(w - s)) < 1e-9:
        return
    assert int(sturm_count(d, e, np.array([s]))[0]) == int((w < s).sum())


def test_tridiag_bisection_values():
    d = np.full(40, 2.0)
    e = np.full(39, -1.0)
    r = tridiag_bisection(d, e, (0.5, 2.5), tol=1e-12)
    w = np.linalg.eigvalsh(_tridiag(d, e))
    assert np.allclose(r.values, w[(w > 0.5) & (w < 2.5)], atol=1e-10)


@given(st.integers(0, 2**31), st.floats(-3, 3))
def test_ldlt_inertia_on_random_sparse_symmetric(seed, s):
    rng = np.random.default_rng(seed)
    M = sp.random(60, 60, density=0.08, random_state=rng)
    A = (M + M.T + sp.diags(rng.uniform(-2, 2, 60))).tocsc()
    w = np.linalg.eigvalsh(A.toarray())
    (neg, _, pos), s_used = ldlt_inertia(A, s)
    assert neg == int((w < s_used).sum()) and neg + pos == 60


def test_inertia_works_for_complex_hermitian():
    from gapcross.discretize import assemble_1d

    A = assemble_1d(default_step_potential(), (0, 1), ("bloch", 1.0), 1 / 64).matrix
    w = np.linalg.eigvalsh(A.toarray())
    for s in (5.0, 40.0, 300.0):
        assert eig_count_below(A, s) == int((w < s).sum())


def test_audit_log_records_small_counts():
    eigensolve.AUDIT.clear()
    A = assemble_section_1d(default_step_potential(), 0.3, 1, 1 / 100).matrix
    count_in_interval(A, (5.0, 30.0))
    assert len(eigensolve.AUDIT) == 2
    assert all(e["sparse"] == e["dense"] for e in eigensolve.AUDIT)


def test_interior_eigs_against_dense_box():
    A = assemble_box(DislocationPotential(default_potential_2d(), 0.25), ((-2, 2), (-2, 2)), 1 / 8).matrix
    w = np.linalg.eigvalsh(A.toarray())
    win = (-10.0, 5.0)
    r = interior_eigs(A, win, tol=1e-9)
    ref = w[(w > win[0]) & (w < win[1])]
    assert len(r.values) == len(ref)
    assert np.allclose(np.sort(r.values), ref, atol=1e-7)
    assert np.max(r.residuals) < 1e-6
    b = inertia_bisection(A, win, tol=1e-10)
    assert np.allclose(b.values, ref, atol=1e-8)


def test_interior_eigs_large_path_uses_lanczos():
    A = assemble_section_1d(default_step_potential(), 0.6, 3, 1e-3).matrix
    r = interior_eigs(A, (13.1, 25.5), tol=1e-8)
    assert r.count == count_in_interval(A, (13.1, 25.5))


def test_lowest_eigs_free_box():
    h = 1 / 16
    A = assemble_box(None, ((0, 1), (0, 1)), h).matrix
    r = lowest_eigs(A, 3, tol=1e-10)
    lam = lambda j: 4 / h**2 * np.sin(j * np.pi * h / 2) ** 2  # noqa: E731
    assert np.allclose(r.values, [2 * lam(1), lam(1) + lam(2), lam(1) + lam(2)], rtol=1e-9)


def test_seed_changes_nothing_numerically():
    A = assemble_section_1d(default_step_potential(), 0.6, 3, 1e-3).matrix
    v1 = interior_eigs(A, (13.1, 25.5), seed=1).values
    v2 = interior_eigs(A, (13.1, 25.5), seed=7).values
    assert np.allclose(v1, v2, atol=1e-8)
