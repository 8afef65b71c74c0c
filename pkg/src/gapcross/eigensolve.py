"""Symmetric eigensolvers: Sturm bisection, inertia counts, shift-invert Lanczos.

Inertia of ``A - sI`` comes from an LU factorization run in symmetric
mode (diagonal pivots only, symmetric fill-reducing ordering), which is
an LDL^T in disguise: with ``perm_r == perm_c`` the diagonal of ``U``
equals ``D`` and Sylvester's law gives the number of eigenvalues below
``s`` as the count of negative pivots.

Small counts (dimension <= ``AUDIT_DIM``) are checked against a dense
solve and logged in ``AUDIT``; the acceptance suite inspects that log.
"""
from __future__ import annotations

import hashlib
import logging
from collections import OrderedDict
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg as sla
import scipy.sparse as sp
import scipy.sparse.linalg as spl

log = logging.getLogger(__name__)

__all__ = [
    "EigenResult",
    "FactorizationError",
    "StagnationError",
    "sturm_count",
    "tridiag_bisection",
    "ldlt_inertia",
    "eig_count_below",
    "count_in_interval",
    "interior_eigs",
    "inertia_bisection",
    "lowest_eigs",
    "clusters",
    "AUDIT",
    "AUDIT_DIM",
    "set_audit",
    "set_seed",
]

AUDIT_DIM = 2000
AUDIT: list[dict] = []
_audit_on = True
_seed = 0
_dense_cache: OrderedDict = OrderedDict()


def set_seed(seed: int) -> None:
    """Default Lanczos start-vector seed for calls that do not pass one."""
    global _seed
    _seed = int(seed) % 2**64


def set_audit(enabled: bool) -> None:
    global _audit_on
    _audit_on = bool(enabled)


class FactorizationError(RuntimeError):
    pass


class StagnationError(RuntimeError):
    """Lanczos failed to find every certified eigenvalue; carries partial results."""

    def __init__(self, msg, partial=None):
        super().__init__(msg)
        self.partial = partial


@dataclass
class EigenResult:
    values: np.ndarray
    vectors: np.ndarray | None = None
    residuals: np.ndarray | None = None
    certificate: tuple | None = None  # (count below a, count below b)
    window: tuple | None = None
    notes: list = field(default_factory=list)

    @property
    def count(self) -> int:
        return len(self.values)

    def clusters(self, tol: float) -> list[list[float]]:
        return clusters(self.values, tol)


def clusters(values, tol: float) -> list[list[float]]:
    """Group sorted values whose consecutive gaps are below 10 tol."""
    out: list[list[float]] = []
    for v in np.sort(np.asarray(values, dtype=float)):
        if out and v - out[-1][-1] < 10 * tol:
            out[-1].append(float(v))
        else:
            out.append([float(v)])
    return out


# -- tridiagonal -------------------------------------------------------------

def sturm_count(d, e, shifts) -> np.ndarray:
    """Number of eigenvalues strictly below each shift (symmetric tridiagonal)."""
    d = np.asarray(d, dtype=float)
    e2 = np.asarray(e, dtype=float) ** 2
    s = np.atleast_1d(np.asarray(shifts, dtype=float))
    scale = max(np.abs(d).max(initial=0.0), np.sqrt(e2.max(initial=0.0)), 1.0)
    pivmin = np.finfo(float).tiny / np.finfo(float).eps * scale
    count = np.zeros(s.shape, dtype=np.int64)
    q = d[0] - s
    q = np.where(np.abs(q) < pivmin, -pivmin, q)
    count += q < 0
    for i in range(1, len(d)):
        q = d[i] - s - e2[i - 1] / q
        q = np.where(np.abs(q) < pivmin, -pivmin, q)
        count += q < 0
    return count


def tridiag_bisection(d, e, window, tol: float = 1e-10) -> EigenResult:
    """All eigenvalues of a symmetric tridiagonal matrix inside ``window``."""
    d = np.asarray(d, dtype=float)
    e = np.asarray(e, dtype=float)
    a, b = map(float, window)
    if not b > a:
        raise ValueError("empty window")
    notes = []

    def nudge(x, outward):
        # an eigenvalue sitting on the endpoint would make the count ambiguous
        lo, hi = sturm_count(d, e, [x - tol, x + tol])
        if lo != hi:
            notes.append(f"endpoint {x!r} nudged by {outward * 2 * tol:+g}")
            return x + outward * 2 * tol
        return x

    a, b = nudge(a, -1), nudge(b, +1)
    na, nb = sturm_count(d, e, [a, b])
    m = int(nb - na)
    if m == 0:
        return EigenResult(np.empty(0), certificate=(int(na), int(nb)), window=(a, b), notes=notes)
    # bracket eigenvalue na + j for j = 0..m-1 simultaneously
    lo = np.full(m, a)
    hi = np.full(m, b)
    idx = na + np.arange(m)
    while (hi - lo).max() > tol:
        mid = 0.5 * (lo + hi)
        c = sturm_count(d, e, mid)
        below = c > idx
        hi = np.where(below, mid, hi)
        lo = np.where(below, lo, mid)
    vals = 0.5 * (lo + hi)
    return EigenResult(vals, certificate=(int(na), int(nb)), window=(a, b), notes=notes)


# -- sparse inertia ----------------------------------------------------------

def _matrix_key(A) -> str:
    A = A.tocsr()
    h = hashlib.sha1()
    for arr in (A.data, A.indices, A.indptr):
        h.update(np.ascontiguousarray(arr).tobytes())
    h.update(str(A.shape).encode())
    return h.hexdigest()


def _dense_eigs(A) -> np.ndarray:
    key = _matrix_key(A)
    if key in _dense_cache:
        _dense_cache.move_to_end(key)
        return _dense_cache[key]
    w = sla.eigvalsh(A.toarray())
    _dense_cache[key] = w
    if len(_dense_cache) > 64:
        _dense_cache.popitem(last=False)
    return w


def _factor(A, shift):
    N = A.shape[0]
    M = (A - shift * sp.identity(N, dtype=A.dtype, format="csc")).tocsc()
    return spl.splu(M, permc_spec="MMD_AT_PLUS_A", diag_pivot_thresh=0.0,
                    options=dict(SymmetricMode=True))


def ldlt_inertia(A, shift: float, rel_threshold: float = 1e-15, retries: int = 5):
    """Inertia ``(neg, zero, pos)`` of ``A - shift I`` plus the shift actually used.

    A pivot below ``rel_threshold * ||A||`` means the shift sits on (or next to)
    an eigenvalue; the shift moves by ten times the threshold and the
    factorization is retried.
    """
    A = sp.csc_matrix(A)
    N = A.shape[0]
    norm = max(float(abs(A).sum(axis=1).max()), 1.0)
    thr = rel_threshold * norm
    s = float(shift)
    for attempt in range(retries + 1):
        try:
            lu = _factor(A, s)
        except RuntimeError:  # exactly singular
            s += 10 * thr
            continue
        if not np.array_equal(lu.perm_r, lu.perm_c):
            raise FactorizationError("off-diagonal pivoting broke the symmetric factorization")
        dg = lu.U.diagonal().real
        if np.abs(dg).min() < thr:
            s += 10 * thr
            continue
        neg = int((dg < 0).sum())
        return (neg, 0, N - neg), s
    raise FactorizationError(f"no stable factorization near shift {shift!r} after {retries} retries")


def eig_count_below(A, shift: float) -> int:
    """Number of eigenvalues of the Hermitian matrix ``A`` below ``shift``."""
    (neg, _, _), s = ldlt_inertia(A, shift)
    if _audit_on and A.shape[0] <= AUDIT_DIM:
        w = _dense_eigs(sp.csr_matrix(A))
        dense = int((w < s).sum())
        AUDIT.append({"dim": A.shape[0], "shift": s, "sparse": neg, "dense": dense})
        if dense != neg:
            log.warning("inertia %d disagrees with dense count %d at shift %g", neg, dense, s)
    return neg


def count_in_interval(A, interval) -> int:
    a, b = map(float, interval)
    if not b > a:
        raise ValueError("empty interval")
    return eig_count_below(A, b) - eig_count_below(A, a)


def inertia_bisection(A, window, tol: float = 1e-10) -> EigenResult:
    """Eigenvalues in ``window`` by bisection on sparse inertia counts (no vectors)."""
    A = sp.csc_matrix(A)
    a, b = map(float, window)
    na, nb = eig_count_below(A, a), eig_count_below(A, b)
    found: list[float] = []
    # stack of (lo, hi, count below lo, count below hi)
    stack = [(a, b, na, nb)]
    while stack:
        lo, hi, cl, ch = stack.pop()
        if ch == cl:
            continue
        if hi - lo <= tol:
            found += [0.5 * (lo + hi)] * (ch - cl)
            continue
        mid = 0.5 * (lo + hi)
        cm = eig_count_below(A, mid)
        stack.append((mid, hi, cm, ch))
        stack.append((lo, mid, cl, cm))
    return EigenResult(np.sort(np.asarray(found)), None, None, (na, nb), (a, b))


# -- shift-invert Lanczos ----------------------------------------------------

def _lanczos(op, n, k, v0, locked, dtype):
    """Full-reorthogonalised Lanczos on ``op`` restricted to the complement of ``locked``."""
    Q = np.zeros((n, k + 1), dtype=dtype)
    alpha = np.zeros(k)
    beta = np.zeros(k)

    def project(v):
        for _ in range(2):
            if locked is not None and locked.shape[1]:
                v = v - locked @ (locked.conj().T @ v)
        return v

    q = project(v0)
    q /= np.linalg.norm(q)
    Q[:, 0] = q
    m = k
    for j in range(k):
        w = project(op(Q[:, j]))
        alpha[j] = np.real(np.vdot(Q[:, j], w))
        # two passes of classical Gram-Schmidt against the whole basis
        for _ in range(2):
            w = w - Q[:, : j + 1] @ (Q[:, : j + 1].conj().T @ w)
        beta[j] = np.linalg.norm(w)
        if beta[j] < 1e-12 * max(abs(alpha[j]), 1.0):
            m = j + 1
            break
        Q[:, j + 1] = w / beta[j]
    T = np.diag(alpha[:m]) + np.diag(beta[: m - 1], 1) + np.diag(beta[: m - 1], -1)
    theta, S = np.linalg.eigh(T)
    return theta, Q[:, :m] @ S


def interior_eigs(A, window, tol: float = 1e-8, want_vectors: bool = True, seed: int | None = None,
                  max_rounds: int = 40, shift: float | None = None, _depth: int = 0) -> EigenResult:
    """Every eigenpair of a sparse Hermitian ``A`` inside ``window``.

    Shift-invert Lanczos at the window midpoint with locking of converged
    pairs; the number returned must match the inertia certificate.
    """
    A = sp.csc_matrix(A)
    a, b = map(float, window)
    if not b > a:
        raise ValueError("empty window")
    na, nb = eig_count_below(A, a), eig_count_below(A, b)
    m = nb - na
    N = A.shape[0]
    dtype = np.complex128 if np.iscomplexobj(A.data) else np.float64
    if m == 0:
        return EigenResult(np.empty(0), np.zeros((N, 0), dtype) if want_vectors else None,
                           np.empty(0), (na, nb), (a, b))
    if N <= 400:
        w, V = sla.eigh(A.toarray())
        sel = (w >= a) & (w < b)
        vals, vecs = w[sel], V[:, sel]
        res = np.linalg.norm(A @ vecs - vecs * vals, axis=0)
        return EigenResult(vals, vecs if want_vectors else None, res, (na, nb), (a, b), ["dense"])
    (_, _, _), sigma = ldlt_inertia(A, 0.5 * (a + b) if shift is None else shift)
    lu = _factor(A, sigma)
    op = lu.solve
    seed = _seed if seed is None else seed
    rng = np.random.default_rng(seed)
    norm = float(abs(A).sum(axis=1).max())
    res_tol = max(tol, 1e3 * np.finfo(float).eps * norm)
    locked = np.zeros((N, 0), dtype)
    vals: list[float] = []
    k = min(max(2 * m + 20, 30), N - 1)
    stall = 0
    for _ in range(max_rounds):
        v0 = rng.standard_normal(N)
        if dtype == np.complex128:
            v0 = v0 + 1j * rng.standard_normal(N)
        theta, X = _lanczos(op, N, k, v0.astype(dtype), locked, dtype)
        good = np.abs(theta) > 1e-300
        lam = sigma + 1.0 / theta[good]
        X = X[:, good]
        inside = (lam >= a) & (lam < b)
        new = 0
        for j in np.flatnonzero(inside):
            x = X[:, j]
            if locked.shape[1]:
                x = x - locked @ (locked.conj().T @ x)
            nx = np.linalg.norm(x)
            if nx < 0.5:
                continue
            x = x / nx
            Ax = A @ x
            rq = float(np.real(np.vdot(x, Ax)))
            r = np.linalg.norm(Ax - rq * x)
            if r <= res_tol and a <= rq < b:
                locked = np.column_stack([locked, x])
                vals.append(rq)
                new += 1
        if len(vals) >= m:
            break
        if new == 0:
            stall += 1
            k = min(2 * k, N - 1)
            if stall >= 3:
                break
        else:
            stall = 0
    if len(vals) != m and not want_vectors:
        # clustered values near the window ends: fall back to counting
        r = inertia_bisection(A, (a, b), tol)
        r.notes.append("inertia bisection after Lanczos stagnation")
        return r
    if len(vals) != m:
        if _depth < 4 and b - a > 1e3 * tol:
            c = 0.5 * (a + b)
            left = interior_eigs(A, (a, c), tol, True, seed + 1, max_rounds, _depth=_depth + 1)
            right = interior_eigs(A, (c, b), tol, True, seed + 2, max_rounds, _depth=_depth + 1)
            vals_arr = np.concatenate([left.values, right.values])
            vecs = np.column_stack([left.vectors, right.vectors])
            res = np.concatenate([left.residuals, right.residuals])
            return EigenResult(vals_arr, vecs if want_vectors else None, res, (na, nb), (a, b),
                               left.notes + right.notes + ["window bisected"])
        partial = EigenResult(np.sort(vals), locked, None, (na, nb), (a, b))
        raise StagnationError(f"found {len(vals)} of {m} eigenvalues in {window}", partial)
    order = np.argsort(vals)
    vals_arr = np.asarray(vals)[order]
    vecs = locked[:, order]
    # Rayleigh-Ritz on the locked space cleans up near-degenerate pairs
    H = vecs.conj().T @ (A @ vecs)
    w, S = np.linalg.eigh(0.5 * (H + H.conj().T))
    vecs = vecs @ S
    vals_arr = w
    res = np.linalg.norm(A @ vecs - vecs * vals_arr, axis=0)
    return EigenResult(vals_arr, vecs if want_vectors else None, res, (na, nb), (a, b))


def lowest_eigs(A, k: int, tol: float = 1e-8, want_vectors: bool = False, seed: int | None = None) -> EigenResult:
    """The ``k`` lowest eigenvalues, found by widening a window from below."""
    A = sp.csc_matrix(A)
    N = A.shape[0]
    k = min(k, N)
    d = A.diagonal().real
    off = np.asarray(abs(A).sum(axis=1)).ravel() - np.abs(d)
    lo = float((d - off).min()) - 1.0
    hi = float((d + off).max()) + 1.0
    # bisection on the inertia count for an upper end just above the k-th eigenvalue
    a, b = lo, hi
    if eig_count_below(A, b) < k:
        raise ValueError("Gershgorin bound inconsistent")
    step = max(1.0, abs(lo))
    b = lo + step
    while eig_count_below(A, b) < k:
        step *= 2
        b = lo + step
    left = b - step / 2 if step > 1.0 else lo
    while b - left > max(1e-3 * abs(b), tol):
        c = 0.5 * (left + b)
        if eig_count_below(A, c) >= k:
            b = c
        else:
            left = c
    b = b + max(1e-3 * abs(b), 10 * tol)
    r = interior_eigs(A, (a, b), tol, want_vectors, seed, shift=lo)
    vals = r.values[:k]
    vecs = r.vectors[:, :k] if r.vectors is not None else None
    res = r.residuals[:k] if r.residuals is not None else None
    return EigenResult(vals, vecs, res, r.certificate, r.window, r.notes)
