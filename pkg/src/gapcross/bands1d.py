"""Band-gap structure of 1D periodic Schroedinger operators.

The discriminant is the trace of the one-period transfer matrix of
``-u'' + V u = E u``.  Step potentials propagate layer by layer with the
closed-form 2x2 matrices; anything else goes through fixed-step RK4.
Both routes carry a log-scale accumulator so that very negative energies
do not overflow.

Band edges are the roots of ``Delta = +-2``.  Between two consecutive
extrema of ``Delta`` the function is monotone, so each extremum with
``|Delta| > 2`` marks an open gap and each band is bracketed by a pair of
extrema.  A finite-difference Bloch solve gives an independent check.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg as sla
import scipy.sparse as sp
from scipy.optimize import brentq, minimize_scalar

from .discretize import node_values

__all__ = [
    "BandStructure",
    "Gap",
    "DegenerateGapError",
    "GapIndexError",
    "discriminant",
    "band_structure",
    "locate_gap",
    "bloch_cell_matrix",
    "bloch_edges",
    "bloch_oracle_edges",
]

RK4_STEP = 1e-3
DEGENERATE_THRESHOLD = 1e-8


class DegenerateGapError(ValueError):
    """The requested gap is closed (width zero)."""


class GapIndexError(IndexError):
    """The requested gap lies beyond the computed energy range."""


@dataclass(frozen=True)
class Gap:
    k: int
    lower: float
    upper: float
    open: bool

    @property
    def width(self) -> float:
        return self.upper - self.lower if self.open else 0.0


@dataclass
class BandStructure:
    bands: list[tuple[float, float]]
    gaps: list[Gap]
    method: str = "discriminant"
    meta: dict = field(default_factory=dict)

    def edges(self) -> list[float]:
        return [e for b in self.bands for e in b]

    def open_gaps(self) -> list[Gap]:
        return [g for g in self.gaps if g.open]


# -- transfer matrices -------------------------------------------------------

def _layer(M, logs, k2, L):
    """Multiply accumulated transfer matrices by a constant-potential layer."""
    c = np.empty_like(k2)
    s = np.empty_like(k2)  # sin(kL)/k analogue
    d = np.empty_like(k2)  # -k sin(kL) analogue
    scale = np.zeros_like(k2)
    pos = k2 > 0
    k = np.sqrt(np.abs(k2))
    kp = k[pos]
    c[pos] = np.cos(kp * L)
    s[pos] = np.sin(kp * L) / kp
    d[pos] = -kp * np.sin(kp * L)
    neg = k2 < 0
    kn = k[neg]
    # cosh, sinh with exp(kL) factored out
    em = np.exp(-2 * kn * L)
    scale[neg] = kn * L
    c[neg] = 0.5 * (1 + em)
    s[neg] = 0.5 * (1 - em) / kn
    d[neg] = kn * 0.5 * (1 - em)
    z = ~(pos | neg)
    c[z], s[z], d[z] = 1.0, L, 0.0
    T = np.empty(M.shape)
    T[:, 0, 0], T[:, 0, 1], T[:, 1, 0], T[:, 1, 1] = c, s, d, c
    M = T @ M
    return _renorm(M, logs + scale)


def _renorm(M, logs):
    m = np.abs(M).reshape(len(M), -1).max(axis=1)
    m = np.where(m > 0, m, 1.0)
    return M / m[:, None, None], logs + np.log(m)


def _monodromy_step(V, E):
    M = np.tile(np.eye(2), (len(E), 1, 1))
    logs = np.zeros(len(E))
    for length, v in V.segments():
        M, logs = _layer(M, logs, E - v, length)
    return M, logs


def _monodromy_rk4(V, E, step=RK4_STEP):
    N = int(math.ceil(1.0 / step))
    h = 1.0 / N
    Y = np.tile(np.eye(2), (len(E), 1, 1))
    logs = np.zeros(len(E))

    def f(x, Y):
        q = V(np.array([x]))[0] - E
        out = np.empty_like(Y)
        out[:, 0, :] = Y[:, 1, :]
        out[:, 1, :] = q[:, None] * Y[:, 0, :]
        return out

    for i in range(N):
        x = i * h
        k1 = f(x, Y)
        k2 = f(x + h / 2, Y + h / 2 * k1)
        k3 = f(x + h / 2, Y + h / 2 * k2)
        k4 = f(x + h, Y + h * k3)
        Y = Y + h / 6 * (k1 + 2 * k2 + 2 * k3 + k4)
        if i % 32 == 31:
            Y, logs = _renorm(Y, logs)
    return Y, logs


def discriminant(V, E, method: str | None = None):
    """Trace of the one-period transfer matrix at energy ``E`` (scalar or array)."""
    E_arr = np.atleast_1d(np.asarray(E, dtype=float))
    if method is None:
        method = "exact" if getattr(V, "piecewise_constant", False) else "rk4"
    if method == "exact":
        M, logs = _monodromy_step(V, E_arr)
    else:
        M, logs = _monodromy_rk4(V, E_arr)
    tr = M[:, 0, 0] + M[:, 1, 1]
    with np.errstate(over="ignore"):
        out = tr * np.exp(np.minimum(logs, 700.0))
    return out if np.ndim(E) else float(out[0])


# -- band structure ----------------------------------------------------------

def _extrema(V, E_lo, E_stop, method):
    """Sample Delta on a grid uniform in sqrt(E - E_lo) and return refined extrema."""
    ds = math.pi / 50
    s = np.arange(0.0, math.sqrt(E_stop - E_lo) + 2 * ds, ds)
    E = E_lo + s * s
    D = discriminant(V, E, method)
    dD = np.diff(D)
    out = []
    for i in np.flatnonzero(np.sign(dD[:-1]) != np.sign(dD[1:])):
        lo, hi = E[i], E[i + 2]
        sign = 1.0 if dD[i] > 0 else -1.0  # +1: maximum
        r = minimize_scalar(lambda x: -sign * discriminant(V, x, method), bounds=(lo, hi),
                            method="bounded", options={"xatol": 1e-12 * max(1.0, abs(hi))})
        out.append((float(r.x), discriminant(V, float(r.x), method)))
    return out


def band_structure(V, E_max: float, tol: float = 1e-10, method: str | None = None) -> BandStructure:
    """Bands and gaps of ``-d2/dx2 + V`` up to ``E_max``."""
    if method is None:
        method = "exact" if getattr(V, "piecewise_constant", False) else "rk4"
    E_lo = float(V.minimum()) - 1.0
    if E_max <= E_lo:
        raise ValueError("E_max lies below the spectrum")
    stop = E_max
    ext = _extrema(V, E_lo, stop, method)
    # one extremum past E_max closes the last gap below it
    while not ext or ext[-1][0] <= E_max:
        stop = E_lo + (math.sqrt(stop - E_lo) + 2 * math.pi) ** 2
        ext = _extrema(V, E_lo, stop, method)
    pts = [(E_lo, discriminant(V, E_lo, method))] + ext
    D = lambda x: discriminant(V, x, method)  # noqa: E731
    bands, gaps = [], []
    for k in range(1, len(pts)):
        (p0, d0), (p1, d1) = pts[k - 1], pts[k]
        s0, s1 = (1.0 if d0 > 0 else -1.0), (1.0 if d1 > 0 else -1.0)
        open0 = k == 1 or abs(d0) - 2 > DEGENERATE_THRESHOLD
        open1 = abs(d1) - 2 > DEGENERATE_THRESHOLD
        lo = brentq(lambda x: D(x) - 2 * s0, p0, p1, xtol=tol, rtol=1e-15) if open0 else p0
        hi = brentq(lambda x: D(x) - 2 * s1, p0, p1, xtol=tol, rtol=1e-15) if open1 else p1
        if lo > E_max:
            break
        bands.append((lo, hi))
        if k >= 2:
            g = gaps[-1]
            gaps[-1] = Gap(g.k, g.lower, lo, g.open)
        if p1 <= E_max:
            gaps.append(Gap(k, hi, p1, open1))
    # a trailing gap needs the start of the next band
    if gaps and len(gaps) == len(bands):
        k = len(bands)
        (p0, d0), (p1, _) = pts[k], pts[k + 1]
        g = gaps[-1]
        s0 = 1.0 if d0 > 0 else -1.0
        up = brentq(lambda x: D(x) - 2 * s0, p0, p1, xtol=tol, rtol=1e-15) if g.open else p0
        gaps[-1] = Gap(g.k, g.lower, up, g.open)
    gaps = [g if g.open else Gap(g.k, g.lower, g.lower, False) for g in gaps]
    return BandStructure(bands, gaps, "discriminant", {"E_max": E_max, "tol": tol, "integrator": method})


def locate_gap(bs: BandStructure, k: int) -> tuple[float, float]:
    if k < 1 or k > len(bs.gaps):
        raise GapIndexError(f"gap {k} not within the computed range ({len(bs.gaps)} gaps)")
    g = bs.gaps[k - 1]
    if not g.open:
        raise DegenerateGapError(f"gap {k} is degenerate at E = {g.lower:.12g}")
    return g.lower, g.upper


# -- Bloch discretization ----------------------------------------------------

def bloch_cell_matrix(V, h: float, phase: float = 0.0, offset: float = 0.0):
    """FD one-cell operator with u(x + 1) = exp(i phase) u(x); nodes at offset + j h."""
    N = int(round(1.0 / h))
    h = 1.0 / N
    x = offset + h * np.arange(N)
    main = 2.0 / h**2 + node_values(V, x, h, h)
    off = -np.ones(N - 1) / h**2
    if abs(math.sin(phase)) < 1e-15:
        corner = -math.cos(phase) / h**2
        A = sp.diags([off, main, off], [-1, 0, 1], format="lil")
    else:
        corner = -np.exp(1j * phase) / h**2
        A = sp.diags([off, main, off], [-1, 0, 1], format="lil", dtype=complex)
    A[N - 1, 0] += corner
    A[0, N - 1] += np.conj(corner)
    return A.tocsr()


def bloch_edges(V, h: float, count: int, offset: float = 0.0) -> np.ndarray:
    """Lowest ``count`` of the merged periodic and antiperiodic FD eigenvalues.

    Sorted, these alternate as band edges: ``e[2k-2], e[2k-1]`` bound band k.
    """
    vals = []
    for ph in (0.0, math.pi):
        A = bloch_cell_matrix(V, h, ph, offset).toarray()
        m = min(count, A.shape[0]) - 1
        vals.append(sla.eigvalsh(A, subset_by_index=[0, m]))
    return np.sort(np.concatenate(vals))[:count]


def bloch_oracle_edges(V, count: int, h: float = 1e-3) -> np.ndarray:
    """Richardson-extrapolated FD band edges, nodes offset by h/2 from the lattice."""
    e1 = bloch_edges(V, h, count, offset=h / 2)
    e2 = bloch_edges(V, h / 2, count, offset=h / 4)
    return (4 * e2 - e1) / 3
