"""Muffin-tin models: potential zero on discs, walls elsewhere.

With infinitely high walls the operator splits into independent Dirichlet
problems, one per disc component, so the spectrum is a union of disc and
cut-disc eigenvalues.  Whole discs are solved exactly through Bessel
zeros; cut discs with a Shortley-Weller finite-difference scheme (boundary
distances enter the stencil, giving smooth O(h^2) convergence) followed by
Richardson extrapolation in h^2.  Finite walls go through the ordinary box
discretisation.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from functools import lru_cache

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla
from scipy.interpolate import CubicSpline

from .discretize import EmptyDomainError, GridError, assemble_box
from .eigensolve import count_in_interval, interior_eigs, lowest_eigs
from .potentials import MuffinTinPotential
from .rotation import Angle, _as_angle
from .specio import pmap

__all__ = [
    "bessel_j",
    "bessel_zeros",
    "DiscSpectrum",
    "CutDiscCurve",
    "RotatedMuffinGeometry",
    "RotatedMuffinPotential",
    "bessel_disc_eigenvalues",
    "cut_disc_eigenvalues",
    "fd_disc_eigenvalues",
    "cut_disc_curve",
    "muffin_dislocation_report",
    "rotated_geometry",
    "rotated_gap_scan",
    "finite_height_spectrum",
    "isolated_disc_trend",
]

DEFAULT_LADDER = (0.02, 0.01)


# -- Bessel functions ----------------------------------------------------------

def _bessel_series(m: int, x: float) -> float:
    term = (x / 2) ** m / math.factorial(m)
    s = term
    q = -(x * x) / 4
    k = 0
    while True:
        k += 1
        term *= q / (k * (k + m))
        s += term
        if abs(term) <= 1e-17 * abs(s):
            return s


def _bessel_miller(m: int, x: float) -> float:
    # backward recurrence from well above max(m, x), normalised by
    # J_0 + 2 (J_2 + J_4 + ...) = 1
    top = max(m, int(x)) + 20 + int(math.sqrt(40 * max(m, x, 1.0)))
    top += top % 2
    j_next, j = 0.0, 1e-300
    norm = 0.0
    out = 0.0
    for k in range(top, 0, -1):
        j_prev = 2 * k / x * j - j_next
        j_next, j = j, j_prev
        if abs(j) > 1e250:
            j *= 1e-250
            j_next *= 1e-250
            norm *= 1e-250
            out *= 1e-250
        if k - 1 == m:
            out = j
        if (k - 1) % 2 == 0 and k - 1 > 0:
            norm += 2 * j
    norm += j  # J_0
    return out / norm


def bessel_j(m: int, x: float) -> float:
    """J_m(x) for integer m >= 0 and real x (power series near 0, Miller recurrence beyond)."""
    if m < 0:
        raise ValueError("order must be non-negative")
    x = float(x)
    sign = 1.0
    if x < 0:
        x = -x
        sign = -1.0 if m % 2 else 1.0
    if x == 0.0:
        return 1.0 if m == 0 else 0.0
    val = _bessel_series(m, x) if x <= 2.0 else _bessel_miller(m, x)
    return sign * val


@lru_cache(maxsize=None)
def _zeros_below(m: int, xmax: float) -> tuple[float, ...]:
    """Positive zeros of J_m below xmax, by a sign scan then bisection."""
    step = 0.25  # zeros are at least ~ pi apart
    out = []
    a = max(float(m), 1e-3)
    fa = bessel_j(m, a)
    while a < xmax:
        b = a + step
        fb = bessel_j(m, b)
        if fa == 0.0:
            out.append(a)
        elif fa * fb < 0:
            lo, hi, flo = a, b, fa
            while hi - lo > 4e-16 * hi:
                mid = 0.5 * (lo + hi)
                fm = bessel_j(m, mid)
                if fm == 0.0:
                    lo = hi = mid
                    break
                if (fm < 0) == (flo < 0):
                    lo, flo = mid, fm
                else:
                    hi = mid
            z = 0.5 * (lo + hi)
            if z < xmax:
                out.append(z)
        a, fa = b, fb
    return tuple(out)


def bessel_zeros(m: int, count: int) -> list[float]:
    """The first ``count`` positive zeros j_{m,1} < j_{m,2} < ... of J_m."""
    xmax = m + math.pi * (count + 2) + 2.0
    z = _zeros_below(m, xmax)
    while len(z) < count:
        xmax *= 1.5
        z = _zeros_below(m, xmax)
    return list(z[:count])


# -- whole discs ---------------------------------------------------------------

@dataclass(frozen=True)
class DiscSpectrum:
    r: float
    values: tuple[float, ...]
    labels: tuple[tuple[int, int], ...]  # (m, s) per value
    source: str = "bessel"

    def distinct(self, rel: float = 1e-12) -> list[float]:
        """Eigenvalues without repetition (the tilde-mu list)."""
        out: list[float] = []
        for v in self.values:
            if not out or v - out[-1] > rel * v:
                out.append(v)
        return out

    def gap(self, j: int) -> tuple[float, float]:
        d = self.distinct()
        if not 1 <= j < len(d):
            raise IndexError(f"gap {j} needs {j + 1} distinct levels, have {len(d)}")
        return d[j - 1], d[j]


def bessel_disc_eigenvalues(r: float, k_max: int) -> DiscSpectrum:
    """Lowest ``k_max`` Dirichlet eigenvalues of a disc of radius r, with multiplicity."""
    if not 0.0 < r < 0.5:
        raise ValueError("radius must lie in (0, 1/2)")
    X = 8.0
    while True:
        pairs = []
        m = 0
        # j_{m,1} > m, so orders beyond X contribute nothing below X
        while m < X:
            for s, z in enumerate(_zeros_below(m, X), start=1):
                pairs.append((z, m, s))
            m += 1
        mult = sum(1 if m == 0 else 2 for _, m, _ in pairs)
        if mult >= k_max:
            break
        X *= 1.5
    pairs.sort()
    vals, labels = [], []
    for z, m, s in pairs:
        mu = (z / r) ** 2
        for _ in range(1 if m == 0 else 2):
            vals.append(mu)
            labels.append((m, s))
    return DiscSpectrum(r, tuple(vals[:k_max]), tuple(labels[:k_max]))


# -- cut discs -----------------------------------------------------------------

def _sw_operator(center, r: float, h: float, cut_x: float | None):
    """Shortley-Weller Dirichlet Laplacian on B_r(center) ∩ {x < cut_x} (nonsymmetric)."""
    cx, cy = map(float, center)
    n = int(math.ceil(r / h)) + 1
    ii = np.arange(-n, n + 1)
    X, Y = np.meshgrid(cx + h * ii, cy + h * ii, indexing="ij")
    mask = (X - cx) ** 2 + (Y - cy) ** 2 < r * r
    if cut_x is not None:
        mask &= X < cut_x
    if not mask.any():
        raise EmptyDomainError("cut disc holds no grid node")
    idx = -np.ones(mask.shape, dtype=np.int64)
    N = int(mask.sum())
    idx[mask] = np.arange(N)
    I, J = np.nonzero(mask)
    xs, ys = X[mask], Y[mask]
    half_y = np.sqrt(np.maximum(r * r - (ys - cy) ** 2, 0.0))
    half_x = np.sqrt(np.maximum(r * r - (xs - cx) ** 2, 0.0))
    right = cx + half_y - xs
    if cut_x is not None:
        right = np.minimum(right, cut_x - xs)
    dist = {(1, 0): right, (-1, 0): xs - (cx - half_y), (0, 1): cy + half_x - ys, (0, -1): ys - (cy - half_x)}
    arms = {}
    nbrs = {}
    for d, dd in dist.items():
        nb = idx[I + d[0], J + d[1]]
        nbrs[d] = nb
        arms[d] = np.where(nb >= 0, h, np.clip(dd, 1e-12 * h, h))
    rows, cols, vals = [], [], []
    diag = np.zeros(N)
    ar = np.arange(N)
    for d, opp in (((1, 0), (-1, 0)), ((-1, 0), (1, 0)), ((0, 1), (0, -1)), ((0, -1), (0, 1))):
        hp, hm = arms[d], arms[opp]
        coef = 2.0 / (hp * (hp + hm))
        diag += coef
        ok = nbrs[d] >= 0
        rows.append(ar[ok])
        cols.append(nbrs[d][ok])
        vals.append(-coef[ok])
    A = sp.coo_matrix((np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))), shape=(N, N))
    return (A + sp.diags(diag)).tocsc()


def _sw_lowest(A, k: int) -> np.ndarray:
    N = A.shape[0]
    if N <= max(3 * k, 200):
        w = np.linalg.eigvals(A.toarray())
    else:
        w = spla.eigs(A, k=k, sigma=0.0, which="LM", return_eigenvectors=False, tol=1e-12)
    w = np.sort(w.real)
    out = np.full(k, np.inf)
    out[: min(k, len(w))] = w[:k]
    return out


@lru_cache(maxsize=4096)
def cut_disc_eigenvalues(r: float, t: float, h: float, k: int) -> tuple[float, ...]:
    """FD eigenvalues of B_r(1/2 - t, 0) ∩ {x < 0} at one mesh width (inf when the mask is empty)."""
    if r < 4 * h:
        raise GridError("disc radius below four mesh cells")
    cx = 0.5 - t
    cut = 0.0 if cx + r > 0.0 else None
    try:
        A = _sw_operator((cx, 0.0), r, h, cut)
    except EmptyDomainError:
        return (math.inf,) * k
    return tuple(float(v) for v in _sw_lowest(A, k))


def fd_disc_eigenvalues(r: float, k_max: int, h_ladder=DEFAULT_LADDER) -> DiscSpectrum:
    """Whole-disc eigenvalues from the same finite-difference scheme, extrapolated in h."""
    hs = tuple(float(h) for h in h_ladder)
    rows = [_sw_lowest(_sw_operator((0.0, 0.0), r, h, None), k_max) for h in hs]
    vals = np.sort(_richardson(hs, rows))
    return DiscSpectrum(float(r), tuple(float(v) for v in vals), (), "fd-extrapolated")


def _richardson(hs, rows) -> np.ndarray:
    """Least-squares fit lam(h) = lam0 + c h^2 over the ladder, per column."""
    rows = np.asarray(rows, dtype=float)
    hs = np.asarray(hs, dtype=float)
    if len(hs) == 1:
        return rows[0]
    out = np.full(rows.shape[1], np.inf)
    fin = np.all(np.isfinite(rows), axis=0)
    if fin.any():
        G = np.column_stack([np.ones_like(hs), hs**2])
        coef, *_ = np.linalg.lstsq(G, rows[:, fin], rcond=None)
        out[fin] = coef[0]
    return out


@dataclass
class CutDiscCurve:
    r: float
    t_grid: np.ndarray
    values: np.ndarray  # shape (len(t_grid), k_max); inf above cutoff
    h_ladder: tuple[float, ...]
    notes: list = field(default_factory=list)

    @property
    def k_max(self) -> int:
        return self.values.shape[1]

    def monotone(self, k: int = 1) -> bool:
        v = self.values[:, k - 1]
        fin = np.isfinite(v)
        return bool(np.all(np.diff(v[fin]) < 0))

    def interpolate(self, t: float, k: int = 1) -> float:
        """Cubic interpolation of lambda_k at t; inf below the first finite grid value.

        Between the last grid point and 1/2 + r the spline is anchored on the
        whole-disc limit mu_k.
        """
        v = self.values[:, k - 1]
        tg = self.t_grid[np.isfinite(v)]
        if t < tg[0]:
            return math.inf
        if t > 0.5 + self.r:
            raise ValueError("t beyond 1/2 + r: the disc is not cut")
        return float(_spline(self, k)(t))

    def rows(self):
        for i, t in enumerate(self.t_grid):
            for k in range(self.k_max):
                yield {"k": k + 1, "t": float(t), "value": float(self.values[i, k]), "source": "fd-extrapolated",
                       "h_ladder": " ".join(f"{h:g}" for h in self.h_ladder)}


def _spline(curve: CutDiscCurve, k: int):
    cache = curve.__dict__.setdefault("_splines", {})
    if k not in cache:
        v = curve.values[:, k - 1]
        fin = np.isfinite(v)
        mu = bessel_disc_eigenvalues(curve.r, k).values[k - 1]
        cache[k] = CubicSpline(np.append(curve.t_grid[fin], 0.5 + curve.r), np.append(v[fin], mu))
    return cache[k]


def default_t_grid(r: float, points: int = 40) -> np.ndarray:
    """Interior points of (1/2 - r, 1/2 + r), endpoints excluded."""
    return 0.5 - r + 2 * r * np.arange(1, points + 1) / (points + 1)


def _eig_task(task):
    return cut_disc_eigenvalues(*task)


def cut_disc_curve(r: float, k_max: int = 1, t_grid=None, h_ladder=DEFAULT_LADDER,
                   check_monotone: bool = True, jobs: int = 1) -> CutDiscCurve:
    """lambda_k(t, r) for k <= k_max, extrapolated over ``h_ladder``.

    A t whose mask is empty on any rung reports +inf (above cutoff).
    """
    t_grid = default_t_grid(r) if t_grid is None else np.asarray(t_grid, dtype=float)
    if np.any(t_grid <= 0.5 - r) or np.any(t_grid >= 0.5 + r):
        raise ValueError("t_grid must lie inside (1/2 - r, 1/2 + r)")
    hs = tuple(float(h) for h in h_ladder)
    tasks = [(float(r), float(t), h, k_max) for t in t_grid for h in hs]
    flat = pmap(_eig_task, tasks, jobs)
    vals = np.empty((len(t_grid), k_max))
    for i in range(len(t_grid)):
        vals[i] = _richardson(hs, flat[i * len(hs):(i + 1) * len(hs)])
    curve = CutDiscCurve(float(r), t_grid, vals, hs)
    if check_monotone:
        for k in range(1, k_max + 1):
            if not curve.monotone(k):
                curve.notes.append(f"lambda_{k} not strictly decreasing on the grid")
    if curve.notes:
        raise ArithmeticError("; ".join(curve.notes))
    return curve


# -- dislocation ---------------------------------------------------------------

def muffin_dislocation_report(r: float, t_grid=None, gap_index: int = 1, h_ladder=DEFAULT_LADDER,
                              center=(0.5, 0.0)) -> dict:
    """Bulk disc levels and cut-disc surface branches inside one disc gap.

    Discs sit at ``center + Z^2``; only the row through the interface
    matters, the cut disc being B_r(center_x - t, center_y) ∩ {x < 0}.
    """
    if tuple(center) != (0.5, 0.0):
        raise ValueError("only the centred configuration is implemented")
    t_grid = np.linspace(0.0, 1.0, 41) if t_grid is None else np.asarray(t_grid, dtype=float)
    bulk = bessel_disc_eigenvalues(r, 40)
    a, b = bulk.gap(gap_index)
    n_below = sum(1 for v in bulk.values if v <= a * (1 + 1e-12))
    k_max = n_below + 1
    inside = (t_grid > 0.5 - r) & (t_grid < 0.5 + r)
    curve = cut_disc_curve(r, k_max, t_grid[inside], h_ladder) if inside.any() else None
    table = []
    pos = np.cumsum(inside) - 1
    for i, t in enumerate(t_grid):
        if not inside[i]:
            table.append({"t": float(t), "cut": False, "values": []})
            continue
        row = curve.values[pos[i]]
        table.append({"t": float(t), "cut": True, "values": [float(v) for v in row if a < v < b]})
    branches = []
    if curve is not None:
        for k in range(1, n_below + 1):
            v = curve.values[:, k - 1]
            above = bool(np.any(v >= b))
            in_gap = bool(np.any((v > a) & (v < b)))
            branches.append({"k": k, "limit": bulk.values[k - 1], "enters_from_above": above,
                             "visits_gap": in_gap, "last_value": float(v[-1]),
                             "decreasing": curve.monotone(k)})
    return {"r": r, "gap": (a, b), "gap_index": gap_index, "bulk_levels": bulk.distinct(),
            "branches": branches, "table": table, "crossed": all(br["enters_from_above"] and br["decreasing"]
                                                                   for br in branches) and bool(branches),
            "h_ladder": list(h_ladder)}


# -- rotation ------------------------------------------------------------------

@dataclass(frozen=True)
class MuffinDisc:
    side: str  # "right" (unrotated lattice) or "left" (rotated)
    i: int
    j: int
    cx: float
    cy: float
    cut: bool

    @property
    def t_eff(self) -> float:
        return 0.5 - self.cx


@dataclass
class RotatedMuffinGeometry:
    r: float
    angle: Angle
    window: tuple[float, float]
    discs: list
    periods: tuple[float, float] | None = None
    r_theta: float | None = None
    excluded_family: bool = False
    notes: list = field(default_factory=list)

    @property
    def cut_discs(self) -> list:
        return [d for d in self.discs if d.cut]

    def summary(self) -> dict:
        return {"r": self.r, **self.angle.describe(), "window": list(self.window), "discs": len(self.discs),
                "cut": len(self.cut_discs), "periods": self.periods, "r_theta": self.r_theta,
                "excluded_family": self.excluded_family, "notes": self.notes}


def rotated_geometry(r: float, theta, window=(-50.0, 50.0), x_reach: float = 2.0) -> RotatedMuffinGeometry:
    """Disc centres of Omega_{r,theta} with centre y in ``window`` and |x| <= x_reach.

    Right-hand discs come from Z^2 + (1/2, 1/2) with x >= 0 and are never
    cut for r < 1/2.  Left-hand discs are rotated copies; one is cut when its
    centre lies within r of the axis.  With tan theta = p/q exact the cut
    test is done in integers.
    """
    ang = _as_angle(theta)
    th = ang.theta
    c, s = math.cos(th), math.sin(th)
    y0, y1 = map(float, window)
    discs = []
    # right half
    for j in range(math.floor(y0 - 0.5), math.ceil(y1) + 1):
        for i in range(0, math.ceil(x_reach)):
            if y0 <= j + 0.5 <= y1:
                discs.append(MuffinDisc("right", i, j, i + 0.5, j + 0.5, False))
    # left half: enumerate lattice points whose images land in the window
    R = math.hypot(x_reach + 1, max(abs(y0), abs(y1)) + 1)
    lo, hi = math.floor(-R) - 1, math.ceil(R) + 1
    ii, jj = np.meshgrid(np.arange(lo, hi + 1), np.arange(lo, hi + 1), indexing="ij")
    a, b = ii + 0.5, jj + 0.5
    X = a * c - b * s
    Y = a * s + b * c
    keep = (X < r) & (X >= -x_reach) & (Y >= y0) & (Y <= y1)
    if ang.rational:
        p, q = ang.tan.numerator, ang.tan.denominator
        r2 = Fraction(r) ** 2
        num = 2 * (q * ii - p * jj) + (q - p)  # 2 sqrt(p^2 + q^2) c_x, exact
        cut_exact = np.array([Fraction(int(v) ** 2) < 4 * r2 * (p * p + q * q) for v in num.ravel()]).reshape(num.shape)
        pos_exact = num >= 0  # c_x >= 0 exactly
    for i, j in zip(*np.nonzero(keep)):
        cx, cy = float(X[i, j]), float(Y[i, j])
        if ang.rational:
            cut = bool(cut_exact[i, j])
            if not cut and pos_exact[i, j]:
                continue  # entirely in x >= 0
        else:
            cut = abs(cx) < r
            if not cut and cx >= r:
                continue
        discs.append(MuffinDisc("left", int(ii[i, j]), int(jj[i, j]), cx, cy, cut))
    geo = RotatedMuffinGeometry(float(r), ang, (y0, y1), discs)
    if ang.rational:
        p, q = ang.tan.numerator, ang.tan.denominator
        L = math.hypot(p, q)
        geo.periods = (L, L)
        # centres' signed distances to the axis are (odd or even integers) / (2L)
        geo.r_theta = 1.0 / (2 * L) if (q - p) % 2 else 0.0
        geo.excluded_family = p == 1 and q % 2 == 1 and q >= 3
        if geo.r_theta == 0.0 and not geo.excluded_family and p != 0:
            geo.notes.append("p, q both odd: a rotated centre lies on the axis, so r_theta = 0")
    return geo


def rotated_gap_scan(r: float, theta, gap=None, window=(-50.0, 50.0), h_ladder=DEFAULT_LADDER,
                     curve: CutDiscCurve | None = None) -> dict:
    """Eigenvalues of the infinite-wall rotated muffin tin lying in a disc gap.

    Whole discs only produce bulk levels, so only cut discs contribute; each
    is read off the cut-disc curve at its effective t.
    """
    geo = rotated_geometry(r, theta, window)
    bulk = bessel_disc_eigenvalues(r, 40)
    a, b = bulk.gap(1) if gap is None else map(float, gap)
    k_max = sum(1 for v in bulk.values if v < b) + 1
    if curve is None and geo.cut_discs:
        curve = cut_disc_curve(r, k_max, None, h_ladder)
    per_disc = []
    for d in geo.cut_discs:
        vals = [curve.interpolate(d.t_eff, k) for k in range(1, min(k_max, curve.k_max) + 1)]
        per_disc.append((d, [v for v in vals if a < v < b]))
    values = sorted((v, k) for k, (_, vs) in enumerate(per_disc) for v in vs)
    union = sorted(v for _, vs in per_disc for v in vs)
    assert [v for v, _ in values] == union
    return {"geometry": geo, "gap": (a, b), "values": [v for v, _ in values],
            "discs": [per_disc[k][0] for _, k in values], "curve": curve}


# -- finite walls --------------------------------------------------------------

@dataclass(frozen=True)
class RotatedMuffinPotential:
    """height on the complement of Omega_{r,theta}, zero on it."""

    r: float
    theta: float
    height: float
    ndim: int = field(default=2, init=False)

    def __call__(self, x, y):
        x = np.asarray(x, dtype=float)
        y = np.asarray(y, dtype=float)
        base = MuffinTinPotential(self.r, (0.5, 0.5), math.inf)
        c, s = math.cos(self.theta), math.sin(self.theta)
        # M_theta^{-1} (x, y) for the left half
        xr, yr = c * x + s * y, -s * x + c * y
        inside = np.where(x < 0.0, base.inside(xr, yr), base.inside(x, y))
        return np.where(inside, 0.0, float(self.height))

    @property
    def bound(self) -> float:
        return float(self.height)

    @property
    def lipschitz_constant(self) -> float:
        return math.inf


def finite_height_spectrum(r: float, theta, height: float, window=((-2.0, 2.0), (-2.0, 2.0)), gap=None,
                           h: float = 1 / 32, tol: float = 1e-6) -> dict:
    """Dirichlet-box eigenvalues of -Delta + height * V_{r,theta} inside ``gap``."""
    th = _as_angle(theta).theta
    V = RotatedMuffinPotential(float(r), th, float(height))
    op = assemble_box(V, window, h)
    if gap is None:
        gap = bessel_disc_eigenvalues(r, 40).gap(1)
    a, b = map(float, gap)
    cnt = count_in_interval(op.matrix, (a, b))
    vals = []
    if cnt:
        vals = [float(v) for v in interior_eigs(op.matrix, (a, b), tol, want_vectors=False).values]
    return {"r": r, "theta": th, "height": height, "h": h, "window": window, "gap": (a, b), "count": cnt,
            "values": vals, "dimension": op.dimension}


def isolated_disc_trend(r: float, heights=(50, 200, 800), h: float = 1 / 64) -> dict:
    """Lowest eigenvalue of one disc in a Dirichlet unit cell with walls of each height."""
    out = []
    for H in heights:
        V = RotatedMuffinPotential(float(r), 0.0, float(H))
        op = assemble_box(V, ((0.0, 1.0), (0.0, 1.0)), h)
        out.append(float(lowest_eigs(op.matrix, 1, tol=1e-9).values[0]))
    mu1 = bessel_disc_eigenvalues(r, 1).values[0]
    return {"r": r, "h": h, "heights": list(heights), "lowest": out, "mu1": mu1,
            "distance": [abs(v - mu1) for v in out]}
