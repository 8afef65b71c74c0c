"""Dislocated sections: gap spectra, branch continuation and crossing counts.

A section is the ring ``(-n - t, n)`` carrying ``V`` on the right and
``V(. + t)`` on the left.  Its eigenvalues inside a spectral gap of the
periodic operator form branches as ``t`` runs from 0 to 1; each branch is
born and dies at a gap edge, and the crossing count is the net number of
branches going from the upper edge to the lower one.

Gap edges are the discrete ones (periodic and antiperiodic one-cell FD
spectra at the same ``h``), so that the section and the bulk share one
discretisation and the counting argument holds exactly.
"""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np

from . import bands1d
import scipy.linalg as sla
import scipy.sparse as sp

from .discretize import apply_box_operator, assemble_section_1d, assemble_strip, box_axes, section_grid
from .eigensolve import count_in_interval, interior_eigs
from .potentials import DislocationPotential, split_separable

log = logging.getLogger(__name__)

__all__ = [
    "Branch",
    "BranchFamily",
    "CrossingReport",
    "discrete_band_edges",
    "discrete_gap",
    "section_spectrum_1d",
    "band_count_check",
    "track_branches",
    "crossing_count",
    "strip_gaps",
    "bulk_gaps_2d",
    "strip_section_spectrum",
    "strip_find_t",
    "fiber_union_spectrum",
    "approximate_eigenfunction",
    "taper",
]

DEFAULT_TOL = 1e-7
# tracking window margin, in units of tol; ends are pinned to within 4 tol
EDGE_MARGIN = 2.0


# -- discrete gap edges ------------------------------------------------------

@lru_cache(maxsize=64)
def _edges_cached(V, h, count, phase_key):
    if phase_key is None:
        return tuple(bands1d.bloch_edges(V, h, count))
    A = bands1d.bloch_cell_matrix(V, h, phase_key).toarray()
    return tuple(sla.eigvalsh(A, subset_by_index=[0, min(count, A.shape[0]) - 1]))


def discrete_band_edges(V, h: float, count: int) -> np.ndarray:
    """Sorted merged periodic/antiperiodic cell eigenvalues; pairs bound bands."""
    return np.asarray(_edges_cached(V, float(h), int(count), None))


def discrete_gap(V, k: int, h: float) -> tuple[float, float]:
    e = discrete_band_edges(V, h, 2 * k + 2)
    a, b = float(e[2 * k - 1]), float(e[2 * k])
    if b - a <= 0:
        raise bands1d.DegenerateGapError(f"discrete gap {k} is closed at h={h}")
    return a, b


# -- 1D sections -------------------------------------------------------------

def section_spectrum_1d(V, t: float, n: int, gap, h: float = 1e-3, tol: float = DEFAULT_TOL,
                        snap: bool = True, n_left: int | None = None, margin: float = 5.0):
    """Eigenvalues of the section operator strictly inside ``gap``.

    Returns ``(values, t_used)``.  The window loses ``margin * tol`` at each
    end so that band-edge eigenvalues never enter.
    """
    a, b = map(float, gap)
    a, b = a + margin * tol, b - margin * tol
    op = assemble_section_1d(V, t, n, h, snap=snap, n_left=n_left)
    r = interior_eigs(op.matrix, (a, b), tol=tol, want_vectors=False)
    return np.sort(r.values), op.meta["t_snapped"]


def band_count_check(V, n: int, band_k: int, t: float, h: float = 1e-3, delta: float = 1e-6) -> dict:
    """Count section eigenvalues in the closed band k at t in {0, 1}.

    Bands that touch (closed gaps) are counted as one merged interval and
    compared with the merged expectation.
    """
    e = discrete_band_edges(V, h, 2 * band_k + 2)
    lo, hi = float(e[2 * band_k - 2]), float(e[2 * band_k - 1])
    # walk outward through touching neighbours
    k0, k1 = band_k, band_k
    while k0 > 1 and e[2 * k0 - 2] - e[2 * k0 - 3] < 10 * delta:
        k0 -= 1
        lo = float(e[2 * k0 - 2])
    ee = discrete_band_edges(V, h, 2 * band_k + 12)
    while 2 * k1 < len(ee) and ee[2 * k1] - ee[2 * k1 - 1] < 10 * delta:
        k1 += 1
        hi = float(ee[2 * k1 - 1])
    op = assemble_section_1d(V, t, n, h)
    t_used = op.meta["t_snapped"]
    count = count_in_interval(op.matrix, (lo - delta * max(1, abs(lo)), hi + delta * max(1, abs(hi))))
    cells = 2 * n + (1 if t_used > 0.5 else 0)
    expected = cells * (k1 - k0 + 1)
    out = {"n": n, "band": band_k, "merged_bands": [k0, k1], "t": t_used, "h": h,
           "count": count, "expected": expected, "ok": count == expected}
    if count != expected:
        out["advice"] = f"discretisation failure; retry with h={h / 2}"
    return out


# -- branch tracking ---------------------------------------------------------

@dataclass
class Branch:
    j: int
    t: list
    values: list
    entry_edge: str = "interior"
    exit_edge: str = "interior"

    @property
    def domain(self) -> tuple[float, float]:
        return self.t[0], self.t[-1]

    def direction(self) -> str:
        if self.entry_edge == "b" and self.exit_edge == "a":
            return "down"
        if self.entry_edge == "a" and self.exit_edge == "b":
            return "up"
        return "none"


@dataclass
class BranchFamily:
    k: int
    n: int
    h: float
    tol: float
    gap: tuple[float, float]
    t_grid: list
    branches: list
    seams: list = field(default_factory=list)
    max_slope: float = 0.0
    bc: str = "periodic"
    samples: list = field(default_factory=list)


@dataclass
class CrossingReport:
    k: int
    N_k: int
    downward: int
    upward: int
    seams: int
    ledger: list
    n: int
    h: float
    max_slope: float

    def to_dict(self) -> dict:
        return {"k": self.k, "N_k": self.N_k, "downward": self.downward, "upward": self.upward,
                "seams": self.seams, "n": self.n, "h": self.h, "max_slope": self.max_slope,
                "branches": self.ledger}


def _link(prev, cur, a, b, thr):
    """Order-preserving matching of two sorted value lists.

    Returns ``(pairs, births, deaths, ambiguous)``.
    """
    prev, cur = list(prev), list(cur)
    for p in prev:
        if sum(abs(c - p) < thr for c in cur) > 1:
            return [], [], [], True
    for c in cur:
        if sum(abs(c - p) < thr for p in prev) > 1:
            return [], [], [], True
    pairs = []
    used = set()
    for i, p in enumerate(prev):
        for j, c in enumerate(cur):
            if j not in used and abs(c - p) < thr:
                pairs.append((i, j))
                used.add(j)
                break
    # matching must preserve order (1D gap eigenvalues do not cross)
    if any(j2 < j1 for (_, j1), (_, j2) in zip(pairs, pairs[1:])):
        return [], [], [], True
    mp = {i for i, _ in pairs}
    deaths = [i for i in range(len(prev)) if i not in mp]
    births = [j for j in range(len(cur)) if j not in used]
    edge = lambda v: min(v - a, b - v)  # noqa: E731
    if any(edge(prev[i]) > thr for i in deaths) or any(edge(cur[j]) > thr for j in births):
        return pairs, births, deaths, True
    return pairs, births, deaths, False


class _Sampler:
    """Section spectra at snapped and stretched t, with a small cache."""

    def __init__(self, V, n, h, gap, tol):
        self.V, self.n, self.h, self.gap, self.tol = V, n, h, gap, tol
        self.cache = {}

    def snapped(self, t):
        _, _, t_used, NL, _ = section_grid(t, self.n, self.h, True, None)
        key = ("s", NL)
        if key not in self.cache:
            vals, t_used = section_spectrum_1d(self.V, t, self.n, self.gap, self.h, self.tol,
                                               margin=EDGE_MARGIN)
            self.cache[key] = (t_used, vals)
        return self.cache[key]

    def stretched(self, t, NL):
        key = ("c", NL, float(t))
        if key not in self.cache:
            vals, _ = section_spectrum_1d(self.V, t, self.n, self.gap, self.h, self.tol,
                                          snap=False, n_left=NL, margin=EDGE_MARGIN)
            self.cache[key] = (float(t), vals)
        return self.cache[key]


def _refine_end(S: _Sampler, t_in, v_in, t_out, m_in, m_out):
    """Bisect toward the t where a branch leaves the shrunk gap.

    ``t_in`` has the branch (value ``v_in``, ``m_in`` gap eigenvalues),
    ``t_out`` does not (``m_out`` eigenvalues).  Returns the edge label, the
    extra (t, value) samples gathered on the way, and the final distance to
    the edge.
    """
    a, b = S.gap
    tol, h, n = S.tol, S.h, S.n
    path = []

    def edge_of(v):
        return ("a", v - a) if v - a < b - v else ("b", b - v)

    def pick(vals, v):
        return float(vals[np.argmin(np.abs(vals - v))])

    lab, dist = edge_of(v_in)
    # snapped bisection while the bracket spans several mesh steps
    while abs(t_in - t_out) > 1.5 * h and dist > 4 * tol:
        tm, vals = S.snapped(0.5 * (t_in + t_out))
        if tm in (t_in, t_out):
            break
        if len(vals) == m_in:
            t_in, v_in = tm, pick(vals, v_in)
            path.append((t_in, v_in))
            lab, dist = edge_of(v_in)
        elif len(vals) == m_out:
            t_out = tm
        else:
            return "interior", path, dist
    if dist <= 4 * tol:
        return lab, path, dist
    # the left piece keeps its cell count and stretches continuously in t
    for t_ref in (t_in, t_out):
        # freeze the left cell count of one bracket end; the other end moves
        NL = section_grid(t_ref, n, h, True, None)[3]
        _, vi = S.stretched(t_in, NL)
        _, vo = S.stretched(t_out, NL)
        if len(vi) == m_in and len(vo) == m_out:
            break
    else:
        return lab, path, dist
    for _ in range(60):
        if dist <= 4 * tol or abs(t_in - t_out) < 1e-14:
            break
        tm = 0.5 * (t_in + t_out)
        _, vals = S.stretched(tm, NL)
        if len(vals) == m_in:
            t_in, v_in = tm, pick(vals, v_in)
            path.append((t_in, v_in))
            lab, dist = edge_of(v_in)
        elif len(vals) == m_out:
            t_out = tm
        else:
            return "interior", path, dist
    return lab, path, dist


def track_branches(V, k: int, n: int, t_steps: int = 50, h: float = 1e-3, tol: float = DEFAULT_TOL,
                   max_levels: int = 3, refine_ends: bool = True) -> BranchFamily:
    """Continue the gap-k eigenvalues of the section over a uniform t-grid."""
    a, b = discrete_gap(V, k, h)
    S = _Sampler(V, n, h, (a, b), tol)
    thr = (b - a) / 4
    # samples: list of [t, values, level]
    samples = []
    for t in np.linspace(0.0, 1.0, t_steps):
        tu, vals = S.snapped(float(t))
        if samples and tu == samples[-1][0]:
            continue
        samples.append([tu, vals, 0])
    seams = []
    # link consecutive samples, inserting refinement points on ambiguity
    links = []
    i = 1
    while i < len(samples):
        t0, v0, l0 = samples[i - 1]
        t1, v1, l1 = samples[i]
        pairs, births, deaths, amb = _link(v0, v1, a, b, thr)
        lvl = max(l0, l1)
        if amb and lvl < max_levels:
            new = []
            for s in np.linspace(t0, t1, 5)[1:-1]:
                tu, vals = S.snapped(float(s))
                if t0 < tu < t1 and all(tu != x[0] for x in new):
                    new.append([tu, vals, lvl + 1])
            if new:
                samples[i:i] = new
                continue
        if amb:
            seams.append({"t0": t0, "t1": t1})
            pairs = []
            births = list(range(len(v1)))
            deaths = list(range(len(v0)))
        links.append((pairs, births, deaths, amb))
        i += 1
    # assemble branches
    branches: list[Branch] = []
    active = {}
    t0, v0, _ = samples[0]
    for j, v in enumerate(v0):
        br = Branch(len(branches), [t0], [float(v)], entry_edge="t0")
        branches.append(br)
        active[j] = br
    for idx, (pairs, births, deaths, amb) in enumerate(links):
        t_prev, v_prev, _ = samples[idx]
        t_cur, v_cur, _ = samples[idx + 1]
        nxt = {}
        for i_, j_ in pairs:
            br = active[i_]
            br.t.append(t_cur)
            br.values.append(float(v_cur[j_]))
            nxt[j_] = br
        for i_ in deaths:
            br = active[i_]
            br.exit_edge = "seam" if amb else "pending"
            br._out = (t_cur, len(v_prev), len(v_cur))  # type: ignore[attr-defined]
        for j_ in births:
            br = Branch(len(branches), [t_cur], [float(v_cur[j_])], entry_edge="seam" if amb else "pending")
            br._in = (t_prev, len(v_cur), len(v_prev))  # type: ignore[attr-defined]
            branches.append(br)
            nxt[j_] = br
        active = nxt
    for br in active.values():
        br.exit_edge = "t1"
    # slopes on the base samples, before any end refinement
    max_slope = 0.0
    for br in branches:
        if len(br.t) > 1:
            dt = np.diff(br.t)
            dv = np.diff(br.values)
            ok = dt > 0
            if ok.any():
                max_slope = max(max_slope, float(np.max(np.abs(dv[ok] / dt[ok]))))
    # locate births and deaths at the gap edges
    edge_of = lambda v: "a" if v - a < b - v else "b"  # noqa: E731
    for br in branches:
        if br.entry_edge == "pending":
            t_out, m_in, m_out = br._in
            if refine_ends:
                lab, path, _ = _refine_end(S, br.t[0], br.values[0], t_out, m_in, m_out)
                for tt, vv in path:
                    br.t.insert(0, tt)
                    br.values.insert(0, vv)
            else:
                lab = edge_of(br.values[0])
            br.entry_edge = lab
            if lab == "interior":
                seams.append({"branch": br.j, "where": "entry", "t": br.t[0]})
        if br.exit_edge == "pending":
            t_out, m_in, m_out = br._out
            if refine_ends:
                lab, path, _ = _refine_end(S, br.t[-1], br.values[-1], t_out, m_in, m_out)
                for tt, vv in path:
                    br.t.append(tt)
                    br.values.append(vv)
            else:
                lab = edge_of(br.values[-1])
            br.exit_edge = lab
            if lab == "interior":
                seams.append({"branch": br.j, "where": "exit", "t": br.t[-1]})
        if br.entry_edge == "seam" or br.exit_edge == "seam":
            seams.append({"branch": br.j, "where": "continuation"})
    for br in branches:
        br.__dict__.pop("_in", None)
        br.__dict__.pop("_out", None)
    return BranchFamily(k, n, h, tol, (a, b), [s[0] for s in samples], branches, seams, max_slope,
                        samples=[(s[0], list(map(float, s[1]))) for s in samples])


def crossing_count(V, k: int, n: int, t_steps: int = 50, h: float = 1e-3, tol: float = DEFAULT_TOL,
                   reverse: bool = False, family: BranchFamily | None = None) -> CrossingReport:
    """Net number of branches crossing gap k downward as t runs 0 -> 1.

    ``reverse`` relabels t as 1 - t, which swaps entry and exit.
    """
    fam = family or track_branches(V, k, n, t_steps, h, tol)
    down = up = 0
    ledger = []
    bad = {s["branch"] for s in fam.seams if "branch" in s}
    for br in fam.branches:
        entry, exit_ = br.entry_edge, br.exit_edge
        if reverse:
            entry, exit_ = exit_, entry
        d = "down" if (entry, exit_) == ("b", "a") else "up" if (entry, exit_) == ("a", "b") else "none"
        if br.j in bad:
            d = "excluded"
        down += d == "down"
        up += d == "up"
        ledger.append({"branch": br.j, "t_start": br.t[0], "t_end": br.t[-1],
                       "value_start": br.values[0], "value_end": br.values[-1],
                       "entry_edge": entry, "exit_edge": exit_, "direction": d})
    return CrossingReport(k, down - up, down, up, len(fam.seams), ledger, n, fam.h, fam.max_slope)


# -- strips ------------------------------------------------------------------

def _union(intervals):
    out = []
    for lo, hi in sorted(intervals):
        if out and lo <= out[-1][1]:
            out[-1][1] = max(out[-1][1], hi)
        else:
            out.append([lo, hi])
    return [tuple(x) for x in out]


def strip_gaps(V2d, h: float, phase: float = 0.0, count: int = 8, kx_samples: int = 16):
    """Gaps of the transverse fiber S_0(phase) below the ``count``-th band.

    Separable potentials use exact sums of discrete 1D band intervals and
    transverse cell eigenvalues.  Otherwise the x-quasimomentum is sampled
    on ``kx_samples`` points, so gaps come out slightly too wide.
    """
    parts = split_separable(V2d)
    if parts is not None:
        vx, vy = parts
        ex = discrete_band_edges(vx, h, 2 * count)
        if abs(math.sin(phase)) < 1e-15 and math.cos(phase) > 0:
            nu = np.asarray(_edges_cached(vy, float(h), count, 0.0))
        else:
            nu = np.asarray(_edges_cached(vy, float(h), count, float(phase)))
        bands = [(ex[2 * i] + v, ex[2 * i + 1] + v) for i in range(count) for v in nu]
    else:
        N = int(round(1 / h))
        vals = []
        for kx in np.linspace(0, math.pi, kx_samples):
            Ax = bands1d.bloch_cell_matrix(lambda x: 0 * x, h, kx)
            Ay = bands1d.bloch_cell_matrix(lambda y: 0 * y, h, phase)
            x = h * np.arange(N)
            X, Y = np.meshgrid(x, x, indexing="ij")
            A = sp.kron(Ax, sp.identity(N)) + sp.kron(sp.identity(N), Ay) + sp.diags(V2d(X, Y).ravel())
            vals.append(sla.eigvalsh(A.toarray(), subset_by_index=[0, count - 1]))
        vals = np.array(vals)
        bands = [(vals[:, i].min(), vals[:, i].max()) for i in range(count)]
    u = _union(bands)
    top = sorted(bands)[count - 1][0] if parts is not None else u[-1][1]
    return [(u[i][1], u[i + 1][0]) for i in range(len(u) - 1) if u[i + 1][0] <= top + 1e-12]


def bulk_gaps_2d(V2d, h: float, count: int = 8):
    """Gaps of the discrete 2D periodic operator (all quasimomenta), separable V only.

    The spectrum is the Minkowski sum of the two 1D band sets.
    """
    parts = split_separable(V2d)
    if parts is None:
        raise ValueError("bulk 2D gaps are implemented for separable potentials")
    ex = discrete_band_edges(parts[0], h, 2 * count)
    ey = discrete_band_edges(parts[1], h, 2 * count)
    bands = [(ex[2 * i] + ey[2 * j], ex[2 * i + 1] + ey[2 * j + 1]) for i in range(count) for j in range(count)]
    u = _union(bands)
    # above ex[0] + ey[2 count - 2] some missing band could still fill a gap
    top = min(ex[2 * count - 2] + ey[0], ex[0] + ey[2 * count - 2])
    return [(float(u[i][1]), float(u[i + 1][0])) for i in range(len(u) - 1) if u[i + 1][0] <= top]


def strip_section_spectrum(V2d, t: float, n: int, gap, transverse_bc="periodic", h: float = 1 / 32,
                           tol: float = DEFAULT_TOL, snap: bool = True, n_left: int | None = None,
                           want_vectors: bool = False):
    """Gap eigenvalues of the FD strip on (-n - t, n) x (0, 1)."""
    a, b = map(float, gap)
    op = assemble_strip(V2d, t, n, transverse_bc, h, snap=snap, n_left=n_left)
    r = interior_eigs(op.matrix, (a + 5 * tol, b - 5 * tol), tol=tol, want_vectors=want_vectors)
    return r, op


def strip_find_t(V2d, E: float, n: int, gap, h: float = 1 / 32, transverse_bc="periodic",
                 t_samples: int = 9, tol: float = DEFAULT_TOL, target: float | None = None) -> dict:
    """Find t where a strip gap eigenvalue passes within ``target`` of E.

    Scans a coarse snapped grid for a change in the number of gap
    eigenvalues below E, then bisects with the left cell count frozen so
    that the operator moves continuously with t.
    """
    a, b = map(float, gap)
    target = (b - a) / 100 if target is None else target

    def below(t, NL=None):
        r, op = strip_section_spectrum(V2d, t, n, gap, transverse_bc, h, tol,
                                       snap=NL is None, n_left=NL)
        v = r.values
        return int((v < E).sum()), v, op.meta["t_snapped"]

    grid = []
    for t in np.linspace(0, 1, t_samples):
        c, v, tu = below(float(t))
        grid.append((tu, c, v))
        if len(v) and np.min(np.abs(v - E)) <= target:
            return {"t": tu, "value": float(v[np.argmin(np.abs(v - E))]), "distance": float(np.min(np.abs(v - E))),
                    "E": E, "steps": 0, "found": True}
    for (t0, c0, _), (t1, c1, _) in zip(grid, grid[1:]):
        if c0 != c1:
            break
    else:
        return {"E": E, "found": False, "t": None, "distance": math.inf}
    NL = section_grid(t0, n, h, True, None)[3]
    lo, hi = t0, t1
    c_lo = below(lo, NL)[0]
    best = (math.inf, None, None)
    steps = 0
    for steps in range(1, 60):
        tm = 0.5 * (lo + hi)
        c, v, _ = below(tm, NL)
        if len(v):
            j = int(np.argmin(np.abs(v - E)))
            if abs(v[j] - E) < best[0]:
                best = (abs(v[j] - E), tm, float(v[j]))
        if best[0] <= target:
            break
        if c == c_lo:
            lo = tm
        else:
            hi = tm
    return {"E": E, "found": best[0] <= target, "t": best[1], "value": best[2], "distance": best[0],
            "steps": steps, "n_left": NL}


def fiber_union_spectrum(V2d, t: float, n: int, gap, phases, h: float = 1 / 16,
                         tol: float = DEFAULT_TOL) -> dict:
    """Union over transverse Bloch phases of strip gap eigenvalues.

    Eigenvalues are followed across neighbouring phases by sorted index;
    wherever the count stays fixed the per-index ranges become intervals.
    """
    phases = sorted(float(p) for p in phases)
    per = []
    for ph in phases:
        r, _ = strip_section_spectrum(V2d, t, n, gap, ("bloch", ph), h, tol)
        per.append(np.sort(r.values))
    ivs = []
    for v0, v1 in zip(per, per[1:] + per[:1]):
        if len(v0) == len(v1):
            ivs += [(min(x, y), max(x, y)) for x, y in zip(v0, v1)]
        else:
            ivs += [(x, x) for x in np.concatenate([v0, v1])]
    merged = []
    for lo, hi in sorted(ivs):
        if merged and lo <= merged[-1][1] + 10 * tol:
            merged[-1][1] = max(merged[-1][1], hi)
        else:
            merged.append([lo, hi])
    return {"phases": phases, "per_phase": [list(map(float, p)) for p in per],
            "intervals": [tuple(map(float, m)) for m in merged]}


# -- approximate eigenfunctions ----------------------------------------------

def taper(x, half: float, margin: float = 0.25):
    """1 on |x| <= (1 - margin) half, cos^2 fall-off to 0 at |x| = half."""
    x = np.abs(np.asarray(x, dtype=float))
    inner = (1 - margin) * half
    s = np.clip((x - inner) / (margin * half), 0.0, 1.0)
    return np.cos(0.5 * math.pi * s) ** 2


def approximate_eigenfunction(V2d, t: float, E: float, n: int, h: float = 1 / 32, gap=None,
                              margin: float = 0.25, threshold: float | None = None,
                              strip_n: int | None = None, tol: float = DEFAULT_TOL,
                              n_left: int | None = None) -> dict:
    """Tapered periodic extension of a strip gap eigenvector to the box (-n, n)^2.

    The strip eigenvalue closest to ``E`` is used; the residual is taken
    with the Dirichlet box operator carrying the dislocated potential.
    """
    if gap is None:
        gap = strip_gaps(V2d, h)[0]
    m = n if strip_n is None else strip_n
    r, op = strip_section_spectrum(V2d, t, m, gap, "periodic", h, tol, want_vectors=True,
                                   snap=n_left is None, n_left=n_left)
    if r.count == 0:
        raise ValueError("no strip eigenvalue in the gap at this t")
    j = int(np.argmin(np.abs(r.values - E)))
    lam = float(r.values[j])
    u = op.to_grid(r.vectors[:, j])
    if np.iscomplexobj(u):
        u = u * np.exp(-1j * np.angle(u.flat[np.argmax(np.abs(u))]))
        u = u.real
    xs = op.meta["x"]
    t_used = op.meta["t_snapped"]
    bx, by = box_axes(((-n, n), (-n, n)), h)
    # strip nodes for box x-nodes; the left piece may be stretched
    ix = np.interp(bx, xs, np.arange(len(xs)))
    i0 = np.clip(np.floor(ix).astype(int), 0, len(xs) - 2)
    fr = ix - i0
    ux = (1 - fr)[:, None] * u[i0] + fr[:, None] * u[i0 + 1]
    Ny = u.shape[1]
    iy = np.round(by / h).astype(int) % Ny
    w = ux[:, iy]
    w = w * taper(bx, n, margin)[:, None] * taper(by, n, margin)[None, :]
    w /= np.linalg.norm(w)
    X, Y = np.meshgrid(bx, by, indexing="ij")
    W = DislocationPotential(V2d, t_used)
    res = float(np.linalg.norm(apply_box_operator(w, W(X, Y), h) - lam * w))
    out = {"eigenvalue": lam, "t": t_used, "residual": res, "n": n, "h": h, "w": w,
           "x": bx, "y": by}
    if threshold is not None:
        out["ok"] = res <= threshold
    return out
