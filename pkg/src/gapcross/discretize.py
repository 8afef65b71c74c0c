"""Finite-difference assembly of -Laplacian + potential.

Second-order central differences everywhere: 3-point stencil in 1D,
5-point in 2D.  Bloch conditions produce complex Hermitian matrices.
2D unknowns are ordered x-major, ``index = ix * ny + iy``.

Periodic sections ``(-n - t, n)`` may use a stretched left piece: the
left half carries ``n_left`` cells of width ``(n + t) / n_left`` while the
right half keeps width ``h``.  The non-uniform stencil is symmetrised with
the lumped nodal masses, ``A = M^-1/2 K M^-1/2``; at snapped ``t`` the
stretch factor is exactly one and the plain uniform stencil results.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
import scipy.io
import scipy.sparse as sp

__all__ = [
    "Geometry",
    "AssembledOperator",
    "EmptyDomainError",
    "GridError",
    "assemble_1d",
    "section_grid",
    "assemble_section_1d",
    "assemble_strip",
    "assemble_box",
    "assemble_disc",
    "box_axes",
    "apply_box_operator",
    "normalize_phase",
    "node_values",
]


class GridError(ValueError):
    """Mesh too coarse or geometry inconsistent with the mesh."""


class EmptyDomainError(ValueError):
    """The domain mask holds no grid node (no eigenvalue below +inf)."""


@dataclass(frozen=True)
class Geometry:
    kind: str
    params: dict
    h: float


@dataclass
class AssembledOperator:
    matrix: sp.csr_matrix
    geometry: Geometry
    bc: dict
    coords: tuple
    shape: tuple | None = None
    mass: np.ndarray | None = None
    meta: dict = field(default_factory=dict)

    @property
    def dimension(self) -> int:
        return self.matrix.shape[0]

    @property
    def is_complex(self) -> bool:
        return np.iscomplexobj(self.matrix.data)

    def gershgorin(self) -> tuple[float, float]:
        A = self.matrix.tocsr()
        d = A.diagonal().real
        off = np.asarray(abs(A).sum(axis=1)).ravel() - np.abs(d)
        return float((d - off).min()), float((d + off).max())

    def symmetry_defect(self) -> float:
        A = self.matrix
        D = A - A.conj().T
        return float(abs(D).max()) if D.nnz else 0.0

    def to_matrix_market(self, path) -> None:
        scipy.io.mmwrite(str(path), self.matrix.tocoo(), symmetry="hermitian" if self.is_complex else "symmetric")

    def to_grid(self, vec: np.ndarray) -> np.ndarray:
        """Undo the mass scaling and reshape an eigenvector onto the grid."""
        v = np.asarray(vec)
        if self.mass is not None:
            v = v / np.sqrt(self.mass)
        return v.reshape(self.shape) if self.shape is not None else v


def normalize_phase(phi: float) -> float:
    return float(math.fmod(math.fmod(phi, 2 * math.pi) + 2 * math.pi, 2 * math.pi))


def _cells(length: float, h: float) -> int:
    N = int(round(length / h))
    if N < 1:
        raise GridError(f"mesh size {h} too coarse for length {length}")
    return N


def _ring_laplacian(spacings: np.ndarray, phase: float = 0.0):
    """Stiffness K and lumped masses for a ring of nodes with given spacings.

    ``spacings[i]`` joins node i and i+1; the last one wraps to node 0 and
    carries the Bloch factor exp(i phase).
    """
    N = len(spacings)
    s = np.asarray(spacings, dtype=float)
    w = 1.0 / s
    i = np.arange(N)
    j = (i + 1) % N
    cplx = phase != 0.0
    off = -w.astype(complex) if cplx else -w.copy()
    if cplx:
        off[-1] = -w[-1] * np.exp(1j * phase)  # u_N = e^{i phase} u_0
    rows = np.concatenate([i, j, i, j])
    cols = np.concatenate([i, j, j, i])
    vals = np.concatenate([w, w, off, np.conj(off) if cplx else off])
    K = sp.coo_matrix((vals, (rows, cols)), shape=(N, N)).tocsr()
    mass = 0.5 * (s + np.roll(s, 1))
    return K, mass


def node_values(V, x, s_left, s_right):
    """Potential values at 1D nodes.

    Piecewise-constant potentials are averaged over each node's control
    volume ``[x - s_left/2, x + s_right/2]``; the average moves continuously
    with the nodes, unlike a point value sitting on a jump.
    """
    x = np.asarray(x, dtype=float)
    if V is None:
        return np.zeros_like(x)
    if getattr(V, "piecewise_constant", False) and hasattr(V, "integral"):
        lo, hi = x - 0.5 * np.asarray(s_left), x + 0.5 * np.asarray(s_right)
        return V.integral(lo, hi) / (hi - lo)
    return np.asarray(V(x), dtype=float)


def _dirichlet_1d(N_inner: int, h: float) -> sp.csr_matrix:
    e = np.ones(N_inner)
    return sp.diags([-e[:-1], 2 * e, -e[:-1]], [-1, 0, 1], format="csr") / (h * h)


def _sym_scale(K, mass):
    d = sp.diags(1.0 / np.sqrt(mass))
    return (d @ K @ d).tocsr()


def _parse_bc(bc):
    """'periodic' | 'dirichlet' | ('bloch', phi) | 'bloch(phi)'."""
    if isinstance(bc, tuple):
        kind, phi = bc
        return kind, normalize_phase(float(phi))
    if isinstance(bc, str) and bc.startswith("bloch"):
        phi = float(bc[bc.index("(") + 1 : bc.index(")")])
        return "bloch", normalize_phase(phi)
    if bc in ("periodic", "dirichlet"):
        return bc, 0.0
    raise ValueError(f"unknown boundary condition {bc!r}")


def _bc_tag(kind: str, phi: float) -> str:
    return f"bloch({phi!r})" if kind == "bloch" else kind


def assemble_1d(V, interval, bc="periodic", h: float = 1e-3) -> AssembledOperator:
    a, b = map(float, interval)
    if b - a < 2 * h:
        raise GridError("interval shorter than two mesh cells")
    N = _cells(b - a, h)
    h_eff = (b - a) / N
    kind, phi = _parse_bc(bc)
    if kind == "dirichlet":
        if N < 4:
            raise GridError("fewer than three interior nodes")
        x = a + h_eff * np.arange(1, N)
        A = _dirichlet_1d(N - 1, h_eff)
        mass = None
    else:
        if N < 3:
            raise GridError("fewer than three nodes on the periodic cell")
        x = a + h_eff * np.arange(N)
        K, mass = _ring_laplacian(np.full(N, h_eff), phi if kind == "bloch" else 0.0)
        A = K / h_eff
        mass = None
    vals = node_values(V, x, h_eff, h_eff)
    A = (A + sp.diags(vals)).tocsr()
    geo = Geometry("interval", {"a": a, "b": b}, h_eff)
    return AssembledOperator(A, geo, {"x": _bc_tag(kind, phi)}, (x,), shape=(len(x),), mass=mass,
                             meta={"h_requested": h})


def section_grid(t: float, n: int, h: float, snap: bool = True, n_left: int | None = None):
    """Nodes of the periodic section (-n - t, n).

    Returns ``(x, spacings, t_used, n_left, h_left)``.  The right piece has
    ``n / h`` cells; the left piece ``n_left`` cells of width ``h_left``.
    """
    if not 0.0 <= t <= 1.0:
        raise ValueError("t must lie in [0, 1]")
    NR = _cells(n, h)
    if abs(NR * h - n) > 1e-9 * n:
        raise GridError(f"h={h} does not divide n={n}")
    if snap and n_left is None:
        NL = int(round((n + t) / h))
        t_used = min(max(NL * h - n, 0.0), 1.0)
        NL = int(round((n + t_used) / h))
        hL = h
    else:
        NL = int(n_left) if n_left is not None else int(round((n + t) / h))
        if NL < 1:
            raise GridError("empty left piece")
        t_used = float(t)
        hL = (n + t) / NL
    xl = -hL * np.arange(NL - 1, 0, -1)
    xr = h * np.arange(NR + 1)
    x = np.concatenate([xl, xr])
    s = np.diff(x)
    L = 2 * n + t_used
    s = np.append(s, x[0] + L - x[-1])
    return x, s, t_used, NL, hL


def assemble_section_1d(V, t: float, n: int, h: float, snap: bool = True,
                        n_left: int | None = None) -> AssembledOperator:
    """Periodic FD operator -d2/dx2 + W_t on (-n - t, n)."""
    from .potentials import DislocationPotential

    x, s, t_used, NL, hL = section_grid(t, n, h, snap, n_left)
    if len(x) < 3:
        raise GridError("fewer than three nodes")
    K, mass = _ring_laplacian(s)
    W = DislocationPotential(V, t_used)
    A = (_sym_scale(K, mass) + sp.diags(node_values(W, x, np.roll(s, 1), s))).tocsr()
    uniform = abs(hL - h) <= 1e-12 * h
    geo = Geometry("section", {"n": n, "t": t_used}, h)
    return AssembledOperator(
        A, geo, {"x": "periodic"}, (x,), shape=(len(x),), mass=None if uniform else mass,
        meta={"t_requested": t, "t_snapped": t_used, "n_left": NL, "h_left": hL},
    )


def assemble_strip(V, t: float, n: int, transverse_bc="periodic", h: float = 1 / 32,
                   snap: bool = True, n_left: int | None = None) -> AssembledOperator:
    """5-point operator on (-n - t, n) x (0, 1), periodic in x, periodic or Bloch in y."""
    from .potentials import DislocationPotential

    x, s, t_used, NL, hL = section_grid(t, n, h, snap, n_left)
    kind, phi = _parse_bc(transverse_bc)
    if kind == "dirichlet":
        raise ValueError("strip transverse condition must be periodic or Bloch")
    Ny = _cells(1.0, h)
    if abs(Ny * h - 1.0) > 1e-12:
        raise GridError("h must divide the unit period")
    y = h * np.arange(Ny)
    Kx, mx = _ring_laplacian(s)
    Ax = _sym_scale(Kx, mx)
    Ky, _ = _ring_laplacian(np.full(Ny, h), phi if kind == "bloch" else 0.0)
    Ay = Ky / h
    Nx = len(x)
    X, Y = np.meshgrid(x, y, indexing="ij")
    W = DislocationPotential(V, t_used)
    A = sp.kron(Ax, sp.identity(Ny)) + sp.kron(sp.identity(Nx), Ay) + sp.diags(W(X, Y).ravel())
    uniform = abs(hL - h) <= 1e-12 * h
    mass = None if uniform else np.repeat(mx, Ny)
    geo = Geometry("strip", {"n": n, "t": t_used}, h)
    return AssembledOperator(
        A.tocsr(), geo, {"x": "periodic", "y": _bc_tag(kind, phi)}, (X.ravel(), Y.ravel()),
        shape=(Nx, Ny), mass=mass,
        meta={"t_requested": t, "t_snapped": t_used, "n_left": NL, "h_left": hL, "x": x, "y": y},
    )


def box_axes(box, h: float):
    """Interior node coordinates of a Dirichlet box ((x0, x1), (y0, y1))."""
    (x0, x1), (y0, y1) = box
    Nx, Ny = _cells(x1 - x0, h), _cells(y1 - y0, h)
    for N, L in ((Nx, x1 - x0), (Ny, y1 - y0)):
        if abs(N * h - L) > 1e-9 * max(1.0, abs(L)):
            raise GridError(f"h={h} does not divide box side {L}")
    if Nx < 2 or Ny < 2:
        raise GridError("box side shorter than two mesh cells")
    return x0 + h * np.arange(1, Nx), y0 + h * np.arange(1, Ny)


def assemble_box(V, box, h: float) -> AssembledOperator:
    """Dirichlet 5-point operator on the box ((x0, x1), (y0, y1))."""
    x, y = box_axes(box, h)
    Ax, Ay = _dirichlet_1d(len(x), h), _dirichlet_1d(len(y), h)
    X, Y = np.meshgrid(x, y, indexing="ij")
    vals = np.zeros(X.size) if V is None else np.asarray(V(X, Y), dtype=float).ravel()
    A = sp.kron(Ax, sp.identity(len(y))) + sp.kron(sp.identity(len(x)), Ay) + sp.diags(vals)
    geo = Geometry("box", {"box": tuple(map(tuple, box))}, h)
    return AssembledOperator(A.tocsr(), geo, {"x": "dirichlet", "y": "dirichlet"},
                             (X.ravel(), Y.ravel()), shape=(len(x), len(y)),
                             meta={"x": x, "y": y})


def apply_box_operator(w: np.ndarray, potential_values: np.ndarray, h: float) -> np.ndarray:
    """Dirichlet 5-point operator applied to a grid function, without assembly."""
    out = (4.0 / (h * h) + potential_values) * w
    out[1:, :] -= w[:-1, :] / (h * h)
    out[:-1, :] -= w[1:, :] / (h * h)
    out[:, 1:] -= w[:, :-1] / (h * h)
    out[:, :-1] -= w[:, 1:] / (h * h)
    return out


def assemble_disc(center, r: float, h: float, cut_x: float | None = None, origin=None,
                  potential=None) -> AssembledOperator:
    """Dirichlet 5-point operator on a staircase disc mask.

    Nodes lie on ``origin + h Z^2`` (default: the disc center) and are kept
    when strictly inside the disc and, for a cut disc, strictly left of
    ``cut_x``.
    """
    if r < 4 * h:
        raise GridError("disc radius below four mesh cells")
    cx, cy = map(float, center)
    ox, oy = (cx, cy) if origin is None else map(float, origin)
    i0 = int(math.floor((cx - r - ox) / h)) - 1
    i1 = int(math.ceil((cx + r - ox) / h)) + 1
    j0 = int(math.floor((cy - r - oy) / h)) - 1
    j1 = int(math.ceil((cy + r - oy) / h)) + 1
    I, J = np.meshgrid(np.arange(i0, i1 + 1), np.arange(j0, j1 + 1), indexing="ij")
    X, Y = ox + h * I, oy + h * J
    mask = (X - cx) ** 2 + (Y - cy) ** 2 < r * r
    if cut_x is not None:
        mask &= X < cut_x
    if not mask.any():
        raise EmptyDomainError("domain mask holds no grid node")
    idx = -np.ones(mask.shape, dtype=np.int64)
    idx[mask] = np.arange(mask.sum())
    rows, cols = [], []
    for di, dj in ((1, 0), (-1, 0), (0, 1), (0, -1)):
        nb = np.roll(np.roll(idx, -di, axis=0), -dj, axis=1)
        ok = mask & (nb >= 0)
        rows.append(idx[ok])
        cols.append(nb[ok])
    rows, cols = np.concatenate(rows), np.concatenate(cols)
    N = int(mask.sum())
    L = sp.coo_matrix((-np.ones(len(rows)) / h**2, (rows, cols)), shape=(N, N))
    diag = np.full(N, 4.0 / h**2)
    if potential is not None:
        diag = diag + np.asarray(potential(X[mask], Y[mask]), dtype=float)
    A = (L + sp.diags(diag)).tocsr()
    kind = "disc" if cut_x is None else "cut_disc"
    geo = Geometry(kind, {"center": (cx, cy), "r": r, "cut_x": cut_x}, h)
    return AssembledOperator(A, geo, {"boundary": "dirichlet"}, (X[mask], Y[mask]),
                             meta={"I": I[mask], "J": J[mask], "origin": (ox, oy)})
