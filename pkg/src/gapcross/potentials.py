"""Potential models as pure, vectorised samplers.

Every other module reads a potential only by calling it on coordinate
arrays, so one object serves 1D sections, strips and 2D boxes alike.
The interface line ``x = 0`` always belongs to the right piece.
"""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Sequence

import numpy as np

__all__ = [
    "Regularity",
    "StepPotential",
    "TrigPotential1D",
    "TrigPotential2D",
    "SeparablePotential2D",
    "MuffinTinPotential",
    "DislocationPotential",
    "RotatedPotential",
    "InterfacePotential",
    "make_step_potential",
    "sample_dislocation",
    "sample_rotated",
    "default_step_potential",
    "default_potential_2d",
    "rotation_matrix",
    "split_separable",
]


class Regularity(enum.Enum):
    L1LOC = "L1loc"
    HOLDER = "Holder"
    LIPSCHITZ = "Lipschitz"


def _frac(x):
    return np.asarray(x, dtype=float) - np.floor(x)


def rotation_matrix(theta: float) -> np.ndarray:
    c, s = math.cos(theta), math.sin(theta)
    return np.array([[c, -s], [s, c]])


# ---------------------------------------------------------------------------
# 1D periodic potentials
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class StepPotential:
    """Piecewise-constant 1-periodic potential.

    ``breaks[i]`` is the left end of the i-th sub-interval of [0, 1); the
    potential equals ``levels[i]`` on ``[breaks[i], breaks[i+1])``.
    """

    breaks: tuple[float, ...]
    levels: tuple[float, ...]
    period: float = 1.0
    ndim: int = field(default=1, init=False)

    def __post_init__(self):
        if len(self.breaks) != len(self.levels) or not self.breaks:
            raise ValueError("breaks and levels must be non-empty and of equal length")
        if self.breaks[0] != 0.0:
            raise ValueError("first sub-interval must start at 0")
        if any(b1 <= b0 for b0, b1 in zip(self.breaks, self.breaks[1:])):
            raise ValueError("breaks must be strictly increasing")
        if self.breaks[-1] >= 1.0:
            raise ValueError("breaks must lie in [0, 1)")

    def __call__(self, x):
        u = _frac(x)
        idx = np.searchsorted(np.asarray(self.breaks), u, side="right") - 1
        return np.asarray(self.levels, dtype=float)[idx]

    @property
    def regularity(self) -> Regularity:
        # periodic step functions are Lipschitz in the L1 mean (class P_1)
        return Regularity.LIPSCHITZ

    @property
    def holder_exponent(self) -> float:
        return 1.0

    @property
    def bound(self) -> float:
        return float(max(abs(v) for v in self.levels))

    @property
    def piecewise_constant(self) -> bool:
        return True

    def segments(self) -> list[tuple[float, float]]:
        """(length, level) pairs covering one period in order."""
        ends = list(self.breaks[1:]) + [1.0]
        return [(e - b, v) for b, e, v in zip(self.breaks, ends, self.levels)]

    def integral(self, lo, hi):
        """Exact integral over [lo, hi] (vectorised)."""
        return self._antiderivative(hi) - self._antiderivative(lo)

    def _antiderivative(self, x):
        x = np.asarray(x, dtype=float)
        br = np.asarray(self.breaks + (1.0,))
        lv = np.asarray(self.levels, dtype=float)
        cum = np.concatenate([[0.0], np.cumsum(np.diff(br) * lv)])
        k = np.floor(x)
        u = x - k
        i = np.clip(np.searchsorted(br, u, side="right") - 1, 0, len(lv) - 1)
        return k * cum[-1] + cum[i] + (u - br[i]) * lv[i]

    def jumps(self) -> list[float]:
        lv = list(self.levels)
        return [lv[i] - lv[i - 1] for i in range(len(lv))]  # i=0 wraps around

    def l1_modulus_constant(self) -> float:
        """C with  int_0^1 |V(x+s) - V(x)| dx <= C s  for all s in (0, 1]."""
        return float(sum(abs(j) for j in self.jumps()))

    @property
    def lipschitz_constant(self) -> float:
        return 0.0 if len(self.levels) == 1 else math.inf

    def minimum(self) -> float:
        return float(min(self.levels))


@dataclass(frozen=True)
class TrigPotential1D:
    """V(x) = c0 + sum_m a_m cos(2 pi m x) + b_m sin(2 pi m x)."""

    c0: float = 0.0
    cos_terms: tuple[tuple[int, float], ...] = ()
    sin_terms: tuple[tuple[int, float], ...] = ()
    period: float = 1.0
    ndim: int = field(default=1, init=False)

    def __call__(self, x):
        x = np.asarray(x, dtype=float)
        out = np.full(x.shape, float(self.c0))
        for m, a in self.cos_terms:
            out = out + a * np.cos(2 * np.pi * m * x)
        for m, b in self.sin_terms:
            out = out + b * np.sin(2 * np.pi * m * x)
        return out

    regularity = Regularity.LIPSCHITZ
    holder_exponent = 1.0
    piecewise_constant = False

    @property
    def bound(self) -> float:
        return abs(self.c0) + sum(abs(a) for _, a in self.cos_terms) + sum(
            abs(b) for _, b in self.sin_terms
        )

    @property
    def lipschitz_constant(self) -> float:
        return sum(2 * np.pi * m * abs(a) for m, a in self.cos_terms + self.sin_terms)

    def l1_modulus_constant(self) -> float:
        return self.lipschitz_constant

    def minimum(self) -> float:
        x = np.linspace(0.0, 1.0, 4097)
        return float(self(x).min())


def make_step_potential(levels: Sequence[tuple[tuple[float, float], float]]) -> StepPotential:
    """Build a step potential from ``[((a, b), energy), ...]`` covering [0, 1).

    Sub-intervals are half-open ``[a, b)``; they must tile [0, 1) exactly.
    """
    items = sorted(((float(a), float(b)), float(v)) for (a, b), v in levels)
    if not items:
        raise ValueError("no levels given")
    pos = 0.0
    for (a, b), _ in items:
        if b <= a:
            raise ValueError(f"empty sub-interval [{a}, {b})")
        if a < pos:
            raise ValueError(f"sub-interval [{a}, {b}) overlaps its predecessor")
        if a > pos:
            raise ValueError(f"gap in partition between {pos} and {a}")
        pos = b
    if pos != 1.0:
        raise ValueError(f"partition ends at {pos}, expected 1")
    return StepPotential(
        breaks=tuple(a for (a, _), _ in items), levels=tuple(v for _, v in items)
    )


def default_step_potential() -> StepPotential:
    return make_step_potential([((0.0, 0.5), 0.0), ((0.5, 1.0), 20.0)])


# ---------------------------------------------------------------------------
# 2D periodic potentials
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class TrigPotential2D:
    """V(x, y) = c0 + sum amp * cos(2 pi (mx x + my y) + phase)."""

    c0: float = 0.0
    terms: tuple[tuple[int, int, float, float], ...] = ()
    ndim: int = field(default=2, init=False)

    def __call__(self, x, y):
        x = np.asarray(x, dtype=float)
        y = np.asarray(y, dtype=float)
        out = np.full(np.broadcast(x, y).shape, float(self.c0))
        for mx, my, amp, ph in self.terms:
            out = out + amp * np.cos(2 * np.pi * (mx * x + my * y) + ph)
        return out

    @property
    def lipschitz_constant(self) -> float:
        return float(sum(2 * np.pi * math.hypot(mx, my) * abs(a) for mx, my, a, _ in self.terms))

    @property
    def bound(self) -> float:
        return abs(self.c0) + sum(abs(a) for _, _, a, _ in self.terms)

    @property
    def separable(self):
        """(vx, vy) if V is a sum of a function of x and a function of y."""
        if any(mx != 0 and my != 0 for mx, my, _, _ in self.terms):
            return None

        def part(axis):
            cos_t, sin_t, c = [], [], 0.0
            for mx, my, a, ph in self.terms:
                m = mx if axis == 0 else my
                other = my if axis == 0 else mx
                if m == 0 and other == 0:
                    if axis == 0:
                        c += a * math.cos(ph)
                    continue
                if m == 0:
                    continue
                # a cos(2 pi m x + ph) = a cos ph cos(..) - a sin ph sin(..)
                cos_t.append((m, a * math.cos(ph)))
                sin_t.append((m, -a * math.sin(ph)))
            return TrigPotential1D(
                c0=(self.c0 + c) if axis == 0 else 0.0,
                cos_terms=tuple(cos_t),
                sin_terms=tuple((m, b) for m, b in sin_t if b != 0.0),
            )

        return part(0), part(1)


@dataclass(frozen=True)
class SeparablePotential2D:
    """V(x, y) = vx(x) + vy(y) with 1-periodic factors."""

    vx: object
    vy: object
    ndim: int = field(default=2, init=False)

    def __call__(self, x, y):
        return self.vx(x) + self.vy(y)

    @property
    def separable(self):
        return self.vx, self.vy

    @property
    def lipschitz_constant(self) -> float:
        return math.hypot(self.vx.lipschitz_constant, self.vy.lipschitz_constant)

    @property
    def bound(self) -> float:
        return self.vx.bound + self.vy.bound


@dataclass(frozen=True)
class MuffinTinPotential:
    """Zero on the discs B_r(P0 + Z^2), ``height`` elsewhere.

    ``height = inf`` is kept symbolic: such a potential is never sampled for
    discretisation, the muffin-tin module restricts the domain instead.
    """

    r: float
    center: tuple[float, float] = (0.5, 0.5)
    height: float = math.inf
    ndim: int = field(default=2, init=False)

    def __post_init__(self):
        if not 0.0 < self.r < 0.5:
            raise ValueError("muffin-tin radius must lie in (0, 1/2)")
        cx, cy = self.center
        if not (0.0 <= cx < 1.0 and 0.0 <= cy < 1.0):
            raise ValueError("center must lie in [0, 1)^2")

    def inside(self, x, y):
        dx = _frac(np.asarray(x, dtype=float) - self.center[0] + 0.5) - 0.5
        dy = _frac(np.asarray(y, dtype=float) - self.center[1] + 0.5) - 0.5
        return dx * dx + dy * dy < self.r * self.r

    def __call__(self, x, y):
        if math.isinf(self.height):
            raise ValueError("infinite muffin tins are handled by domain restriction")
        return np.where(self.inside(x, y), 0.0, float(self.height))

    @property
    def bound(self) -> float:
        return float(self.height)

    @property
    def lipschitz_constant(self) -> float:
        return math.inf


def default_potential_2d() -> TrigPotential2D:
    """-40 (cos 2 pi x + cos 2 pi y); Lipschitz, additively separable, open 2D gap."""
    return TrigPotential2D(terms=((1, 0, -40.0, 0.0), (0, 1, -40.0, 0.0)))


def split_separable(V):
    """Return (vx, vy) for an additively separable 2D potential, else None."""
    return getattr(V, "separable", None)


# ---------------------------------------------------------------------------
# Defect potentials
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class DislocationPotential:
    """base on {x >= 0}; base shifted by t in x on {x < 0}."""

    base: object
    t: float

    def __post_init__(self):
        if not 0.0 <= self.t <= 1.0:
            raise ValueError("dislocation parameter t must lie in [0, 1]")

    @property
    def ndim(self) -> int:
        return self.base.ndim

    def __call__(self, x, y=None):
        x = np.asarray(x, dtype=float)
        xs = np.where(x < 0.0, x + self.t, x)
        if self.base.ndim == 1:
            return self.base(xs)
        return self.base(xs, y)

    @property
    def separable(self):
        parts = split_separable(self.base)
        if parts is None:
            return None
        return DislocationPotential(parts[0], self.t), parts[1]

    @property
    def piecewise_constant(self) -> bool:
        return bool(getattr(self.base, "piecewise_constant", False))

    def integral(self, lo, hi):
        # left of the interface the base is read at y + t
        lo = np.asarray(lo, dtype=float)
        hi = np.asarray(hi, dtype=float)
        m_lo, m_hi = np.minimum(lo, 0.0), np.minimum(hi, 0.0)
        left = self.base.integral(m_lo + self.t, m_hi + self.t)
        right = self.base.integral(np.maximum(lo, 0.0), np.maximum(hi, 0.0))
        return left + right

    @property
    def lipschitz_constant(self) -> float:
        return self.base.lipschitz_constant

    @property
    def bound(self) -> float:
        return self.base.bound


@dataclass(frozen=True)
class RotatedPotential:
    """base on {x >= 0}; base(M_{-theta} p) on {x < 0}."""

    base: object
    theta: float
    ndim: int = field(default=2, init=False)

    def __post_init__(self):
        if not 0.0 <= self.theta < math.pi / 2:
            raise ValueError("theta must lie in [0, pi/2)")

    def __call__(self, x, y):
        x = np.asarray(x, dtype=float)
        y = np.asarray(y, dtype=float)
        c, s = math.cos(self.theta), math.sin(self.theta)
        # M_{-theta} (x, y) = (c x + s y, -s x + c y)
        xr = np.where(x < 0.0, c * x + s * y, x)
        yr = np.where(x < 0.0, -s * x + c * y, y)
        return self.base(xr, yr)

    @property
    def lipschitz_constant(self) -> float:
        return self.base.lipschitz_constant

    @property
    def bound(self) -> float:
        return self.base.bound

    separable = None


@dataclass(frozen=True)
class InterfacePotential:
    """``left`` on {x < 0}, ``right`` on {x >= 0}; neither need be periodic."""

    left: object
    right: object

    @property
    def ndim(self) -> int:
        return self.right.ndim

    def __call__(self, x, y=None):
        x = np.asarray(x, dtype=float)
        if self.ndim == 1:
            return np.where(x < 0.0, self.left(x), self.right(x))
        return np.where(x < 0.0, self.left(x, y), self.right(x, y))

    @property
    def separable(self):
        pl, pr = split_separable(self.left), split_separable(self.right)
        if pl is None or pr is None or pl[1] != pr[1]:
            return None
        return InterfacePotential(pl[0], pr[0]), pr[1]

    @property
    def bound(self) -> float:
        return max(self.left.bound, self.right.bound)


@dataclass(frozen=True)
class ShiftedPotential:
    """base(x + dx, y + dy); used to build interface examples."""

    base: object
    dx: float = 0.0
    dy: float = 0.0

    @property
    def ndim(self) -> int:
        return self.base.ndim

    def __call__(self, x, y=None):
        if self.ndim == 1:
            return self.base(np.asarray(x, dtype=float) + self.dx)
        return self.base(np.asarray(x, dtype=float) + self.dx, np.asarray(y, dtype=float) + self.dy)

    @property
    def separable(self):
        parts = split_separable(self.base)
        if parts is None:
            return None
        vx, vy = parts
        if self.dy != 0.0:
            vy = ShiftedPotential(vy, self.dy)
        return ShiftedPotential(vx, self.dx), vy

    @property
    def bound(self) -> float:
        return self.base.bound

    @property
    def lipschitz_constant(self) -> float:
        return self.base.lipschitz_constant


def sample_dislocation(W: DislocationPotential, points) -> np.ndarray:
    """Sample W at ``points`` (shape (m,) for 1D, (m, 2) for 2D)."""
    p = np.asarray(points, dtype=float)
    if W.ndim == 1:
        return W(p.reshape(-1))
    p = p.reshape(-1, 2)
    return W(p[:, 0], p[:, 1])


def sample_rotated(Vt: RotatedPotential, points) -> np.ndarray:
    p = np.asarray(points, dtype=float).reshape(-1, 2)
    return Vt(p[:, 0], p[:, 1])


def as_fraction(x) -> Fraction:
    return x if isinstance(x, Fraction) else Fraction(x)
