"""Small-angle grain boundaries.

Near the point (0, eta) of the y-axis the rotated potential looks like a
dislocation potential W_t once ``k tan(theta)`` sits near ``t`` modulo 1 and
``k / cos(theta)`` near the integer ``eta``.  This module searches such
alignments, samples the torus orbit that governs them, measures how far
V_theta is from W_t on the window, and transplants a dislocation
approximate eigenfunction to certify gap spectrum of the rotated operator.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from .discretize import apply_box_operator, box_axes, assemble_box
from .eigensolve import count_in_interval
from .potentials import DislocationPotential, RotatedPotential

__all__ = [
    "Angle",
    "AlignmentWitness",
    "OrbitStats",
    "find_alignment",
    "orbit_frequency",
    "window_deviation",
    "deviation_bound",
    "rotation_residual",
    "theta_ladder",
]


def _isqrt_exact(n: int) -> int | None:
    r = math.isqrt(n)
    return r if r * r == n else None


@dataclass(frozen=True)
class Angle:
    """An angle in [0, pi/2), tagged by whether tan is an exact rational."""

    tan: Fraction | float

    @classmethod
    def from_tan(cls, p: int, q: int = 1) -> "Angle":
        return cls(Fraction(p, q))

    @classmethod
    def from_radians(cls, theta: float) -> "Angle":
        return cls(math.tan(theta))

    @property
    def rational(self) -> bool:
        return isinstance(self.tan, Fraction)

    @property
    def theta(self) -> float:
        return math.atan(float(self.tan))

    @property
    def sec(self) -> Fraction | float:
        """1/cos theta, exact when p^2 + q^2 is a perfect square."""
        if self.rational:
            p, q = self.tan.numerator, self.tan.denominator
            r = _isqrt_exact(p * p + q * q)
            if r is not None:
                return Fraction(r, q)
        return math.sqrt(1.0 + float(self.tan) ** 2)

    @property
    def kind(self) -> str:
        return "rational-tan" if self.rational else "generic"

    def describe(self) -> dict:
        return {"tan": str(self.tan) if self.rational else float(self.tan), "theta": self.theta,
                "kind": self.kind}


def _as_angle(theta) -> Angle:
    if isinstance(theta, Angle):
        return theta
    if isinstance(theta, Fraction):
        return Angle(theta)
    return Angle.from_radians(float(theta))


@dataclass(frozen=True)
class AlignmentWitness:
    angle: Angle
    t: float
    eps: float
    k: int
    eta: int
    defects: tuple[float, float]

    def to_dict(self) -> dict:
        return {**self.angle.describe(), "t": self.t, "eps": self.eps, "k": self.k, "eta": self.eta,
                "defects": list(self.defects)}


def _exact_defects(angle: Angle, k: int, t: float):
    """(frac(k tan) - t, k sec - eta) with eta rounded half to even."""
    if angle.rational:
        kt = k * angle.tan
        d1 = float(kt - math.floor(kt) - Fraction(t))
    else:
        kt = k * float(angle.tan)
        d1 = kt - math.floor(kt) - t
    sec = angle.sec
    if isinstance(sec, Fraction):
        ks = k * sec
        eta = round(ks)  # Fraction rounds half to even
        d2 = float(ks - eta)
    else:
        ks = k * sec
        eta = round(ks)
        d2 = ks - eta
    return d1, d2, int(eta)


def find_alignment(theta, t: float, eps: float, k_max: int = 10**6, chunk: int = 1 << 18):
    """Smallest k <= k_max meeting both alignment conditions, or None."""
    ang = _as_angle(theta)
    tn = float(ang.tan)
    sc = float(ang.sec)
    # float screen with slack, then exact confirmation
    slack = 1e-9 * max(1.0, k_max * max(tn, sc))
    for start in range(1, k_max + 1, chunk):
        k = np.arange(start, min(start + chunk, k_max + 1), dtype=np.float64)
        kt = k * tn
        d1 = kt - np.floor(kt) - t
        ks = k * sc
        d2 = ks - np.round(ks)
        cand = np.flatnonzero((np.abs(d1) < eps + slack) & (np.abs(d2) < eps + slack) & (np.round(ks) >= 1))
        for i in cand:
            kk = int(k[i])
            e1, e2, eta = _exact_defects(ang, kk, t)
            if abs(e1) < eps and abs(e2) < eps and eta >= 1:
                return AlignmentWitness(ang, float(t), float(eps), kk, eta, (abs(e1), abs(e2)))
    return None


@dataclass(frozen=True)
class OrbitStats:
    angle: Angle
    t: float
    eps: float
    steps: int
    visits: int
    exact: bool

    @property
    def frequency(self) -> Fraction:
        return Fraction(self.visits, self.steps)

    def to_dict(self) -> dict:
        return {**self.angle.describe(), "t": self.t, "eps": self.eps, "M": self.steps,
                "visits": self.visits, "frequency": float(self.frequency),
                "frequency_exact": str(self.frequency), "exact_arithmetic": self.exact}


def _circ(x: float, c: float) -> float:
    d = (x - c) % 1.0
    return min(d, 1.0 - d)


def orbit_frequency(theta, t: float, eps: float, M: int = 10**6) -> OrbitStats:
    """Fraction of m in [0, M) with T^m(0, 0) in (t - eps, t + eps) x (-eps, eps) on the torus."""
    ang = _as_angle(theta)
    sec = ang.sec
    full_x = 2 * eps >= 1.0
    full_y = 2 * eps >= 1.0
    if ang.rational and isinstance(sec, Fraction):
        # both steps rational: integer arithmetic modulo the common denominator
        q = math.lcm(ang.tan.denominator, sec.denominator)
        a = int(ang.tan * q) % q
        b = int(sec * q) % q
        tq, eq = Fraction(t) * q, Fraction(eps) * q
        visits = 0
        x = y = 0
        period = None
        hits_in_period = []
        for m in range(M):
            if m and x == 0 and y == 0:
                period = m
                break
            dx = (Fraction(x) - tq) % q
            inx = full_x or min(dx, q - dx) < eq
            iny = full_y or min(y, q - y) < eq
            if inx and iny:
                hits_in_period.append(m)
            x = (x + a) % q
            y = (y + b) % q
        if period is None:
            visits = len(hits_in_period)
        else:
            full, rem = divmod(M, period)
            visits = full * len(hits_in_period) + sum(1 for m in hits_in_period if m < rem)
        return OrbitStats(ang, float(t), float(eps), M, visits, True)
    # compensated accumulation of both translation components mod 1
    ax, ay = float(ang.tan) % 1.0, float(sec) % 1.0
    x = y = 0.0
    cx = cy = 0.0
    visits = 0
    for _ in range(M):
        if (full_x or _circ(x, t) < eps) and (full_y or _circ(y, 0.0) < eps):
            visits += 1
        yk = ax - cx
        s = x + yk
        cx = (s - x) - yk
        x = s - math.floor(s)
        yk = ay - cy
        s = y + yk
        cy = (s - y) - yk
        y = s - math.floor(s)
    return OrbitStats(ang, float(t), float(eps), M, visits, False)


# -- window comparison -------------------------------------------------------

def deviation_bound(L: float, theta: float, n: float, d1: float, d2: float) -> float:
    """Lipschitz bound for sup |V_theta - W_t| on Q_n(0, eta)."""
    return L * (4 * n * math.sin(theta / 2) + abs(d1) + abs(d2))


def window_deviation(V, theta, t: float, n: float, eta: int, h: float = 1 / 32, k: int | None = None) -> dict:
    """Sampled sup of |V_theta - W_t| over the window (-n, n) x (eta - n, eta + n)."""
    ang = _as_angle(theta)
    th = ang.theta
    xs = np.arange(-n, n + h / 2, h)
    ys = eta + xs
    X, Y = np.meshgrid(xs, ys, indexing="ij")
    dev = float(np.max(np.abs(RotatedPotential(V, th)(X, Y) - DislocationPotential(V, t)(X, Y))))
    out = {"theta": th, "t": t, "n": n, "eta": eta, "sup": dev}
    if k is not None:
        d1, d2, _ = _exact_defects(ang, k, t)
        d2 = eta - k * float(ang.sec)
        out["bound"] = deviation_bound(V.lipschitz_constant, th, n, d1, d2)
        out["defects"] = (d1, d2)
    return out


def theta_ladder(t: float, ks=(1000, 4000, 16000)) -> list[Angle]:
    """Angles with tan = t / k; then k tan = t exactly and k sec is within t^2/(2k) of k."""
    frac_t = Fraction(t).limit_denominator(10**9)
    return [Angle(frac_t / k) for k in ks]


def rotation_residual(V, theta, E: float, eig: dict, witness: AlignmentWitness | None,
                      box_margin: float = 0.25, certify: bool = False, rho: float | None = None) -> dict:
    """Residual of a dislocation approximate eigenfunction moved to (0, eta).

    ``eig`` is the output of ``approximate_eigenfunction``; its grid covers
    (-n, n)^2.  The rotation box extends that window by ``box_margin`` on
    every side, so ``w`` vanishes near the box boundary.
    """
    if witness is None:
        raise ValueError("no alignment witness: the comparison bound would be vacuous")
    ang = _as_angle(theta)
    th = ang.theta
    w, h, n, t = eig["w"], eig["h"], eig["n"], eig["t"]
    eta = witness.eta
    half = n * (1 + box_margin)
    half = math.ceil(half / h) * h
    bx, by = box_axes(((-half, half), (-half, half)), h)
    W = np.zeros((len(bx), len(by)))
    ox = int(round((eig["x"][0] - bx[0]) / h))
    oy = int(round((eig["y"][0] - by[0]) / h))
    W[ox:ox + w.shape[0], oy:oy + w.shape[1]] = w
    X, Y = np.meshgrid(bx, by + eta, indexing="ij")
    Vth = RotatedPotential(V, th)(X, Y)
    Wt = DislocationPotential(V, t)(X, Y)
    r_theta = float(np.linalg.norm(apply_box_operator(W, Vth, h) - E * W))
    r_0 = float(np.linalg.norm(apply_box_operator(W, Wt, h) - E * W))
    pot = float(np.linalg.norm((Vth - Wt) * W))
    support = np.abs(W) > 0
    dev = float(np.max(np.abs(Vth - Wt)[support])) if support.any() else 0.0
    wn = float(np.linalg.norm(W))
    # triangle inequalities on the discrete operators
    assert r_theta <= r_0 + pot + 1e-9 * (1 + r_0 + pot)
    assert pot <= dev * wn * (1 + 1e-12) + 1e-12
    out = {"theta": th, "tan": str(ang.tan) if ang.rational else float(ang.tan), "E": E, "t": t, "n": n,
           "h": h, "eta": eta, "k": witness.k, "residual": r_theta, "r0": r_0, "potential_term": pot,
           "deviation": dev, "box": [[-half, half], [eta - half, eta + half]]}
    if certify:
        rho = r_theta if rho is None else rho
        op = assemble_box(RotatedPotential(V, th), ((-half, half), (eta - half, eta + half)), h)
        out["certificate_count"] = count_in_interval(op.matrix, (E - rho * (1 + 1e-9), E + rho * (1 + 1e-9)))
        out["certificate_dimension"] = op.dimension
    return out
