"""Logarithmic coordinates on the punctured plane.

A point ``z != 0`` is stored as ``(t, theta)`` with ``z = exp(t + i*theta)``.
The metric used throughout is the product metric on ``R x T``::

    dlog(a, b) = |t_a - t_b| + |exp(i theta_a) - exp(i theta_b)|

Cartesian values are only produced on demand, so moduli far outside the
double range (|t| > 709) are still representable.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable

import numpy as np
from scipy.sparse import csr_matrix
from scipy.sparse.csgraph import maximum_bipartite_matching

from .errors import PreconditionError

TWO_PI = 2.0 * math.pi


def reduce_angle(theta):
    """Reduce angles into ``[-pi, pi)``. Works on scalars and arrays."""
    out = np.mod(np.asarray(theta, dtype=float) + math.pi, TWO_PI) - math.pi
    # mod can return 2*pi - tiny -> pi after the subtraction
    out = np.where(out >= math.pi, out - TWO_PI, out)
    if np.ndim(out) == 0:
        return float(out)
    return out


def chord(dtheta):
    """``|exp(i a) - exp(i b)|`` as a function of ``a - b``."""
    return 2.0 * np.abs(np.sin(0.5 * np.asarray(dtheta, dtype=float)))


@dataclass(frozen=True)
class LogPoint:
    """A point of the punctured plane, ``exp(t) * exp(i*theta)``."""

    t: float
    theta: float = 0.0

    def __post_init__(self):
        t = float(self.t)
        if not math.isfinite(t) or not math.isfinite(float(self.theta)):
            raise PreconditionError(f"non-finite coordinates ({self.t}, {self.theta})")
        object.__setattr__(self, "t", t)
        object.__setattr__(self, "theta", reduce_angle(self.theta))

    def to_complex(self) -> complex:
        return complex(math.exp(self.t) * math.cos(self.theta),
                       math.exp(self.t) * math.sin(self.theta))

    @classmethod
    def from_complex(cls, z: complex) -> "LogPoint":
        if z == 0:
            raise PreconditionError("the origin has no logarithmic coordinates")
        return cls(math.log(abs(z)), math.atan2(z.imag, z.real))


def dlog(a: LogPoint, b: LogPoint) -> float:
    """Logarithmic distance between two points."""
    return abs(a.t - b.t) + float(chord(a.theta - b.theta))


def dlog_arrays(t1, th1, t2, th2):
    """Broadcasting version of :func:`dlog` on coordinate arrays."""
    return np.abs(np.asarray(t1) - np.asarray(t2)) + chord(np.asarray(th1) - np.asarray(th2))


@dataclass(frozen=True)
class PointSequence:
    """Finite point set sorted by modulus, with the window where it is complete.

    ``window = (t_min, t_max)`` declares the log-modulus range over which the
    data is known to contain *every* point of the (conceptually bi-infinite)
    sequence. Points are sorted by ``t`` and then by ``theta``.
    """

    t: np.ndarray
    theta: np.ndarray
    window: tuple[float, float]

    def __post_init__(self):
        t = np.array(self.t, dtype=float).reshape(-1)
        th = np.array(self.theta, dtype=float).reshape(-1)
        if t.shape != th.shape:
            raise PreconditionError("t and theta must have the same length")
        if not (np.all(np.isfinite(t)) and np.all(np.isfinite(th))):
            raise PreconditionError("point coordinates must be finite")
        th = np.atleast_1d(reduce_angle(th)) if th.size else th
        order = np.lexsort((th, t))
        t, th = t[order], th[order]
        if t.size > 1:
            same = (np.diff(t) == 0) & (np.diff(th) == 0)
            if np.any(same):
                i = int(np.flatnonzero(same)[0])
                raise PreconditionError(
                    f"duplicate point at t={t[i]!r}, theta={th[i]!r}")
        lo, hi = (float(w) for w in self.window)
        if not (math.isfinite(lo) and math.isfinite(hi)) or lo > hi:
            raise PreconditionError(f"invalid window {self.window!r}")
        if t.size and (t[0] < lo or t[-1] > hi):
            raise PreconditionError(
                f"points span [{t[0]}, {t[-1]}] outside the declared window [{lo}, {hi}]")
        t.setflags(write=False)
        th.setflags(write=False)
        object.__setattr__(self, "t", t)
        object.__setattr__(self, "theta", th)
        object.__setattr__(self, "window", (lo, hi))

    @classmethod
    def from_points(cls, points: Iterable[LogPoint], window=None) -> "PointSequence":
        pts = list(points)
        t = [p.t for p in pts]
        th = [p.theta for p in pts]
        if window is None:
            if not pts:
                raise PreconditionError("an empty sequence needs an explicit window")
            window = (min(t), max(t))
        return cls(np.array(t, dtype=float), np.array(th, dtype=float), window)

    @classmethod
    def from_arrays(cls, t, theta=None, window=None) -> "PointSequence":
        t = np.asarray(t, dtype=float).reshape(-1)
        theta = np.zeros_like(t) if theta is None else np.asarray(theta, dtype=float)
        if window is None:
            if t.size == 0:
                raise PreconditionError("an empty sequence needs an explicit window")
            window = (float(t.min()), float(t.max()))
        return cls(t, theta, window)

    def __len__(self) -> int:
        return int(self.t.size)

    def __iter__(self):
        return iter(self.points)

    @property
    def points(self) -> list[LogPoint]:
        return [LogPoint(a, b) for a, b in zip(self.t, self.theta)]

    @property
    def extent(self) -> float:
        return self.window[1] - self.window[0]

    def select(self, mask) -> "PointSequence":
        """Subsequence by boolean mask or index array; the window is kept."""
        return PointSequence(self.t[mask], self.theta[mask], self.window)

    def remove_index(self, i: int) -> "PointSequence":
        keep = np.ones(len(self), dtype=bool)
        keep[i] = False
        return self.select(keep)

    def restrict(self, t_lo: float, t_hi: float) -> "PointSequence":
        """Points with ``t_lo <= t <= t_hi``, window clipped to the same range."""
        lo = max(t_lo, self.window[0])
        hi = min(t_hi, self.window[1])
        if lo > hi:
            return PointSequence(np.empty(0), np.empty(0), (lo, lo))
        mask = (self.t >= lo) & (self.t <= hi)
        return PointSequence(self.t[mask], self.theta[mask], (lo, hi))


def separation_constant(seq: PointSequence) -> float:
    """Smallest ``dlog`` over distinct pairs; ``inf`` below two points.

    Since ``dlog >= |dt|`` and the points are sorted by ``t``, the scan for
    each point stops as soon as the ``t``-gap alone exceeds the current best.
    """
    n = len(seq)
    if n < 2:
        return math.inf
    t, th = seq.t, seq.theta
    best = math.inf
    for i in range(n - 1):
        j_end = int(np.searchsorted(t, t[i] + best, side="right"))
        if j_end <= i + 1:
            j_end = i + 2
        d = dlog_arrays(t[i], th[i], t[i + 1:j_end], th[i + 1:j_end])
        best = min(best, float(d.min()))
    return best


def scale_sequence(seq: PointSequence, log_c: float) -> PointSequence:
    """Dilate by ``c = exp(log_c)``: every ``t`` and the window move by ``log_c``."""
    lo, hi = seq.window
    return PointSequence(seq.t + log_c, seq.theta, (lo + log_c, hi + log_c))


def rotate_sequence(seq: PointSequence, theta0: float) -> PointSequence:
    """Multiply every point by ``exp(i*theta0)``."""
    return PointSequence(seq.t, seq.theta + theta0, seq.window)


def distance_to_set(t, theta, seq: PointSequence):
    """``dlog`` from each probe ``(t, theta)`` to the nearest point of ``seq``."""
    t = np.asarray(t, dtype=float)
    theta = np.asarray(theta, dtype=float)
    if len(seq) == 0:
        return np.full(np.broadcast(t, theta).shape, np.inf)
    d = dlog_arrays(t[..., None], theta[..., None], seq.t, seq.theta)
    return d.min(axis=-1)


def epsilon_match(a: PointSequence, b: PointSequence, eps: float) -> bool:
    """Whether ``b`` is an ``eps``-perturbation of ``a``.

    True iff ``|a| == |b|`` and there is a bijection moving every point by at
    most ``eps`` in ``dlog``. Decided exactly by maximum bipartite matching
    on the ``dlog <= eps`` graph.
    """
    if eps < 0:
        raise PreconditionError("eps must be nonnegative")
    if len(a) != len(b):
        return False
    if len(a) == 0:
        return True
    d = dlog_arrays(a.t[:, None], a.theta[:, None], b.t[None, :], b.theta[None, :])
    adj = csr_matrix(d <= eps)
    match = maximum_bipartite_matching(adj, perm_type="column")
    return bool(np.all(match >= 0))


def bottleneck_distance(a: PointSequence, b: PointSequence) -> float:
    """Smallest ``eps`` for which :func:`epsilon_match` holds (``inf`` if sizes differ)."""
    if len(a) != len(b):
        return math.inf
    if len(a) == 0:
        return 0.0
    d = dlog_arrays(a.t[:, None], a.theta[:, None], b.t[None, :], b.theta[None, :])
    cand = np.unique(d)
    lo, hi = 0, cand.size - 1
    while lo < hi:
        mid = (lo + hi) // 2
        if epsilon_match(a, b, float(cand[mid])):
            hi = mid
        else:
            lo = mid + 1
    return float(cand[lo])


__all__ = [
    "LogPoint",
    "PointSequence",
    "dlog",
    "dlog_arrays",
    "distance_to_set",
    "epsilon_match",
    "bottleneck_distance",
    "reduce_angle",
    "rotate_sequence",
    "scale_sequence",
    "separation_constant",
]
