"""The spaces F^p_alpha: weight, monomial norms, shifts and restricted norms.

Functions live on the punctured plane and are measured against the weight
``phi(z) = alpha * log(|z|)**2``. Everything here works with log-magnitudes;
linear values are produced only at the very end, because ``exp(alpha t^2)``
leaves double range near ``|t| ~ 27`` for ``alpha = 1``.

Monomials are orthogonal in ``F^2_alpha`` (the weight is radial), and their
norms have a closed form obtained from the Gaussian integral in ``t``::

    ||z^n||_p = (2 pi sqrt(pi/(p alpha)))**(1/p) * exp((n + 2/p)**2 / (4 alpha))
    ||z^n||_inf = exp(n**2 / (4 alpha))
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass
from typing import Callable, Mapping

import numpy as np
from scipy.special import logsumexp

from .errors import PreconditionError
from .geometry import LogPoint, PointSequence

# An evaluator maps coordinate arrays (t, theta) to (log|f|, arg f).
LogEvaluator = Callable[[np.ndarray, np.ndarray], tuple[np.ndarray, np.ndarray]]


@dataclass(frozen=True)
class SpaceParams:
    """``alpha > 0`` and ``p`` in ``(0, inf]`` identifying F^p_alpha."""

    alpha: float
    p: float = 2.0

    def __post_init__(self):
        a, p = float(self.alpha), float(self.p)
        if not (math.isfinite(a) and a > 0):
            raise PreconditionError(f"alpha must be a positive real, got {self.alpha!r}")
        if math.isnan(p) or p <= 0:
            raise PreconditionError(f"p must lie in (0, inf], got {self.p!r}")
        object.__setattr__(self, "alpha", a)
        object.__setattr__(self, "p", p)

    @property
    def is_sup(self) -> bool:
        return math.isinf(self.p)

    @property
    def two_over_p(self) -> float:
        return 0.0 if self.is_sup else 2.0 / self.p

    @property
    def cell(self) -> float:
        """Period ``1/(2 alpha)`` of the discrete dilation symmetry in ``t``."""
        return 0.5 / self.alpha

    def p_label(self):
        return "inf" if self.is_sup else self.p


def phi(params: SpaceParams, t):
    """The weight ``alpha * t**2`` in log coordinates."""
    t = np.asarray(t, dtype=float)
    out = params.alpha * t * t
    return float(out) if out.ndim == 0 else out


def log_monomial_norm(params: SpaceParams, n):
    """``log ||z^n||`` in F^p_alpha (exact, vectorized over ``n``)."""
    n = np.asarray(n, dtype=float)
    a = params.alpha
    if params.is_sup:
        out = n * n / (4 * a)
    else:
        p = params.p
        const = math.log(2 * math.pi * math.sqrt(math.pi / (p * a))) / p
        out = const + (n + 2.0 / p) ** 2 / (4 * a)
    return float(out) if out.ndim == 0 else out


def monomial_norm(params: SpaceParams, n: int) -> float:
    return math.exp(log_monomial_norm(params, n))


@dataclass(frozen=True)
class LaurentVector:
    """Finitely supported Laurent coefficients ``sum a_n z^n``.

    Coefficients are stored densely over ``[n_min, n_max]``.
    """

    n_min: int
    coeffs: np.ndarray

    def __post_init__(self):
        c = np.array(self.coeffs, dtype=complex).reshape(-1)
        if not np.all(np.isfinite(c)):
            raise PreconditionError("Laurent coefficients must be finite")
        c.setflags(write=False)
        object.__setattr__(self, "n_min", int(self.n_min))
        object.__setattr__(self, "coeffs", c)

    @classmethod
    def from_dict(cls, coeffs: Mapping[int, complex]) -> "LaurentVector":
        if not coeffs:
            return cls(0, np.zeros(0, dtype=complex))
        lo, hi = min(coeffs), max(coeffs)
        c = np.zeros(hi - lo + 1, dtype=complex)
        for k, v in coeffs.items():
            c[k - lo] = v
        return cls(lo, c)

    @property
    def n_max(self) -> int:
        return self.n_min + self.coeffs.size - 1

    @property
    def indices(self) -> np.ndarray:
        return np.arange(self.n_min, self.n_min + self.coeffs.size)

    @property
    def support(self) -> tuple[int, int]:
        return (self.n_min, self.n_max)

    def to_dict(self) -> dict[int, complex]:
        return {int(k): complex(v) for k, v in zip(self.indices, self.coeffs) if v != 0}

    def get(self, n: int) -> complex:
        i = n - self.n_min
        if 0 <= i < self.coeffs.size:
            return complex(self.coeffs[i])
        return 0j

    def __sub__(self, other: "LaurentVector") -> "LaurentVector":
        lo = min(self.n_min, other.n_min)
        hi = max(self.n_max, other.n_max)
        c = np.zeros(hi - lo + 1, dtype=complex)
        c[self.n_min - lo:self.n_min - lo + self.coeffs.size] += self.coeffs
        c[other.n_min - lo:other.n_min - lo + other.coeffs.size] -= other.coeffs
        return LaurentVector(lo, c)

    def truncate(self, lo: int, hi: int) -> "LaurentVector":
        lo, hi = max(lo, self.n_min), min(hi, self.n_max)
        if lo > hi:
            return LaurentVector(0, np.zeros(0, dtype=complex))
        return LaurentVector(lo, self.coeffs[lo - self.n_min:hi - self.n_min + 1])

    def log_eval(self, t, theta) -> tuple[np.ndarray, np.ndarray]:
        """``(log|f|, arg f)`` at ``exp(t + i theta)``, factoring out the dominant term."""
        t = np.asarray(t, dtype=float)
        theta = np.asarray(theta, dtype=float)
        shape = np.broadcast(t, theta).shape
        nz = self.coeffs != 0
        if not np.any(nz):
            return np.full(shape, -np.inf), np.zeros(shape)
        n = self.indices[nz].astype(float)
        a = self.coeffs[nz]
        tt = np.broadcast_to(t, shape)[..., None]
        th = np.broadcast_to(theta, shape)[..., None]
        logmag = np.log(np.abs(a)) + n * tt
        top = logmag.max(axis=-1, keepdims=True)
        s = np.sum(np.exp(logmag - top + 1j * (np.angle(a) + n * th)), axis=-1)
        with np.errstate(divide="ignore"):
            return top[..., 0] + np.log(np.abs(s)), np.angle(s)

    def __call__(self, z: LogPoint) -> complex:
        return eval_point(self, z)


def eval_point(v: LaurentVector, z: LogPoint) -> complex:
    """Value of the Laurent polynomial at ``z`` (may overflow to inf for huge |z|)."""
    lm, ph = v.log_eval(z.t, z.theta)
    lm, ph = float(lm), float(ph)
    if lm == -math.inf:
        return 0j
    return complex(math.exp(lm) * math.cos(ph), math.exp(lm) * math.sin(ph))


def log_norm_p2(v: LaurentVector, params: SpaceParams) -> float:
    """``log ||v||`` in F^2_alpha using orthogonality of monomials."""
    if params.p != 2:
        raise PreconditionError("the closed-form Laurent norm is only available for p = 2")
    nz = v.coeffs != 0
    if not np.any(nz):
        return -math.inf
    terms = 2 * np.log(np.abs(v.coeffs[nz])) + 2 * log_monomial_norm(params, v.indices[nz])
    return 0.5 * float(logsumexp(terms))


def norm_p2(v: LaurentVector, params: SpaceParams) -> float:
    return math.exp(log_norm_p2(v, params))


def apply_shift(v: LaurentVector, n: int, params: SpaceParams) -> LaurentVector:
    """``(T^n f)(z) = exp(-n^2/(4a)) z^{-n} f(exp(n/(2a)) z)`` on coefficients.

    ``a_m`` moves to index ``m - n`` and is multiplied by
    ``exp(-n^2/(4a) + n m/(2a))``.
    """
    a = params.alpha
    m = v.indices.astype(float)
    factor = np.exp(-n * n / (4 * a) + n * m / (2 * a))
    return LaurentVector(v.n_min - n, v.coeffs * factor)


def eval_functional_bound(params: SpaceParams, z: LogPoint) -> float:
    """Envelope ``exp(phi(z)) / |z|^{2/p}`` of point evaluation (constant omitted)."""
    return math.exp(log_eval_functional_bound(params, z.t))


def log_eval_functional_bound(params: SpaceParams, t):
    t = np.asarray(t, dtype=float)
    out = params.alpha * t * t - params.two_over_p * t
    return float(out) if out.ndim == 0 else out


@dataclass(frozen=True)
class LogFunction:
    """A function known through a vectorized log-domain evaluator."""

    evaluator: LogEvaluator

    def log_eval(self, t, theta):
        return self.evaluator(t, theta)

    def __call__(self, z: LogPoint) -> complex:
        lm, ph = self.evaluator(z.t, z.theta)
        lm = float(lm)
        if lm == -math.inf:
            return 0j
        return complex(cmath.rect(math.exp(lm), float(ph)))


def as_log_evaluator(f) -> LogEvaluator:
    """Wrap ``f`` into a vectorized ``(t, theta) -> (log|f|, arg f)`` evaluator.

    Accepts a :class:`LaurentVector`, something with a ``log_eval`` method, or a
    plain callable taking a :class:`LogPoint` and returning a complex number.
    """
    if hasattr(f, "log_eval"):
        return f.log_eval

    def evaluator(t, theta):
        t = np.asarray(t, dtype=float)
        theta = np.asarray(theta, dtype=float)
        shape = np.broadcast(t, theta).shape
        tt = np.broadcast_to(t, shape).ravel()
        th = np.broadcast_to(theta, shape).ravel()
        vals = np.array([complex(f(LogPoint(a, b))) for a, b in zip(tt, th)], dtype=complex)
        with np.errstate(divide="ignore"):
            return np.log(np.abs(vals)).reshape(shape), np.angle(vals).reshape(shape)

    return evaluator


def log_restricted_norm(f, seq: PointSequence, params: SpaceParams) -> float:
    """``log ||f|_Lambda||`` with the sampling weights of F^p_alpha.

    Finite p: ``(sum |f|^p |lambda|^2 exp(-p phi))^(1/p)``, accumulated with
    log-sum-exp. ``p = inf``: ``sup |f| exp(-phi)``. Empty sets give ``-inf``.
    """
    if len(seq) == 0:
        return -math.inf
    ev = as_log_evaluator(f)
    lm, _ = ev(seq.t, seq.theta)
    lm = np.asarray(lm, dtype=float)
    w = lm - params.alpha * seq.t ** 2
    if params.is_sup:
        return float(np.max(w))
    p = params.p
    terms = p * w + 2 * seq.t
    if np.all(terms == -np.inf):
        return -math.inf
    return float(logsumexp(terms)) / p


def restricted_norm(f, seq: PointSequence, params: SpaceParams) -> float:
    lv = log_restricted_norm(f, seq, params)
    return math.exp(lv) if lv < 709.0 else math.inf


@dataclass(frozen=True)
class SupEstimate:
    """Grid estimate of ``log sup |f| exp(-phi)``.

    ``t_step`` and ``theta_step`` are the spacings of the finest grid used;
    the true supremum may exceed ``log_sup`` by the variation of the
    integrand across one cell.
    """

    log_sup: float
    t_at: float
    theta_at: float
    t_step: float
    theta_step: float


def sup_norm_estimate(f, params: SpaceParams, t_lo: float, t_hi: float, *,
                      n_t: int = 801, n_theta: int = 256, refine: int = 3,
                      rings=()) -> SupEstimate:
    """Estimate ``sup_{z} |f(z)| exp(-phi(z))`` over the band ``t_lo <= t <= t_hi``.

    A ``n_t x n_theta`` grid is scanned, then the best cell is refined
    ``refine`` times by a factor of 8 in both directions. Extra circles
    ``t in rings`` are always scanned at full angular resolution.
    """
    ev = as_log_evaluator(f)
    ts = np.concatenate([np.linspace(t_lo, t_hi, n_t), np.asarray(rings, dtype=float)])
    ths = -math.pi + 2 * math.pi * np.arange(n_theta) / n_theta
    lm, _ = ev(ts[:, None], ths[None, :])
    w = np.asarray(lm) - params.alpha * ts[:, None] ** 2
    i, j = np.unravel_index(int(np.argmax(w)), w.shape)
    best, bt, bth = float(w[i, j]), float(ts[i]), float(ths[j])
    dt = (t_hi - t_lo) / max(n_t - 1, 1)
    dth = 2 * math.pi / n_theta
    for _ in range(refine):
        lt = np.linspace(bt - dt, bt + dt, 17)
        lth = np.linspace(bth - dth, bth + dth, 17)
        lm, _ = ev(lt[:, None], lth[None, :])
        w = np.asarray(lm) - params.alpha * lt[:, None] ** 2
        i, j = np.unravel_index(int(np.argmax(w)), w.shape)
        if w[i, j] > best:
            best, bt, bth = float(w[i, j]), float(lt[i]), float(lth[j])
        dt /= 8
        dth /= 8
    return SupEstimate(best, bt, bth, dt, dth)


def laurent_influence_zone(v: LaurentVector, params: SpaceParams, pad: float = 8.0):
    """``[n_min/(2a) - pad, n_max/(2a) + pad]``: where the monomial profiles peak."""
    return (v.n_min * params.cell - pad, v.n_max * params.cell + pad)


def sup_norm_laurent(v: LaurentVector, params: SpaceParams, **kw) -> SupEstimate:
    lo, hi = laurent_influence_zone(v, params)
    return sup_norm_estimate(v, params, lo, hi, **kw)


def random_laurent(rng: np.random.Generator, lo: int, hi: int) -> LaurentVector:
    """Complex Gaussian coefficients on ``[lo, hi]``."""
    k = hi - lo + 1
    return LaurentVector(lo, rng.standard_normal(k) + 1j * rng.standard_normal(k))

