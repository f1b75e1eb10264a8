"""Canonical products, interpolation functions and Jensen-formula tools.

A :class:`ZeroSet` carries a label per zero. Zeros with label ``<= 0`` enter
the product through ``(1 - lambda/z)`` and zeros with label ``>= 1`` through
``(1 - z/lambda)``, which is how both the lattice product

    G(z) = prod_{m >= 0} (1 - gamma_{-m}/z) * prod_{n >= 1} (1 - z/gamma_n)

and the finite two-sided products built from a band of points are written.

Products are accumulated as ``sum log(1 - x)`` in the complex log domain.
For zero sets cut out of an infinite lattice (``continuation_step`` set),
the omitted factors beyond each end are added to first order and the
remainder is certified with ``|log(1 - x) + x| <= |x|^2`` for ``|x| <= 1/2``,
summed geometrically.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .errors import ConvergenceError, PreconditionError
from .fockspace import (LaurentVector, LogFunction, SpaceParams, as_log_evaluator,
                        sup_norm_estimate)
from .geometry import LogPoint, PointSequence, TWO_PI, distance_to_set, reduce_angle

DEFAULT_TAIL_TOL = 1e-12
DEFAULT_EDGE_PAD = 8
_CHUNK = 1 << 21


@dataclass(frozen=True)
class LogValue:
    """``log|v|`` and ``arg v`` of a (possibly huge) complex number.

    ``phase`` is ``None`` when the value is exactly zero. ``err`` bounds the
    truncation error of the complex logarithm, when one was certified.
    """

    log_mag: float
    phase: Optional[float]
    err: float = 0.0

    @property
    def at_zero(self) -> bool:
        return self.phase is None

    def to_complex(self) -> complex:
        if self.at_zero:
            return 0j
        r = math.exp(self.log_mag)
        return complex(r * math.cos(self.phase), r * math.sin(self.phase))

    @property
    def magnitude(self) -> float:
        return 0.0 if self.at_zero else math.exp(self.log_mag)


@dataclass(frozen=True)
class ZeroSet:
    zeros: PointSequence
    labels: np.ndarray
    tail_tol: float = DEFAULT_TAIL_TOL
    continuation_step: Optional[float] = None

    def __post_init__(self):
        labels = np.array(self.labels, dtype=int).reshape(-1)
        if labels.size != len(self.zeros):
            raise PreconditionError("one label per zero is required")
        if labels.size and np.any(np.diff(labels) <= 0):
            raise PreconditionError("labels must increase with the modulus ordering")
        labels.setflags(write=False)
        object.__setattr__(self, "labels", labels)

    @property
    def truncation(self) -> tuple[int, int]:
        return (int(self.labels[0]), int(self.labels[-1])) if self.labels.size else (0, -1)

    @property
    def inner(self) -> np.ndarray:
        return self.labels <= 0

    def __len__(self) -> int:
        return len(self.zeros)

    def index_of(self, label: int) -> int:
        i = int(np.searchsorted(self.labels, label))
        if i >= self.labels.size or self.labels[i] != label:
            raise PreconditionError(f"no zero with label {label}")
        return i


def gamma_lattice(params: SpaceParams, n_range, *, tail_tol: float = DEFAULT_TAIL_TOL) -> ZeroSet:
    """``gamma_n = exp((n + 2/p - 1) / (2 alpha))`` for ``n`` in ``n_range``.

    ``n_range`` is an inclusive ``(lo, hi)`` pair or any iterable of
    consecutive integers. The returned set continues as the same lattice
    beyond both ends, so products over it stand for the infinite product.
    """
    if isinstance(n_range, tuple) and len(n_range) == 2:
        ns = np.arange(int(n_range[0]), int(n_range[1]) + 1)
    else:
        ns = np.asarray(list(n_range), dtype=int)
    if ns.size == 0:
        raise PreconditionError("n_range is empty")
    if np.any(np.diff(ns) != 1):
        raise PreconditionError("n_range must be consecutive integers")
    t = (ns + params.two_over_p - 1) / (2 * params.alpha)
    seq = PointSequence(t, np.zeros_like(t), (float(t[0]), float(t[-1])))
    return ZeroSet(seq, ns, tail_tol, params.cell)


def finite_product_zeros(seq: PointSequence, n_inner: Optional[int] = None, *,
                         tail_tol: float = DEFAULT_TAIL_TOL) -> ZeroSet:
    """Label the first ``n_inner`` points ``-n_inner..-1`` and the rest ``1..``.

    By default the inner factors are the points with ``t < 0``.
    """
    n = len(seq)
    if n_inner is None:
        n_inner = int(np.count_nonzero(seq.t < 0))
    if not 0 <= n_inner <= n:
        raise PreconditionError("n_inner out of range")
    labels = np.concatenate([np.arange(-n_inner, 0), np.arange(1, n - n_inner + 1)])
    return ZeroSet(seq, labels, tail_tol, None)


def _log1mexp(u: np.ndarray, tail_tol: float):
    """``log(1 - exp(u))`` for complex ``u`` with ``Im u`` in ``[-pi, pi)``.

    Returns the values and a per-entry error bound, nonzero only where the
    first-order replacement ``-exp(u)`` was used.
    """
    shape = u.shape
    u = u.ravel()
    out = np.empty(u.shape, dtype=complex)
    err = np.zeros(u.shape)
    re = u.real
    near = np.abs(u) < 0.5
    with np.errstate(divide="ignore", invalid="ignore"):
        out[near] = np.log(-np.expm1(u[near]))
        for mask, sign, extra in ((~near & (re <= 0), 1.0, 0.0),
                                  (~near & (re > 0), -1.0, 1.0)):
            # for Re u > 0: log(1 - e^u) = u + i pi + log(1 - e^{-u})
            idx = np.flatnonzero(mask)
            w = u[idx]
            x = np.exp(sign * w)
            ax = np.abs(x)
            tiny = ax < tail_tol
            v = np.log1p(-x)
            v[tiny] = -x[tiny]
            out[idx] = v + extra * (w + 1j * math.pi)
            err[idx[tiny]] = ax[tiny] ** 2
    out, err = out.reshape(shape), err.reshape(shape)
    return out, err


def _tail_terms(zs: ZeroSet, t: np.ndarray, theta: np.ndarray):
    """First-order contribution and remainder bound of the omitted lattice tails."""
    h = zs.continuation_step
    q = math.exp(-h)
    top_t, top_th = zs.zeros.t[-1], zs.zeros.theta[-1]
    bot_t, bot_th = zs.zeros.t[0], zs.zeros.theta[0]
    # outer tail: zeros at top_t + j h, factors 1 - z/zeta
    x1 = np.exp((t - top_t - h) + 1j * (theta - top_th))
    # inner tail: zeros at bot_t - j h, factors 1 - zeta/z
    y1 = np.exp((bot_t - h - t) + 1j * (bot_th - theta))
    worst = np.maximum(np.abs(x1), np.abs(y1))
    if np.any(worst > 0.5):
        raise PreconditionError(
            "probe lies outside the certified zone of the truncated product; "
            "widen the lattice range")
    s = -(x1 + y1) / (1 - q)
    e = (np.abs(x1) ** 2 + np.abs(y1) ** 2) / (1 - q * q)
    return s, e


def log_product(zs: ZeroSet, t, theta, *, exclude: Optional[int] = None):
    """Vectorized ``(log|G|, arg G, err)`` at ``exp(t + i theta)``.

    ``exclude`` drops the zero at that sorted position (used to divide out
    a vanishing factor analytically). At a zero the log-magnitude is
    ``-inf`` and the phase is reported as 0.
    """
    t = np.asarray(t, dtype=float)
    theta = np.asarray(theta, dtype=float)
    shape = np.broadcast(t, theta).shape
    tf = np.broadcast_to(t, shape).ravel()
    thf = np.broadcast_to(theta, shape).ravel()
    zt, zth = zs.zeros.t, zs.zeros.theta
    sign = np.where(zs.inner, 1.0, -1.0)
    if exclude is not None:
        keep = np.ones(zt.size, dtype=bool)
        keep[exclude] = False
        zt, zth, sign = zt[keep], zth[keep], sign[keep]
    total = np.zeros(tf.size, dtype=complex)
    err = np.zeros(tf.size)
    step = max(1, _CHUNK // max(zt.size, 1))
    for a in range(0, tf.size, step):
        b = min(a + step, tf.size)
        if zt.size:
            # inner: u = log(zeta/z); outer: u = log(z/zeta)
            du = sign[None, :] * (zt[None, :] - tf[a:b, None])
            dth = reduce_angle(sign[None, :] * (zth[None, :] - thf[a:b, None]))
            v, e = _log1mexp(du + 1j * dth, zs.tail_tol)
            total[a:b] = v.sum(axis=1)
            err[a:b] = e.sum(axis=1)
        if zs.continuation_step is not None and len(zs):
            s, e = _tail_terms(zs, tf[a:b], thf[a:b])
            total[a:b] += s
            err[a:b] += e
    lm = total.real
    ph = np.where(np.isfinite(lm), reduce_angle(np.nan_to_num(total.imag)), 0.0)
    return lm.reshape(shape), np.asarray(ph).reshape(shape), err.reshape(shape)


def canonical_product(zs: ZeroSet, z) -> LogValue:
    lm, ph, err = log_product(zs, z.t, z.theta)
    lm = float(lm)
    if lm == -math.inf:
        return LogValue(-math.inf, None, float(err))
    return LogValue(lm, float(ph), float(err))


def product_evaluator(zs: ZeroSet):
    def ev(t, theta):
        lm, ph, _ = log_product(zs, t, theta)
        return lm, ph
    return LogFunction(ev)


def _check_interior(zs: ZeroSet, n: int, pad: int) -> int:
    i = zs.index_of(n)
    if zs.continuation_step is not None:
        lo, hi = zs.truncation
        if n - lo < pad or hi - n < pad:
            raise PreconditionError(
                f"index {n} is within {pad} of the truncation edges {zs.truncation}; "
                "accuracy cannot be certified")
    return i


def interpolation_evaluator(zs: ZeroSet, n: int, pad: int = DEFAULT_EDGE_PAD):
    """Vectorized ``g_n(z) = G(z) / (G'(gamma_n) (z - gamma_n))``.

    The vanishing factor is removed analytically: with ``H`` the product
    without the ``n``-th factor, ``g_n = H(z)/H(gamma_n)`` for an outer zero
    and ``g_n = H(z) gamma_n / (z H(gamma_n))`` for an inner one.
    """
    i = _check_interior(zs, n, pad)
    tn, thn = float(zs.zeros.t[i]), float(zs.zeros.theta[i])
    l0, p0, _ = log_product(zs, tn, thn, exclude=i)
    l0, p0 = float(l0), float(p0)
    inner = bool(zs.inner[i])

    def ev(t, theta):
        t = np.asarray(t, dtype=float)
        theta = np.asarray(theta, dtype=float)
        lm, ph, _ = log_product(zs, t, theta, exclude=i)
        lm = lm - l0
        ph = ph - p0
        if inner:
            lm = lm + (tn - t)
            ph = ph + (thn - theta)
        fin = np.isfinite(lm)
        return lm, np.where(fin, reduce_angle(ph), 0.0)

    return LogFunction(ev)


def interpolation_function(zs: ZeroSet, n: int, z, pad: int = DEFAULT_EDGE_PAD) -> LogValue:
    lm, ph = interpolation_evaluator(zs, n, pad).log_eval(z.t, z.theta)
    lm = float(lm)
    if lm == -math.inf:
        return LogValue(-math.inf, None)
    return LogValue(lm, float(ph))


def log_envelope(params: SpaceParams, zs: ZeroSet, t, theta):
    """``log[d_log(z, zeros) |z|^{1/2} exp(phi(z)) / |z|^{2/p}]``."""
    t = np.asarray(t, dtype=float)
    theta = np.asarray(theta, dtype=float)
    d = distance_to_set(t, theta, zs.zeros)
    with np.errstate(divide="ignore"):
        logd = np.log(d)
    return logd + 0.5 * t + params.alpha * t * t - params.two_over_p * t


def contour_radius(m: int, params: SpaceParams) -> float:
    """Log-radius used for the ``m``-th coefficient: mid-cell between lattice zeros."""
    shift = 0.5 if m >= 0 else -0.5
    return (m + shift + params.two_over_p) / (2 * params.alpha)


@dataclass(frozen=True)
class ContourResult:
    coeffs: LaurentVector
    nodes: dict
    log_radius: dict


def laurent_coeffs_by_contour(fn, m_range, params: SpaceParams, *, rtol: float = 1e-10,
                              q0: int = 16, q_max: int = 1 << 15,
                              detailed: bool = False):
    """Laurent coefficients ``a_m`` by the trapezoidal rule on circles.

    ``a_m = (1/2 pi R^m) * integral of fn(R e^{is}) e^{-ims} ds`` with
    ``log R`` from :func:`contour_radius`. The node count doubles from ``q0``
    until two successive estimates differ by less than ``rtol`` times the
    circle scale ``max|fn| / R^m``.
    """
    ev = as_log_evaluator(fn)
    lo, hi = (int(m_range[0]), int(m_range[1])) if isinstance(m_range, tuple) else (
        min(m_range), max(m_range))
    out = np.zeros(hi - lo + 1, dtype=complex)
    nodes, radii = {}, {}
    for m in range(lo, hi + 1):
        tr = contour_radius(m, params)
        prev = None
        q = q0
        while True:
            s = TWO_PI * np.arange(q) / q
            lm, ph = ev(np.full(q, tr), s)
            lm = np.asarray(lm, dtype=float)
            top = float(np.max(lm))
            if top == -math.inf:
                val, scale = 0j, 0.0
            else:
                terms = np.exp(lm - top + 1j * (np.asarray(ph) - m * s))
                terms[~np.isfinite(lm)] = 0
                scale_log = top - m * tr
                val = np.exp(scale_log) * terms.mean()
                scale = math.exp(scale_log)
            if prev is not None and abs(val - prev) <= rtol * scale:
                break
            prev = val
            q *= 2
            if q > q_max:
                raise ConvergenceError(
                    f"trapezoidal rule for a_{m} did not settle by {q_max} nodes; "
                    "the function is not analytic enough near the contour")
        out[m - lo] = val
        nodes[m] = q
        radii[m] = tr
    v = LaurentVector(lo, out)
    if detailed:
        return ContourResult(v, nodes, radii)
    return v


def lifted_zeros(zs: ZeroSet, R: float) -> np.ndarray:
    """Moduli ``|t + i(theta + 2 pi k)|`` of the lifts of each zero lying within ``R``.

    Under ``g(w) = f(e^w)`` every zero of ``f`` lifts to a vertical
    ``2 pi i``-periodic column of zeros of ``g``.
    """
    if R < 0:
        raise PreconditionError("radius must be nonnegative")
    mods = []
    for t, th in zip(zs.zeros.t, zs.zeros.theta):
        if abs(t) > R:
            continue
        s = math.sqrt(max(R * R - t * t, 0.0))
        k_lo = math.ceil((-s - th) / TWO_PI)
        k_hi = math.floor((s - th) / TWO_PI)
        for k in range(k_lo, k_hi + 1):
            r = math.hypot(t, th + TWO_PI * k)
            if r <= R:
                mods.append(r)
    return np.sort(np.asarray(mods, dtype=float))


def zero_count(zs: ZeroSet, t_radius: float) -> int:
    """Number of zeros of ``g(w) = f(e^w)`` in the closed disc of radius ``t_radius``."""
    return int(lifted_zeros(zs, t_radius).size)


@dataclass(frozen=True)
class JensenReport:
    residual: float
    counting_integral: float
    circle_average: float
    log_g0: float
    R: float
    R_requested: float
    nodes: int
    n_inside: int

    def as_record(self) -> dict:
        return dict(self.__dict__)


def _circle_average(zs: ZeroSet, R: float, tol: float, q0: int, q_max: int):
    def f(s):
        lm, _, _ = log_product(zs, R * np.cos(s), R * np.sin(s))
        return lm

    q = q0
    avg = float(np.mean(f(TWO_PI * np.arange(q) / q)))
    while True:
        odd = TWO_PI * (np.arange(q) + 0.5) / q
        new = 0.5 * (avg + float(np.mean(f(odd))))
        q *= 2
        if abs(new - avg) <= tol:
            return new, q
        avg = new
        if q >= q_max:
            raise ConvergenceError(f"circle average did not converge with {q} nodes")


def jensen_residual(zs: ZeroSet, R: float, *, guard: float = 1e-3, tol: float = 1e-10,
                    q0: int = 256, q_max: int = 1 << 22) -> JensenReport:
    """Both sides of Jensen's formula for ``g(w) = f(exp w)`` on ``|w| = R``.

    ``sum over lifted zeros within R of log(R/|w|)`` against
    ``(1/2pi) integral log|g(R e^{is})| ds - log|g(0)|``. If a lifted zero lies
    within ``guard`` of the circle, ``R`` is nudged outward first.
    """
    if zs.continuation_step is not None:
        raise PreconditionError("Jensen's formula is evaluated for finite products only")
    g0 = canonical_product(zs, LogPoint(0.0, 0.0))
    if g0.at_zero:
        raise PreconditionError("f(1) = 0: the lifted function vanishes at the origin")
    R0 = float(R)
    while True:
        near = lifted_zeros(zs, R + guard)
        if near.size == 0 or np.min(np.abs(near - R)) >= guard:
            break
        R += 2 * guard
    if R != R0:
        warnings.warn(f"a zero lies on the circle |w| = {R0}; using R = {R} instead",
                      RuntimeWarning, stacklevel=2)
    inside = lifted_zeros(zs, R)
    lhs = float(np.sum(np.log(R / inside))) if inside.size else 0.0
    avg, q = _circle_average(zs, R, tol, q0, q_max)
    return JensenReport(lhs - (avg - g0.log_mag), lhs, avg, g0.log_mag, R, R0, q, int(inside.size))


def jensen_growth_bound(zs: ZeroSet, R: float, params: SpaceParams, *,
                        q: int = 4096, n_t: int = 401,
                        n_theta: int = 128) -> tuple[float, float]:
    """Circle average of ``log|g|`` and its growth bound ``alpha R^2/2 + log||f||_inf``.

    From ``log|f(z)| <= alpha log^2|z| + log||f||`` the average over
    ``|w| = R`` is at most ``alpha R^2 / 2`` plus the log-norm. The norm is
    a grid estimate (a lower bound), which only makes the check stricter.
    """
    s = TWO_PI * np.arange(q) / q
    x = R * np.cos(s)
    lm, _, _ = log_product(zs, x, R * np.sin(s))
    avg = float(np.mean(lm))
    pointwise = float(np.max(lm - params.alpha * x * x))
    lo = min(float(zs.zeros.t[0]), -R) - 8.0 if len(zs) else -R - 8.0
    hi = max(float(zs.zeros.t[-1]), R) + 8.0 if len(zs) else R + 8.0
    est = sup_norm_estimate(product_evaluator(zs), params, lo, hi, n_t=n_t, n_theta=n_theta)
    offset = max(est.log_sup, pointwise)
    return avg, params.alpha * R * R / 2 + offset
