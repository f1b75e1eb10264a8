"""Numerical sampling constants.

For ``p = 2`` the monomials ``z^n / ||z^n||`` are an orthonormal basis, so on
the span of ``n in [N0, N1]`` the sampling inequality becomes a statement
about the matrix

    M[lambda, n] = lambda^n |lambda| exp(-phi(lambda)) / ||z^n||

whose rows are the weighted point evaluations. ``||M b||^2`` is the
restricted norm of ``f = sum b_n z^n / ||z^n||`` and ``||b|| = ||f||``.
The reported bounds use the frame convention

    A ||f||^2 <= ||f|_Lambda||^2 <= B ||f||^2,

i.e. ``A`` and ``B`` are the extreme eigenvalues of ``M^* M``. The sampling
constants of the norm-equivalence form ``A' ||f|_Lambda||^2 <= ||f||^2 <=
B' ||f|_Lambda||^2`` are ``A' = 1/B`` and ``B' = 1/A``.

For ``p = inf`` the sampling constant is bounded from below by testing the
two-sided product that vanishes on a band of points.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from .errors import CertificateError, PreconditionError
from .fockspace import SpaceParams, log_monomial_norm, sup_norm_estimate
from .geometry import PointSequence, scale_sequence
from .products import ZeroSet, log_product, product_evaluator

RESIDUAL_TOL = 1e-8
STABILIZATION_STEP = 8
STABILIZATION_TOL = 0.05


def default_margin(params: SpaceParams) -> float:
    """Six Gaussian widths of a normalized monomial's sample profile."""
    return 6.0 / math.sqrt(params.alpha)


def point_window(params: SpaceParams, coeff_range: tuple[int, int], margin: float):
    """Log-moduli whose samples see the columns ``coeff_range`` above ``exp(-36)``.

    The profile of column ``n`` peaks at ``t = (n + 2/p)/(2 alpha)``; the
    window is ``[N0/(2a) - margin, (N1 + 2/p)/(2a) + margin]``.
    """
    n0, n1 = coeff_range
    h = params.cell
    return (n0 * h - margin, (n1 + params.two_over_p) * h + margin)


@dataclass(frozen=True)
class FrameMatrix:
    matrix: np.ndarray
    rows: np.ndarray
    coeff_range: tuple[int, int]
    point_window: tuple[float, float]
    margin: float


def frame_matrix(seq: PointSequence, params: SpaceParams, coeff_range: tuple[int, int],
                 margin: Optional[float] = None) -> FrameMatrix:
    """Weighted evaluation matrix of the normalized monomials ``N0..N1``."""
    if params.p != 2:
        raise PreconditionError("frame matrices are defined for p = 2")
    n0, n1 = int(coeff_range[0]), int(coeff_range[1])
    if n1 < n0:
        raise PreconditionError("empty coefficient range")
    if margin is None:
        margin = default_margin(params)
    lo, hi = point_window(params, (n0, n1), margin)
    if seq.window[0] > lo or seq.window[1] < hi:
        raise PreconditionError(
            f"declared data window {seq.window} does not cover the padded point window "
            f"[{lo:g}, {hi:g}] needed for coefficients {n0}..{n1}")
    rows = np.flatnonzero((seq.t >= lo) & (seq.t <= hi))
    t = seq.t[rows][:, None]
    th = seq.theta[rows][:, None]
    n = np.arange(n0, n1 + 1)[None, :]
    logmag = n * t + t - params.alpha * t * t - log_monomial_norm(params, n)
    m = np.exp(logmag + 1j * (n * th))
    return FrameMatrix(m, rows, (n0, n1), (lo, hi), float(margin))


def frame_bounds(m, *, check: bool = True) -> tuple[float, float]:
    """Smallest and largest eigenvalues of ``M^* M``.

    Computed from the singular values of ``M`` (so tiny lower bounds keep
    their relative accuracy) and certified by the eigen-residual
    ``||M^*M v - s^2 v|| <= 1e-8 ||M^*M||`` of both extreme vectors.
    """
    m = np.asarray(getattr(m, "matrix", m))
    if m.ndim != 2:
        raise PreconditionError("frame_bounds expects a matrix")
    rows, cols = m.shape
    if rows == 0 or cols == 0:
        return 0.0, 0.0
    _, s, vh = np.linalg.svd(m, full_matrices=True)
    B = float(s[0] ** 2)
    if rows < cols:
        A = 0.0
        v_min = vh[-1].conj()
    else:
        A = float(s[-1] ** 2)
        v_min = vh[cols - 1].conj()
    if check:
        scale = max(B, np.finfo(float).tiny)
        for lam, v in ((A, v_min), (B, vh[0].conj())):
            r = m.conj().T @ (m @ v) - lam * v
            if np.linalg.norm(r) > RESIDUAL_TOL * scale:
                raise CertificateError(
                    f"eigen-residual {np.linalg.norm(r):.3e} exceeds {RESIDUAL_TOL:g} * ||M*M||")
    return A, B


@dataclass(frozen=True)
class FrameBoundsReport:
    A: float
    B: float
    coeff_range: tuple[int, int]
    point_window: tuple[float, float]
    margin: float
    stabilized: bool
    n_points: int
    A_wide: float = math.nan
    B_wide: float = math.nan
    shift: float = 0.0

    @property
    def sampling_constants(self) -> tuple[float, float]:
        """``(A', B')`` in ``A'||f|L||^2 <= ||f||^2 <= B'||f|L||^2``."""
        return (1.0 / self.B if self.B > 0 else math.inf,
                1.0 / self.A if self.A > 0 else math.inf)

    def as_record(self) -> dict:
        return {
            "A": self.A,
            "B": self.B,
            "coeff_range": list(self.coeff_range),
            "point_window": list(self.point_window),
            "margin": self.margin,
            "stabilized": self.stabilized,
            "n_points": self.n_points,
            "A_wide": self.A_wide,
            "B_wide": self.B_wide,
            "shift": self.shift,
        }


def _rel(a: float, b: float) -> float:
    if a == b:
        return 0.0
    return abs(a - b) / max(abs(a), abs(b))


def frame_report(seq: PointSequence, params: SpaceParams, coeff_range: tuple[int, int],
                 margin: Optional[float] = None, *,
                 stabilization_step: int = STABILIZATION_STEP,
                 stabilization_tol: float = STABILIZATION_TOL,
                 shift: float = 0.0) -> FrameBoundsReport:
    """Frame bounds on ``coeff_range`` plus the widened-range stabilization check."""
    fm = frame_matrix(seq, params, coeff_range, margin)
    A, B = frame_bounds(fm)
    half = stabilization_step // 2
    wide = (fm.coeff_range[0] - half, fm.coeff_range[1] + stabilization_step - half)
    try:
        Aw, Bw = frame_bounds(frame_matrix(seq, params, wide, fm.margin))
        stable = _rel(A, Aw) < stabilization_tol and _rel(B, Bw) < stabilization_tol
    except PreconditionError:
        Aw = Bw = math.nan
        stable = False
    return FrameBoundsReport(A, B, fm.coeff_range, fm.point_window, fm.margin, stable,
                             int(fm.rows.size), Aw, Bw, shift)


def shift_grid(params: SpaceParams, n: int) -> np.ndarray:
    """``n`` equally spaced dilations ``s`` in ``[0, 1/(2 alpha))``."""
    return params.cell * np.arange(n) / n


@dataclass(frozen=True)
class ShiftProfile:
    reports: tuple[FrameBoundsReport, ...]

    @property
    def A_min(self) -> float:
        return min(r.A for r in self.reports)

    @property
    def B_max(self) -> float:
        return max(r.B for r in self.reports)

    @property
    def stabilized(self) -> bool:
        return all(r.stabilized for r in self.reports)

    def as_record(self) -> dict:
        return {"A_min": self.A_min, "B_max": self.B_max, "stabilized": self.stabilized,
                "reports": [r.as_record() for r in self.reports]}


def bounds_over_shifts(seq: PointSequence, params: SpaceParams, shifts: Sequence[float],
                       coeff_range: tuple[int, int], margin: Optional[float] = None,
                       **kw) -> ShiftProfile:
    """Frame bounds of every dilate ``exp(s) * Lambda`` on a fixed coefficient range.

    Sampling constants are ``1/(2 alpha)``-periodic in ``s``, so a grid over
    one period is the evidence for shift-invariant sampling:
    ``min_s A > 0`` and ``max_s B < inf``.
    """
    reps = []
    for s in shifts:
        reps.append(frame_report(scale_sequence(seq, float(s)), params, coeff_range,
                                 margin, shift=float(s), **kw))
    return ShiftProfile(tuple(reps))


@dataclass(frozen=True)
class RemovalTrend:
    removed_index: Optional[int]
    removed_t: Optional[float]
    schedule: tuple[tuple[int, int], ...]
    A_values: tuple[float, ...]
    baseline_A: tuple[float, ...]
    decay_ratio: float
    verdict: str

    def as_record(self) -> dict:
        return {
            "removed_index": self.removed_index,
            "removed_t": self.removed_t,
            "schedule": [list(s) for s in self.schedule],
            "A_values": list(self.A_values),
            "baseline_A": list(self.baseline_A),
            "decay_ratio": self.decay_ratio,
            "verdict": self.verdict,
        }


def removal_experiment(seq: PointSequence, params: SpaceParams, point_index: Optional[int],
                       schedule: Sequence[tuple[int, int]], margin: Optional[float] = None, *,
                       stable_tol: float = 0.10, decay_factor: float = 2.0) -> RemovalTrend:
    """Lower frame bound of ``Lambda minus {lambda}`` along growing truncations.

    For a supercritical sequence the bound settles ("A stable"); for a
    complete interpolating sequence the reduced set is no longer sampling
    and the truncated bound keeps falling ("A decaying toward 0").
    """
    sched = tuple((int(a), int(b)) for a, b in schedule)
    if len(sched) < 2:
        raise PreconditionError("the truncation schedule needs at least two steps")
    base = tuple(frame_bounds(frame_matrix(seq, params, c, margin))[0] for c in sched)
    if point_index is None:
        reduced, removed_t, vals = seq, None, base
    else:
        reduced = seq.remove_index(point_index)
        removed_t = float(seq.t[point_index])
        vals = tuple(frame_bounds(frame_matrix(reduced, params, c, margin))[0] for c in sched)
    first, last = vals[0], vals[-1]
    ratio = first / last if last > 0 else math.inf
    if ratio >= decay_factor:
        verdict = "A decaying toward 0"
    elif first > 0 and abs(last / first - 1) <= stable_tol:
        verdict = "A stable"
    else:
        verdict = "inconclusive"
    return RemovalTrend(point_index, removed_t, sched, vals, base, ratio, verdict)


def centered_schedule(center: int, widths: Sequence[int]) -> list[tuple[int, int]]:
    return [(center - w // 2, center + w - w // 2) for w in widths]


@dataclass(frozen=True)
class ExtremalCertificate:
    """Lower bound for the ``p = inf`` sampling constant from one band.

    ``measured_ratio = ||f||_inf / ||f|_Lambda||`` for the product ``f``
    vanishing on the (parity-reduced) band points; any such ratio is a lower
    bound for the sampling constant of the data. ``predicted_floor`` is the
    growth law ``exp((alpha/4)(|I| delta - 3/(2 alpha))^2)``, meaningful up to
    a constant once ``|I| delta > 3/(2 alpha)`` (``floor_applies``).
    """

    interval: tuple[float, float]
    two_N: int
    band_count: int
    deficiency: float
    measured_ratio: float
    log_measured_ratio: float
    predicted_floor: float
    log_predicted_floor: float
    floor_applies: bool
    dropped_t: Optional[float]
    shift_cells: int
    log_sup_norm: float
    log_restricted_norm: float
    log_partial_A: float
    log_partial_B: float
    log_norm_lower_estimate: float
    grid_t_step: float
    notes: tuple[str, ...] = field(default=())

    def as_record(self) -> dict:
        d = dict(self.__dict__)
        d["interval"] = list(self.interval)
        d["notes"] = list(self.notes)
        return d


def extremal_product_bound(seq: PointSequence, params: SpaceParams,
                           interval: tuple[float, float], *, n_t: int = 1601,
                           n_theta: int = 256) -> ExtremalCertificate:
    """Certificate for ``K_Lambda`` from the product vanishing on a band.

    Steps: count the points with ``t`` in ``I``, drop the outermost one if
    the count is odd, move the band by whole cells ``1/(2 alpha)`` (an
    isometry) so that it starts in ``[-R - 1/(2 alpha), -R]`` with
    ``R = |I|/2``, split the band points at the median into inner factors
    ``(1 - lambda/z)`` and outer factors ``(1 - z/lambda)``, then compare a
    grid estimate of ``||f||_inf`` with ``sup over all Lambda of
    |f| exp(-phi)``.
    """
    if not params.is_sup:
        raise PreconditionError("the extremal product certificate is for p = inf")
    t_lo, t_hi = float(interval[0]), float(interval[1])
    L = t_hi - t_lo
    if not L > 0:
        raise PreconditionError("interval must have positive length")
    if seq.window[0] > t_lo - L or seq.window[1] < t_hi + L:
        raise PreconditionError(
            f"data window {seq.window} must extend |I| = {L:g} beyond the band on both sides")
    in_band = np.flatnonzero((seq.t >= t_lo) & (seq.t <= t_hi))
    count = int(in_band.size)
    if count == 0:
        raise PreconditionError("band contains no points")
    a = params.alpha
    h = params.cell
    delta = 1.0 - count / (2 * a * L)
    notes = []
    dropped_t = None
    if count % 2:
        center = 0.5 * (t_lo + t_hi)
        ends = [in_band[0], in_band[-1]]
        far = max(ends, key=lambda i: (abs(seq.t[i] - center), seq.t[i]))
        dropped_t = float(seq.t[far])
        in_band = in_band[in_band != far]
        notes.append(f"odd band count {count}: dropped the outermost point t={dropped_t:g}")
    if in_band.size < 2:
        raise PreconditionError("fewer than two band points after parity reduction")
    N = in_band.size // 2
    R = L / 2
    n_shift = math.ceil(round((t_lo + R) / h, 12))
    off = n_shift * h
    t_all = seq.t - off
    band_t = seq.t[in_band] - off
    band = PointSequence(band_t, seq.theta[in_band], (float(band_t[0]), float(band_t[-1])))
    labels = np.concatenate([np.arange(-N, 0), np.arange(1, N + 1)])
    zs = ZeroSet(band, labels)
    ev = product_evaluator(zs)

    lm, _, _ = log_product(zs, t_all, seq.theta)
    restricted = float(np.max(lm - a * t_all ** 2))
    reach = N * h + L + 8.0
    lo = min(float(band_t[0]), -reach) - 2.0
    hi = max(float(band_t[-1]), reach) + 2.0
    est = sup_norm_estimate(ev, params, lo, hi, n_t=n_t, n_theta=n_theta,
                            rings=(N * h, -N * h))
    # the grid never beats the data points themselves
    log_sup = max(est.log_sup, restricted)
    log_ratio = log_sup - restricted

    log_A = -float(np.sum(band_t[N:]))
    log_B = float(np.sum(band_t[:N]))
    lower = max(log_A, log_B) + N * N / (4 * a)
    x = (a / 4) * (L * delta - 3 / (2 * a)) ** 2
    return ExtremalCertificate(
        interval=(t_lo, t_hi),
        two_N=2 * N,
        band_count=count,
        deficiency=delta,
        measured_ratio=math.exp(min(log_ratio, 700.0)),
        log_measured_ratio=log_ratio,
        predicted_floor=math.exp(min(x, 700.0)),
        log_predicted_floor=x,
        floor_applies=L * delta > 3 / (2 * a),
        dropped_t=dropped_t,
        shift_cells=n_shift,
        log_sup_norm=log_sup,
        log_restricted_norm=restricted,
        log_partial_A=log_A,
        log_partial_B=log_B,
        log_norm_lower_estimate=lower,
        grid_t_step=est.t_step,
        notes=tuple(notes),
    )


def fitting_coeff_range(seq: PointSequence, params: SpaceParams,
                        margin: Optional[float] = None,
                        reserve: int = STABILIZATION_STEP) -> tuple[int, int]:
    """Widest coefficient range whose padded window fits the data window.

    ``reserve`` columns are held back (half on each side) so the widened
    stabilization run also fits.
    """
    if margin is None:
        margin = default_margin(params)
    h = params.cell
    lo, hi = seq.window
    n0 = math.ceil(round((lo + margin) / h, 9)) + reserve // 2
    n1 = math.floor(round((hi - margin) / h - params.two_over_p, 9)) - (reserve - reserve // 2)
    if n1 < n0:
        raise PreconditionError(
            f"data window {seq.window} is too short for any coefficient range at margin {margin:g}")
    return n0, n1
