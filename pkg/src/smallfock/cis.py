"""Complete-interpolating-sequence test.

A separated sequence enumerated by modulus is written as
``t_k = (k + 2/p + delta_k) / (2 alpha)``. It is complete interpolating when
``delta`` is bounded and, for some integer ``m`` and window length ``N``,
every length-``N`` window average of ``delta`` stays strictly inside
``(-m - 1/2, -m + 1/2)``. At most one ``m`` can work for a given ``N``.

On finite data only fully contained windows are averaged, boundedness is
replaced by a cap on ``sup |delta_k|``, and the search over ``N`` stops at
``N_max``; a failing verdict therefore means "fails up to ``N_max``".
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view

from .errors import PreconditionError
from .fockspace import SpaceParams
from .geometry import PointSequence, separation_constant

DEFAULT_EPS_TOL = 1e-6
DEFAULT_N_MAX = 64
DEFAULT_DELTA_SUP_CAP = 10.0
DEFAULT_SEPARATION_FLOOR = 1e-6


@dataclass(frozen=True)
class DeltaSequence:
    k: np.ndarray
    delta: np.ndarray
    enumeration_offset: int
    params: SpaceParams

    @property
    def deltas(self) -> list[tuple[int, float]]:
        return [(int(a), float(b)) for a, b in zip(self.k, self.delta)]

    def reconstruct_t(self) -> np.ndarray:
        """Invert the parametrization: ``t_k = (k + 2/p + delta_k) / (2 alpha)``."""
        return (self.k + self.params.two_over_p + self.delta) / (2 * self.params.alpha)


@dataclass(frozen=True)
class AveragingWitness:
    m: int
    N: int
    margin: float


@dataclass(frozen=True)
class CisVerdict:
    separated: bool
    separation: float
    deltas_bounded: bool
    delta_sup: float
    averaging: Optional[AveragingWitness]
    best_margin: float
    N_max: int
    eps_tol: float
    delta_sup_cap: float
    separation_floor: float
    enumeration_offset: int

    @property
    def passed(self) -> bool:
        return (self.separated and self.deltas_bounded
                and self.averaging is not None and self.averaging.margin > 0)

    @property
    def failed_condition(self) -> Optional[str]:
        if not self.separated:
            return "i"
        if not self.deltas_bounded:
            return "ii"
        if not self.passed:
            return "iii"
        return None

    def as_record(self) -> dict:
        av = None
        if self.averaging is not None:
            av = {"m": self.averaging.m, "N": self.averaging.N, "margin": self.averaging.margin}
        return {
            "pass": self.passed,
            "failed_condition": self.failed_condition,
            "separated": self.separated,
            "separation_constant": self.separation,
            "deltas_bounded": self.deltas_bounded,
            "delta_sup": self.delta_sup,
            "averaging": av,
            "best_margin": self.best_margin,
            "enumeration_offset": self.enumeration_offset,
            "caps": {
                "N_max": self.N_max,
                "eps_tol": self.eps_tol,
                "delta_sup_cap": self.delta_sup_cap,
                "separation_floor": self.separation_floor,
            },
        }


def default_offset(t: np.ndarray) -> int:
    """Position of the point that gets index 0: smallest ``t >= 0``, else the largest ``t``."""
    nonneg = np.flatnonzero(t >= 0)
    return int(nonneg[0]) if nonneg.size else int(t.size - 1)


def compute_deltas(seq: PointSequence, params: SpaceParams,
                   offset: Optional[int] = None) -> DeltaSequence:
    """Deviations ``delta_k = 2 alpha t_k - k - 2/p`` from the critical lattice.

    The point at sorted position ``offset`` gets ``k = 0``; by default that is
    the point with the smallest nonnegative ``t``. Pass an explicit
    ``offset`` to keep an enumeration fixed across dilations.
    """
    if len(seq) == 0:
        raise PreconditionError("cannot enumerate an empty sequence")
    if offset is None:
        offset = default_offset(seq.t)
    k = np.arange(len(seq)) - int(offset)
    delta = 2 * params.alpha * seq.t - k - params.two_over_p
    return DeltaSequence(k, delta, int(offset), params)


def window_averages(delta: np.ndarray, N: int) -> np.ndarray:
    """Averages of all fully contained length-``N`` windows."""
    if delta.size < N:
        return np.empty(0)
    return sliding_window_view(delta, N).sum(axis=1) / N


def _scan_N(avg: np.ndarray) -> tuple[Optional[int], float]:
    """Best integer ``m`` for one window length and its margin ``1/2 - sup|avg + m|``."""
    lo = math.ceil(-float(avg.max()) - 1)
    hi = math.floor(-float(avg.min()) + 1)
    best_m, best = None, -math.inf
    for m in range(lo, hi + 1):
        margin = 0.5 - float(np.max(np.abs(avg + m)))
        if margin > best:
            best_m, best = m, margin
    return best_m, best


def find_m(d: DeltaSequence, N_max: int = DEFAULT_N_MAX,
           eps_tol: float = DEFAULT_EPS_TOL) -> Optional[AveragingWitness]:
    """Smallest ``N`` (then its unique ``m``) whose window averages clear ``eps_tol``."""
    return _search(d.delta, N_max, eps_tol)[0]


def _search(delta: np.ndarray, N_max: int, eps_tol: float):
    if N_max < 1:
        raise PreconditionError("N_max must be at least 1")
    if not (0 < eps_tol < 0.5):
        raise PreconditionError("eps_tol must lie in (0, 1/2)")
    overall = -math.inf
    for N in range(1, N_max + 1):
        avg = window_averages(delta, N)
        if avg.size == 0:
            break
        m, margin = _scan_N(avg)
        overall = max(overall, margin)
        if m is not None and margin >= eps_tol:
            return AveragingWitness(m, N, margin), overall
    return None, overall


def feasible_ms(d: DeltaSequence, N: int, eps_tol: float) -> list[int]:
    """Every integer ``m`` meeting the margin at window length ``N`` (at most one)."""
    avg = window_averages(d.delta, N)
    if avg.size == 0:
        return []
    lo = math.ceil(-float(avg.max()) - 1)
    hi = math.floor(-float(avg.min()) + 1)
    return [m for m in range(lo, hi + 1)
            if 0.5 - float(np.max(np.abs(avg + m))) >= eps_tol]


def cis_check(seq: PointSequence, params: SpaceParams, N_max: int = DEFAULT_N_MAX,
              eps_tol: float = DEFAULT_EPS_TOL,
              delta_sup_cap: float = DEFAULT_DELTA_SUP_CAP,
              separation_floor: float = DEFAULT_SEPARATION_FLOOR,
              offset: Optional[int] = None) -> CisVerdict:
    """Run all three conditions and keep every diagnostic."""
    sep = separation_constant(seq)
    d = compute_deltas(seq, params, offset)
    sup = float(np.max(np.abs(d.delta)))
    witness, best = _search(d.delta, N_max, eps_tol)
    return CisVerdict(
        separated=sep > separation_floor,
        separation=sep,
        deltas_bounded=sup <= delta_sup_cap,
        delta_sup=sup,
        averaging=witness,
        best_margin=best,
        N_max=N_max,
        eps_tol=eps_tol,
        delta_sup_cap=delta_sup_cap,
        separation_floor=separation_floor,
        enumeration_offset=d.enumeration_offset,
    )
