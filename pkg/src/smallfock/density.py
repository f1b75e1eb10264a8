"""Lower logarithmic density of finite point data.

For a window length ``R`` the quantity of interest is

    inf over t0 of  #{lambda : t0 <= t_lambda <= t0 + R} / R

with ``t0`` ranging over placements that keep the band inside the data
window. The count is piecewise constant in ``t0``; it only drops when a
point leaves through the left edge, so the infimum is found exactly by
evaluating the half-open counts ``#(t_k, t_k + R]`` right after each point
together with the two extreme placements.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .errors import PreconditionError
from .geometry import PointSequence

EDGE_GUARD = 3.0


@dataclass(frozen=True)
class DensityProfile:
    """``inf_t0 count/R`` for each requested ``R``; ``estimate`` is the last one."""

    entries: tuple[tuple[float, float], ...]
    estimate: float
    R_max_used: float
    argmin_t0: tuple[float, ...] = field(default=(), compare=False)

    def as_record(self) -> dict:
        return {
            "entries": [{"R": r, "inf_count_over_R": v} for r, v in self.entries],
            "estimate": self.estimate,
            "R_max_used": self.R_max_used,
        }


def count_in_band(seq: PointSequence, t0: float, R: float) -> int:
    """Number of points with ``t0 <= t <= t0 + R``."""
    if R < 0:
        raise PreconditionError("band length R must be nonnegative")
    lo = np.searchsorted(seq.t, t0, side="left")
    hi = np.searchsorted(seq.t, t0 + R, side="right")
    return int(hi - lo)


def min_band_count(seq: PointSequence, R: float) -> tuple[int, float]:
    """Exact ``min`` over admissible ``t0`` of the band count, and a minimizer.

    Admissible placements are ``t0`` in ``[t_min, t_max - R]``. When the
    minimum sits on an open interval ``(t_k, ...)`` the returned minimizer
    is the midpoint of that interval.
    """
    lo, hi = seq.window
    t0_max = hi - R
    if t0_max < lo:
        raise PreconditionError(f"band length {R} exceeds the data window")
    t = seq.t
    best = count_in_band(seq, lo, R)
    arg = lo
    c = count_in_band(seq, t0_max, R)
    if c < best:
        best, arg = c, t0_max
    # just to the right of each point that can leave while t0 < t0_max
    leave = t[(t >= lo) & (t < t0_max)]
    if leave.size:
        left = np.searchsorted(t, leave, side="right")
        right = np.searchsorted(t, leave + R, side="right")
        counts = right - left
        k = int(np.argmin(counts))
        if counts[k] < best:
            best = int(counts[k])
            # next event after leave[k]: another point leaving or one entering
            nxt = [t0_max]
            after = t[t > leave[k]]
            if after.size:
                nxt.append(after[0])
            enter = t[t - R > leave[k]]
            if enter.size:
                nxt.append(enter[0] - R)
            arg = 0.5 * (leave[k] + min(nxt))
    return best, float(arg)


def lower_log_density(seq: PointSequence, R_list: Sequence[float]) -> DensityProfile:
    """Profile of ``inf count/R`` over the requested window lengths.

    Every ``R`` must satisfy ``0 < R <= extent/3``; longer windows are
    dominated by truncation at the data edges and are refused.
    """
    Rs = sorted(float(r) for r in R_list)
    if not Rs:
        raise PreconditionError("R_list is empty")
    limit = seq.extent / EDGE_GUARD
    bad = [r for r in Rs if not (0 < r <= limit)]
    if bad:
        raise PreconditionError(
            f"insufficient data extent: R values {bad} violate 0 < R <= extent/3 = {limit:g}")
    entries = []
    args = []
    for r in Rs:
        c, a = min_band_count(seq, r)
        entries.append((r, c / r))
        args.append(a)
    return DensityProfile(tuple(entries), entries[-1][1], Rs[-1], tuple(args))


def default_R_list(seq: PointSequence, n: int = 4) -> list[float]:
    """``n`` evenly spaced lengths up to the edge guard ``extent/3``."""
    top = seq.extent / EDGE_GUARD
    return [top * (i + 1) / n for i in range(n)]
