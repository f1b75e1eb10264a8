import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy.optimize import brentq

from conftest import gamma_points
from smallfock.errors import PreconditionError
from smallfock.fockspace import SpaceParams, log_monomial_norm
from smallfock.geometry import PointSequence, rotate_sequence, scale_sequence
from smallfock.spectral import (bounds_over_shifts, centered_schedule, default_margin,
                                extremal_product_bound, fitting_coeff_range, frame_bounds,
                                frame_matrix, frame_report, point_window, removal_experiment,
                                shift_grid)

P2 = SpaceParams(0.5, 2)
PINF = SpaceParams(0.5, math.inf)


def charpoly_extremes(G):
    """Smallest and largest roots of det(G - x I) by sign changes and bisection."""
    top = float(np.trace(G).real) * 1.01 + 1e-12
    xs = np.linspace(-1e-9 * top, top, 20001)
    f = lambda x: float(np.linalg.det(G - x * np.eye(G.shape[0])).real)
    vals = np.array([f(x) for x in xs])
    roots = [brentq(f, xs[i], xs[i + 1], xtol=1e-15, rtol=1e-14)
             for i in np.flatnonzero(np.sign(vals[:-1]) != np.sign(vals[1:]))]
    return min(roots), max(roots)


def lattice(t, theta=None, window=None):
    t = np.asarray(t, dtype=float)
    return PointSequence.from_arrays(t, None if theta is None else theta, window)


class TestFrameBounds:
    def test_identity(self):
        assert frame_bounds(np.eye(3)) == pytest.approx((1.0, 1.0))

    def test_diagonal(self):
        assert frame_bounds(np.diag([1.0, 2.0])) == pytest.approx((1.0, 4.0))

    def test_wide_matrix_has_zero_lower_bound(self):
        A, B = frame_bounds(np.ones((1, 3)))
        assert A == 0.0 and B == pytest.approx(3.0)

    def test_against_characteristic_polynomial(self):
        rng = np.random.default_rng(0)
        for _ in range(12):
            n = int(rng.integers(1, 5))
            m = rng.standard_normal((n + 2, n)) + 1j * rng.standard_normal((n + 2, n))
            lo, hi = charpoly_extremes(m.conj().T @ m)
            A, B = frame_bounds(m)
            assert A == pytest.approx(lo, rel=1e-8)
            assert B == pytest.approx(hi, rel=1e-8)

    def test_random_vector_certificate(self):
        rng = np.random.default_rng(1)
        fm = frame_matrix(gamma_points(0.5, 2, -40, 40), P2, (-10, 10))
        A, B = frame_bounds(fm)
        for _ in range(100):
            b = rng.standard_normal(21) + 1j * rng.standard_normal(21)
            nb = np.vdot(b, b).real
            nm = np.linalg.norm(fm.matrix @ b) ** 2
            assert A * nb <= nm + 1e-8 * nb
            assert nm <= B * nb + 1e-8 * nb


class TestFrameMatrix:
    def test_empty_sequence(self):
        s = PointSequence.from_arrays([], None, (-50, 50))
        fm = frame_matrix(s, P2, (0, 3))
        assert fm.matrix.shape == (0, 4)
        assert frame_bounds(fm)[0] == 0.0

    def test_single_entry(self):
        t, n = 0.7, 1
        s = PointSequence.from_arrays([t], [0.4], (-20, 20))
        fm = frame_matrix(s, P2, (n, n))
        e2 = math.exp(2 * (n * t + t - 0.5 * t * t - log_monomial_norm(P2, n)))
        assert frame_bounds(fm) == pytest.approx((e2, e2))

    def test_rows_are_window_points(self):
        s = gamma_points(0.5, 2, -40, 40)
        fm = frame_matrix(s, P2, (-10, 10))
        lo, hi = fm.point_window
        assert lo <= -10 * P2.cell - default_margin(P2)
        assert hi >= 10 * P2.cell + default_margin(P2)
        assert np.all((s.t[fm.rows] >= lo) & (s.t[fm.rows] <= hi))
        assert fm.rows.size == np.count_nonzero((s.t >= lo) & (s.t <= hi))

    def test_window_must_be_covered(self):
        with pytest.raises(PreconditionError, match="window"):
            frame_matrix(gamma_points(0.5, 2, -12, 12), P2, (-10, 10))

    def test_only_p2(self):
        with pytest.raises(PreconditionError):
            frame_matrix(gamma_points(0.5, 2, -40, 40), SpaceParams(0.5, 1), (0, 1))

    def test_entries_are_order_one(self):
        fm = frame_matrix(gamma_points(0.5, 2, -60, 60), P2, (-12, 12))
        assert np.max(np.abs(fm.matrix)) <= 1.0

    def test_gamma_example(self):
        rep = frame_report(gamma_points(0.5, 2, -40, 40), P2, (-10, 10), 6.0)
        assert 0 < rep.A <= rep.B < math.inf
        assert rep.sampling_constants == pytest.approx((1 / rep.B, 1 / rep.A))

    @settings(max_examples=20, deadline=None)
    @given(st.integers(0, 2**31), st.floats(-math.pi, math.pi))
    def test_rotation_invariance(self, seed, phi):
        rng = np.random.default_rng(seed)
        t = np.sort(rng.uniform(-25, 25, 70))
        s = PointSequence.from_arrays(t, rng.uniform(-3, 3, 70), (-25, 25))
        a = frame_bounds(frame_matrix(s, P2, (-6, 6)))
        b = frame_bounds(frame_matrix(rotate_sequence(s, phi), P2, (-6, 6)))
        assert b == pytest.approx(a, rel=1e-10)

    @settings(max_examples=20, deadline=None)
    @given(st.integers(0, 2**31))
    def test_scale_covariance(self, seed):
        rng = np.random.default_rng(seed)
        t = np.sort(rng.uniform(-25, 25, 70))
        s = PointSequence.from_arrays(t, rng.uniform(-3, 3, 70), (-25, 25))
        a = frame_bounds(frame_matrix(s, P2, (-6, 6)))
        b = frame_bounds(frame_matrix(scale_sequence(s, P2.cell), P2, (-5, 7)))
        assert b == pytest.approx(a, rel=1e-10)

    @settings(max_examples=20, deadline=None)
    @given(st.integers(0, 2**31), st.floats(0.0, 4.0))
    def test_larger_window_never_lowers_bounds(self, seed, extra):
        rng = np.random.default_rng(seed)
        t = np.sort(rng.uniform(-30, 30, 90))
        s = PointSequence.from_arrays(t, rng.uniform(-3, 3, 90), (-30, 30))
        m = default_margin(P2)
        a = frame_bounds(frame_matrix(s, P2, (-5, 5), m))
        b = frame_bounds(frame_matrix(s, P2, (-5, 5), m + extra))
        assert b[0] >= a[0] * (1 - 1e-10)
        assert b[1] >= a[1] * (1 - 1e-10)


class TestShifts:
    def test_grid(self):
        g = shift_grid(P2, 8)
        assert g[0] == 0 and g[-1] < P2.cell and len(g) == 8

    def test_zero_shift_reproduces_report(self):
        s = gamma_points(0.5, 2, -40, 40)
        rep = frame_report(s, P2, (-8, 8))
        prof = bounds_over_shifts(s, P2, [0.0], (-8, 8))
        assert prof.reports[0].A == rep.A and prof.reports[0].B == rep.B

    def test_full_period_close_to_zero_shift(self):
        s = gamma_points(0.5, 2, -60, 60)
        prof = bounds_over_shifts(s, P2, [0.0, P2.cell], (-12, 12))
        a, b = prof.reports
        assert b.A == pytest.approx(a.A, rel=0.05)
        assert b.B == pytest.approx(a.B, rel=0.05)

    def test_critical_lattice_dips_at_half_cell(self):
        # the half-shifted lattice is not complete interpolating: its bound collapses
        s = gamma_points(0.5, 2, -60, 60)
        prof = bounds_over_shifts(s, P2, shift_grid(P2, 8), (-12, 12))
        As = [r.A for r in prof.reports]
        assert int(np.argmin(As)) == 4
        assert As[4] < 0.2 * As[0]

    def test_fitting_range(self):
        s = gamma_points(0.5, 2, -30, 30)
        n0, n1 = fitting_coeff_range(s, P2)
        frame_report(s, P2, (n0, n1))
        lo, hi = point_window(P2, (n0 - 4, n1 + 4), default_margin(P2))
        assert s.window[0] <= lo and hi <= s.window[1]


class TestRemoval:
    def test_no_removal_is_baseline(self):
        s = gamma_points(0.5, 2, -50, 50)
        tr = removal_experiment(s, P2, None, centered_schedule(0, [8, 16]))
        assert tr.A_values == tr.baseline_A
        want = frame_bounds(frame_matrix(s, P2, (-4, 4)))[0]
        assert tr.A_values[0] == want

    def test_schedule_validation(self):
        with pytest.raises(PreconditionError):
            removal_experiment(gamma_points(0.5, 2, -50, 50), P2, 3, [(-4, 4)])

    def test_centered_schedule(self):
        assert centered_schedule(0, [8, 9]) == [(-4, 4), (-4, 5)]


class TestExtremal:
    def test_half_density_grows(self):
        t = np.arange(-41, 42, 2, dtype=float)
        s = PointSequence.from_arrays(t, None, (-41, 41))
        prev = -math.inf
        for L in (4, 8, 12):
            c = extremal_product_bound(s, PINF, (-L / 2, L / 2), n_t=401, n_theta=64)
            assert c.two_N == L // 2 and c.deficiency == pytest.approx(0.5)
            assert c.log_measured_ratio > prev
            assert c.measured_ratio >= 1
            prev = c.log_measured_ratio

    def test_critical_lattice_stays_bounded(self):
        s = gamma_points(0.5, math.inf, -40, 42)
        logs = []
        for L in (4, 8, 12):
            c = extremal_product_bound(s, PINF, (-L / 2 - 0.5, L / 2 + 0.5), n_t=401, n_theta=64)
            assert c.deficiency == pytest.approx(0.0, abs=1e-12)
            logs.append(c.log_measured_ratio)
            assert c.log_predicted_floor == pytest.approx(0.125 * 9)
        assert max(logs) - min(logs) < 0.1

    def test_odd_count_drops_outermost(self):
        s = gamma_points(0.5, math.inf, -40, 42)
        c = extremal_product_bound(s, PINF, (-2.0, 2.2), n_t=201, n_theta=32)
        assert c.band_count == 5 and c.two_N == 4
        assert c.dropped_t == pytest.approx(-2.0)
        assert c.notes

    def test_gap_monotone(self):
        logs = []
        for G in (2, 4, 6):
            t = np.arange(-40, 41, dtype=float)
            t = t[(t <= 0) | (t >= G)]
            s = PointSequence.from_arrays(t, None, (-40, 40))
            c = extremal_product_bound(s, PINF, (-6.5, G + 6.5), n_t=401, n_theta=64)
            logs.append(c.log_measured_ratio)
        assert logs[0] < logs[1] < logs[2]

    def test_empty_band(self):
        s = PointSequence.from_arrays(np.array([-30.0, 30.0]), None, (-40, 40))
        with pytest.raises(PreconditionError, match="no points"):
            extremal_product_bound(s, PINF, (-2, 2))

    def test_padding_required(self):
        with pytest.raises(PreconditionError, match="extend"):
            extremal_product_bound(gamma_points(0.5, math.inf, -5, 5), PINF, (-2, 2))

    def test_only_sup(self):
        with pytest.raises(PreconditionError):
            extremal_product_bound(gamma_points(0.5, 2, -40, 40), P2, (-2, 2))
