import math
import random

import pytest
from hypothesis import given, strategies as st

from robbins.core import (BetaWeight, Interval, NormalInverseGamma, NormalWeight,
                          PersistenceLevel, SequenceMonitor)


class TestInterval:
    def test_orders_endpoints(self):
        with pytest.raises(ValueError):
            Interval(1.0, 0.0)

    def test_degenerate_point_allowed(self):
        iv = Interval(0.5, 0.5)
        assert iv.width == 0.0
        assert iv.contains(0.5)

    @pytest.mark.parametrize("lo,hi", [(float("nan"), 1.0), (0.0, float("inf"))])
    def test_rejects_non_finite(self, lo, hi):
        with pytest.raises(ValueError):
            Interval(lo, hi)

    def test_geometry(self):
        iv = Interval(-1.0, 3.0)
        assert iv.width == 4.0
        assert iv.midpoint == 1.0
        assert iv.contains(-1.0) and iv.contains(3.0) and not iv.contains(3.0001)
        assert iv.intersects(Interval(3.0, 5.0))          # shared point
        assert not iv.intersects(Interval(3.1, 5.0))


class TestPersistenceLevel:
    @pytest.mark.parametrize("eps", [0.0, 1.0, -0.1, 1.5])
    def test_rejects_boundary(self, eps):
        with pytest.raises(ValueError):
            PersistenceLevel(eps)

    def test_log_epsilon(self):
        assert PersistenceLevel(0.2).log_epsilon == pytest.approx(math.log(0.2), abs=0)


class TestWeights:
    def test_scale_validation(self):
        with pytest.raises(ValueError):
            NormalWeight(0.0, 0.0)
        with pytest.raises(ValueError):
            BetaWeight(0.0, 1.0)
        with pytest.raises(ValueError):
            NormalInverseGamma(0.0, 1.0, -1.0, 1.0)

    def test_valid(self):
        NormalWeight(-3.0, 2.5)
        BetaWeight(0.5, 0.5)
        NormalInverseGamma(1.0, 8.0, 2.0, 1.0)


class TestSequenceMonitor:
    def test_single_covering_interval_sets_no_flags(self):
        mon = SequenceMonitor(true_value=0.0)
        mon.update(Interval(-1.0, 1.0))
        assert not mon.contradicted and not mon.noncovered

    def test_disjoint_intervals_contradict(self):
        mon = SequenceMonitor(true_value=0.3)
        mon.update(Interval(0.2, 0.5))
        mon.update(Interval(0.6, 0.9))
        assert mon.contradicted

    def test_truth_below_lower_is_noncoverage_only(self):
        mon = SequenceMonitor(true_value=0.0)
        mon.update(Interval(0.1, 0.5))
        assert mon.noncovered and not mon.contradicted

    def test_touching_intervals_do_not_contradict(self):
        mon = SequenceMonitor(true_value=1.0)
        mon.update(Interval(0.0, 1.0))
        mon.update(Interval(1.0, 2.0))
        assert not mon.contradicted          # intersection is the point {1}
        assert not mon.noncovered

    def test_idempotent_on_repeated_interval(self):
        mon = SequenceMonitor(true_value=0.0)
        mon.update(Interval(-0.5, 0.5))
        state = (mon.max_lower, mon.min_upper, mon.contradicted, mon.noncovered)
        mon.update(Interval(-0.5, 0.5))
        assert state == (mon.max_lower, mon.min_upper, mon.contradicted, mon.noncovered)

    def test_flags_are_monotone(self):
        mon = SequenceMonitor(true_value=0.0)
        mon.update(Interval(0.2, 0.5))
        assert mon.noncovered
        mon.update(Interval(-10.0, 10.0))    # a later wide interval cannot clear it
        assert mon.noncovered


intervals = st.tuples(
    st.floats(-50, 50, allow_nan=False), st.floats(0, 50, allow_nan=False)
).map(lambda p: Interval(p[0], p[0] + p[1]))


def _final_state(seq, truth):
    mon = SequenceMonitor(true_value=truth)
    for iv in seq:
        mon.update(iv)
    return mon


@given(st.lists(intervals, min_size=1, max_size=12),
       st.floats(-60, 60, allow_nan=False), st.randoms())
def test_flags_depend_only_on_multiset(seq, truth, rnd):
    shuffled = list(seq)
    rnd.shuffle(shuffled)
    a, b = _final_state(seq, truth), _final_state(shuffled, truth)
    assert (a.contradicted, a.noncovered) == (b.contradicted, b.noncovered)
    assert a.max_lower == b.max_lower and a.min_upper == b.min_upper


@given(st.lists(intervals, min_size=1, max_size=12), st.floats(-60, 60, allow_nan=False))
def test_contradiction_implies_noncoverage(seq, truth):
    mon = _final_state(seq, truth)
    if mon.contradicted:
        assert mon.noncovered          # an empty intersection must exclude the truth
