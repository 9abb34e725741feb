import math

import numpy as np
import pytest
from hypothesis import given, strategies as st
from hypothesis.extra.numpy import arrays

from emoarcs import tsdist
from emoarcs.errors import LengthMismatch, RangeError
from emoarcs.tsdist import PRUNED, DistanceConfig

from oracles import dtw_enumerate, euclidean

vals = st.floats(-3, 3, allow_nan=False)


def pair(n_min=1, n_max=7):
    return st.integers(n_min, n_max).flatmap(
        lambda n: st.tuples(arrays(float, n, elements=vals), arrays(float, n, elements=vals)))


class TestConfig:
    def test_default_reach(self):
        assert DistanceConfig().reach == 12  # round(12.5) rounds to even

    def test_reach_clamped(self):
        assert tsdist.reach_for(1.0, 10) == 9
        assert tsdist.reach_for(0.0, 10) == 0

    def test_invalid_fraction(self):
        with pytest.raises(RangeError):
            DistanceConfig(reach_fraction=1.5)


class TestEnvelope:
    def test_example(self):
        env = tsdist.keogh_envelope([0, 1, 0, 2, 0], 1)
        assert env.upper.tolist() == [1, 1, 2, 2, 2]
        assert env.lower.tolist() == [0, 0, 0, 0, 0]

    def test_zero_reach_is_identity(self):
        x = [0.3, -1.0, 2.0]
        env = tsdist.keogh_envelope(x, 0)
        assert env.upper.tolist() == x and env.lower.tolist() == x

    @given(arrays(float, st.integers(1, 60), elements=vals), st.integers(0, 70))
    def test_matches_windowed_min_max(self, x, r):
        env = tsdist.keogh_envelope(x, r)
        for i in range(x.size):
            w = x[max(0, i - r):i + r + 1]
            assert env.upper[i] == w.max() and env.lower[i] == w.min()


class TestLbKeogh:
    def test_example(self):
        assert tsdist.lb_keogh([0, 1, 0], [2, 1, 0], 1) == 1.0

    def test_self_is_zero(self, rng):
        x = rng.normal(size=40)
        assert tsdist.lb_keogh(x, x, 3) == 0.0

    def test_length_mismatch(self):
        with pytest.raises(LengthMismatch):
            tsdist.lb_keogh([0, 1, 2], [0, 1], 1)

    @given(pair(1, 40), st.integers(0, 45))
    def test_never_exceeds_dtw(self, ab, r):
        a, b = ab
        assert tsdist.lb_keogh(a, b, r) <= tsdist.dtw(a, b, r) + 1e-12

    @given(pair(2, 30), st.integers(0, 10))
    def test_nonincreasing_in_reach(self, ab, r):
        a, b = ab
        assert tsdist.lb_keogh(a, b, r + 1) <= tsdist.lb_keogh(a, b, r) + 1e-15


class TestDtw:
    def test_shifted_peak_unbounded(self):
        assert tsdist.dtw([0, 1, 0, 0], [0, 0, 1, 0]) == 0.0

    def test_shifted_peak_no_warping(self):
        assert abs(tsdist.dtw([0, 1, 0, 0], [0, 0, 1, 0], 0) - math.sqrt(2)) <= 1e-12

    def test_shifted_peak_reach_one(self):
        assert tsdist.dtw([0, 1, 0, 0], [0, 0, 1, 0], 1) == 0.0

    def test_unequal_lengths(self):
        assert tsdist.dtw([0, 1, 2], [0, 0, 1, 1, 2]) == 0.0
        with pytest.raises(LengthMismatch):
            tsdist.dtw([0, 1, 2], [0, 1], 1)

    def test_negative_reach(self):
        with pytest.raises(RangeError):
            tsdist.dtw([0, 1], [1, 0], -1)

    @given(pair(1, 7), st.one_of(st.none(), st.integers(0, 7)))
    def test_matches_path_enumeration(self, ab, r):
        a, b = ab
        assert abs(tsdist.dtw(a, b, r) - dtw_enumerate(a, b, r)) <= 1e-12

    @given(st.integers(1, 6), st.integers(1, 6), st.data())
    def test_unbounded_unequal_matches_enumeration(self, n, m, data):
        a = data.draw(arrays(float, n, elements=vals))
        b = data.draw(arrays(float, m, elements=vals))
        assert abs(tsdist.dtw(a, b) - dtw_enumerate(a, b)) <= 1e-12

    @given(pair(1, 40), st.integers(0, 45))
    def test_symmetric(self, ab, r):
        a, b = ab
        assert tsdist.dtw(a, b, r) == tsdist.dtw(b, a, r)

    @given(pair(1, 40))
    def test_zero_reach_is_euclidean(self, ab):
        a, b = ab
        assert abs(tsdist.dtw(a, b, 0) - euclidean(a, b)) <= 1e-9

    @given(pair(2, 40), st.integers(0, 40))
    def test_nonincreasing_in_reach(self, ab, r):
        a, b = ab
        assert tsdist.dtw(a, b, r + 1) <= tsdist.dtw(a, b, r) + 1e-12

    @given(pair(1, 30))
    def test_identity_and_bounded_by_euclidean(self, ab):
        a, b = ab
        assert tsdist.dtw(a, a, 3) == 0.0
        assert tsdist.dtw(a, b) <= euclidean(a, b) + 1e-12


class TestPruned:
    def test_pruned_when_bound_reaches_best(self):
        a, b = [0, 1, 0], [2, 1, 0]
        assert tsdist.pruned_distance(a, b, 1, 1.0) is PRUNED
        assert tsdist.pruned_distance(a, b, 1, 0.5) is PRUNED

    def test_exact_when_bound_is_below_best(self):
        a, b = [0, 1, 0], [2, 1, 0]
        assert tsdist.pruned_distance(a, b, 1, 10.0) == tsdist.dtw(a, b, 1)

    def test_uses_larger_of_both_directions(self):
        # LB(a, b) is zero but LB(b, a) is not
        a, b = [0, 5, 0, 0], [0, 1, 0, 0]
        assert tsdist.lb_keogh(a, b, 1) == 0.0
        assert tsdist.lb_keogh(b, a, 1) > 0.0
        assert tsdist.pruned_distance(a, b, 1, 1.0) is PRUNED

    @given(pair(1, 30), st.integers(0, 10), st.floats(0, 20))
    def test_sound(self, ab, r, best):
        a, b = ab
        out = tsdist.pruned_distance(a, b, r, best)
        exact = tsdist.dtw(a, b, r)
        if out is PRUNED:
            assert exact >= best - 1e-12
        else:
            assert out == exact


class TestMatrix:
    def test_entries_and_symmetry(self, rng):
        X = rng.normal(size=(7, 30))
        mat = tsdist.distance_matrix(X, 2)
        assert np.array_equal(mat, mat.T)
        assert np.all(np.diag(mat) == 0)
        assert mat[1, 4] == tsdist.dtw(X[1], X[4], 2)

    def test_jobs_do_not_change_result(self, rng):
        X = rng.normal(size=(11, 40))
        assert np.array_equal(tsdist.distance_matrix(X, 3, 1), tsdist.distance_matrix(X, 3, 4))

    def test_unbounded(self, rng):
        X = rng.normal(size=(4, 12))
        assert tsdist.distance_matrix(X, None)[0, 3] == tsdist.dtw(X[0], X[3])

    def test_file_round_trip(self, tmp_path, rng):
        X = rng.normal(size=(6, 20))
        mat = tsdist.distance_matrix(X, 1)
        cfg = DistanceConfig(0.05, 20)
        tsdist.write_distance_matrix(mat, tmp_path / "d.csv", cfg)
        back, cfg2 = tsdist.load_distance_matrix(tmp_path / "d.csv")
        assert np.array_equal(back, mat)
        assert cfg2 == cfg
