import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from wiretapbc.ordering import (PROVED, REFUTED, UNDETERMINED, BecBscClass, check_all,
                                check_degraded, check_less_noisy, check_more_capable,
                                classify_bec_bsc, strongest_relation)
from wiretapbc.probcore import (binary_entropy, cascade, make_bec, make_bsc, make_identity,
                                random_channel)

# q solving 0.25 = 0.1 * (1 - q) + 0.9 * q
Q_WITNESS = (0.25 - 0.1) / (1 - 0.2)


class TestDegraded:
    def test_bsc_pair_witness(self):
        rep = check_degraded(make_bsc(0.1), make_bsc(0.25))
        assert rep.holds == PROVED
        assert np.allclose(rep.witness.rows, make_bsc(Q_WITNESS).rows, atol=1e-6)
        assert np.allclose(cascade(make_bsc(0.1), rep.witness).rows, make_bsc(0.25).rows,
                           atol=1e-7)

    def test_reverse_pair_refuted(self):
        assert check_degraded(make_bsc(0.25), make_bsc(0.1)).holds == REFUTED

    def test_identical_channels(self):
        w = random_channel(np.random.default_rng(1), 3, 4)
        rep = check_degraded(w, w)
        assert rep.holds == PROVED
        assert rep.residual <= 1e-9

    def test_bec_bsc_band_edge(self):
        # e = 2p is the last degraded point of the erasure/symmetric pair
        assert check_degraded(make_bec(0.2), make_bsc(0.1)).holds == PROVED
        assert check_degraded(make_bec(0.3), make_bsc(0.1)).holds == REFUTED

    @settings(max_examples=30, deadline=None)
    @given(st.integers(0, 2 ** 32 - 1))
    def test_constructed_cascade_is_proved(self, seed):
        rng = np.random.default_rng(seed)
        w = random_channel(rng, 3, 3)
        rep = check_degraded(w, cascade(w, random_channel(rng, 3, 2)))
        assert rep.holds == PROVED
        assert rep.residual <= 1e-9


class TestLessNoisy:
    def test_noiseless_over_bsc(self):
        rep = check_less_noisy(make_identity(2), make_bsc(0.2))
        assert rep.holds == UNDETERMINED and rep.sampled
        assert rep.status == "sampled-proved"

    def test_degraded_pair_passes(self):
        assert check_less_noisy(make_bsc(0.1), make_bsc(0.25)).plausible

    def test_reverse_pair_refuted(self):
        rep = check_less_noisy(make_bsc(0.25), make_bsc(0.1))
        assert rep.holds == REFUTED
        p1, p2 = rep.witness
        assert rep.residual > 0

    def test_bec_bsc_less_noisy_band(self):
        # 2p < e <= 4p(1-p): less noisy but not degraded
        assert check_less_noisy(make_bec(0.3), make_bsc(0.1)).plausible
        assert check_less_noisy(make_bec(0.45), make_bsc(0.1)).refuted


class TestMoreCapable:
    def test_same_channel(self):
        w = make_bsc(0.2)
        assert check_more_capable(w, w).plausible

    def test_noiseless_dominates(self):
        rng = np.random.default_rng(2)
        assert check_more_capable(make_identity(2), random_channel(rng, 2, 3)).plausible

    def test_bec_bsc_agrees_with_table(self):
        for e, p in [(0.3, 0.1), (0.45, 0.1), (0.6, 0.1), (0.9, 0.25)]:
            cls = classify_bec_bsc(e, p)
            rep = check_more_capable(make_bec(e), make_bsc(p))
            expect = cls != BecBscClass.ESSENTIALLY_LESS_NOISY
            assert rep.plausible == expect, (e, p, cls)


class TestClassify:
    def test_table_bands(self):
        assert classify_bec_bsc(0.2, 0.25) == BecBscClass.DEGRADED
        assert classify_bec_bsc(0.6, 0.25) == BecBscClass.LESS_NOISY
        assert classify_bec_bsc(0.95, 0.25) == BecBscClass.ESSENTIALLY_LESS_NOISY
        assert classify_bec_bsc(0.8, 0.25) == BecBscClass.MORE_CAPABLE

    def test_band_edges_half_open(self):
        p = 0.25
        assert classify_bec_bsc(2 * p, p) == BecBscClass.DEGRADED
        assert classify_bec_bsc(4 * p * (1 - p), p) == BecBscClass.LESS_NOISY
        assert classify_bec_bsc(binary_entropy(p), p) == BecBscClass.MORE_CAPABLE


class TestHierarchy:
    def test_constructed_cascades(self):
        rng = np.random.default_rng(5)
        for k in range(50):
            w = random_channel(rng, 2 + k % 2, 3)
            v = cascade(w, random_channel(rng, 3, 2))
            reps = check_all(w, v, seed=k, samples=300, grid=32)
            assert reps["degraded"].holds == PROVED
            assert not reps["less_noisy"].refuted
            assert not reps["more_capable"].refuted
            assert strongest_relation(reps) == "degraded"
