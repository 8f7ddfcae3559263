import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from wiretapbc import becbsc
from wiretapbc import regions as R
from wiretapbc.hull import SWEEP_LAMBDAS, RateRegion, hausdorff, support, support_gap
from wiretapbc.probcore import (CapExceededError, JointPmf, WiretapBc, binary_entropy,
                                binary_entropy_array,
                                conditional_mi, make_bec, make_bsc, make_constant,
                                make_deterministic, make_identity, random_channel, random_pmf,
                                simplex_grid)

BECBSC = becbsc.BecBscParams(0.2, 0.1, 0.25)


def _h(x):
    return binary_entropy(x)


def _conv(a, b):
    return a * (1 - b) + (1 - a) * b


def closed_form_support(lam, n=1_000_001):
    """Support of the BEC/BSC secrecy region on a dense x grid.

    The corner curve is steep near x = 0 (h2 has infinite slope there), so a
    coarse polygon of it understates the region by up to 1e-4 bits.
    """
    x = np.linspace(0.0, 0.5, n)
    h = binary_entropy_array
    f1 = 0.8 * h(x) + _h(0.25) - h(_conv(x, 0.25))
    f2 = h(_conv(x, 0.25)) - h(_conv(x, 0.1))
    if math.isinf(lam):
        return float(f2.max())
    return float(np.max(f1 + lam * f2))


def random_joint(rng, axes, sizes, alpha=1.0):
    n = int(np.prod(sizes))
    return JointPmf(axes, random_pmf(rng, n, alpha).reshape(sizes))


def cloud_joint(x):
    """Uniform binary cloud Q, X = Q xor Bern(x), U1 = X, U2 and T constant."""
    t = np.zeros((1, 2, 2, 1, 2))
    for q in range(2):
        for xx in range(2):
            t[0, q, xx, 0, xx] = 0.5 * ((1 - x) if xx == q else x)
    return JointPmf(R.INNER_AXES, t)


def with_constant(joint, names):
    t = joint.table
    for _ in names:
        t = t[..., None]
    return JointPmf(joint.axes + tuple(names), t)


class TestInner:
    def test_eavesdropper_equal_to_user1(self):
        rng = np.random.default_rng(1)
        w1 = random_channel(rng, 2, 2)
        ch = WiretapBc(w1, random_channel(rng, 2, 2), w1)
        for _ in range(20):
            b = R.inner_bounds(ch, random_joint(rng, R.INNER_AXES, (1, 2, 2, 2, 2)))
            assert b.r1 <= 1e-12
            if b.feasible:
                assert b.region().r1_max <= 1e-12

    def test_useless_eavesdropper_drops_secrecy_terms(self):
        rng = np.random.default_rng(2)
        ch = WiretapBc(make_bsc(0.1), make_bec(0.3), make_constant(2))
        t = np.zeros((1, 1, 2, 2, 2))
        px = random_pmf(rng, 2)
        for x in range(2):
            t[0, 0, x, x, x] = px[x]
        b = R.inner_bounds(ch, JointPmf(R.INNER_AXES, t))
        j = ch.attach_outputs(JointPmf(R.INNER_AXES, t))
        assert b.r1 == pytest.approx(conditional_mi(j, "X", "Y1"), abs=1e-12)
        assert b.r2 == pytest.approx(conditional_mi(j, "X", "Y2"), abs=1e-12)

    @pytest.mark.parametrize("x", [0.0, 0.05, 0.1, 0.2, 0.3, 0.5])
    def test_closed_form_reproduced(self, x):
        ch = BECBSC.channel()
        b = R.inner_bounds(ch, cloud_joint(x))
        f1 = 0.8 * _h(x) + _h(0.25) - _h(_conv(x, 0.25))
        f2 = _h(_conv(x, 0.25)) - _h(_conv(x, 0.1))
        assert b.r2 == pytest.approx(f2, abs=1e-9)
        assert b.sum == pytest.approx(f1 + f2, abs=1e-9)
        assert any(np.allclose(v, (f1, f2), atol=1e-9) for v in b.vertices())

    def test_side_condition_marks_infeasible(self):
        # U1 = U2 = X and a useless user 1 make mutual covering impossible
        ch = WiretapBc(make_constant(2), make_constant(2), make_constant(2))
        t = np.zeros((1, 1, 2, 2, 2))
        t[0, 0, 0, 0, 0] = t[0, 0, 1, 1, 1] = 0.5
        b = R.inner_bounds(ch, JointPmf(R.INNER_AXES, t))
        assert not b.feasible
        assert not R.eval_inner(ch, JointPmf(R.INNER_AXES, t)).feasible


class TestOuterCor:
    def test_constraints_match_term_oracle(self):
        rng = np.random.default_rng(3)
        ch = WiretapBc(random_channel(rng, 2, 2), random_channel(rng, 2, 2),
                       random_channel(rng, 2, 2))
        joint = random_joint(rng, R.OUTER_COR_AXES, (1, 2, 2, 2, 2, 2))
        j = ch.attach_outputs(joint)

        def I(a, b, c):
            return conditional_mi(j, a, b, c)

        c1 = I("U1", "Y1", ("T", "V1")) - I("U1", "Z", ("T", "V1"))
        c2 = I("U2", "Y2", ("T", "V2")) - I("U2", "Z", ("T", "V2"))
        c3 = (I("X", "Y2", ("T", "Z", "V1")) + I("U1", "Y1", ("T", "V1"))
              - I("U1", ("Z", "Y2"), ("T", "V1")))
        c4 = (I("X", "Y1", ("T", "Z", "V2")) + I("U2", "Y2", ("T", "V2"))
              - I("U2", ("Z", "Y1"), ("T", "V2")))
        b = R.outer_cor_bounds(ch, joint)
        assert b.r1 == pytest.approx(c1, abs=1e-12)
        assert b.r2 == pytest.approx(c2, abs=1e-12)
        assert b.sum == pytest.approx(min(c3, c4), abs=1e-12)

    def test_eavesdropper_equal_to_user1(self):
        rng = np.random.default_rng(4)
        w1 = random_channel(rng, 2, 3)
        ch = WiretapBc(w1, random_channel(rng, 2, 2), w1)
        for _ in range(10):
            joint = random_joint(rng, R.OUTER_COR_AXES, (1, 2, 2, 2, 2, 2))
            assert R.outer_cor_bounds(ch, joint).r1 <= 1e-12


class TestOuterThm1:
    def test_all_channels_equal_gives_origin(self):
        rng = np.random.default_rng(5)
        w = random_channel(rng, 2, 2)
        ch = WiretapBc(w, w, w)
        joint = random_joint(rng, R.OUTER_THM1_AXES, (1, 2, 2, 2, 2, 2, 2, 2))
        reg = R.eval_outer_thm1(ch, joint)
        assert reg.r1_max <= 1e-12 and reg.r2_max <= 1e-12

    def test_user_relabelling_symmetry(self):
        rng = np.random.default_rng(6)
        ch = WiretapBc(random_channel(rng, 2, 2), random_channel(rng, 2, 3),
                       random_channel(rng, 2, 2))
        joint = random_joint(rng, R.OUTER_THM1_AXES, (1, 2, 2, 2, 2, 2, 2, 2))
        swapped = JointPmf(("T", "V2", "V1", "U2", "U1", "S2", "S1", "X"), joint.table)
        a = R.outer_thm1_bounds(ch, joint)
        b = R.outer_thm1_bounds(ch.swap_users(), swapped)
        assert a.r1 == pytest.approx(b.r2, abs=1e-12)
        assert a.r2 == pytest.approx(b.r1, abs=1e-12)
        assert a.sum == pytest.approx(b.sum, abs=1e-12)

    @settings(max_examples=40, deadline=None)
    @given(st.integers(0, 2 ** 32 - 1))
    def test_contained_in_outer_cor_with_constant_s(self, seed):
        rng = np.random.default_rng(seed)
        ch = WiretapBc(random_channel(rng, 2, 2), random_channel(rng, 2, 2),
                       random_channel(rng, 2, 2))
        base = random_joint(rng, R.OUTER_COR_AXES, (1, 2, 2, 2, 2, 2), alpha=0.5)
        full = with_constant(base, ("S1", "S2")).marginal(R.OUTER_THM1_AXES)
        thm1 = R.eval_outer_thm1(ch, full)
        cor = R.eval_outer_cor(ch, base)
        assert support_gap(thm1, cor) <= 1e-9


class TestSearch:
    def test_budget_one_equals_single_evaluation(self):
        ch = BECBSC.channel()
        spec = R.inner_spec(2, {"Q": 1, "U1": 1, "U2": 1})
        reg = R.search_region(ch, spec, "inner", budget=1, seed=3, refine_iters=0)
        k = spec.sample(np.random.default_rng(np.random.SeedSequence((3, 0))))
        single = R.eval_inner(ch, spec.build(k))
        assert np.allclose(reg.hull, single.hull, atol=1e-15)

    def test_union_monotone_in_budget(self):
        rng = np.random.default_rng(7)
        ch = WiretapBc(random_channel(rng, 2, 2), random_channel(rng, 2, 2),
                       random_channel(rng, 2, 2))
        small = R.search_region(ch, bound="inner", budget=20, seed=1, refine_iters=10)
        large = R.search_region(ch, bound="inner", budget=60, seed=1, refine_iters=10)
        assert support_gap(small, large, SWEEP_LAMBDAS) <= 1e-12

    def test_deterministic_for_seed(self):
        ch = BECBSC.channel()
        a = R.search_region(ch, bound="outer_cor", budget=15, seed=9, refine_iters=5)
        b = R.search_region(ch, bound="outer_cor", budget=15, seed=9, refine_iters=5)
        assert np.array_equal(a.hull, b.hull)
        assert "from below" in a.meta["approximation"]

    def test_errors(self):
        ch = BECBSC.channel()
        with pytest.raises(ValueError):
            R.search_region(ch, bound="inner", budget=0)
        with pytest.raises(ValueError):
            R.search_region(ch, bound="nonsense")
        with pytest.raises(ValueError):
            R.search_region(ch, bound="inner", cards={"W": 2})
        with pytest.raises(CapExceededError):
            R.search_region(ch, bound="inner", cards={"Q": 10 ** 5})

    def test_inner_search_within_capacity_region(self):
        ch = BECBSC.channel()
        inner = R.search_region(ch, bound="inner", budget=60, seed=0, refine_iters=30,
                                cards={"Q": 2, "U1": 2, "U2": 1})
        for lam in SWEEP_LAMBDAS:
            assert support(inner, lam) <= closed_form_support(lam) + 1e-9

    def test_inner_search_reaches_closed_form(self):
        ch = BECBSC.channel()
        inner = R.search_region(ch, bound="inner", cards={"Q": 4, "U1": 2, "U2": 1})
        assert hausdorff(inner, becbsc.secrecy_region(BECBSC)) <= 0.02

    def test_trivial_user1_layers_carry_no_user1_rate(self):
        # with Q and U1 constant every user-1 bound is I(const; .) = 0
        ch = BECBSC.channel()
        inner = R.search_region(ch, bound="inner", budget=40, refine_iters=10,
                                cards={"T": 1, "Q": 1, "U1": 1, "U2": 4})
        assert inner.r1_max <= 1e-12


class TestDeterministic:
    def test_constant_eavesdropper_binary(self):
        ch = WiretapBc(make_identity(2), make_identity(2), make_constant(2))
        reg = R.capacity_deterministic(ch)
        assert support(reg, 1.0) == pytest.approx(1.0, abs=1e-12)

    def test_eavesdropper_sees_everything(self):
        ch = WiretapBc(make_identity(2), make_identity(2), make_identity(2))
        reg = R.capacity_deterministic(ch)
        assert reg.r1_max <= 1e-12 and reg.r2_max <= 1e-12

    def test_blackwell_matches_grid_oracle(self):
        y1 = make_deterministic([0, 1, 1])
        y2 = make_deterministic([0, 0, 1])
        ch = WiretapBc(y1, y2, make_constant(3))
        reg = R.capacity_deterministic(ch, grid=64)
        # oracle: direct entropy maximisation at resolution 1/256
        px = simplex_grid(3, 256)

        def hb(p):
            p = np.clip(p, 1e-300, 1)
            return -(p * np.log2(p)).sum(axis=-1)

        h1 = hb(np.stack([px[:, 0], px[:, 1] + px[:, 2]], 1))
        h2 = hb(np.stack([px[:, 0] + px[:, 1], px[:, 2]], 1))
        h12 = hb(px)
        for lam in SWEEP_LAMBDAS[1:-1]:
            # polygon {r1<=h1, r2<=h2, r1+r2<=h12}: corner support
            r2 = np.minimum(h2, h12)
            r1 = np.minimum(h1, h12 - r2)
            r1b = np.minimum(h1, h12)
            r2b = np.minimum(h2, h12 - r1b)
            oracle = max(np.max(r1 + lam * r2), np.max(r1b + lam * r2b))
            assert support(reg, lam) == pytest.approx(oracle, abs=2e-3)
            assert support(reg, lam) <= oracle + 1e-12

    def test_requires_deterministic_users(self):
        with pytest.raises(R.PremiseError):
            R.capacity_deterministic(BECBSC.channel())


class TestSemiDeterministic:
    def test_constant_eavesdropper(self):
        ch = WiretapBc(make_identity(2), make_bsc(0.2), make_constant(2))
        reg = R.capacity_semidet(ch, budget=60, refine_iters=40)
        assert reg.r1_max == pytest.approx(1.0, abs=1e-6)

    def test_eavesdropper_equal_to_user2(self):
        ch = WiretapBc(make_identity(2), make_bsc(0.2), make_bsc(0.2))
        reg = R.capacity_semidet(ch, budget=40, refine_iters=20)
        assert reg.r2_max <= 1e-12

    def test_within_deterministic_region(self):
        y1 = make_deterministic([0, 1, 1])
        y2 = make_deterministic([0, 0, 1])
        ch = WiretapBc(y1, y2, make_constant(3))
        semi = R.capacity_semidet(ch, budget=60, refine_iters=30)
        full = R.capacity_deterministic(ch, grid=128)
        assert support_gap(semi, full, SWEEP_LAMBDAS) <= 2e-3


class TestDegraded:
    def test_eavesdropper_equal_to_user1(self):
        w = make_bsc(0.1)
        ch = WiretapBc(w, make_bsc(0.2), w)
        reg = R.capacity_degraded(ch, budget=40, refine_iters=20, check_premises=False)
        assert reg.r1_max <= 1e-12

    def test_u_equal_x_puts_all_rate_on_user2(self):
        ch = WiretapBc(make_bsc(0.05), make_bsc(0.15), make_bsc(0.3))
        t = np.zeros((1, 2, 2))
        t[0, 0, 0] = t[0, 1, 1] = 0.5
        b = R.degraded_bounds(ch, JointPmf(("T", "U", "X"), t))
        assert b.r1 == pytest.approx(0.0, abs=1e-12)
        assert b.r2 == pytest.approx(_h(0.3) - _h(0.15), abs=1e-12)

    def test_bsc_cascade_matches_parametric_sweep(self):
        ch = WiretapBc(make_bsc(0.05), make_bsc(0.15), make_bsc(0.3))
        reg = R.capacity_degraded(ch)
        pts = []
        for x in np.linspace(0, 0.5, 2001):
            r1 = _h(_conv(x, 0.05)) - _h(0.05) - _h(_conv(x, 0.3)) + _h(0.3)
            r2 = _h(_conv(x, 0.3)) - _h(_conv(x, 0.15))
            pts.append((r1, r2))
        assert hausdorff(reg, RateRegion(pts)) <= 0.02

    def test_premises_checked(self):
        ch = WiretapBc(make_bsc(0.3), make_bsc(0.1), make_bsc(0.2))
        with pytest.raises(R.PremiseError) as exc:
            R.capacity_degraded(ch, budget=5)
        assert exc.value.failed


class TestLessNoisy:
    def test_parametric_matches_closed_form(self):
        ch = BECBSC.channel()
        xs = becbsc.x_grid(257)
        par = R.less_noisy_parametric(ch, xs)
        closed = becbsc.secrecy_region(BECBSC, 257)
        assert hausdorff(par, closed) <= 1e-6

    def test_collapse_when_eavesdropper_copies_both(self):
        w = make_bsc(0.1)
        ch = WiretapBc(w, w, w)
        reg = R.capacity_less_noisy(ch, budget=30, refine_iters=10)
        assert reg.r1_max <= 1e-12 and reg.r2_max <= 1e-12

    def test_time_sharing_absorbed(self):
        ch = BECBSC.channel()
        t1 = R.capacity_less_noisy(ch, budget=120, refine_iters=60, cards={"T": 1})
        t2 = R.capacity_less_noisy(ch, budget=120, refine_iters=60, cards={"T": 2})
        assert hausdorff(t1, t2) <= 0.02

    def test_refuses_when_premises_fail(self):
        ch = WiretapBc(make_bsc(0.3), make_bsc(0.1), make_bsc(0.2))
        with pytest.raises(R.PremiseError):
            R.capacity_less_noisy(ch, budget=5)


class TestProduct:
    def test_eavesdroppers_copy_strong_users(self):
        bc1 = WiretapBc(make_bsc(0.1), make_bsc(0.2), make_bsc(0.1))
        bc2 = WiretapBc(make_bsc(0.2), make_bsc(0.1), make_bsc(0.1))
        reg = R.capacity_product(bc1, bc2, budget=40, refine_iters=20, check_premises=False)
        assert reg.r1_max <= 1e-12 and reg.r2_max <= 1e-12

    def test_trivial_second_component(self):
        bc1 = WiretapBc(make_bec(0.2), make_bsc(0.1), make_bsc(0.25))
        one = WiretapBc(make_constant(1), make_constant(1), make_constant(1))
        prod = R.capacity_product(bc1, one, budget=150, refine_iters=80)
        single = R.capacity_less_noisy(bc1, budget=150, refine_iters=80)
        assert hausdorff(prod, single) <= 0.02

    def test_correlated_joint_rejected(self):
        bc = WiretapBc(make_bsc(0.1), make_bsc(0.2), make_bsc(0.3))
        t = np.zeros((2, 2, 2, 2))
        t[0, 0, 0, 0] = t[1, 1, 1, 1] = 0.5
        with pytest.raises(R.FactorizationError):
            R.product_bounds(bc, bc, JointPmf(("U1", "X1", "U2", "X2"), t))


class TestContainment:
    def test_eval_inner_within_capacity(self):
        ch = BECBSC.channel()
        bound = {lam: closed_form_support(lam) for lam in SWEEP_LAMBDAS}
        rng = np.random.default_rng(10)
        for _ in range(30):
            reg = R.eval_inner(ch, random_joint(rng, R.INNER_AXES, (1, 2, 2, 2, 2)))
            if reg.feasible:
                for lam in SWEEP_LAMBDAS:
                    assert support(reg, lam) <= bound[lam] + 1e-9
