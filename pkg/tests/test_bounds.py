import math

import mpmath as mp
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from lscdsim import bounds as B
from lscdsim.estimators import default_w_grid
from lscdsim.models import GaussianPair, LlrAnalytics


def _mp_arl(x_l, x_lp, w_l, w_lp, n, tau):
    """High-precision oracle for the ARL bound shape in terms of the per-cycle survival x."""
    s = lambda x: (1 - x**n) / (1 - x)
    num = w_l * s(x_l) + w_lp * s(x_lp) * x_l**n + tau * x_l**n * (1 + x_lp**n)
    return num / (1 - x_l**n * x_lp**n)


def mp_lower(gl, glp, n, tau):
    mp.mp.dps = 60
    return _mp_arl(1 - mp.exp(-gl), 1 - mp.exp(-glp), 1, 1, n, tau)


def mp_upper(gl, glp, n, tau, al, alp):
    mp.mp.dps = 60
    v = lambda a, g: 1 - mp.mpf(a.k) * mp.exp(-g)
    return _mp_arl(v(al, gl), v(alp, glp), 1 + mp.mpf(al.c), 1 + mp.mpf(alp.c), n, tau)


@pytest.fixture(scope="module")
def an(gauss):
    return gauss.analytics()


class TestArlBounds:
    def test_symmetric_collapse(self):
        assert B.arl_lower_bound(5.0, 5.0, 1, 0) == pytest.approx(math.exp(5), rel=1e-13)

    @pytest.mark.parametrize("n", [1, 2, 3, 7])
    @pytest.mark.parametrize("gamma", [0.5, 3.0, 8.0])
    def test_symmetric_no_travel_equals_exp_gamma(self, n, gamma):
        assert B.arl_lower_bound(gamma, gamma, n, 0) == pytest.approx(math.exp(gamma), rel=1e-12)

    @pytest.mark.parametrize("tau,n", [(0, 1), (3, 3), (3, 5)])
    def test_asymptotic_constants(self, an, tau, n):
        lo, hi = B.corollary_constants(n, tau, an)
        assert abs(B.arl_lower_bound(30.0, 30.0, n, tau) / math.exp(30) - lo) < 1e-6
        assert abs(B.arl_upper_bound(40.0, 40.0, n, tau, an, an) / math.exp(40) - hi) < 1e-6

    def test_single_site_reduction_upper(self, an):
        assert B.arl_upper_bound(5.0, 5.0, 1, 0, an, an) == pytest.approx((1 + an.c) / an.k * math.exp(5), rel=1e-12)

    @settings(max_examples=60, deadline=None)
    @given(st.floats(0.2, 40), st.floats(0.2, 40), st.integers(1, 8), st.integers(0, 10))
    def test_match_high_precision_oracle(self, gl, glp, n, tau):
        a = GaussianPair(0.0, 2.0, 1.0).analytics()
        assert B.arl_lower_bound(gl, glp, n, tau) == pytest.approx(float(mp_lower(gl, glp, n, tau)), rel=1e-10)
        assert B.arl_upper_bound(gl, glp, n, tau, a, a) == pytest.approx(float(mp_upper(gl, glp, n, tau, a, a)), rel=1e-10)

    @pytest.mark.parametrize("gl", [2.0, 3.0, 5.0, 8.0])
    @pytest.mark.parametrize("glp", [2.0, 5.0, 8.0])
    @pytest.mark.parametrize("n,tau", [(1, 0), (1, 3), (3, 3), (5, 3)])
    def test_ordering(self, an, gl, glp, n, tau):
        assert B.arl_lower_bound(gl, glp, n, tau) <= B.arl_upper_bound(gl, glp, n, tau, an, an)

    def test_invalid_inputs(self, an):
        with pytest.raises(ValueError):
            B.arl_lower_bound(0.0, 1.0, 1, 0)
        with pytest.raises(ValueError):
            B.arl_lower_bound(1.0, 1.0, 0, 0)
        bad = LlrAnalytics(1.0, 1.0, 0.5, 0.1, 1.0, 1.5, 0.1)
        with pytest.raises(ValueError):
            B.arl_upper_bound(1.0, 1.0, 1, 0, bad, an)

    def test_pure(self, an):
        assert B.arl_upper_bound(4.2, 3.1, 3, 3, an, an) == B.arl_upper_bound(4.2, 3.1, 3, 3, an, an)


class TestWaddBound:
    def test_classical_reduction(self, an):
        b = B.wadd_upper_bound(4.0, 0.0, 1, 0, an, an)
        c_lp = an.z_plus_mean / an.d_f_g
        assert b.branch == "c2"
        assert b.c2 == pytest.approx((1 + c_lp) / an.q)
        assert b.value == pytest.approx(4.0 / an.d_g_f + b.c2)

    def test_constants_by_hand(self, an):
        n, tau, w = 3, 3, 1.7
        b = B.wadd_upper_bound(4.0, 4.0, n, tau, an, an, w_star=w)
        qb = (1 - an.q) ** n
        c = an.z_plus_mean / an.d_f_g
        c1 = tau * (1 + qb) / (1 - qb) + (1 + c) * (n * qb / (1 - qb) + (n - 1) * (1 + math.exp(-w) - 0.5 * math.exp(-an.d_f_g)))
        c2 = (2 * tau + n + n * c) / (1 - qb)
        assert b.c1 == pytest.approx(c1, rel=1e-14)
        assert b.c2 == pytest.approx(c2, rel=1e-14)
        assert b.c_prime == max(b.c1 + 4.0 / an.d_f_g, b.c2)

    def test_non_interior_maximizer_uses_c2(self, an):
        b = B.wadd_upper_bound(4.0, 4.0, 3, 3, an, an, w_star=4.0)
        assert b.branch == "c2" and b.c_prime == b.c2
        b = B.wadd_upper_bound(4.0, 4.0, 3, 3, an, an, w_star_interior=False)
        assert b.c_prime == b.c2

    @given(st.floats(0.01, 3.99))
    def test_trivial_exponential_dominates(self, w):
        a = GaussianPair(0.0, 2.0, 1.0).analytics()
        assert B.wadd_upper_bound(4.0, 4.0, 3, 3, a, a).value >= B.wadd_upper_bound(4.0, 4.0, 3, 3, a, a, w_star=w).value

    def test_slope_in_own_threshold(self, an):
        vals = [B.wadd_upper_bound(g, 4.0, 3, 3, an, an).value for g in (2.0, 3.0, 4.0, 5.0)]
        diffs = [b - a for a, b in zip(vals, vals[1:])]
        assert diffs == pytest.approx([1 / an.d_g_f] * 3, rel=1e-12)

    def test_degenerate_q(self):
        a = LlrAnalytics(1.0, 1.0, 0.0 + 1e-300, 0.1, 1.0, 0.5, 0.1)
        with pytest.raises(ValueError):
            B.wadd_upper_bound(1.0, 1.0, 1, 0, a, a)


class TestPointwiseBounds:
    def test_reference_values(self, an):
        lb = B.pointwise_lemma_bounds(an, 4.0, [2.0])
        assert lb.lemma2_beta == pytest.approx(0.15866, abs=1e-5)
        assert lb.lemma3_psi_w[2.0] == pytest.approx(-math.exp(-2) / 2, abs=1e-12)
        assert lb.lemma4_e0T == pytest.approx(1.6827, abs=1e-4)
        assert lb.lemma1_T_w[2.0] == pytest.approx(1.0)
        assert lb.lemma1_T == pytest.approx(1 + an.z_plus_mean / 2)


class TestReport:
    def test_report_fields(self, an):
        r = B.bounds_report("A", 5.0, 5.0, 3, 3, an, an, default_w_grid(5.0))
        assert r.arl_lower <= r.arl_upper
        assert r.flags and len(r.flags) == len(B.FLAGS)
        assert r.c_prime == max(r.c1 + 5.0 / an.d_f_g, r.c2)
        d = r.to_dict()
        assert set(d["lemma3_psi_w"]) == {f"{w:.17g}" for w in default_w_grid(5.0)}
        assert dict(r.scalar_items())["arl_lower"] == r.arl_lower

    def test_symmetric_report_value(self, an):
        r = B.bounds_report("A", 5.0, 5.0, 1, 0, an, an, default_w_grid(5.0))
        assert r.arl_lower == pytest.approx(148.413159, abs=1e-6)
