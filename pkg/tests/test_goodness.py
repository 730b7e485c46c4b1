from __future__ import annotations

import math
from fractions import Fraction as F

import numpy as np
import pytest

from forge.costs import ConcaveAnalytic, ConcavePiecewiseLinear, Constant, FairShare, Monomial
from forge.goodness import (
    GoodnessError,
    GoodnessParams,
    WeightDomain,
    check_goodness,
    concave_goodness,
    constant_goodness,
    fairshare_goodness,
    fairshare_ratio,
    fit_goodness,
    monomial_goodness,
    scan_xi,
)

DOM = WeightDomain(1, 10, 200)


def params_tuple(p):
    return (p.alpha1, p.alpha2, p.beta1, p.beta2, p.xi)


class TestClosedForms:
    def test_monomial(self):
        assert params_tuple(monomial_goodness(2, F(1, 2))) == (F(1, 2), 1, F(1, 3), F(1, 2), F(1, 6))
        assert params_tuple(monomial_goodness(1, F(1, 2))) == (F(1, 2), 1, F(1, 2), F(1, 2), 0)
        assert params_tuple(monomial_goodness(3, F(1, 4))) == (F(1, 4), 1, F(1, 4), F(1, 4), 0)

    def test_monomial_range(self):
        with pytest.raises(GoodnessError):
            monomial_goodness(2, F(2, 3))

    def test_constant(self):
        assert params_tuple(constant_goodness()) == (1, 1, 1, 1, 0)

    def test_concave(self):
        assert params_tuple(concave_goodness(F(1, 2)))[:4] == (F(1, 2), 1, F(1, 2), 1)
        assert params_tuple(concave_goodness(1)) == (1, F(3, 2), F(1, 2), F(3, 2), F(1, 2))
        with pytest.raises(GoodnessError):
            concave_goodness(F(1, 4))

    def test_fairshare(self):
        assert math.isclose(fairshare_goodness(1, 1, 2).alpha2, 2 * math.log(2), rel_tol=1e-12)
        assert math.isclose(fairshare_goodness(1, 10, 50).alpha2, math.log(10) + 1, rel_tol=1e-12)
        assert math.isclose(fairshare_goodness(1, 10, 50).beta2, math.log(50) + 1, rel_tol=1e-12)
        with pytest.raises(GoodnessError):
            fairshare_goodness(1, F(1, 2), 3)

    def test_fairshare_ratio(self):
        assert fairshare_ratio(1, 0) == 1
        assert math.isclose(fairshare_ratio(1, 1), 2 * math.log(2), rel_tol=1e-14)
        assert math.isclose(fairshare_ratio(2, 1), 1.5 * math.log(3), rel_tol=1e-14)
        # the ratio is the average over [x, x+w] divided by c(x+w)
        c = FairShare(1, 1)
        for w, x in [(1, 1), (2, 3), (5, 1), (7, 0)]:
            avg = float(c.integrate(x, x + w)) / w
            assert math.isclose(fairshare_ratio(w, x), avg / float(c(x + w)), rel_tol=1e-12)


class TestCheck:
    def test_monomial_lemma(self):
        rep = check_goodness(Monomial(2), monomial_goodness(2, F(1, 2)), DOM, 128)
        assert rep.satisfied

    def test_constant_zero_slack(self):
        rep = check_goodness(Constant(7), constant_goodness(), DOM, 64)
        assert rep.satisfied and abs(rep.worst_violation) < 1e-12

    @pytest.mark.parametrize("value", [0, 10**6])
    def test_constant_extremes(self, value):
        assert check_goodness(Constant(value), constant_goodness(), DOM, 64).satisfied

    def test_violation_witness(self):
        bad = GoodnessParams(0.9, 1, F(1, 3), F(1, 3))
        rep = check_goodness(Monomial(2), bad, DOM, 128)
        assert not rep.satisfied and rep.condition == "good_1 lower"
        x, w = rep.witness
        c = Monomial(2)
        assert float(c.integrate(x, x + w)) / w / float(c(x + w)) < 0.9

    def test_concave_lemma(self):
        for mu in (F(1, 2), F(3, 4), 1):
            for cost in (ConcaveAnalytic("sqrt", 3), ConcaveAnalytic("log1p", 2, 1),
                         ConcavePiecewiseLinear(((0, 1), (2, 5), (4, 6)))):
                assert check_goodness(cost, concave_goodness(mu), DOM, 96).satisfied

    @pytest.mark.parametrize("seed", range(5))
    def test_lemmas_on_random_domains(self, seed):
        rng = np.random.default_rng(seed)
        w_min = 1.0
        w_max = float(rng.uniform(1, 6))
        W = float(w_max * rng.uniform(1, 20))
        dom = WeightDomain(w_min, w_max, W)
        for d in range(1, 4):
            for mu in (F(1, d + 1), F(1, d)):
                assert check_goodness(Monomial(d), monomial_goodness(d, mu), dom, 96).satisfied
        fs = fairshare_goodness(1, w_max, W)
        assert check_goodness(FairShare(1, 1), fs, dom, 96).satisfied
        assert check_goodness(ConcaveAnalytic("sqrt"), concave_goodness(F(3, 4)), dom, 96).satisfied

    def test_scale_invariance(self):
        bad = GoodnessParams(0.9, 1, F(1, 3), F(1, 3))
        base = check_goodness(Monomial(2), bad, DOM, 64)
        for k in (F(1, 4), 2, 8):
            rep = check_goodness(Monomial(2, k), bad, DOM, 64)
            assert rep.satisfied == base.satisfied
            assert rep.witness == base.witness and rep.condition == base.condition

    def test_shortcut_applies_only_to_nondecreasing(self):
        rep = check_goodness(FairShare(1, 1), fairshare_goodness(1, 3, 20), WeightDomain(1, 3, 20), 64, True)
        assert rep.grid["second_condition"].startswith("full") and rep.satisfied


class TestFit:
    @pytest.mark.parametrize("d", [1, 2, 3])
    def test_monomial_xi_zero(self, d):
        p = fit_goodness(Monomial(d), 0, WeightDomain(1, 10, 1e7), 256)
        assert abs(p.alpha1 - 1 / (d + 1)) < 1e-6
        assert abs(p.beta1 - 1 / (d + 1)) < 1e-6 and abs(p.beta2 - 1 / (d + 1)) < 1e-6
        assert p.alpha2 <= 1 + 1e-9

    def test_affine_exact_potential(self):
        # the lower level ratio is 1/2 + 1/(2W), so the domain must be wide
        p = fit_goodness(Monomial(1), F(1, 2), WeightDomain(1, 10, 1e7), 128)
        for got, want in zip(params_tuple(p)[:4], (1, 1, 0.5, 1)):
            assert abs(got - want) < 1e-6

    def test_sqrt_unit_weights(self):
        p = fit_goodness(ConcaveAnalytic("sqrt"), 0, WeightDomain(1, 1, 50), 256)
        assert p.alpha1 >= 0.5 - 1e-9 and p.alpha2 <= 1 + 1e-9 and p.beta1 >= 0.5 - 1e-9

    def test_fit_within_lemma(self):
        for d in (1, 2, 3):
            lemma = monomial_goodness(d, F(1, d))
            p = fit_goodness(Monomial(d), lemma.xi, DOM, 128)
            assert p.alpha1 >= lemma.alpha1 - 1e-9 and p.alpha2 <= lemma.alpha2 + 1e-9

    def test_zero_cost(self):
        with pytest.raises(GoodnessError):
            fit_goodness(Constant(0), 0, DOM, 16)


class TestScan:
    def test_monomial(self):
        xi, p = scan_xi(Monomial(2), WeightDomain(1, 10, 1e6), [0, F(1, 12), F(1, 6)], "alpha", 256)
        assert xi == F(1, 6)
        assert abs(p.alpha2 / p.alpha1 - 2) < 1e-5

    def test_constant(self):
        xi, p = scan_xi(Constant(3), DOM, [0, F(1, 4), F(1, 2)], "alpha", 32)
        assert xi == 0

    def test_fairshare(self):
        xi, _ = scan_xi(FairShare(1, 1), WeightDomain(1, 3, 30), [0, F(1, 4), F(1, 2)], "alpha", 64)
        assert xi == 0

    def test_empty_grid(self):
        with pytest.raises(GoodnessError):
            scan_xi(Monomial(1), DOM, [])


class TestMonotonicityOfR:
    def test_grid(self):
        g = np.linspace(1, 100, 60)
        R = np.array([[fairshare_ratio(w, x) for x in g] for w in g])
        assert np.all(np.diff(R, axis=0) >= -1e-15)
        assert np.all(np.diff(R, axis=1) <= 1e-15)
