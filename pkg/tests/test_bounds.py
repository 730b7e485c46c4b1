from __future__ import annotations

import math
import warnings
from fractions import Fraction as F

import numpy as np
import pytest

from forge.bounds import (
    BoundsError,
    chen_roughgarden_reference,
    chen_roughgarden_threshold,
    compose,
    concave_curve,
    concave_mu,
    concave_params,
    curve,
    fairshare_curve,
    fairshare_params,
    gadget_decompose,
    mixed_curve,
    mixed_params,
    poly_curve,
    poly_params,
)
from forge.costs import ConcaveAnalytic, Conical, Monomial, Polynomial
from forge.experiments import Caps, draw_spec, generate_instance
from forge.game import make_game, player_cost, social_cost
from forge.goodness import concave_goodness, constant_goodness, monomial_goodness


class TestCompose:
    def test_polynomial(self):
        params = [constant_goodness(), monomial_goodness(1, F(1, 2)), monomial_goodness(2, F(1, 2))]
        assert compose(params) == (2, F(3, 2))

    def test_concave(self):
        assert compose([concave_goodness(1)]) == (F(3, 2), 3)

    def test_identity(self):
        assert compose([constant_goodness()]) == (1, 1)

    def test_empty(self):
        with pytest.raises(BoundsError):
            compose([])


class TestCurves:
    def test_poly(self):
        assert poly_curve(3, 3) == (3, F(4, 3))
        assert poly_curve(3, 4) == (4, 1)
        assert poly_curve(2, F(5, 2)) == (F(5, 2), F(6, 5))
        with pytest.raises(BoundsError):
            poly_curve(2, 4)

    def test_concave(self):
        assert concave_curve(F(3, 2)) == (F(3, 2), 3)
        assert concave_curve(2) == (2, 2)
        assert concave_curve(F(7, 4)) == (F(7, 4), F(7, 3))

    def test_mixed(self):
        assert mixed_curve(2, 2) == (2, F(5, 2))
        assert mixed_curve(2, 3) == (3, 2)
        assert mixed_curve(4, F(9, 2)) == (F(9, 2), 1 + F(10, 9))

    def test_mixed_affine_redirects(self):
        with warnings.catch_warnings(record=True) as caught:
            warnings.simplefilter("always")
            assert mixed_curve(1, 2) == concave_curve(2)
        assert caught

    def test_fairshare(self):
        a, b = fairshare_curve(1, 1, math.e)
        assert math.isclose(a, 2 * math.log(2)) and math.isclose(b, 2)
        W = 37.0
        assert math.isclose(fairshare_curve(math.log(W), 2, W)[1], 2)
        a, b = fairshare_curve(1, 10, 50)
        assert round(a, 3) == 3.303 and round(b, 3) == 4.912

    def test_chen_roughgarden(self):
        assert round(chen_roughgarden_threshold(10), 3) == 4.902
        f = 2 * chen_roughgarden_threshold(10)
        assert round(chen_roughgarden_reference(10, 50, f)[1], 3) == 2.157
        with pytest.raises(BoundsError):
            chen_roughgarden_reference(10, 50, 3)

    def test_dominance(self):
        for w in np.linspace(1, 100, 400):
            assert fairshare_curve(1, w, w)[0] <= chen_roughgarden_threshold(w)

    @pytest.mark.parametrize("d", [1, 2, 3, 4])
    def test_poly_consistency(self, d):
        for lam in (d, d + F(1, 3), d + F(1, 2), d + 1):
            assert compose(poly_params(d, lam)) == poly_curve(d, lam)

    def test_concave_consistency(self):
        for lam in (F(3, 2), F(7, 4), 2):
            assert compose(concave_params(lam)) == concave_curve(lam)
            assert concave_mu(lam) == 1 / (2 * (lam - 1))

    @pytest.mark.parametrize("d", [2, 3])
    def test_mixed_consistency(self, d):
        for lam in (d, d + F(1, 2), d + 1):
            assert compose(mixed_params(d, lam)) == mixed_curve(d, lam)

    def test_fairshare_consistency(self):
        a, b = compose(fairshare_params(2, 3, 40))
        assert math.isclose(a, fairshare_curve(2, 3, 40)[0], rel_tol=1e-12)
        assert math.isclose(b, fairshare_curve(2, 3, 40)[1], rel_tol=1e-12)

    @pytest.mark.parametrize(
        "c",
        [curve("poly", d=2), curve("concave"), curve("mixed", d=3), curve("fairshare", w_max=3, W=50)],
        ids=lambda c: c.family,
    )
    def test_monotone(self, c):
        pts = np.array(c.sample(101))
        assert np.all(np.diff(pts[:, 1]) >= -1e-12)
        assert np.all(np.diff(pts[:, 2]) <= 1e-12)

    def test_unknown_family(self):
        with pytest.raises(BoundsError):
            curve("linear")


def all_costs(game, profiles):
    return [(tuple(player_cost(game, p, i) for i in range(game.n)), social_cost(game, p)) for p in profiles]


class TestGadget:
    def test_polynomial_split(self):
        g = make_game([1, 2], {"e": Polynomial((0, 2, 3)), "f": Monomial(1)}, [[["e"], ["f"]], [["e"]]])
        d = gadget_decompose(g)
        assert {r.id for r in d.resources} == {"e#0", "e#1", "f"}
        assert d.resources[0].cost == Monomial(1, 2) and d.resources[1].cost == Monomial(2, 3)
        assert all_costs(g, g.profiles()) == all_costs(d, g.profiles())

    def test_unchanged(self):
        g = make_game([1, 2], {"e": Monomial(2), "f": ConcaveAnalytic("sqrt")}, [[["e"], ["f"]], [["e", "f"]]])
        assert gadget_decompose(g) == g

    def test_mixed_resource(self):
        c = Conical(((1, ConcaveAnalytic("sqrt")), (1, Monomial(2))))
        g = make_game([1, 3], {"e": c, "f": Monomial(1)}, [[["e"], ["f"]], [["e"], ["f"]]])
        d = gadget_decompose(g)
        assert len(d.resources) == 3
        for p in g.profiles():
            assert math.isclose(float(social_cost(g, p)), float(social_cost(d, p)), rel_tol=1e-12)

    @pytest.mark.parametrize("seed", range(10))
    def test_random_mixed(self, seed):
        g = generate_instance(draw_spec("mixed", 2, seed, 3, Caps(), "rational"))
        d = gadget_decompose(g)
        for p in g.profiles():
            for i in range(g.n):
                assert math.isclose(float(player_cost(g, p, i)), float(player_cost(d, p, i)), rel_tol=1e-12)
