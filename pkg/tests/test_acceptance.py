"""Acceptance gate: one test per criterion, each reporting a PASS/FAIL line."""

from __future__ import annotations

import itertools
import math
import time
from fractions import Fraction as F

import numpy as np
import pytest

from forge.bounds import (
    chen_roughgarden_threshold,
    fairshare_curve,
    gadget_decompose,
)
from forge.costs import Constant, FairShare, Monomial, range_extrema
from forge.experiments import Caps, draw_spec, generate_instance, run_suite
from forge.game import leq, make_game, player_cost, social_cost
from forge.goodness import GoodnessParams, WeightDomain, fairshare_ratio, fit_goodness, monomial_goodness
from forge.potential import PotentialConfig, catalog_setup, potential, verify_lemma1_conditions

COUNT = 100
FLOAT_TOL = 1e-9


def _check_rows(rows, expected_rows):
    assert len(rows) == expected_rows
    errors = [r.note for r in rows if r.note.startswith("error")]
    failures = [r for r in rows if not r.passed]
    assert not errors, errors[:3]
    assert not failures, failures[:3]
    for r in rows:
        assert r.certified_alpha <= r.claimed_alpha + FLOAT_TOL * max(1.0, r.claimed_alpha)
        assert r.certified_beta <= r.claimed_beta + FLOAT_TOL * max(1.0, r.claimed_beta)


def test_c1_polynomial_suite(criterion):
    """1 polynomial suite (lambda, (d+1)/lambda)"""
    t0 = time.perf_counter()
    total = 0
    for d in (1, 2, 3):
        grid = [F(d), F(2 * d + 1, 2), F(d + 1)]
        rows = run_suite("poly", grid, COUNT, d=d, seed=2024, mode="rational")
        _check_rows(rows, 3 * COUNT)
        for r in rows:
            assert r.claimed_alpha == r.lam and math.isclose(r.claimed_beta, (d + 1) / r.lam, rel_tol=1e-15)
        total += len(rows)
    elapsed = time.perf_counter() - t0
    criterion("1 polynomial suite (lambda, (d+1)/lambda)", f"{total} rows, 0 violations, {elapsed:.1f}s")
    assert elapsed < 60


def test_c2_concave_suite(criterion):
    """2 concave suite (lambda, lambda/(lambda-1))"""
    rows = run_suite("concave", [F(3, 2), F(7, 4), F(2)], COUNT, seed=2024)
    _check_rows(rows, 3 * COUNT)
    for r in rows:
        assert math.isclose(r.claimed_beta, r.lam / (r.lam - 1), rel_tol=1e-15)
    criterion("2 concave suite (lambda, lambda/(lambda-1))", f"{len(rows)} rows, 0 violations")


def test_c3_mixed_suite(criterion):
    """3 mixed suite d=2 (lambda, 1+3/lambda)"""
    rows = run_suite("mixed", [F(2), F(5, 2), F(3)], COUNT, d=2, seed=2024)
    _check_rows(rows, 3 * COUNT)
    for r in rows:
        assert math.isclose(r.claimed_beta, 1 + 3 / r.lam, rel_tol=1e-15)
    criterion("3 mixed suite d=2 (lambda, 1+3/lambda)", f"{len(rows)} rows, 0 violations")


def test_c4_fairshare_suite(criterion):
    """4 fair-share suite (fair-share curve values, w_max<=5)"""
    seed = 2024
    rows = run_suite("fairshare", "1,2,lnW", COUNT, d=1, seed=seed)
    _check_rows(rows, 3 * COUNT)
    caps = Caps()
    for r in rows:
        g = generate_instance(draw_spec("fairshare", 1, seed, r.instance_id, caps, "rational"))
        wm, W = float(g.w_max), float(g.total_weight)
        assert g.w_min == 1 and wm <= 5
        alpha = max((1 + 1 / wm) * math.log(1 + wm), math.log(wm) + r.lam)
        assert math.isclose(r.claimed_alpha, alpha, rel_tol=1e-12)
        assert math.isclose(r.claimed_beta, 1 + math.log(W) / r.lam, rel_tol=1e-12)
    criterion("4 fair-share suite (fair-share curve values, w_max<=5)", f"{len(rows)} rows, 0 violations")


def test_c5_goodness_closed_forms(criterion):
    """5 goodness fits reproduce closed forms"""
    dom = WeightDomain(1, 10, 1e9)
    worst = 0.0
    for d in range(1, 5):
        for mu in (F(1, d + 1), (F(1, d + 1) + F(1, d)) / 2, F(1, d)):
            closed = monomial_goodness(d, mu)
            fit = fit_goodness(Monomial(d), closed.xi, dom, 512)
            for got, want in zip(fit.as_tuple(), closed.as_tuple()):
                worst = max(worst, abs(float(got) - float(want)))
    assert worst <= 1e-6
    const = fit_goodness(Constant(3), 0, dom, 512)
    assert const.as_tuple() == (1, 1, 1, 1)
    fs = fit_goodness(FairShare(1, 1), 0, WeightDomain(1, 1, 50), 512)
    assert abs(fs.alpha2 - 1.386) <= 1e-3
    criterion("5 goodness fits reproduce closed forms",
              f"monomial max dev {worst:.1e}, constant exact, fair-share alpha2 {fs.alpha2:.4f}")


def test_c6_potential_conditions(criterion):
    """6 potential-method conditions on 4x50 games"""
    caps = Caps(n_max=6, profiles_max=4096)
    checked = 0
    setups = [("poly", 2, F(5, 2)), ("concave", 1, F(7, 4)), ("mixed", 2, F(5, 2)), ("fairshare", 1, 2)]
    for family, d, lam in setups:
        for k in range(50):
            game = generate_instance(draw_spec(family, d, 77, k, caps, "rational"))
            assert game.n <= 6
            g2, cfg = catalog_setup(game, lam, family, d)
            rep = verify_lemma1_conditions(g2, cfg, tol=FLOAT_TOL)
            assert rep.satisfied, (family, k, rep.witness)
            checked += rep.tuples_checked
    g = make_game([1, F(3, 2), 2, F(5, 2), 3], {"e": Monomial(1, F(7, 3))}, [[["e"]]] * 5)
    rep = verify_lemma1_conditions(g, PotentialConfig({"e": GoodnessParams(1, 1, F(1, 2), 1, xi=F(1, 2))}))
    lo, hi = rep.ratio_ranges["e:marginal"]
    assert abs(lo - 1) <= 1e-12 and abs(hi - 1) <= 1e-12
    gf = make_game([1.0, 1.5, 2.0, 2.5, 3.0], {"e": Monomial(1, 2.5)}, [[["e"]]] * 5)
    rep = verify_lemma1_conditions(gf, PotentialConfig({"e": GoodnessParams(1, 1, 0.5, 1, xi=0.5)}))
    lo, hi = rep.ratio_ranges["e:marginal"]
    assert abs(lo - 1) <= 1e-12 and abs(hi - 1) <= 1e-12
    criterion("6 potential-method conditions on 4x50 games", f"{checked} tuples, affine ratio == 1")


def test_c7_fairshare_ratio_monotonicity(criterion):
    """7 R(w,x) monotone on 200x200 grid, endpoints exact"""
    grid = np.linspace(1, 100, 200)
    R = np.array([[fairshare_ratio(w, x) for x in grid] for w in grid])
    up = int(np.sum(np.diff(R, axis=0) < 0))
    down = int(np.sum(np.diff(R, axis=1) > 0))
    assert up == 0 and down == 0
    for lam in (1, 1.5, 2, math.log(50)):
        assert fairshare_ratio(1, 0, lam) == lam
    for wm in (1, 2, 5, 10, 37.5):
        assert fairshare_ratio(wm, 1) == (1 + 1 / wm) * math.log1p(wm)
    criterion("7 R(w,x) monotone on 200x200 grid, endpoints exact", f"{up + down} violations")


def test_c8_prior_work_dominance(criterion):
    """8 dominance over the earlier fair-share bound"""
    ws = np.linspace(1, 100, 1000)
    margin = min(chen_roughgarden_threshold(w) - fairshare_curve(1, w, w)[0] for w in ws)
    assert margin >= 0
    ours = fairshare_curve(1, 10, 50)[0]
    theirs = chen_roughgarden_threshold(10)
    assert round(ours, 3) == 3.303 and round(theirs, 3) == 4.902
    criterion("8 dominance over the earlier fair-share bound",
              f"min margin {margin:.3f}; w_max=10: {ours:.3f} vs {theirs:.3f}")


def _profiles(game):
    return list(game.profiles())


def test_c9_structural_properties(criterion):
    """9 structural properties"""
    caps = Caps(n_max=4, profiles_max=256)
    counts = {"identity": 0, "gadget": 0, "sandwich": 0, "deviation": 0, "global": 0}

    # social cost: sum of w_i C_i equals sum of x_e c_e(x_e)
    for family, d in (("poly", 3), ("concave", 1), ("mixed", 2), ("fairshare", 1)):
        for k in range(10):
            g = generate_instance(draw_spec(family, d, 5, k, caps, "rational"))
            ev = g.engine
            for p in _profiles(g):
                masks = ev.masks(p.choice)
                by_res = sum(ev.load_of(m) * ev.cost_at(r, m) for r, m in enumerate(masks))
                by_pl = sum(pl.weight * player_cost(g, p, i) for i, pl in enumerate(g.players))
                assert math.isclose(float(by_res), float(by_pl), rel_tol=1e-12, abs_tol=1e-12)
                counts["identity"] += 1

    # gadget decomposition preserves every player cost on every profile
    for k in range(50):
        g = generate_instance(draw_spec("mixed", 2, 6, k, Caps(), "rational"))
        dg = gadget_decompose(g)
        for p in _profiles(g):
            for i in range(g.n):
                a, b = player_cost(g, p, i), player_cost(dg, p, i)
                assert math.isclose(float(a), float(b), rel_tol=1e-12, abs_tol=1e-12)
            counts["gadget"] += 1

    # weighted-average sandwich over all nonempty player subsets
    for family, d in (("poly", 2), ("concave", 1), ("fairshare", 1)):
        for k in range(10):
            g = generate_instance(draw_spec(family, d, 8, k, caps, "rational"))
            ws = g.weights
            for r in g.resources:
                c = r.cost
                for size in range(1, g.n + 1):
                    for sub in itertools.combinations(ws, size):
                        wI = sum(sub)
                        avg = sum(w * c(w) for w in sub) / wI
                        lo, hi = range_extrema(c, g.w_min, wI)
                        assert leq(lo, avg, FLOAT_TOL) and leq(avg, hi, FLOAT_TOL)
                        counts["sandwich"] += 1

    # potential implications on all profile pairs
    setups = [("poly", 2, F(5, 2)), ("concave", 1, F(7, 4)), ("mixed", 2, F(2)), ("fairshare", 1, 1)]
    for family, d, lam in setups:
        for k in range(8):
            g = generate_instance(draw_spec(family, d, 9, k, caps, "rational"))
            assert g.profile_count <= 256
            g2, cfg = catalog_setup(g, lam, family, d)
            alpha, beta = cfg.bound()
            ps = _profiles(g)
            phi = {p: potential(g2, p, cfg) for p in ps}
            cost = {p: social_cost(g, p) for p in ps}
            for p in ps:
                for i, strat in enumerate(g.strategies):
                    for t in range(len(strat)):
                        q = p.deviate(i, t)
                        if phi[p] <= phi[q]:
                            assert leq(player_cost(g, p, i), alpha * player_cost(g, q, i), FLOAT_TOL)
                            counts["deviation"] += 1
            for p, q in itertools.product(ps, repeat=2):
                if phi[p] <= phi[q]:
                    assert leq(cost[p], beta * cost[q], FLOAT_TOL)
                    counts["global"] += 1
    criterion("9 structural properties", ", ".join(f"{k} {v}" for k, v in counts.items()))


if __name__ == "__main__":
    raise SystemExit(pytest.main([__file__, "-q"]))
