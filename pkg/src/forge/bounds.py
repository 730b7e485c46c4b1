"""Composition of goodness parameters into (alpha, beta) equilibrium bounds.

Also hosts the gadget decomposition of conical resources and the closed-form
trade-off curves of the catalog families.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from fractions import Fraction
from typing import Callable, Iterable, Sequence

from forge.costs import Constant, Conical, CostSpec, Monomial, Number, Polynomial
from forge.game import Game, Resource
from forge.goodness import (
    GoodnessParams,
    concave_goodness,
    constant_goodness,
    fairshare_goodness,
    monomial_goodness,
)

FAMILIES = ("poly", "concave", "mixed", "fairshare")


class BoundsError(ValueError):
    pass


def compose(params_list: Iterable[GoodnessParams]) -> tuple[Number, Number]:
    """alpha = max a2/a1; beta = max(b2/a1) / min(b1/a1)."""
    params = list(params_list)
    if not params:
        raise BoundsError("need at least one parameter set")
    alpha = max(p.alpha2 / p.alpha1 for p in params)
    beta = max(p.beta2 / p.alpha1 for p in params) / min(p.beta1 / p.alpha1 for p in params)
    return alpha, beta


# -- gadget decomposition -------------------------------------------------------


def _terms(cost: CostSpec, coeff: Number = 1) -> list[tuple[Number, CostSpec]]:
    """Flatten conical combinations and polynomials into (coefficient, atom) terms."""
    if isinstance(cost, Conical):
        out = []
        for k, c in cost.terms:
            out += _terms(c, coeff * k)
        return out
    if isinstance(cost, Polynomial):
        out = []
        for k, a in enumerate(cost.coeffs):
            if a == 0:
                continue
            atom = Constant(1) if k == 0 else Monomial(k, 1)
            out.append((coeff * a, atom))
        return out or [(coeff, Constant(0))]
    return [(coeff, cost)]


def _scale(k: Number, atom: CostSpec) -> CostSpec:
    if k == 1:
        return atom
    if isinstance(atom, Constant):
        return Constant(k * atom.value)
    if isinstance(atom, Monomial):
        return Monomial(atom.degree, k * atom.coeff)
    return Conical(((k, atom),))


def gadget_decompose(game: Game) -> Game:
    """Replace each conical (or polynomial) resource by parallel single-term
    resources ``e#j``; strategies using ``e`` use all of them."""
    resources: list[Resource] = []
    replace: dict[str, list[str]] = {}
    for r in game.resources:
        if not isinstance(r.cost, (Conical, Polynomial)):
            resources.append(r)
            replace[r.id] = [r.id]
            continue
        terms = [(k, c) for k, c in _terms(r.cost) if k != 0] or [(1, Constant(0))]
        ids = [r.id] if len(terms) == 1 else [f"{r.id}#{j}" for j in range(len(terms))]
        for rid, (k, atom) in zip(ids, terms):
            resources.append(Resource(rid, _scale(k, atom)))
        replace[r.id] = ids
    strategies = tuple(
        tuple(frozenset(x for e in s for x in replace[e]) for s in strat) for strat in game.strategies
    )
    return Game(game.players, tuple(resources), strategies)


# -- curves ------------------------------------------------------------------------


def _f(v: Number) -> Number:
    return Fraction(v) if isinstance(v, int) else v


def _check_range(lam: Number, lo: Number, hi: Number, what: str) -> None:
    if not lo <= lam <= hi:
        raise BoundsError(f"{what}: lambda={lam} outside [{lo}, {hi}]")


def poly_params(d: int, lam: Number) -> list[GoodnessParams]:
    """Canonical assignment: degree k < d gets mu = 1/(k+1), degree d gets mu = 1/lambda."""
    lam = _f(lam)
    out = [constant_goodness()]
    out += [monomial_goodness(k, Fraction(1, k + 1)) for k in range(1, d)]
    out.append(monomial_goodness(d, 1 / lam))
    return out


def poly_curve(d: int, lam: Number) -> tuple[Number, Number]:
    if not isinstance(d, int) or d < 1:
        raise BoundsError("degree must be an integer >= 1")
    lam = _f(lam)
    _check_range(lam, d, d + 1, "polynomial curve")
    return lam, (d + 1) / lam


def concave_mu(lam: Number) -> Number:
    return 1 / (2 * (_f(lam) - 1))


def concave_curve(lam: Number) -> tuple[Number, Number]:
    lam = _f(lam)
    _check_range(lam, Fraction(3, 2), 2, "concave curve")
    return lam, lam / (lam - 1)


def mixed_mu(d: int, lam: Number) -> Number:
    return Fraction(d + 1) / (2 * _f(lam))


def mixed_params(d: int, lam: Number) -> list[GoodnessParams]:
    return [concave_goodness(mixed_mu(d, lam))] + poly_params(d, lam)


def mixed_curve(d: int, lam: Number) -> tuple[Number, Number]:
    if d == 1:
        warnings.warn("affine costs are concave; using the concave curve for d=1", stacklevel=2)
        return concave_curve(lam)
    if not isinstance(d, int) or d < 2:
        raise BoundsError("mixed curve needs an integer degree >= 2")
    lam = _f(lam)
    _check_range(lam, d, d + 1, "mixed curve")
    alpha, beta = lam, 1 + (d + 1) / lam
    got = compose(mixed_params(d, lam))
    assert _close(got, (alpha, beta)), (got, alpha, beta)
    return alpha, beta


def _close(a: Sequence[Number], b: Sequence[Number], tol: float = 1e-12) -> bool:
    return all(
        x == y if isinstance(x, Fraction) and isinstance(y, Fraction) else math.isclose(x, y, rel_tol=tol)
        for x, y in zip(a, b)
    )


def fairshare_curve(lam: Number, w_max: Number, W: Number) -> tuple[float, float]:
    if lam < 1:
        raise BoundsError("fair-share curve needs lambda >= 1")
    if not 1 <= w_max <= W:
        raise BoundsError("need 1 <= w_max <= W")
    wm = float(w_max)
    alpha = max((1 + 1 / wm) * math.log1p(wm), math.log(wm) + float(lam))
    return alpha, 1 + math.log(float(W)) / float(lam)


def chen_roughgarden_threshold(w_max: Number) -> float:
    """Smallest approximation factor covered by the earlier fair-sharing bound."""
    return math.log2(math.e * (1 + float(w_max)))


def chen_roughgarden_reference(w_max: Number, W: Number, f: Number) -> tuple[float, float]:
    """Earlier fair-sharing trade-off (f, 1 + 2 log2(1+W)/f), for f >= 2*threshold."""
    lo = 2 * chen_roughgarden_threshold(w_max)
    if f < lo * (1 - 1e-12):
        raise BoundsError(f"f={f} below the admissible range f >= {lo}")
    return float(f), 1 + 2 * math.log2(1 + float(W)) / float(f)


@dataclass(frozen=True)
class BoundCurve:
    """lambda -> (alpha, beta) for one family."""

    family: str
    lambda_range: tuple[Number, Number]
    fn: Callable[[Number], tuple[Number, Number]]

    def __call__(self, lam: Number) -> tuple[Number, Number]:
        return self.fn(lam)

    def sample(self, n: int = 51) -> list[tuple[float, float, float]]:
        lo, hi = (float(v) for v in self.lambda_range)
        if n == 1 or hi == lo:
            lams = [lo]
        else:
            lams = [lo + (hi - lo) * j / (n - 1) for j in range(n)]
        return [(lam, *(float(v) for v in self.fn(lam))) for lam in lams]


def curve(family: str, d: int | None = None, w_max: Number | None = None, W: Number | None = None,
          lambda_max: Number | None = None) -> BoundCurve:
    if family == "poly":
        return BoundCurve(f"poly({d})", (d, d + 1), lambda lam: poly_curve(d, lam))
    if family == "concave":
        return BoundCurve("concave", (Fraction(3, 2), 2), concave_curve)
    if family == "mixed":
        if d == 1:
            return curve("concave")
        return BoundCurve(f"mixed({d})", (d, d + 1), lambda lam: mixed_curve(d, lam))
    if family == "fairshare":
        if w_max is None or W is None:
            raise BoundsError("fair-share curve needs w_max and W")
        hi = lambda_max if lambda_max is not None else max(1.0, 2 * math.log(float(W)))
        return BoundCurve(f"fairshare({w_max},{W})", (1, hi), lambda lam: fairshare_curve(lam, w_max, W))
    raise BoundsError(f"unknown family {family!r}; expected one of {FAMILIES}")


def family_bound(family: str, lam: Number, d: int | None = None, w_max: Number | None = None,
                 W: Number | None = None) -> tuple[Number, Number]:
    """Claimed (alpha, beta) for a family at parameter lambda."""
    if family == "poly":
        return poly_curve(d, lam)
    if family == "concave":
        return concave_curve(lam)
    if family == "mixed":
        return mixed_curve(d, lam)
    if family == "fairshare":
        return fairshare_curve(lam, w_max, W)
    raise BoundsError(f"unknown family {family!r}; expected one of {FAMILIES}")


def concave_params(lam: Number) -> list[GoodnessParams]:
    return [concave_goodness(concave_mu(lam))]


def fairshare_params(lam: Number, w_max: Number, W: Number) -> list[GoodnessParams]:
    return [fairshare_goodness(lam, w_max, W)]
