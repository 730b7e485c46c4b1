"""Goodness parameters of cost functions.

A cost ``c`` is (alpha1, alpha2, beta1, beta2)-good with slack ``xi`` when,
for loads x in {0} u [w_min, W] and weights w in [w_min, w_max],

    alpha1*c(x+w) - xi*c(w) <= avg_[x, x+w] c <= alpha2*c(x+w) - xi*c(w)

and, for x in [w_min, W],

    beta1*c(x) - xi*cmin(x) <= avg_[0, x] c <= beta2*c(x) - xi*cmax(x)

with cmin/cmax the extrema of c over [w_min, x].  This module checks and fits
these constants on grids and provides the closed forms for the catalog
families.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Sequence

import numpy as np

from forge.costs import (
    CONSTANT,
    GRID_POINTS,
    NONDECREASING,
    NONINCREASING,
    CostSpec,
    FairShare,
    Number,
    is_nondecreasing,
)

DEFAULT_GRID = 512
DEFAULT_TOL = 1e-9


class GoodnessError(ValueError):
    pass


@dataclass(frozen=True)
class GoodnessParams:
    alpha1: Number
    alpha2: Number
    beta1: Number
    beta2: Number
    xi: Number = 0
    excluded: tuple = field(default=(), compare=False, repr=False)

    def __post_init__(self):
        if min(self.alpha1, self.alpha2, self.beta1, self.beta2) <= 0:
            raise GoodnessError(f"goodness parameters must be positive: {self}")
        if self.xi < 0:
            raise GoodnessError("xi must be nonnegative")
        if self.alpha1 > self.alpha2 or self.beta1 > self.beta2:
            raise GoodnessError(f"need alpha1 <= alpha2 and beta1 <= beta2: {self}")

    def as_tuple(self) -> tuple:
        return (self.alpha1, self.alpha2, self.beta1, self.beta2)

    def to_dict(self) -> dict:
        return {k: float(getattr(self, k)) for k in ("alpha1", "alpha2", "beta1", "beta2", "xi")}


@dataclass(frozen=True)
class WeightDomain:
    w_min: Number
    w_max: Number
    W: Number

    def __post_init__(self):
        if not 0 < self.w_min <= self.w_max <= self.W:
            raise GoodnessError(f"need 0 < w_min <= w_max <= W, got {self}")

    @classmethod
    def of_game(cls, game) -> WeightDomain:
        return cls(game.w_min, game.w_max, game.total_weight)


@dataclass(frozen=True)
class GoodnessReport:
    satisfied: bool
    worst_violation: float
    witness: tuple | None
    condition: str | None
    grid: dict
    tolerance: float = DEFAULT_TOL

    def to_dict(self) -> dict:
        return {
            "satisfied": self.satisfied,
            "worst_violation": self.worst_violation,
            "witness": None if self.witness is None else [float(v) for v in self.witness],
            "condition": self.condition,
            "tolerance": self.tolerance,
            "grid": self.grid,
        }


def _axis(lo: float, hi: float, n: int, extra: Sequence[float] = ()) -> np.ndarray:
    """Geometric grid on [lo, hi] with the in-range breakpoints added."""
    lo, hi = float(lo), float(hi)
    if hi <= lo:
        pts = np.array([lo])
    else:
        pts = np.geomspace(lo, hi, n)
        pts[0], pts[-1] = lo, hi
    extra = [float(p) for p in extra if lo < p < hi]
    return np.unique(np.concatenate([pts, extra])) if extra else pts


class _Tables:
    """Grid samples of the quantities entering both goodness conditions."""

    def __init__(self, cost: CostSpec, domain: WeightDomain, density: int):
        self.cost = cost
        self.domain = domain
        w_min, w_max, W = float(domain.w_min), float(domain.w_max), float(domain.W)
        bps = cost.breakpoints
        self.xs_pos = _axis(w_min, W, density, bps)
        self.ws = _axis(w_min, w_max, density, bps)
        # first condition, on pairs (x, w) with x + w <= W
        xs = np.concatenate([[0.0], self.xs_pos])
        X, Wg = np.meshgrid(xs, self.ws, indexing="ij")
        keep = X + Wg <= W * (1 + 1e-12)
        self.pair_x, self.pair_w = X[keep], Wg[keep]
        self.c_w = cost.evaluate_array(self.pair_w)
        self.c_xw = cost.evaluate_array(self.pair_x + self.pair_w)
        self.avg1 = cost.mean_span_array(self.pair_x, self.pair_w)

        # second condition, on x in [w_min, W]
        self.c_x = cost.evaluate_array(self.xs_pos)
        self.avg2 = cost.mean_span_array(np.zeros_like(self.xs_pos), self.xs_pos)
        self.c_lo, self.c_hi = _running_extrema(cost, w_min, self.xs_pos, self.c_x)
        self.scale = max(float(np.max(np.abs(self.c_xw), initial=0)), float(np.max(self.c_x, initial=0)))

    def metadata(self, shortcut: bool) -> dict:
        d = self.domain
        return {
            "w_min": float(d.w_min),
            "w_max": float(d.w_max),
            "W": float(d.W),
            "x_points": int(len(self.xs_pos)) + 1,
            "w_points": int(len(self.ws)),
            "pairs_checked": int(len(self.pair_x)),
            "spacing": "geometric+breakpoints",
            "domain_convention": "first condition restricted to x + w <= W",
            "second_condition": "nondecreasing shortcut" if shortcut else "full (cmin/cmax)",
        }


def _running_extrema(cost: CostSpec, w_min: float, xs: np.ndarray, c_x: np.ndarray):
    """cmin/cmax over [w_min, x] for every x in the sorted array ``xs``."""
    mono = cost.monotonicity
    c0 = float(cost.evaluate(w_min))
    if mono == CONSTANT:
        return c_x.copy(), c_x.copy()
    if mono == NONDECREASING:
        return np.full_like(c_x, c0), c_x.copy()
    if mono == NONINCREASING:
        return c_x.copy(), np.full_like(c_x, c0)
    # Running extrema over a dense merged grid, read off at the points of xs.
    dense = np.unique(
        np.concatenate([xs, np.linspace(w_min, xs[-1], GRID_POINTS), [float(b) for b in cost.breakpoints if w_min < b < xs[-1]]])
    )
    vals = cost.evaluate_array(dense)
    lo, hi = np.minimum.accumulate(vals), np.maximum.accumulate(vals)
    pos = np.searchsorted(dense, xs)
    return lo[pos], hi[pos]


def _relative(num: np.ndarray, den: np.ndarray, scale: float) -> np.ndarray:
    """num/den where den > 0; elsewhere num normalized by the grid cost scale."""
    out = np.empty_like(num)
    pos = den > 0
    out[pos] = num[pos] / den[pos]
    out[~pos] = num[~pos] / scale if scale > 0 else num[~pos]
    return out


def check_goodness(
    cost: CostSpec,
    params: GoodnessParams,
    domain: WeightDomain,
    grid_density: int = DEFAULT_GRID,
    increasing_shortcut: bool = False,
    tol: float = DEFAULT_TOL,
) -> GoodnessReport:
    """Grid test of both goodness conditions; violations are relative to the cost
    value on the bounding side, so the outcome is invariant under scaling."""
    t = _Tables(cost, domain, grid_density)
    a1, a2, b1, b2, xi = (float(v) for v in (*params.as_tuple(), params.xi))
    shortcut = increasing_shortcut and is_nondecreasing(cost, (0, domain.W))[0]

    lhs = t.avg1 + xi * t.c_w  # compared against alpha * c(x+w)
    candidates = [
        ("good_1 lower", _relative(a1 * t.c_xw - lhs, t.c_xw, t.scale), t.pair_x, t.pair_w),
        ("good_1 upper", _relative(lhs - a2 * t.c_xw, t.c_xw, t.scale), t.pair_x, t.pair_w),
    ]
    if shortcut:
        low = b1 * t.c_x - t.avg2
        high = t.avg2 - (b2 - xi) * t.c_x
    else:
        low = b1 * t.c_x - xi * t.c_lo - t.avg2
        high = t.avg2 - b2 * t.c_x + xi * t.c_hi
    tag = "good_2'" if shortcut else "good_2"
    candidates += [
        (f"{tag} lower", _relative(low, t.c_x, t.scale), t.xs_pos, None),
        (f"{tag} upper", _relative(high, t.c_x, t.scale), t.xs_pos, None),
    ]

    worst, witness, condition = -math.inf, None, None
    for name, viol, xs, ws in candidates:
        if viol.size == 0:
            continue
        j = int(np.argmax(viol))
        if viol[j] > worst:
            worst = float(viol[j])
            witness = (float(xs[j]),) if ws is None else (float(xs[j]), float(ws[j]))
            condition = name
    return GoodnessReport(
        satisfied=worst <= tol,
        worst_violation=worst,
        witness=witness,
        condition=condition,
        grid=t.metadata(shortcut),
        tolerance=tol,
    )


def fit_goodness(
    cost: CostSpec,
    xi: Number,
    domain: WeightDomain,
    grid_density: int = DEFAULT_GRID,
) -> GoodnessParams:
    """Tightest parameters on the grid for a fixed ``xi``.

    Grid points where the bounding cost value is zero are left out and listed
    in ``excluded``.
    """
    if xi < 0:
        raise GoodnessError("xi must be nonnegative")
    t = _Tables(cost, domain, grid_density)
    xi_f = float(xi)
    excluded = []

    ok1 = t.c_xw > 0
    excluded += [("good_1", float(x), float(w)) for x, w in zip(t.pair_x[~ok1], t.pair_w[~ok1])]
    r1 = (t.avg1[ok1] + xi_f * t.c_w[ok1]) / t.c_xw[ok1]

    ok2 = t.c_x > 0
    excluded += [("good_2", float(x)) for x in t.xs_pos[~ok2]]
    lo2 = (t.avg2[ok2] + xi_f * t.c_lo[ok2]) / t.c_x[ok2]
    hi2 = (t.avg2[ok2] + xi_f * t.c_hi[ok2]) / t.c_x[ok2]
    if r1.size == 0 or lo2.size == 0:
        raise GoodnessError("cost vanishes on the whole grid; parameters undefined")
    return GoodnessParams(
        alpha1=float(r1.min()),
        alpha2=float(r1.max()),
        beta1=float(lo2.min()),
        beta2=float(hi2.max()),
        xi=xi,
        excluded=tuple(excluded),
    )


def composed_ratio(params: GoodnessParams, objective: str = "alpha") -> float:
    if objective == "alpha":
        return float(params.alpha2 / params.alpha1)
    if objective == "beta":
        return float(params.beta2 / params.beta1)
    raise GoodnessError(f"unknown objective {objective!r}; use 'alpha' or 'beta'")


def scan_xi(
    cost: CostSpec,
    domain: WeightDomain,
    xi_grid: Sequence[Number],
    objective: str = "alpha",
    grid_density: int = DEFAULT_GRID,
) -> tuple[Number, GoodnessParams]:
    """Fit for every xi and keep the one minimizing alpha2/alpha1 (or
    beta2/beta1); earlier grid entries win ties."""
    if not xi_grid:
        raise GoodnessError("xi grid is empty")
    best = None
    for xi in xi_grid:
        p = fit_goodness(cost, xi, domain, grid_density)
        score = composed_ratio(p, objective)
        if best is None or score < best[0] - 1e-12:
            best = (score, xi, p)
    return best[1], best[2]


# -- closed forms for the catalog -------------------------------------------------


def _frac(v: Number) -> Number:
    return Fraction(v) if isinstance(v, int) else v


def _snap(mu: Number, ends: Sequence[Fraction]) -> Number:
    """Float mu within rounding of an endpoint (e.g. 1/3.0) is moved onto it."""
    if isinstance(mu, float):
        for e in ends:
            if math.isclose(mu, float(e), rel_tol=1e-12):
                return e
    return mu


def monomial_goodness(d: int, mu: Number) -> GoodnessParams:
    """x**d is (mu, 1, 1/(d+1), mu)-good with xi = mu - 1/(d+1), for
    1/(d+1) <= mu <= 1/d."""
    if not isinstance(d, int) or d < 1:
        raise GoodnessError("degree must be an integer >= 1")
    mu = _frac(mu)
    low = Fraction(1, d + 1)
    mu = _snap(mu, (low, Fraction(1, d)))
    if not low <= mu <= Fraction(1, d):
        raise GoodnessError(f"mu={mu} outside [1/{d + 1}, 1/{d}]")
    return GoodnessParams(mu, Fraction(1), low, mu, xi=mu - low)


def constant_goodness() -> GoodnessParams:
    one = Fraction(1)
    return GoodnessParams(one, one, one, one, xi=Fraction(0))


def concave_goodness(mu: Number) -> GoodnessParams:
    """Nondecreasing concave costs: (mu, mu+1/2, 1/2, mu+1/2) with xi = mu - 1/2."""
    mu = _frac(mu)
    half = Fraction(1, 2)
    mu = _snap(mu, (half, Fraction(1)))
    if not half <= mu <= 1:
        raise GoodnessError(f"mu={mu} outside [1/2, 1]")
    return GoodnessParams(mu, mu + half, half, mu + half, xi=mu - half)


def fairshare_goodness(lambda_cap: Number, w_max: Number, W: Number) -> GoodnessParams:
    """Fair sharing 1/x capped at ``lambda_cap`` below 1, with w_min = 1 and xi = 0."""
    if lambda_cap < 1:
        raise GoodnessError("cap must be >= 1")
    if w_max < 1:
        raise GoodnessError("w_max must be >= 1 (rescale weights so that w_min = 1)")
    if W < w_max:
        raise GoodnessError("need W >= w_max")
    wm = float(w_max)
    alpha2 = max((1 + 1 / wm) * math.log1p(wm), math.log(wm) + float(lambda_cap))
    return GoodnessParams(1.0, alpha2, lambda_cap, math.log(float(W)) + float(lambda_cap), xi=0)


def fairshare_ratio(w: Number, x: Number, lam: Number = 1) -> float:
    """Average of the capped fair-share cost over [x, x+w], relative to c(x+w)."""
    if w < 1:
        raise GoodnessError("w must be >= 1")
    if x == 0:
        return math.log(float(w)) + float(lam)
    if x < 1:
        raise GoodnessError("x must be 0 or >= 1")
    w, x = float(w), float(x)
    return (1 + x / w) * math.log1p(w / x)


def fairshare_cost(lam: Number = 1, a: Number = 1) -> FairShare:
    return FairShare(a, lam)
