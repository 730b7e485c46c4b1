"""Approximate potential, its minimization, and equilibrium certification.

For resource e with slack xi_e and player set I,

    phi_e(I) = int_0^{w_I} c_e(t) dt + xi_e * sum_{i in I} w_i c_e(w_i)

and the potential of a profile is sum_e phi_e(N_e) / alpha1_e.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable, Mapping, Sequence

from forge.bounds import _terms, compose, concave_mu, gadget_decompose, mixed_mu
from forge.costs import (
    ConcaveAnalytic,
    ConcavePiecewiseLinear,
    Conical,
    Constant,
    CostSpec,
    FairShare,
    Monomial,
    Number,
)
from forge.game import (
    INF,
    PROFILE_CAP,
    EquilibriumCertificate,
    Game,
    Profile,
    ProfileLike,
    leq,
    optimum,
)
from forge.goodness import (
    GoodnessParams,
    concave_goodness,
    constant_goodness,
    fairshare_goodness,
    monomial_goodness,
)

CONDITION_SUBSET_CAP = 16
DESCENT_EPS = 1e-12


class PotentialError(ValueError):
    pass


@dataclass(frozen=True)
class PotentialConfig:
    """Goodness parameters (alpha1, alpha2, beta1, beta2, xi) per resource id."""

    params: Mapping[str, GoodnessParams]

    def __getitem__(self, rid: str) -> GoodnessParams:
        return self.params[rid]

    def bound(self, resources: Iterable[str] | None = None) -> tuple[Number, Number]:
        """(alpha, beta) guaranteed by composing the per-resource parameters."""
        keys = self.params if resources is None else resources
        return compose(self.params[k] for k in keys)

    def covers(self, game: Game) -> None:
        missing = [r.id for r in game.resources if r.id not in self.params]
        if missing:
            raise PotentialError(f"no potential parameters for resources {missing}")


def phi_e(cost: CostSpec, weights: Sequence[Number], xi: Number) -> Number:
    if not weights:
        return 0
    if any(w <= 0 for w in weights):
        raise PotentialError("weights must be positive")
    total = sum(weights)
    return cost.integrate(0, total) + xi * sum(w * cost.evaluate(w) for w in weights)


class _PotentialTables:
    """phi_e(I)/alpha1_e cached per (resource, player bitmask)."""

    def __init__(self, game: Game, config: PotentialConfig):
        config.covers(game)
        self.game = game
        self.ev = game.engine
        self.inv_a1 = [1 / config[r.id].alpha1 for r in game.resources]
        self.xi = [config[r.id].xi for r in game.resources]
        self._cache: dict[tuple[int, int], Number] = {}

    def phi(self, r: int, mask: int) -> Number:
        key = (r, mask)
        v = self._cache.get(key)
        if v is None:
            if mask == 0:
                v = 0
            else:
                ws = [w for i, w in enumerate(self.ev.weights) if mask >> i & 1]
                v = self.inv_a1[r] * phi_e(self.ev.costs[r], ws, self.xi[r])
            self._cache[key] = v
        return v

    def potential(self, masks: Sequence[int]) -> Number:
        return sum(self.phi(r, m) for r, m in enumerate(masks) if m)

    def deviation_delta(self, i: int, strategy: int, choice: Sequence[int], masks: Sequence[int]) -> Number:
        """Potential change when player i switches to ``strategy``."""
        bit = 1 << i
        old = set(self.ev.strats[i][choice[i]])
        new = set(self.ev.strats[i][strategy])
        delta = 0
        for r in new - old:
            delta += self.phi(r, masks[r] | bit) - self.phi(r, masks[r])
        for r in old - new:
            delta += self.phi(r, masks[r] & ~bit) - self.phi(r, masks[r])
        return delta


def potential(game: Game, profile: ProfileLike, config: PotentialConfig) -> Number:
    choice = game.validate_profile(profile)
    t = _PotentialTables(game, config)
    return t.potential(t.ev.masks(choice))


def minimize_potential_exhaustive(
    game: Game, config: PotentialConfig, cap: int = PROFILE_CAP
) -> Profile:
    """Global minimizer; the lexicographically first one on ties."""
    return _minimize(game, config, cap)[0]


def _minimize(game: Game, config: PotentialConfig, cap: int = PROFILE_CAP) -> tuple[Profile, Number]:
    t = _PotentialTables(game, config)
    best, best_val = None, None
    for choice in game.choices(cap):
        v = t.potential(t.ev.masks(choice))
        if best_val is None or v < best_val:
            best, best_val = choice, v
    return Profile(best), best_val


@dataclass(frozen=True)
class DescentResult:
    profile: Profile
    moves: int
    potential: Number
    path: tuple[Profile, ...] = field(default=(), repr=False)


def potential_descent(
    game: Game,
    config: PotentialConfig,
    start: ProfileLike,
    move_rule: str = "best",
    eps: float | None = None,
    max_moves: int = 1_000_000,
) -> DescentResult:
    """Unilateral moves that strictly lower the potential until none is left.

    ``move_rule`` is ``"best"`` (steepest improvement over all players) or
    ``"first"`` (first improving move in player/strategy order).
    """
    if move_rule in ("best-improvement", "first-improvement"):
        move_rule = move_rule.split("-")[0]
    if move_rule not in ("best", "first"):
        raise PotentialError(f"unknown move rule {move_rule!r}")
    choice = list(game.validate_profile(start))
    eps = (0 if game.exact else DESCENT_EPS) if eps is None else eps
    t = _PotentialTables(game, config)
    path = [Profile(choice)]
    moves = 0
    while moves < max_moves:
        masks = t.ev.masks(choice)
        scale = max(1.0, abs(float(t.potential(masks))))
        move = None
        for i, strat in enumerate(t.ev.strats):
            for s in range(len(strat)):
                if s == choice[i]:
                    continue
                delta = t.deviation_delta(i, s, choice, masks)
                if delta < -eps * scale and (move is None or delta < move[0]):
                    move = (delta, i, s)
                    if move_rule == "first":
                        break
            if move is not None and move_rule == "first":
                break
        if move is None:
            break
        choice[move[1]] = move[2]
        moves += 1
        path.append(Profile(choice))
    final = Profile(choice)
    return DescentResult(final, moves, t.potential(t.ev.masks(choice)), tuple(path))


def certify(
    game: Game,
    profile: ProfileLike,
    alpha: Number = INF,
    beta: Number = INF,
    tol: float | None = None,
    opt: Number | None = None,
    cap: int = PROFILE_CAP,
) -> EquilibriumCertificate:
    """Tight approximation factor and cost ratio of ``profile``, checked
    against the claimed (alpha, beta)."""
    tol = game.tol if tol is None else tol
    choice = game.validate_profile(profile)
    ev = game.engine
    masks = ev.masks(choice)
    factor, checked = ev.approx_factor(choice, masks)
    cost = ev.social_cost(masks)
    if opt is None:
        opt = optimum(game, cap)[1]
    notes = []
    if opt == 0:
        ratio = 1 if cost == 0 else INF
        notes.append("optimum social cost is zero")
    else:
        ratio = cost / opt
    if factor == INF:
        notes.append("a deviation reaches zero cost: unbounded factor")
    passed = leq(factor, alpha, tol) and (beta == INF or leq(cost, beta * opt, tol))
    return EquilibriumCertificate(
        profile=Profile(choice),
        alpha=factor,
        beta=ratio,
        deviations_checked=checked,
        social_cost=cost,
        opt=opt,
        claimed_alpha=alpha,
        claimed_beta=beta,
        passed=passed,
        notes=tuple(notes),
    )


# -- potential condition checks --------------------------------------------------


@dataclass(frozen=True)
class ConditionReport:
    satisfied: bool
    worst_violation: float
    witness: dict | None
    ratio_ranges: dict
    zero_denominators: tuple = ()
    tuples_checked: int = 0

    def to_dict(self) -> dict:
        return {
            "satisfied": self.satisfied,
            "worst_violation": self.worst_violation,
            "witness": self.witness,
            "ratio_ranges": {k: [float(a), float(b)] for k, (a, b) in self.ratio_ranges.items()},
            "zero_denominators": [list(z) for z in self.zero_denominators],
            "tuples_checked": self.tuples_checked,
        }


def verify_lemma1_conditions(
    game: Game,
    config: PotentialConfig,
    cap: int = CONDITION_SUBSET_CAP,
    tol: float | None = None,
) -> ConditionReport:
    """Check, for every resource, the marginal condition over all (i, I not
    containing i) and the level condition over all nonempty I.

    Marginal: a1 <= (phi(I+i) - phi(I)) / (w_i c(w_I + w_i)) <= a2.
    Level:    b1 <= phi(I) / (w_I c(w_I)) <= b2.
    Violations are measured in ratio units, relative to the bound.
    """
    if game.n > cap:
        raise PotentialError(f"{game.n} players exceed the subset-enumeration cap {cap}")
    config.covers(game)
    tol = game.tol if tol is None else tol
    n, ws = game.n, game.weights
    worst, witness = -math.inf, None
    zeros = []
    ranges = {}
    checked = 0

    def note(kind, value, lo, hi, info):
        nonlocal worst, witness
        v = max(lo - value, value - hi)
        v = v if tol == 0 else float(v)
        scaled = float(v) / max(1.0, abs(float(hi)))
        if scaled > worst:
            worst, witness = scaled, dict(info, condition=kind, ratio=float(value))

    for r in game.resources:
        p = config[r.id]
        cost = r.cost
        phi = {}
        for mask in range(1 << n):
            members = [ws[i] for i in range(n) if mask >> i & 1]
            phi[mask] = phi_e(cost, members, p.xi)
        load = {mask: sum(ws[i] for i in range(n) if mask >> i & 1) for mask in range(1 << n)}
        lo1 = hi1 = lo2 = hi2 = None
        for mask in range(1 << n):
            for i in range(n):
                if mask >> i & 1:
                    continue
                checked += 1
                den = ws[i] * cost.evaluate(load[mask] + ws[i])
                num = phi[mask | 1 << i] - phi[mask]
                info = {"resource": r.id, "player": game.players[i].id, "subset": _ids(game, mask)}
                if den == 0:
                    zeros.append(("marginal", r.id, game.players[i].id, tuple(info["subset"])))
                    continue
                ratio = num / den
                lo1 = ratio if lo1 is None or ratio < lo1 else lo1
                hi1 = ratio if hi1 is None or ratio > hi1 else hi1
                note("marginal", ratio, p.alpha1, p.alpha2, info)
            if mask == 0:
                continue
            checked += 1
            den = load[mask] * cost.evaluate(load[mask])
            info = {"resource": r.id, "subset": _ids(game, mask)}
            if den == 0:
                zeros.append(("level", r.id, tuple(info["subset"])))
                continue
            ratio = phi[mask] / den
            lo2 = ratio if lo2 is None or ratio < lo2 else lo2
            hi2 = ratio if hi2 is None or ratio > hi2 else hi2
            note("level", ratio, p.beta1, p.beta2, info)
        if lo1 is not None:
            ranges[f"{r.id}:marginal"] = (lo1, hi1)
        if lo2 is not None:
            ranges[f"{r.id}:level"] = (lo2, hi2)
    if worst == -math.inf:
        worst = 0.0
    satisfied = worst <= (0 if tol == 0 else tol)
    return ConditionReport(satisfied, float(worst), witness, ranges, tuple(zeros), checked)


def _ids(game: Game, mask: int) -> list[str]:
    return [game.players[i].id for i in range(game.n) if mask >> i & 1]


# -- catalog parameters --------------------------------------------------------------


def _atom(cost: CostSpec) -> CostSpec:
    while isinstance(cost, Conical) and len(cost.terms) == 1:
        cost = cost.terms[0][1]
    return cost


def infer_family(game: Game) -> tuple[str, int]:
    """Guess (family, degree) from the atoms of the decomposed game."""
    atoms = [_atom(c) for r in game.resources for _, c in _terms(r.cost)]
    degrees = [a.degree for a in atoms if isinstance(a, Monomial)]
    d = max(degrees, default=1)
    if any(isinstance(a, FairShare) for a in atoms):
        return "fairshare", d
    if all(isinstance(a, (Constant, Monomial)) for a in atoms):
        return "poly", d
    if d >= 2:
        return "mixed", d
    return "concave", 1


def _frac(v: Number) -> Number:
    return Fraction(v) if isinstance(v, int) else v


def catalog_params(
    cost: CostSpec, family: str, lam: Number, d: int | None = None,
    w_max: Number | None = None, W: Number | None = None,
) -> GoodnessParams:
    """Catalog parameters for a single-term cost under the family's canonical assignment."""
    atom = _atom(cost)
    if isinstance(atom, FairShare):
        if family != "fairshare":
            raise PotentialError("fair-share costs need the fairshare family")
        return fairshare_goodness(lam, w_max, W)
    if family == "concave":
        if not atom.is_concave:
            raise PotentialError(f"{atom!r} is not a nondecreasing concave catalog member")
        return concave_goodness(concave_mu(lam))
    if family in ("poly", "mixed"):
        if isinstance(atom, Constant):
            return constant_goodness()
        if isinstance(atom, Monomial):
            if atom.degree > d:
                raise PotentialError(f"monomial of degree {atom.degree} exceeds d={d}")
            if atom.degree == d:
                return monomial_goodness(d, 1 / _frac(lam))
            return monomial_goodness(atom.degree, Fraction(1, atom.degree + 1))
        if family == "mixed" and isinstance(atom, (ConcaveAnalytic, ConcavePiecewiseLinear)):
            return concave_goodness(mixed_mu(d, lam))
        raise PotentialError(f"{atom!r} not covered by the {family} family")
    if family == "fairshare":
        raise PotentialError("fairshare family admits only fair-share resources")
    raise PotentialError(f"unknown family {family!r}")


def catalog_setup(
    game: Game, lam: Number, family: str | None = None, d: int | None = None
) -> tuple[Game, PotentialConfig]:
    """Decompose the game into single-term resources and attach the canonical
    catalog parameters; fair-share caps are set to ``lam``."""
    inferred, d_inf = infer_family(game)
    family = family or inferred
    d = d if d is not None else d_inf
    g = gadget_decompose(game)
    if family == "fairshare":
        if g.w_min != 1:
            raise PotentialError("fair-share games must be rescaled so that w_min = 1")
        caps = {}
        for r in g.resources:
            atom = _atom(r.cost)
            if not isinstance(atom, FairShare):
                raise PotentialError("fairshare family admits only fair-share resources")
            k = r.cost.terms[0][0] if isinstance(r.cost, Conical) else 1
            caps[r.id] = FairShare(k * atom.a, lam)
        g = g.replace_costs(caps)
    params = {
        r.id: catalog_params(r.cost, family, lam, d, g.w_max, g.total_weight) for r in g.resources
    }
    return g, PotentialConfig(params)
