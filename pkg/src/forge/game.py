"""Weighted congestion games: loads, costs, optimum and approximate equilibria."""

from __future__ import annotations

import itertools
import json
import math
import os
from dataclasses import dataclass, field
from fractions import Fraction
from functools import cached_property
from typing import Iterator, Mapping, Sequence, Union

from forge.costs import CostSpec, Number, _norm, _num_out, cost_from_dict, parse_number

PROFILE_CAP = 2_000_000
SUBSET_CAP = 20
FLOAT_TOL = 1e-9
FORMAT_VERSION = 1

INF = math.inf


class GameError(ValueError):
    """Malformed game or profile."""


class CapacityError(RuntimeError):
    """An enumeration would exceed its configured cap."""

    def __init__(self, what: str, size: int, cap: int):
        super().__init__(f"{what} enumeration of {size} items exceeds cap {cap}")
        self.size = size
        self.cap = cap


class EmptyEquilibriumSet(RuntimeError):
    """No profile meets the requested approximation factor."""


def default_mode() -> str:
    mode = os.environ.get("FORGE_MODE", "rational").strip().lower()
    if mode not in ("rational", "float"):
        raise ValueError(f"FORGE_MODE must be 'rational' or 'float', got {mode!r}")
    return mode


def leq(a: Number, b: Number, tol: float) -> bool:
    """a <= b up to a tolerance relative to max(1, |b|); exact when tol == 0."""
    if tol == 0:
        return a <= b
    if b == INF:
        return True
    return a <= b + tol * max(1.0, abs(float(b)))


@dataclass(frozen=True)
class Player:
    id: str
    weight: Number

    def __post_init__(self):
        object.__setattr__(self, "weight", _norm(self.weight))


@dataclass(frozen=True)
class Resource:
    id: str
    cost: CostSpec


@dataclass(frozen=True)
class Profile:
    choice: tuple[int, ...]

    def __post_init__(self):
        object.__setattr__(self, "choice", tuple(int(c) for c in self.choice))

    def __iter__(self):
        return iter(self.choice)

    def __len__(self):
        return len(self.choice)

    def __getitem__(self, i):
        return self.choice[i]

    def deviate(self, player: int, strategy: int) -> Profile:
        c = list(self.choice)
        c[player] = strategy
        return Profile(tuple(c))


ProfileLike = Union[Profile, Sequence[int]]


def _as_choice(profile: ProfileLike) -> tuple[int, ...]:
    return profile.choice if isinstance(profile, Profile) else tuple(profile)


@dataclass(frozen=True)
class Game:
    """Players with weights, resources with costs, explicit strategy sets.

    ``strategies[i]`` lists player i's strategies, each a frozenset of
    resource ids.
    """

    players: tuple[Player, ...]
    resources: tuple[Resource, ...]
    strategies: tuple[tuple[frozenset, ...], ...]

    def __post_init__(self):
        players = tuple(self.players)
        resources = tuple(self.resources)
        strategies = tuple(tuple(frozenset(s) for s in strat) for strat in self.strategies)
        object.__setattr__(self, "players", players)
        object.__setattr__(self, "resources", resources)
        object.__setattr__(self, "strategies", strategies)
        if not players:
            raise GameError("game needs at least one player")
        if len({p.id for p in players}) != len(players):
            raise GameError("player ids must be unique")
        if len({r.id for r in resources}) != len(resources):
            raise GameError("resource ids must be unique")
        for p in players:
            if not p.weight > 0:
                raise GameError(f"player {p.id} has nonpositive weight {p.weight}")
        if len(strategies) != len(players):
            raise GameError("need one strategy list per player")
        known = {r.id for r in resources}
        for p, strat in zip(players, strategies):
            if not strat:
                raise GameError(f"player {p.id} has an empty strategy set")
            for s in strat:
                missing = s - known
                if missing:
                    raise GameError(f"player {p.id} strategy uses unknown resources {sorted(missing)}")

    # -- derived quantities --

    @property
    def n(self) -> int:
        return len(self.players)

    @property
    def weights(self) -> tuple[Number, ...]:
        return tuple(p.weight for p in self.players)

    @property
    def w_min(self) -> Number:
        return min(self.weights)

    @property
    def w_max(self) -> Number:
        return max(self.weights)

    @property
    def total_weight(self) -> Number:
        return sum(self.weights)

    W = total_weight

    @property
    def exact(self) -> bool:
        """True when every weight and cost admits exact rational evaluation."""
        return all(isinstance(w, (int, Fraction)) for w in self.weights) and all(
            r.cost.exact for r in self.resources
        )

    @property
    def tol(self) -> float:
        return 0 if self.exact else FLOAT_TOL

    @property
    def profile_count(self) -> int:
        return math.prod(len(s) for s in self.strategies)

    @cached_property
    def resource_index(self) -> dict[str, int]:
        return {r.id: j for j, r in enumerate(self.resources)}

    @cached_property
    def player_index(self) -> dict[str, int]:
        return {p.id: j for j, p in enumerate(self.players)}

    @cached_property
    def engine(self) -> Evaluator:
        return Evaluator(self)

    def player(self, key: int | str) -> int:
        if isinstance(key, str):
            if key not in self.player_index:
                raise GameError(f"unknown player {key!r}")
            return self.player_index[key]
        if not 0 <= key < self.n:
            raise GameError(f"player index {key} out of range")
        return key

    def validate_profile(self, profile: ProfileLike) -> tuple[int, ...]:
        choice = _as_choice(profile)
        if len(choice) != self.n:
            raise GameError(f"profile has {len(choice)} entries for {self.n} players")
        for i, c in enumerate(choice):
            if not 0 <= c < len(self.strategies[i]):
                raise GameError(f"strategy index {c} out of range for player {self.players[i].id}")
        return choice

    def profiles(self, cap: int = PROFILE_CAP) -> Iterator[Profile]:
        """All profiles in lexicographic order of index vectors."""
        for choice in self.choices(cap):
            yield Profile(choice)

    def choices(self, cap: int = PROFILE_CAP) -> Iterator[tuple[int, ...]]:
        count = self.profile_count
        if count > cap:
            raise CapacityError("profile", count, cap)
        return itertools.product(*(range(len(s)) for s in self.strategies))

    def replace_costs(self, costs: Mapping[str, CostSpec]) -> Game:
        res = tuple(Resource(r.id, costs.get(r.id, r.cost)) for r in self.resources)
        return Game(self.players, res, self.strategies)

    # -- serialization --

    def to_dict(self) -> dict:
        return {
            "version": FORMAT_VERSION,
            "players": [{"id": p.id, "weight": _num_out(p.weight)} for p in self.players],
            "resources": [{"id": r.id, "cost": r.cost.to_dict()} for r in self.resources],
            "strategies": {
                p.id: [sorted(s, key=self.resource_index.__getitem__) for s in strat]
                for p, strat in zip(self.players, self.strategies)
            },
        }

    @classmethod
    def from_dict(cls, data: dict, mode: str | None = None) -> Game:
        mode = mode or default_mode()
        if data.get("version", FORMAT_VERSION) != FORMAT_VERSION:
            raise GameError(f"unsupported game format version {data.get('version')}")
        players = tuple(Player(str(p["id"]), parse_number(p["weight"], mode)) for p in data["players"])
        resources = tuple(Resource(str(r["id"]), cost_from_dict(r["cost"], mode)) for r in data["resources"])
        strat = data["strategies"]
        missing = [p.id for p in players if p.id not in strat]
        if missing:
            raise GameError(f"no strategies listed for players {missing}")
        strategies = tuple(tuple(frozenset(map(str, s)) for s in strat[p.id]) for p in players)
        return cls(players, resources, strategies)

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2)

    @classmethod
    def from_json(cls, text: str, mode: str | None = None) -> Game:
        return cls.from_dict(json.loads(text), mode)


def make_game(
    weights: Sequence[Number],
    costs: Mapping[str, CostSpec],
    strategies: Sequence[Sequence[Sequence[str]]],
) -> Game:
    """Shorthand constructor with players named p0, p1, ..."""
    players = tuple(Player(f"p{i}", w) for i, w in enumerate(weights))
    resources = tuple(Resource(k, c) for k, c in costs.items())
    return Game(players, resources, tuple(tuple(frozenset(s) for s in st) for st in strategies))


class Evaluator:
    """Bitmask-based evaluation of a game with per-(resource, player set) caching.

    A profile is represented by one bitmask per resource listing the players
    using it.
    """

    def __init__(self, game: Game):
        self.game = game
        self.weights = game.weights
        self.costs = [r.cost for r in game.resources]
        idx = game.resource_index
        self.strats = [
            [tuple(sorted(idx[e] for e in s)) for s in strat] for strat in game.strategies
        ]
        self._load: dict[int, Number] = {0: Fraction(0) if game.exact else 0.0}
        self._cost: dict[tuple[int, int], Number] = {}

    def load_of(self, mask: int) -> Number:
        v = self._load.get(mask)
        if v is None:
            v = sum(w for i, w in enumerate(self.weights) if mask >> i & 1)
            self._load[mask] = v
        return v

    def cost_at(self, r: int, mask: int) -> Number:
        key = (r, mask)
        v = self._cost.get(key)
        if v is None:
            v = self.costs[r].evaluate(self.load_of(mask))
            self._cost[key] = v
        return v

    def masks(self, choice: Sequence[int]) -> list[int]:
        m = [0] * len(self.costs)
        for i, c in enumerate(choice):
            bit = 1 << i
            for r in self.strats[i][c]:
                m[r] |= bit
        return m

    def player_cost(self, i: int, choice: Sequence[int], masks: Sequence[int]) -> Number:
        return sum(self.cost_at(r, masks[r]) for r in self.strats[i][choice[i]])

    def deviation_cost(self, i: int, strategy: int, masks: Sequence[int]) -> Number:
        bit = 1 << i
        return sum(self.cost_at(r, masks[r] | bit) for r in self.strats[i][strategy])

    def social_cost(self, masks: Sequence[int]) -> Number:
        return sum(self.load_of(m) * self.cost_at(r, m) for r, m in enumerate(masks) if m)

    def approx_factor(self, choice: Sequence[int], masks: Sequence[int] | None = None) -> tuple[Number, int]:
        """Tightest approximation factor and the number of deviations compared."""
        if masks is None:
            masks = self.masks(choice)
        worst: Number = 1
        checked = 0
        for i, strat in enumerate(self.strats):
            current = self.player_cost(i, choice, masks)
            for t in range(len(strat)):
                if t == choice[i]:
                    continue
                checked += 1
                dev = self.deviation_cost(i, t, masks)
                if current == 0:
                    continue
                if dev == 0:
                    return INF, checked
                ratio = current / dev
                if ratio > worst:
                    worst = ratio
        return worst, checked


# -- public operations --------------------------------------------------------


def load(game: Game, profile: ProfileLike, resource: str) -> Number:
    """Total weight of the players using ``resource``."""
    choice = game.validate_profile(profile)
    if resource not in game.resource_index:
        raise GameError(f"unknown resource {resource!r}")
    ev = game.engine
    return ev.load_of(ev.masks(choice)[game.resource_index[resource]])


def player_cost(game: Game, profile: ProfileLike, player: int | str) -> Number:
    choice = game.validate_profile(profile)
    ev = game.engine
    return ev.player_cost(game.player(player), choice, ev.masks(choice))


def social_cost(game: Game, profile: ProfileLike) -> Number:
    """Sum over resources of load times cost, cross-checked against the
    weighted sum of player costs."""
    choice = game.validate_profile(profile)
    ev = game.engine
    masks = ev.masks(choice)
    by_resource = ev.social_cost(masks)
    by_player = sum(w * ev.player_cost(i, choice, masks) for i, w in enumerate(ev.weights))
    if game.tol == 0:
        assert by_resource == by_player, (by_resource, by_player)
    else:
        assert math.isclose(float(by_resource), float(by_player), rel_tol=1e-9, abs_tol=1e-12)
    return by_resource


def optimum(game: Game, cap: int = PROFILE_CAP) -> tuple[Profile, Number]:
    """Minimum social cost; ties go to the lexicographically first profile."""
    ev = game.engine
    best, best_cost = None, None
    for choice in game.choices(cap):
        c = ev.social_cost(ev.masks(choice))
        if best_cost is None or c < best_cost:
            best, best_cost = choice, c
    return Profile(best), best_cost


def approx_factor(game: Game, profile: ProfileLike) -> Number:
    """Smallest alpha for which ``profile`` is an alpha-approximate equilibrium.

    Deviations that reduce a positive cost to zero give ``math.inf``.
    """
    choice = game.validate_profile(profile)
    return game.engine.approx_factor(choice)[0]


def pos_alpha(game: Game, alpha: Number, cap: int = PROFILE_CAP, tol: float | None = None) -> Number:
    """alpha-approximate price of stability by full enumeration."""
    tol = game.tol if tol is None else tol
    ev = game.engine
    opt: Number | None = None
    best: Number | None = None
    for choice in game.choices(cap):
        masks = ev.masks(choice)
        c = ev.social_cost(masks)
        if opt is None or c < opt:
            opt = c
        if best is not None and c >= best:
            continue
        if alpha != INF and not leq(ev.approx_factor(choice, masks)[0], alpha, tol):
            continue
        best = c
    if opt == 0:
        raise ZeroDivisionError("optimum social cost is zero; price of stability undefined")
    if best is None:
        raise EmptyEquilibriumSet(f"no {alpha}-approximate equilibrium exists")
    return best / opt


def reachable_loads(game: Game, cap: int = SUBSET_CAP) -> tuple[Number, ...]:
    """Sorted distinct subset sums of the player weights."""
    if game.n > cap:
        raise CapacityError("subset", 2**game.n, 2**cap)
    sums = {0}
    for w in game.weights:
        sums |= {s + w for s in sums}
    return tuple(sorted(sums))


@dataclass(frozen=True)
class EquilibriumCertificate:
    profile: Profile
    alpha: Number
    beta: Number
    deviations_checked: int
    social_cost: Number = 0
    opt: Number = 0
    claimed_alpha: Number | None = None
    claimed_beta: Number | None = None
    passed: bool = True
    potential: Number | None = None
    notes: tuple[str, ...] = field(default_factory=tuple)

    def to_dict(self) -> dict:
        f = lambda v: None if v is None else (str(v) if v == INF else float(v))  # noqa: E731
        return {
            "profile": list(self.profile.choice),
            "alpha": f(self.alpha),
            "beta": f(self.beta),
            "claimed_alpha": f(self.claimed_alpha),
            "claimed_beta": f(self.claimed_beta),
            "passed": self.passed,
            "social_cost": f(self.social_cost),
            "opt": f(self.opt),
            "potential": f(self.potential),
            "deviations_checked": self.deviations_checked,
            "notes": list(self.notes),
        }
