"""Cost-function catalog.

Every cost is an immutable description with closed-form evaluation and
integration.  Polynomial-type costs keep ``Fraction`` inputs exact; the
analytic concave kinds and fair sharing fall back to floats.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Callable, Sequence, Union

import numpy as np

Number = Union[int, float, Fraction]

QUAD_TOL = 1e-10
GRID_POINTS = 1024

NONDECREASING = "nondecreasing"
NONINCREASING = "nonincreasing"
CONSTANT = "constant"


class CostError(ValueError):
    """Invalid cost specification or evaluation outside the domain."""


def _check_x(x: Number) -> None:
    if x < 0:
        raise CostError(f"cost evaluated at negative load {x}")


def _check_interval(a: Number, b: Number) -> None:
    if a < 0:
        raise CostError(f"integration bound {a} is negative")
    if a > b:
        raise CostError(f"empty integration interval [{a}, {b}]")


def _norm(v):
    """Promote ints to Fraction so exact arithmetic never degrades to float division."""
    if isinstance(v, int) and not isinstance(v, bool):
        return Fraction(v)
    return v


def _span_power(a: np.ndarray, h: np.ndarray, n: int) -> np.ndarray:
    """(a+h)**n - a**n as a sum of nonnegative binomial terms."""
    return sum(math.comb(n, j) * a ** (n - j) * h**j for j in range(1, n + 1))


def _power_difference(b: Number, a: Number, n: int) -> Number:
    """b**n - a**n, factored so floats do not cancel catastrophically."""
    if isinstance(a, (Fraction, int)) and isinstance(b, (Fraction, int)):
        return b**n - a**n
    return (b - a) * sum(b ** (n - 1 - j) * a**j for j in range(n))


class CostSpec:
    """Base class for catalog members.

    Subclasses provide ``evaluate``, ``integrate``, ``monotonicity`` (one of
    the module constants or ``None``) and ``breakpoints``.
    """

    exact = False
    kind = ""

    def __call__(self, x: Number) -> Number:
        return self.evaluate(x)

    def evaluate(self, x: Number) -> Number:
        raise NotImplementedError

    def integrate(self, a: Number, b: Number) -> Number:
        raise NotImplementedError

    @property
    def monotonicity(self) -> str | None:
        return None

    @property
    def breakpoints(self) -> tuple[Number, ...]:
        return ()

    @property
    def is_concave(self) -> bool:
        """True for catalog members known to be nondecreasing and concave."""
        return False

    def evaluate_array(self, xs: np.ndarray) -> np.ndarray:
        """Float evaluation on an array of loads."""
        return np.array([float(self.evaluate(x)) for x in np.asarray(xs, dtype=float).ravel()]).reshape(
            np.shape(xs)
        )

    def integrate_array(self, a: np.ndarray, b: np.ndarray) -> np.ndarray:
        a, b = np.broadcast_arrays(np.asarray(a, dtype=float), np.asarray(b, dtype=float))
        out = [float(self.integrate(lo, hi)) for lo, hi in zip(a.ravel(), b.ravel())]
        return np.array(out).reshape(a.shape)

    def integrate_span_array(self, a: np.ndarray, h: np.ndarray) -> np.ndarray:
        """Integral over [a, a + h]; overridden where the width must stay exact."""
        a = np.asarray(a, dtype=float)
        return self.integrate_array(a, a + np.asarray(h, dtype=float))

    def mean_span_array(self, a: np.ndarray, h: np.ndarray) -> np.ndarray:
        """Average value over [a, a + h]."""
        return self.integrate_span_array(a, h) / np.asarray(h, dtype=float)

    def scaled(self, k: Number) -> CostSpec:
        return Conical(((k, self),))

    def to_dict(self) -> dict:
        raise NotImplementedError


def _num_out(v: Number) -> str:
    if isinstance(v, Fraction):
        return str(v.numerator) if v.denominator == 1 else f"{v.numerator}/{v.denominator}"
    if isinstance(v, float):
        return repr(v)
    return str(v)


@dataclass(frozen=True)
class Constant(CostSpec):
    value: Number

    kind = "constant"
    exact = True

    def __post_init__(self):
        object.__setattr__(self, "value", _norm(self.value))
        if self.value < 0:
            raise CostError("constant cost must be nonnegative")

    def evaluate(self, x):
        _check_x(x)
        return self.value

    def integrate(self, a, b):
        _check_interval(a, b)
        return self.value * (b - a)

    def evaluate_array(self, xs):
        return np.full(np.shape(xs), float(self.value))

    def integrate_array(self, a, b):
        return float(self.value) * (np.asarray(b, dtype=float) - np.asarray(a, dtype=float))

    def integrate_span_array(self, a, h):
        return float(self.value) * np.broadcast_to(np.asarray(h, dtype=float), np.shape(a)).copy()

    def mean_span_array(self, a, h):
        return np.full(np.broadcast_shapes(np.shape(a), np.shape(h)), float(self.value))

    @property
    def monotonicity(self):
        return CONSTANT

    @property
    def is_concave(self):
        return True

    def to_dict(self):
        return {"kind": "constant", "value": _num_out(self.value)}


@dataclass(frozen=True)
class Monomial(CostSpec):
    degree: int
    coeff: Number = 1

    kind = "monomial"
    exact = True

    def __post_init__(self):
        object.__setattr__(self, "coeff", _norm(self.coeff))
        if not isinstance(self.degree, int) or self.degree < 1:
            raise CostError("monomial degree must be an integer >= 1")
        if self.coeff < 0:
            raise CostError("monomial coefficient must be nonnegative")

    def evaluate(self, x):
        _check_x(x)
        return self.coeff * x**self.degree

    def integrate(self, a, b):
        _check_interval(a, b)
        k = self.degree + 1
        return self.coeff * _power_difference(b, a, k) / k

    def evaluate_array(self, xs):
        return float(self.coeff) * np.asarray(xs, dtype=float) ** self.degree

    def integrate_array(self, a, b):
        k = self.degree + 1
        a, b = np.asarray(a, dtype=float), np.asarray(b, dtype=float)
        return float(self.coeff) * _power_difference(b, a, k) / k

    def integrate_span_array(self, a, h):
        k = self.degree + 1
        return float(self.coeff) * _span_power(np.asarray(a, dtype=float), np.asarray(h, dtype=float), k) / k

    @property
    def monotonicity(self):
        return NONDECREASING

    @property
    def is_concave(self):
        return self.degree == 1

    def to_dict(self):
        return {"kind": "monomial", "degree": self.degree, "coeff": _num_out(self.coeff)}


@dataclass(frozen=True)
class Polynomial(CostSpec):
    """Sum of coeffs[k] * x**k with nonnegative coefficients."""

    coeffs: tuple[Number, ...]

    kind = "polynomial"
    exact = True

    def __post_init__(self):
        object.__setattr__(self, "coeffs", tuple(_norm(c) for c in self.coeffs))
        if not self.coeffs:
            raise CostError("polynomial needs at least one coefficient")
        if any(c < 0 for c in self.coeffs):
            raise CostError("polynomial coefficients must be nonnegative")

    @property
    def degree(self) -> int:
        nz = [k for k, c in enumerate(self.coeffs) if c != 0]
        return nz[-1] if nz else 0

    def evaluate(self, x):
        _check_x(x)
        acc = 0
        for c in reversed(self.coeffs):
            acc = acc * x + c
        return acc

    def integrate(self, a, b):
        _check_interval(a, b)
        return sum(
            c * _power_difference(b, a, k + 1) / (k + 1)
            for k, c in enumerate(self.coeffs)
            if c != 0
        )

    def evaluate_array(self, xs):
        xs = np.asarray(xs, dtype=float)
        acc = np.zeros_like(xs)
        for c in reversed(self.coeffs):
            acc = acc * xs + float(c)
        return acc

    def integrate_array(self, a, b):
        a, b = np.asarray(a, dtype=float), np.asarray(b, dtype=float)
        acc = np.zeros(np.broadcast(a, b).shape)
        for k, c in enumerate(self.coeffs):
            if c != 0:
                acc = acc + float(c) * _power_difference(b, a, k + 1) / (k + 1)
        return acc

    def integrate_span_array(self, a, h):
        a, h = np.asarray(a, dtype=float), np.asarray(h, dtype=float)
        acc = np.zeros(np.broadcast(a, h).shape)
        for k, c in enumerate(self.coeffs):
            if c != 0:
                acc = acc + float(c) * _span_power(a, h, k + 1) / (k + 1)
        return acc

    @property
    def monotonicity(self):
        return CONSTANT if self.degree == 0 else NONDECREASING

    @property
    def is_concave(self):
        return self.degree <= 1

    def to_dict(self):
        return {"kind": "polynomial", "coeffs": [_num_out(c) for c in self.coeffs]}


@dataclass(frozen=True)
class ConcavePiecewiseLinear(CostSpec):
    """Linear interpolation through ``points``, starting at x=0.

    Beyond the last point the final slope is extended.  Slopes must be
    nonnegative and nonincreasing.
    """

    points: tuple[tuple[Number, Number], ...]

    kind = "concave_pwl"
    exact = True

    def __post_init__(self):
        pts = tuple((_norm(x), _norm(y)) for x, y in self.points)
        object.__setattr__(self, "points", pts)
        if len(pts) < 2:
            raise CostError("piecewise-linear cost needs at least two points")
        if pts[0][0] != 0:
            raise CostError("first breakpoint must be at x=0")
        if pts[0][1] < 0:
            raise CostError("piecewise-linear cost must be nonnegative")
        slopes = []
        for (x0, y0), (x1, y1) in zip(pts, pts[1:]):
            if x1 <= x0:
                raise CostError("breakpoints must be strictly increasing")
            slopes.append((y1 - y0) / (x1 - x0))
        if any(s < 0 for s in slopes):
            raise CostError("slopes must be nonnegative")
        if any(s1 > s0 for s0, s1 in zip(slopes, slopes[1:])):
            raise CostError("slopes must be nonincreasing (concavity)")
        object.__setattr__(self, "_slopes", tuple(slopes))

    def _segment(self, x):
        pts = self.points
        for j in range(len(pts) - 1):
            if x <= pts[j + 1][0]:
                return j
        return len(pts) - 2

    def evaluate(self, x):
        _check_x(x)
        j = self._segment(x)
        x0, y0 = self.points[j]
        return y0 + self._slopes[j] * (x - x0)

    def _antiderivative(self, x):
        acc = 0
        pts = self.points
        j_end = self._segment(x)
        for j in range(j_end):
            (x0, y0), (x1, y1) = pts[j], pts[j + 1]
            acc += (y0 + y1) * (x1 - x0) / 2
        x0, y0 = pts[j_end]
        acc += (y0 + self.evaluate(x)) * (x - x0) / 2
        return acc

    def integrate(self, a, b):
        _check_interval(a, b)
        return self._antiderivative(b) - self._antiderivative(a)

    @property
    def monotonicity(self):
        if all(s == 0 for s in self._slopes):
            return CONSTANT
        return NONDECREASING

    @property
    def breakpoints(self):
        return tuple(x for x, _ in self.points[1:-1])

    @property
    def is_concave(self):
        return True

    def to_dict(self):
        return {
            "kind": "concave_pwl",
            "points": [[_num_out(x), _num_out(y)] for x, y in self.points],
        }


_ANALYTIC = {
    # name: (g, antiderivative G with G(0)=0)
    "sqrt": (math.sqrt, lambda x: 2.0 * x * math.sqrt(x) / 3.0),
    "log1p": (math.log1p, lambda x: (1.0 + x) * math.log1p(x) - x),
    "affine": (lambda x: x, lambda x: x * x / 2),
}


@dataclass(frozen=True)
class ConcaveAnalytic(CostSpec):
    """offset + scale * g(x) for g in {sqrt, log1p, affine}."""

    func: str
    scale: Number = 1
    offset: Number = 0

    kind = "concave"

    def __post_init__(self):
        object.__setattr__(self, "scale", _norm(self.scale))
        object.__setattr__(self, "offset", _norm(self.offset))
        if self.func not in _ANALYTIC:
            raise CostError(f"unknown concave kind {self.func!r}; expected one of {sorted(_ANALYTIC)}")
        if self.scale < 0 or self.offset < 0:
            raise CostError("concave scale and offset must be nonnegative")

    @property
    def exact(self):
        return self.func == "affine"

    def evaluate(self, x):
        _check_x(x)
        g = _ANALYTIC[self.func][0]
        return self.offset + self.scale * g(x)

    def integrate(self, a, b):
        _check_interval(a, b)
        G = _ANALYTIC[self.func][1]
        return self.offset * (b - a) + self.scale * (G(b) - G(a))

    def evaluate_array(self, xs):
        xs = np.asarray(xs, dtype=float)
        g = {"sqrt": np.sqrt, "log1p": np.log1p, "affine": lambda v: v}[self.func]
        return float(self.offset) + float(self.scale) * g(xs)

    def integrate_array(self, a, b):
        a, b = np.asarray(a, dtype=float), np.asarray(b, dtype=float)
        G = {
            "sqrt": lambda v: 2.0 * v * np.sqrt(v) / 3.0,
            "log1p": lambda v: (1.0 + v) * np.log1p(v) - v,
            "affine": lambda v: v * v / 2,
        }[self.func]
        return float(self.offset) * (b - a) + float(self.scale) * (G(b) - G(a))

    @property
    def monotonicity(self):
        return CONSTANT if self.scale == 0 else NONDECREASING

    @property
    def is_concave(self):
        return True

    def to_dict(self):
        return {
            "kind": "concave",
            "func": self.func,
            "scale": _num_out(self.scale),
            "offset": _num_out(self.offset),
        }


@dataclass(frozen=True)
class FairShare(CostSpec):
    """a/x on [1, inf), extended by the constant cap*a on [0, 1)."""

    a: Number = 1
    cap: Number = 1

    kind = "fairshare"

    def __post_init__(self):
        object.__setattr__(self, "a", _norm(self.a))
        object.__setattr__(self, "cap", _norm(self.cap))
        if self.a <= 0:
            raise CostError("fair-share base cost a must be positive")
        if self.cap < 1:
            raise CostError("fair-share cap must be >= 1")

    def evaluate(self, x):
        _check_x(x)
        if x < 1:
            return self.cap * self.a
        return self.a / x

    def integrate(self, a, b):
        _check_interval(a, b)
        low = self.cap * self.a * (min(b, 1) - min(a, 1))
        high = self.a * (math.log(max(b, 1)) - math.log(max(a, 1)))
        return low + high

    def evaluate_array(self, xs):
        xs = np.asarray(xs, dtype=float)
        a = float(self.a)
        with np.errstate(divide="ignore"):
            return np.where(xs < 1, float(self.cap) * a, a / np.maximum(xs, 1.0))

    def integrate_array(self, lo, hi):
        lo, hi = np.asarray(lo, dtype=float), np.asarray(hi, dtype=float)
        a = float(self.a)
        low = float(self.cap) * a * (np.minimum(hi, 1) - np.minimum(lo, 1))
        return low + a * (np.log(np.maximum(hi, 1)) - np.log(np.maximum(lo, 1)))

    @property
    def monotonicity(self):
        return NONINCREASING

    @property
    def breakpoints(self):
        return (1,)

    def with_cap(self, cap: Number) -> FairShare:
        return FairShare(self.a, cap)

    def to_dict(self):
        return {"kind": "fairshare", "a": _num_out(self.a), "cap": _num_out(self.cap)}


@dataclass(frozen=True)
class Conical(CostSpec):
    """Nonnegative combination sum_j coeff_j * cost_j."""

    terms: tuple[tuple[Number, CostSpec], ...]

    kind = "conical"

    def __post_init__(self):
        terms = tuple((_norm(k), c) for k, c in self.terms)
        object.__setattr__(self, "terms", terms)
        if not terms:
            raise CostError("conical combination needs at least one term")
        if any(k < 0 for k, _ in terms):
            raise CostError("conical coefficients must be nonnegative")

    @property
    def exact(self):
        return all(c.exact for _, c in self.terms)

    def evaluate(self, x):
        _check_x(x)
        return sum(k * c.evaluate(x) for k, c in self.terms)

    def integrate(self, a, b):
        _check_interval(a, b)
        return sum(k * c.integrate(a, b) for k, c in self.terms)

    def evaluate_array(self, xs):
        return sum(float(k) * c.evaluate_array(xs) for k, c in self.terms)

    def integrate_array(self, a, b):
        return sum(float(k) * c.integrate_array(a, b) for k, c in self.terms)

    def integrate_span_array(self, a, h):
        return sum(float(k) * c.integrate_span_array(a, h) for k, c in self.terms)

    def mean_span_array(self, a, h):
        return sum(float(k) * c.mean_span_array(a, h) for k, c in self.terms)

    @property
    def monotonicity(self):
        kinds = {c.monotonicity for k, c in self.terms if k != 0} - {CONSTANT}
        if not kinds:
            return CONSTANT
        if len(kinds) == 1:
            return kinds.pop()
        return None

    @property
    def breakpoints(self):
        return tuple(sorted({b for _, c in self.terms for b in c.breakpoints}))

    @property
    def is_concave(self):
        return all(c.is_concave for _, c in self.terms)

    def to_dict(self):
        return {
            "kind": "conical",
            "terms": [{"coeff": _num_out(k), "cost": c.to_dict()} for k, c in self.terms],
        }


# -- numeric helpers ---------------------------------------------------------


def adaptive_simpson(
    f: Callable[[float], float],
    a: float,
    b: float,
    tol: float = QUAD_TOL,
    breakpoints: Sequence[float] = (),
    max_depth: int = 60,
) -> float:
    """Interval-halving Simpson quadrature, split at ``breakpoints``."""
    a, b = float(a), float(b)
    if a > b:
        raise CostError(f"empty integration interval [{a}, {b}]")
    cuts = [a] + sorted(float(p) for p in breakpoints if a < p < b) + [b]
    total = 0.0
    for lo, hi in zip(cuts, cuts[1:]):
        total += _simpson_piece(f, lo, hi, tol * (hi - lo) / max(b - a, 1e-300), max_depth)
    return total


def _simpson_piece(f, a, b, tol, max_depth):
    if b == a:
        return 0.0
    # Sample interior points only, so one-sided pieces at discontinuities are right.
    eps = (b - a) * 1e-15
    fa, fb = f(a + eps), f(b - eps)
    m = 0.5 * (a + b)
    fm = f(m)
    whole = (b - a) * (fa + 4 * fm + fb) / 6
    return _simpson_rec(f, a, b, fa, fm, fb, whole, tol, max_depth)


def _simpson_rec(f, a, b, fa, fm, fb, whole, tol, depth):
    m = 0.5 * (a + b)
    lm, rm = 0.5 * (a + m), 0.5 * (m + b)
    flm, frm = f(lm), f(rm)
    left = (m - a) * (fa + 4 * flm + fm) / 6
    right = (b - m) * (fm + 4 * frm + fb) / 6
    delta = left + right - whole
    if depth <= 0 or abs(delta) <= 15 * tol:
        return left + right + delta / 15
    return _simpson_rec(f, a, m, fa, flm, fm, left, tol / 2, depth - 1) + _simpson_rec(
        f, m, b, fm, frm, fb, right, tol / 2, depth - 1
    )


def quadrature(cost: CostSpec, a: Number, b: Number, tol: float = QUAD_TOL) -> float:
    _check_interval(a, b)
    return adaptive_simpson(lambda t: float(cost.evaluate(t)), a, b, tol, cost.breakpoints)


def evaluate(cost: CostSpec, x: Number) -> Number:
    return cost.evaluate(x)


def integrate(cost: CostSpec, a: Number, b: Number) -> Number:
    return cost.integrate(a, b)


def _grid(lo: Number, hi: Number, extra: Sequence[Number] = (), n: int = GRID_POINTS) -> list:
    lo_f, hi_f = float(lo), float(hi)
    pts = {lo, hi}
    if hi_f > lo_f:
        step = (hi_f - lo_f) / (n - 1)
        pts.update(lo_f + j * step for j in range(1, n - 1))
    pts.update(p for p in extra if lo < p < hi)
    return sorted(pts)


def range_extrema(cost: CostSpec, w_min: Number, x: Number) -> tuple[Number, Number]:
    """(min, max) of the cost over [w_min, x]."""
    if w_min <= 0:
        raise CostError("w_min must be positive")
    if x < w_min:
        raise CostError(f"empty interval [{w_min}, {x}]")
    mono = cost.monotonicity
    if mono == CONSTANT:
        v = cost.evaluate(x)
        return v, v
    if mono == NONDECREASING:
        return cost.evaluate(w_min), cost.evaluate(x)
    if mono == NONINCREASING:
        return cost.evaluate(x), cost.evaluate(w_min)
    vals = [cost.evaluate(t) for t in _grid(w_min, x, cost.breakpoints)]
    return min(vals), max(vals)


def is_nondecreasing(
    cost: CostSpec, domain: tuple[Number, Number], tol: float = 1e-12
) -> tuple[bool, tuple[Number, Number] | None]:
    """Whether the cost is nondecreasing on ``domain``; on failure a witness x < y."""
    lo, hi = domain
    mono = cost.monotonicity
    if mono in (CONSTANT, NONDECREASING) or hi <= lo:
        return True, None
    if isinstance(cost, FairShare):
        if lo <= 1 < hi:
            y = 2 if hi >= 2 else hi
            return False, (1, y)
        if lo >= 1:
            return False, (lo, hi)
        return True, None
    grid = _grid(lo, hi, cost.breakpoints)
    vals = [cost.evaluate(t) for t in grid]
    for j in range(len(grid) - 1):
        if vals[j] > vals[j + 1] + tol * max(1.0, abs(float(vals[j + 1]))):
            return False, (grid[j], grid[j + 1])
    return True, None


# -- serialization -----------------------------------------------------------


def parse_number(value, mode: str = "rational") -> Number:
    """Parse a decimal/fraction string (or JSON number) in the given mode."""
    if mode == "rational":
        if isinstance(value, float):
            return Fraction(repr(value))
        return Fraction(value) if not isinstance(value, Fraction) else value
    if mode == "float":
        return float(Fraction(value)) if isinstance(value, str) and "/" in value else float(value)
    raise ValueError(f"unknown arithmetic mode {mode!r}")


def cost_from_dict(data: dict, mode: str = "rational") -> CostSpec:
    num = lambda v: parse_number(v, mode)  # noqa: E731
    kind = data.get("kind")
    if kind == "constant":
        return Constant(num(data["value"]))
    if kind == "monomial":
        return Monomial(int(data["degree"]), num(data.get("coeff", 1)))
    if kind == "polynomial":
        return Polynomial(tuple(num(c) for c in data["coeffs"]))
    if kind == "concave_pwl":
        return ConcavePiecewiseLinear(tuple((num(x), num(y)) for x, y in data["points"]))
    if kind == "concave":
        return ConcaveAnalytic(data["func"], num(data.get("scale", 1)), num(data.get("offset", 0)))
    if kind == "fairshare":
        return FairShare(num(data.get("a", 1)), num(data.get("cap", 1)))
    if kind == "conical":
        return Conical(tuple((num(t["coeff"]), cost_from_dict(t["cost"], mode)) for t in data["terms"]))
    raise CostError(f"unknown cost kind {kind!r}")
