"""Random instances, batch certification suites and their reports."""

from __future__ import annotations

import csv
import io
import json
import math
import random
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, fields
from fractions import Fraction
from pathlib import Path
from typing import Iterable, Sequence

from forge.bounds import family_bound
from forge.costs import (
    ConcaveAnalytic,
    ConcavePiecewiseLinear,
    Conical,
    Constant,
    CostSpec,
    FairShare,
    Monomial,
    Number,
    Polynomial,
    cost_from_dict,
)
from forge.game import FLOAT_TOL, Game, Player, Resource, leq, optimum
from forge.potential import _minimize, catalog_setup, certify

LN_W = "lnW"


@dataclass(frozen=True)
class Caps:
    """Desk-scale limits for generated instances."""

    n_min: int = 2
    n_max: int = 5
    resources_min: int = 2
    resources_max: int = 6
    strategies_max: int = 4
    profiles_max: int = 1024
    denominator_max: int = 8


@dataclass(frozen=True)
class InstanceSpec:
    family: str
    n_players: int
    n_resources: int
    strategies_per_player: int
    weight_range: tuple[Number, Number] = (1, 3)
    mode: str = "rational"
    d: int = 2
    seed: int = 0
    denominator_max: int = 8

    def __post_init__(self):
        if self.n_players < 1 or self.n_resources < 1 or self.strategies_per_player < 1:
            raise ValueError("counts must be positive")
        lo, hi = self.weight_range
        if not 0 < lo <= hi:
            raise ValueError("weight range must satisfy 0 < lo <= hi")
        if self.family not in ("poly", "concave", "mixed", "fairshare"):
            raise ValueError(f"unknown family {self.family!r}")
        if self.mode not in ("rational", "float"):
            raise ValueError(f"unknown mode {self.mode!r}")


def _rng(seed, *salt) -> random.Random:
    return random.Random(":".join(str(s) for s in (seed, *salt)))


def _ratio(rng: random.Random, lo: int, hi: int, den_max: int = 4) -> Fraction:
    return Fraction(rng.randint(lo, hi), rng.randint(1, den_max))


def _weight(rng: random.Random, lo: Number, hi: Number, mode: str, den_max: int) -> Number:
    if mode == "float":
        return rng.uniform(float(lo), float(hi))
    den = rng.randint(1, den_max)
    a, b = math.ceil(Fraction(lo) * den), math.floor(Fraction(hi) * den)
    if a > b:
        den, a, b = 1, math.ceil(lo), math.floor(hi)
        if a > b:
            return Fraction(lo)
    return Fraction(rng.randint(a, b), den)


def _poly_cost(rng: random.Random, d: int, top: bool) -> CostSpec:
    coeffs = [_ratio(rng, 0, 4) if rng.random() < 0.6 else Fraction(0) for _ in range(d + 1)]
    if top or not any(coeffs[1:]):
        coeffs[d] = _ratio(rng, 1, 4)
    nz = [k for k, c in enumerate(coeffs) if c]
    if len(nz) == 1 and nz[0] >= 1 and rng.random() < 0.5:
        return Monomial(nz[0], coeffs[nz[0]])
    return Polynomial(tuple(coeffs))


def _concave_cost(rng: random.Random) -> CostSpec:
    pick = rng.random()
    if pick < 0.55:
        func = rng.choice(["sqrt", "log1p", "affine"])
        return ConcaveAnalytic(func, _ratio(rng, 1, 6), _ratio(rng, 0, 3) if rng.random() < 0.5 else Fraction(0))
    if pick < 0.9:
        k = rng.randint(1, 3)
        slopes = sorted((_ratio(rng, 0, 6) for _ in range(k)), reverse=True)
        slopes.insert(0, max([Fraction(1, 2), *slopes]))
        x, y = Fraction(0), _ratio(rng, 0, 2)
        pts = [(x, y)]
        for s in slopes:
            dx = _ratio(rng, 1, 6, 2)
            x, y = x + dx, y + s * dx
            pts.append((x, y))
        return ConcavePiecewiseLinear(tuple(pts))
    return Constant(_ratio(rng, 1, 5))


def _cost(rng: random.Random, family: str, d: int, top: bool) -> CostSpec:
    if family == "poly":
        return _poly_cost(rng, d, top)
    if family == "concave":
        return _concave_cost(rng)
    if family == "mixed":
        terms = []
        if top or rng.random() < 0.8:
            terms.append((_ratio(rng, 1, 3), _poly_cost(rng, d, top)))
        if not terms or rng.random() < 0.8:
            terms.append((_ratio(rng, 1, 3), _concave_cost(rng)))
        return Conical(tuple(terms))
    if family == "fairshare":
        return FairShare(_ratio(rng, 1, 10, 2), 1)
    raise ValueError(f"unknown family {family!r}")


def _strategies(rng: random.Random, resources: Sequence[str], k: int) -> tuple[frozenset, ...]:
    out: list[frozenset] = []
    m = len(resources)
    for _ in range(20 * k):
        if len(out) == k:
            break
        size = rng.randint(1, min(3, m))
        s = frozenset(rng.sample(list(resources), size))
        if s not in out:
            out.append(s)
    return tuple(out)


def generate_instance(spec: InstanceSpec) -> Game:
    """Deterministic random game for ``spec``; fair-share weights are rescaled
    so that the smallest weight is 1."""
    rng = _rng(spec.seed, spec.family, spec.n_players, spec.n_resources, spec.strategies_per_player)
    lo, hi = spec.weight_range
    weights = [_weight(rng, lo, hi, spec.mode, spec.denominator_max) for _ in range(spec.n_players)]
    if spec.family == "fairshare":
        m = min(weights)
        weights = [w / m for w in weights]
    rids = [f"e{j}" for j in range(spec.n_resources)]
    costs = [_cost(rng, spec.family, spec.d, top=(j == 0)) for j in range(spec.n_resources)]
    if spec.mode == "float":
        costs = [_floatify(c) for c in costs]
    players = tuple(Player(f"p{i}", w) for i, w in enumerate(weights))
    resources = tuple(Resource(r, c) for r, c in zip(rids, costs))
    strategies = tuple(_strategies(rng, rids, spec.strategies_per_player) for _ in players)
    return Game(players, resources, strategies)


def _floatify(cost: CostSpec) -> CostSpec:
    return cost_from_dict(cost.to_dict(), "float")


def draw_spec(family: str, d: int, seed, instance_id: int, caps: Caps, mode: str) -> InstanceSpec:
    """Per-instance sizes drawn within the caps."""
    rng = _rng(seed, family, d, instance_id, "sizes")
    n_min = max(caps.n_min, 3) if family == "fairshare" else caps.n_min
    n = rng.randint(n_min, caps.n_max)
    m = rng.randint(caps.resources_min, caps.resources_max)
    k_max = caps.strategies_max
    while k_max > 1 and k_max**n > caps.profiles_max:
        k_max -= 1
    k = rng.randint(1 if n > 2 else 2, max(2, k_max))
    wr = (1, 5) if family == "fairshare" else (Fraction(1, 2), 3)
    return InstanceSpec(family, n, m, k, wr, mode, d, hash_seed(seed, family, d, instance_id), caps.denominator_max)


def hash_seed(*parts) -> int:
    return _rng(*parts).getrandbits(32)


# -- suites --------------------------------------------------------------------------


@dataclass
class ExperimentRow:
    family: str
    d: int
    instance_id: int
    seed: int
    n_players: int
    n_profiles: int
    lam: float
    claimed_alpha: float
    claimed_beta: float
    certified_alpha: float
    certified_beta: float
    phi: float
    opt: float
    passed: bool
    runtime_s: float = 0.0
    note: str = ""

    def __post_init__(self):
        if self.passed:
            assert leq(self.certified_alpha, self.claimed_alpha, FLOAT_TOL), (
                "row marked as passed with certified alpha above the claim"
            )
            assert leq(self.certified_beta, self.claimed_beta, FLOAT_TOL)


CSV_FIELDS = [f.name for f in fields(ExperimentRow)]


def parse_lambda_grid(text: str | Sequence) -> list:
    """Decimal lambdas are kept exact; the token ``lnW`` means ln of the total weight."""
    items = text.split(",") if isinstance(text, str) else list(text)
    out = []
    for item in items:
        item = str(item).strip()
        if not item:
            continue
        if item.replace(" ", "").lower() in ("lnw", "ln(w)"):
            out.append(LN_W)
        else:
            out.append(Fraction(item))
    return out


def _run_instance(args) -> list[ExperimentRow]:
    family, d, lambda_grid, instance_id, seed, caps, mode, failure_dir = args
    spec = draw_spec(family, d, seed, instance_id, caps, mode)
    rows = []
    try:
        game = generate_instance(spec)
    except Exception as exc:  # recorded, the suite continues
        return [_error_row(family, d, instance_id, spec.seed, lam, exc) for lam in lambda_grid]
    t0 = time.perf_counter()
    try:
        _, opt = optimum(game, caps.profiles_max)
    except Exception as exc:
        return [_error_row(family, d, instance_id, spec.seed, lam, exc) for lam in lambda_grid]
    setup_time = time.perf_counter() - t0
    for lam_token in lambda_grid:
        t0 = time.perf_counter()
        lam = math.log(float(game.total_weight)) if lam_token == LN_W else lam_token
        try:
            claimed = family_bound(family, lam, d, game.w_max, game.total_weight)
            g2, config = catalog_setup(game, lam, family, d)
            profile, phi = _minimize(g2, config, caps.profiles_max)
            cert = certify(game, profile, claimed[0], claimed[1], opt=opt)
            note = ";".join(cert.notes)
            if not cert.passed and failure_dir:
                note = _dump_failure(failure_dir, family, d, instance_id, lam, game, cert)
            rows.append(
                ExperimentRow(
                    family, d, instance_id, spec.seed, game.n, game.profile_count, float(lam),
                    float(claimed[0]), float(claimed[1]), float(cert.alpha), float(cert.beta),
                    float(phi), float(opt), cert.passed,
                    round(time.perf_counter() - t0 + setup_time, 6), note,
                )
            )
        except Exception as exc:
            rows.append(_error_row(family, d, instance_id, spec.seed, lam, exc))
    return rows


def _error_row(family, d, instance_id, seed, lam, exc) -> ExperimentRow:
    lam_f = float("nan") if lam == LN_W else float(lam)
    nan = float("nan")
    return ExperimentRow(family, d, instance_id, seed, 0, 0, lam_f, nan, nan, nan, nan, nan, nan, False, 0.0,
                         f"error: {type(exc).__name__}: {exc}")


def _dump_failure(directory, family, d, instance_id, lam, game, cert) -> str:
    path = Path(directory)
    path.mkdir(parents=True, exist_ok=True)
    target = path / f"{family}_d{d}_i{instance_id}_lam{float(lam):.4f}.json"
    target.write_text(json.dumps({"game": game.to_dict(), "certificate": cert.to_dict()}, indent=2))
    return f"failure witness: {target}"


def run_suite(
    family: str,
    lambda_grid: Sequence,
    instance_count: int,
    caps: Caps = Caps(),
    d: int = 2,
    seed: int = 0,
    mode: str = "rational",
    jobs: int = 1,
    failure_dir: str | None = None,
) -> list[ExperimentRow]:
    """Certify the exhaustive potential minimizer of ``instance_count`` random
    games at every lambda against the family's claimed bound."""
    if isinstance(lambda_grid, str):
        lambda_grid = parse_lambda_grid(lambda_grid)
    if not lambda_grid:
        raise ValueError("empty lambda grid")
    if family in ("concave", "fairshare"):
        d = 1  # the degree plays no role for these families
    tasks = [(family, d, list(lambda_grid), k, seed, caps, mode, failure_dir) for k in range(instance_count)]
    if jobs > 1:
        with ProcessPoolExecutor(jobs) as pool:
            chunks = list(pool.map(_run_instance, tasks, chunksize=max(1, instance_count // (4 * jobs))))
    else:
        chunks = [_run_instance(t) for t in tasks]
    rows = [r for chunk in chunks for r in chunk]
    rows.sort(key=lambda r: (r.instance_id, r.lam))
    return rows


# -- reports ---------------------------------------------------------------------------


def _fmt(v) -> str:
    if isinstance(v, bool):
        return "1" if v else "0"
    if isinstance(v, float):
        return repr(v)
    return str(v)


def rows_to_csv(rows: Iterable[ExperimentRow]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(CSV_FIELDS)
    for r in rows:
        w.writerow([_fmt(getattr(r, f)) for f in CSV_FIELDS])
    return buf.getvalue()


def rows_from_csv(text: str) -> list[ExperimentRow]:
    out = []
    for rec in csv.DictReader(io.StringIO(text)):
        kw = {}
        for f in fields(ExperimentRow):
            v = rec[f.name]
            if f.type in ("int",):
                kw[f.name] = int(v)
            elif f.type == "float":
                kw[f.name] = float(v)
            elif f.type == "bool":
                kw[f.name] = v == "1"
            else:
                kw[f.name] = v
        out.append(ExperimentRow(**kw))
    return out


def summarize(rows: Sequence[ExperimentRow]) -> dict:
    """Pass rates and worst slacks (certified minus claimed) per family and degree."""
    groups: dict[str, list[ExperimentRow]] = {}
    for r in rows:
        key = r.family if r.family in ("concave", "fairshare") else f"{r.family}(d={r.d})"
        groups.setdefault(key, []).append(r)
    out = {}
    for key, rs in groups.items():
        ok = [r for r in rs if not math.isnan(r.certified_alpha)]
        out[key] = {
            "rows": len(rs),
            "passed": sum(r.passed for r in rs),
            "pass_rate": (sum(r.passed for r in rs) / len(rs)) if rs else float("nan"),
            "errors": len(rs) - len(ok),
            "max_alpha_slack": max((r.certified_alpha - r.claimed_alpha for r in ok), default=float("nan")),
            "max_beta_slack": max((r.certified_beta - r.claimed_beta for r in ok), default=float("nan")),
            "max_certified_alpha": max((r.certified_alpha for r in ok), default=float("nan")),
            "max_certified_beta": max((r.certified_beta for r in ok), default=float("nan")),
        }
    return out


def summary_text(rows: Sequence[ExperimentRow]) -> str:
    lines = [f"{'group':<14}{'rows':>6}{'pass':>6}{'rate':>8}{'err':>5}{'max a-slack':>14}{'max b-slack':>14}"]
    for key, s in summarize(rows).items():
        lines.append(
            f"{key:<14}{s['rows']:>6}{s['passed']:>6}{s['pass_rate']:>8.3f}{s['errors']:>5}"
            f"{s['max_alpha_slack']:>14.6g}{s['max_beta_slack']:>14.6g}"
        )
    if len(lines) == 1:
        lines.append("(no rows)")
    return "\n".join(lines) + "\n"


def curve_points(rows: Sequence[ExperimentRow], samples: int = 41) -> str:
    """CSV of the claimed trade-off curves for the families present in ``rows``."""
    from forge.bounds import curve

    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["family", "lambda", "alpha", "beta"])
    seen = set()
    for r in rows:
        key = (r.family, r.d)
        if key in seen or r.family == "fairshare":
            continue
        seen.add(key)
        c = curve(r.family, d=r.d)
        for lam, a, b in c.sample(samples):
            w.writerow([c.family, repr(lam), repr(a), repr(b)])
    return buf.getvalue()


def emit_report(rows: Sequence[ExperimentRow], format: str = "csv") -> str:
    """``csv`` rows, ``summary`` text, or ``plot-data`` curve CSV."""
    if format == "csv":
        return rows_to_csv(rows)
    if format == "summary":
        return summary_text(rows)
    if format == "plot-data":
        return curve_points(rows)
    raise ValueError(f"unknown report format {format!r}")


def write_report(rows: Sequence[ExperimentRow], out_dir: str | Path, figures: bool = True) -> list[Path]:
    """Write rows, summary, curve data and (optionally) figures into ``out_dir``."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    written = []
    for name, fmt in (("results.csv", "csv"), ("summary.txt", "summary"), ("curves.csv", "plot-data")):
        p = out / name
        p.write_text(emit_report(rows, fmt), encoding="utf-8")
        written.append(p)
    if figures:
        from forge import plots

        written += plots.suite_figures(rows, out)
    return written


__all__ = [
    "Caps",
    "ExperimentRow",
    "InstanceSpec",
    "draw_spec",
    "emit_report",
    "generate_instance",
    "parse_lambda_grid",
    "rows_from_csv",
    "rows_to_csv",
    "run_suite",
    "summarize",
    "summary_text",
    "write_report",
]
