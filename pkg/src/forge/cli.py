"""Command line entry point: ``forge gen | suite | report | goodness | potential | bounds``."""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from forge.bounds import FAMILIES, curve
from forge.costs import cost_from_dict, parse_number
from forge.experiments import (
    Caps,
    InstanceSpec,
    emit_report,
    generate_instance,
    parse_lambda_grid,
    rows_from_csv,
    run_suite,
    summary_text,
    write_report,
)
from forge.game import Game, default_mode
from forge.goodness import GoodnessParams, WeightDomain, check_goodness, fit_goodness, scan_xi
from forge.potential import (
    catalog_setup,
    certify,
    minimize_potential_exhaustive,
    potential_descent,
    verify_lemma1_conditions,
)


def _read_text(path: str) -> str:
    if path == "-":
        return sys.stdin.read()
    return Path(path).read_text(encoding="utf-8")


def _emit(text: str, out: str | None) -> None:
    if out:
        Path(out).write_text(text, encoding="utf-8")
    else:
        sys.stdout.write(text if text.endswith("\n") else text + "\n")


def _dump(obj, out: str | None) -> None:
    _emit(json.dumps(obj, indent=2), out)


def _load_game(path: str, mode: str) -> Game:
    return Game.from_json(_read_text(path), mode)


def _load_cost(arg: str, mode: str):
    text = arg if arg.lstrip().startswith("{") else _read_text(arg)
    return cost_from_dict(json.loads(text), mode)


def _domain(args, mode: str) -> WeightDomain:
    return WeightDomain(
        parse_number(args.w_min, mode), parse_number(args.w_max, mode), parse_number(args.W, mode)
    )


# -- commands -----------------------------------------------------------------------------


def cmd_gen(args) -> int:
    spec = InstanceSpec(
        family=args.family,
        n_players=args.players,
        n_resources=args.resources,
        strategies_per_player=args.strategies,
        weight_range=(parse_number(args.w_lo), parse_number(args.w_hi)),
        mode=args.mode,
        d=args.d,
        seed=args.seed,
    )
    _emit(generate_instance(spec).to_json(), args.out)
    return 0


def cmd_suite(args) -> int:
    caps = Caps(n_max=args.n_max)
    rows = run_suite(
        args.family,
        parse_lambda_grid(args.lambda_grid),
        args.count,
        caps=caps,
        d=args.d,
        seed=args.seed,
        mode=args.mode,
        jobs=args.jobs,
        failure_dir=args.failures_dir,
    )
    if args.out:
        for p in write_report(rows, args.out, figures=not args.no_figures):
            print(p, file=sys.stderr)
        print(summary_text(rows), end="")
    else:
        sys.stdout.write(emit_report(rows, args.format))
    return 0 if all(r.passed for r in rows) else 1


def cmd_report(args) -> int:
    rows = rows_from_csv(_read_text(args.input))
    if args.out:
        for p in write_report(rows, args.out, figures=not args.no_figures):
            print(p, file=sys.stderr)
    sys.stdout.write(emit_report(rows, args.format))
    return 0


def cmd_goodness(args) -> int:
    mode = args.mode
    cost = _load_cost(args.cost, mode)
    domain = _domain(args, mode)
    if args.action == "fit":
        p = fit_goodness(cost, parse_number(args.xi, mode), domain, args.grid)
        out = p.to_dict()
        out["excluded_points"] = len(p.excluded)
    elif args.action == "check":
        if not args.params:
            raise SystemExit("check needs --params a1,a2,b1,b2")
        a1, a2, b1, b2 = (parse_number(v, mode) for v in args.params.split(","))
        params = GoodnessParams(a1, a2, b1, b2, parse_number(args.xi, mode))
        out = check_goodness(cost, params, domain, args.grid, args.shortcut, args.tol).to_dict()
    else:
        grid = [parse_number(v, mode) for v in args.xi_grid.split(",")]
        xi, p = scan_xi(cost, domain, grid, args.objective, args.grid)
        out = {"xi": float(xi), "params": p.to_dict()}
    _dump(out, args.out)
    return 0


def _profile_arg(text: str | None):
    if text is None:
        return None
    return [int(v) for v in text.split(",")]


def cmd_potential(args) -> int:
    mode = args.mode
    game = _load_game(args.game, mode)
    lam = parse_number(args.lam, mode)
    g2, config = catalog_setup(game, lam, args.family, args.d)
    if args.action == "minimize":
        prof = minimize_potential_exhaustive(g2, config)
        cert = certify(game, prof)
        out = {"profile": list(prof.choice), "certificate": cert.to_dict()}
    elif args.action == "descend":
        start = _profile_arg(args.start) or [0] * game.n
        res = potential_descent(g2, config, start, args.rule)
        out = {"profile": list(res.profile.choice), "moves": res.moves, "potential": float(res.potential)}
    elif args.action == "verify":
        out = verify_lemma1_conditions(g2, config).to_dict()
    else:
        prof = _profile_arg(args.profile)
        if prof is None:
            prof = minimize_potential_exhaustive(g2, config)
        alpha = parse_number(args.alpha, mode) if args.alpha else float("inf")
        beta = parse_number(args.beta, mode) if args.beta else float("inf")
        out = certify(game, prof, alpha, beta).to_dict()
    _dump(out, args.out)
    return 0


def cmd_bounds(args) -> int:
    c = curve(args.family, d=args.d, w_max=args.w_max, W=args.W, lambda_max=args.lambda_max)
    lines = ["family,lambda,alpha,beta"]
    for lam, a, b in c.sample(args.samples):
        lines.append(f"{c.family},{lam!r},{a!r},{b!r}")
    _emit("\n".join(lines) + "\n", args.out)
    if args.plot:
        from forge import plots

        if args.family == "fairshare":
            plots.fairshare_tradeoff_figure(Path(args.plot), args.w_max, args.W)
        else:
            plots.tradeoff_figure([], args.family, args.d, Path(args.plot))
    return 0


# -- parser -------------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="forge", description="Approximate equilibria of weighted congestion games.")
    parser.add_argument("--mode", choices=("rational", "float"), default=None,
                        help="arithmetic mode (default: $FORGE_MODE or rational)")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("gen", help="generate a random game as JSON")
    p.add_argument("--family", choices=FAMILIES, default="poly")
    p.add_argument("--d", type=int, default=2)
    p.add_argument("--players", type=int, default=3)
    p.add_argument("--resources", type=int, default=4)
    p.add_argument("--strategies", type=int, default=2)
    p.add_argument("--w-lo", default="1")
    p.add_argument("--w-hi", default="3")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out")
    p.set_defaults(func=cmd_gen)

    p = sub.add_parser("suite", help="certify potential minimizers of random games")
    p.add_argument("--family", choices=FAMILIES, required=True)
    p.add_argument("--d", type=int, default=2)
    p.add_argument("--lambda-grid", required=True, help="comma separated, 'lnW' allowed")
    p.add_argument("--count", type=int, default=100)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--jobs", type=int, default=1)
    p.add_argument("--n-max", type=int, default=Caps.n_max)
    p.add_argument("--failures-dir")
    p.add_argument("--format", choices=("csv", "summary", "plot-data"), default="csv")
    p.add_argument("--out", help="directory for results.csv, summary.txt, curves.csv and figures")
    p.add_argument("--no-figures", action="store_true")
    p.set_defaults(func=cmd_suite)

    p = sub.add_parser("report", help="summarize a results CSV")
    p.add_argument("input")
    p.add_argument("--format", choices=("csv", "summary", "plot-data"), default="summary")
    p.add_argument("--out")
    p.add_argument("--no-figures", action="store_true")
    p.set_defaults(func=cmd_report)

    p = sub.add_parser("goodness", help="fit or check goodness parameters of a cost")
    p.add_argument("action", choices=("fit", "check", "scan-xi"))
    p.add_argument("--cost", required=True, help="cost JSON, inline or a file path")
    p.add_argument("--w-min", default="1")
    p.add_argument("--w-max", default="10")
    p.add_argument("--W", default="100")
    p.add_argument("--xi", default="0")
    p.add_argument("--xi-grid", default="0,0.25,0.5")
    p.add_argument("--objective", choices=("alpha", "beta"), default="alpha")
    p.add_argument("--params")
    p.add_argument("--grid", type=int, default=512)
    p.add_argument("--shortcut", action="store_true", help="use the nondecreasing shortcut for good_2")
    p.add_argument("--tol", type=float, default=1e-9)
    p.add_argument("--out")
    p.set_defaults(func=cmd_goodness)

    p = sub.add_parser("potential", help="potential minimization, descent and certificates")
    p.add_argument("action", choices=("minimize", "descend", "verify", "certify"))
    p.add_argument("game")
    p.add_argument("--lambda", dest="lam", default="2")
    p.add_argument("--family", choices=FAMILIES)
    p.add_argument("--d", type=int)
    p.add_argument("--start")
    p.add_argument("--rule", choices=("best", "first"), default="best")
    p.add_argument("--profile")
    p.add_argument("--alpha")
    p.add_argument("--beta")
    p.add_argument("--out")
    p.set_defaults(func=cmd_potential)

    p = sub.add_parser("bounds", help="sample a family's (alpha, beta) curve as CSV")
    p.add_argument("action", choices=("curve",))
    p.add_argument("--family", choices=FAMILIES, required=True)
    p.add_argument("--d", type=int, default=2)
    p.add_argument("--w-max", type=float)
    p.add_argument("--W", type=float)
    p.add_argument("--lambda-max", type=float)
    p.add_argument("--samples", type=int, default=21)
    p.add_argument("--plot")
    p.add_argument("--out")
    p.set_defaults(func=cmd_bounds)
    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    args.mode = args.mode or default_mode()
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
