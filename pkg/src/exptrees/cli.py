"""Command-line front end: config parsing, seeding, subcommand dispatch.

Subcommands: grow | cmj | series | subtree | phase | counterexample.
A flat JSON config (--config) mirrors the flags; explicit flags override
file values.  Every run echoes its effective config next to its outputs,
and the echo re-parses to the same run.  Exit codes: 0 ok, 1 runtime
error, 2 usage error, 3 config validation error.
"""

from __future__ import annotations

import argparse
import json
import os
import sys

import numpy as np

from . import cmj, counterexample, grower, phase, series, subtrees
from .errors import ExpTreesError, InvalidParametersError
from .model import (
    Constant,
    FitnessSpec,
    degree_from_string,
    degree_to_string,
    distribution_from_string,
    weights_from_string,
    weights_to_string,
)
from .rng import replica_generator

__all__ = ["main", "dispatch"]

_FAMILIES = {
    "mixed-superlinear": ("mixed", "superlinear"),
    "additive-superlinear": ("additive", "superlinear"),
    "mixed-logstretched": ("mixed", "log-stretched"),
    "additive-logstretched": ("additive", "log-stretched"),
    "mixed-polylog": ("mixed", "poly-log"),
    "additive-polylog": ("additive", "poly-log"),
    "constant-power": ("mixed", "superlinear"),
}


def _build_parser() -> argparse.ArgumentParser:
    top = argparse.ArgumentParser(prog="exptrees",
                                  description="explosive recursive trees with fitness")
    sub = top.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--config", help="flat JSON config file; flags override")
        p.add_argument("--seed", type=int, default=0)
        p.add_argument("--out", default=".", help="output directory")
        p.add_argument("--threads", type=int, default=1,
                       help="worker cap for replica loops")

    g = sub.add_parser("grow", help="grow the discrete tree")
    common(g)
    g.add_argument("--degree", default="power:2")
    g.add_argument("--fitness", default="pure", help="pure | additive | mixed[:gamma,hscale]")
    g.add_argument("--weights", default="constant:0")
    g.add_argument("--n", type=int, default=10000)
    g.add_argument("--replicas", type=int, default=1)
    g.add_argument("--census", default=None, help="pattern tree, e.g. star:2")
    g.add_argument("--census-anchor", default="all", choices=["all", "hub"])
    g.add_argument("--checkpoints", default=None,
                   help="comma-separated sizes for census/hub snapshots")

    c = sub.add_parser("cmj", help="continuous-time event-driven simulation")
    common(c)
    c.add_argument("--degree", default="power:2")
    c.add_argument("--fitness", default="pure")
    c.add_argument("--weights", default="constant:0")
    c.add_argument("--law", default="exponential")
    c.add_argument("--births", type=int, default=None)
    c.add_argument("--time", type=float, default=None)
    c.add_argument("--replicas", type=int, default=1)
    c.add_argument("--estimate-explosion", action="store_true")

    s = sub.add_parser("series", help="star/path/divergence summability probes")
    common(s)
    s.add_argument("--degree", default="power:2")
    s.add_argument("--fitness", default="pure")
    s.add_argument("--weights", default="constant:0")
    s.add_argument("--kind", default="star", choices=["star", "path", "divergence"])
    s.add_argument("--c", dest="c_const", type=float, default=None,
                   help="star default 0.5, path default 2")
    s.add_argument("--d", dest="d_const", type=float, default=0.5)
    s.add_argument("--w-ref", type=float, default=0.0)
    s.add_argument("--n-grid", default="16:4096:x2", help="lo:hi:x<factor> geometric grid")
    s.add_argument("--mc", type=int, default=10000)

    t = sub.add_parser("subtree", help="sub-tree phase predicates and census terms")
    common(t)
    t.add_argument("--tree", required=True, help="star:k | chain:k | mary:m,l | @file")
    t.add_argument("--family", required=True, choices=sorted(_FAMILIES))
    t.add_argument("--p", type=float, default=None)
    t.add_argument("--beta", type=float, default=None)
    t.add_argument("--sigma", type=float, default=None)
    t.add_argument("--gamma", type=float, default=0.0)
    t.add_argument("--alpha", type=float, default=None)
    t.add_argument("--nu", type=float, default=None)
    t.add_argument("--kappa", type=float, default=None)
    t.add_argument("--orderings", action="store_true", help="print the ordering count")

    ph = sub.add_parser("phase", help="closed-form phase classification")
    common(ph)
    ph.add_argument("--family", required=True, choices=sorted(_FAMILIES))
    ph.add_argument("--p", type=float, default=None)
    ph.add_argument("--beta", type=float, default=None)
    ph.add_argument("--sigma", type=float, default=None)
    ph.add_argument("--gamma", type=float, default=0.0)
    ph.add_argument("--alpha", type=float, default=None)
    ph.add_argument("--nu", type=float, default=None)
    ph.add_argument("--kappa", type=float, default=None)
    ph.add_argument("--tau", type=float, default=None)
    ph.add_argument("--tau-prime", type=float, default=None)
    ph.add_argument("--ell-lower", type=float, default=0.0)
    ph.add_argument("--ell-upper", type=float, default=0.0)
    ph.add_argument("--scan", default=None,
                    help="two axes 'name:lo:hi:steps,name:lo:hi:steps'")
    ph.add_argument("--trees", default=None, help="comma-separated pattern trees")
    ph.add_argument("--svg", action="store_true", help="emit an SVG overlay next to the CSV")

    x = sub.add_parser("counterexample", help="two-type star/path coexistence process")
    common(x)
    x.add_argument("--alpha", type=float, default=1.5)
    x.add_argument("--p", type=float, default=2.5)
    x.add_argument("--coin", type=float, default=0.5)
    x.add_argument("--births", type=int, default=10000)
    x.add_argument("--replicas", type=int, default=500)
    x.add_argument("--k-check", type=int, default=30,
                   help="verify the deterministic-gap bound up to this k")
    return top


def _merge_config(args: argparse.Namespace, argv: list[str]) -> argparse.Namespace:
    if not getattr(args, "config", None):
        return args
    with open(args.config) as fh:
        file_cfg = json.load(fh)
    explicit = set()
    for token in argv:
        if token.startswith("--"):
            explicit.add(token[2:].split("=")[0].replace("-", "_"))
    for key, value in file_cfg.items():
        attr = key.replace("-", "_")
        if attr in ("command",):
            continue
        if not hasattr(args, attr):
            raise InvalidParametersError(f"unknown config key {key!r}")
        if attr not in explicit:
            setattr(args, attr, value)
    return args


def _echo_config(args: argparse.Namespace, out_dir: str) -> None:
    payload = {k: v for k, v in vars(args).items() if k != "config" and v is not None}
    with open(os.path.join(out_dir, "config.json"), "w") as fh:
        json.dump(payload, fh, indent=2, sort_keys=True)


def _spec_from(args) -> FitnessSpec:
    return FitnessSpec(degree=degree_from_string(args.degree),
                       weights=weights_from_string(args.fitness))


def _grid_from(text: str) -> list[int]:
    lo, hi, step = text.split(":")
    lo, hi = int(lo), int(hi)
    if not step.startswith("x"):
        raise InvalidParametersError("grid step must look like 'x2'")
    factor = float(step[1:])
    out, n = [], float(lo)
    while n <= hi + 1e-9:
        out.append(int(round(n)))
        n *= factor
    return out


def _phase_model(args) -> phase.PhaseModel:
    fitness_kind, degree_kind = _FAMILIES[args.family]
    if args.family == "constant-power":
        tail = phase.AllMomentsTail()
    elif args.alpha is not None:
        tail = phase.PowerTail(args.alpha)
    elif args.nu is not None:
        tail = phase.LogStretchedExpTail(args.nu)
    elif args.kappa is not None:
        tail = phase.StretchedExpTail(args.kappa)
    elif getattr(args, "tau", None) is not None or getattr(args, "tau_prime", None) is not None:
        tail = phase.PowerLawPlusTail(tau=getattr(args, "tau", None),
                                      tau_prime=getattr(args, "tau_prime", None))
    else:
        tail = phase.AllMomentsTail()
    return phase.PhaseModel(
        fitness_kind=fitness_kind, degree_kind=degree_kind, weight_tail=tail,
        p=args.p, beta=args.beta, sigma=args.sigma, gamma=args.gamma,
        ell_lower=getattr(args, "ell_lower", 0.0),
        ell_upper=getattr(args, "ell_upper", 0.0))


def _cmd_grow(args) -> int:
    spec = _spec_from(args)
    dist = distribution_from_string(args.weights)
    checkpoints = ([int(v) for v in args.checkpoints.split(",")]
                   if args.checkpoints else [args.n])
    checkpoints = sorted(set(checkpoints) | {args.n})
    pattern = subtrees.SubtreeSpec.from_string(args.census) if args.census else None
    anchor = (grower.Anchor.ALL_NODES if args.census_anchor == "all"
              else grower.Anchor.CHILDREN_OF_MAX_DEGREE)
    census_rows = []
    for rep in range(args.replicas):
        rng = replica_generator(args.seed, rep)
        state = grower.TreeState.root(spec, dist, rng, capacity=max(1024, args.n))
        for stop in checkpoints:
            grower.grow_to(state, spec, dist, stop, rng)
            if pattern is not None:
                census_rows.append((rep, stop, grower.census(state, pattern, anchor)))
        grower.dump_tree_csv(state, os.path.join(args.out, f"tree_r{rep}.csv"))
        grower.hub_history_csv(grower.hub_history(state),
                               os.path.join(args.out, f"hub_r{rep}.csv"))
    if census_rows:
        import csv

        with open(os.path.join(args.out, "census.csv"), "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["replica", "n", "count"])
            writer.writerows(census_rows)
    print(f"grow: {args.replicas} replica(s) to n={args.n} "
          f"(degree {args.degree}, weights {args.weights}) -> {args.out}")
    return 0


def _cmd_cmj(args) -> int:
    spec = _spec_from(args)
    dist = distribution_from_string(args.weights)
    law = cmj.law_from_string(args.law)
    if args.births is None and args.time is None:
        raise InvalidParametersError("cmj needs --births or --time")
    est_last = None
    for rep in range(args.replicas):
        rng = replica_generator(args.seed, rep)
        if args.estimate_explosion:
            est = cmj.explosion_estimate(spec, dist, law, args.births, rng)
            est_last = est
            state, times = None, est.times
            with open(os.path.join(args.out, f"explosion_r{rep}.json"), "w") as fh:
                json.dump({"estimate": est.estimate, "tau_k": float(times[-1]),
                           "tail": est.tail, "hub_degree": est.hub_degree,
                           "note": est.note}, fh)
        else:
            state, times = cmj.simulate_births(spec, dist, law, rng,
                                               births=args.births, time=args.time)
            cmj.birth_trace_csv(state, times, os.path.join(args.out, f"births_r{rep}.csv"))
    if est_last is not None:
        print(f"cmj: explosion estimate {est_last.estimate:.6g} "
              f"(tau_k {float(est_last.times[-1]):.6g} + tail {est_last.tail:.3g}; heuristic)")
    else:
        print(f"cmj: {args.replicas} replica(s), law {args.law} -> {args.out}")
    return 0


def _cmd_series(args) -> int:
    spec = _spec_from(args)
    dist = distribution_from_string(args.weights)
    rng = replica_generator(args.seed, 0)
    grid = _grid_from(args.n_grid)
    if args.kind == "star":
        report = series.star_series_report(spec, dist, grid,
                                           c=args.c_const if args.c_const else 0.5,
                                           mc_samples=args.mc, rng=rng)
    elif args.kind == "path":
        report = series.path_series_report(spec, dist, grid,
                                           c=args.c_const if args.c_const else 2.0,
                                           w_ref=args.w_ref, mc_samples=args.mc, rng=rng)
    else:
        report = series.divergence_probe(spec, dist, w_ref=args.w_ref, d=args.d_const,
                                         n_grid=grid, mc_samples=args.mc, rng=rng)
    report.to_csv(os.path.join(args.out, f"series_{args.kind}.csv"))
    with open(os.path.join(args.out, f"series_{args.kind}_verdict.json"), "w") as fh:
        fh.write(report.verdict_json())
    print(f"series[{args.kind}]: {report.verdict} "
          f"(decay exponent {report.decay_exponent:.3f}, "
          f"CI95 [{report.ci_low:.3f}, {report.ci_high:.3f}])")
    return 0


def _cmd_subtree(args) -> int:
    tree = subtrees.SubtreeSpec.from_string(args.tree)
    if args.orderings:
        print(f"orderings: {len(subtrees.orderings(tree))}")
        return 0
    model = _phase_model(args)
    verdict = subtrees.subtree_phase(tree, model)
    print(verdict)
    return 0


def _cmd_phase(args) -> int:
    model = _phase_model(args)
    if not args.scan:
        print(str(phase.classify(model)))
        return 0
    axes = []
    for part in args.scan.split(","):
        name, lo, hi, steps = part.split(":")
        axes.append((name, float(lo), float(hi), int(steps)))
    if len(axes) != 2:
        raise InvalidParametersError("scan needs exactly two axes")
    trees = ([subtrees.SubtreeSpec.from_string(t) for t in args.trees.split("+")]
             if args.trees else None)
    cells = phase.grid_scan(model, axes[0], axes[1], trees)
    tree_names = args.trees.split("+") if args.trees else []
    csv_path = os.path.join(args.out, "phase_grid.csv")
    phase.grid_csv(cells, axes[0][0], axes[1][0], tree_names, csv_path)
    if args.svg:
        phase.grid_svg(cells, model, axes[0], axes[1], trees,
                       os.path.join(args.out, "phase_grid.svg"))
    counts = {}
    for c in cells:
        counts[c.verdict.verdict] = counts.get(c.verdict.verdict, 0) + 1
    print(f"phase scan: {len(cells)} cells " +
          " ".join(f"{k}={v}" for k, v in sorted(counts.items())) + f" -> {csv_path}")
    return 0


def _cmd_counterexample(args) -> int:
    spec = counterexample.build_s_sequence(args.alpha, args.p, max(args.k_check, 2))
    bounds_ok = all(spec.verify_bound(k) for k in range(1, args.k_check + 1))
    result = counterexample.simulate_counterexample(
        spec, births=args.births, replicas=args.replicas, seed=args.seed, coin=args.coin)
    payload = json.loads(result.to_json())
    payload["gap_bounds_verified_to_k"] = args.k_check if bounds_ok else -1
    path = os.path.join(args.out, "counterexample.json")
    with open(path, "w") as fh:
        json.dump(payload, fh, indent=2)
    print(f"counterexample: star_like={result.star_like:.3f} "
          f"path_like={result.path_like:.3f} undecided={result.undecided:.3f} -> {path}")
    return 0


_COMMANDS = {
    "grow": _cmd_grow,
    "cmj": _cmd_cmj,
    "series": _cmd_series,
    "subtree": _cmd_subtree,
    "phase": _cmd_phase,
    "counterexample": _cmd_counterexample,
}


def dispatch(argv: list[str]) -> int:
    parser = _build_parser()
    args = parser.parse_args(argv)
    try:
        args = _merge_config(args, argv)
        os.makedirs(args.out, exist_ok=True)
        _echo_config(args, args.out)
        return _COMMANDS[args.command](args)
    except (ExpTreesError, ValueError, OSError, json.JSONDecodeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        if isinstance(exc, (InvalidParametersError, json.JSONDecodeError)):
            return 3
        return 1


def main() -> None:
    sys.exit(dispatch(sys.argv[1:]))
