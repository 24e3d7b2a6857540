"""Command line front end: ``rbwalk {gen,theory,run,experiment,analyze}``.

The resolved configuration of every command is printed to stderr as a
single ``# config {...}`` JSON line; results go to stdout or ``--out``.
Exit status is 0 on success, 1 for usage or parameter errors and 2 for
runtime or numerical failures.
"""
from __future__ import annotations

import argparse
import csv
import json
import math
import os
import sys

import numpy as np

from .errors import ParameterError, RBWalkError
from .experiments import (
    GRAPH_MODELS,
    ExperimentConfig,
    GraphSpec,
    estimate_cover,
    theta_sweep,
    trial_seed,
    write_theta_csv,
)
from .graphgen import ColoredGraph, analyze_structure
from .theory import flip_fixed_point, oblivious_budget, sigma_b, sigma_rb, theta_flip
from .walks import Congestion, Flip, Oblivious, Simple, policy_params, smooth_policy

THREADS_ENV = "RBWALK_THREADS"
POLICIES = ("simple", "oblivious", "flip", "smooth", "congestion")


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    # argparse exits with 2 on bad usage; usage errors here are status 1
    def error(self, message):
        self.print_usage(sys.stderr)
        raise UsageError(message)


def _default_threads() -> int:
    raw = os.environ.get(THREADS_ENV)
    if not raw:
        return 1
    try:
        return max(1, int(raw))
    except ValueError:
        raise UsageError(f"{THREADS_ENV} must be an integer (got {raw!r})")


def _common(p):
    p.add_argument("--seed", type=int, default=0, help="master seed")
    p.add_argument("--threads", type=int, default=None, help=f"worker threads (default ${THREADS_ENV} or 1)")
    p.add_argument("--step-cap", type=int, default=None, help="per-trial step cap (default 100 n^2)")
    p.add_argument("-o", "--out", default=None, help="output path (default stdout)")
    p.add_argument("--format", choices=("csv", "json"), default="csv")


def _graph_args(p, with_file=True):
    if with_file:
        p.add_argument("--graph", default=None, help="edge-list file to load instead of generating")
    p.add_argument("--model", choices=[m for m in GRAPH_MODELS if m != "file"], default="union")
    p.add_argument("--n", type=int, default=None)
    p.add_argument("--r", type=int, default=1)
    p.add_argument("--b", type=int, default=2)
    p.add_argument("--d", type=int, default=3, help="degree for --model regular")
    p.add_argument("--graph-seed", type=int, default=None, help="graph seed (default: --seed)")


def _policy_args(p):
    p.add_argument("--policy", choices=POLICIES, default="simple")
    p.add_argument("--budget", type=int, default=None, help="oblivious red-use budget")
    p.add_argument(
        "--budget-frac", type=float, default=None,
        help="oblivious budget as a fraction of the unconstrained cover time sigma_RB n ln n",
    )
    p.add_argument("--q", type=float, default=None, help="flip walk with rho_R = 1-q, rho_B = q/2")
    p.add_argument("--rho-r", type=float, default=None)
    p.add_argument("--rho-b", type=float, default=None)
    p.add_argument("--alpha", type=float, default=0.5, help="smooth walk red/blue fraction")
    p.add_argument("--phase-length", type=int, default=None)
    p.add_argument("--C", type=int, default=None, help="congestion peak length (default ceil(n^0.75))")
    p.add_argument("--F", type=int, default=None, help="congestion off-peak length (default C)")
    p.add_argument("--start", type=int, default=0, help="start vertex; -1 for uniform")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="rbwalk", description="Random walks on red/blue regular graphs.")
    sub = parser.add_subparsers(dest="command", parser_class=_Parser)
    sub.required = True

    p = sub.add_parser("gen", help="generate a colored graph")
    _graph_args(p, with_file=False)
    _common(p)

    p = sub.add_parser("theory", help="evaluate cover-time constants")
    tsub = p.add_subparsers(dest="what", parser_class=_Parser)
    tsub.required = True
    t = tsub.add_parser("flip", help="flip-walk return probabilities")
    t.add_argument("--r", type=int, default=1)
    t.add_argument("--b", type=int, default=2)
    t.add_argument("--q", type=float, default=None)
    t.add_argument("--rho-r", type=float, default=None)
    t.add_argument("--rho-b", type=float, default=None)
    _common(t)
    t = tsub.add_parser("sigma", help="sigma_RB and sigma_B")
    t.add_argument("--r", type=int, default=1)
    t.add_argument("--b", type=int, default=2)
    _common(t)
    t = tsub.add_parser("sweep-theta", help="theta(q) table, optionally with simulation")
    t.add_argument("--from", dest="q_from", type=float, default=0.05)
    t.add_argument("--to", dest="q_to", type=float, default=0.99)
    t.add_argument("--steps", type=int, default=95)
    t.add_argument("--n", type=int, default=None, help="simulate on gen_union(n, 1, 2) when given")
    t.add_argument("--trials", type=int, default=20)
    _common(t)

    p = sub.add_parser("run", help="one cover-time trial")
    _graph_args(p)
    _policy_args(p)
    p.add_argument("--dump-graph", default=None, help="re-serialize the graph used to this path")
    _common(p)

    p = sub.add_parser("experiment", help="many cover-time trials with aggregate statistics")
    _graph_args(p)
    _policy_args(p)
    p.add_argument("--trials", type=int, default=20)
    p.add_argument("--checkpoints", default=None, help="comma-separated step counts")
    p.add_argument("--trials-out", default=None, help="write per-trial rows here")
    _common(p)

    p = sub.add_parser("analyze", help="structure report of a graph")
    _graph_args(p)
    _common(p)
    return parser


# -- helpers -------------------------------------------------------------------


def _config_line(cfg: dict) -> None:
    print("# config " + json.dumps(cfg, sort_keys=True, default=_json_default), file=sys.stderr)


def _json_default(x):
    if isinstance(x, (np.integer,)):
        return int(x)
    if isinstance(x, (np.floating,)):
        return float(x)
    if isinstance(x, (set, frozenset, tuple)):
        return list(x)
    raise TypeError(type(x).__name__)


def _open_out(path):
    if path is None:
        return sys.stdout, False
    return open(path, "w", encoding="utf-8", newline=""), True


def _emit(args, rows: list[dict], fields: list[str] | None = None) -> None:
    fh, close = _open_out(args.out)
    try:
        if args.format == "json":
            payload = rows[0] if len(rows) == 1 else rows
            fh.write(json.dumps(payload, indent=2, default=_json_default) + "\n")
        else:
            w = csv.DictWriter(fh, fieldnames=fields or list(rows[0]), lineterminator="\n")
            w.writeheader()
            w.writerows(rows)
    finally:
        if close:
            fh.close()


def _threads(args) -> int:
    k = args.threads if args.threads is not None else _default_threads()
    if k < 1:
        raise ParameterError("--threads must be at least 1")
    return k


def _graph_spec(args) -> GraphSpec:
    gseed = args.seed if args.graph_seed is None else args.graph_seed
    if getattr(args, "graph", None):
        return GraphSpec("file", path=args.graph)
    if args.model != "cycle" and args.n is None:
        raise ParameterError("--n is required unless --graph is given")
    if args.model == "cycle" and args.n is None:
        raise ParameterError("--n is required")
    return GraphSpec(args.model, n=args.n, r=args.r, b=args.b, d=args.d, seed=gseed)


def _policy(args, g: ColoredGraph):
    name = args.policy
    if name == "simple":
        return Simple()
    if name == "oblivious":
        if (args.budget is None) == (args.budget_frac is None):
            raise ParameterError("oblivious walk needs exactly one of --budget and --budget-frac")
        if args.budget is not None:
            return Oblivious(args.budget)
        return Oblivious(oblivious_budget(args.budget_frac, g.n, g.r, g.b))
    if name == "flip":
        if args.q is not None:
            return Flip.from_q(args.q)
        if args.rho_r is None or args.rho_b is None:
            raise ParameterError("flip walk needs --q or both --rho-r and --rho-b")
        return Flip(args.rho_r, args.rho_b)
    if name == "smooth":
        return smooth_policy(g.n, g.r, g.b, args.alpha, args.phase_length)
    if name == "congestion":
        C = args.C if args.C is not None else math.ceil(g.n ** 0.75)
        return Congestion(C, args.F if args.F is not None else C)
    raise ParameterError(f"unknown policy {name!r}")


def _check_threads_and_cap(args):
    if args.step_cap is not None and args.step_cap < 1:
        raise ParameterError("--step-cap must be positive")
    return _threads(args)


def _experiment(args, trials: int, checkpoints=None):
    spec = _graph_spec(args)
    g = spec.build()
    policy = _policy(args, g)
    start = None if args.start == -1 else args.start
    if start is not None and not 0 <= start < g.n:
        raise ParameterError(f"--start must lie in [0, {g.n}) or be -1")
    cfg = ExperimentConfig(
        spec, policy, trials, args.seed, args.step_cap, checkpoints, _check_threads_and_cap(args), start
    )
    conf = cfg.describe()
    conf.update(command=args.command, n=g.n, r=g.r, b=g.b, trial_seeds=None)
    return g, cfg, conf


# -- commands ----------------------------------------------------------------------


def cmd_gen(args) -> int:
    spec = _graph_spec(args)
    _config_line({"command": "gen", "graph": vars(spec), "out": args.out})
    g = spec.build()
    if args.out:
        g.save(args.out)
    else:
        sys.stdout.write(g.to_text())
    return 0


def cmd_theory(args) -> int:
    if args.what == "sigma":
        _config_line({"command": "theory sigma", "r": args.r, "b": args.b})
        row = {"r": args.r, "b": args.b, "sigma_RB": sigma_rb(args.r, args.b)}
        row["sigma_B"] = sigma_b(args.b) if args.b >= 3 else math.inf
        _emit(args, [row])
        return 0
    if args.what == "flip":
        if args.q is not None:
            if args.r != 1 or args.b != 2:
                raise ParameterError("--q parametrizes the r=1, b=2 flip walk; use --rho-r/--rho-b otherwise")
            pol = Flip.from_q(args.q)
        elif args.rho_r is not None and args.rho_b is not None:
            pol = Flip(args.rho_r, args.rho_b)
        else:
            raise ParameterError("need --q or both --rho-r and --rho-b")
        _config_line({"command": "theory flip", "r": args.r, "b": args.b, **policy_params(pol)})
        sol = flip_fixed_point(args.r, args.b, pol.rho_R, pol.rho_B)
        row = {
            "r": args.r,
            "b": args.b,
            "rho_R": pol.rho_R,
            "rho_B": pol.rho_B,
            "psi_R": sol.psi_R,
            "psi_B": sol.psi_B,
            "xi_R": sol.xi_R,
            "xi_B": sol.xi_B,
            "f": sol.f,
            "theta": sol.returns,
        }
        if args.q is not None:
            row["q"] = args.q
            row["theta_closed_form"] = theta_flip(args.q)
        _emit(args, [row])
        return 0
    # sweep-theta
    if args.steps < 1:
        raise ParameterError("--steps must be at least 1")
    qs = np.linspace(args.q_from, args.q_to, args.steps) if args.steps > 1 else np.array([args.q_from])
    conf = {
        "command": "theory sweep-theta", "from": args.q_from, "to": args.q_to, "steps": args.steps,
        "n": args.n, "trials": args.trials if args.n else None, "seed": args.seed,
        "graph": None if args.n is None else {"model": "union", "n": args.n, "r": 1, "b": 2, "seed": args.seed},
    }
    _config_line(conf)
    for q in qs:
        if not 0.0 < q < 1.0:
            raise ParameterError(f"q must lie in (0, 1) (got {q})")
    if args.n is None:
        rows = [
            {"q_or_alpha": float(q), "theory_theta": theta_flip(float(q)), "empirical_theta": "",
             "stderr": "", "trials": 0, "n": ""}
            for q in qs
        ]
    else:
        rows = [r.as_csv_row() for r in theta_sweep(qs, args.n, args.trials, args.seed, workers=_threads(args))]
    if args.format == "json":
        _emit(args, rows)
    else:
        fh, close = _open_out(args.out)
        try:
            write_theta_csv(fh, rows)
        finally:
            if close:
                fh.close()
    return 0


def cmd_run(args) -> int:
    g, cfg, conf = _experiment(args, 1)
    res = estimate_cover(cfg, g)
    conf["trial_seeds"] = res.seeds
    _config_line(conf)
    if args.dump_graph:
        g.save(args.dump_graph)
    rows = res.trial_rows()
    r0 = res.results[0]
    rows[0].update(
        steps_taken=r0.steps_taken,
        start_vertex=r0.start_vertex,
        final_vertex=r0.final_vertex,
        blue_forever_step="" if r0.blue_forever_step is None else r0.blue_forever_step,
        unvisited=len(r0.unvisited),
    )
    _emit(args, rows)
    return 0


def _parse_checkpoints(s):
    if not s:
        return None
    try:
        cps = tuple(sorted(int(x) for x in s.split(",") if x.strip()))
    except ValueError:
        raise ParameterError("--checkpoints must be comma-separated integers")
    if any(c < 0 for c in cps):
        raise ParameterError("checkpoints must be non-negative")
    return cps


def cmd_experiment(args) -> int:
    if args.trials < 1:
        raise ParameterError("--trials must be at least 1")
    cps = _parse_checkpoints(args.checkpoints)
    g, cfg, conf = _experiment(args, args.trials, cps)
    conf["trial_seeds"] = [trial_seed(cfg.master_seed, i) for i in range(cfg.trials)]
    _config_line(conf)
    res = estimate_cover(cfg, g)
    if args.trials_out:
        res.write_trials_csv(args.trials_out)
    s = res.summary()
    row = {
        "model": cfg.graph.model,
        "n": res.n,
        "r": res.r,
        "b": res.b,
        "policy": cfg.policy.name,
        "param_json": json.dumps(policy_params(cfg.policy), sort_keys=True),
        "trials": s["trials"],
        "failures": s["failures"],
        "mean": s["mean"],
        "std": s["std"],
        "min": s["min"],
        "max": s["max"],
        "median": s["quantiles"][0.5],
        "normalized": s["normalized"],
        "normalized_stderr": s["normalized_stderr"],
        "mean_red_uses": s["mean_red_uses"],
        "theory_theta": "" if s["theory_theta"] is None else s["theory_theta"],
        "theory_regime": "" if s["theory_regime"] is None else s["theory_regime"],
        "rel_deviation": s["rel_deviation"],
        "seed": cfg.master_seed,
    }
    if cps:
        mean_counts = res.checkpoint_counts.mean(axis=0)
        row["checkpoint_unvisited"] = json.dumps(dict(zip(map(str, cps), mean_counts.tolist())))
    _emit(args, [row])
    return 0


def cmd_analyze(args) -> int:
    spec = _graph_spec(args)
    _config_line({"command": "analyze", "graph": vars(spec)})
    g = spec.build()
    connected = g.is_connected()
    row = {"n": g.n, "r": g.r, "b": g.b, "connected": connected}
    if connected:
        rep = analyze_structure(g)
        row.update(
            sigma=rep.sigma,
            tree_like=len(rep.locally_tree_like),
            non_tree_like=rep.non_tree_like_count,
            lambda2=rep.lambda2,
        )
    comps = np.bincount(g.blue_components)
    row["blue_components"] = int(comps.size)
    if g.b == 2:
        lengths = g.blue_cycle_lengths()
        row["blue_cycles"] = len(lengths)
        row["blue_cycle_lengths"] = " ".join(map(str, lengths))
    _emit(args, [row])
    return 0


COMMANDS = {
    "gen": cmd_gen,
    "theory": cmd_theory,
    "run": cmd_run,
    "experiment": cmd_experiment,
    "analyze": cmd_analyze,
}


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        return COMMANDS[args.command](args)
    except UsageError as exc:
        print(f"rbwalk: error: {exc}", file=sys.stderr)
        return 1
    except ParameterError as exc:
        print(f"rbwalk: error: {exc}", file=sys.stderr)
        return 1
    except (RBWalkError, OSError, ArithmeticError) as exc:
        print(f"rbwalk: error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
