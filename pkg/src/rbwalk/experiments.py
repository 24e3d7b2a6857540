"""Seeded Monte Carlo campaigns and their comparison with the theory.

Each trial ``i`` of an experiment with master seed ``s`` draws its random
stream from ``default_rng(trial_seed(s, i))`` where :func:`trial_seed` hashes
``(s, i)`` through ``numpy.random.SeedSequence``.  Trials therefore never
share state and the aggregate is identical for any worker count.
"""
from __future__ import annotations

import csv
import json
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import _kernels as K
from .errors import ExperimentError, ParameterError, RBWalkError
from .graphgen import (
    ColoredGraph,
    analyze_structure,
    cycle_graph,
    gen_hamilton_union,
    gen_regular,
    gen_twofactor_union,
    gen_union,
    single_color_graph,
)
from .theory import CoverConstant, nonvisit_prob, p_v, predict, returns_tree, theta_flip
from .walks import (
    Congestion,
    CoverResult,
    Flip,
    Oblivious,
    Simple,
    Smooth,
    WalkPolicy,
    default_step_cap,
    policy_params,
    run_with_checkpoints,
)

__all__ = [
    "GraphSpec",
    "ExperimentConfig",
    "ExperimentResult",
    "trial_seed",
    "estimate_cover",
    "theory_for",
    "unvisited_outside_blue_component",
    "ReturnEstimate",
    "estimate_returns",
    "mixing_horizon",
    "NonvisitCurve",
    "nonvisit_curve",
    "TwoFactorStats",
    "twofactor_stats",
    "ThetaRow",
    "theta_sweep",
    "write_theta_csv",
    "TRIAL_FIELDS",
    "AGGREGATE_FIELDS",
]

GRAPH_MODELS = ("regular", "union", "hamilton", "twofactor", "cycle", "file")
TRIAL_FIELDS = ["trial", "seed", "n", "r", "b", "policy", "param_json", "cover_time", "red_uses", "status"]
AGGREGATE_FIELDS = ["q_or_alpha", "theory_theta", "empirical_theta", "stderr", "trials", "n"]


def trial_seed(master_seed: int, index: int) -> int:
    """64-bit seed of trial ``index``: ``SeedSequence(master_seed, spawn_key=(index,))``."""
    ss = np.random.SeedSequence(master_seed, spawn_key=(index,))
    return int(ss.generate_state(1, dtype=np.uint64)[0])


@dataclass(frozen=True)
class GraphSpec:
    """Recipe for a graph: generator name, sizes and seed.

    ``regular`` uses ``d`` and colors every edge blue; ``cycle`` is the
    deterministic blue ``n``-cycle; ``file`` loads ``path``.
    """

    model: str
    n: int = 0
    r: int = 0
    b: int = 2
    d: int = 3
    seed: int = 0
    path: str | None = None

    def build(self) -> ColoredGraph:
        if self.model == "union":
            return gen_union(self.n, self.r, self.b, self.seed)
        if self.model == "hamilton":
            return gen_hamilton_union(self.n, self.r, self.seed)
        if self.model == "twofactor":
            return gen_twofactor_union(self.n, self.r, self.seed)
        if self.model == "regular":
            return single_color_graph(gen_regular(self.n, self.d, self.seed), self.n)
        if self.model == "cycle":
            return cycle_graph(self.n)
        if self.model == "file":
            if not self.path:
                raise ParameterError("file graph spec needs a path")
            return ColoredGraph.load(self.path)
        raise ParameterError(f"unknown graph model {self.model!r}; choose from {', '.join(GRAPH_MODELS)}")


@dataclass(frozen=True)
class ExperimentConfig:
    graph: GraphSpec
    policy: WalkPolicy
    trials: int
    master_seed: int = 0
    step_cap: int | None = None
    checkpoints: tuple[int, ...] | None = None
    workers: int = 1
    start: int | None = 0
    fast_fail: bool = True

    def __post_init__(self):
        if self.trials < 1:
            raise ParameterError("trials must be at least 1")
        if self.workers < 1:
            raise ParameterError("workers must be at least 1")

    def describe(self) -> dict:
        """Fully resolved configuration, suitable for printing before a run."""
        return {
            "graph": vars(self.graph),
            "policy": self.policy.name,
            "policy_params": policy_params(self.policy),
            "trials": self.trials,
            "master_seed": self.master_seed,
            "step_cap": self.step_cap,
            "checkpoints": list(self.checkpoints) if self.checkpoints else None,
            "workers": self.workers,
            "start": self.start,
        }


@dataclass
class ExperimentResult:
    config: ExperimentConfig
    n: int
    r: int
    b: int
    seeds: list[int]
    results: list[CoverResult]
    checkpoint_counts: np.ndarray | None = None
    theory: CoverConstant | None = None
    quantile_levels: tuple[float, ...] = (0.1, 0.25, 0.5, 0.75, 0.9)

    @property
    def trials(self) -> int:
        return len(self.results)

    @property
    def failures(self) -> int:
        return sum(not r.covered for r in self.results)

    @property
    def completed(self) -> int:
        return self.trials - self.failures

    @property
    def cover_times(self) -> np.ndarray:
        return np.array([r.cover_time for r in self.results if r.covered], dtype=float)

    @property
    def red_uses(self) -> np.ndarray:
        return np.array([r.red_uses for r in self.results], dtype=float)

    def _stat(self, fn) -> float:
        c = self.cover_times
        return float(fn(c)) if c.size else math.nan

    @property
    def mean(self) -> float:
        return self._stat(np.mean)

    @property
    def std(self) -> float:
        return self._stat(lambda c: np.std(c, ddof=1) if c.size > 1 else 0.0)

    @property
    def stderr(self) -> float:
        c = self.cover_times
        return self.std / math.sqrt(c.size) if c.size else math.nan

    @property
    def min(self) -> float:
        return self._stat(np.min)

    @property
    def max(self) -> float:
        return self._stat(np.max)

    @property
    def quantiles(self) -> dict[float, float]:
        c = self.cover_times
        if not c.size:
            return {q: math.nan for q in self.quantile_levels}
        return dict(zip(self.quantile_levels, np.quantile(c, self.quantile_levels).tolist()))

    @property
    def nlogn(self) -> float:
        return self.n * math.log(self.n)

    @property
    def normalized(self) -> float:
        """Mean cover time divided by ``n ln n``."""
        return self.mean / self.nlogn

    @property
    def normalized_stderr(self) -> float:
        return self.stderr / self.nlogn

    @property
    def rel_deviation(self) -> float:
        """``(mean - predicted) / predicted``; nan without a finite prediction."""
        if self.theory is None or self.theory.failure_expected:
            return math.nan
        return self.mean / self.theory.predicted_cover - 1.0

    def summary(self) -> dict:
        return {
            "trials": self.trials,
            "failures": self.failures,
            "mean": self.mean,
            "std": self.std,
            "min": self.min,
            "max": self.max,
            "quantiles": self.quantiles,
            "normalized": self.normalized,
            "normalized_stderr": self.normalized_stderr,
            "mean_red_uses": float(self.red_uses.mean()),
            "theory_theta": None if self.theory is None else self.theory.theta,
            "theory_regime": None if self.theory is None else self.theory.regime,
            "rel_deviation": self.rel_deviation,
        }

    def trial_rows(self) -> list[dict]:
        params = json.dumps(policy_params(self.config.policy), sort_keys=True)
        return [
            {
                "trial": i,
                "seed": seed,
                "n": self.n,
                "r": self.r,
                "b": self.b,
                "policy": self.config.policy.name,
                "param_json": params,
                "cover_time": "FAILED" if res.cover_time is None else res.cover_time,
                "red_uses": res.red_uses,
                "status": res.status,
            }
            for i, (seed, res) in enumerate(zip(self.seeds, self.results))
        ]

    def write_trials_csv(self, out) -> None:
        _write_csv(out, TRIAL_FIELDS, self.trial_rows())


def _write_csv(out, fields, rows) -> None:
    if isinstance(out, (str, Path)):
        with open(out, "w", encoding="utf-8", newline="") as fh:
            _write_csv(fh, fields, rows)
        return
    w = csv.DictWriter(out, fieldnames=fields, lineterminator="\n")
    w.writeheader()
    w.writerows(rows)


def theory_for(policy: WalkPolicy, g: ColoredGraph, graph_model: str = "union") -> CoverConstant | None:
    """Prediction matching a policy on ``g``, or ``None`` when no law applies."""
    try:
        if isinstance(policy, Simple):
            return predict("simple", {"r": g.r, "b": g.b}, g.n)
        if isinstance(policy, Flip):
            return predict("flip", {"r": g.r, "b": g.b, "rho_R": policy.rho_R, "rho_B": policy.rho_B}, g.n)
        if isinstance(policy, Smooth):
            return predict("smooth", {"alpha": policy.alpha, "r": g.r, "b": g.b}, g.n)
        if isinstance(policy, Congestion):
            return predict("congestion", {"C": policy.C, "F": policy.F, "r": g.r}, g.n)
        if isinstance(policy, Oblivious):
            params = {"r": g.r, "b": g.b, "budget": policy.budget, "graph": graph_model}
            return predict("oblivious", params, g.n)
    except RBWalkError:
        return None
    return None


def estimate_cover(cfg: ExperimentConfig, graph: ColoredGraph | None = None) -> ExperimentResult:
    """Run ``cfg.trials`` independent cover-time trials on one graph.

    Trials run on a thread pool of ``cfg.workers`` threads (the walk kernel
    releases the GIL) and are merged in trial order.  Failed trials are
    recorded, not raised.
    """
    if graph is None:
        try:
            graph = cfg.graph.build()
        except RBWalkError as exc:
            raise ExperimentError(f"could not build graph: {exc}") from exc
    if not graph.is_connected():
        raise ExperimentError("graph is disconnected")
    step_cap = cfg.step_cap or default_step_cap(graph.n)
    checkpoints = cfg.checkpoints or ()
    seeds = [trial_seed(cfg.master_seed, i) for i in range(cfg.trials)]

    def one(i: int):
        rng = np.random.default_rng(seeds[i])
        start = int(rng.integers(graph.n)) if cfg.start is None else cfg.start
        return run_with_checkpoints(
            graph, cfg.policy, start, rng, checkpoints, step_cap, fast_fail=cfg.fast_fail
        )

    if cfg.workers == 1:
        out = [one(i) for i in range(cfg.trials)]
    else:
        with ThreadPoolExecutor(max_workers=cfg.workers) as pool:
            out = list(pool.map(one, range(cfg.trials)))
    counts = np.array([c for _, c in out], dtype=np.int64) if checkpoints else None
    return ExperimentResult(
        config=cfg,
        n=graph.n,
        r=graph.r,
        b=graph.b,
        seeds=seeds,
        results=[res for res, _ in out],
        checkpoint_counts=counts,
        theory=theory_for(cfg.policy, graph, cfg.graph.model),
    )


def unvisited_outside_blue_component(g: ColoredGraph, res: CoverResult) -> bool:
    """True when no unvisited vertex shares a blue component with the walk's final vertex."""
    comp = g.blue_components
    return bool(np.all(comp[list(res.unvisited)] != comp[res.final_vertex])) if res.unvisited else True


# -- returns and first visits -----------------------------------------------------


def _step_mode(g: ColoredGraph, policy: WalkPolicy | None):
    if policy is None or isinstance(policy, Simple):
        return K.ALL, 0.0, 0.0
    if isinstance(policy, Flip):
        return K.FLIP, policy.rho_R, policy.rho_B
    raise ParameterError("return and first-visit estimates support Simple and Flip walks only")


@dataclass(frozen=True)
class ReturnEstimate:
    vertices: np.ndarray
    mean: np.ndarray
    stderr: np.ndarray
    horizon: int
    trials: int


def estimate_returns(
    g: ColoredGraph,
    vertices,
    horizon: int,
    trials: int,
    seed: int = 0,
    policy: WalkPolicy | None = None,
) -> ReturnEstimate:
    """Mean number of visits to ``v`` during ``[0, horizon]`` by a walk started at ``v``.

    The visit at time 0 counts, so the estimate is at least 1.
    """
    if horizon < 0:
        raise ParameterError("horizon must be non-negative")
    if trials < 1:
        raise ParameterError("trials must be at least 1")
    mode, rho_r, rho_b = _step_mode(g, policy)
    vertices = np.asarray(list(vertices), dtype=np.int64)
    means, errs = [], []
    chunk = max(1, (1 << 22) // max(horizon, 1))
    for idx, v in enumerate(vertices):
        rng = np.random.default_rng(trial_seed(seed, idx))
        counts = []
        done = 0
        while done < trials:
            m = min(chunk, trials - done)
            u = rng.random((m, horizon))
            counts.append(K.count_returns(g.nbr, g.r, g.b, mode, rho_r, rho_b, int(v), u))
            done += m
        c = np.concatenate(counts)
        means.append(c.mean())
        errs.append(c.std(ddof=1) / math.sqrt(trials) if trials > 1 else 0.0)
    return ReturnEstimate(vertices, np.array(means), np.array(errs), horizon, trials)


def mixing_horizon(n: int) -> int:
    """Operational mixing time ``ceil(10 ln n)``."""
    return math.ceil(10 * math.log(n))


@dataclass(frozen=True)
class NonvisitCurve:
    t: np.ndarray
    empirical: np.ndarray
    stderr: np.ndarray
    predicted: np.ndarray
    rate: float
    t_mix: int
    trials: int
    tree_like: bool | None


def nonvisit_curve(
    g: ColoredGraph,
    v: int,
    t_grid,
    trials: int,
    seed: int = 0,
    *,
    start: int | None = None,
    t_mix: int | None = None,
    check_tree_like: bool = True,
) -> NonvisitCurve:
    """Fraction of simple walks that miss ``v`` throughout ``[t_mix, t]``.

    The start is uniform over all vertices unless given.  The prediction is
    ``(1 + p)^(-t)`` with ``p = (1/n) / ((d-1)/(d-2))``, the rate of a locally
    tree-like vertex.
    """
    t = np.asarray(sorted(t_grid), dtype=np.int64)
    if t_mix is None:
        t_mix = mixing_horizon(g.n)
    if t.size == 0 or t[0] < t_mix:
        raise ParameterError(f"time grid must start at or after t_mix = {t_mix}")
    tree_like = None
    if check_tree_like:
        tree_like = v in analyze_structure(g).locally_tree_like
    tmax = int(t[-1])
    hits = np.empty(trials, dtype=np.int64)
    for i in range(trials):
        rng = np.random.default_rng(trial_seed(seed, i))
        s = int(rng.integers(g.n)) if start is None else start
        u = rng.random(tmax)
        hits[i] = K.first_visit_from(g.nbr, g.r, g.b, K.ALL, 0.0, 0.0, s, v, t_mix, u)
    missed = (hits[None, :] < 0) | (hits[None, :] > t[:, None])
    emp = missed.mean(axis=1)
    rate = p_v(1.0 / g.n, returns_tree(g.d))
    return NonvisitCurve(
        t=t,
        empirical=emp,
        stderr=np.sqrt(emp * (1 - emp) / trials),
        predicted=nonvisit_prob(rate, t),
        rate=rate,
        t_mix=t_mix,
        trials=trials,
        tree_like=tree_like,
    )


# -- 2-factors ---------------------------------------------------------------------


@dataclass(frozen=True)
class TwoFactorStats:
    n: int
    cycle_counts: np.ndarray
    largest: np.ndarray
    second_largest: np.ndarray
    long_threshold: float
    count_bound: float
    seeds: list[int] = field(repr=False)

    @property
    def samples(self) -> int:
        return len(self.cycle_counts)

    @property
    def two_long_fraction(self) -> float:
        """Fraction of samples with at least two cycles of length >= n / ln^2 n."""
        return float(np.mean(self.second_largest >= self.long_threshold))

    @property
    def within_count_bound(self) -> int:
        """Samples whose cycle count is at most ``3 log2 n``."""
        return int(np.sum(self.cycle_counts <= self.count_bound))


def twofactor_stats(n: int, samples: int, seed: int = 0) -> TwoFactorStats:
    """Cycle statistics of random blue 2-factors.

    Sample ``i`` is the blue subgraph of ``gen_twofactor_union(n, r, s_i)``
    for ``s_i = trial_seed(seed, i)``; the blue pairing is drawn first, so
    it does not depend on ``r``.
    """
    if n < 3:
        raise ParameterError("need n >= 3")
    seeds = [trial_seed(seed, i) for i in range(samples)]
    counts, first, second = [], [], []
    for s in seeds:
        lengths = single_color_graph(gen_regular(n, 2, s), n).blue_cycle_lengths()
        counts.append(len(lengths))
        first.append(lengths[0])
        second.append(lengths[1] if len(lengths) > 1 else 0)
    return TwoFactorStats(
        n=n,
        cycle_counts=np.array(counts),
        largest=np.array(first),
        second_largest=np.array(second),
        long_threshold=n / math.log(n) ** 2,
        count_bound=3 * math.log2(n),
        seeds=seeds,
    )


# -- flip sweep ----------------------------------------------------------------------


@dataclass(frozen=True)
class ThetaRow:
    q: float
    theory: float
    empirical: float
    stderr: float
    trials: int
    n: int
    failures: int = 0

    @property
    def deviation(self) -> float:
        return self.empirical / self.theory - 1.0

    def as_csv_row(self) -> dict:
        return {
            "q_or_alpha": self.q,
            "theory_theta": self.theory,
            "empirical_theta": self.empirical,
            "stderr": self.stderr,
            "trials": self.trials,
            "n": self.n,
        }


def theta_sweep(
    qs,
    n: int,
    trials: int,
    seed: int = 0,
    *,
    workers: int = 1,
    graph: ColoredGraph | None = None,
) -> list[ThetaRow]:
    """Empirical vs predicted flip-walk constant over ``q = 2 rho_B = 1 - rho_R``.

    All points share one ``gen_union(n, 1, 2, seed)`` graph; point ``j`` uses
    master seed ``trial_seed(seed, j)`` for its trials.
    """
    if n < 10_000:
        raise ParameterError("theta_sweep needs n >= 10^4 so that n ln n dominates the mixing scale")
    qs = [float(q) for q in qs]
    for q in qs:
        if not 0.0 < q < 1.0:
            raise ParameterError(f"q must lie in (0, 1) (got {q})")
    spec = GraphSpec("union", n=n, r=1, b=2, seed=seed)
    g = graph if graph is not None else spec.build()
    rows = []
    for j, q in enumerate(qs):
        cfg = ExperimentConfig(spec, Flip.from_q(q), trials, trial_seed(seed, j), workers=workers)
        res = estimate_cover(cfg, g)
        rows.append(
            ThetaRow(q, theta_flip(q), res.normalized, res.normalized_stderr, trials, n, res.failures)
        )
    return rows


def write_theta_csv(out, rows) -> None:
    """Aggregate CSV with one row per sweep point (``theory_theta`` only when no simulation)."""
    _write_csv(out, AGGREGATE_FIELDS, [r.as_csv_row() if isinstance(r, ThetaRow) else r for r in rows])
