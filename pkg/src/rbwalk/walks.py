"""Budget-constrained random walks on red/blue graphs.

A walk runs under one of five policies:

``Simple``
    uniform over all incident edges every step.
``Oblivious(budget)``
    simple until ``budget`` red edges have been crossed, blue-only afterwards.
``Flip(rho_R, rho_B)``
    fixed per-edge probabilities by color; red use is unbounded.
``Smooth(alpha, phase_length, budget)``
    alternating red/blue and blue-only phases, phase 0 being red/blue.  Once
    the red/blue step allowance or the red budget is spent the walk stays
    blue-only.
``Congestion(C, F)``
    periods of ``C`` blue-only (peak) steps followed by ``F`` unrestricted
    (off-peak) steps, starting with a peak.
"""
from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field
from enum import IntEnum
from typing import Union

import numpy as np

from . import _kernels as K
from .errors import ParameterError, StructureError
from .graphgen import Color, ColoredGraph
from .theory import PROB_SUM_TOL, gamma_budget, sigma_rb

__all__ = [
    "Mode",
    "Simple",
    "Oblivious",
    "Flip",
    "Smooth",
    "Congestion",
    "WalkPolicy",
    "CoverResult",
    "default_step_cap",
    "smooth_phase_length",
    "smooth_policy",
    "step",
    "transition_matrix",
    "run_cover",
    "run_with_checkpoints",
    "sample_path",
]

MAX_BLOCK = 1 << 16


class Mode(IntEnum):
    ALL = K.ALL
    BLUE = K.BLUE


@dataclass(frozen=True)
class Simple:
    name = "simple"


@dataclass(frozen=True)
class Oblivious:
    budget: int
    name = "oblivious"

    def __post_init__(self):
        if self.budget < 0:
            raise ParameterError("budget must be non-negative")


@dataclass(frozen=True)
class Flip:
    rho_R: float
    rho_B: float
    name = "flip"

    def __post_init__(self):
        if self.rho_R <= 0 or self.rho_B <= 0:
            raise ParameterError("flip probabilities must be positive")

    @classmethod
    def from_q(cls, q: float) -> "Flip":
        """``r = 1, b = 2`` flip walk with ``rho_R = 1 - q`` and ``rho_B = q/2``."""
        if not 0.0 < q < 1.0:
            raise ParameterError(f"q must lie in (0, 1) (got {q})")
        return cls(1.0 - q, q / 2.0)


@dataclass(frozen=True)
class Smooth:
    alpha: float
    phase_length: int
    budget: int
    rb_steps: int | None = None
    name = "smooth"

    def __post_init__(self):
        if not 0.0 < self.alpha < 1.0:
            raise ParameterError(f"alpha must lie in (0, 1) (got {self.alpha})")
        if self.phase_length < 1:
            raise ParameterError("phase_length must be at least 1")
        if self.budget < 0:
            raise ParameterError("budget must be non-negative")
        if self.rb_steps is not None and self.rb_steps < 0:
            raise ParameterError("rb_steps must be non-negative")

    def rb_cap(self, g: ColoredGraph) -> int:
        """Red/blue-phase step allowance: ``alpha * sigma_RB * n ln n`` unless set."""
        if self.rb_steps is not None:
            return self.rb_steps
        return int(round(self.alpha * sigma_rb(g.r, g.b) * g.n * math.log(g.n)))


@dataclass(frozen=True)
class Congestion:
    C: int
    F: int
    name = "congestion"

    def __post_init__(self):
        if self.C < 0 or self.F < 1:
            raise ParameterError("need C >= 0 and F >= 1")


WalkPolicy = Union[Simple, Oblivious, Flip, Smooth, Congestion]


def policy_params(policy: WalkPolicy) -> dict:
    return asdict(policy)


def default_step_cap(n: int) -> int:
    return 100 * n * n


def smooth_phase_length(n: int) -> int:
    """``ceil((ln n)^2 ln ln n)``, long compared with the ``O(log n)`` mixing time."""
    ln = math.log(n)
    return max(1, math.ceil(ln * ln * math.log(ln)))


def smooth_policy(n: int, r: int, b: int, alpha: float, phase_length: int | None = None) -> Smooth:
    """Smooth walk with budget ``floor(gamma(alpha) n ln n)`` and the default phase length."""
    budget = math.floor(gamma_budget(alpha, r, b) * n * math.log(n))
    return Smooth(alpha, phase_length or smooth_phase_length(n), budget)


@dataclass(frozen=True)
class CoverResult:
    """Outcome of one trajectory.

    ``cover_time`` is ``None`` when the walk failed to cover.  If the walk
    was confined to a blue component that cannot reach some unvisited vertex,
    the run stops once that component is exhausted; ``steps_taken`` is then
    reported as the step cap the walk would certainly have hit, and
    ``extrapolated`` is set.
    """

    cover_time: int | None
    red_uses: int
    steps_taken: int
    start_vertex: int
    final_vertex: int
    blue_forever_step: int | None = None
    unvisited: tuple[int, ...] = field(default=(), repr=False)
    extrapolated: bool = False

    @property
    def covered(self) -> bool:
        return self.cover_time is not None

    @property
    def status(self) -> str:
        return "COVERED" if self.covered else "FAILED"


# -- single steps ---------------------------------------------------------------


def _mode_args(mode) -> tuple[int, float, float]:
    if isinstance(mode, Flip):
        return K.FLIP, mode.rho_R, mode.rho_B
    return int(Mode(mode)), 0.0, 0.0


def _check_flip(g: ColoredGraph, p: Flip) -> None:
    total = g.r * p.rho_R + g.b * p.rho_B
    if abs(total - 1.0) > PROB_SUM_TOL:
        raise ParameterError(f"r·rho_R + b·rho_B = {total!r} on this graph; must be 1")


def step(g: ColoredGraph, v: int, mode, rng: np.random.Generator) -> tuple[int, Color]:
    """One transition from ``v``: ``Mode.ALL``, ``Mode.BLUE`` or a :class:`Flip` policy."""
    code, rho_r, rho_b = _mode_args(mode)
    if code == K.BLUE and g.b < 1:
        raise ParameterError("blue-only step on a graph with no blue edges")
    if code == K.FLIP:
        _check_flip(g, mode)
    k = K.pick_slot(rng.random(), code, g.r, g.b, rho_r, rho_b)
    return int(g.nbr[v, k]), Color.RED if k < g.r else Color.BLUE


def transition_matrix(g: ColoredGraph, mode=Mode.ALL) -> np.ndarray:
    """Dense single-step kernel ``P[v, w]`` under a step mode."""
    code, rho_r, rho_b = _mode_args(mode)
    if code == K.FLIP:
        _check_flip(g, mode)
        weights = np.array([rho_r] * g.r + [rho_b] * g.b)
    elif code == K.BLUE:
        weights = np.array([0.0] * g.r + [1.0 / g.b] * g.b)
    else:
        weights = np.full(g.d, 1.0 / g.d)
    P = np.zeros((g.n, g.n))
    rows = np.repeat(np.arange(g.n), g.d)
    np.add.at(P, (rows, g.nbr.ravel()), np.tile(weights, g.n))
    return P


# -- trajectories ---------------------------------------------------------------


def _kernel_params(g: ColoredGraph, policy: WalkPolicy) -> dict:
    p = dict(kind=K.SIMPLE, budget=0, rho_r=0.0, rho_b=0.0, phase_len=1, rb_cap=0, peak=0, offpeak=1)
    if isinstance(policy, Simple):
        pass
    elif isinstance(policy, Oblivious):
        p.update(kind=K.OBLIVIOUS, budget=policy.budget)
    elif isinstance(policy, Flip):
        _check_flip(g, policy)
        p.update(kind=K.FLIPWALK, rho_r=policy.rho_R, rho_b=policy.rho_B)
    elif isinstance(policy, Smooth):
        p.update(kind=K.SMOOTH, budget=policy.budget, phase_len=policy.phase_length, rb_cap=policy.rb_cap(g))
    elif isinstance(policy, Congestion):
        p.update(kind=K.CONGESTION, peak=policy.C, offpeak=policy.F)
    else:
        raise ParameterError(f"unknown policy {policy!r}")
    if p["kind"] in (K.OBLIVIOUS, K.SMOOTH, K.CONGESTION) and g.b < 1:
        raise ParameterError(f"{policy.name} walks need blue edges")
    return p


def _drive(g, policy, start, rng, step_cap, checkpoints, fast_fail, record):
    if not 0 <= start < g.n:
        raise ParameterError(f"start vertex {start} out of range")
    if step_cap < 1:
        raise ParameterError("step_cap must be at least 1")
    kp = _kernel_params(g, policy)
    ck = np.sort(np.asarray(checkpoints if checkpoints is not None else [], dtype=np.int64))
    if ck.size and ck[0] < 0:
        raise ParameterError("checkpoints must be non-negative")
    ck_out = np.full(ck.size, -1, dtype=np.int64)
    path = np.empty(step_cap if record else 0, dtype=np.int64)
    path_color = np.empty(path.size, dtype=np.int8)

    visited = np.zeros(g.n, dtype=np.uint8)
    visited[start] = 1
    state = np.zeros(K.STATE_SIZE, dtype=np.int64)
    state[K.S_V] = start
    state[K.S_UNVISITED] = g.n - 1
    ci = int(np.searchsorted(ck, 0, side="right"))
    ck_out[:ci] = g.n - 1
    state[K.S_CKPT] = ci
    stop = -1 if record else 0
    blue_forever_step = None

    def enter_blue_forever():
        nonlocal stop, blue_forever_step
        state[K.S_BLUE_FOREVER] = 1
        blue_forever_step = int(state[K.S_T])
        if fast_fail and not record:
            comp = g.blue_components
            outside = int(np.count_nonzero((visited == 0) & (comp != comp[state[K.S_V]])))
            if outside:
                stop = outside

    status = K.BLOCK_DONE
    if state[K.S_UNVISITED] == 0:
        status = K.COVERED
    elif (kp["kind"] == K.OBLIVIOUS and kp["budget"] == 0) or (
        kp["kind"] == K.SMOOTH and (kp["budget"] == 0 or kp["rb_cap"] == 0)
    ):
        enter_blue_forever()
        if state[K.S_UNVISITED] == stop:
            status = K.STOPPED

    block = 256
    while status in (K.BLOCK_DONE, K.ENTERED_BLUE):
        u = rng.random(block)
        block = min(2 * block, MAX_BLOCK)
        off = 0
        while off < u.size:
            status = K.advance(
                g.nbr, g.r, g.b, kp["kind"], kp["budget"], kp["rho_r"], kp["rho_b"],
                kp["phase_len"], kp["rb_cap"], kp["peak"], kp["offpeak"],
                u[off:], state, visited, step_cap, stop, ck, ck_out, path, path_color,
            )
            off += int(state[K.S_USED])
            if status == K.ENTERED_BLUE:
                enter_blue_forever()
                if state[K.S_UNVISITED] == stop:
                    status = K.STOPPED
                    break
                continue
            if status != K.BLOCK_DONE:
                break

    t = int(state[K.S_T])
    unvisited = int(state[K.S_UNVISITED])
    ci = int(state[K.S_CKPT])
    ck_out[ci:] = unvisited
    covered = status == K.COVERED
    stopped = status == K.STOPPED
    result = CoverResult(
        cover_time=t if covered else None,
        red_uses=int(state[K.S_RED]),
        steps_taken=step_cap if stopped else t,
        start_vertex=start,
        final_vertex=int(state[K.S_V]),
        blue_forever_step=blue_forever_step,
        unvisited=() if covered else tuple(np.flatnonzero(visited == 0).tolist()),
        extrapolated=stopped,
    )
    return result, ck_out, path[:t], path_color[:t]


def run_cover(
    g: ColoredGraph,
    policy: WalkPolicy,
    start: int,
    rng: np.random.Generator,
    step_cap: int | None = None,
    *,
    fast_fail: bool = True,
) -> CoverResult:
    """Walk from ``start`` until every vertex is visited or ``step_cap`` steps pass.

    The start vertex counts as visited at step 0.  With ``fast_fail`` a walk
    confined to a blue component that misses an unvisited vertex stops as
    soon as that component is exhausted (it can never cover).
    """
    if step_cap is None:
        step_cap = default_step_cap(g.n)
    return _drive(g, policy, start, rng, step_cap, None, fast_fail, False)[0]


def run_with_checkpoints(
    g: ColoredGraph,
    policy: WalkPolicy,
    start: int,
    rng: np.random.Generator,
    checkpoints,
    step_cap: int | None = None,
    *,
    fast_fail: bool = True,
) -> tuple[CoverResult, np.ndarray]:
    """Like :func:`run_cover`, also returning the unvisited count at each checkpoint step.

    Checkpoints after the run ends get the final count (0 once covered).
    """
    if step_cap is None:
        step_cap = default_step_cap(g.n)
    res, counts, _, _ = _drive(g, policy, start, rng, step_cap, checkpoints, fast_fail, False)
    return res, counts


def sample_path(
    g: ColoredGraph, policy: WalkPolicy, start: int, rng: np.random.Generator, steps: int
) -> tuple[np.ndarray, np.ndarray, CoverResult]:
    """Exactly ``steps`` transitions under ``policy``, ignoring coverage.

    Returns the vertex sequence (length ``steps + 1``, starting at
    ``start``), the color of each traversed edge, and the summary.
    """
    res, _, path, colors = _drive(g, policy, start, rng, steps, None, False, True)
    return np.concatenate([[start], path]), colors, res
