"""Cover-time constants and return-probability calculations.

All asymptotic cover times are of the form ``theta * n * ln(n)`` with the
natural logarithm.  The flip-walk section solves for the return
probabilities of a walk on the infinite tree in which every vertex has
``r`` red and ``b`` blue edges, stepping along a given red edge with
probability ``rho_R`` and along a given blue edge with probability
``rho_B``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np
from scipy.optimize import bisect

from .errors import InfeasibleError, NumericError, ParameterError

__all__ = [
    "sigma_rb",
    "sigma_b",
    "gamma_budget",
    "smooth_cover_const",
    "congestion_cover_const",
    "oblivious_budget",
    "FlipSolution",
    "flip_fixed_point",
    "flip_F",
    "flip_smallest_root",
    "B2Roots",
    "flip_roots_b2",
    "theta_flip",
    "returns_tree",
    "p_v",
    "nonvisit_prob",
    "CoverConstant",
    "predict",
    "MODELS",
]

PROB_SUM_TOL = 1e-12


def sigma_rb(r: int, b: int) -> float:
    """Unconstrained cover-time constant ``(r+b-1)/(r+b-2)``."""
    if r < 0 or b < 0 or r + b < 3:
        raise ParameterError(f"sigma_RB needs r + b >= 3 (got r={r}, b={b})")
    return (r + b - 1) / (r + b - 2)


def sigma_b(b: int) -> float:
    """Blue-only cover-time constant ``(b-1)/(b-2)``; undefined for ``b <= 2``."""
    if b < 3:
        raise ParameterError(f"sigma_B needs b >= 3 (got b={b}); a blue 2-factor is a union of cycles")
    return (b - 1) / (b - 2)


def gamma_budget(alpha: float, r: int, b: int) -> float:
    """Red-edge budget of an alpha-constrained smooth walk, in units of ``n ln n``."""
    if not 0.0 < alpha < 1.0:
        raise ParameterError(f"alpha must lie in (0, 1) (got {alpha})")
    return alpha * sigma_rb(r, b) * r / (r + b)


def smooth_cover_const(alpha: float, r: int, b: int) -> float:
    if not 0.0 <= alpha <= 1.0:
        raise ParameterError(f"alpha must lie in [0, 1] (got {alpha})")
    return alpha * sigma_rb(r, b) + (1.0 - alpha) * sigma_b(b)


def congestion_cover_const(C: float, F: float, r: int, b: int = 2) -> float:
    """Cover constant ``(1 + C/F)(r+1)/r`` for peak/off-peak periods on a blue Hamilton cycle."""
    if F <= 0:
        raise ParameterError(f"off-peak period F must be positive (got {F})")
    if C < 0:
        raise ParameterError(f"peak period C must be non-negative (got {C})")
    if r < 1:
        raise ParameterError(f"need r >= 1 (got {r})")
    if b != 2:
        raise ParameterError("the congestion law is stated for a blue Hamilton cycle (b = 2)")
    return (1.0 + C / F) * (r + 1) / r


def oblivious_budget(frac: float, n: int, r: int, b: int) -> int:
    """Red-use budget equivalent to ``frac * sigma_RB * n ln n`` steps of unrestricted walking.

    An unrestricted walk crosses a red edge with probability ``r/(r+b)`` per
    step, so the budget runs out after about ``frac * sigma_RB * n ln n``
    steps.
    """
    if frac < 0:
        raise ParameterError(f"budget fraction must be non-negative (got {frac})")
    return int(round(frac * sigma_rb(r, b) * n * math.log(n) * r / (r + b)))


# -- flip walks ----------------------------------------------------------------


@dataclass(frozen=True)
class FlipSolution:
    """Return probabilities on the red/blue tree.

    ``psi_R``/``psi_B``: probability that a walk at a red/blue vertex steps
    away from the root and later comes back.  ``xi_R``/``xi_B``: probability
    it steps away and never comes back.  ``f``: first-return probability to
    the root.
    """

    r: int
    b: int
    rho_R: float
    rho_B: float
    psi_R: float
    psi_B: float
    f: float
    iterations: int

    @property
    def xi_R(self) -> float:
        return 1.0 - self.rho_R - self.psi_R

    @property
    def xi_B(self) -> float:
        return 1.0 - self.rho_B - self.psi_B

    @property
    def feasible(self) -> bool:
        return self.xi_R > 0.0 and self.xi_B > 0.0

    @property
    def returns(self) -> float:
        """Expected number of visits to the root, ``1/(1-f)``."""
        return 1.0 / (1.0 - self.f)

    def residuals(self) -> tuple[float, float, float]:
        ex, ez, ef = _flip_rhs(self.r, self.b, self.rho_R, self.rho_B, self.psi_R, self.psi_B)
        return (ex - self.psi_R, ez - self.psi_B, ef - self.f)


def _flip_rhs(r, b, rho_R, rho_B, x, z):
    red = rho_R * rho_R / (1.0 - x)
    blue = rho_B * rho_B / (1.0 - z)
    return ((r - 1) * red + b * blue, r * red + (b - 1) * blue, r * red + b * blue)


def _check_flip_probs(r: int, b: int, rho_R: float, rho_B: float) -> None:
    if r < 1 or b < 1:
        raise ParameterError(f"need r >= 1 and b >= 1 (got r={r}, b={b})")
    if rho_R <= 0.0 or rho_B <= 0.0:
        raise ParameterError("edge probabilities rho_R, rho_B must be positive")
    if abs(r * rho_R + b * rho_B - 1.0) > PROB_SUM_TOL:
        raise ParameterError(f"r·rho_R + b·rho_B must equal 1 (got {r * rho_R + b * rho_B!r})")


def flip_fixed_point(
    r: int,
    b: int,
    rho_R: float,
    rho_B: float,
    *,
    damping: float = 0.5,
    tol: float = 1e-12,
    max_iter: int = 1_000_000,
) -> FlipSolution:
    """Smallest solution of the away-and-return equations.

    Damped iteration from ``(0, 0)``; the map is increasing in both
    arguments, so the iterates climb monotonically to the smallest fixed
    point.  A few Newton steps then remove the remaining ``tol/(1-rate)``
    bias, which matters when the contraction rate is close to one.

    Raises ``NumericError`` if the iteration does not settle and
    ``InfeasibleError`` if the limit has a non-positive escape probability
    (a recurrent walk).
    """
    _check_flip_probs(r, b, rho_R, rho_B)
    x = z = 0.0
    x_hi, z_hi = 1.0 - rho_R, 1.0 - rho_B
    for it in range(1, max_iter + 1):
        tx, tz, _ = _flip_rhs(r, b, rho_R, rho_B, x, z)
        nx = (1.0 - damping) * tx + damping * x
        nz = (1.0 - damping) * tz + damping * z
        if nx < x - 1e-15 or nz < z - 1e-15:
            raise NumericError("fixed-point iterates lost monotonicity")
        if nx > x_hi + 1e-12 or nz > z_hi + 1e-12:
            raise InfeasibleError("iterates left the probability region psi <= 1 - rho")
        step = max(abs(nx - x), abs(nz - z))
        x, z = nx, nz
        if step < tol:
            break
    else:
        raise NumericError(f"fixed-point iteration did not converge in {max_iter} steps")
    x, z = _newton_polish(r, b, rho_R, rho_B, x, z)
    f = _flip_rhs(r, b, rho_R, rho_B, x, z)[2]
    sol = FlipSolution(r, b, rho_R, rho_B, psi_R=x, psi_B=z, f=f, iterations=it)
    if not sol.feasible:
        raise InfeasibleError(
            f"escape probabilities xi_R={sol.xi_R:.3g}, xi_B={sol.xi_B:.3g}: recurrent solution rejected"
        )
    return sol


def _newton_polish(r, b, rho_R, rho_B, x, z, steps: int = 4):
    rr, bb = rho_R * rho_R, rho_B * rho_B
    for _ in range(steps):
        tx, tz, _ = _flip_rhs(r, b, rho_R, rho_B, x, z)
        gx, gz = tx - x, tz - z
        dxx = (r - 1) * rr / (1.0 - x) ** 2
        dxz = b * bb / (1.0 - z) ** 2
        dzx = r * rr / (1.0 - x) ** 2
        dzz = (b - 1) * bb / (1.0 - z) ** 2
        a11, a12, a21, a22 = 1.0 - dxx, -dxz, -dzx, 1.0 - dzz
        det = a11 * a22 - a12 * a21
        if det <= 0.0:
            # singular Jacobian: critical (recurrent) point, keep the iterate
            break
        x += (a22 * gx - a12 * gz) / det
        z += (a11 * gz - a21 * gx) / det
    return x, z


def _check_q(q: float, b: int) -> None:
    if b < 2:
        raise ParameterError(f"need b >= 2 (got b={b})")
    if not (b / (b + 1) - 1e-12 <= q <= 1.0):
        raise ParameterError(f"q must lie in [b/(b+1), 1] = [{b / (b + 1):.6g}, 1] (got {q})")


def flip_F(z: float, q: float, b: int) -> float:
    """The r = 1 reduction whose roots are the candidate values of ``psi_B``.

    ``q = b * rho_B = 1 - rho_R``.  Pole at ``z0 = 1 - q^2/b``.
    """
    _check_q(q, b)
    # the red term carries a factor (1-q)^2 and vanishes identically at q = 1
    red = 0.0 if q == 1.0 else (1 - q) ** 2 * (1 - z) / (1 - q * q / b - z)
    return z - red - (b - 1) * q * q / (b * b * (1 - z))


def flip_smallest_root(q: float, b: int) -> float:
    """Smallest root of :func:`flip_F` in ``[0, 1/2]`` by bisection."""
    _check_q(q, b)
    hi = 0.5
    f_hi = flip_F(hi, q, b)
    if f_hi <= 0.0 and b == 2 and q > 1.0 - 1e-9:
        # b = 2, q -> 1: the two smallest roots merge at 1/2 (simple walk on a line);
        # near the double root the position is only determined to about sqrt(eps)
        return hi
    if not (flip_F(0.0, q, b) < 0.0 < f_hi):
        raise NumericError(f"F(0) < 0 < F(1/2) bracket fails for q={q}, b={b}")
    return bisect(flip_F, 0.0, hi, args=(q, b), xtol=1e-16, rtol=4 * np.finfo(float).eps, maxiter=200)


class B2Roots(NamedTuple):
    """Roots ``w = 1 - z`` of the cubic for ``r = 1, b = 2``."""

    trivial: float
    plus: float
    minus: float


def flip_roots_b2(q: float) -> B2Roots:
    """``q/2`` and ``(q/4)((3-q) ± sqrt(9-10q+q^2))``; ``plus`` is the feasible one."""
    if not (2.0 / 3.0 - 1e-12 <= q <= 1.0):
        raise ParameterError(f"q must lie in [2/3, 1] (got {q})")
    disc = 9.0 - 10.0 * q + q * q
    if disc < -1e-15:
        raise NumericError(f"negative discriminant {disc} for q={q}")
    s = math.sqrt(max(disc, 0.0))
    return B2Roots(q / 2.0, q / 4.0 * ((3.0 - q) + s), q / 4.0 * ((3.0 - q) - s))


def theta_flip(q: float) -> float:
    """Flip-walk cover constant for ``r = 1, b = 2`` with ``q = 2 rho_B``.

    The formula is evaluated on all of ``(0, 1]``; only ``q >= 2/3`` has
    ``rho_R <= rho_B``.  Diverges (returns ``inf``) at ``q = 1``.
    """
    if not 0.0 < q <= 1.0:
        raise ParameterError(f"q must lie in (0, 1] (got {q})")
    s = math.sqrt(9.0 - 10.0 * q + q * q)
    tail = 1.0 - q + s
    if tail <= 0.0:
        return math.inf
    return 2.0 / (q * (5.0 - q + s)) + 2.0 / (q * tail)


# -- first visit ---------------------------------------------------------------


def returns_tree(s: int) -> float:
    """Expected visits to a vertex of the infinite ``s``-regular tree: ``(s-1)/(s-2)``."""
    if s <= 2:
        raise ParameterError(f"need s >= 3 (got s={s})")
    return (s - 1) / (s - 2)


def p_v(pi_v: float, R_v: float) -> float:
    """Per-step hitting rate ``pi_v / R_v``."""
    if pi_v <= 0 or R_v < 1:
        raise ParameterError("need pi_v > 0 and R_v >= 1")
    return pi_v / R_v


def nonvisit_prob(p: float, t):
    """Leading-order probability ``(1 + p)^(-t)`` that a vertex is still unvisited."""
    if not 0.0 < p < 1.0:
        raise ParameterError(f"rate must lie in (0, 1) (got {p})")
    t = np.asarray(t, dtype=float)
    if np.any(t < 0):
        raise ParameterError("t must be non-negative")
    out = np.power(1.0 + p, -t)
    return float(out) if out.ndim == 0 else out


# -- predictions ----------------------------------------------------------------


@dataclass(frozen=True)
class CoverConstant:
    """Predicted cover time ``theta * n ln n`` (``inf`` when failure is expected)."""

    model: str
    n: int
    theta: float
    regime: str = "n log n"

    @property
    def predicted_cover(self) -> float:
        return self.theta * self.n * math.log(self.n)

    @property
    def failure_expected(self) -> bool:
        return math.isinf(self.theta)


MODELS = ("simple", "blue", "smooth", "congestion", "flip", "oblivious")


def _req(params: dict, *names):
    missing = [k for k in names if k not in params]
    if missing:
        raise ParameterError(f"missing parameters: {', '.join(missing)}")
    return [params[k] for k in names]


def predict(model: str, params: dict, n: int) -> CoverConstant:
    """Asymptotic cover time for a walk model on an ``n``-vertex graph.

    ``params`` by model:

    - ``simple``: ``r``, ``b``
    - ``blue``: ``b``
    - ``smooth``: ``alpha``, ``r``, ``b``
    - ``congestion``: ``C``, ``F``, ``r``
    - ``flip``: ``r``, ``b``, ``rho_R``, ``rho_B``
    - ``oblivious``: ``r``, ``b``, ``graph`` (``union``, ``hamilton`` or
      ``twofactor``) and either ``budget`` (red uses) or ``budget_frac``
      (see :func:`oblivious_budget`)
    """
    if n < 2:
        raise ParameterError("need n >= 2")
    if model == "simple":
        r, b = _req(params, "r", "b")
        return CoverConstant(model, n, sigma_rb(r, b))
    if model == "blue":
        (b,) = _req(params, "b")
        return CoverConstant(model, n, sigma_b(b))
    if model == "smooth":
        alpha, r, b = _req(params, "alpha", "r", "b")
        return CoverConstant(model, n, smooth_cover_const(alpha, r, b))
    if model == "congestion":
        C, F, r = _req(params, "C", "F", "r")
        return CoverConstant(model, n, congestion_cover_const(C, F, r))
    if model == "flip":
        r, b, rho_R, rho_B = _req(params, "r", "b", "rho_R", "rho_B")
        return CoverConstant(model, n, flip_fixed_point(r, b, rho_R, rho_B).returns)
    if model == "oblivious":
        return _predict_oblivious(params, n)
    raise ParameterError(f"unknown model {model!r}; choose from {', '.join(MODELS)}")


def _predict_oblivious(params: dict, n: int) -> CoverConstant:
    r, b = _req(params, "r", "b")
    graph = params.get("graph", "union" if b >= 3 else "hamilton")
    srb = sigma_rb(r, b)
    nlogn = n * math.log(n)
    if "budget" in params:
        budget = params["budget"]
    else:
        (frac,) = _req(params, "budget_frac")
        budget = oblivious_budget(frac, n, r, b)
    # fraction of the unconstrained cover time the walk can afford before going blue-only
    alpha = budget * (r + b) / (r * srb * nlogn)
    if alpha >= 1.0:
        return CoverConstant("oblivious", n, srb)
    if b >= 3:
        return CoverConstant("oblivious", n, smooth_cover_const(alpha, r, b))
    if b != 2:
        raise ParameterError(f"need b >= 2 (got b={b})")
    if graph == "hamilton":
        return CoverConstant("oblivious", n, n / (2.0 * math.log(n)), regime="n^2/2")
    if graph == "twofactor":
        return CoverConstant("oblivious", n, math.inf, regime="fails to cover")
    raise ParameterError(f"oblivious b=2 prediction needs graph 'hamilton' or 'twofactor' (got {graph!r})")
