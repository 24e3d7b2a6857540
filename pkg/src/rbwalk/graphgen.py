"""Random red/blue regular graph ensembles and their structural statistics.

Graphs are built with the configuration model: a uniformly random pairing of
``n*d`` stubs, restarted from scratch whenever it produces a loop or a
repeated edge.  Conditioning on simplicity this way gives the uniform
distribution over simple ``d``-regular graphs on ``[n]``.
"""
from __future__ import annotations

import math
from collections import deque
from dataclasses import dataclass, field
from enum import IntEnum
from functools import cached_property
from pathlib import Path

import numpy as np
import scipy.sparse as sp
from scipy.sparse.csgraph import connected_components

from .errors import GenerationError, ParameterError, StructureError

__all__ = [
    "Color",
    "ColoredGraph",
    "StructureReport",
    "MAX_PAIRING_ATTEMPTS",
    "gen_regular",
    "gen_union",
    "gen_hamilton_union",
    "gen_twofactor_union",
    "single_color_graph",
    "cycle_graph",
    "small_cycle_threshold",
    "second_eigenvalue",
    "analyze_structure",
]

MAX_PAIRING_ATTEMPTS = 1_000_000


class Color(IntEnum):
    RED = 0
    BLUE = 1

    @property
    def letter(self) -> str:
        return "R" if self is Color.RED else "B"

    @classmethod
    def from_letter(cls, s: str) -> "Color":
        if s == "R":
            return cls.RED
        if s == "B":
            return cls.BLUE
        raise ParameterError(f"unknown edge color {s!r} (expected R or B)")


def _rng(seed) -> np.random.Generator:
    if isinstance(seed, np.random.Generator):
        return seed
    return np.random.default_rng(seed)


@dataclass(frozen=True, eq=False)
class ColoredGraph:
    """Immutable regular multigraph with red and blue edges.

    Every vertex has exactly ``r`` red and ``b`` blue edge endpoints.  Edge
    ``i`` is ``edges[i] = (u, v)`` with ``u < v`` and color ``colors[i]``.
    A red and a blue edge may join the same pair; two edges of one color may
    not.

    ``nbr[v, k]`` is the far end of the ``k``-th edge slot at ``v`` and
    ``eid[v, k]`` its edge id.  Slots ``0..r-1`` are red and ``r..r+b-1``
    blue, each group in increasing edge-id order.  The walk kernels index
    these arrays directly.
    """

    n: int
    r: int
    b: int
    edges: np.ndarray = field(repr=False)
    colors: np.ndarray = field(repr=False)
    nbr: np.ndarray = field(repr=False)
    eid: np.ndarray = field(repr=False)

    @classmethod
    def from_edges(cls, n: int, red_edges, blue_edges) -> "ColoredGraph":
        """Build a graph from red and blue edge lists, validating regularity.

        Edge ids are assigned in order: all red edges first, then blue.
        """
        red = _as_edge_array(red_edges)
        blue = _as_edge_array(blue_edges)
        if n < 1:
            raise ParameterError("graph needs at least one vertex")
        for name, arr in (("red", red), ("blue", blue)):
            if arr.size and (arr.min() < 0 or arr.max() >= n):
                raise ParameterError(f"{name} edge endpoint out of range [0, {n})")
            if np.any(arr[:, 0] == arr[:, 1]):
                raise ParameterError(f"{name} edges contain a self-loop")
            keys = np.sort(arr[:, 0] * n + arr[:, 1])
            if np.any(keys[1:] == keys[:-1]):
                raise ParameterError(f"{name} edges contain parallel edges")
        r = _common_degree(n, red, "red")
        b = _common_degree(n, blue, "blue")
        if r + b == 0:
            raise ParameterError("graph has no edges")
        edges = np.concatenate([red, blue]).astype(np.int64)
        colors = np.concatenate(
            [np.full(len(red), Color.RED, np.int8), np.full(len(blue), Color.BLUE, np.int8)]
        )
        return cls._assemble(n, r, b, edges, colors)

    @classmethod
    def _assemble(cls, n, r, b, edges, colors) -> "ColoredGraph":
        m = len(edges)
        d = r + b
        ids = np.arange(m, dtype=np.int64)
        src = np.concatenate([edges[:, 0], edges[:, 1]])
        dst = np.concatenate([edges[:, 1], edges[:, 0]])
        col = np.concatenate([colors, colors])
        ids2 = np.concatenate([ids, ids])
        order = np.lexsort((ids2, col, src))
        nbr = dst[order].astype(np.int32).reshape(n, d)
        eid = ids2[order].reshape(n, d)
        for a in (edges, colors, nbr, eid):
            a.setflags(write=False)
        return cls(n=n, r=r, b=b, edges=edges, colors=colors, nbr=nbr, eid=eid)

    @property
    def d(self) -> int:
        return self.r + self.b

    @property
    def m(self) -> int:
        return len(self.edges)

    def adjacency(self, v: int) -> list[tuple[int, Color, int]]:
        """``(neighbor, color, edge id)`` for every edge slot at ``v``."""
        return [
            (int(self.nbr[v, k]), Color.RED if k < self.r else Color.BLUE, int(self.eid[v, k]))
            for k in range(self.d)
        ]

    def edges_of(self, color: Color) -> np.ndarray:
        return self.edges[self.colors == color]

    def __eq__(self, other) -> bool:
        if not isinstance(other, ColoredGraph):
            return NotImplemented
        return (
            (self.n, self.r, self.b) == (other.n, other.r, other.b)
            and np.array_equal(self.edges, other.edges)
            and np.array_equal(self.colors, other.colors)
        )

    __hash__ = None

    def _sparse(self, mask) -> sp.csr_matrix:
        e = self.edges[mask]
        data = np.ones(2 * len(e))
        rows = np.concatenate([e[:, 0], e[:, 1]])
        cols = np.concatenate([e[:, 1], e[:, 0]])
        return sp.csr_matrix((data, (rows, cols)), shape=(self.n, self.n))

    @cached_property
    def adjacency_matrix(self) -> sp.csr_matrix:
        """Symmetric sparse adjacency matrix counting edge multiplicity."""
        return self._sparse(slice(None))

    @cached_property
    def blue_components(self) -> np.ndarray:
        """Connected-component label of every vertex in the blue subgraph."""
        _, labels = connected_components(self._sparse(self.colors == Color.BLUE), directed=False)
        labels.setflags(write=False)
        return labels

    def is_connected(self) -> bool:
        k, _ = connected_components(self.adjacency_matrix, directed=False)
        return k == 1

    def blue_cycle_lengths(self) -> tuple[int, ...]:
        """Sorted (descending) cycle lengths of the blue 2-factor; needs ``b == 2``."""
        if self.b != 2:
            raise ParameterError("blue subgraph is a union of cycles only when b == 2")
        sizes = np.bincount(self.blue_components)
        return tuple(int(s) for s in np.sort(sizes)[::-1])

    # -- text format ---------------------------------------------------------

    def to_text(self) -> str:
        lines = [f"n {self.n} r {self.r} b {self.b}"]
        letters = ("R", "B")
        lines.extend(
            f"{u} {v} {letters[c]}" for (u, v), c in zip(self.edges.tolist(), self.colors.tolist())
        )
        return "\n".join(lines) + "\n"

    @classmethod
    def from_text(cls, text: str) -> "ColoredGraph":
        rows = text.splitlines()
        if not rows:
            raise ParameterError("empty graph file")
        head = rows[0].split()
        if len(head) != 6 or head[0::2] != ["n", "r", "b"]:
            raise ParameterError(f"bad header line {rows[0]!r}; expected 'n <n> r <r> b <b>'")
        try:
            n, r, b = (int(x) for x in head[1::2])
        except ValueError as exc:
            raise ParameterError(f"bad header line {rows[0]!r}") from exc
        edges, colors = [], []
        for lineno, line in enumerate(rows[1:], start=2):
            parts = line.split()
            if len(parts) != 3:
                raise ParameterError(f"line {lineno}: expected '<u> <v> <R|B>', got {line!r}")
            try:
                u, v = int(parts[0]), int(parts[1])
            except ValueError as exc:
                raise ParameterError(f"line {lineno}: bad vertex id") from exc
            if u >= v:
                raise ParameterError(f"line {lineno}: edge endpoints must satisfy u < v")
            edges.append((u, v))
            colors.append(Color.from_letter(parts[2]))
        e = np.asarray(edges, dtype=np.int64).reshape(-1, 2)
        c = np.asarray(colors, dtype=np.int8)
        g = cls.from_edges(n, e[c == Color.RED], e[c == Color.BLUE])
        if (g.r, g.b) != (r, b):
            raise ParameterError(f"header says r={r}, b={b} but edges give r={g.r}, b={g.b}")
        # keep the file's edge order so that re-serialization is byte-identical
        return cls._assemble(n, r, b, e, c)

    def save(self, path) -> None:
        Path(path).write_text(self.to_text(), encoding="utf-8", newline="\n")

    @classmethod
    def load(cls, path) -> "ColoredGraph":
        return cls.from_text(Path(path).read_text(encoding="utf-8"))


def _as_edge_array(edges) -> np.ndarray:
    arr = np.asarray(edges, dtype=np.int64).reshape(-1, 2)
    return np.sort(arr, axis=1)


def _common_degree(n: int, e: np.ndarray, name: str) -> int:
    deg = np.bincount(e.ravel(), minlength=n)
    if deg.size and np.any(deg != deg[0]):
        raise ParameterError(f"{name} subgraph is not regular")
    return int(deg[0]) if deg.size else 0


# -- generators --------------------------------------------------------------


def _check_regular_params(n: int, d: int) -> None:
    if d < 1:
        raise ParameterError(f"degree must be at least 1 (got d={d})")
    if n <= d:
        raise ParameterError(f"need n > d (got n={n}, d={d})")
    if (n * d) % 2:
        raise ParameterError(f"n·d must be even (got n={n}, d={d})")


def _pairing(n: int, d: int, rng: np.random.Generator, max_attempts: int) -> np.ndarray:
    stubs = np.repeat(np.arange(n, dtype=np.int64), d)
    for _ in range(max_attempts):
        p = rng.permutation(stubs)
        u, v = p[0::2], p[1::2]
        if np.any(u == v):
            continue
        lo, hi = np.minimum(u, v), np.maximum(u, v)
        keys = np.sort(lo * n + hi)
        if np.any(keys[1:] == keys[:-1]):
            continue
        return np.stack([keys // n, keys % n], axis=1)
    raise GenerationError(
        f"no simple {d}-regular pairing on {n} vertices after {max_attempts} attempts"
    )


def gen_regular(n: int, d: int, seed=None, *, max_attempts: int = MAX_PAIRING_ATTEMPTS) -> np.ndarray:
    """Uniformly random simple ``d``-regular graph on ``range(n)``.

    Returns the ``(n*d/2, 2)`` edge array, rows sorted, ``u < v``.
    """
    _check_regular_params(n, d)
    return _pairing(n, d, _rng(seed), max_attempts)


def single_color_graph(edges, n: int, color: Color = Color.BLUE) -> ColoredGraph:
    """Wrap a regular edge list as a one-colored graph."""
    e = np.asarray(edges, dtype=np.int64).reshape(-1, 2)
    empty = np.empty((0, 2), dtype=np.int64)
    if color == Color.RED:
        return ColoredGraph.from_edges(n, e, empty)
    return ColoredGraph.from_edges(n, empty, e)


def cycle_graph(n: int, color: Color = Color.BLUE) -> ColoredGraph:
    """The cycle ``0-1-...-(n-1)-0`` in one color."""
    if n < 3:
        raise ParameterError("a cycle needs n >= 3")
    v = np.arange(n)
    return single_color_graph(np.stack([v, (v + 1) % n], axis=1), n, color)


def _check_red(n: int, r: int) -> None:
    if r < 1:
        raise ParameterError(f"red degree must be at least 1 (got r={r})")
    if (n * r) % 2:
        raise ParameterError(f"n·r must be even (got n={n}, r={r})")
    if n <= r:
        raise ParameterError(f"need n > r (got n={n}, r={r})")


def gen_union(n: int, r: int, b: int, seed=None) -> ColoredGraph:
    """Union of independent random red ``r``-regular and blue ``b``-regular graphs.

    The red pairing is drawn first, then the blue one, from a single
    generator seeded by ``seed``.
    """
    if b < 2:
        raise ParameterError(f"blue degree must be at least 2 (got b={b})")
    _check_red(n, r)
    if (n * b) % 2:
        raise ParameterError(f"n·b must be even (got n={n}, b={b})")
    if n <= b:
        raise ParameterError(f"need n > b (got n={n}, b={b})")
    rng = _rng(seed)
    red = _pairing(n, r, rng, MAX_PAIRING_ATTEMPTS)
    blue = _pairing(n, b, rng, MAX_PAIRING_ATTEMPTS)
    return ColoredGraph.from_edges(n, red, blue)


def gen_hamilton_union(n: int, r: int, seed=None) -> ColoredGraph:
    """Blue Hamilton cycle (randomly relabelled) plus a random red ``r``-regular graph."""
    if n < 3:
        raise ParameterError(f"need n >= 3 for a Hamilton cycle (got n={n})")
    _check_red(n, r)
    rng = _rng(seed)
    perm = rng.permutation(n)
    blue = np.stack([perm, np.roll(perm, -1)], axis=1)
    red = _pairing(n, r, rng, MAX_PAIRING_ATTEMPTS)
    return ColoredGraph.from_edges(n, red, _canonical(blue))


def gen_twofactor_union(n: int, r: int, seed=None) -> ColoredGraph:
    """Random blue 2-factor (simple 2-regular graph) plus a random red ``r``-regular graph."""
    if n < 3:
        raise ParameterError(f"need n >= 3 for a 2-factor (got n={n})")
    _check_red(n, r)
    rng = _rng(seed)
    blue = _pairing(n, 2, rng, MAX_PAIRING_ATTEMPTS)
    red = _pairing(n, r, rng, MAX_PAIRING_ATTEMPTS)
    return ColoredGraph.from_edges(n, red, blue)


def _canonical(e: np.ndarray) -> np.ndarray:
    e = np.sort(e, axis=1)
    return e[np.lexsort((e[:, 1], e[:, 0]))]


# -- structure ---------------------------------------------------------------


@dataclass(frozen=True)
class StructureReport:
    sigma: int
    locally_tree_like: frozenset[int] = field(repr=False)
    non_tree_like_count: int
    lambda2: float
    blue_cycle_lengths: tuple[int, ...] | None = None


def small_cycle_threshold(n: int) -> int:
    """``floor(sqrt(ln n))``: cycles no longer than this count as small."""
    if n < 2:
        return 0
    return int(math.floor(math.sqrt(math.log(n))))


def _shortest_cycle_through(g: ColoredGraph, root: int, limit: int) -> int | None:
    # BFS labelled by first edge taken from root; an edge joining two different
    # branches closes a simple cycle through root of length dist(x)+dist(y)+1.
    if limit < 2:
        return None
    depth_cap = limit // 2
    dist = {root: 0}
    branch = {root: -1}
    parent_edge = {root: -1}
    best = None
    queue = deque([root])
    nbr, eid = g.nbr, g.eid
    while queue:
        x = queue.popleft()
        dx = dist[x]
        if dx > depth_cap:
            break
        for k in range(g.d):
            e = int(eid[x, k])
            if e == parent_edge[x]:
                continue
            y = int(nbr[x, k])
            if y in dist:
                if branch[y] != branch[x]:
                    length = dx + dist[y] + 1
                    if length <= limit and (best is None or length < best):
                        best = length
                continue
            dist[y] = dx + 1
            branch[y] = e if x == root else branch[x]
            parent_edge[y] = e
            queue.append(y)
    return best


def _locally_tree_like(g: ColoredGraph, sigma: int) -> np.ndarray:
    on_small = [u for u in range(g.n) if _shortest_cycle_through(g, u, sigma) is not None]
    if not on_small:
        return np.ones(g.n, dtype=bool)
    dist = np.full(g.n, -1, dtype=np.int64)
    dist[on_small] = 0
    queue = deque(on_small)
    while queue:
        x = queue.popleft()
        if dist[x] >= sigma:
            continue
        for y in g.nbr[x]:
            if dist[y] < 0:
                dist[y] = dist[x] + 1
                queue.append(int(y))
    # unreached vertices are farther than sigma from every small cycle
    return dist < 0


def second_eigenvalue(
    g: ColoredGraph, *, tol: float = 1e-8, max_iter: int = 100_000, seed: int = 0
) -> float:
    """Second-largest eigenvalue magnitude of the simple-walk matrix ``A/d``.

    Power iteration on ``P^2`` with the uniform (stationary) vector projected
    out every step; the Rayleigh quotient of ``P^2`` converges to the largest
    squared magnitude among the remaining eigenvalues.  An eigenvalue ``-1``
    (bipartite graph) therefore shows up as ``1``.
    """
    if g.n < 2:
        return 0.0
    P = g.adjacency_matrix / g.d
    x = np.random.default_rng(seed).standard_normal(g.n)
    x -= x.mean()
    x /= np.linalg.norm(x)
    mu = 0.0
    for _ in range(max_iter):
        y = P @ x
        y -= y.mean()
        mu_new = float(y @ y)
        nrm = math.sqrt(mu_new)
        if nrm == 0.0:
            return 0.0
        x = y / nrm
        if abs(mu_new - mu) < tol:
            mu = mu_new
            break
        mu = mu_new
    return min(1.0, math.sqrt(mu))


def analyze_structure(g: ColoredGraph, *, sigma: int | None = None) -> StructureReport:
    """Small-cycle threshold, locally tree-like vertices, spectral gap, blue cycles.

    A vertex is locally tree-like when no cycle of length at most ``sigma``
    passes within distance ``sigma`` of it.
    """
    if not g.is_connected():
        raise StructureError("graph is disconnected; cover time is undefined")
    if sigma is None:
        sigma = small_cycle_threshold(g.n)
    tree_like = _locally_tree_like(g, sigma)
    return StructureReport(
        sigma=sigma,
        locally_tree_like=frozenset(np.flatnonzero(tree_like).tolist()),
        non_tree_like_count=int(g.n - tree_like.sum()),
        lambda2=second_eigenvalue(g),
        blue_cycle_lengths=g.blue_cycle_lengths() if g.b == 2 else None,
    )
