"""Immutable weighted graphs with deterministic shortest-path machinery.

The whole library leans on three guarantees provided here:

1. distances are exact single-source shortest-path values (nonnegative
   weights, binary heap), computed once per node and cached;
2. every (u, v) pair has a single *canonical* shortest path, the
   lexicographically smallest node sequence among all shortest paths, so
   downstream results are reproducible run to run;
3. hop counts and per-root tree parents are derived from those canonical
   paths, never from an arbitrary predecessor choice.

Node ids are dense integers 0..n-1 internally; the edge-list loader maps
arbitrary string tokens to ids in first-seen order and keeps the original
labels around for I/O.
"""

from __future__ import annotations

import heapq
import itertools
import math
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np


class GraphError(ValueError):
    """Raised for malformed edge lists and invalid graph structure."""


@dataclass(frozen=True)
class CanonicalPath:
    """One shortest path, fixed by the lexicographic tie-break.

    ``nodes`` runs from the start node to the end node; ``edges`` holds the
    traversed (u, v) pairs in order; ``total_weight`` equals the shortest-path
    distance between the endpoints.
    """

    nodes: tuple[int, ...]
    edges: tuple[tuple[int, int], ...]
    total_weight: float


@dataclass(frozen=True)
class ShortestPathTree:
    """Parent pointers of the canonical shortest-path tree of one root.

    ``parent[v]`` is the predecessor of v on the canonical path from the root
    to v; the root maps to itself.
    """

    root: int
    parent: np.ndarray

    def path_to(self, v: int) -> tuple[int, ...]:
        """Node sequence from the root to ``v`` inside the tree."""
        seq = [v]
        while seq[-1] != self.root:
            seq.append(int(self.parent[seq[-1]]))
        return tuple(reversed(seq))

    def depth(self, v: int) -> int:
        return len(self.path_to(v)) - 1


@dataclass(frozen=True)
class DistanceMatrix:
    """All-pairs weighted distances plus hop counts along canonical paths.

    ``d`` is symmetric with zero diagonal. ``hops[u, v]`` counts the edges of
    the canonical path from u to v; it is not required to be symmetric because
    equally short paths with different edge counts may win the lexicographic
    tie-break from either end.
    """

    d: np.ndarray
    hops: np.ndarray


class Graph:
    """Connected undirected weighted graph, immutable after construction.

    Invariants enforced at build time: no self-loops, no parallel edges,
    strictly positive weights, single connected component. Instances are safe
    to share across threads; the distance matrix is computed lazily and
    cached.
    """

    __slots__ = ("_n", "_edges", "_adj", "_labels", "_label_index",
                 "_integer_weighted", "_meta", "_dm", "_parents")

    def __init__(self,
                 n: int,
                 edges: Iterable[tuple[int, int, float]],
                 labels: Sequence[str] | None = None,
                 meta: dict | None = None):
        canon: dict[tuple[int, int], float] = {}
        for u, v, w in edges:
            if not (0 <= u < n and 0 <= v < n):
                raise GraphError(f"edge ({u}, {v}) out of range for n={n}")
            if u == v:
                raise GraphError(f"self-loop at node {u}")
            if w <= 0:
                raise GraphError(f"nonpositive weight {w} on edge ({u}, {v})")
            key = (u, v) if u < v else (v, u)
            if key in canon:
                raise GraphError(f"parallel/duplicate edge ({u}, {v})")
            canon[key] = float(w)
        self._n = int(n)
        self._edges = tuple(sorted((u, v, w) for (u, v), w in canon.items()))
        adj: list[list[tuple[int, float]]] = [[] for _ in range(n)]
        for u, v, w in self._edges:
            adj[u].append((v, w))
            adj[v].append((u, w))
        self._adj = tuple(tuple(sorted(nbrs)) for nbrs in adj)
        if labels is not None:
            if len(labels) != n:
                raise GraphError("label count does not match node count")
            self._labels = tuple(str(x) for x in labels)
        else:
            self._labels = tuple(str(i) for i in range(n))
        self._label_index = {lab: i for i, lab in enumerate(self._labels)}
        if len(self._label_index) != n:
            raise GraphError("duplicate node labels")
        self._integer_weighted = all(w == int(w) for _, _, w in self._edges)
        self._meta = dict(meta or {})
        self._dm: DistanceMatrix | None = None
        self._parents: np.ndarray | None = None
        self._check_connected()

    def _check_connected(self) -> None:
        if self._n == 0:
            raise GraphError("empty graph")
        seen = np.zeros(self._n, dtype=bool)
        stack = [0]
        seen[0] = True
        while stack:
            u = stack.pop()
            for v, _ in self._adj[u]:
                if not seen[v]:
                    seen[v] = True
                    stack.append(v)
        if not seen.all():
            missing = int(np.flatnonzero(~seen)[0])
            raise GraphError(f"graph is disconnected (node {self._labels[missing]} unreachable)")

    # -- basic accessors ---------------------------------------------------

    @property
    def node_count(self) -> int:
        return self._n

    @property
    def edges(self) -> tuple[tuple[int, int, float], ...]:
        """Edges as (u, v, w) with u < v, sorted."""
        return self._edges

    @property
    def integer_weighted(self) -> bool:
        """True when every edge weight is integral (flag only, no behavior change)."""
        return self._integer_weighted

    @property
    def meta(self) -> dict:
        return dict(self._meta)

    @property
    def labels(self) -> tuple[str, ...]:
        return self._labels

    def label(self, node: int) -> str:
        return self._labels[node]

    def index(self, label: str) -> int:
        try:
            return self._label_index[label]
        except KeyError:
            raise GraphError(f"unknown node label {label!r}") from None

    def neighbors(self, u: int) -> tuple[tuple[int, float], ...]:
        """Sorted (neighbor, weight) pairs of u."""
        return self._adj[u]

    def degree(self, u: int) -> int:
        return len(self._adj[u])

    def edge_weight_array(self) -> np.ndarray:
        """Weights aligned with ``edges`` order; used by the epidemic sampler."""
        return np.array([w for _, _, w in self._edges], dtype=float)

    def weighted_diameter(self) -> float:
        return float(self.distances().d.max())

    # -- shortest paths ----------------------------------------------------

    def _sssp(self, root: int) -> np.ndarray:
        """Single-source distances; plain Dijkstra with a binary heap."""
        dist = np.full(self._n, np.inf)
        dist[root] = 0.0
        heap: list[tuple[float, int]] = [(0.0, root)]
        adj = self._adj
        while heap:
            du, u = heapq.heappop(heap)
            if du > dist[u]:
                continue
            for v, w in adj[u]:
                nd = du + w
                if nd < dist[v]:
                    dist[v] = nd
                    heapq.heappush(heap, (nd, v))
        return dist

    def _canonical_tree(self, root: int, dist: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        """Parents and depths of the canonical shortest-path tree of ``root``.

        Depth-first search over tight edges (dist[u] + w == dist[v]) visiting
        neighbors in ascending id order reaches every node first along the
        lexicographically smallest shortest path, i.e. exactly the canonical
        one. Tightness uses exact float equality, which holds for at least one
        predecessor of every node because distances were accumulated from the
        same sums.
        """
        n = self._n
        parent = np.full(n, -1, dtype=np.int32)
        depth = np.zeros(n, dtype=np.int32)
        parent[root] = root
        adj = self._adj
        stack: list[tuple[int, int]] = [(root, 0)]  # (node, adjacency offset)
        while stack:
            u, off = stack[-1]
            nbrs = adj[u]
            advanced = False
            while off < len(nbrs):
                v, w = nbrs[off]
                off += 1
                if parent[v] < 0 and dist[u] + w == dist[v]:
                    stack[-1] = (u, off)
                    parent[v] = u
                    depth[v] = depth[u] + 1
                    stack.append((v, 0))
                    advanced = True
                    break
            if not advanced:
                stack.pop()
        return parent, depth

    def distances(self) -> DistanceMatrix:
        """All-pairs distances and canonical hop counts (cached)."""
        if self._dm is None:
            n = self._n
            d = np.empty((n, n), dtype=float)
            hops = np.empty((n, n), dtype=np.int32)
            parents = np.empty((n, n), dtype=np.int32)
            for root in range(n):
                dist = self._sssp(root)
                par, dep = self._canonical_tree(root, dist)
                d[root] = dist
                hops[root] = dep
                parents[root] = par
            d.setflags(write=False)
            hops.setflags(write=False)
            parents.setflags(write=False)
            self._parents = parents
            self._dm = DistanceMatrix(d=d, hops=hops)
        return self._dm

    def _parent_matrix(self) -> np.ndarray:
        self.distances()
        assert self._parents is not None
        return self._parents

    def __reduce__(self):
        state = {"dm": self._dm, "parents": self._parents}
        return (_rebuild_graph, (self._n, self._edges, self._labels, self._meta), state)

    def __setstate__(self, state):
        # Carry the distance cache across pickling so worker processes do not
        # redo the all-pairs computation.
        if state.get("dm") is not None:
            self._dm = state["dm"]
            self._parents = state["parents"]


def _rebuild_graph(n, edges, labels, meta):
    return Graph(n, edges, labels=labels, meta=meta)


def all_pairs_shortest_paths(g: Graph) -> DistanceMatrix:
    """Exact weighted distances plus hop counts on the canonical paths."""
    return g.distances()


def canonical_shortest_path(g: Graph, u: int, v: int) -> CanonicalPath:
    """The unique canonical shortest path from u to v.

    Among all shortest paths this is the one whose node sequence is
    lexicographically smallest, so the same (graph, u, v) always yields the
    same path.
    """
    dm = g.distances()
    parents = g._parent_matrix()[u]
    seq = [v]
    while seq[-1] != u:
        p = int(parents[seq[-1]])
        if p < 0:
            raise GraphError(f"no path between {u} and {v}")
        seq.append(p)
    nodes = tuple(reversed(seq))
    edges = tuple((nodes[i], nodes[i + 1]) for i in range(len(nodes) - 1))
    return CanonicalPath(nodes=nodes, edges=edges, total_weight=float(dm.d[u, v]))


def shortest_path_tree(g: Graph, root: int) -> ShortestPathTree:
    """Canonical shortest-path tree rooted at ``root``.

    Parent pointers agree with ``canonical_shortest_path`` prefixes, and the
    tree distance from the root to any node equals the graph distance.
    """
    parent = g._parent_matrix()[root].copy()
    parent.setflags(write=False)
    return ShortestPathTree(root=root, parent=parent)


def shortest_path_counts(g: Graph, root: int) -> np.ndarray:
    """Number of distinct shortest paths from ``root`` to every node."""
    dist = g.distances().d[root]
    order = np.argsort(dist, kind="stable")
    sigma = np.zeros(g.node_count, dtype=float)
    sigma[root] = 1.0
    for u in order:
        for v, w in g.neighbors(int(u)):
            if dist[u] + w == dist[v]:
                sigma[v] += sigma[u]
    return sigma


# -- edge-list ingestion ---------------------------------------------------


def load_edge_list(source) -> Graph:
    """Build a Graph from `u v w` triples, one per line.

    ``source`` may be a string, bytes, or any iterable of lines (e.g. an open
    file). ``#`` starts a comment; blank lines are skipped. Node ids are
    arbitrary whitespace-free tokens, mapped to dense integers in first-seen
    order. Weights must be strictly positive; non-integer weights are
    accepted but flagged on the graph (``integer_weighted`` is False).
    """
    if isinstance(source, bytes):
        lines = source.decode("utf-8").splitlines()
    elif isinstance(source, str):
        lines = source.splitlines()
    else:
        lines = [ln.decode("utf-8") if isinstance(ln, bytes) else ln for ln in source]

    labels: list[str] = []
    index: dict[str, int] = {}
    edges: list[tuple[int, int, float]] = []
    seen: set[tuple[int, int]] = set()

    def node_id(tok: str) -> int:
        if tok not in index:
            index[tok] = len(labels)
            labels.append(tok)
        return index[tok]

    for lineno, raw in enumerate(lines, start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        parts = line.split()
        if len(parts) != 3:
            raise GraphError(f"line {lineno}: expected 'u v w', got {raw!r}")
        tu, tv, tw = parts
        try:
            w = float(tw)
        except ValueError:
            raise GraphError(f"line {lineno}: bad weight {tw!r}") from None
        if not math.isfinite(w) or w <= 0:
            raise GraphError(f"line {lineno}: nonpositive weight {tw}")
        u, v = node_id(tu), node_id(tv)
        if u == v:
            raise GraphError(f"line {lineno}: self-loop at {tu!r}")
        key = (u, v) if u < v else (v, u)
        if key in seen:
            raise GraphError(f"line {lineno}: parallel/duplicate edge {tu} {tv}")
        seen.add(key)
        edges.append((u, v, w))

    if not edges:
        raise GraphError("edge list is empty")
    return Graph(len(labels), edges, labels=labels)


def load_edge_list_file(path) -> Graph:
    with open(path, "rb") as fh:
        return load_edge_list(fh.read())


# -- generators ------------------------------------------------------------


def path_graph(n: int, w: float = 1.0) -> Graph:
    if n < 2:
        raise GraphError("path needs n >= 2")
    return Graph(n, [(i, i + 1, w) for i in range(n - 1)],
                 meta={"generator": f"path({n},{w})"})


def cycle_graph(n: int, w: float = 1.0) -> Graph:
    if n < 3:
        raise GraphError("cycle needs n >= 3")
    edges = [(i, (i + 1) % n, w) for i in range(n)]
    return Graph(n, edges, meta={"generator": f"cycle({n},{w})"})


def star_graph(n: int, w: float = 1.0) -> Graph:
    """Star on n nodes total: center 0 and n-1 leaves."""
    if n < 2:
        raise GraphError("star needs n >= 2")
    return Graph(n, [(0, i, w) for i in range(1, n)],
                 meta={"generator": f"star({n},{w})"})


def cycle_with_leaf(n: int, w: float = 1.0) -> Graph:
    """Cycle of length n plus one extra leaf node (id n) attached to node 0."""
    if n < 3:
        raise GraphError("cycle_with_leaf needs n >= 3")
    edges = [(i, (i + 1) % n, w) for i in range(n)]
    edges.append((0, n, w))
    return Graph(n + 1, edges, meta={"generator": f"cycle_with_leaf({n},{w})"})


def random_geometric_graph(n: int, r: float, seed: int, max_tries: int = 1000) -> Graph:
    """Unit-weight random geometric graph on the unit square.

    Nodes are uniform points; edges connect pairs within Euclidean distance
    ``r``. Disconnected draws are rejected and the seed is bumped by one until
    a connected graph appears; the seed actually used is recorded in
    ``meta['seed_used']``.
    """
    if n < 2 or not (0 < r):
        raise GraphError("random_geometric needs n >= 2 and r > 0")
    for attempt in range(max_tries):
        s = seed + attempt
        rng = np.random.default_rng(s)
        pts = rng.random((n, 2))
        diff = pts[:, None, :] - pts[None, :, :]
        close = (diff ** 2).sum(axis=2) <= r * r
        edges = [(i, j, 1.0) for i in range(n) for j in range(i + 1, n) if close[i, j]]
        try:
            return Graph(n, edges,
                         meta={"generator": f"random_geometric({n},{r})",
                               "seed_requested": seed, "seed_used": s})
        except GraphError:
            continue
    raise GraphError(f"no connected geometric graph in {max_tries} tries from seed {seed}")


def barabasi_albert_graph(n: int, m: int, seed: int) -> Graph:
    """Unit-weight preferential-attachment graph.

    Convention: the seed graph is a clique on m+1 nodes; each later node
    attaches to m distinct existing nodes chosen proportionally to degree.
    Edge count is therefore C(m+1, 2) + (n - m - 1) * m.
    """
    if m < 1 or m >= n:
        raise GraphError("barabasi_albert needs 1 <= m < n")
    rng = np.random.default_rng(seed)
    edges = [(i, j, 1.0) for i in range(m + 1) for j in range(i + 1, m + 1)]
    # flat endpoint list makes degree-proportional sampling a uniform pick
    attachment: list[int] = [e for i in range(m + 1) for j in range(i + 1, m + 1) for e in (i, j)]
    for new in range(m + 1, n):
        targets: set[int] = set()
        while len(targets) < m:
            targets.add(attachment[int(rng.integers(len(attachment)))])
        for t in sorted(targets):
            edges.append((t, new, 1.0))
            attachment.extend((t, new))
    return Graph(n, edges, meta={"generator": f"barabasi_albert({n},{m})", "seed_used": seed})


_GENERATORS = {
    "path": path_graph,
    "cycle": cycle_graph,
    "star": star_graph,
    "cycle_with_leaf": cycle_with_leaf,
    "random_geometric": random_geometric_graph,
    "barabasi_albert": barabasi_albert_graph,
}


def generate(kind: str, *args, **kwargs) -> Graph:
    """Dispatch to a named generator; deterministic for a given seed."""
    try:
        fn = _GENERATORS[kind]
    except KeyError:
        raise GraphError(f"unknown generator {kind!r}; have {sorted(_GENERATORS)}") from None
    return fn(*args, **kwargs)
