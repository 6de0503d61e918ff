"""Observer placement algorithms and benchmarks.

Two placements target source localization directly. The low-variance greedy
grows an observer set from every starting node, each step adding the node
that most increases the number of distance-vector equivalence classes
(equivalently the zero-variance success probability), and keeps the best
final set. The high-variance greedy instead maximizes the number of nodes
covered by short observer-to-observer shortest paths, which spreads observers
uniformly and caps how much delay noise can accumulate between the relevant
observer pairs.

Benchmarks: betweenness centrality, greedy coverage rate, greedy k-median,
plus greedy variants that minimize partition entropy or the expected
source-estimate distance. A brute-force enumerator serves as the optimality
oracle at small sizes, and a budget loop finds the smallest observer count
that guarantees perfect zero-variance localization.

Every argmax/argmin tie is broken by lowest node id, and seed loops iterate
ascending keeping the first best, so results are fully reproducible.
"""

from __future__ import annotations

import itertools
import math
import warnings
from dataclasses import dataclass
from math import comb

import numpy as np
from scipy.special import gammaln

from .graphs import Graph, canonical_shortest_path
from . import resolution
from .resolution import (EquivalencePartition, ObserverSet, Prior, partition,
                         single_class_partition)

_LN2 = math.log(2.0)


@dataclass(frozen=True)
class LengthConstraint:
    """Maximum useful observer-to-observer weighted path length."""

    value: float

    def __post_init__(self):
        if self.value <= 0:
            raise ValueError("length constraint must be positive")


def _length_value(L) -> float:
    return float(L.value if isinstance(L, LengthConstraint) else L)


@dataclass(frozen=True)
class PlacementMetrics:
    """Analytic quality metrics of one observer set (uniform prior)."""

    p_s: float
    e_d_weighted: float
    e_d_hops: float
    entropy: float
    p_l_size: int | None = None


@dataclass(frozen=True)
class PlacementResult:
    observers: ObserverSet
    objective_trace: tuple[float, ...]
    metrics: PlacementMetrics
    algorithm: str
    params: dict


def evaluate_observers(g: Graph, observers, L=None) -> PlacementMetrics:
    """Analytic metrics for any observer set; single observers carry no
    information, so they score as one big class."""
    obs = sorted(set(int(o) for o in observers))
    prior = Prior.uniform(g.node_count)
    if len(obs) >= 2:
        part = partition(g, ObserverSet(obs))
    else:
        part = single_class_partition(g.node_count)
    p_l = len(p_l_nodes(g, obs, L)) if L is not None else None
    return PlacementMetrics(
        p_s=resolution.success_probability(part, prior),
        e_d_weighted=resolution.expected_distance(g, part, prior, "weighted"),
        e_d_hops=resolution.expected_distance(g, part, prior, "hops"),
        entropy=resolution.entropy(part),
        p_l_size=p_l,
    )


# -- shared greedy engine over partition refinements -------------------------


def _quantized_distances(g: Graph) -> np.ndarray:
    return np.round(g.distances().d / resolution.EQUALITY_TOLERANCE).astype(np.int64)


def _refine_key(labels: np.ndarray, delta: np.ndarray) -> np.ndarray:
    """Collision-free combination of current class labels and a new
    distance-difference column."""
    mn = int(delta.min())
    span = int(delta.max()) - mn + 1
    return labels * span + (delta - mn)


def _score_class_count(key: np.ndarray, _dist: np.ndarray | None) -> float:
    return float(np.unique(key).size)


def _score_neg_entropy(key: np.ndarray, _dist: np.ndarray | None) -> float:
    _, counts = np.unique(key, return_counts=True)
    return -float(gammaln(counts + 1).sum())


def _score_neg_expected_distance(key: np.ndarray, dist: np.ndarray) -> float:
    order = np.argsort(key, kind="stable")
    sk = key[order]
    starts = np.flatnonzero(np.r_[True, sk[1:] != sk[:-1]])
    sub = dist[np.ix_(order, order)]
    by_row = np.add.reduceat(sub, starts, axis=0)
    blocks = np.add.reduceat(by_row, starts, axis=1)
    counts = np.diff(np.r_[starts, key.size])
    n = key.size
    return -float((blocks.diagonal() / counts).sum() / n)


_SCORERS = {
    "class_count": _score_class_count,
    "neg_entropy": _score_neg_entropy,
    "neg_expected_distance": _score_neg_expected_distance,
}


def greedy_trajectory(g: Graph, seed_node: int, k_max: int, objective: str,
                      dist: np.ndarray | None = None) -> tuple[list[int], int]:
    """Grow {seed_node} one observer at a time up to ``k_max``.

    ``objective`` names a scorer (higher is better); growth stops early once
    the partition is all singletons, which is optimal for every objective
    here. Returns the chosen nodes in insertion order plus the number of
    candidate evaluations (for the complexity checks).
    """
    scorer = _SCORERS[objective]
    n = g.node_count
    dq = _quantized_distances(g)
    base = dq[:, seed_node]
    labels = np.zeros(n, dtype=np.int64)
    q = 1
    chosen = [seed_node]
    member = np.zeros(n, dtype=bool)
    member[seed_node] = True
    evals = 0
    while q < n and len(chosen) < k_max:
        best_score = -math.inf
        best_z = -1
        best_key = None
        for z in range(n):
            if member[z]:
                continue
            key = _refine_key(labels, dq[:, z] - base)
            s = scorer(key, dist)
            evals += 1
            if s > best_score:
                best_score, best_z, best_key = s, z, key
        _, labels = np.unique(best_key, return_inverse=True)
        labels = labels.ravel()
        q = int(labels.max()) + 1
        chosen.append(best_z)
        member[best_z] = True
    return chosen, evals


def _labels_for(g: Graph, nodes: list[int]) -> np.ndarray:
    """Class labels of the partition induced by ``nodes`` (size >= 1)."""
    n = g.node_count
    dq = _quantized_distances(g)
    labels = np.zeros(n, dtype=np.int64)
    for z in nodes[1:]:
        key = _refine_key(labels, dq[:, z] - dq[:, nodes[0]])
        _, labels = np.unique(key, return_inverse=True)
        labels = labels.ravel()
    return labels


def _trace_value(g: Graph, labels: np.ndarray, objective: str,
                 dist: np.ndarray | None) -> float:
    n = labels.size
    counts = np.bincount(labels)
    if objective == "class_count":
        return counts.size / n
    if objective == "neg_entropy":
        return float(sum(math.log2(math.factorial(int(c))) for c in counts))
    return -_score_neg_expected_distance(labels, dist)


def _greedy_placement(g: Graph, k: int, seeds, objective: str, algorithm: str,
                      dist: np.ndarray | None,
                      extra_params: dict | None = None) -> PlacementResult:
    n = g.node_count
    if not (2 <= k <= n):
        raise ValueError(f"budget k={k} must satisfy 2 <= k <= {n}")
    seed_list = sorted(range(n)) if seeds is None else sorted(set(int(s) for s in seeds))
    best_value = -math.inf
    best_nodes: list[int] | None = None
    total_evals = 0
    for v in seed_list:
        chosen, evals = greedy_trajectory(g, v, k, objective, dist)
        total_evals += evals
        labels = _labels_for(g, chosen)
        final_q = int(labels.max()) + 1
        if objective == "class_count":
            value = float(final_q)
        else:
            value = -_trace_value(g, labels, objective, dist)  # minimizers
        if value > best_value:
            best_value = value
            best_nodes = chosen
        if final_q == n:
            break  # no later seed can beat an all-singleton partition
    assert best_nodes is not None
    trace = []
    for i in range(1, len(best_nodes) + 1):
        labels = _labels_for(g, best_nodes[:i])
        trace.append(_trace_value(g, labels, objective, dist))
    params = {"k": k, "seeds": None if seeds is None else tuple(seed_list),
              "seed_node": best_nodes[0], "candidate_evals": total_evals}
    params.update(extra_params or {})
    return PlacementResult(
        observers=ObserverSet(best_nodes),
        objective_trace=tuple(trace),
        metrics=evaluate_observers(g, best_nodes),
        algorithm=algorithm,
        params=params,
    )


def lv_obs(g: Graph, k: int, seeds=None) -> PlacementResult:
    """Greedy success-probability placement for the low-variance regime.

    From every seed, repeatedly add the node with the largest gain in the
    number of equivalence classes, stopping at a perfectly resolving set or
    at the budget; the best final set over all seeds wins. The objective
    trace records the zero-variance success probability step by step.
    """
    return _greedy_placement(g, k, seeds, "class_count", "lv", None)


def entropy_greedy_placement(g: Graph, k: int, seeds=None) -> PlacementResult:
    """Same loop as ``lv_obs`` but each step minimizes partition entropy."""
    return _greedy_placement(g, k, seeds, "neg_entropy", "entropy", None)


def expected_distance_greedy_placement(g: Graph, k: int, mode: str = "weighted",
                                       seeds=None) -> PlacementResult:
    """Same loop as ``lv_obs`` but each step minimizes the expected distance
    between true and estimated source (uniform prior)."""
    dm = g.distances()
    dist = dm.d if mode == "weighted" else dm.hops.astype(float)
    if mode not in ("weighted", "hops"):
        raise ValueError(f"unknown mode {mode!r}")
    return _greedy_placement(g, k, seeds, "neg_expected_distance", "edist",
                             dist, {"mode": mode})


# -- path covering ------------------------------------------------------------


def p_l_nodes(g: Graph, S, L) -> frozenset[int]:
    """Nodes on a canonical shortest path of weighted length <= L between two
    observers of S; observers always belong to the set themselves."""
    Lval = _length_value(L)
    obs = sorted(set(int(o) for o in S))
    nodes: set[int] = set(obs)
    d = g.distances().d
    for a, b in itertools.combinations(obs, 2):
        if d[a, b] <= Lval:
            nodes.update(canonical_shortest_path(g, a, b).nodes)
    return frozenset(nodes)


def hv_obs(g: Graph, k: int, L, seeds=None) -> PlacementResult:
    """Greedy path-covering placement for the high-variance regime.

    Each step adds the node that most increases the number of nodes lying on
    observer-to-observer canonical shortest paths of length at most L; the
    best final set over all seeds wins. The objective trace records the
    covered-node count.
    """
    n = g.node_count
    if not (2 <= k <= n):
        raise ValueError(f"budget k={k} must satisfy 2 <= k <= {n}")
    Lval = _length_value(L)
    diam = g.weighted_diameter()
    if not (0 < Lval <= diam + 1e-9):
        raise ValueError(f"L={Lval} outside (0, diameter={diam}]")
    d = g.distances().d
    seed_list = sorted(range(n)) if seeds is None else sorted(set(int(s) for s in seeds))

    path_cache: dict[tuple[int, int], np.ndarray] = {}

    def pair_nodes(a: int, b: int) -> np.ndarray:
        key = (a, b) if a < b else (b, a)
        hit = path_cache.get(key)
        if hit is None:
            hit = np.array(canonical_shortest_path(g, key[0], key[1]).nodes)
            path_cache[key] = hit
        return hit

    best_count = -1
    best_nodes: list[int] | None = None
    best_trace: list[int] | None = None
    total_evals = 0
    for v in seed_list:
        covered = np.zeros(n, dtype=bool)
        covered[v] = True
        obs = [v]
        trace = [1]
        while int(covered.sum()) < n and len(obs) < k:
            step_best = -1
            step_z = -1
            step_cov = None
            for z in range(n):
                if z in obs:
                    continue
                cov = covered.copy()
                cov[z] = True
                for o in obs:
                    if d[z, o] <= Lval:
                        cov[pair_nodes(z, o)] = True
                cnt = int(cov.sum())
                total_evals += 1
                if cnt > step_best:
                    step_best, step_z, step_cov = cnt, z, cov
            obs.append(step_z)
            covered = step_cov
            trace.append(step_best)
        final = int(covered.sum())
        if final > best_count:
            best_count, best_nodes, best_trace = final, obs, trace
        if final == n:
            break
    assert best_nodes is not None and best_trace is not None
    return PlacementResult(
        observers=ObserverSet(best_nodes),
        objective_trace=tuple(float(t) for t in best_trace),
        metrics=evaluate_observers(g, best_nodes, L=Lval),
        algorithm="hv",
        params={"k": k, "L": Lval, "seeds": None if seeds is None else tuple(seed_list),
                "seed_node": best_nodes[0], "candidate_evals": total_evals},
    )


def select_L(g: Graph, k: int, grid) -> LengthConstraint:
    """Pick the largest grid value whose high-variance placement does not
    cover more nodes than the low-variance placement covers unconstrained.

    Falls back to the smallest grid value (with a warning) when every grid
    point overshoots the reference coverage.
    """
    values = sorted(float(_length_value(x)) for x in grid)
    if not values:
        raise ValueError("grid must be nonempty")
    diam = g.weighted_diameter()
    for L in values:
        if not (0 < L <= diam + 1e-9):
            raise ValueError(f"grid value {L} outside (0, diameter={diam}]")
    reference = len(p_l_nodes(g, lv_obs(g, k).observers.observers, diam))
    eligible = []
    for L in values:
        coverage = hv_obs(g, k, L).metrics.p_l_size
        if coverage is not None and coverage <= reference:
            eligible.append(L)
    if eligible:
        return LengthConstraint(max(eligible))
    warnings.warn(
        f"no grid value keeps coverage within the reference {reference}; "
        f"falling back to smallest L={values[0]}", stacklevel=2)
    return LengthConstraint(values[0])


# -- benchmark placements ------------------------------------------------------


def betweenness_centrality(g: Graph) -> np.ndarray:
    """Exact weighted betweenness over unordered node pairs, counting all
    shortest paths (endpoints excluded)."""
    import heapq

    n = g.node_count
    bc = np.zeros(n)
    for s in range(n):
        dist = np.full(n, np.inf)
        sigma = np.zeros(n)
        preds: list[list[int]] = [[] for _ in range(n)]
        settled = np.zeros(n, dtype=bool)
        dist[s] = 0.0
        sigma[s] = 1.0
        heap: list[tuple[float, int]] = [(0.0, s)]
        order: list[int] = []
        while heap:
            du, u = heapq.heappop(heap)
            if settled[u]:
                continue
            settled[u] = True
            order.append(u)
            for v, w in g.neighbors(u):
                nd = du + w
                if nd < dist[v]:
                    dist[v] = nd
                    sigma[v] = sigma[u]
                    preds[v] = [u]
                    heapq.heappush(heap, (nd, v))
                elif nd == dist[v] and not settled[v]:
                    sigma[v] += sigma[u]
                    preds[v].append(u)
        delta = np.zeros(n)
        for w_node in reversed(order):
            for v in preds[w_node]:
                delta[v] += sigma[v] / sigma[w_node] * (1.0 + delta[w_node])
            if w_node != s:
                bc[w_node] += delta[w_node]
    return bc / 2.0


def betweenness_placement(g: Graph, k: int) -> PlacementResult:
    """The k nodes of highest betweenness centrality."""
    n = g.node_count
    if not (1 <= k <= n):
        raise ValueError(f"budget k={k} must satisfy 1 <= k <= {n}")
    bc = betweenness_centrality(g)
    ranked = sorted(range(n), key=lambda u: (-bc[u], u))
    chosen = ranked[:k]
    trace = tuple(float(bc[u]) for u in chosen)
    return PlacementResult(
        observers=ObserverSet(chosen),
        objective_trace=trace,
        metrics=evaluate_observers(g, chosen),
        algorithm="bc",
        params={"k": k},
    )


def coverage_rate_placement(g: Graph, k: int) -> PlacementResult:
    """Greedy maximization of the fraction of nodes adjacent to an observer."""
    n = g.node_count
    if not (1 <= k <= n):
        raise ValueError(f"budget k={k} must satisfy 1 <= k <= {n}")
    masks = np.zeros((n, n), dtype=bool)
    for u in range(n):
        for v, _ in g.neighbors(u):
            masks[u, v] = True
    covered = np.zeros(n, dtype=bool)
    chosen: list[int] = []
    trace: list[float] = []
    evals = 0
    for _ in range(k):
        best_cnt, best_z = -1, -1
        for z in range(n):
            if z in chosen:
                continue
            cnt = int((covered | masks[z]).sum())
            evals += 1
            if cnt > best_cnt:
                best_cnt, best_z = cnt, z
        chosen.append(best_z)
        covered |= masks[best_z]
        trace.append(best_cnt / n)
    return PlacementResult(
        observers=ObserverSet(chosen),
        objective_trace=tuple(trace),
        metrics=evaluate_observers(g, chosen),
        algorithm="coverage",
        params={"k": k, "candidate_evals": evals},
    )


def k_median_placement(g: Graph, k: int) -> PlacementResult:
    """Greedy k-median: repeatedly add the node minimizing the summed
    distance from every node to its nearest observer."""
    n = g.node_count
    if not (1 <= k <= n):
        raise ValueError(f"budget k={k} must satisfy 1 <= k <= {n}")
    d = g.distances().d
    nearest = np.full(n, np.inf)
    chosen: list[int] = []
    trace: list[float] = []
    evals = 0
    for _ in range(k):
        best_cost, best_z = math.inf, -1
        for z in range(n):
            if z in chosen:
                continue
            cost = float(np.minimum(nearest, d[:, z]).sum())
            evals += 1
            if cost < best_cost:
                best_cost, best_z = cost, z
        chosen.append(best_z)
        nearest = np.minimum(nearest, d[:, best_z])
        trace.append(best_cost)
    return PlacementResult(
        observers=ObserverSet(chosen),
        objective_trace=tuple(trace),
        metrics=evaluate_observers(g, chosen),
        algorithm="kmedian",
        params={"k": k, "candidate_evals": evals},
    )


# -- oracles -------------------------------------------------------------------


def exhaustive_optimal_placement(g: Graph, k: int, objective: str = "p_s",
                                 cap: int = 2_000_000) -> PlacementResult:
    """True optimum by enumerating all C(n, k) observer sets (uniform prior).

    ``objective`` is "p_s" (maximize success probability) or "e_d" (minimize
    weighted expected distance). Ties keep the lexicographically smallest
    subset. Refuses to enumerate beyond ``cap`` subsets.
    """
    n = g.node_count
    if not (1 <= k <= n):
        raise ValueError(f"budget k={k} must satisfy 1 <= k <= {n}")
    if objective not in ("p_s", "e_d"):
        raise ValueError(f"unknown objective {objective!r}")
    total = comb(n, k)
    if total > cap:
        raise ValueError(f"C({n},{k}) = {total} exceeds the enumeration cap {cap}")
    dq = _quantized_distances(g)
    dist = g.distances().d
    prior = Prior.uniform(n)
    best_val = -math.inf
    best_subset: tuple[int, ...] | None = None
    for subset in itertools.combinations(range(n), k):
        if k == 1:
            val = 1.0 / n if objective == "p_s" else -float(dist.sum()) / (n * n)
        else:
            keys = dq[:, subset[1:]] - dq[:, [subset[0]]]
            labels = np.unique(keys, axis=0, return_inverse=True)[1].ravel()
            if objective == "p_s":
                val = float(np.unique(labels).size) / n
            else:
                val = _score_neg_expected_distance(labels, dist)
        if val > best_val:
            best_val = val
            best_subset = subset
    assert best_subset is not None
    return PlacementResult(
        observers=ObserverSet(best_subset),
        objective_trace=(best_val if objective == "p_s" else -best_val,),
        metrics=evaluate_observers(g, best_subset),
        algorithm="exhaustive",
        params={"k": k, "objective": objective, "subsets": total},
    )


def min_drs_budget(g: Graph, method: str = "lv_obs", cap: int = 2_000_000) -> int:
    """Smallest budget at which the chosen method reaches success
    probability 1; exact for ``method="exhaustive"``, an upper bound for
    ``method="lv_obs"``."""
    n = g.node_count
    if n == 1:
        return 1
    dq = _quantized_distances(g)
    for k in range(2, n + 1):
        if method == "lv_obs":
            if lv_obs(g, k).metrics.p_s == 1.0:
                return k
        elif method == "exhaustive":
            total = comb(n, k)
            if total > cap:
                raise ValueError(f"C({n},{k}) = {total} exceeds the enumeration cap {cap}")
            for subset in itertools.combinations(range(n), k):
                keys = dq[:, subset[1:]] - dq[:, [subset[0]]]
                if np.unique(keys, axis=0).shape[0] == n:
                    return k
        else:
            raise ValueError(f"unknown method {method!r}")
    return n
