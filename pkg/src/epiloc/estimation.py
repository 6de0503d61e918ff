"""Source estimators for observed infection-time differences.

Zero/low variance: the observed difference vector tau is (up to accumulated
noise below the resolution gap) the distance vector of the unknown source, so
the estimator matches tau against every candidate's distance vector in the
infinity norm and draws the estimate from the prior restricted to the matched
class.

High variance: the sum of independent per-edge delays along a path is
approximately Gaussian, so tau is scored against a multivariate normal with
mean equal to the candidate's distance vector and covariance built from
squared edge weights along reference-observer paths inside the shortest-path
tree rooted at the candidate. Scores are compared in the log domain and the
covariance is ridge-regularized, so near-singular geometries degrade
gracefully instead of failing.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .graphs import Graph, ShortestPathTree, shortest_path_tree
from .epidemic import Observation
from .resolution import ObserverSet, Prior, resolution_gap

ZERO_VARIANCE = "zero_variance"
GAUSSIAN_ML = "gaussian_ml"

#: relative ridge added to the covariance diagonal before inversion
RIDGE_FACTOR = 1e-9

#: score difference treated as a tie when reporting co-maximal candidates
SCORE_TIE_TOLERANCE = 1e-9


@dataclass(frozen=True)
class EstimateResult:
    """Outcome of one estimation: the estimate, its rivals, and all scores.

    ``tie_info`` lists the co-maximal candidates (the matched class in
    zero-variance mode); the estimate is always one of them.
    ``no_exact_match`` flags zero-variance runs where no candidate vector was
    within tolerance of tau and the nearest one was used instead.
    """

    estimate: int
    score_table: dict[int, float]
    mode: str
    tie_info: tuple[int, ...]
    no_exact_match: bool = False


def zero_variance_estimate(g: Graph, obs: Observation, prior: Prior,
                           rng: np.random.Generator) -> EstimateResult:
    """Match tau to the nearest distance-vector class and draw from the prior.

    Candidates whose vector equals tau (exactly on integer-weight graphs,
    within half the resolution gap otherwise) form the matched class. If none
    matches, the candidates at minimum infinity-norm residual are used and
    ``no_exact_match`` is set. Scores are negative residuals, so the table
    ranks candidates by closeness.
    """
    O = obs.observers
    if O.size < 2:
        raise ValueError("estimation needs at least 2 observers")
    d = g.distances().d
    cols = np.array(O.observers)
    vectors = d[:, cols[1:]] - d[:, cols[0]][:, None]
    residuals = np.abs(vectors - obs.tau[None, :]).max(axis=1)

    if g.integer_weighted:
        tol = 0.0
    else:
        try:
            delta, _ = resolution_gap(g, O)
            tol = delta / 2.0
        except ValueError:
            tol = math.inf  # all vectors identical: everything matches
    matched = np.flatnonzero(residuals <= tol)
    no_exact = matched.size == 0
    if no_exact:
        best = residuals.min()
        matched = np.flatnonzero(residuals == best)

    weights = prior.probabilities[matched]
    total = float(weights.sum())
    if total > 0:
        pick = int(matched[rng.choice(matched.size, p=weights / total)])
    else:
        pick = int(matched[int(rng.integers(matched.size))])
    scores = {node: -float(residuals[node]) for node in range(g.node_count)}
    return EstimateResult(estimate=pick, score_table=scores, mode=ZERO_VARIANCE,
                          tie_info=tuple(int(x) for x in matched), no_exact_match=no_exact)


def _tree_path_edges(tree: ShortestPathTree, depth: np.ndarray,
                     a: int, b: int) -> list[tuple[int, int]]:
    """Edges of the unique a-b path inside the tree (canonical edge keys)."""
    edges = []
    x, y = a, b
    while depth[x] > depth[y]:
        p = int(tree.parent[x])
        edges.append((x, p) if x < p else (p, x))
        x = p
    while depth[y] > depth[x]:
        p = int(tree.parent[y])
        edges.append((y, p) if y < p else (p, y))
        y = p
    while x != y:
        px, py = int(tree.parent[x]), int(tree.parent[y])
        edges.append((x, px) if x < px else (px, x))
        edges.append((y, py) if y < py else (py, y))
        x, y = px, py
    return edges


def covariance_matrix(g: Graph, tree: ShortestPathTree, O: ObserverSet,
                      sigma: float) -> np.ndarray:
    """Covariance of tau under the Gaussian path approximation.

    Entry (i, j) is sigma^2 times the sum of squared edge weights shared by
    the tree paths from the reference observer to observers i+1 and j+1;
    the diagonal uses the full path.
    """
    if sigma <= 0:
        raise ValueError("sigma must be positive")
    if O.size < 2:
        raise ValueError("covariance needs at least 2 observers")
    weights = {}
    for u, v, w in g.edges:
        weights[(u, v)] = w * w
    n = g.node_count
    depth = np.full(n, -1, dtype=np.int64)
    depth[tree.root] = 0
    for v in range(n):
        chain = []
        x = v
        while depth[x] < 0:
            chain.append(x)
            x = int(tree.parent[x])
        base = int(depth[x])
        for i, y in enumerate(reversed(chain), start=1):
            depth[y] = base + i
    obs = O.observers
    ref = obs[0]
    paths = [set(_tree_path_edges(tree, depth, ref, o)) for o in obs[1:]]
    k1 = len(paths)
    cov = np.empty((k1, k1))
    for i in range(k1):
        cov[i, i] = sum(weights[e] for e in paths[i])
        for j in range(i):
            shared = paths[i] & paths[j]
            cov[i, j] = cov[j, i] = sum(weights[e] for e in shared)
    return sigma * sigma * cov


def gaussian_ml_estimate(g: Graph, obs: Observation, sigma: float,
                         candidates=None, prior: Prior | None = None,
                         rng: np.random.Generator | None = None) -> EstimateResult:
    """Approximate maximum-likelihood source estimate for noisy delays.

    Each candidate s is scored with the log of a Gaussian density: the
    quadratic form of (tau - distance vector of s) under the inverse of its
    per-candidate covariance, plus the log-determinant penalty. Ties are
    broken by lowest node id. At sigma == 0 the zero-variance matcher is
    used instead (uniform prior and a fixed generator unless supplied).
    """
    if sigma < 0:
        raise ValueError("sigma must be nonnegative")
    if obs.observers.size < 2:
        raise ValueError("estimation needs at least 2 observers")
    if sigma == 0.0:
        return zero_variance_estimate(
            g, obs,
            prior if prior is not None else Prior.uniform(g.node_count),
            rng if rng is not None else np.random.default_rng(0))

    cand = list(range(g.node_count)) if candidates is None else sorted(set(int(c) for c in candidates))
    d = g.distances().d
    cols = np.array(obs.observers.observers)
    tau = obs.tau
    scores: dict[int, float] = {}
    for s in cand:
        tree = shortest_path_tree(g, s)
        vec = d[s, cols[1:]] - d[s, cols[0]]
        cov = covariance_matrix(g, tree, obs.observers, sigma)
        ridge = RIDGE_FACTOR * float(cov.diagonal().max())
        cov = cov + ridge * np.eye(cov.shape[0])
        r = tau - vec
        sol = np.linalg.solve(cov, r)
        _, logdet = np.linalg.slogdet(cov)
        scores[s] = -0.5 * float(r @ sol) - 0.5 * float(logdet)

    best_score = max(scores.values())
    ties = tuple(s for s in cand if scores[s] >= best_score - SCORE_TIE_TOLERANCE)
    estimate = min(s for s in cand if scores[s] == best_score)
    return EstimateResult(estimate=estimate, score_table=scores, mode=GAUSSIAN_ML,
                          tie_info=ties)
