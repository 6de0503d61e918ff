"""Distance vectors, equivalence partitions, and analytic localization metrics.

Two candidate sources are indistinguishable to a set of observers under
deterministic delays exactly when their observer-distance difference vectors
coincide. Grouping nodes by that vector partitions the network into
equivalence classes; every analytic metric here (success probability,
expected distance, worst-case variants, entropy) is a function of that
partition and an optional prior on the source location.

Vector equality is exact for integer-weight graphs. For real weights the
entries are quantized to 1e-9 before grouping, which guards against float
drift without changing integer-weight behavior.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .graphs import Graph

#: quantization step for distance-vector equality on real-weight graphs
EQUALITY_TOLERANCE = 1e-9

#: instrumentation counters for the complexity checks in the test suite
OP_COUNTS = {"partition_entries": 0}


def reset_op_counts() -> None:
    for k in OP_COUNTS:
        OP_COUNTS[k] = 0


@dataclass(frozen=True)
class ObserverSet:
    """Distinct observer nodes, kept sorted ascending.

    The first element acts as the reference observer for distance vectors;
    any reference yields the same partition, so fixing the smallest id just
    makes vector layouts reproducible.
    """

    observers: tuple[int, ...]

    def __init__(self, observers):
        obs = tuple(sorted(int(o) for o in observers))
        if len(set(obs)) != len(obs):
            raise ValueError("observers must be distinct")
        if not obs:
            raise ValueError("observer set is empty")
        object.__setattr__(self, "observers", obs)

    @property
    def reference(self) -> int:
        return self.observers[0]

    @property
    def size(self) -> int:
        return len(self.observers)

    def __iter__(self):
        return iter(self.observers)

    def __len__(self):
        return len(self.observers)

    def __contains__(self, node) -> bool:
        return node in self.observers


@dataclass(frozen=True)
class EquivalencePartition:
    """Nodes grouped by equal distance vectors under one observer set.

    ``classes`` are disjoint, cover all nodes, and are sorted by smallest
    member (members sorted ascending). ``class_of[u]`` is the index of u's
    class. ``q`` is the number of classes.
    """

    classes: tuple[tuple[int, ...], ...]
    class_of: np.ndarray

    @property
    def q(self) -> int:
        return len(self.classes)

    @property
    def node_count(self) -> int:
        return int(self.class_of.shape[0])

    def class_sizes(self) -> tuple[int, ...]:
        return tuple(len(c) for c in self.classes)


@dataclass(frozen=True)
class Prior:
    """Probability distribution over candidate sources.

    Stored dense over node ids; must be nonnegative and sum to one within
    1e-12 (validated, then renormalized exactly).
    """

    probabilities: np.ndarray

    def __init__(self, probabilities):
        p = np.asarray(probabilities, dtype=float).copy()
        if p.ndim != 1:
            raise ValueError("prior must be a flat vector")
        if (p < 0).any():
            raise ValueError("prior has negative entries")
        total = float(p.sum())
        if abs(total - 1.0) > 1e-12:
            raise ValueError(f"prior sums to {total}, expected 1")
        p /= total
        p.setflags(write=False)
        object.__setattr__(self, "probabilities", p)

    @classmethod
    def uniform(cls, n: int) -> "Prior":
        return cls(np.full(n, 1.0 / n))

    def __getitem__(self, node: int) -> float:
        return float(self.probabilities[node])


def load_prior(g: Graph, text: str) -> Prior:
    """Parse `node probability` lines; omitted nodes get probability 0."""
    p = np.zeros(g.node_count)
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        parts = line.split()
        if len(parts) != 2:
            raise ValueError(f"prior line {lineno}: expected 'node probability'")
        p[g.index(parts[0])] = float(parts[1])
    return Prior(p)


# -- distance vectors and partitions ----------------------------------------


def distance_vector(g: Graph, O: ObserverSet, s: int) -> np.ndarray:
    """Differences d(s, o_i) - d(s, o_1) for the non-reference observers."""
    if O.size < 2:
        raise ValueError("distance vectors need at least 2 observers")
    d = g.distances().d
    obs = np.array(O.observers)
    return d[s, obs[1:]] - d[s, obs[0]]


def _quantize(values: np.ndarray) -> np.ndarray:
    return np.round(values / EQUALITY_TOLERANCE).astype(np.int64)


def partition(g: Graph, O: ObserverSet, reference: int | None = None) -> EquivalencePartition:
    """Group nodes by exact equality of their distance vectors.

    ``reference`` picks the observer used as o_1; the resulting partition is
    the same for every choice, so it defaults to the smallest id.
    """
    if O.size < 2:
        raise ValueError("partition needs at least 2 observers")
    obs = list(O.observers)
    ref = obs[0] if reference is None else int(reference)
    if ref not in O:
        raise ValueError("reference must belong to the observer set")
    others = [o for o in obs if o != ref]
    d = g.distances().d
    keys = _quantize(d[:, others] - d[:, [ref]])
    OP_COUNTS["partition_entries"] += keys.shape[0] * O.size
    _, inverse = np.unique(keys, axis=0, return_inverse=True)
    return _partition_from_labels(inverse.ravel())


def _partition_from_labels(labels: np.ndarray) -> EquivalencePartition:
    """Build a partition from an arbitrary integer labeling of the nodes."""
    groups: dict[int, list[int]] = {}
    for node, lab in enumerate(labels.tolist()):
        groups.setdefault(lab, []).append(node)
    classes = tuple(sorted((tuple(members) for members in groups.values()),
                           key=lambda c: c[0]))
    class_of = np.empty(labels.shape[0], dtype=np.int64)
    for idx, members in enumerate(classes):
        for node in members:
            class_of[node] = idx
    class_of.setflags(write=False)
    return EquivalencePartition(classes=classes, class_of=class_of)


def single_class_partition(n: int) -> EquivalencePartition:
    """The no-information partition: every node in one class."""
    return _partition_from_labels(np.zeros(n, dtype=np.int64))


# -- metrics -----------------------------------------------------------------


def success_probability(p: EquivalencePartition, prior: Prior) -> float:
    """Probability that a draw from the prior restricted to the matched class
    hits the true source; q/n under the uniform prior."""
    q = prior.probabilities
    total = 0.0
    for members in p.classes:
        mass = float(q[list(members)].sum())
        if mass > 0:
            total += float((q[list(members)] ** 2).sum()) / mass
    return total


def expected_distance(g: Graph, p: EquivalencePartition, prior: Prior,
                      mode: str = "weighted") -> float:
    """Mean distance between the true source and the in-class estimate.

    ``mode`` selects weighted distances or hop counts along canonical paths.
    """
    dm = g.distances()
    if mode == "weighted":
        dist = dm.d
    elif mode == "hops":
        dist = dm.hops
    else:
        raise ValueError(f"unknown mode {mode!r}")
    q = prior.probabilities
    total = 0.0
    for members in p.classes:
        idx = list(members)
        mass = float(q[idx].sum())
        if mass <= 0:
            continue
        pv = q[idx]
        sub = dist[np.ix_(idx, idx)]
        total += float(pv @ sub @ pv) / mass
    return total


def worst_case_metrics(g: Graph, p: EquivalencePartition,
                       prior: Prior) -> tuple[float, float, float]:
    """(min success, max distance, expected max distance).

    The minimum success probability assumes an adversarial source and a
    uniform pick inside the matched class, so it is 1/(largest class size)
    regardless of the prior. Max distance is the largest class diameter;
    the expected variant weights class diameters by their prior mass.
    """
    d = g.distances().d
    q = prior.probabilities
    min_success = 1.0
    max_distance = 0.0
    expected_max = 0.0
    for members in p.classes:
        idx = list(members)
        diam = float(d[np.ix_(idx, idx)].max()) if len(idx) > 1 else 0.0
        min_success = min(min_success, 1.0 / len(idx))
        max_distance = max(max_distance, diam)
        expected_max += float(q[idx].sum()) * diam
    return min_success, max_distance, expected_max


def entropy(p: EquivalencePartition) -> float:
    """log2 of the product of class-size factorials; zero iff all singletons."""
    return float(sum(math.log2(math.factorial(len(c))) for c in p.classes))


def is_drs(p: EquivalencePartition) -> bool:
    """True when every class is a singleton (perfect zero-variance localization)."""
    return p.q == p.node_count


def resolution_gap(g: Graph, O: ObserverSet) -> tuple[float, float]:
    """(delta, noise bound) for an observer set.

    ``delta`` is the minimum infinity-norm distance between two distinct
    distance vectors; the returned bound delta / (2 D) uses the maximum hop
    count D over canonical node-to-observer shortest paths. Raises if all
    vectors coincide.
    """
    if O.size < 2:
        raise ValueError("resolution gap needs at least 2 observers")
    dm = g.distances()
    obs = np.array(O.observers)
    vectors = dm.d[:, obs[1:]] - dm.d[:, obs[0]][:, None]
    uniq = np.unique(_quantize(vectors), axis=0) * EQUALITY_TOLERANCE
    if uniq.shape[0] < 2:
        raise ValueError("all distance vectors identical; gap undefined")
    delta = math.inf
    for i in range(uniq.shape[0] - 1):
        gaps = np.abs(uniq[i + 1:] - uniq[i]).max(axis=1)
        delta = min(delta, float(gaps.min()))
    D = int(dm.hops[:, obs].max())
    return delta, delta / (2.0 * D)
