"""Stochastic SI epidemics as first-passage percolation on sampled delays.

A single outbreak draws one random delay per undirected edge (shared by both
directions) and then propagates: each node's infection time is the minimum
over paths of summed delays, i.e. a single-source shortest path on the
sampled weights. This is equivalent to event-driven SI simulation with
independent per-edge transmission delays and avoids the event queue.

Three delay laws are supported. ``deterministic`` uses the edge weight
itself. ``truncated_gaussian(sigma)`` draws Gaussian(w, sigma*w) conditioned
to [w/2, 3w/2], sampled by inverse CDF so the cost is flat in sigma.
``uniform_factor(epsilon)`` draws uniformly on [(1-eps)w, (1+eps)w]. Both
noisy laws degenerate to the deterministic one at parameter zero.
"""

from __future__ import annotations

import heapq
import math
from dataclasses import dataclass

import numpy as np
from scipy.special import ndtr, ndtri

from .graphs import Graph
from .resolution import ObserverSet

DETERMINISTIC = "deterministic"
TRUNCATED_GAUSSIAN = "truncated_gaussian"
UNIFORM_FACTOR = "uniform_factor"


@dataclass(frozen=True)
class TransmissionModel:
    """Per-edge transmission delay law with mean equal to the edge weight."""

    kind: str
    sigma: float = 0.0
    epsilon: float = 0.0

    @classmethod
    def deterministic(cls) -> "TransmissionModel":
        return cls(kind=DETERMINISTIC)

    @classmethod
    def truncated_gaussian(cls, sigma: float) -> "TransmissionModel":
        if sigma < 0:
            raise ValueError("sigma must be nonnegative")
        return cls(kind=TRUNCATED_GAUSSIAN, sigma=float(sigma))

    @classmethod
    def uniform_factor(cls, epsilon: float) -> "TransmissionModel":
        if not (0 <= epsilon < 1):
            raise ValueError("epsilon must lie in [0, 1)")
        return cls(kind=UNIFORM_FACTOR, epsilon=float(epsilon))

    @property
    def noise_level(self) -> float:
        """The model's own noise parameter (sigma or epsilon)."""
        if self.kind == TRUNCATED_GAUSSIAN:
            return self.sigma
        if self.kind == UNIFORM_FACTOR:
            return self.epsilon
        return 0.0

    def equivalent_sigma(self) -> float:
        """Relative standard deviation, for likelihood scoring.

        A uniform draw on [(1-eps)w, (1+eps)w] has standard deviation
        eps*w/sqrt(3), so eps/sqrt(3) plays the role of sigma.
        """
        if self.kind == UNIFORM_FACTOR:
            return self.epsilon / math.sqrt(3.0)
        return self.sigma

    def sample_array(self, weights: np.ndarray, rng: np.random.Generator) -> np.ndarray:
        """One delay per weight; a single vectorized draw from ``rng``."""
        w = np.asarray(weights, dtype=float)
        if (w <= 0).any():
            raise ValueError("weights must be strictly positive")
        if self.kind == DETERMINISTIC:
            return w.copy()
        if self.kind == TRUNCATED_GAUSSIAN:
            if self.sigma == 0.0:
                return w.copy()
            # support bounds in standard units do not depend on w
            alpha = -0.5 / self.sigma
            beta = 0.5 / self.sigma
            lo, hi = ndtr(alpha), ndtr(beta)
            u = rng.random(w.shape)
            return w + self.sigma * w * ndtri(lo + u * (hi - lo))
        if self.kind == UNIFORM_FACTOR:
            if self.epsilon == 0.0:
                return w.copy()
            u = rng.random(w.shape)
            return w * (1.0 - self.epsilon + 2.0 * self.epsilon * u)
        raise ValueError(f"unknown transmission model {self.kind!r}")

    def describe(self) -> str:
        if self.kind == TRUNCATED_GAUSSIAN:
            return f"truncated_gaussian(sigma={self.sigma})"
        if self.kind == UNIFORM_FACTOR:
            return f"uniform_factor(epsilon={self.epsilon})"
        return "deterministic"


def sample_delay(model: TransmissionModel, w: float, rng: np.random.Generator) -> float:
    """Draw a single transmission delay for an edge of weight ``w``."""
    return float(model.sample_array(np.array([w]), rng)[0])


@dataclass(frozen=True)
class EpidemicTrace:
    """Per-node infection times of one simulated outbreak (start time 0)."""

    source: int
    start_time: float
    infection_time: np.ndarray
    rng_seed: int

    def time_of(self, node: int) -> float:
        return float(self.infection_time[node])


@dataclass(frozen=True)
class Observation:
    """Observer infection times and their differences to the reference.

    ``times`` aligns with the observer order (ascending node id); ``tau`` has
    one entry per non-reference observer, t_i - t_1.
    """

    observers: ObserverSet
    times: np.ndarray
    tau: np.ndarray


def sample_edge_delays(g: Graph, model: TransmissionModel, seed: int) -> np.ndarray:
    """The per-edge delays a simulation with this seed will use.

    Aligned with ``g.edges`` order; exposed so tests can replay the exact
    draws of ``simulate``.
    """
    rng = np.random.default_rng(seed)
    return model.sample_array(g.edge_weight_array(), rng)


def simulate(g: Graph, model: TransmissionModel, source: int, seed: int) -> EpidemicTrace:
    """Run one outbreak; deterministic given (graph, model, source, seed)."""
    if not (0 <= source < g.node_count):
        raise ValueError(f"source {source} not in graph")
    delays = sample_edge_delays(g, model, seed)
    adj: list[list[tuple[int, float]]] = [[] for _ in range(g.node_count)]
    for (u, v, _), x in zip(g.edges, delays):
        adj[u].append((v, float(x)))
        adj[v].append((u, float(x)))
    times = np.full(g.node_count, np.inf)
    times[source] = 0.0
    heap: list[tuple[float, int]] = [(0.0, source)]
    while heap:
        t, u = heapq.heappop(heap)
        if t > times[u]:
            continue
        for v, x in adj[u]:
            nt = t + x
            if nt < times[v]:
                times[v] = nt
                heapq.heappush(heap, (nt, v))
    times.setflags(write=False)
    return EpidemicTrace(source=source, start_time=0.0, infection_time=times, rng_seed=seed)


def observe(trace: EpidemicTrace, O: ObserverSet, limit: int | None = None) -> Observation:
    """Extract the observer view of a trace.

    With ``limit`` m set, only the m earliest-infected observers survive
    (ties by node id); the survivors are re-sorted by id and tau is taken
    against the surviving reference.
    """
    if O.size < 2:
        raise ValueError("observation needs at least 2 observers")
    obs = list(O.observers)
    if limit is not None:
        if limit < 2:
            raise ValueError("observation limit must be at least 2")
        if limit < len(obs):
            ranked = sorted(obs, key=lambda o: (trace.infection_time[o], o))
            obs = sorted(ranked[:limit])
    kept = ObserverSet(obs)
    times = trace.infection_time[list(kept.observers)].astype(float)
    tau = times[1:] - times[0]
    times.setflags(write=False)
    tau.setflags(write=False)
    return Observation(observers=kept, times=times, tau=tau)


def format_trace(g: Graph, trace: EpidemicTrace, model: TransmissionModel) -> str:
    """Debug dump: comment header plus `node,infection_time` CSV lines."""
    lines = [
        f"# source={g.label(trace.source)}",
        f"# seed={trace.rng_seed}",
        f"# model={model.describe()}",
        "node,infection_time",
    ]
    for node in range(g.node_count):
        lines.append(f"{g.label(node)},{trace.infection_time[node]!r}")
    return "\n".join(lines) + "\n"
