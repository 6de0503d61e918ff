"""Monte-Carlo experiment driver: sweep noise levels, sources, and placements.

The protocol: compute every configured placement up front, then for each
noise level run R simulated outbreaks from every node in turn, observe the
configured observers (optionally only the earliest m), estimate the source
(distance-vector matching at level zero, Gaussian ML otherwise), and record
exact hits and estimate-to-truth distances. Per-run seeds are a pure hash of
(master seed, source, level index, run index), so results are identical
regardless of execution order or parallelism, and the same epidemics are
shared by all placements at a given level.
"""

from __future__ import annotations

import hashlib
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, replace

import numpy as np

from .graphs import Graph, load_edge_list_file, random_geometric_graph, barabasi_albert_graph
from .epidemic import TransmissionModel, observe, simulate
from .estimation import gaussian_ml_estimate, zero_variance_estimate
from .resolution import ObserverSet, Prior, load_prior
from . import placement as pl


@dataclass(frozen=True)
class PlacementSpec:
    """One placement request: algorithm tag, budget, optional length data."""

    algo: str
    k: int
    L: float | None = None
    L_grid: tuple[float, ...] | None = None

    def tag(self) -> str:
        return f"{self.algo}{self.k}"


@dataclass(frozen=True)
class ExperimentConfig:
    graph_path: str
    placements: tuple[PlacementSpec, ...]
    model: str  # "truncated_gaussian" | "uniform_factor"
    levels: tuple[float, ...]
    runs_per_source: int
    master_seed: int
    observation_limit: int | None = None
    prior_path: str | None = None

    def __post_init__(self):
        if self.runs_per_source < 1:
            raise ValueError("runs_per_source must be at least 1")
        if not self.levels:
            raise ValueError("at least one noise level is required")
        if any(x < 0 for x in self.levels):
            raise ValueError("noise levels must be nonnegative")
        if list(self.levels) != sorted(self.levels):
            raise ValueError("noise levels must be ascending")
        if not self.placements:
            raise ValueError("at least one placement is required")


@dataclass(frozen=True)
class MetricsRow:
    placement: str
    sigma: float
    ps: float
    ps_se: float
    ed_hops: float
    ed_weighted: float
    runs: int


def derive_seed(master_seed: int, source: int, level_index: int, run_index: int) -> int:
    """Stable per-run seed; sha256 keeps it independent of hash randomization."""
    payload = f"{master_seed}:{source}:{level_index}:{run_index}".encode()
    return int.from_bytes(hashlib.sha256(payload).digest()[:8], "big")


# -- config parsing ----------------------------------------------------------


def parse_placement_spec(text: str) -> PlacementSpec:
    """Parse `algo:k`, `algo:k:L=x`, or `algo:k:Lgrid=a;b;c`."""
    parts = [p.strip() for p in text.strip().split(":")]
    if len(parts) < 2:
        raise ValueError(f"bad placement spec {text!r}; expected algo:k[...]")
    algo, k = parts[0], int(parts[1])
    L = None
    grid = None
    for extra in parts[2:]:
        key, _, val = extra.partition("=")
        if key == "L":
            L = float(val)
        elif key == "Lgrid":
            grid = tuple(float(x) for x in val.split(";") if x.strip())
        else:
            raise ValueError(f"unknown placement option {extra!r}")
    if algo not in ("lv", "hv", "bc", "coverage", "kmedian", "entropy", "edist"):
        raise ValueError(f"unknown placement algorithm {algo!r}")
    return PlacementSpec(algo=algo, k=k, L=L, L_grid=grid)


def parse_config(text: str) -> ExperimentConfig:
    """Parse the flat `key = value` experiment config format."""
    fields: dict[str, str] = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        key, sep, value = line.partition("=")
        if not sep:
            raise ValueError(f"config line {lineno}: expected 'key = value'")
        fields[key.strip()] = value.strip()

    def need(key: str) -> str:
        if key not in fields:
            raise ValueError(f"config is missing required key {key!r}")
        return fields[key]

    placements = tuple(parse_placement_spec(p)
                       for p in need("placements").split(",") if p.strip())
    limit = fields.get("observation_limit")
    return ExperimentConfig(
        graph_path=need("graph"),
        placements=placements,
        model=fields.get("model", "truncated_gaussian"),
        levels=tuple(float(x) for x in need("levels").split(",") if x.strip()),
        runs_per_source=int(need("runs_per_source")),
        master_seed=int(need("master_seed")),
        observation_limit=int(limit) if limit else None,
        prior_path=fields.get("prior") or None,
    )


# -- placement resolution ------------------------------------------------------


def compute_placement(g: Graph, spec: PlacementSpec) -> pl.PlacementResult:
    if spec.algo == "lv":
        return pl.lv_obs(g, spec.k)
    if spec.algo == "hv":
        if spec.L is not None:
            L = spec.L
        elif spec.L_grid:
            L = pl.select_L(g, spec.k, spec.L_grid).value
        else:
            L = g.weighted_diameter()
        return pl.hv_obs(g, spec.k, L)
    if spec.algo == "bc":
        return pl.betweenness_placement(g, spec.k)
    if spec.algo == "coverage":
        return pl.coverage_rate_placement(g, spec.k)
    if spec.algo == "kmedian":
        return pl.k_median_placement(g, spec.k)
    if spec.algo == "entropy":
        return pl.entropy_greedy_placement(g, spec.k)
    if spec.algo == "edist":
        return pl.expected_distance_greedy_placement(g, spec.k)
    raise ValueError(f"unknown placement algorithm {spec.algo!r}")


def _model_for_level(family: str, level: float) -> TransmissionModel:
    if level == 0.0:
        return TransmissionModel.deterministic()
    if family == "truncated_gaussian":
        return TransmissionModel.truncated_gaussian(level)
    if family == "uniform_factor":
        return TransmissionModel.uniform_factor(level)
    if family == "deterministic":
        if level != 0.0:
            raise ValueError("deterministic model admits only level 0")
        return TransmissionModel.deterministic()
    raise ValueError(f"unknown model family {family!r}")


# -- the experiment loop -------------------------------------------------------


def _run_source(args) -> tuple[int, np.ndarray]:
    """All (level, run, placement) results for one source.

    Returns (source, array[level, run, placement, 3]) where the last axis is
    (hit, hop distance, weighted distance).
    """
    g, observer_sets, cfg, prior, source = args
    dm = g.distances()
    n_lv = len(cfg.levels)
    n_pl = len(observer_sets)
    out = np.zeros((n_lv, cfg.runs_per_source, n_pl, 3))
    for li, level in enumerate(cfg.levels):
        model = _model_for_level(cfg.model, level)
        sigma_eff = model.equivalent_sigma()
        for ri in range(cfg.runs_per_source):
            seed = derive_seed(cfg.master_seed, source, li, ri)
            trace = simulate(g, model, source, seed)
            for pi, obs_set in enumerate(observer_sets):
                observation = observe(trace, obs_set, cfg.observation_limit)
                if level == 0.0:
                    rng = np.random.default_rng([seed, pi])
                    est = zero_variance_estimate(g, observation, prior, rng)
                else:
                    est = gaussian_ml_estimate(g, observation, sigma_eff)
                s_hat = est.estimate
                out[li, ri, pi, 0] = 1.0 if s_hat == source else 0.0
                out[li, ri, pi, 1] = dm.hops[source, s_hat]
                out[li, ri, pi, 2] = dm.d[source, s_hat]
    return source, out


def run_experiment(cfg: ExperimentConfig, jobs: int = 1,
                   graph: Graph | None = None) -> list[MetricsRow]:
    """Execute the full sweep and aggregate rows sorted by (placement, level)."""
    g = graph if graph is not None else load_edge_list_file(cfg.graph_path)
    if cfg.prior_path:
        with open(cfg.prior_path) as fh:
            prior = load_prior(g, fh.read())
    else:
        prior = Prior.uniform(g.node_count)
    results = [compute_placement(g, spec) for spec in cfg.placements]
    observer_sets = [r.observers for r in results]
    tags = [spec.tag() for spec in cfg.placements]

    n = g.node_count
    g.distances()  # warm the cache before forking workers
    tasks = [(g, observer_sets, cfg, prior, s) for s in range(n)]
    per_source: dict[int, np.ndarray] = {}
    if jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            for source, block in pool.map(_run_source, tasks, chunksize=max(1, n // (4 * jobs))):
                per_source[source] = block
    else:
        for task in tasks:
            source, block = _run_source(task)
            per_source[source] = block

    # fixed-order reduction so parallel and serial runs emit identical bytes
    stacked = np.stack([per_source[s] for s in range(n)])  # (source, level, run, placement, 3)
    rows: list[MetricsRow] = []
    for pi, tag in enumerate(tags):
        for li, level in enumerate(cfg.levels):
            block = stacked[:, li, :, pi, :].reshape(-1, 3)
            runs = block.shape[0]
            hits = float(block[:, 0].sum())
            p = hits / runs
            rows.append(MetricsRow(
                placement=tag,
                sigma=float(level),
                ps=p,
                ps_se=float(np.sqrt(p * (1.0 - p) / runs)),
                ed_hops=float(block[:, 1].sum() / runs),
                ed_weighted=float(block[:, 2].sum() / runs),
                runs=runs,
            ))
    rows.sort(key=lambda r: (r.placement, r.sigma))
    return rows


# -- CSV output ---------------------------------------------------------------

CSV_HEADER = "placement,sigma,ps,ps_se,ed_hops,ed_weighted,runs"


def format_csv(rows: list[MetricsRow]) -> str:
    if not rows:
        raise ValueError("no rows to emit")
    lines = [CSV_HEADER]
    for r in rows:
        lines.append(f"{r.placement},{r.sigma!r},{r.ps!r},{r.ps_se!r},"
                     f"{r.ed_hops!r},{r.ed_weighted!r},{r.runs}")
    return "\n".join(lines) + "\n"


def emit_csv(rows: list[MetricsRow], path) -> None:
    """Write rows with full float precision, UTF-8, LF line endings."""
    text = format_csv(rows)
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(text)


def parse_csv(text: str) -> list[MetricsRow]:
    lines = [ln for ln in text.splitlines() if ln.strip()]
    if not lines or lines[0] != CSV_HEADER:
        raise ValueError("bad metrics CSV header")
    rows = []
    for ln in lines[1:]:
        tag, sigma, ps, ps_se, edh, edw, runs = ln.split(",")
        rows.append(MetricsRow(placement=tag, sigma=float(sigma), ps=float(ps),
                               ps_se=float(ps_se), ed_hops=float(edh),
                               ed_weighted=float(edw), runs=int(runs)))
    return rows


def emit_plotdata(rows: list[MetricsRow], directory) -> None:
    """Per-placement two-column `sigma ps` files for external plotting."""
    import os

    os.makedirs(directory, exist_ok=True)
    by_tag: dict[str, list[MetricsRow]] = {}
    for r in rows:
        by_tag.setdefault(r.placement, []).append(r)
    for tag, tagged in by_tag.items():
        path = os.path.join(directory, f"{tag}.dat")
        with open(path, "w", encoding="utf-8", newline="\n") as fh:
            for r in sorted(tagged, key=lambda x: x.sigma):
                fh.write(f"{r.sigma!r} {r.ps!r}\n")


# -- objective comparison over graph families -----------------------------------


def _family_graph(family: str, n: int, param, seed: int) -> Graph:
    if family == "rgg":
        return random_geometric_graph(n, float(param), seed)
    if family == "ba":
        return barabasi_albert_graph(n, int(param), seed)
    raise ValueError(f"unknown graph family {family!r}")


@dataclass(frozen=True)
class ObjectiveComparisonRow:
    family: str
    k: int
    trials: int
    dist_ps_rel: float
    dist_ps_rel_se: float
    dist_ed_rel: float
    dist_ed_rel_se: float
    ent_ps_rel: float
    ent_ps_rel_se: float


def _prefix_metrics(g: Graph, trajectory: list[int], k: int) -> tuple[float, float, float]:
    """(P_s, E_d weighted, entropy) of the first k nodes of a trajectory."""
    prefix = trajectory[:k]
    m = pl.evaluate_observers(g, prefix)
    return m.p_s, m.e_d_weighted, m.entropy


def _best_prefix(g: Graph, trajectories: list[list[int]], k: int,
                 objective: str) -> tuple[float, float]:
    """Best (P_s, E_d) over per-seed greedy prefixes of length k, judged by
    the greedy's own objective with first-seed tie-breaking."""
    best_key = -np.inf
    best = (0.0, 0.0)
    for tr in trajectories:
        ps, ed, ent = _prefix_metrics(g, tr, k)
        if objective == "class_count":
            key = ps
        elif objective == "neg_entropy":
            key = -ent
        else:
            key = -ed
        if key > best_key:
            best_key = key
            best = (ps, ed)
    return best


def compare_objectives(family: str, k_list, trials: int, master_seed: int,
                       n: int = 100, param=None) -> list[ObjectiveComparisonRow]:
    """Mean relative performance of the entropy- and distance-minimizing
    greedies against the class-count greedy, on fresh random graphs.

    For each trial graph, all three greedies are grown once to max(k_list)
    from every seed; prefixes give the placement at each smaller budget.
    Metrics are the analytic success probability and weighted expected
    distance under the uniform prior.
    """
    if param is None:
        param = 0.2 if family == "rgg" else 3
    ks = sorted(set(int(k) for k in k_list))
    k_max = max(ks)
    per_k: dict[int, list[tuple[float, float, float]]] = {k: [] for k in ks}
    for t in range(trials):
        g = _family_graph(family, n, param, master_seed + t)
        dist = g.distances().d
        trajs: dict[str, list[list[int]]] = {}
        for obj in ("class_count", "neg_entropy", "neg_expected_distance"):
            d_arg = dist if obj == "neg_expected_distance" else None
            trajs[obj] = [pl.greedy_trajectory(g, v, k_max, obj, d_arg)[0]
                          for v in range(n)]
        for k in ks:
            ps_phi, ed_phi = _best_prefix(g, trajs["class_count"], k, "class_count")
            ps_ent, _ = _best_prefix(g, trajs["neg_entropy"], k, "neg_entropy")
            ps_dist, ed_dist = _best_prefix(g, trajs["neg_expected_distance"], k,
                                            "neg_expected_distance")
            per_k[k].append((
                (ps_dist - ps_phi) / ps_phi,
                (ed_dist - ed_phi) / (ed_dist + 1.0),
                (ps_ent - ps_phi) / ps_phi,
            ))
    rows = []
    for k in ks:
        arr = np.array(per_k[k])
        mean = arr.mean(axis=0)
        se = arr.std(axis=0, ddof=1) / np.sqrt(trials) if trials > 1 else np.zeros(3)
        rows.append(ObjectiveComparisonRow(
            family=family, k=k, trials=trials,
            dist_ps_rel=float(mean[0]), dist_ps_rel_se=float(se[0]),
            dist_ed_rel=float(mean[1]), dist_ed_rel_se=float(se[1]),
            ent_ps_rel=float(mean[2]), ent_ps_rel_se=float(se[2]),
        ))
    return rows


def format_comparison_csv(rows: list[ObjectiveComparisonRow]) -> str:
    header = ("family,k,trials,dist_ps_rel,dist_ps_rel_se,"
              "dist_ed_rel,dist_ed_rel_se,ent_ps_rel,ent_ps_rel_se")
    lines = [header]
    for r in rows:
        lines.append(f"{r.family},{r.k},{r.trials},{r.dist_ps_rel!r},{r.dist_ps_rel_se!r},"
                     f"{r.dist_ed_rel!r},{r.dist_ed_rel_se!r},{r.ent_ps_rel!r},{r.ent_ps_rel_se!r}")
    return "\n".join(lines) + "\n"
