"""Giant component of the learned-skill association graph."""

from __future__ import annotations

from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass

import numpy as np

from . import _rng
from .density_evolution import MAX_ITER, TOL, de_solve_single
from .graph_model import BipartiteGraph, sample_graph
from .learners import PsiFunction, SuccessProfile, matching_profile, one_skill_profile
from .peeling import MCEstimate, run_scns, trial_config


class UnionFind:
    """Disjoint sets with union by size and path halving."""

    def __init__(self, size):
        self.parent = list(range(size))
        self.size = [1] * size

    def find(self, x):
        parent = self.parent
        while parent[x] != x:
            parent[x] = parent[parent[x]]
            x = parent[x]
        return x

    def union(self, a, b):
        ra, rb = self.find(a), self.find(b)
        if ra == rb:
            return ra
        if self.size[ra] < self.size[rb]:
            ra, rb = rb, ra
        self.parent[rb] = ra
        self.size[ra] += self.size[rb]
        return ra

    def labels(self):
        return np.array([self.find(i) for i in range(len(self.parent))], dtype=np.int64)

    def component_size(self, x):
        return self.size[self.find(x)]


@dataclass(frozen=True, eq=False)
class AssociationGraph:
    nodes: np.ndarray  # learned skill ids
    edges: set  # sorted (s1, s2) pairs, s1 < s2
    labels: np.ndarray  # component root per node, aligned with ``nodes``

    def component_sizes(self):
        _, counts = np.unique(self.labels, return_counts=True)
        return np.sort(counts)[::-1]


def association_graph(graph: BipartiteGraph, learned: np.ndarray) -> AssociationGraph:
    """Explicit association edges; a text with L learned skills yields all L(L-1)/2 pairs."""
    learned = np.asarray(learned, dtype=bool)
    keep = learned[graph.edge_skill]
    es, et = graph.edge_skill[keep], graph.edge_text[keep]
    edges = set()
    for t in np.unique(et):
        members = np.unique(es[et == t]).tolist()
        for i, a in enumerate(members):
            for b in members[i + 1:]:
                edges.add((a, b))
    nodes = np.flatnonzero(learned)
    index = {int(s): i for i, s in enumerate(nodes)}
    uf = UnionFind(nodes.size)
    for a, b in edges:
        uf.union(index[a], index[b])
    return AssociationGraph(nodes, edges, nodes[uf.labels()] if nodes.size else np.empty(0, np.int64))


def largest_association_component(graph: BipartiteGraph, learned: np.ndarray) -> int:
    """Largest component size of the association graph without materializing cliques:
    chaining the learned skills of each text gives the same components."""
    learned = np.asarray(learned, dtype=bool)
    if not learned.any():
        return 0
    keep = learned[graph.edge_skill]
    es, et = graph.edge_skill[keep], graph.edge_text[keep]  # sorted by text
    same = et[1:] == et[:-1]
    uf = UnionFind(graph.num_skills)
    for a, b in zip(es[:-1][same].tolist(), es[1:][same].tolist()):
        uf.union(a, b)
    return max(uf.component_size(s) for s in np.flatnonzero(learned).tolist())


@dataclass(frozen=True)
class PercolationResult:
    mu_s: float
    mu_t: float
    p_G: float
    condition_value: float
    giant_exists: bool
    iterations_used: int
    zeta: float
    monotone: bool = True


def mu_fixed_point(c, R, zeta, max_iter: int = MAX_ITER, tol: float = TOL, return_info: bool = False):
    """Smallest fixed point of the small-component recursion, iterated from (0, 0)."""
    if not 0.0 <= zeta <= 1.0:
        raise ValueError(f"zeta must lie in [0, 1], got {zeta!r}")
    mu_s = mu_t = 0.0
    monotone = True
    it = 0
    for it in range(1, max_iter + 1):
        new_s = float(np.exp(-c * (1.0 - mu_t)))
        new_t = float((1.0 - zeta) + zeta * np.exp(-R * c * (1.0 - mu_s)))
        if new_s < mu_s or new_t < mu_t:
            monotone = False
        done = abs(new_s - mu_s) < tol and abs(new_t - mu_t) < tol
        mu_s, mu_t = new_s, new_t
        if done:
            break
    if return_info:
        return mu_s, mu_t, it, monotone
    return mu_s, mu_t


def g1(mu_s, c, R, zeta):
    """Right-hand side of the one-variable equation mu_s = g1(mu_s)."""
    return np.exp(-c * zeta * (1.0 - np.exp(-R * c * (1.0 - np.asarray(mu_s, float)))))


def p_giant_theory(c, R, profile: SuccessProfile | None = None, max_iter: int = MAX_ITER,
                   tol: float = TOL) -> PercolationResult:
    zeta = float(de_solve_single(c, R, profile).zeta)
    mu_s, mu_t, it, mono = mu_fixed_point(c, R, zeta, max_iter, tol, return_info=True)
    p_G = zeta * (1.0 - float(np.exp(-R * c * (1.0 - mu_s))))
    cond = c * c * R * zeta
    return PercolationResult(mu_s, mu_t, p_G, cond, bool(cond > 1.0), it, zeta, mono)


def condition_value(c, R, profile: SuccessProfile | None = None):
    """c^2 R zeta, vectorized over broadcast (c, R)."""
    c, R = np.broadcast_arrays(np.asarray(c, float), np.asarray(R, float))
    return c * c * R * np.asarray(de_solve_single(c, R, profile).zeta)


# -- simulation ---------------------------------------------------------------


def _giant_trial(args):
    cfg, psi, mode, zeta = args
    graph = sample_graph(cfg)
    if mode == "actual-learned":
        learned = run_scns(graph, psi, seed=cfg.seed).learned
    else:
        learned = _rng.uniform(cfg.seed, _rng.IID_LEARNED, np.arange(graph.num_skills)) < zeta
    return largest_association_component(graph, learned) / graph.num_skills


def giant_component_sim(cfg, psi: PsiFunction, trials: int, mode: str = "actual-learned",
                        profile: SuccessProfile | None = None, workers: int = 1) -> MCEstimate:
    """Largest association component as a fraction of |S|, averaged over trials.

    ``iid-zeta`` marks skills learned independently with the density-evolution
    zeta of ``profile`` (default: the closed form matching ``psi``).
    """
    if trials < 1:
        raise ValueError("trials must be >= 1")
    if mode not in ("actual-learned", "iid-zeta"):
        raise ValueError(f"unknown mode {mode!r}")
    zeta = 0.0
    if mode == "iid-zeta":
        profile = matching_profile(psi) if profile is None else profile
        zeta = float(de_solve_single(cfg.mean_skills_per_text, cfg.ratio_R, profile).zeta)
    jobs = [(trial_config(cfg, t), psi, mode, zeta) for t in range(trials)]
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as ex:
            vals = list(ex.map(_giant_trial, jobs))
    else:
        vals = [_giant_trial(j) for j in jobs]
    return MCEstimate.from_values(vals)


# -- region scan ----------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class RegionScan:
    c_values: np.ndarray
    R_values: np.ndarray
    condition: np.ndarray  # shape (len(c), len(R))
    giant_exists: np.ndarray
    threshold_R: np.ndarray  # per c; nan where no giant component in range
    min_R: float
    c_at_min: float

    def rows(self):
        for i, c in enumerate(self.c_values):
            for j, R in enumerate(self.R_values):
                yield float(c), float(R), float(self.condition[i, j]), bool(self.giant_exists[i, j])


def threshold_R_for_c(c, profile=None, R_range=(0.0, 3.0), resolution=1e-3):
    """Smallest R in range with c^2 R zeta > 1, by bracketing then bisection; nan if none."""
    lo, hi = R_range
    if condition_value(c, hi, profile) <= 1.0:
        return float("nan")
    if condition_value(c, lo, profile) > 1.0:
        return float(lo)
    while hi - lo > resolution:
        mid = 0.5 * (lo + hi)
        if condition_value(c, mid, profile) > 1.0:
            hi = mid
        else:
            lo = mid
    return float(hi)


def _threshold_column(args):
    c, profile, R_range, resolution = args
    return threshold_R_for_c(c, profile, R_range, resolution)


def region_scan(c_values, R_values, profile: SuccessProfile | None = None, resolution: float = 1e-3,
                workers: int = 1) -> RegionScan:
    c_values = np.asarray(c_values, float)
    R_values = np.asarray(R_values, float)
    if c_values.size < 2 or R_values.size < 2:
        raise ValueError("region scan needs at least 2 grid points per axis")
    profile = one_skill_profile() if profile is None else profile
    cc, RR = np.meshgrid(c_values, R_values, indexing="ij")
    cond = condition_value(cc, RR, profile)
    exists = cond > 1.0
    R_range = (float(R_values.min()), float(R_values.max()))
    jobs = [(float(c), profile, R_range, resolution) for c in c_values]
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as ex:
            thr = np.array(list(ex.map(_threshold_column, jobs)))
    else:
        thr = np.array([_threshold_column(j) for j in jobs])
    if np.all(np.isnan(thr)):
        min_R, c_min = float("nan"), float("nan")
    else:
        i = int(np.nanargmin(thr))
        min_R, c_min = float(thr[i]), float(c_values[i])
    return RegionScan(c_values, R_values, cond, exists, thr, min_R, c_min)
