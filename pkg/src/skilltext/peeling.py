"""Successive cancellation of novel skills (SCNS) on sampled graphs."""

from __future__ import annotations

import csv
import dataclasses
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from . import _rng
from .graph_model import (BipartiteGraph, MultiClassConfig, SingleClassConfig, _apportion,
                          sample_graph, sample_multi_class_texts, sample_texts)
from .learners import PsiFunction


@dataclass(frozen=True, eq=False)
class ScnsOutcome:
    learned: np.ndarray
    rounds: int
    learned_fraction: float
    class_learned_fraction: np.ndarray
    trace: list = field(default_factory=list)  # (round, learned_count, newly_learned)

    @property
    def num_learned(self) -> int:
        return int(self.learned.sum())


def _outcome(graph, learned, rounds, trace):
    n = graph.num_skills
    frac = learned.sum() / n if n else 0.0
    per_class = np.zeros(graph.num_skill_classes)
    sizes = np.bincount(graph.skill_class, minlength=graph.num_skill_classes)
    hits = np.bincount(graph.skill_class[learned], minlength=graph.num_skill_classes)
    np.divide(hits, sizes, out=per_class, where=sizes > 0)
    return ScnsOutcome(learned, rounds, float(frac), per_class, trace)


def _check_classes(graph, psi):
    if graph.num_skill_classes != psi.num_classes:
        raise ValueError(f"graph has {graph.num_skill_classes} skill classes but psi expects {psi.num_classes}")


def run_scns(graph: BipartiteGraph, psi: PsiFunction, dedup: bool = True, seed: int = 0) -> ScnsOutcome:
    """Synchronous SCNS rounds until a round learns nothing.

    Every text evaluates psi on its per-class novel counts and all designated
    skills become learned at the end of the round.  ``seed`` only matters for
    psi-functions that learn a strict subset of a text's novel skills; then
    the subset is chosen uniformly by a counter-based draw.
    """
    _check_classes(graph, psi)
    K = psi.num_classes
    es, et = graph.edge_skill, graph.edge_text
    weight = np.ones_like(graph.multiplicity) if dedup else graph.multiplicity
    ecls = graph.skill_class[es]
    learned = np.zeros(graph.num_skills, dtype=bool)
    active = np.arange(es.size)
    trace = []
    rounds = 0
    while True:
        rounds += 1
        a_s, a_t, a_k = es[active], et[active], ecls[active]
        tids, pos = np.unique(a_t, return_inverse=True)
        n = np.zeros((tids.size, K), dtype=np.int64)
        np.add.at(n, (pos, a_k), weight[active])
        out = psi.apply(n)
        full = (out == n) & (n > 0)
        new = a_s[full[pos, a_k]]
        partial = (out > 0) & (out < n)
        if partial.any():
            new = np.concatenate([new, _partial_picks(partial, out, tids, pos, a_s, a_k, seed, rounds)])
        new = np.unique(new)
        new = new[~learned[new]]
        if new.size == 0:
            break
        learned[new] = True
        trace.append((rounds, int(learned.sum()), int(new.size)))
        active = active[~learned[es[active]]]
    return _outcome(graph, learned, rounds, trace)


def _partial_picks(partial, out, tids, pos, a_s, a_k, seed, rnd):
    picks = []
    for row, k in zip(*np.nonzero(partial)):
        cand = np.unique(a_s[(pos == row) & (a_k == k)])
        u = _rng.uniform(seed, _rng.PARTIAL_PICK, np.full(cand.size, tids[row]), cand + rnd * (1 << 32))
        picks.append(cand[np.argsort(u, kind="stable")[: min(int(out[row, k]), cand.size)]])
    return np.concatenate(picks) if picks else np.empty(0, np.int64)


def run_scns_sequential(graph: BipartiteGraph, psi: PsiFunction, order=None, dedup: bool = True) -> ScnsOutcome:
    """Present texts one at a time in ``order``; a skill learned from one text is
    already known to the next.  Passes repeat until one learns nothing.

    Only all-or-nothing psi-functions are supported here.
    """
    _check_classes(graph, psi)
    if not psi.all_or_nothing:
        raise ValueError("sequential SCNS needs an all-or-nothing psi")
    K = psi.num_classes
    order = range(graph.num_texts) if order is None else order
    lo = np.searchsorted(graph.edge_text, np.arange(graph.num_texts))
    hi = np.searchsorted(graph.edge_text, np.arange(graph.num_texts), side="right")
    texts = [list(zip(graph.edge_skill[a:b].tolist(), graph.multiplicity[a:b].tolist())) for a, b in zip(lo, hi)]
    cls = graph.skill_class.tolist()
    learned = np.zeros(graph.num_skills, dtype=bool)
    trace = []
    passes = 0
    while True:
        passes += 1
        gained = 0
        for t in order:
            novel = [(s, m) for s, m in texts[t] if not learned[s]]
            if not novel:
                continue
            n = np.zeros(K, dtype=np.int64)
            for s, m in novel:
                n[cls[s]] += 1 if dedup else m
            out = psi.apply(n)
            for s, _ in novel:
                if out[cls[s]] == n[cls[s]]:
                    learned[s] = True
                    gained += 1
        if gained == 0:
            break
        trace.append((passes, int(learned.sum()), gained))
    return _outcome(graph, learned, passes, trace)


def write_trace_csv(outcome: ScnsOutcome, path) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["round", "learned_count", "newly_learned"])
        w.writerows(outcome.trace)


# -- Monte Carlo wrappers -----------------------------------------------------


@dataclass(frozen=True)
class MCEstimate:
    mean: float
    stderr: float
    values: np.ndarray

    @classmethod
    def from_values(cls, values):
        v = np.asarray(values, dtype=float)
        se = float(v.std(ddof=1) / np.sqrt(v.size)) if v.size > 1 else float("nan")
        return cls(float(v.mean()), se, v)


def trial_config(cfg, t: int):
    return dataclasses.replace(cfg, seed=_rng.derive_seed(cfg.seed, t))


def sample_test_endpoints(cfg, num_texts: int):
    """Fresh test texts from the same ensemble, independent of the training texts."""
    if isinstance(cfg, SingleClassConfig):
        return sample_texts(cfg.seed, num_texts, cfg.mean_skills_per_text, cfg.num_skills, test=True)
    if isinstance(cfg, MultiClassConfig):
        counts = _apportion(num_texts, cfg.alpha)
        classes = np.repeat(np.arange(counts.size), counts)
        return sample_multi_class_texts(cfg, classes, test=True)
    raise TypeError(f"unsupported config type {type(cfg).__name__}")


def testing_error(learned: np.ndarray, skills: np.ndarray, texts: np.ndarray, num_texts: int) -> float:
    """Fraction of texts with at least one unlearned skill; empty texts are understood."""
    if num_texts == 0:
        return float("nan")
    bad = np.zeros(num_texts, dtype=bool)
    bad[texts[~learned[skills]]] = True
    return float(bad.mean())


def _one_trial(args):
    cfg, psi, dedup, test_texts = args
    graph = sample_graph(cfg)
    out = run_scns(graph, psi, dedup=dedup, seed=cfg.seed)
    err = float("nan")
    if test_texts:
        s, t = sample_test_endpoints(cfg, test_texts)
        err = testing_error(out.learned, s, t, test_texts)
    return out.learned_fraction, err, out.rounds


def run_trials(cfg, psi: PsiFunction, trials: int, test_texts: int = 0, dedup: bool = True, workers: int = 1):
    """Per-trial (learned_fraction, testing_error, rounds) arrays over independently seeded graphs."""
    if trials < 1:
        raise ValueError("trials must be >= 1")
    jobs = [(trial_config(cfg, t), psi, dedup, test_texts) for t in range(trials)]
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as ex:
            res = list(ex.map(_one_trial, jobs))
    else:
        res = [_one_trial(j) for j in jobs]
    arr = np.array(res, dtype=float).reshape(-1, 3)
    return arr[:, 0], arr[:, 1], arr[:, 2].astype(np.int64)


def empirical_learned_fraction(cfg, psi: PsiFunction, trials: int, dedup: bool = True, workers: int = 1) -> MCEstimate:
    frac, _, _ = run_trials(cfg, psi, trials, 0, dedup, workers)
    return MCEstimate.from_values(frac)


def empirical_testing_error(cfg, psi: PsiFunction, trials: int, test_texts: int = 10_000, dedup: bool = True,
                            workers: int = 1) -> MCEstimate:
    if test_texts < 1:
        raise ValueError("test_texts must be >= 1")
    _, err, _ = run_trials(cfg, psi, trials, test_texts, dedup, workers)
    return MCEstimate.from_values(err)
