"""Foundation model plus fine-tuning on domain-specific skills."""

from __future__ import annotations

import dataclasses
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass

import numpy as np

from . import _rng
from .density_evolution import MAX_ITER, TOL, de_solve_single, iterate_fixed_point
from .graph_model import BipartiteGraph, HierarchyConfig, sample_single_class, sample_texts
from .learners import PsiFunction, SuccessProfile, one_skill_profile
from .peeling import MCEstimate, run_scns, testing_error


@dataclass(frozen=True)
class HierarchyResult:
    zeta_basic: float
    lambda_f_at_zeta: float
    learnable_text_prob: float
    p_f: float
    zeta_f: float
    epsilon_f: float
    iterations_used: int = 0
    c_f: float = 0.0

    @property
    def case_i(self) -> float:
        """Probability that a domain text is not learnable."""
        return 1.0 - self.learnable_text_prob

    @property
    def case_ii(self) -> float:
        """Probability that a domain text is learnable but has an unlearned skill."""
        lam = self.lambda_f_at_zeta
        return float((1.0 - np.exp(-self.c_f * lam * (1.0 - self.zeta_f))) * self.learnable_text_prob)


def learnable_probs(zeta: float, cfg: HierarchyConfig):
    """(P[domain skill learnable], P[domain text learnable]) given basic learned fraction zeta."""
    if not 0.0 <= zeta <= 1.0:
        raise ValueError(f"zeta must lie in [0, 1], got {zeta!r}")
    lam = float(cfg.prereq_pgf.pgf(zeta))
    return lam, float(np.exp(-cfg.c_f * (1.0 - lam)))


def fine_tune_from_zeta(zeta: float, cfg: HierarchyConfig, profile: SuccessProfile | None = None,
                        max_iter: int = MAX_ITER, tol: float = TOL) -> HierarchyResult:
    profile = one_skill_profile() if profile is None else profile
    lam, text_ok = learnable_probs(zeta, cfg)
    c_f = cfg.c_f
    load = c_f * lam  # mean degree of a learnable domain text
    skill_deg = c_f * cfg.ratio_Rf * text_ok  # mean degree of a learnable domain skill
    p_f, iters, _, _, _ = iterate_fixed_point(load, skill_deg, profile, max_iter, tol)
    p_f = float(p_f)
    zeta_f = float(1.0 - np.exp(-(1.0 - p_f) * skill_deg))
    eps_f = (1.0 - text_ok) + (1.0 - np.exp(-load * (1.0 - zeta_f))) * text_ok
    return HierarchyResult(float(zeta), lam, text_ok, p_f, zeta_f, float(eps_f), int(iters), c_f)


def fine_tune_solve(cfg: HierarchyConfig, profile: SuccessProfile | None = None,
                    basic_profile: SuccessProfile | None = None, max_iter: int = MAX_ITER,
                    tol: float = TOL) -> HierarchyResult:
    """Basic density evolution for zeta, then the fine-tune recursion on the
    learnable domain graph.  ``profile`` is the fine-tuning learner and
    ``basic_profile`` the foundation learner (both default to 1-skill)."""
    basic = cfg.basic
    zeta = float(de_solve_single(basic.mean_skills_per_text, basic.ratio_R, basic_profile, max_iter, tol).zeta)
    return fine_tune_from_zeta(zeta, cfg, profile, max_iter, tol)


def epsilon_f_grid(cfg: HierarchyConfig, R_values, Rf_values, profile: SuccessProfile | None = None):
    """epsilon_f over an (R, R_f) grid, shape (len(R), len(R_f))."""
    out = np.empty((len(R_values), len(Rf_values)))
    for i, R in enumerate(R_values):
        base = dataclasses.replace(cfg.basic, ratio_R=float(R))
        zeta = float(de_solve_single(base.mean_skills_per_text, base.ratio_R).zeta)
        for j, Rf in enumerate(Rf_values):
            out[i, j] = fine_tune_from_zeta(zeta, dataclasses.replace(cfg, basic=base, ratio_Rf=float(Rf)),
                                            profile).epsilon_f
    return out


# -- simulation ---------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class HierarchySample:
    basic_learned: np.ndarray
    domain_learnable: np.ndarray
    domain_graph: BipartiteGraph
    text_learnable: np.ndarray
    domain_learned: np.ndarray


def domain_learnability(cfg: HierarchyConfig, basic_learned: np.ndarray) -> np.ndarray:
    """A domain skill is learnable iff all its sampled prerequisites are learned.

    Prerequisites are drawn uniformly with replacement from the basic skills.
    """
    n_f = int(cfg.num_domain_skills)
    n_b = basic_learned.size
    counts = np.asarray(cfg.prereq_pgf.sample(cfg.seed, _rng.PREREQ_COUNT, np.arange(n_f)), np.int64)
    owner = np.repeat(np.arange(n_f), counts)
    local = np.arange(owner.size) - np.repeat(np.cumsum(counts) - counts, counts)
    u = _rng.uniform(cfg.seed, _rng.PREREQ_PICK, owner, local)
    picks = np.minimum((u * n_b).astype(np.int64), n_b - 1)
    missing = np.zeros(n_f, dtype=bool)
    missing[owner[~basic_learned[picks]]] = True
    return ~missing


def simulate_hierarchy_once(cfg: HierarchyConfig, psi: PsiFunction, basic_psi: PsiFunction | None = None,
                            skip_basic: bool = False) -> HierarchySample:
    basic_psi = psi if basic_psi is None else basic_psi
    if skip_basic:
        basic_learned = np.ones(int(cfg.basic.num_skills), dtype=bool)
    else:
        basic_cfg = dataclasses.replace(cfg.basic, seed=_rng.derive_seed(cfg.seed, 0, stream=_rng.BASIC_SEED))
        basic_learned = run_scns(sample_single_class(basic_cfg), basic_psi).learned
    skill_ok = domain_learnability(cfg, basic_learned)
    n_f, m_f = int(cfg.num_domain_skills), cfg.num_domain_texts
    s, t = sample_texts(cfg.seed, m_f, cfg.c_f, n_f)
    domain = BipartiteGraph._from_endpoints(n_f, m_f, s, t, num_skill_classes=1, num_text_classes=1)
    # nothing can be learned from a text that has a non-learnable skill
    text_ok = np.ones(m_f, dtype=bool)
    text_ok[domain.edge_text[~skill_ok[domain.edge_skill]]] = False
    sub = domain.subgraph(text_mask=text_ok)
    learned = run_scns(sub, psi).learned & skill_ok
    return HierarchySample(basic_learned, skill_ok, domain, text_ok, learned)


def _hier_trial(args):
    cfg, psi, basic_psi, test_texts, skip_basic = args
    smp = simulate_hierarchy_once(cfg, psi, basic_psi, skip_basic)
    s, t = sample_texts(cfg.seed, test_texts, cfg.c_f, int(cfg.num_domain_skills), test=True)
    eps_f = testing_error(smp.domain_learned, s, t, test_texts)
    ok = smp.domain_learnable
    zeta_f = smp.domain_learned[ok].mean() if ok.any() else 0.0
    return float(zeta_f), eps_f


def simulate_hierarchy(cfg: HierarchyConfig, psi: PsiFunction, trials: int, test_texts: int = 10_000,
                       basic_psi: PsiFunction | None = None, skip_basic: bool = False, workers: int = 1):
    """Empirical (zeta_f, epsilon_f) estimates.  zeta_f is the learned fraction
    among learnable domain skills, matching the analytic definition."""
    if trials < 1:
        raise ValueError("trials must be >= 1")
    jobs = [(dataclasses.replace(cfg, seed=_rng.derive_seed(cfg.seed, t)), psi, basic_psi, test_texts, skip_basic)
            for t in range(trials)]
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as ex:
            res = list(ex.map(_hier_trial, jobs))
    else:
        res = [_hier_trial(j) for j in jobs]
    arr = np.array(res).reshape(-1, 2)
    return MCEstimate.from_values(arr[:, 0]), MCEstimate.from_values(arr[:, 1])
