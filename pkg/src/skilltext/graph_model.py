"""Random skill-text bipartite graphs.

Texts draw Poisson skill counts and attach each edge to a uniformly chosen
skill, so parallel edges occur and are kept with their multiplicity.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from . import _rng


def _check_finite_nonneg(name, value):
    if not math.isfinite(value):
        raise ValueError(f"{name} must be finite, got {value!r}")
    if value < 0:
        raise ValueError(f"{name} must be nonnegative, got {value!r}")


def _check_fractions(name, values):
    arr = np.asarray(values, dtype=float)
    if arr.ndim != 1 or arr.size == 0:
        raise ValueError(f"{name} must be a non-empty vector")
    if np.any(~np.isfinite(arr)) or np.any(arr < 0):
        raise ValueError(f"{name} must be finite and nonnegative")
    if abs(arr.sum() - 1.0) > 1e-12:
        raise ValueError(f"{name} must sum to 1, got {arr.sum()!r}")
    return arr


@dataclass(frozen=True)
class SingleClassConfig:
    num_skills: int
    ratio_R: float
    mean_skills_per_text: float
    seed: int = 0

    def __post_init__(self):
        if int(self.num_skills) < 1:
            raise ValueError("num_skills must be >= 1")
        _check_finite_nonneg("ratio_R", self.ratio_R)
        _check_finite_nonneg("mean_skills_per_text", self.mean_skills_per_text)

    @property
    def num_texts(self) -> int:
        return int(round(self.ratio_R * self.num_skills))

    @property
    def c(self) -> float:
        return self.mean_skills_per_text


@dataclass(frozen=True)
class MultiClassConfig:
    """Multi-class ensemble.  ``mean_matrix[k][j]`` is the mean number of
    class-k skills in a class-j text, so the matrix has shape (K, J)."""

    num_skills: int
    ratio_R: float
    text_class_fractions: Sequence[float]
    skill_class_fractions: Sequence[float]
    mean_matrix: Sequence[Sequence[float]]
    seed: int = 0

    def __post_init__(self):
        if int(self.num_skills) < 1:
            raise ValueError("num_skills must be >= 1")
        _check_finite_nonneg("ratio_R", self.ratio_R)
        alpha = _check_fractions("text_class_fractions", self.text_class_fractions)
        beta = _check_fractions("skill_class_fractions", self.skill_class_fractions)
        cm = np.asarray(self.mean_matrix, dtype=float)
        if cm.shape != (beta.size, alpha.size):
            raise ValueError(
                f"mean_matrix must have shape (K, J) = ({beta.size}, {alpha.size}), got {cm.shape}"
            )
        if np.any(~np.isfinite(cm)) or np.any(cm < 0):
            raise ValueError("mean_matrix entries must be finite and nonnegative")

    @property
    def alpha(self) -> np.ndarray:
        return np.asarray(self.text_class_fractions, dtype=float)

    @property
    def beta(self) -> np.ndarray:
        return np.asarray(self.skill_class_fractions, dtype=float)

    @property
    def means(self) -> np.ndarray:
        return np.asarray(self.mean_matrix, dtype=float)

    @property
    def num_texts(self) -> int:
        return int(round(self.ratio_R * self.num_skills))

    def skill_degree_means(self) -> np.ndarray:
        """d_{k,j} = c_{k,j} alpha_j R / beta_k, shape (K, J)."""
        with np.errstate(divide="ignore", invalid="ignore"):
            d = self.means * self.alpha[None, :] * self.ratio_R / self.beta[:, None]
        return np.where(self.beta[:, None] > 0, d, 0.0)


@dataclass(frozen=True)
class PoissonPrereqs:
    """Prerequisite count ~ Poisson(mean); pgf exp(-mean (1 - x))."""

    mean: float

    def __post_init__(self):
        _check_finite_nonneg("prerequisite mean", self.mean)

    def pgf(self, x):
        return np.exp(-self.mean * (1.0 - np.asarray(x, dtype=float)))

    def sample(self, seed, stream, idx):
        return _rng.poisson(seed, stream, idx, self.mean)


@dataclass(frozen=True)
class ExplicitPrereqs:
    """Prerequisite count distribution given as coefficients delta_l, l = 0, 1, ..."""

    coefficients: Sequence[float]

    def __post_init__(self):
        _check_fractions("prerequisite coefficients", self.coefficients)

    def pgf(self, x):
        return np.polynomial.polynomial.polyval(np.asarray(x, dtype=float), np.asarray(self.coefficients, dtype=float))

    def sample(self, seed, stream, idx):
        cdf = np.cumsum(np.asarray(self.coefficients, dtype=float))
        u = _rng.uniform(seed, stream, idx)
        return np.minimum(np.searchsorted(cdf, u, side="right"), len(cdf) - 1).astype(np.int64)


@dataclass(frozen=True)
class HierarchyConfig:
    basic: SingleClassConfig
    num_domain_skills: int
    ratio_Rf: float
    mean_domain_skills_per_text: float
    prereq_pgf: PoissonPrereqs | ExplicitPrereqs = field(default_factory=lambda: PoissonPrereqs(3.0))
    seed: int = 0

    def __post_init__(self):
        if int(self.num_domain_skills) < 1:
            raise ValueError("num_domain_skills must be >= 1")
        _check_finite_nonneg("ratio_Rf", self.ratio_Rf)
        _check_finite_nonneg("mean_domain_skills_per_text", self.mean_domain_skills_per_text)

    @property
    def num_domain_texts(self) -> int:
        return int(round(self.ratio_Rf * self.num_domain_skills))

    @property
    def c_f(self) -> float:
        return self.mean_domain_skills_per_text


@dataclass(frozen=True, eq=False)
class BipartiteGraph:
    """Skill-text multigraph stored as unique (skill, text) pairs with multiplicities.

    Pairs are sorted by text, then skill.
    """

    skill_class: np.ndarray
    text_class: np.ndarray
    edge_skill: np.ndarray
    edge_text: np.ndarray
    multiplicity: np.ndarray
    num_skill_classes: int = 1
    num_text_classes: int = 1
    skill_degree: np.ndarray = field(init=False, repr=False)
    text_degree: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        for name in ("skill_class", "text_class", "edge_skill", "edge_text", "multiplicity"):
            arr = np.ascontiguousarray(getattr(self, name), dtype=np.int64)
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)
        if not (self.edge_skill.shape == self.edge_text.shape == self.multiplicity.shape):
            raise ValueError("edge arrays must have equal length")
        if self.edge_skill.size:
            if self.edge_skill.min() < 0 or self.edge_skill.max() >= self.num_skills:
                raise ValueError("edge skill index out of range")
            if self.edge_text.min() < 0 or self.edge_text.max() >= self.num_texts:
                raise ValueError("edge text index out of range")
            if self.multiplicity.min() < 1:
                raise ValueError("multiplicities must be >= 1")
        if self.skill_class.size and (self.skill_class.min() < 0 or self.skill_class.max() >= self.num_skill_classes):
            raise ValueError("skill class index out of range")
        if self.text_class.size and (self.text_class.min() < 0 or self.text_class.max() >= self.num_text_classes):
            raise ValueError("text class index out of range")
        sd = np.bincount(self.edge_skill, weights=self.multiplicity, minlength=self.num_skills).astype(np.int64)
        td = np.bincount(self.edge_text, weights=self.multiplicity, minlength=self.num_texts).astype(np.int64)
        sd.setflags(write=False)
        td.setflags(write=False)
        object.__setattr__(self, "skill_degree", sd)
        object.__setattr__(self, "text_degree", td)

    @property
    def num_skills(self) -> int:
        return int(self.skill_class.size)

    @property
    def num_texts(self) -> int:
        return int(self.text_class.size)

    @property
    def num_edges(self) -> int:
        """Edge count with multiplicity."""
        return int(self.multiplicity.sum())

    def text_skills(self, t: int) -> list[int]:
        lo, hi = np.searchsorted(self.edge_text, [t, t + 1])
        return self.edge_skill[lo:hi].tolist()

    def __eq__(self, other):
        if not isinstance(other, BipartiteGraph):
            return NotImplemented
        return (
            self.num_skill_classes == other.num_skill_classes
            and self.num_text_classes == other.num_text_classes
            and all(
                np.array_equal(getattr(self, n), getattr(other, n))
                for n in ("skill_class", "text_class", "edge_skill", "edge_text", "multiplicity")
            )
        )

    @classmethod
    def from_edge_list(cls, num_skills, num_texts, edges, skill_class=None, text_class=None,
                       num_skill_classes=None, num_text_classes=None):
        """Build from raw (skill, text) endpoint pairs; repeats become multiplicity."""
        pairs = np.asarray(list(edges), dtype=np.int64).reshape(-1, 2)
        return cls._from_endpoints(num_skills, num_texts, pairs[:, 0], pairs[:, 1],
                                   skill_class, text_class, num_skill_classes, num_text_classes)

    @classmethod
    def _from_endpoints(cls, num_skills, num_texts, skills, texts, skill_class=None, text_class=None,
                        num_skill_classes=None, num_text_classes=None):
        skill_class = np.zeros(num_skills, np.int64) if skill_class is None else np.asarray(skill_class)
        text_class = np.zeros(num_texts, np.int64) if text_class is None else np.asarray(text_class)
        if num_skill_classes is None:
            num_skill_classes = int(skill_class.max()) + 1 if skill_class.size else 1
        if num_text_classes is None:
            num_text_classes = int(text_class.max()) + 1 if text_class.size else 1
        key = np.asarray(texts, np.int64) * max(num_skills, 1) + np.asarray(skills, np.int64)
        uniq, counts = np.unique(key, return_counts=True)
        return cls(
            skill_class=skill_class,
            text_class=text_class,
            edge_skill=uniq % max(num_skills, 1),
            edge_text=uniq // max(num_skills, 1),
            multiplicity=counts,
            num_skill_classes=num_skill_classes,
            num_text_classes=num_text_classes,
        )

    def subgraph(self, skill_mask=None, text_mask=None) -> "BipartiteGraph":
        """Induced subgraph on the selected nodes, reindexed in original order."""
        skill_mask = np.ones(self.num_skills, bool) if skill_mask is None else np.asarray(skill_mask, bool)
        text_mask = np.ones(self.num_texts, bool) if text_mask is None else np.asarray(text_mask, bool)
        s_new = np.cumsum(skill_mask) - 1
        t_new = np.cumsum(text_mask) - 1
        keep = skill_mask[self.edge_skill] & text_mask[self.edge_text]
        return BipartiteGraph(
            skill_class=self.skill_class[skill_mask],
            text_class=self.text_class[text_mask],
            edge_skill=s_new[self.edge_skill[keep]],
            edge_text=t_new[self.edge_text[keep]],
            multiplicity=self.multiplicity[keep],
            num_skill_classes=self.num_skill_classes,
            num_text_classes=self.num_text_classes,
        )

    # -- plain-text dump ----------------------------------------------------

    def dumps(self) -> str:
        lines = [f"skills={self.num_skills} texts={self.num_texts} "
                 f"K={self.num_skill_classes} J={self.num_text_classes}"]
        lines.extend(f"{s} {t} {m}" for s, t, m in zip(self.edge_skill.tolist(), self.edge_text.tolist(),
                                                         self.multiplicity.tolist()))
        lines.append("# skill_class")
        lines.append(" ".join(map(str, self.skill_class.tolist())))
        lines.append("# text_class")
        lines.append(" ".join(map(str, self.text_class.tolist())))
        return "\n".join(lines) + "\n"

    @classmethod
    def loads(cls, text: str) -> "BipartiteGraph":
        lines = text.split("\n")
        header = dict(tok.split("=", 1) for tok in lines[0].split())
        try:
            n, m, K, J = (int(header[k]) for k in ("skills", "texts", "K", "J"))
        except KeyError as exc:
            raise ValueError(f"malformed graph header: {lines[0]!r}") from exc
        i = 1
        rows = []
        while i < len(lines) and lines[i] != "# skill_class":
            if lines[i]:
                rows.append(lines[i].split())
            i += 1
        if i + 3 >= len(lines) or lines[i + 2] != "# text_class":
            raise ValueError("missing class-label blocks")
        skill_class = np.array(lines[i + 1].split(), dtype=np.int64)
        text_class = np.array(lines[i + 3].split(), dtype=np.int64)
        if skill_class.size != n or text_class.size != m:
            raise ValueError("class-label block length does not match header")
        e = np.array(rows, dtype=np.int64).reshape(-1, 3)
        return cls(skill_class, text_class, e[:, 0], e[:, 1], e[:, 2], K, J)

    def dump(self, path) -> None:
        with open(path, "w", newline="\n") as fh:
            fh.write(self.dumps())

    @classmethod
    def load(cls, path) -> "BipartiteGraph":
        with open(path) as fh:
            return cls.loads(fh.read())


# -- samplers ---------------------------------------------------------------


def _apportion(total, fractions):
    """Largest-remainder rounding of ``total * fractions`` to integers summing to ``total``."""
    raw = np.asarray(fractions, dtype=float) * total
    base = np.floor(raw).astype(np.int64)
    short = total - int(base.sum())
    if short > 0:
        order = np.argsort(-(raw - base), kind="stable")
        base[order[:short]] += 1
    return base


def _draw_text_edges(seed, text_ids, mean, num_targets, offset=0, deg_stream=_rng.TEXT_DEGREE,
                     edge_stream=_rng.EDGE_END):
    """Poisson(mean) edges per text to uniform targets in [offset, offset + num_targets)."""
    text_ids = np.asarray(text_ids, dtype=np.int64)
    if num_targets <= 0 or np.all(np.asarray(mean) == 0):
        return np.empty(0, np.int64), np.empty(0, np.int64)
    deg = _rng.poisson(seed, deg_stream, text_ids, mean)
    owner = np.repeat(text_ids, deg)
    starts = np.repeat(np.cumsum(deg) - deg, deg)
    local = np.arange(owner.size, dtype=np.int64) - starts
    u = _rng.uniform(seed, edge_stream, owner, local)
    skills = offset + np.minimum((u * num_targets).astype(np.int64), num_targets - 1)
    return skills, owner


def sample_texts(seed, num_texts, mean, num_skills, first_index=0, test=False):
    """Raw (skill, text) endpoint arrays for ``num_texts`` single-class texts."""
    ids = np.arange(first_index, first_index + num_texts, dtype=np.int64)
    streams = (_rng.TEST_DEGREE, _rng.TEST_EDGE_END) if test else (_rng.TEXT_DEGREE, _rng.EDGE_END)
    s, t = _draw_text_edges(seed, ids, mean, num_skills, 0, *streams)
    return s, t - first_index


def sample_single_class(cfg: SingleClassConfig) -> BipartiteGraph:
    n, m = int(cfg.num_skills), cfg.num_texts
    skills, texts = sample_texts(cfg.seed, m, cfg.mean_skills_per_text, n)
    return BipartiteGraph._from_endpoints(n, m, skills, texts, num_skill_classes=1, num_text_classes=1)


def multi_class_layout(cfg: MultiClassConfig):
    """Per-class node counts and contiguous class labels for skills and texts."""
    skills_per_class = _apportion(int(cfg.num_skills), cfg.beta)
    texts_per_class = _apportion(cfg.num_texts, cfg.alpha)
    skill_class = np.repeat(np.arange(skills_per_class.size), skills_per_class)
    text_class = np.repeat(np.arange(texts_per_class.size), texts_per_class)
    return skills_per_class, texts_per_class, skill_class, text_class


def sample_multi_class_texts(cfg: MultiClassConfig, text_class, test=False, seed=None):
    """Endpoints for texts with the given class labels (text ids are positions)."""
    seed = cfg.seed if seed is None else seed
    skills_per_class, _, _, _ = multi_class_layout(cfg)
    offsets = np.cumsum(skills_per_class) - skills_per_class
    ids = np.arange(len(text_class), dtype=np.int64)
    text_class = np.asarray(text_class, dtype=np.int64)
    deg_stream, edge_stream = (_rng.TEST_DEGREE, _rng.TEST_EDGE_END) if test else (_rng.TEXT_DEGREE, _rng.EDGE_END)
    all_s, all_t = [], []
    cm = cfg.means
    for k in range(cm.shape[0]):
        mean = cm[k, text_class] if text_class.size else np.empty(0)
        s, t = _draw_text_edges(seed, ids, mean, int(skills_per_class[k]), int(offsets[k]),
                                deg_stream + k * _rng.CLASS_STRIDE, edge_stream + k * _rng.CLASS_STRIDE)
        all_s.append(s)
        all_t.append(t)
    return np.concatenate(all_s), np.concatenate(all_t)


def sample_multi_class(cfg: MultiClassConfig) -> BipartiteGraph:
    _, _, skill_class, text_class = multi_class_layout(cfg)
    skills, texts = sample_multi_class_texts(cfg, text_class)
    K, J = cfg.means.shape
    return BipartiteGraph._from_endpoints(int(cfg.num_skills), text_class.size, skills, texts,
                                          skill_class, text_class, K, J)


def sample_graph(cfg) -> BipartiteGraph:
    if isinstance(cfg, SingleClassConfig):
        return sample_single_class(cfg)
    if isinstance(cfg, MultiClassConfig):
        return sample_multi_class(cfg)
    raise TypeError(f"unsupported config type {type(cfg).__name__}")


def sample_domain_specific(cfg: HierarchyConfig, learned_basic_prob: float):
    """Domain graph plus i.i.d. learnability flags with probability pgf(learned_basic_prob)."""
    if not (0.0 <= learned_basic_prob <= 1.0) or not math.isfinite(learned_basic_prob):
        raise ValueError(f"learned_basic_prob must lie in [0, 1], got {learned_basic_prob!r}")
    n, m = int(cfg.num_domain_skills), cfg.num_domain_texts
    skills, texts = sample_texts(cfg.seed, m, cfg.c_f, n)
    graph = BipartiteGraph._from_endpoints(n, m, skills, texts, num_skill_classes=1, num_text_classes=1)
    prob = float(cfg.prereq_pgf.pgf(learned_basic_prob))
    flags = _rng.uniform(cfg.seed, _rng.DOMAIN_FLAG, np.arange(n)) < prob
    return graph, flags
