"""Semantic compression: cost estimate and a toy skill-index codec.

A text whose skills are all learned is sent as fixed-width indices into the
learned-skill catalog; any other text falls back to its raw bytes.

Bitstream (bits are '0'/'1' characters, most significant bit first)::

    1 | count:16 | count * index:width        semantic path
    0 | nbytes:32 | nbytes * 8 raw bits        fallback path

with ``width = ceil(log2(#learned))``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import _rng
from .density_evolution import de_solve_single
from .graph_model import SingleClassConfig, sample_single_class, sample_texts
from .learners import PsiFunction, SuccessProfile, psi_one_skill
from .peeling import run_scns

COUNT_BITS = 16
LENGTH_BITS = 32
DEFAULT_Z = 236.4


class MalformedBitstream(ValueError):
    pass


@dataclass(frozen=True, eq=False)
class Catalog:
    """Dense index table over the learned skills (sorted by skill id)."""

    skills: np.ndarray

    def __post_init__(self):
        s = np.asarray(self.skills, dtype=np.int64)
        if s.size and np.any(np.diff(s) <= 0):
            raise ValueError("catalog skills must be strictly increasing")
        s.setflags(write=False)
        object.__setattr__(self, "skills", s)

    @classmethod
    def from_learned(cls, learned: np.ndarray) -> Catalog:
        return cls(np.flatnonzero(np.asarray(learned, dtype=bool)))

    def __len__(self):
        return int(self.skills.size)

    @property
    def width(self) -> int:
        n = len(self)
        return (n - 1).bit_length() if n > 1 else 0

    def index_of(self, skills) -> np.ndarray | None:
        """Catalog indices of ``skills``, or None if any is not learned."""
        skills = np.asarray(skills, dtype=np.int64)
        idx = np.searchsorted(self.skills, skills)
        ok = idx < self.skills.size
        ok[ok] = self.skills[idx[ok]] == skills[ok]
        return idx if ok.all() else None


@dataclass(frozen=True)
class CodecConfig:
    num_skills: float
    c: float
    R: float
    profile: SuccessProfile | None = None
    lossless_bits_per_text: float = DEFAULT_Z

    def __post_init__(self):
        if not self.lossless_bits_per_text >= 0:
            raise ValueError("lossless_bits_per_text must be nonnegative")
        if not self.num_skills > 0:
            raise ValueError("num_skills must be positive")
        if self.c < 0 or self.R < 0:
            raise ValueError("c and R must be nonnegative")


@dataclass(frozen=True)
class CostBreakdown:
    understood_prob: float
    learned_count: float
    semantic_bits: float  # cost of an understood text
    expected_bits: float
    degenerate: bool  # fewer than 2 learned skills: pure fallback


def cost_breakdown(cfg: CodecConfig, learned_count: float | None = None) -> CostBreakdown:
    """Expected bits per text.  ``learned_count`` overrides |S| zeta, e.g. with
    the size of a measured catalog."""
    z = cfg.lossless_bits_per_text
    de = de_solve_single(cfg.c, cfg.R, cfg.profile)
    zeta = float(de.zeta)
    understood = math.exp(-cfg.c * (1.0 - zeta))
    n = cfg.num_skills * zeta if learned_count is None else float(learned_count)
    if n < 2:
        return CostBreakdown(understood, n, float("nan"), z, True)
    semantic = cfg.c * math.log2(n)
    return CostBreakdown(understood, n, semantic, understood * semantic + (1.0 - understood) * z, False)


def expected_bits(cfg: CodecConfig) -> float:
    return cost_breakdown(cfg).expected_bits


# -- codec ----------------------------------------------------------------------


def _bits(value: int, width: int) -> str:
    return format(value, f"0{width}b") if width else ""


def encode_text(skills, catalog: Catalog, raw: bytes = b"") -> str:
    skills = np.unique(np.asarray(skills, dtype=np.int64))
    idx = catalog.index_of(skills)
    if idx is not None and skills.size < (1 << COUNT_BITS):
        w = catalog.width
        return "1" + _bits(skills.size, COUNT_BITS) + "".join(_bits(int(i), w) for i in idx)
    if len(raw) >= (1 << LENGTH_BITS):
        raise ValueError("raw payload too long")
    return "0" + _bits(len(raw), LENGTH_BITS) + "".join(format(b, "08b") for b in raw)


def decode_text(bits: str, catalog: Catalog):
    """frozenset of skill ids for the semantic path, raw bytes for the fallback."""
    if not bits or set(bits) - {"0", "1"}:
        raise MalformedBitstream("bitstream must be a non-empty string of 0/1")
    if bits[0] == "1":
        if len(bits) < 1 + COUNT_BITS:
            raise MalformedBitstream("truncated count field")
        count = int(bits[1:1 + COUNT_BITS], 2)
        w = catalog.width
        body = bits[1 + COUNT_BITS:]
        if len(body) != count * w:
            raise MalformedBitstream(f"expected {count * w} index bits, got {len(body)}")
        idx = [int(body[i * w:(i + 1) * w], 2) if w else 0 for i in range(count)]
        if any(i >= len(catalog) for i in idx):
            raise MalformedBitstream("index out of catalog range")
        return frozenset(int(catalog.skills[i]) for i in idx)
    if len(bits) < 1 + LENGTH_BITS:
        raise MalformedBitstream("truncated length field")
    n = int(bits[1:1 + LENGTH_BITS], 2)
    body = bits[1 + LENGTH_BITS:]
    if len(body) != 8 * n:
        raise MalformedBitstream(f"expected {8 * n} payload bits, got {len(body)}")
    return bytes(int(body[i:i + 8], 2) for i in range(0, len(body), 8))


# -- synthetic corpus -----------------------------------------------------------


@dataclass(frozen=True)
class CorpusReport:
    num_texts: int
    catalog_size: int
    mean_bits: float  # full bitstream including flag and length fields
    mean_payload_bits: float  # index bits or raw bits only
    semantic_fraction: float
    mean_semantic_count: float  # realized skills per understood text
    expected_bits: float  # formula with |S| zeta
    expected_bits_catalog: float  # formula with the measured catalog size


def synthetic_corpus(seed: int, num_texts: int, c: float, num_skills: int, raw_bytes: int):
    """Fresh texts as (skill array, raw payload) pairs; payload bytes are seeded noise."""
    s, t = sample_texts(seed, num_texts, c, num_skills, test=True)
    order = np.argsort(t, kind="stable")
    s, t = s[order], t[order]
    bounds = np.searchsorted(t, np.arange(num_texts + 1))
    ids = np.arange(num_texts * raw_bytes)
    noise = (_rng.hash64(seed, _rng.RAW_PAYLOAD, ids) & np.uint64(0xFF)).astype(np.uint8)
    return [(s[bounds[i]:bounds[i + 1]], noise[i * raw_bytes:(i + 1) * raw_bytes].tobytes())
            for i in range(num_texts)]


def measure_corpus(cfg: CodecConfig, num_texts: int = 10_000, seed: int = 0,
                   psi: PsiFunction | None = None) -> CorpusReport:
    """Train by SCNS on a sampled graph, then encode fresh texts and tally bits."""
    psi = psi_one_skill() if psi is None else psi
    n_s = int(round(cfg.num_skills))
    graph = sample_single_class(SingleClassConfig(n_s, cfg.R, cfg.c, seed))
    catalog = Catalog.from_learned(run_scns(graph, psi, seed=seed).learned)
    raw_bytes = math.ceil(cfg.lossless_bits_per_text / 8)
    total = payload = semantic = counts = 0
    for skills, raw in synthetic_corpus(seed, num_texts, cfg.c, n_s, raw_bytes):
        bits = encode_text(skills, catalog, raw)
        total += len(bits)
        if bits[0] == "1":
            semantic += 1
            counts += np.unique(skills).size
            payload += len(bits) - 1 - COUNT_BITS
        else:
            payload += len(bits) - 1 - LENGTH_BITS
    return CorpusReport(num_texts, len(catalog), total / num_texts, payload / num_texts,
                        semantic / num_texts, counts / semantic if semantic else float("nan"),
                        expected_bits(cfg), cost_breakdown(cfg, len(catalog)).expected_bits)
