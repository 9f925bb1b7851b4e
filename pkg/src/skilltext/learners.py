"""Abstract learners: Poisson success profiles and deterministic psi-functions."""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np
from scipy import special
from scipy.interpolate import RegularGridInterpolator


def _check_rho(rho):
    arr = np.asarray(rho, dtype=float)
    if np.any(~np.isfinite(arr)):
        raise ValueError("offered load must be finite")
    if np.any(arr < 0):
        raise ValueError("offered load must be nonnegative")
    return arr


def psuc_one_skill(rho):
    """Probability that a tagged skill is the only novel one under Poisson(rho) load."""
    rho = _check_rho(rho)
    out = np.exp(-rho)
    return float(out) if out.ndim == 0 else out


def psuc_d_skill(D: int, rho):
    """P(Poisson(rho) <= D - 1): the tagged skill plus at most D - 1 others."""
    if int(D) != D or D < 1:
        raise ValueError(f"D must be a positive integer, got {D!r}")
    rho = _check_rho(rho)
    # regularized upper gamma Q(D, rho) is the Poisson CDF at D - 1
    out = special.gammaincc(int(D), rho)
    return float(out) if out.ndim == 0 else out


def psuc_near_far(rho1, rho2):
    r1 = _check_rho(rho1)
    r2 = _check_rho(rho2)
    e1, e2 = np.exp(-r1), np.exp(-r2)
    a = e1 * (e2 + r2 * e2)
    b = e2 * (e1 + r1 * e1)
    if a.ndim == 0:
        return float(a), float(b)
    return a, b


# -- success profiles ---------------------------------------------------------


@dataclass(frozen=True, eq=False)
class SuccessProfile:
    """Per-class success probabilities P_suc,k(rho) of a Poisson learner.

    Calling the profile with loads of shape (..., K) returns shape (..., K).
    A one-class profile also accepts plain scalars/arrays and returns the
    same shape.  Built-in kinds read the total novel load across classes, so
    a K-class one-skill profile equals the single-class one on the summed load.
    """

    kind: str
    num_classes: int = 1
    D: int | None = None
    grid: tuple = ()
    table: np.ndarray | None = None
    fn: Callable | None = field(default=None, repr=False)

    def __call__(self, rho):
        rho = _check_rho(rho)
        if self.num_classes == 1 and (rho.ndim == 0 or rho.shape[-1] != 1):
            return self._eval_scalar(rho)
        if rho.shape[-1] != self.num_classes:
            raise ValueError(f"expected load vectors of length {self.num_classes}, got shape {rho.shape}")
        return self._eval_vec(rho)

    def _eval_scalar(self, rho):
        out = self._eval_vec(rho[..., None])[..., 0]
        return float(out) if out.ndim == 0 else out

    def _eval_vec(self, rho):
        total = rho.sum(axis=-1, keepdims=True)
        if self.kind == "one-skill":
            return np.broadcast_to(np.exp(-total), rho.shape).copy()
        if self.kind == "d-skill":
            return np.broadcast_to(special.gammaincc(self.D, total), rho.shape).copy()
        if self.kind == "near-far":
            a, b = psuc_near_far(rho[..., 0], rho[..., 1])
            return np.stack([np.asarray(a), np.asarray(b)], axis=-1)
        if self.kind == "tabulated":
            return self._interp(rho)
        if self.kind == "custom":
            return np.asarray(self.fn(rho), dtype=float)
        raise ValueError(f"unknown profile kind {self.kind!r}")

    def _interp(self, rho):
        lo = np.array([g[0] for g in self.grid])
        hi = np.array([g[-1] for g in self.grid])
        x = np.clip(rho, lo, hi)
        if self.num_classes == 1:
            return np.interp(x[..., 0], self.grid[0], self.table[..., 0])[..., None]
        interp = RegularGridInterpolator(self.grid, self.table, method="linear")
        flat = x.reshape(-1, self.num_classes)
        return interp(flat).reshape(rho.shape)


def one_skill_profile(num_classes: int = 1) -> SuccessProfile:
    return SuccessProfile("one-skill", num_classes)


def d_skill_profile(D: int, num_classes: int = 1) -> SuccessProfile:
    if int(D) != D or D < 1:
        raise ValueError(f"D must be a positive integer, got {D!r}")
    return SuccessProfile("d-skill", num_classes, D=int(D))


def near_far_profile() -> SuccessProfile:
    return SuccessProfile("near-far", 2)


def custom_profile(fn: Callable, num_classes: int = 1) -> SuccessProfile:
    """Wrap ``fn(rho[..., K]) -> probs[..., K]``.  Not picklable if ``fn`` is a lambda."""
    return SuccessProfile("custom", num_classes, fn=fn)


def tabulated_profile(grid, table) -> SuccessProfile:
    """``grid`` is one increasing axis per class; ``table`` has shape (*axis_lengths, K)."""
    grid = tuple(np.asarray(g, dtype=float) for g in grid)
    table = np.asarray(table, dtype=float)
    K = len(grid)
    if table.shape != tuple(len(g) for g in grid) + (K,):
        raise ValueError(f"table shape {table.shape} does not match grid")
    if np.any(table < 0) or np.any(table > 1):
        raise ValueError("tabulated success probabilities must lie in [0, 1]")
    for g in grid:
        if g.size < 2 or np.any(np.diff(g) <= 0):
            raise ValueError("grid axes must be strictly increasing with >= 2 points")
    return SuccessProfile("tabulated", K, grid=grid, table=table)


def load_tabulated_profile(path) -> SuccessProfile:
    """Read ``rho_1,...,rho_K,psuc_1,...,psuc_K`` rows covering a rectangular grid."""
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader)
        rows = np.array([[float(x) for x in r] for r in reader if r])
    K = len(header) // 2
    if len(header) != 2 * K or header[:K] != [f"rho_{k + 1}" for k in range(K)] \
            or header[K:] != [f"psuc_{k + 1}" for k in range(K)]:
        raise ValueError(f"unexpected tabulated profile header {header!r}")
    axes = [np.unique(rows[:, k]) for k in range(K)]
    table = np.full(tuple(a.size for a in axes) + (K,), np.nan)
    idx = tuple(np.searchsorted(axes[k], rows[:, k]) for k in range(K))
    table[idx] = rows[:, K:]
    if np.isnan(table).any():
        raise ValueError("tabulated profile does not cover a full rectangular grid")
    return tabulated_profile(axes, table)


def save_tabulated_profile(profile: SuccessProfile, path) -> None:
    K = profile.num_classes
    mesh = np.meshgrid(*profile.grid, indexing="ij")
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow([f"rho_{k + 1}" for k in range(K)] + [f"psuc_{k + 1}" for k in range(K)])
        for pos in np.ndindex(*mesh[0].shape):
            w.writerow([repr(float(m[pos])) for m in mesh] + [repr(float(v)) for v in profile.table[pos]])


# -- psi-learners -------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class PsiFunction:
    """Deterministic learner: novel-skill counts n (K-vector) -> learned counts psi(n).

    ``eval`` is vectorized over leading axes of ``n``.  For K > 1 the
    d-skill rule compares the total novel count with D.
    """

    kind: str
    num_classes: int = 1
    D: int | None = None
    table: dict = field(default_factory=dict)

    def eval(self, n):
        """psi(n) for a count (K = 1) or count vector; vectorized over leading axes."""
        arr = np.asarray(n, dtype=np.int64)
        if self.num_classes == 1:
            out = self.apply(arr[..., None])[..., 0]
            return int(out) if out.ndim == 0 else out
        return self.apply(arr)

    def apply(self, n):
        """psi on an integer array of shape (..., K)."""
        n = np.asarray(n, dtype=np.int64)
        if n.shape[-1:] != (self.num_classes,):
            raise ValueError(f"expected count vectors of length {self.num_classes}, got shape {n.shape}")
        if np.any(n < 0):
            raise ValueError("counts must be nonnegative")
        if self.kind == "d-skill":
            return np.where(n.sum(axis=-1, keepdims=True) <= self.D, n, 0)
        if self.kind == "near-far":
            return np.where(np.all(n <= 1, axis=-1, keepdims=True), n, 0)
        if self.kind == "identity":
            return n.copy()
        if self.kind == "tabulated":
            flat = n.reshape(-1, self.num_classes)
            res = np.zeros_like(flat)
            for i, row in enumerate(map(tuple, flat.tolist())):
                if row in self.table:
                    res[i] = self.table[row]
            return res.reshape(n.shape)
        raise ValueError(f"unknown psi kind {self.kind!r}")

    @property
    def all_or_nothing(self) -> bool:
        return self.kind in ("d-skill", "near-far", "identity")


def psi_d_skill(D: int, num_classes: int = 1) -> PsiFunction:
    if int(D) != D or D < 1:
        raise ValueError(f"D must be a positive integer, got {D!r}")
    return PsiFunction("d-skill", num_classes, D=int(D))


def psi_one_skill(num_classes: int = 1) -> PsiFunction:
    return psi_d_skill(1, num_classes)


def psi_near_far() -> PsiFunction:
    return PsiFunction("near-far", 2)


def psi_identity(num_classes: int = 1) -> PsiFunction:
    return PsiFunction("identity", num_classes)


def psi_tabulated(table: dict, num_classes: int) -> PsiFunction:
    """Counts missing from ``table`` map to zero learned skills."""
    clean = {tuple(int(x) for x in np.atleast_1d(k)): tuple(int(x) for x in np.atleast_1d(v))
             for k, v in table.items()}
    for k, v in clean.items():
        if len(k) != num_classes or len(v) != num_classes or any(b > a or b < 0 for a, b in zip(k, v)):
            raise ValueError(f"invalid psi entry {k} -> {v}")
    return PsiFunction("tabulated", num_classes, table=clean)


def psi_eval(psi: PsiFunction, n):
    return psi.eval(n)


def matching_profile(psi: PsiFunction) -> SuccessProfile:
    """Closed-form induced Poisson profile of a built-in psi."""
    if psi.kind == "d-skill":
        return d_skill_profile(psi.D, psi.num_classes)
    if psi.kind == "near-far":
        return near_far_profile()
    if psi.kind == "identity":
        return custom_profile(lambda rho: np.ones_like(rho), psi.num_classes)
    raise ValueError(f"no closed form for psi kind {psi.kind!r}")


@dataclass(frozen=True)
class InducedEstimate:
    psuc: np.ndarray
    stderr: np.ndarray
    num_samples: int


def induce_poisson_from_psi(psi: PsiFunction, rho, num_samples: int, seed: int = 0,
                            block_size: int = 1 << 16) -> InducedEstimate:
    """Monte Carlo estimate of P_suc,k(rho) = E[psi_k(N)] / rho_k, N ~ Poisson(rho).

    Sampled in the equivalent tagged-skill form E[psi_k(N + e_k) / (N_k + 1)]
    (Poisson size-biasing), which has lower variance, is exact for the
    identity psi, and stays defined at rho_k = 0, where it reduces to forcing
    the class-k count to 1.
    """
    if num_samples < 1:
        raise ValueError("num_samples must be >= 1")
    rho = np.atleast_1d(_check_rho(rho)).astype(float)
    K = psi.num_classes
    if rho.size != K:
        raise ValueError(f"rho must have length {K}")
    total = np.zeros(K)
    total_sq = np.zeros(K)
    seeds = np.random.SeedSequence(seed).spawn(math.ceil(num_samples / block_size))
    done = 0
    for ss in seeds:
        size = min(block_size, num_samples - done)
        n = np.random.default_rng(ss).poisson(rho, size=(size, K))
        out = np.empty((size, K))
        for k in range(K):
            tagged = n.copy()
            tagged[:, k] += 1
            out[:, k] = psi.apply(tagged)[:, k] / tagged[:, k]
        total += out.sum(axis=0)
        total_sq += (out ** 2).sum(axis=0)
        done += size
    mean = total / num_samples
    var = np.maximum(total_sq / num_samples - mean ** 2, 0.0)
    return InducedEstimate(mean, np.sqrt(var / num_samples), num_samples)
