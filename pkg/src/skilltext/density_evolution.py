"""Density-evolution fixed points for Poisson learners on Poisson skill-text graphs."""

from __future__ import annotations

import dataclasses
from dataclasses import dataclass

import numpy as np

from .graph_model import MultiClassConfig
from .learners import SuccessProfile, one_skill_profile

MAX_ITER = 10_000
TOL = 1e-12
# slack for the monotonicity check; p moves downward in exact arithmetic
_MONO_SLACK = 1e-14


@dataclass(frozen=True)
class DEResult:
    """Converged density-evolution state.  Fields are scalars for scalar
    inputs, arrays for broadcast inputs, and per-class arrays for multi-class
    solves (``epsilon`` is then the combined testing error)."""

    p: np.ndarray | float
    q: np.ndarray | float
    zeta: np.ndarray | float
    epsilon: np.ndarray | float
    iterations_used: np.ndarray | int
    residual: np.ndarray | float
    monotone: bool
    epsilon_per_class: np.ndarray | None = None
    history: np.ndarray | None = None
    tol: float = TOL

    @property
    def converged(self):
        return np.asarray(self.residual) < self.tol


def _scalarize(x):
    x = np.asarray(x)
    return x.item() if x.ndim == 0 else x


def iterate_fixed_point(load, skill_degree, profile: SuccessProfile, max_iter=MAX_ITER, tol=TOL,
                        keep_history=False):
    """Iterate p <- 1 - P_suc(load * exp(-skill_degree * (1 - p))) from p = 1.

    ``load`` is the mean number of skills per text and ``skill_degree`` the
    mean skill degree; both broadcast.  Returns (p, iterations, residual,
    monotone, history).
    """
    if max_iter < 1:
        raise ValueError("max_iter must be >= 1")
    if not tol > 0:
        raise ValueError("tol must be positive")
    load, skill_degree = np.broadcast_arrays(np.asarray(load, float), np.asarray(skill_degree, float))
    if np.any(~np.isfinite(load)) or np.any(~np.isfinite(skill_degree)):
        raise ValueError("density-evolution inputs must be finite")
    if np.any(load < 0) or np.any(skill_degree < 0):
        raise ValueError("density-evolution inputs must be nonnegative")
    shape = load.shape
    load, skill_degree = load.ravel(), skill_degree.ravel()
    p = np.ones(load.size)
    iters = np.zeros(load.size, dtype=np.int64)
    resid = np.full(load.size, np.inf)
    active = np.arange(load.size)
    monotone = True
    history = [p.copy()] if keep_history else None
    for it in range(1, max_iter + 1):
        pa = p[active]
        new = 1.0 - np.asarray(profile(load[active] * np.exp(-skill_degree[active] * (1.0 - pa))), float)
        step = new - pa
        if np.any(step > _MONO_SLACK):
            monotone = False
        p[active] = new
        iters[active] = it
        resid[active] = np.abs(step)
        if keep_history:
            history.append(p.copy())
        active = active[np.abs(step) >= tol]
        if active.size == 0:
            break
    hist = np.array(history).reshape((-1,) + shape) if keep_history else None
    return p.reshape(shape), iters.reshape(shape), resid.reshape(shape), monotone, hist


def de_solve_single(c, R, profile: SuccessProfile | None = None, max_iter: int = MAX_ITER, tol: float = TOL,
                    keep_history: bool = False) -> DEResult:
    """Single-class fixed point; ``c`` and ``R`` may be arrays (broadcast)."""
    profile = one_skill_profile() if profile is None else profile
    if profile.num_classes != 1:
        raise ValueError("de_solve_single needs a one-class profile")
    c, R = np.broadcast_arrays(np.asarray(c, float), np.asarray(R, float))
    p, iters, resid, mono, hist = iterate_fixed_point(c, c * R, profile, max_iter, tol, keep_history)
    q = np.exp(-c * R * (1.0 - p))
    zeta = 1.0 - q
    eps = 1.0 - np.exp(-c * (1.0 - zeta))
    return DEResult(_scalarize(p), _scalarize(q), _scalarize(zeta), _scalarize(eps), _scalarize(iters),
                    _scalarize(resid), mono, history=hist, tol=tol)


def fixed_point_residual(c, R, p, profile: SuccessProfile | None = None):
    profile = one_skill_profile() if profile is None else profile
    return np.abs(p - (1.0 - profile(c * np.exp(-c * R * (1.0 - p)))))


# -- multi-class --------------------------------------------------------------


def edge_class_mix(cfg: MultiClassConfig) -> np.ndarray:
    """r_{k,j}: probability that a class-k edge ends at a class-j text, shape (K, J).

    Rows with no edges at all fall back to alpha so the recursion stays defined.
    """
    w = cfg.means * cfg.alpha[None, :]
    tot = w.sum(axis=1, keepdims=True)
    with np.errstate(divide="ignore", invalid="ignore"):
        r = np.where(tot > 0, w / tot, cfg.alpha[None, :])
    return r


def de_solve_multi(cfg: MultiClassConfig, profile: SuccessProfile, max_iter: int = MAX_ITER, tol: float = TOL,
                   R: float | None = None, keep_history: bool = False) -> DEResult:
    """Coupled per-class recursion for K skill classes and J text classes.

    ``R`` overrides ``cfg.ratio_R`` for sweeps.  Returns per-class p, q, zeta,
    per-class testing error and the combined testing error
    1 - sum_j alpha_j prod_k exp(-c_{k,j} (1 - zeta_k)).
    """
    if R is not None:
        cfg = dataclasses.replace(cfg, ratio_R=R)
    if max_iter < 1:
        raise ValueError("max_iter must be >= 1")
    cm = cfg.means  # (K, J)
    K, J = cm.shape
    if profile.num_classes != K:
        raise ValueError(f"profile has {profile.num_classes} classes, config has K = {K}")
    d = cfg.skill_degree_means().sum(axis=1)  # d_k
    r = edge_class_mix(cfg)
    loads = cm.T  # row j is c~_j
    p = np.ones(K)
    q = np.ones(K)
    monotone = True
    resid = np.inf
    history = [p.copy()] if keep_history else None
    it = 0
    for it in range(1, max_iter + 1):
        P = np.asarray(profile(q[None, :] * loads), float)  # (J, K)
        new = 1.0 - np.einsum("kj,jk->k", r, P)
        step = new - p
        if np.any(step > _MONO_SLACK):
            monotone = False
        p = new
        q = np.exp(-d * (1.0 - p))
        resid = float(np.max(np.abs(step)))
        if keep_history:
            history.append(p.copy())
        if resid < tol:
            break
    zeta = 1.0 - q
    per_text_class = np.exp(-cm * (1.0 - zeta)[:, None])  # (K, J)
    eps = 1.0 - float(np.sum(cfg.alpha * np.prod(per_text_class, axis=0)))
    eps_k = 1.0 - per_text_class @ cfg.alpha
    return DEResult(p, q, zeta, eps, it, resid, monotone, epsilon_per_class=eps_k,
                    history=np.array(history) if keep_history else None, tol=tol)


# -- thresholds ---------------------------------------------------------------


def _refine(f, lo, hi, resolution, points=17):
    """Shrink [lo, hi] around the first point where ``f`` (vectorized, monotone
    boolean) turns true; returns the right end of the final bracket."""
    while hi - lo > resolution:
        xs = np.linspace(lo, hi, points)
        ok = f(xs)
        i = int(np.argmax(ok)) if ok.any() else points - 1
        if i == 0:
            return lo
        lo, hi = xs[i - 1], xs[i]
    return hi


def find_threshold(c, profile: SuccessProfile | None = None, epsilon_drop: float = 0.1, R_range=(0.0, 5.0),
                   grid: int = 501, resolution: float = 1e-3, max_iter: int = MAX_ITER, tol: float = TOL):
    """Smallest R where the testing error falls below ``epsilon_drop``, or None."""
    if grid < 3:
        raise ValueError("grid must be >= 3")
    lo, hi = R_range
    if not lo < hi:
        raise ValueError("R_range must be ordered")
    profile = one_skill_profile() if profile is None else profile
    Rs = np.linspace(lo, hi, grid)
    eps = np.asarray(de_solve_single(c, Rs, profile, max_iter, tol).epsilon)
    below = eps < epsilon_drop
    if not below.any():
        return None
    i = int(np.argmax(below))
    if i == 0:
        return float(Rs[0])
    f = lambda xs: np.asarray(de_solve_single(c, xs, profile, max_iter, tol).epsilon) < epsilon_drop
    return float(_refine(f, Rs[i - 1], Rs[i], resolution))


def find_transition(c, profile: SuccessProfile | None = None, R_range=(0.0, 5.0), grid: int = 501,
                    resolution: float = 1e-3, max_iter: int = MAX_ITER, tol: float = TOL):
    """Location of the sudden drop in the testing error: the grid step with the
    largest decrease, refined to where the error crosses the midpoint of that step."""
    if grid < 3:
        raise ValueError("grid must be >= 3")
    profile = one_skill_profile() if profile is None else profile
    Rs = np.linspace(R_range[0], R_range[1], grid)
    eps = np.asarray(de_solve_single(c, Rs, profile, max_iter, tol).epsilon)
    i = int(np.argmin(np.diff(eps)))
    mid = 0.5 * (eps[i] + eps[i + 1])
    f = lambda xs: np.asarray(de_solve_single(c, xs, profile, max_iter, tol).epsilon) < mid
    return float(_refine(f, Rs[i], Rs[i + 1], resolution))
