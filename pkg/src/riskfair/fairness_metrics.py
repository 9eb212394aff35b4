"""Unfairness functionals, risk and their finite-sample estimators."""

from __future__ import annotations

from typing import Sequence

import numpy as np

from .dist1d import (
    DEFAULT_GRID_SIZE,
    Distribution1D,
    Empirical,
    Gaussian,
    _as_weights,
    _cdf_gap_candidates,
    barycenter_q,
    midpoint_levels,
    pointwise_cost,
    wasserstein_q_power,
    weighted_argmin,
)

WEIGHT_SCHEMES = ("proportional", "inverse", "equal")


def as_distributions(groups) -> list[Distribution1D]:
    """Per-group prediction arrays (or distributions) as Distribution1D."""
    out = []
    for g in groups:
        if isinstance(g, (Empirical, Gaussian)):
            out.append(g)
            continue
        arr = np.asarray(g, dtype=float).ravel()
        if arr.size == 0:
            raise ValueError("every group needs at least one prediction")
        out.append(Empirical.from_sample(arr))
    if not out:
        raise ValueError("need at least one group")
    return out


def unfairness(groups, w, q: float = 2.0, grid_size: int = DEFAULT_GRID_SIZE) -> float:
    """sum_s w_s W_q^q(nu_s, barycenter); the squared-W2 quantity for q=2.

    ``groups`` holds per-group prediction arrays or Distribution1D objects.
    """
    dists = as_distributions(groups)
    w = _as_weights(w, len(dists))
    if len(dists) == 1:
        return 0.0
    if q == 2 and all(isinstance(d, Gaussian) for d in dists):
        m = np.array([d.mean for d in dists])
        sd = np.array([d.std for d in dists])
        return float(w @ (m - w @ m) ** 2 + w @ (sd - w @ sd) ** 2)
    bary = barycenter_q(dists, w, q, grid_size)
    return float(sum(ws * wasserstein_q_power(d, bary, q, grid_size)
                     for d, ws in zip(dists, w) if ws > 0))


def unfairness_estimator(groups, w, q: float = 2.0,
                         grid_size: int = DEFAULT_GRID_SIZE) -> float:
    """Plug-in estimate: midpoint quadrature of min_y sum_s w_s |Q_s(t) - y|^q.

    Q_s are the empirical quantile functions of the group samples.
    """
    dists = as_distributions(groups)
    w = _as_weights(w, len(dists))
    levels = midpoint_levels(grid_size)
    qs = np.stack([d.quantile(levels) for d in dists])
    y = weighted_argmin(qs, w, q)
    return float(np.mean(pointwise_cost(qs, w, y, q)))


def ks_unfairness(groups, w, grid_size: int = 20_001) -> float:
    """sum_s KS(nu_s, sum_s' w_s' nu_s'), with the exact weighted mixture."""
    dists = as_distributions(groups)
    w = _as_weights(w, len(dists))
    gaps = _cdf_gap_candidates(dists, (dists, w), grid_size)
    return float(sum(np.max(np.abs(g)) for g in gaps))


def ks_unfairness_bound(groups, w, density_bounds: Sequence[float],
                        grid_size: int = DEFAULT_GRID_SIZE) -> float:
    """Upper bound max(1/w) * sqrt(8 * sum_s w_s C_s) * U^(1/4) on ks_unfairness.

    ``density_bounds[s]`` must bound the density of group s.
    """
    dists = as_distributions(groups)
    w = _as_weights(w, len(dists))
    c_bar = float(np.dot(w, density_bounds))
    u = unfairness(dists, w, 2.0, grid_size)
    return float(np.max(1.0 / w) * np.sqrt(8.0 * c_bar) * u ** 0.25)


def weighted_mse(pairs, w) -> float:
    """sum_s w_s * mean((y - f)^2) over per-group (predictions, targets) pairs."""
    pairs = list(pairs)
    w = _as_weights(w, len(pairs))
    total = 0.0
    for (pred, target), ws in zip(pairs, w):
        pred = np.asarray(pred, dtype=float)
        target = np.asarray(target, dtype=float)
        if pred.shape != target.shape:
            raise ValueError("predictions and targets differ in length")
        if pred.size == 0:
            raise ValueError("empty group in weighted_mse")
        total += ws * float(np.mean((target - pred) ** 2))
    return total


def weight_scheme(kind: str, group_counts) -> np.ndarray:
    counts = np.asarray(group_counts, dtype=float)
    if counts.ndim != 1 or counts.size == 0:
        raise ValueError("group_counts must be a non-empty 1-D sequence")
    if np.any(counts < 1):
        raise ValueError("every group count must be >= 1")
    if kind == "proportional":
        w = counts / counts.sum()
    elif kind == "inverse":
        w = (1.0 / counts) / np.sum(1.0 / counts)
    elif kind == "equal":
        w = np.full(counts.size, 1.0 / counts.size)
    else:
        raise ValueError(f"unknown weight scheme {kind!r}; expected one of {WEIGHT_SCHEMES}")
    return w
