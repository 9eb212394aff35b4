"""Population-level alpha-relative-improvement predictors and the trade-off.

The alpha-RI oracle is the pointwise combination

    f*_alpha(x, s) = alpha^(1/q) f*(x, s) + (1 - alpha^(1/q)) T_s(f*(x, s))

where T_s transports the law of f* in group s onto the weighted q-barycenter.
Group indices are 0-based throughout.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .dist1d import (
    Empirical,
    Gaussian,
    _as_weights,
    midpoint_levels,
    transport_map_to_barycenter,
)
from .fairness_metrics import as_distributions, unfairness

REALIZED_GRID_SIZE = 100_000


@dataclass(frozen=True, eq=False)
class OracleModel:
    """Group-wise laws of the regression function f* plus group weights."""

    dists: tuple
    w: np.ndarray

    def __post_init__(self):
        dists = tuple(as_distributions(self.dists))
        for i, d in enumerate(dists):
            if isinstance(d, Gaussian) and d.std <= 0:
                raise ValueError(f"group {i}: Gaussian law needs std > 0")
            if isinstance(d, Empirical) and d.values.size < 2:
                raise ValueError(f"group {i}: empirical law needs >= 2 distinct values")
        object.__setattr__(self, "dists", dists)
        object.__setattr__(self, "w", _as_weights(self.w, len(dists)))

    @property
    def n_groups(self) -> int:
        return len(self.dists)

    @classmethod
    def gaussian(cls, means, stds, w) -> "OracleModel":
        return cls(tuple(Gaussian(float(m), float(s)) for m, s in zip(means, stds)), w)


@dataclass(frozen=True)
class TradeoffPoint:
    alpha: float
    risk: float
    unfairness: float


def _check_alpha(alpha: float) -> float:
    if not 0.0 <= alpha <= 1.0:
        raise ValueError(f"alpha must lie in [0, 1], got {alpha!r}")
    return float(alpha)


def fair_optimal(model: OracleModel, s: int, fstar_value, q: float = 2.0):
    """The exactly fair oracle f*_0 at points where f*(x, s) = fstar_value."""
    return transport_map_to_barycenter(model.dists, model.w, s, q, fstar_value)


def oracle_alpha_ri(model: OracleModel, alpha: float, s: int, fstar_value,
                    q: float = 2.0):
    alpha = _check_alpha(alpha)
    if not 0 <= s < model.n_groups:
        raise IndexError(f"group index {s} out of range for K={model.n_groups}")
    keep = alpha ** (1.0 / q)
    if keep == 1.0:
        return fstar_value
    fair = fair_optimal(model, s, fstar_value, q)
    out = keep * np.asarray(fstar_value, dtype=float) + (1.0 - keep) * np.asarray(fair)
    return float(out) if out.ndim == 0 else out


def oracle_unfairness(model: OracleModel, q: float = 2.0,
                      grid_size: int = REALIZED_GRID_SIZE) -> float:
    """U_q(f*), the unfairness of the regression function itself."""
    return unfairness(model.dists, model.w, q, grid_size)


def tradeoff_curve(model: OracleModel, alphas: Sequence[float], q: float = 2.0,
                   grid_size: int = REALIZED_GRID_SIZE) -> list[TradeoffPoint]:
    """Closed-form (risk, unfairness) of f*_alpha for each alpha."""
    u = oracle_unfairness(model, q, grid_size)
    out = []
    for a in alphas:
        a = _check_alpha(a)
        out.append(TradeoffPoint(a, (1.0 - a ** (1.0 / q)) ** q * u, a * u))
    return out


def pushforward_samples(model: OracleModel, alpha: float, q: float = 2.0,
                        grid_size: int = REALIZED_GRID_SIZE):
    """Quantile-grid representation of f* and f*_alpha in every group.

    Returns lists (base, moved) of arrays of length ``grid_size``; entry j of
    group s is evaluated at the j-th quantile midpoint of the law of f* in s.
    """
    levels = midpoint_levels(grid_size)
    base, moved = [], []
    for s, d in enumerate(model.dists):
        x = np.asarray(d.quantile(levels), dtype=float)
        base.append(x)
        moved.append(np.asarray(oracle_alpha_ri(model, alpha, s, x, q)))
    return base, moved


def realized_tradeoff(model: OracleModel, alpha: float, q: float = 2.0,
                      grid_size: int = REALIZED_GRID_SIZE) -> TradeoffPoint:
    """(risk, unfairness) of f*_alpha measured directly by quadrature.

    Unlike ``tradeoff_curve`` this never uses the closed-form identities; the
    risk is sum_s w_s E|f*_alpha - f*|^q and the unfairness is recomputed from
    the pushed-forward group laws.
    """
    alpha = _check_alpha(alpha)
    base, moved = pushforward_samples(model, alpha, q, grid_size)
    risk = float(sum(ws * np.mean(np.abs(m - b) ** q)
                     for ws, b, m in zip(model.w, base, moved)))
    unf = unfairness([Empirical(m) for m in moved], model.w, q, grid_size)
    return TradeoffPoint(alpha, risk, unf)


def alpha_from_lambda(lam: float) -> float:
    """alpha matching the penalized problem min R + lam * U."""
    if lam < 0:
        raise ValueError("lambda must be >= 0")
    return (1.0 + lam) ** -2


def pareto_dominates(p1: TradeoffPoint, p2: TradeoffPoint) -> bool:
    """True iff p1 is at least as good on both criteria and better on one."""
    return (p1.risk <= p2.risk and p1.unfairness < p2.unfairness) or \
        (p1.risk < p2.risk and p1.unfairness <= p2.unfairness)


def pareto_front(points: Sequence[TradeoffPoint]) -> list[TradeoffPoint]:
    points = list(points)
    return [p for p in points if not any(pareto_dominates(o, p) for o in points)]


# --- Euclidean desk check of the geometric lemma -------------------------------


@dataclass(frozen=True)
class GeometricReport:
    b: np.ndarray
    objective: float
    constraint_lhs: float
    constraint_rhs: float
    constraint_satisfied: bool
    best_candidate_objective: float
    objective_gap: float


def _spread(points: np.ndarray, w: np.ndarray) -> np.ndarray:
    """sum_s w_s ||p_s - C_p||^2 for a stack of tuples (..., K, d)."""
    center = np.einsum("k,...kd->...d", w, points)
    return np.einsum("k,...k->...", w, np.sum((points - center[..., None, :]) ** 2, axis=-1))


def check_geometric_lemma(points, w, alpha: float, n_candidates: int = 100_000,
                          seed: int = 0) -> GeometricReport:
    """Walk each point a fraction 1 - sqrt(alpha) toward the barycenter and check
    the result against random feasible competitors.

    Competitors are random tuples shrunk toward their own barycenter until the
    spread constraint sum w ||c - C_c||^2 <= alpha * sum w ||a - C_a||^2 holds.
    ``objective_gap`` is objective(b) minus the best competitor objective, so
    a positive value means b was beaten.
    """
    a = np.asarray(points, dtype=float)
    if a.ndim == 1:
        a = a[:, None]
    k = a.shape[0]
    if k < 2:
        raise ValueError("need at least two points")
    w = _as_weights(w, k)
    alpha = _check_alpha(alpha)
    center = w @ a
    b = a + (1.0 - np.sqrt(alpha)) * (center - a)
    budget = alpha * float(_spread(a, w))
    lhs = float(_spread(b, w))
    objective = float(w @ np.sum((b - a) ** 2, axis=1))
    satisfied = abs(lhs - budget) <= 1e-9 * max(1.0, budget)

    rng = np.random.default_rng(seed)
    scale = np.sqrt(max(float(_spread(a, w)), 1e-12))
    # mix of local perturbations of b and global random tuples
    sigmas = scale * np.array([1e-4, 1e-2, 1e-1, 1.0])
    per = np.repeat(sigmas, -(-n_candidates // sigmas.size))[:n_candidates]
    cand = b[None] + per[:, None, None] * rng.standard_normal((n_candidates,) + a.shape)
    spread = _spread(cand, w)
    shrink = np.where(spread > budget, np.sqrt(budget / np.maximum(spread, 1e-300)), 1.0)
    c_center = np.einsum("k,nkd->nd", w, cand)
    cand = c_center[:, None, :] + shrink[:, None, None] * (cand - c_center[:, None, :])
    cand_obj = np.einsum("k,nk->n", w, np.sum((cand - a[None]) ** 2, axis=-1))
    best = float(cand_obj.min())
    return GeometricReport(b, objective, lhs, budget, bool(satisfied), best, objective - best)
