"""Linear regression with a systematic group-dependent intercept.

Model: Y = <X, beta*> + b*_S + xi with X ~ N(0, Sigma) and xi ~ N(0, sigma^2).
Fitting is joint least squares over (beta, b); the fairness-adjusted family
shrinks the group intercepts toward their weighted average,

    f_tau(x, s) = <x, beta> + sqrt(tau) b_s + (1 - sqrt(tau)) sum_s' w_s' b_s'.

Group indices are 0-based.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
from scipy.linalg import solve_triangular

from .dist1d import _as_weights

log = logging.getLogger(__name__)

TAU_RULES = ("proposed", "naive")


class SingularDesignError(ValueError):
    """The stacked design [X | group indicators] is rank deficient."""


@dataclass(frozen=True, eq=False)
class LinearBiasModel:
    beta_star: np.ndarray
    b_star: np.ndarray
    sigma: float
    covariance: np.ndarray
    group_sizes: tuple

    def __post_init__(self):
        beta = np.atleast_1d(np.asarray(self.beta_star, dtype=float))
        b = np.atleast_1d(np.asarray(self.b_star, dtype=float))
        cov = np.asarray(self.covariance, dtype=float).reshape(beta.size, beta.size)
        sizes = tuple(int(n) for n in self.group_sizes)
        if self.sigma <= 0:
            raise ValueError("sigma must be positive")
        if len(sizes) != b.size:
            raise ValueError("one group size per intercept is required")
        if any(n < 1 for n in sizes):
            raise ValueError("group sizes must be >= 1")
        if beta.size and not np.allclose(cov, cov.T):
            raise ValueError("covariance must be symmetric")
        try:
            chol = np.linalg.cholesky(cov) if beta.size else np.zeros((0, 0))
        except np.linalg.LinAlgError as exc:
            raise ValueError("covariance is not positive definite") from exc
        object.__setattr__(self, "beta_star", beta)
        object.__setattr__(self, "b_star", b)
        object.__setattr__(self, "covariance", cov)
        object.__setattr__(self, "group_sizes", sizes)
        object.__setattr__(self, "_chol", chol)

    @property
    def p(self) -> int:
        return self.beta_star.size

    @property
    def n_groups(self) -> int:
        return self.b_star.size

    @property
    def n(self) -> int:
        return sum(self.group_sizes)

    @property
    def weights(self) -> np.ndarray:
        sizes = np.asarray(self.group_sizes, dtype=float)
        return sizes / sizes.sum()

    def unfairness(self) -> float:
        """U(f*): the weighted variance of the true intercepts."""
        w = self.weights
        return float(w @ (self.b_star - w @ self.b_star) ** 2)


@dataclass
class GroupedData:
    X: list
    Y: list

    @property
    def group_sizes(self) -> tuple:
        return tuple(len(y) for y in self.Y)


@dataclass(frozen=True)
class LinearFit:
    beta_hat: np.ndarray
    b_hat: np.ndarray


@dataclass(frozen=True)
class RateConfig:
    p: int
    K: int
    n: int
    t: float = 0.0
    simplified: bool = False

    def __post_init__(self):
        if self.p < 1 or self.K < 1 or self.n < 1:
            raise ValueError("p, K and n must be >= 1")
        if self.t < 0:
            raise ValueError("t must be >= 0")


def simulate(model: LinearBiasModel, seed) -> GroupedData:
    rng = np.random.default_rng(seed)
    xs, ys = [], []
    for n_s, b_s in zip(model.group_sizes, model.b_star):
        x = rng.standard_normal((n_s, model.p)) @ model._chol.T
        noise = rng.normal(0.0, model.sigma, size=n_s)
        xs.append(x)
        ys.append(x @ model.beta_star + b_s + noise)
    return GroupedData(xs, ys)


def fit_ls(data: GroupedData, w=None) -> LinearFit:
    """Joint least squares for (beta, b) via a QR factorization.

    With the default weights w_s = n_s / n the weighted objective is ordinary
    pooled least squares over all rows.
    """
    sizes = np.asarray(data.group_sizes)
    k = sizes.size
    if np.any(sizes < 1):
        raise ValueError("every group needs at least one row")
    n = int(sizes.sum())
    w = sizes / n if w is None else _as_weights(w, k)
    x0 = np.asarray(data.X[0], dtype=float)
    p = x0.shape[1] if x0.ndim == 2 else int(x0.size > 0)
    feats = np.vstack([np.asarray(x, dtype=float).reshape(len(y), p)
                       for x, y in zip(data.X, data.Y)])
    ind = np.zeros((n, k))
    rows = np.repeat(np.arange(k), sizes)
    ind[np.arange(n), rows] = 1.0
    y = np.concatenate([np.asarray(v, dtype=float) for v in data.Y])
    sqrt_rw = np.sqrt(w[rows] / sizes[rows])
    design = np.hstack([feats, ind]) * sqrt_rw[:, None]
    target = y * sqrt_rw

    if n < p + k:
        raise SingularDesignError(f"{n} rows cannot identify {p} slopes and {k} intercepts")
    qmat, r = np.linalg.qr(design)
    diag = np.abs(np.diag(r))
    tol = diag.max(initial=0.0) * max(design.shape) * np.finfo(float).eps
    bad = np.flatnonzero(diag <= tol)
    if bad.size:
        block = "feature block" if bad[0] < p else "group-indicator block"
        raise SingularDesignError(
            f"design is rank deficient in the {block} (column {int(bad[0])})")
    coef = solve_triangular(r, qmat.T @ target)
    return LinearFit(coef[:p], coef[p:])


def _check_tau(tau: float) -> float:
    if not 0.0 <= tau <= 1.0:
        raise ValueError(f"tau must lie in [0, 1], got {tau!r}")
    return float(tau)


def intercepts_tau(fit: LinearFit, w, tau: float) -> np.ndarray:
    w = _as_weights(w, fit.b_hat.size)
    r = math.sqrt(_check_tau(tau))
    return r * fit.b_hat + (1.0 - r) * float(w @ fit.b_hat)


def predict_tau(fit: LinearFit, w, tau: float, x, s: int):
    if not 0 <= s < fit.b_hat.size:
        raise IndexError(f"group index {s} out of range")
    x = np.asarray(x, dtype=float)
    return x @ fit.beta_hat + intercepts_tau(fit, w, tau)[s]


def unfairness_closed_form(fit: LinearFit, w, tau: float) -> float:
    """U(f_tau) = tau * weighted variance of the fitted intercepts."""
    w = _as_weights(w, fit.b_hat.size)
    tau = _check_tau(tau)
    return tau * float(w @ (fit.b_hat - w @ fit.b_hat) ** 2)


def population_risk(fit: LinearFit, model: LinearBiasModel, tau: float, w=None) -> float:
    """Exact E[(f_tau(X, S) - f*(X, S))^2] under the data-generating model."""
    w = model.weights if w is None else _as_weights(w, model.n_groups)
    d = fit.beta_hat - model.beta_star
    slope_part = float(d @ model.covariance @ d) if d.size else 0.0
    inter = intercepts_tau(fit, w, tau)
    return slope_part + float(w @ (inter - model.b_star) ** 2)


def delta_n(cfg: RateConfig) -> float:
    p, k, n, t = cfg.p, cfg.K, cfg.n, cfg.t
    if cfg.simplified:
        return (p + k) / n
    return (8 * (p / n + k / n)
            + 16 * (math.sqrt(p / n) + math.sqrt(k / n)) * math.sqrt(t / n)
            + 32 * t / n)


def tau_hat(fit: LinearFit, w, alpha: float, sigma: float, cfg: RateConfig) -> float:
    """Data-driven fairness level; always <= alpha and 0 when unfairness is
    not distinguishable from estimation noise."""
    if sigma <= 0:
        raise ValueError("sigma must be positive")
    if not 0.0 <= alpha <= 1.0:
        raise ValueError("alpha must lie in [0, 1]")
    root_u = math.sqrt(unfairness_closed_form(fit, w, 1.0))
    noise = sigma * math.sqrt(delta_n(cfg))
    if root_u <= noise:
        return 0.0
    return alpha * (1.0 + noise / (root_u - noise)) ** -2


def theta(cfg: RateConfig) -> float:
    rp, rk, rt = math.sqrt(cfg.p), math.sqrt(cfg.K), math.sqrt(cfg.t)
    return (4 * rk + 5 * rt + 6 * rp) / (rp + rt)


def sample_size_threshold(cfg: RateConfig) -> float:
    """Smallest n for which the high-probability guarantee applies."""
    th = theta(cfg)
    root_n = 2 * (math.sqrt(cfg.p) + math.sqrt(cfg.t)) / (th - math.sqrt(th * th - 3))
    return root_n ** 2


def sample_size_check(cfg: RateConfig) -> bool:
    return math.sqrt(cfg.n) >= math.sqrt(sample_size_threshold(cfg))


def noise_to_unfairness_bias(v, w, sigma: float, nur: float) -> np.ndarray:
    """Scale the pattern ``v`` so the model unfairness equals sigma^2 / nur^2."""
    v = np.asarray(v, dtype=float)
    w = _as_weights(w, v.size)
    if nur <= 0 or sigma <= 0:
        raise ValueError("sigma and nur must be positive")
    var = float(w @ (v - w @ v) ** 2)
    if var <= 0:
        raise ValueError("v must not be constant under the weights")
    return v * math.sqrt(sigma ** 2 / (nur ** 2 * var))


def alternating_pattern(k: int) -> np.ndarray:
    return np.array([1.0 if i % 2 == 0 else -1.0 for i in range(k)])


# --- simulation study -----------------------------------------------------------


@dataclass(frozen=True)
class SimulationProtocol:
    p: int = 10
    K: int = 5
    group_sizes: tuple = (100, 100, 100, 100, 100)
    sigma: float = 1.0
    nur: float = 0.5
    alphas: tuple = tuple(np.linspace(0.0, 1.0, 21))
    repetitions: int = 50
    tau_rule: str = "proposed"
    seed: int = 0
    t: float = 0.0
    simplified: bool = True

    def __post_init__(self):
        if self.tau_rule not in TAU_RULES:
            raise ValueError(f"tau_rule must be one of {TAU_RULES}")
        if len(self.group_sizes) != self.K:
            raise ValueError("group_sizes must have K entries")
        if self.repetitions < 1:
            raise ValueError("repetitions must be >= 1")
        if any(not 0.0 <= a <= 1.0 for a in self.alphas):
            raise ValueError("alphas must lie in [0, 1]")

    def model(self) -> LinearBiasModel:
        sizes = np.asarray(self.group_sizes, dtype=float)
        w = sizes / sizes.sum()
        b = noise_to_unfairness_bias(alternating_pattern(self.K), w, self.sigma, self.nur)
        return LinearBiasModel(np.ones(self.p), b, self.sigma, np.eye(self.p), self.group_sizes)

    def rate_config(self) -> RateConfig:
        return RateConfig(self.p, self.K, sum(self.group_sizes), self.t, self.simplified)


@dataclass
class SimulationSummary:
    alphas: np.ndarray
    risk: np.ndarray          # (repetitions, n_alpha)
    unfairness: np.ndarray    # (repetitions, n_alpha)
    tau: np.ndarray           # (repetitions, n_alpha)
    oracle_risk: np.ndarray
    oracle_unfairness: np.ndarray
    target_unfairness: float
    extra: dict = field(default_factory=dict)

    @property
    def mean_risk(self):
        return self.risk.mean(axis=0)

    @property
    def std_risk(self):
        return self.risk.std(axis=0)

    @property
    def mean_unfairness(self):
        return self.unfairness.mean(axis=0)

    @property
    def std_unfairness(self):
        return self.unfairness.std(axis=0)

    @property
    def delta_r(self) -> float:
        """Trapezoid integral over alpha of mean risk minus oracle risk."""
        return float(np.trapezoid(self.mean_risk - self.oracle_risk, self.alphas))

    def violations(self) -> np.ndarray:
        """Per-alpha fraction of repetitions with U(f_tau) > alpha * U(f*)."""
        bound = self.alphas * self.target_unfairness
        return np.mean(self.unfairness > bound[None, :] * (1 + 1e-12), axis=0)


def run_repetition(protocol: SimulationProtocol, rep: int):
    """One independent repetition; the RNG stream depends only on (seed, rep)."""
    model = protocol.model()
    data = simulate(model, np.random.SeedSequence([protocol.seed, rep]))
    fit = fit_ls(data)
    w = model.weights
    cfg = protocol.rate_config()
    n_a = len(protocol.alphas)
    risk, unf, taus = np.empty(n_a), np.empty(n_a), np.empty(n_a)
    for j, a in enumerate(protocol.alphas):
        tau = tau_hat(fit, w, a, model.sigma, cfg) if protocol.tau_rule == "proposed" else a
        taus[j] = tau
        risk[j] = population_risk(fit, model, tau)
        unf[j] = unfairness_closed_form(fit, w, tau)
    return risk, unf, taus


def run_simulation_study(protocol: SimulationProtocol) -> SimulationSummary:
    cfg = protocol.rate_config()
    if not sample_size_check(cfg):
        log.warning("n=%d is below the sample-size threshold %.0f of the guarantee",
                    cfg.n, sample_size_threshold(cfg))
    results = [run_repetition(protocol, r) for r in range(protocol.repetitions)]
    risk, unf, taus = (np.stack(x) for x in zip(*results))
    model = protocol.model()
    u_star = model.unfairness()
    alphas = np.asarray(protocol.alphas, dtype=float)
    return SimulationSummary(
        alphas=alphas,
        risk=risk,
        unfairness=unf,
        tau=taus,
        oracle_risk=(1 - np.sqrt(alphas)) ** 2 * u_star,
        oracle_unfairness=alphas * u_star,
        target_unfairness=u_star,
    )
