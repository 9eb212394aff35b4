"""Property suites behind ``riskfair check``."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .dist1d import Empirical, Gaussian
from .oracle import (
    OracleModel,
    check_geometric_lemma,
    pareto_dominates,
    realized_tradeoff,
    tradeoff_curve,
)
from .postprocess import demographic_parity_trial, rank_statistic_uniformity_test

SUITES = ("geometric", "rank-uniform", "dp", "tradeoff")

# Isosceles triangle used for the geometric desk check.
TRIANGLE = np.array([[-1.0, 0.0], [1.0, 0.0], [0.0, 2.0]])
TRIANGLE_WEIGHTS = np.array([0.1, 0.4, 0.5])


@dataclass
class CheckResult:
    name: str
    statistic: float
    threshold: float
    passed: bool

    def line(self) -> str:
        status = "PASS" if self.passed else "FAIL"
        return f"{status}  {self.name}: {self.statistic:.6g} (threshold {self.threshold:.6g})"


def random_gaussian_model(rng: np.random.Generator, k: int | None = None) -> OracleModel:
    k = int(rng.integers(2, 6)) if k is None else k
    means = rng.uniform(-3, 3, k)
    stds = rng.uniform(0.3, 2.5, k)
    w = rng.dirichlet(np.ones(k))
    return OracleModel.gaussian(means, stds, w)


def geometric_suite(seed: int = 0) -> list[CheckResult]:
    out = []
    for alpha in (0.25, 0.5, 0.75):
        rep = check_geometric_lemma(TRIANGLE, TRIANGLE_WEIGHTS, alpha, 100_000, seed)
        err = abs(rep.constraint_lhs - rep.constraint_rhs)
        out.append(CheckResult(f"alpha={alpha} constraint equality", err, 1e-9,
                               rep.constraint_satisfied))
        out.append(CheckResult(f"alpha={alpha} objective gap", rep.objective_gap, 1e-6,
                               rep.objective_gap <= 1e-6))
    return out


def rank_uniform_suite(seed: int = 0, draws: int = 100_000) -> list[CheckResult]:
    laws = {"continuous": Gaussian(0.0, 1.0), "two-point": Empirical([0.0, 1.0]),
            "degenerate": Empirical([0.0])}
    out = []
    for name, law in laws.items():
        for n in (1, 5, 50):
            r = rank_statistic_uniformity_test(n, law, draws, seed)
            out.append(CheckResult(f"{name} n={n} KS", r["ks_stat"],
                                   1.63 / np.sqrt(draws), bool(r["pass"])))
    return out


def dp_suite(seed: int = 0, trials: int = 20, n_calib: int = 500,
             n_eval: int = 10_000) -> list[CheckResult]:
    laws = [Gaussian(0.0, 1.0), Gaussian(3.0, 0.5)]
    out = []
    for i in range(trials):
        r = demographic_parity_trial(laws, n_calib, n_eval, seed=seed * 100_003 + i)
        out.append(CheckResult(f"trial {i} two-sample KS", r["ks_stat"], r["critical"],
                               bool(r["pass"])))
    return out


def tradeoff_suite(seed: int = 0, n_models: int = 20) -> list[CheckResult]:
    rng = np.random.default_rng(seed)
    alphas = np.linspace(0, 1, 11)
    out = []
    for m in range(n_models):
        model = random_gaussian_model(rng)
        curve = tradeoff_curve(model, alphas)
        u = curve[-1].unfairness
        worst = 0.0
        for pt in curve[1:-1:3]:
            real = realized_tradeoff(model, pt.alpha)
            worst = max(worst, abs(real.risk - pt.risk) / u,
                        abs(real.unfairness - pt.unfairness) / u)
        out.append(CheckResult(f"model {m} realized vs closed form (rel. to U)", worst, 1e-4,
                               worst <= 1e-4))
        dominated = any(pareto_dominates(a, b) for a in curve for b in curve)
        out.append(CheckResult(f"model {m} curve dominated points", float(dominated), 0.0,
                               not dominated))
    return out


def run_suite(name: str, seed: int = 0) -> list[CheckResult]:
    runners = {"geometric": geometric_suite, "rank-uniform": rank_uniform_suite,
               "dp": dp_suite, "tradeoff": tradeoff_suite}
    if name not in runners:
        raise ValueError(f"unknown suite {name!r}; expected one of {SUITES}")
    return runners[name](seed)
