"""Randomized post-processing with exact demographic parity.

Calibration splits each group's unlabeled base predictions in two halves and
jitters them with Uniform[-sigma, sigma] noise.  The first half feeds a
rank-based CDF with uniform tie-breaking; the second half provides empirical
quantile functions.  A new prediction in group s is mapped to

    sum_s' w_s' Q2_s'( F1_s(f(x, s) + zeta) ),

which has the same law in every group once the calibration randomness is
integrated out.  Group indices are 0-based.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass

import numpy as np
from scipy import stats

from .dist1d import Distribution1D, Empirical, _as_weights

DEFAULT_JITTER = 1e-6
_EPS = np.finfo(float).eps


@dataclass(frozen=True, eq=False)
class RandomizedCdf:
    values: np.ndarray   # sorted jittered first-half sample
    tie_break: float     # U^s in [0, 1]

    @property
    def n(self) -> int:
        return self.values.size


def randomized_cdf_eval(c: RandomizedCdf, t):
    """(#{v < t} + U (1 + #{v == t})) / (N + 1)."""
    t = np.asarray(t, dtype=float)
    below = np.searchsorted(c.values, t, side="left")
    ties = np.searchsorted(c.values, t, side="right") - below
    out = (below + c.tie_break * (1 + ties)) / (c.n + 1)
    return out if out.ndim else float(out)


def randomized_rank(sample: np.ndarray, tie_break, t) -> np.ndarray:
    """Same statistic as ``randomized_cdf_eval`` for unsorted samples.

    ``sample`` has shape (..., N) and broadcasts against ``t`` and
    ``tie_break`` of shape (...,).  Used when the sample itself is redrawn
    for every evaluation.
    """
    sample = np.asarray(sample, dtype=float)
    t = np.asarray(t, dtype=float)[..., None]
    below = np.sum(sample < t, axis=-1)
    ties = np.sum(sample == t, axis=-1)
    return (below + np.asarray(tie_break) * (1 + ties)) / (sample.shape[-1] + 1)


@dataclass(frozen=True, eq=False)
class PostprocessCalibration:
    first: tuple          # RandomizedCdf per group
    second: tuple         # Empirical of the jittered second half per group
    w: np.ndarray
    jitter_sigma: float
    seed: int

    @property
    def n_groups(self) -> int:
        return len(self.second)


def calibrate(base_preds_by_group, w, jitter_sigma: float = DEFAULT_JITTER,
              seed: int = 0) -> PostprocessCalibration:
    """Build the calibration from unlabeled base predictions, one array per group.

    Each array is cut into two halves of floor(len / 2) elements in the given
    order; with an odd length the last element is dropped.
    """
    groups = [np.asarray(g, dtype=float).ravel() for g in base_preds_by_group]
    if not groups:
        raise ValueError("need at least one group")
    w = _as_weights(w, len(groups))
    if jitter_sigma <= 0:
        raise ValueError("jitter_sigma must be positive")
    rng = np.random.default_rng([seed, 0])
    first, second = [], []
    for s, g in enumerate(groups):
        half = g.size // 2
        if half < 1:
            raise ValueError(f"group {s} needs at least 2 calibration samples, has {g.size}")
        jittered = g[: 2 * half] + rng.uniform(-jitter_sigma, jitter_sigma, size=2 * half)
        tie_break = float(rng.uniform())
        vals = np.sort(jittered[:half])
        vals.setflags(write=False)
        first.append(RandomizedCdf(vals, tie_break))
        second.append(Empirical(jittered[half:]))
    return PostprocessCalibration(tuple(first), tuple(second), w, float(jitter_sigma), seed)


def _barycenter_quantile(cal: PostprocessCalibration, u: np.ndarray) -> np.ndarray:
    u = np.clip(u, _EPS, 1.0)
    return sum(ws * np.asarray(q.quantile(u)) for ws, q in zip(cal.w, cal.second))


def transform(cal: PostprocessCalibration, base_value, s: int, jitter):
    """Post-processed prediction for group ``s`` given the fresh jitter draw(s)."""
    if not 0 <= s < cal.n_groups:
        raise IndexError(f"group index {s} out of range for K={cal.n_groups}")
    x = np.asarray(base_value, dtype=float) + np.asarray(jitter, dtype=float)
    u = np.atleast_1d(randomized_cdf_eval(cal.first[s], x))
    out = _barycenter_quantile(cal, u)
    return out if np.ndim(x) else float(out[0])


def predict_alpha(cal: PostprocessCalibration, base_value, s: int, alpha: float,
                  jitter=None):
    """sqrt(alpha) * f + (1 - sqrt(alpha)) * transform(f)."""
    if not 0.0 <= alpha <= 1.0:
        raise ValueError(f"alpha must lie in [0, 1], got {alpha!r}")
    if alpha == 1.0:
        return base_value
    if jitter is None:
        raise ValueError("a jitter draw is required when alpha < 1")
    r = np.sqrt(alpha)
    out = r * np.asarray(base_value, dtype=float) + (1 - r) * np.asarray(
        transform(cal, base_value, s, jitter))
    return float(out) if out.ndim == 0 else out


class PostProcessor:
    """Calibration plus its own jitter stream.

    Call ``k`` draws from ``default_rng([seed, 1, k])`` so results depend only
    on the calibration seed and the call order.  Not thread-safe: use one
    instance per thread.
    """

    def __init__(self, cal: PostprocessCalibration):
        self.cal = cal
        self._calls = itertools.count()

    def _jitter(self, shape):
        rng = np.random.default_rng([self.cal.seed, 1, next(self._calls)])
        return rng.uniform(-self.cal.jitter_sigma, self.cal.jitter_sigma, size=shape)

    def transform(self, base_values, s: int):
        return transform(self.cal, base_values, s, self._jitter(np.shape(base_values)))

    def predict_alpha(self, base_values, s: int, alpha: float):
        if alpha == 1.0:
            return base_values
        return predict_alpha(self.cal, base_values, s, alpha,
                             self._jitter(np.shape(base_values)))


# --- Monte-Carlo property checks ------------------------------------------------


def ks_uniform_critical(draws: int) -> float:
    """Approximate 1% critical value of the one-sample KS statistic."""
    return 1.63 / np.sqrt(draws)


def ks_two_sample_critical(n: int, m: int) -> float:
    return 1.63 * np.sqrt((n + m) / (n * m))


def rank_statistic_uniformity_test(n: int, value_law: Distribution1D, draws: int = 100_000,
                                   seed: int = 0) -> dict:
    """Monte-Carlo check that the tie-broken rank of a fresh exchangeable draw is
    Uniform[0, 1]."""
    if n < 1:
        raise ValueError("n must be >= 1")
    if draws < 1000:
        raise ValueError("need at least 1000 draws")
    rng = np.random.default_rng(seed)
    v = np.asarray(value_law.sample((draws, n + 1), rng), dtype=float)
    u = rng.uniform(size=draws)
    t = randomized_rank(v[:, :n], u, v[:, n])
    ks = float(stats.ks_1samp(t, stats.uniform.cdf).statistic)
    return {"ks_stat": ks, "pass": ks < ks_uniform_critical(draws)}


def demographic_parity_trial(base_laws, n_calib: int, n_eval: int, w=None,
                             jitter_sigma: float = DEFAULT_JITTER, seed: int = 0) -> dict:
    """Two-sample KS between post-processed outputs of groups 0 and 1.

    The second-half quantile functions are drawn once and shared.  Each fresh
    evaluation redraws the base point, its jitter, the group's first-half
    sample and the tie-breaking variable, so the outputs are samples from the
    law the parity guarantee is about.
    """
    k = len(base_laws)
    w = np.full(k, 1.0 / k) if w is None else _as_weights(w, k)
    rng = np.random.default_rng(seed)
    seconds = []
    for law in base_laws:
        x = law.sample(n_calib, rng) + rng.uniform(-jitter_sigma, jitter_sigma, n_calib)
        seconds.append(Empirical(x))
    cal = PostprocessCalibration((), tuple(seconds), w, jitter_sigma, seed)
    outputs = []
    for law in base_laws[:2]:
        first = law.sample((n_eval, n_calib), rng) + rng.uniform(
            -jitter_sigma, jitter_sigma, (n_eval, n_calib))
        fresh = law.sample(n_eval, rng) + rng.uniform(-jitter_sigma, jitter_sigma, n_eval)
        u = randomized_rank(first, rng.uniform(size=n_eval), fresh)
        outputs.append(_barycenter_quantile(cal, u))
    ks = float(stats.ks_2samp(outputs[0], outputs[1]).statistic)
    crit = ks_two_sample_critical(n_eval, n_eval)
    return {"ks_stat": ks, "critical": crit, "pass": ks < crit}


def fair_oracle_l1_gap(model, n_calib: int, n_eval: int = 10_000, seed: int = 0,
                       jitter_sigma: float = DEFAULT_JITTER) -> float:
    """sum_s w_s E|Pi(f*)(X, s) - f*_0(X, s)| with base predictor f = f*.

    ``model`` is an OracleModel; calibration uses 2 * n_calib draws per group.
    """
    from .oracle import fair_optimal

    rng = np.random.default_rng(seed)
    calib = [d.sample(2 * n_calib, rng) for d in model.dists]
    pp = PostProcessor(calibrate(calib, model.w, jitter_sigma, seed))
    gap = 0.0
    for s, d in enumerate(model.dists):
        x = d.sample(n_eval, rng)
        gap += model.w[s] * float(np.mean(np.abs(pp.transform(x, s) - fair_optimal(model, s, x))))
    return gap
