"""Univariate distributions and one-dimensional optimal transport.

Everything here works through quantile functions: on the real line the
Wasserstein-q distance is the L_q distance between quantile functions, and a
q-barycenter is obtained by minimizing pointwise in the quantile level.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence, Union

import numpy as np
from scipy import integrate
from scipy.stats import norm

DEFAULT_GRID_SIZE = 10_000
GOLDEN_TOL = 1e-10
# slack used when comparing a user-supplied level t to cumulative masses
_LEVEL_TOL = 1e-12


@dataclass(frozen=True, eq=False)
class Empirical:
    """Discrete distribution with finitely many atoms.

    Values are sorted and de-duplicated at construction (masses of equal
    values are summed).  If ``masses`` is omitted every value gets the same
    weight, which is the usual empirical measure of a sample.
    """

    values: np.ndarray
    masses: np.ndarray = field(default=None)

    def __post_init__(self):
        x = np.asarray(self.values, dtype=float).ravel()
        if x.size == 0:
            raise ValueError("Empirical distribution needs at least one value")
        if not np.all(np.isfinite(x)):
            raise ValueError("Empirical values must be finite")
        if self.masses is None:
            m = np.full(x.size, 1.0 / x.size)
        else:
            m = np.asarray(self.masses, dtype=float).ravel()
            if m.shape != x.shape:
                raise ValueError("values and masses must have the same length")
            if np.any(m < 0) or not np.all(np.isfinite(m)):
                raise ValueError("masses must be finite and non-negative")
            total = m.sum()
            if abs(total - 1.0) > 1e-9:
                raise ValueError(f"masses must sum to 1, got {total!r}")
            m = m / total
        order = np.argsort(x, kind="stable")
        x, m = x[order], m[order]
        uniq, inverse = np.unique(x, return_inverse=True)
        merged = np.bincount(inverse, weights=m)
        keep = merged > 0
        uniq, merged = uniq[keep], merged[keep]
        merged = merged / merged.sum()
        uniq.setflags(write=False)
        merged.setflags(write=False)
        object.__setattr__(self, "values", uniq)
        object.__setattr__(self, "masses", merged)
        cum = np.cumsum(merged)
        cum[-1] = 1.0
        cum.setflags(write=False)
        object.__setattr__(self, "_cum", cum)

    @classmethod
    def from_sample(cls, sample) -> "Empirical":
        return cls(np.asarray(sample, dtype=float))

    @property
    def cumulative(self) -> np.ndarray:
        return self._cum

    def cdf(self, t):
        idx = np.searchsorted(self.values, t, side="right")
        out = np.concatenate(([0.0], self._cum))[idx]
        return out if np.ndim(t) else float(out)

    def cdf_left(self, t):
        """Left limit F(t-) = mass strictly below t."""
        idx = np.searchsorted(self.values, t, side="left")
        out = np.concatenate(([0.0], self._cum))[idx]
        return out if np.ndim(t) else float(out)

    def quantile(self, t):
        t = _check_levels(t)
        idx = np.searchsorted(self._cum, np.asarray(t) - _LEVEL_TOL, side="left")
        idx = np.minimum(idx, self.values.size - 1)
        out = self.values[idx]
        return out if np.ndim(t) else float(out)

    def _quantile_exact(self, t: np.ndarray) -> np.ndarray:
        # no tolerance: callers pass levels strictly inside merged intervals
        idx = np.searchsorted(self._cum, t, side="left")
        return self.values[np.minimum(idx, self.values.size - 1)]

    def sample(self, size, rng: np.random.Generator) -> np.ndarray:
        return rng.choice(self.values, size=size, p=self.masses)

    def __repr__(self):
        return f"Empirical(n_atoms={self.values.size})"


@dataclass(frozen=True)
class Gaussian:
    mean: float
    std: float

    def __post_init__(self):
        if not (math.isfinite(self.mean) and math.isfinite(self.std)):
            raise ValueError("Gaussian parameters must be finite")
        if self.std < 0:
            raise ValueError("Gaussian std must be >= 0")

    def cdf(self, t):
        t = np.asarray(t, dtype=float)
        if self.std == 0:
            out = (t >= self.mean).astype(float)
        else:
            out = norm.cdf(t, loc=self.mean, scale=self.std)
        return out if out.ndim else float(out)

    def cdf_left(self, t):
        if self.std == 0:
            t = np.asarray(t, dtype=float)
            out = (t > self.mean).astype(float)
            return out if out.ndim else float(out)
        return self.cdf(t)

    def quantile(self, t):
        t = _check_levels(t)
        if self.std == 0:
            out = np.full(np.shape(t), self.mean)
        else:
            out = norm.ppf(t, loc=self.mean, scale=self.std)
        return out if np.ndim(t) else float(out)

    def sample(self, size, rng: np.random.Generator) -> np.ndarray:
        return rng.normal(self.mean, self.std, size=size)


Distribution1D = Union[Empirical, Gaussian]


def _check_levels(t):
    arr = np.asarray(t, dtype=float)
    if np.any(~(arr > 0)) or np.any(arr > 1):
        raise ValueError("quantile levels must lie in (0, 1]")
    return t


def midpoint_levels(grid_size: int) -> np.ndarray:
    if grid_size < 1:
        raise ValueError("grid_size must be positive")
    return (np.arange(grid_size) + 0.5) / grid_size


def discretize(d: Distribution1D, grid_size: int = DEFAULT_GRID_SIZE) -> Empirical:
    """Empirical version of ``d`` with equal masses on quantile midpoints."""
    if isinstance(d, Empirical):
        return d
    return Empirical(d.quantile(midpoint_levels(grid_size)))


def expectation(d: Distribution1D) -> float:
    if isinstance(d, Gaussian):
        return float(d.mean)
    return float(np.dot(d.values, d.masses))


def cdf(d: Distribution1D, t):
    return d.cdf(t)


def quantile(d: Distribution1D, t):
    """Generalized inverse inf{x : F(x) >= t} for t in (0, 1]."""
    return d.quantile(t)


# --- pointwise barycenter of real numbers ------------------------------------


def weighted_argmin(points: np.ndarray, w: np.ndarray, q: float) -> np.ndarray:
    """argmin_y sum_s w_s |points[s, j] - y|^q, column by column.

    q=2 is the weighted mean, q=1 the lower weighted median, other q use a
    golden-section search on the convex objective.
    """
    points = np.asarray(points, dtype=float)
    w = np.asarray(w, dtype=float)
    if points.ndim == 1:
        points = points[:, None]
    if q == 2:
        return w @ points
    if q == 1:
        return _lower_weighted_median(points, w)
    return _golden_section(points, w, q)


def pointwise_cost(points: np.ndarray, w: np.ndarray, y: np.ndarray, q: float) -> np.ndarray:
    return np.asarray(w) @ np.abs(np.asarray(points) - y) ** q


def _lower_weighted_median(points: np.ndarray, w: np.ndarray) -> np.ndarray:
    order = np.argsort(points, axis=0, kind="stable")
    sorted_pts = np.take_along_axis(points, order, axis=0)
    cum_w = np.cumsum(w[order], axis=0)
    idx = np.argmax(cum_w >= 0.5 - 1e-12, axis=0)
    return sorted_pts[idx, np.arange(points.shape[1])]


def _golden_section(points: np.ndarray, w: np.ndarray, q: float) -> np.ndarray:
    lo = points.min(axis=0).copy()
    hi = points.max(axis=0).copy()
    width = float(np.max(hi - lo)) if points.size else 0.0
    if width <= GOLDEN_TOL:
        return 0.5 * (lo + hi)
    ratio = (math.sqrt(5.0) - 1.0) / 2.0
    n_iter = int(math.ceil(math.log(GOLDEN_TOL / width) / math.log(ratio))) + 1
    c = hi - ratio * (hi - lo)
    d = lo + ratio * (hi - lo)
    fc = pointwise_cost(points, w, c, q)
    fd = pointwise_cost(points, w, d, q)
    for _ in range(n_iter):
        left = fc <= fd
        # keep [lo, d] where f(c) <= f(d), else [c, hi]
        hi = np.where(left, d, hi)
        lo = np.where(left, lo, c)
        new_c = hi - ratio * (hi - lo)
        new_d = lo + ratio * (hi - lo)
        fc_new = pointwise_cost(points, w, new_c, q)
        fd_new = pointwise_cost(points, w, new_d, q)
        c, d, fc, fd = new_c, new_d, fc_new, fd_new
    return 0.5 * (lo + hi)


# --- distances ----------------------------------------------------------------


def _merged_levels(dists: Sequence[Empirical]):
    """Breakpoints where every quantile function in ``dists`` is constant."""
    bps = np.unique(np.concatenate([[0.0]] + [d.cumulative for d in dists]))
    bps[-1] = 1.0
    widths = np.diff(bps)
    keep = widths > 1e-15
    mids = 0.5 * (bps[:-1] + bps[1:])
    return mids[keep], widths[keep]


def wasserstein_q(a: Distribution1D, b: Distribution1D, q: float = 2.0,
                  grid_size: int = DEFAULT_GRID_SIZE) -> float:
    """W_q(a, b), the distance itself (not its q-th power)."""
    return wasserstein_q_power(a, b, q, grid_size) ** (1.0 / q)


def wasserstein_q_power(a: Distribution1D, b: Distribution1D, q: float = 2.0,
                        grid_size: int = DEFAULT_GRID_SIZE) -> float:
    if not q >= 1:
        raise ValueError("q must be >= 1")
    if isinstance(a, Gaussian) and isinstance(b, Gaussian):
        dm = a.mean - b.mean
        ds = a.std - b.std
        if q == 2:
            return dm * dm + ds * ds
        if ds == 0:
            return abs(dm) ** q
        # quantile difference is dm + ds * z with z standard normal
        val, _ = integrate.quad(lambda z: abs(dm + ds * z) ** q * norm.pdf(z),
                                -np.inf, np.inf, points=None, limit=200)
        return float(val)
    ea, eb = discretize(a, grid_size), discretize(b, grid_size)
    mids, widths = _merged_levels([ea, eb])
    diff = ea._quantile_exact(mids) - eb._quantile_exact(mids)
    return float(np.dot(widths, np.abs(diff) ** q))


def ks_distance(a: Distribution1D, b: Distribution1D, grid_size: int = 20_001) -> float:
    """sup_t |F_a(t) - F_b(t)|; exact when both inputs are empirical."""
    return float(np.max(np.abs(_cdf_gap_candidates([a], b, grid_size)[0])))


def _candidate_points(dists: Sequence[Distribution1D], grid_size: int) -> np.ndarray:
    pts = []
    gauss = [d for d in dists if isinstance(d, Gaussian)]
    for d in dists:
        if isinstance(d, Empirical):
            pts.append(d.values)
        elif d.std == 0:
            pts.append(np.array([d.mean]))
    spread = [d for d in gauss if d.std > 0]
    if spread:
        lo = min(d.mean - 9 * d.std for d in spread)
        hi = max(d.mean + 9 * d.std for d in spread)
        pts.append(np.linspace(lo, hi, grid_size))
    return np.unique(np.concatenate(pts))


def _cdf_gap_candidates(group_dists: Sequence[Distribution1D], reference,
                        grid_size: int):
    """F_s - F_ref evaluated at and just below every candidate jump point.

    ``reference`` is a Distribution1D or a (dists, weights) mixture.
    """
    if isinstance(reference, tuple):
        ref_dists, ref_w = reference
        all_d = list(group_dists) + list(ref_dists)

        def ref_cdf(t):
            return sum(wi * d.cdf(t) for d, wi in zip(ref_dists, ref_w))

        def ref_left(t):
            return sum(wi * d.cdf_left(t) for d, wi in zip(ref_dists, ref_w))
    else:
        all_d = list(group_dists) + [reference]
        ref_cdf, ref_left = reference.cdf, reference.cdf_left
    t = _candidate_points(all_d, grid_size)
    fr, fl = ref_cdf(t), ref_left(t)
    gaps = []
    for d in group_dists:
        right = d.cdf(t) - fr
        left = d.cdf_left(t) - fl
        gaps.append(np.concatenate([right, left]))
    return gaps


# --- barycenters and transport -------------------------------------------------


def _as_weights(w, k: int) -> np.ndarray:
    w = np.asarray(w, dtype=float).ravel()
    if w.size != k:
        raise ValueError(f"expected {k} weights, got {w.size}")
    if np.any(w < 0) or abs(w.sum() - 1.0) > 1e-12 * max(1, k):
        raise ValueError("weights must be non-negative and sum to 1")
    return w


def barycenter_q(dists: Sequence[Distribution1D], w, q: float = 2.0,
                 grid_size: int = DEFAULT_GRID_SIZE) -> Distribution1D:
    """Weighted q-barycenter, characterized level-by-level on quantiles.

    All-Gaussian inputs with q=2 give the exact Gaussian barycenter.  When
    every input is empirical the quantile functions are piecewise constant
    and the barycenter is computed exactly on their merged breakpoints;
    otherwise the quantile midpoints of a ``grid_size`` grid are used.
    """
    dists = list(dists)
    if not dists:
        raise ValueError("barycenter of an empty list")
    if not q >= 1:
        raise ValueError("q must be >= 1")
    w = _as_weights(w, len(dists))
    if q == 2 and all(isinstance(d, Gaussian) for d in dists):
        return Gaussian(float(np.dot(w, [d.mean for d in dists])),
                        float(np.dot(w, [d.std for d in dists])))
    if all(isinstance(d, Empirical) for d in dists):
        levels, masses = _merged_levels(dists)
        qs = np.stack([d._quantile_exact(levels) for d in dists])
    else:
        if grid_size < 2:
            raise ValueError("grid_size must be >= 2")
        levels = midpoint_levels(grid_size)
        masses = np.full(grid_size, 1.0 / grid_size)
        qs = np.stack([discretize(d, grid_size)._quantile_exact(levels) for d in dists])
    return Empirical(weighted_argmin(qs, w, q), masses / masses.sum())


def transport_map_to_barycenter(dists: Sequence[Distribution1D], w, s: int,
                                q: float, x):
    """Optimal map from ``dists[s]`` to the weighted q-barycenter, at ``x``.

    ``s`` is a 0-based group index.
    """
    dists = list(dists)
    if not 0 <= s < len(dists):
        raise IndexError(f"group index {s} out of range for K={len(dists)}")
    w = _as_weights(w, len(dists))
    x_arr = np.atleast_1d(np.asarray(x, dtype=float))
    src = dists[s]
    if all(isinstance(d, Gaussian) for d in dists) and src.std > 0:
        # F_{s'}^{-1}(F_s(x)) = m' + sd' * z, computed without the cdf round trip
        z = (x_arr - src.mean) / src.std
        qs = np.stack([d.mean + d.std * z for d in dists])
    else:
        u = np.clip(src.cdf(x_arr), np.finfo(float).tiny, 1.0)
        qs = np.stack([np.asarray(d.quantile(u), dtype=float) for d in dists])
    out = weighted_argmin(qs, w, q)
    return out if np.ndim(x) else float(out[0])
