"""Divergence spectrum estimates: box counting on a point grid, the
coefficient-count proxy, the closed-form spectrum, seeded points of E_alpha
and Monte Carlo genericity experiments."""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field, replace
from typing import Callable, Sequence

import numpy as np
from scipy import stats

from .besov import count_large
from .divergence import EstimatorSettings, divergence_exponent
from .dyadic import BesovParams, CoefficientField
from .generators import SaturatingConfig, add_fields, saturating_random
from .rng import derive_seed, keyed_bits, keyed_uniform
from .systems import WaveletSystem

__all__ = [
    "theoretical_spectrum",
    "gamma_alpha",
    "default_gamma_grid",
    "AlphaSeed",
    "alpha_seeds",
    "SpectrumEstimate",
    "grid_points",
    "estimate_spectrum",
    "CountSpectrum",
    "coefficient_count_spectrum",
    "test_points",
    "genericity_experiment",
    "spectrum_csv",
]

# offsets u are multiples of 2^-OFFSET_BITS so that seeded points are exact
OFFSET_BITS = 20


def theoretical_spectrum(params: BesovParams, gamma: float) -> float:
    """``d - sp - gamma p`` on ``[-s, -s + d/p]``, NaN outside."""
    s, p, d = params.s, params.p, params.d
    lo, hi = -s, -s + params.d_over_p
    if not (lo - 1e-12 <= gamma <= hi + 1e-12):
        return math.nan
    if math.isinf(p):
        return float(d)
    return float(d - s * p - gamma * p)


def gamma_alpha(params: BesovParams, alpha: float) -> float:
    """``gamma(alpha) = d/p - s - d/(p alpha)``."""
    if alpha < 1:
        raise ValueError("alpha must be >= 1")
    return params.d_over_p - params.s - params.d_over_p / alpha


def default_gamma_grid(params: BesovParams, n: int = 9) -> np.ndarray:
    return np.linspace(-params.s, -params.s + params.d_over_p, n)


@dataclass
class AlphaSeed:
    alpha: float
    points: np.ndarray      # (count, d)
    gamma_target: float
    scales: np.ndarray      # generating j per point
    coarse_k: np.ndarray    # (count, d) position at scale floor(j / alpha)

    def check(self) -> bool:
        """Every point satisfies ``0 <= x - k / 2^{floor(j/alpha)} < 2^-j``."""
        J = np.floor(self.scales / self.alpha).astype(np.int64)
        base = self.coarse_k / (2.0 ** J)[:, None]
        gap = self.points - base
        return bool(np.all((gap >= 0) & (gap < (2.0 ** -self.scales.astype(float))[:, None])))


def alpha_seeds(alpha: float, scales: Sequence[int], count: int, params: BesovParams,
                seed: int = 0) -> AlphaSeed:
    """Points ``k / 2^{floor(j/alpha)} + u 2^{-j}`` with ``u`` a dyadic
    uniform on ``[0, 1)``; scales are cycled through in order."""
    if alpha < 1:
        raise ValueError("alpha must be >= 1")
    scales = list(scales)
    if not scales or count < 1:
        raise ValueError("need at least one scale and one point")
    if max(scales) + OFFSET_BITS > 52:
        raise ValueError("scale too fine for exact double offsets")
    d = params.d
    js = np.array([scales[t % len(scales)] for t in range(count)], dtype=np.int64)
    J = np.floor(js / alpha).astype(np.int64)
    idx = np.arange(count)
    ks = np.empty((count, d), dtype=np.int64)
    us = np.empty((count, d), dtype=np.int64)
    for c in range(d):
        ks[:, c] = (keyed_bits(seed, idx, c, 0) % (np.uint64(1) << J.astype(np.uint64))).astype(np.int64)
        us[:, c] = (keyed_bits(seed, idx, c, 1) >> np.uint64(64 - OFFSET_BITS)).astype(np.int64)
    pts = ks / (2.0 ** J)[:, None] + us * (2.0 ** (-js - OFFSET_BITS))[:, None]
    return AlphaSeed(float(alpha), pts, gamma_alpha(params, alpha), js, ks)


# -- box counting -----------------------------------------------------------


@dataclass
class SpectrumEstimate:
    gamma_grid: np.ndarray
    dims: np.ndarray
    ci_low: np.ndarray
    ci_high: np.ndarray
    box_scales: list[int]
    grid_bits: int
    counts: np.ndarray = field(repr=False, default=None)   # (n_gamma, n_box)
    delta_hat: np.ndarray = field(repr=False, default=None)


def grid_points(n: int, d: int) -> np.ndarray:
    """Cube left endpoints plus half a step, ``2^{nd}`` points, lexicographic."""
    ax = (np.arange(2 ** n) + 0.5) / 2 ** n
    mesh = np.meshgrid(*([ax] * d), indexing="ij")
    return np.stack([m.ravel() for m in mesh], axis=1)


def _box_counts(pts: np.ndarray, sel: np.ndarray, box_scales: Sequence[int]) -> np.ndarray:
    out = np.zeros(len(box_scales), dtype=np.int64)
    if not sel.any():
        return out
    chosen = pts[sel]
    for t, b in enumerate(box_scales):
        boxes = np.floor(chosen * 2.0 ** b).astype(np.int64)
        out[t] = len(np.unique(boxes, axis=0))
    return out


def _origin_fit(b: np.ndarray, y: np.ndarray, level: float = 0.95):
    """Least-squares slope through the origin with a t interval."""
    slope = float(np.dot(b, y) / np.dot(b, b))
    dof = len(b) - 1
    resid = y - slope * b
    se = math.sqrt(float(np.dot(resid, resid)) / dof / float(np.dot(b, b)))
    half = float(stats.t.ppf(0.5 + level / 2, dof)) * se
    return slope, slope - half, slope + half


def estimate_spectrum(field_: CoefficientField, system: WaveletSystem,
                      settings: EstimatorSettings = EstimatorSettings(), n: int = 10,
                      gamma_grid: Sequence[float] | None = None,
                      box_scales: Sequence[int] | None = None) -> SpectrumEstimate:
    """Box-counting dimension of ``{x : delta_hat(x) >= gamma}`` on the
    ``2^{nd}`` grid.

    The fit is ``log2 N_b = dim * b`` through the origin (any non-empty set
    has ``N_0 = 1``), which keeps ``dims`` nonincreasing in ``gamma``.
    Entries with fewer than 3 non-empty box scales are NaN.
    """
    d = system.d
    if field_.d != d:
        raise ValueError(f"field dimension {field_.d} differs from system dimension {d}")
    if n * d > 24:
        raise ValueError(f"grid of 2^{n * d} points is too large")
    box_scales = list(range(1, n + 1)) if box_scales is None else sorted(set(box_scales))
    if not box_scales or box_scales[0] < 1 or box_scales[-1] > n:
        raise ValueError("box scales must lie in 1..n")
    if len(box_scales) < 3:
        raise ValueError("need at least 3 box scales")
    gamma_grid = default_gamma_grid(field_.besov) if gamma_grid is None else np.asarray(gamma_grid, float)
    pts = grid_points(n, d)
    dh = np.atleast_1d(divergence_exponent(field_, system, pts, settings))
    bs = np.asarray(box_scales, dtype=float)
    counts = np.zeros((len(gamma_grid), len(box_scales)), dtype=np.int64)
    dims = np.full(len(gamma_grid), math.nan)
    lo, hi = dims.copy(), dims.copy()
    for g, gam in enumerate(gamma_grid):
        counts[g] = _box_counts(pts, dh >= gam, box_scales)
        nz = counts[g] > 0
        if nz.sum() < 3:
            continue
        dims[g], lo[g], hi[g] = _origin_fit(bs[nz], np.log2(counts[g][nz]))
    return SpectrumEstimate(np.asarray(gamma_grid, float), dims, lo, hi, box_scales, n, counts, dh)


# -- coefficient counts -----------------------------------------------------


@dataclass
class CountSpectrum:
    gamma_grid: np.ndarray
    slopes: np.ndarray
    ci_low: np.ndarray
    ci_high: np.ndarray
    counts: np.ndarray   # (n_gamma, jmax + 1)


def coefficient_count_spectrum(field_: CoefficientField, params: BesovParams | None = None,
                               gamma_grid: Sequence[float] | None = None, j_min: int = 1) -> CountSpectrum:
    """Least-squares slope of ``log2 Card E_{j,gamma}`` against ``j`` over
    scales ``j >= j_min`` with a non-zero count; NaN with fewer than 3."""
    params = params or field_.besov
    gamma_grid = default_gamma_grid(params) if gamma_grid is None else np.asarray(gamma_grid, float)
    js = np.arange(field_.jmax + 1)
    counts = np.array([[count_large(field_, int(j), g) for j in js] for g in gamma_grid], dtype=np.int64)
    counts = counts.reshape(len(gamma_grid), len(js))
    slopes = np.full(len(gamma_grid), math.nan)
    lo, hi = slopes.copy(), slopes.copy()
    for g in range(len(gamma_grid)):
        sel = (js >= j_min) & (counts[g] > 0)
        if sel.sum() < 3:
            continue
        x, y = js[sel].astype(float), np.log2(counts[g][sel])
        if np.all(y == y[0]):
            slopes[g] = lo[g] = hi[g] = 0.0
            continue
        res = stats.linregress(x, y)
        half = float(stats.t.ppf(0.975, len(x) - 2)) * res.stderr
        slopes[g], lo[g], hi[g] = res.slope, res.slope - half, res.slope + half
    return CountSpectrum(np.asarray(gamma_grid, float), slopes, lo, hi, counts)


# -- genericity experiments -------------------------------------------------


def test_points(seed: int, n_uniform: int = 500, n_dyadic: int = 50, d: int = 1,
                dyadic_bits: int = 10) -> np.ndarray:
    """Uniform points plus dyadic rationals ``m / 2^dyadic_bits`` of ``[0, 1)^d``."""
    idx = np.arange(n_uniform)
    uni = np.stack([keyed_uniform(seed, idx, c, 0) for c in range(d)], axis=1)
    idx = np.arange(n_dyadic)
    dy = np.stack([(keyed_bits(seed, idx, c, 1) >> np.uint64(64 - dyadic_bits)).astype(np.int64)
                   / 2.0 ** dyadic_bits for c in range(d)], axis=1)
    return np.concatenate([uni, dy]).reshape(-1, d)


BaseField = CoefficientField | Callable[[CoefficientField], CoefficientField]
# test_points is a helper, not a pytest test
test_points.__test__ = False


def _indicators(S: CoefficientField, system, pts, settings, params, tol_min, tol_median,
                tol_slope, alphas) -> dict:
    dh = np.atleast_1d(divergence_exponent(S, system, pts, settings))
    finite = dh[np.isfinite(dh)]
    mn = float(dh.min())
    med = float(np.median(dh))
    gams = [gamma_alpha(params, a) for a in alphas]
    cs = coefficient_count_spectrum(S, params, gams)
    targets = [params.d / a for a in alphas]
    slope_ok = bool(all(np.isfinite(sl) and abs(sl - t) <= tol_slope for sl, t in zip(cs.slopes, targets)))
    return {
        "min_delta": mn if np.isfinite(mn) else "-inf",
        "median_delta": med if np.isfinite(med) else "-inf",
        "n_finite": int(len(finite)),
        "slopes": [None if not np.isfinite(v) else float(v) for v in cs.slopes],
        "everywhere_lower": bool(mn >= -params.s - tol_min),
        "median_generic": bool(abs(med + params.s) <= tol_median),
        "count_spectrum": slope_ok,
    }


def genericity_experiment(base_fields: Sequence[BaseField], config: SaturatingConfig, system: WaveletSystem,
                          trials: int, settings: EstimatorSettings = EstimatorSettings(),
                          n_uniform: int = 500, n_dyadic: int = 50, tol_min: float = 0.30,
                          tol_median: float = 0.20, tol_slope: float = 0.15,
                          alphas: Sequence[float] = (1, 2, 4)) -> dict:
    """Draw a fresh saturating ``C`` per trial and score ``D_i + C``.

    A base field may be a callable receiving that trial's ``C`` (e.g.
    ``lambda C: scale_field(C, -1)`` for the cancelling direction).  Trial
    seeds derive from ``config.seed`` and the trial index.
    """
    if trials < 1:
        raise ValueError("trials must be >= 1")
    params = config.besov
    fixed = [b for b in base_fields if isinstance(b, CoefficientField)]
    if any(b.besov != params for b in fixed):
        raise ValueError("base fields must share the Besov parameters of the experiment")
    records = []
    passes = np.zeros((len(base_fields), 3), dtype=np.int64)
    for t in range(trials):
        seed_t = derive_seed(config.seed, t)
        C = saturating_random(replace(config, seed=seed_t))
        pts = test_points(derive_seed(seed_t, 1), n_uniform, n_dyadic, params.d)
        per = []
        for b, base in enumerate(base_fields):
            D = base(C) if callable(base) else base
            ind = _indicators(add_fields(D, C).with_besov(params), system, pts, settings, params,
                              tol_min, tol_median, tol_slope, alphas)
            passes[b] += [ind["everywhere_lower"], ind["median_generic"], ind["count_spectrum"]]
            per.append(ind)
        records.append({"trial": t, "seed": seed_t, "fields": per})
    keys = ["everywhere_lower", "median_generic", "count_spectrum"]
    rates = [{k: float(passes[b, c]) / trials for c, k in enumerate(keys)} for b in range(len(base_fields))]
    return {
        "trials": trials,
        "root_seed": config.seed,
        "params": {"s": params.s, "p": params.p if math.isfinite(params.p) else "inf",
                   "q": params.q if math.isfinite(params.q) else "inf", "d": params.d},
        "jmax": config.jmax,
        "estimator": {"j_min": settings.j_min, "mode": settings.mode},
        "tolerances": {"min": tol_min, "median": tol_median, "slope": tol_slope},
        "alphas": list(map(float, alphas)),
        "per_trial": records,
        "pass_rates": rates,
    }


# -- output -----------------------------------------------------------------


def _num(v: float) -> str:
    return "nan" if not np.isfinite(v) else f"{v:.17g}"


def spectrum_csv(est: SpectrumEstimate, count: CountSpectrum | None, params: BesovParams) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["gamma", "dim_boxcount", "dim_coeffcount", "dim_theory", "ci_low", "ci_high"])
    for g, gam in enumerate(est.gamma_grid):
        cc = count.slopes[g] if count is not None else math.nan
        w.writerow([_num(gam), _num(est.dims[g]), _num(cc), _num(theoretical_spectrum(params, gam)),
                    _num(est.ci_low[g]), _num(est.ci_high[g])])
    return buf.getvalue()
