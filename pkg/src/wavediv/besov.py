"""Discrete Besov quantities on truncated coefficient fields."""

from __future__ import annotations

import csv
import io
import math
from typing import Callable, Sequence

import numpy as np

from .dyadic import BesovParams, CoefficientField

__all__ = [
    "scale_lp",
    "scale_profile",
    "besov_norm",
    "default_weights",
    "weighted_norm",
    "in_compact_set",
    "sup_coefficient_bound",
    "count_large",
    "profile_csv",
]


def scale_lp(field: CoefficientField, params: BesovParams, j: int) -> float:
    """``eps_j``: weighted l^p norm of the scale-``j`` coefficients.

    For ``p = inf`` this is ``sup |c| 2^{sj}``.
    """
    if j > field.jmax:
        raise ValueError(f"scale {j} beyond jmax={field.jmax}")
    v = np.abs(field.scale(j).v)
    if len(v) == 0:
        return 0.0
    if math.isinf(params.p):
        return float(v.max() * 2.0 ** (params.s * j))
    w = v * 2.0 ** ((params.s - params.d / params.p) * j)
    # factor out the max so tiny scales do not underflow under the power
    top = w.max()
    return float(top * np.sum((w / top) ** params.p) ** (1.0 / params.p))


def scale_profile(field: CoefficientField, params: BesovParams) -> np.ndarray:
    return np.array([scale_lp(field, params, j) for j in range(field.jmax + 1)])


def _lq(eps: np.ndarray, q: float) -> float:
    if len(eps) == 0 or not np.any(eps):
        return 0.0
    if math.isinf(q):
        return float(eps.max())
    top = eps.max()
    return float(top * np.sum((eps / top) ** q) ** (1.0 / q))


def besov_norm(field: CoefficientField, params: BesovParams | None = None) -> float:
    """l^q norm (quasi-norm when ``p`` or ``q`` < 1) of the scale profile."""
    params = params or field.besov
    return _lq(scale_profile(field, params), params.q)


def default_weights(jmax: int) -> np.ndarray:
    j = np.arange(jmax + 1)
    return 1.0 + np.log2(1.0 + j)


def weighted_norm(field: CoefficientField, params: BesovParams | None = None,
                  weights: Sequence[float] | Callable[[int], float] | None = None) -> float:
    """``sum_j a_j eps_j^q``; ``K_A`` membership means this is ``<= 1`` and
    the field lives on ``[0, 1)^d``.  ``q = inf`` uses ``sup_j a_j eps_j``."""
    params = params or field.besov
    eps = scale_profile(field, params)
    if weights is None:
        a = default_weights(field.jmax)
    elif callable(weights):
        a = np.array([weights(j) for j in range(field.jmax + 1)], dtype=float)
    else:
        a = np.asarray(weights, dtype=float)[: field.jmax + 1]
    if np.any(a <= 0):
        raise ValueError("weights must be positive")
    if math.isinf(params.q):
        return float(np.max(a * eps))
    return float(np.sum(a * eps ** params.q))


def weighted_partial_sums(field, params=None, weights=None) -> np.ndarray:
    """Running sums of the weighted functional, one per scale."""
    params = params or field.besov
    eps = scale_profile(field, params)
    a = default_weights(field.jmax) if weights is None else np.asarray(weights, float)[: field.jmax + 1]
    return np.cumsum(a * eps ** params.q)


def in_compact_set(field: CoefficientField, params=None, weights=None) -> bool:
    if not field.supported_in_unit_cube():
        return False
    return weighted_norm(field, params, weights) <= 1.0


def sup_coefficient_bound(field: CoefficientField, params: BesovParams | None = None) -> float:
    """Smallest ``C`` with ``|c| <= C 2^{(d/p - s) j}`` on every stored entry."""
    params = params or field.besov
    best = 0.0
    for j in field.scales:
        best = max(best, field.max_abs(j) * 2.0 ** (-params.critical * j))
    return best


def count_large(field: CoefficientField, j: int, gamma: float) -> int:
    """``Card E_{j,gamma}``: entries at scale ``j`` with ``|c| >= 2^{gamma j}``."""
    if j > field.jmax:
        raise ValueError(f"scale {j} beyond jmax={field.jmax}")
    v = np.abs(field.scale(j).v)
    return int(np.count_nonzero(v >= 2.0 ** (gamma * j)))


def profile_csv(field: CoefficientField, params: BesovParams | None = None,
                gammas: Sequence[float] = ()) -> str:
    """CSV with columns ``j, eps_j`` and one ``count_large`` column per gamma."""
    params = params or field.besov
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["j", "eps_j"] + [f"count_large[{g!r}]" for g in gammas])
    for j in range(field.jmax + 1):
        w.writerow([j, f"{scale_lp(field, params, j):.17g}"] + [count_large(field, j, g) for g in gammas])
    return buf.getvalue()
