"""Partial sums, per-scale term maxima and divergence-exponent estimates."""

from __future__ import annotations

import csv
import io
import itertools
import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .dyadic import CoefficientField
from .systems import WaveletSystem

__all__ = [
    "NEG_INF",
    "EstimatorSettings",
    "DivergenceProfile",
    "ConvergenceReport",
    "scale_terms",
    "partial_sum",
    "scale_term_max",
    "profiles",
    "divergence_exponent",
    "exponent_from_maxima",
    "convergence_rate_check",
    "rate_transfer_check",
    "profiles_csv",
    "format_delta",
    "summary_csv",
]

NEG_INF = -math.inf
MODES = ("max-ratio", "record-slope")


@dataclass(frozen=True)
class EstimatorSettings:
    j_min: int = 4
    mode: str = "max-ratio"
    window_radius: float | None = None

    def __post_init__(self) -> None:
        if self.j_min < 1:
            raise ValueError("j_min must be >= 1")
        if self.mode not in MODES:
            raise ValueError(f"mode must be one of {MODES}")


@dataclass
class DivergenceProfile:
    x: tuple[float, ...]
    scale_max: np.ndarray
    partial_sums: np.ndarray
    delta_hat: float
    fit_meta: dict = field(default_factory=dict)


def _points(x, d: int) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    if x.ndim == 0:
        x = x[None]
    if x.ndim == 1:
        x = x[:, None] if d == 1 else x[None, :]
    if x.shape[-1] != d:
        raise ValueError(f"points have dimension {x.shape[-1]}, expected {d}")
    return x


def _tail_radius(system: WaveletSystem, coef_bound: float, tol: float, d: int) -> int:
    """Smallest ``R`` with ``coef_bound * sum_{|r|_inf > R} C (1 + |r|)^-n <= tol``
    using ``sum <= C d 2^d R^{d-n} / (n - d)``."""
    C, n = system.decay
    if n <= d:
        raise ValueError("decay order must exceed the dimension")
    if coef_bound == 0:
        return 1
    R = (coef_bound * C * d * 2 ** d / ((n - d) * tol)) ** (1.0 / (n - d))
    return int(min(max(math.ceil(R), 1), 4096))


def _offsets(system: WaveletSystem, field_: CoefficientField, j: int, settings: EstimatorSettings | None):
    if system.compact:
        return system.window_offsets(), 0.0
    if settings is not None and settings.window_radius is not None:
        R = int(math.ceil(settings.window_radius))
    else:
        tol = 2.0 ** (-field_.besov.critical * j - 40)
        R = _tail_radius(system, field_.max_abs(j), tol, system.d)
    rng = np.arange(-R, R + 1, dtype=np.int64)
    offs = np.array(list(itertools.product(rng, repeat=system.d)), dtype=np.int64)
    C, n = system.decay
    bound = field_.max_abs(j) * C * system.d * 2 ** system.d * float(R) ** (system.d - n) / (n - system.d)
    return offs, bound


def scale_terms(field_: CoefficientField, system: WaveletSystem, x, j: int,
                settings: EstimatorSettings | None = None) -> np.ndarray:
    """Terms ``c^(i)_{j,k} psi^(i)(2^j x - k)`` in the window around each
    point; shape ``(n_points, N * window)``."""
    if field_.d != system.d:
        raise ValueError(f"field dimension {field_.d} differs from system dimension {system.d}")
    pts = _points(x, system.d)
    if j not in field_.scales:
        return np.zeros((len(pts), 0))
    offs, _ = _offsets(system, field_, j, settings)
    scaled = pts * 2.0 ** j
    base = np.floor(scaled).astype(np.int64)
    k = base[:, None, :] - offs[None, :, :]
    y = scaled[:, None, :] - k
    cols = []
    for i in range(1, system.n_generators + 1):
        c = field_.lookup(i, j, k)
        if not np.any(c):
            continue
        cols.append(c * system(i, y))
    if not cols:
        return np.zeros((len(pts), 0))
    return np.concatenate(cols, axis=1)


def _maxima_and_sums(field_, system, x, settings=None, jmax=None):
    pts = _points(x, system.d)
    jmax = field_.jmax if jmax is None else jmax
    M = np.zeros((len(pts), jmax + 1))
    Q = np.zeros((len(pts), jmax + 1))
    for j in range(jmax + 1):
        t = scale_terms(field_, system, pts, j, settings)
        if t.shape[1]:
            M[:, j] = np.abs(t).max(axis=1)
            Q[:, j] = t.sum(axis=1)
    return pts, M, np.cumsum(Q, axis=1)


def partial_sum(field_: CoefficientField, system: WaveletSystem, x, J: int,
                settings: EstimatorSettings | None = None):
    """``P_J(x)``; scalar for a single point, array for a batch."""
    if J > field_.jmax:
        raise ValueError(f"J={J} beyond jmax={field_.jmax}")
    pts, _, P = _maxima_and_sums(field_, system, x, settings, J)
    out = P[:, J]
    return float(out[0]) if len(out) == 1 else out


def scale_term_max(field_: CoefficientField, system: WaveletSystem, x, j: int,
                   settings: EstimatorSettings | None = None):
    if j > field_.jmax:
        raise ValueError(f"j={j} beyond jmax={field_.jmax}")
    t = scale_terms(field_, system, x, j, settings)
    out = np.abs(t).max(axis=1) if t.shape[1] else np.zeros(len(t))
    return float(out[0]) if len(out) == 1 else out


def exponent_from_maxima(M: np.ndarray, j_min: int, mode: str = "max-ratio") -> float:
    """Finite-scale exponent from per-scale maxima ``M[j]``, ``j = 0..Jmax``."""
    M = np.asarray(M, dtype=float)
    js = np.arange(len(M))
    sel = (js >= j_min) & (M > 0)
    if not sel.any():
        return NEG_INF
    jj, lm = js[sel], np.log2(M[sel])
    ratio = float(np.max(lm / jj))
    if mode == "max-ratio":
        return ratio
    delta = ratio
    for _ in range(50):
        resid = lm - delta * jj
        run = np.maximum.accumulate(resid)
        rec = np.concatenate([[True], resid[1:] > run[:-1]])
        if rec.sum() < 2:
            return delta
        new = float(np.polyfit(jj[rec], lm[rec], 1)[0])
        if abs(new - delta) < 1e-12:
            return new
        delta = new
    return delta


def divergence_exponent(field_: CoefficientField, system: WaveletSystem, x,
                        settings: EstimatorSettings = EstimatorSettings()):
    """``delta_hat(x)``: scalar for one point, array for a batch.

    ``max-ratio`` is ``max_{j >= j_min} log2(M_j) / j``; ``record-slope``
    fits the slope of ``log2 M_j`` on record scales.  ``-inf`` when every
    ``M_j`` vanishes.
    """
    if field_.jmax < settings.j_min + 4:
        raise ValueError(f"jmax={field_.jmax} too small for j_min={settings.j_min}")
    pts, M, _ = _maxima_and_sums(field_, system, x, settings)
    out = np.array([exponent_from_maxima(m, settings.j_min, settings.mode) for m in M])
    return float(out[0]) if len(out) == 1 else out


def profiles(field_: CoefficientField, system: WaveletSystem, x,
             settings: EstimatorSettings = EstimatorSettings()) -> list[DivergenceProfile]:
    pts, M, P = _maxima_and_sums(field_, system, x, settings)
    out = []
    for p, m, s in zip(pts, M, P):
        meta = {"mode": settings.mode, "j_min": settings.j_min, "jmax": field_.jmax,
                "other": {mo: exponent_from_maxima(m, settings.j_min, mo) for mo in MODES}}
        out.append(DivergenceProfile(tuple(map(float, p)), m, s,
                                     exponent_from_maxima(m, settings.j_min, settings.mode), meta))
    return out


# -- convergence side -------------------------------------------------------


@dataclass
class ConvergenceReport:
    premise: bool
    C1: float
    gamma: float
    fitted_rate: float
    residuals: np.ndarray
    tail_bound: np.ndarray
    within_bound: bool
    message: str = ""


def convergence_rate_check(field_: CoefficientField, system: WaveletSystem, x, gamma: float,
                           C1: float | None = None) -> ConvergenceReport:
    """Check ``|P_Jmax - P_J| <= W C1 2^{gamma (J+1)} / (1 - 2^gamma)`` for all J.

    ``W`` counts window terms per scale.  Without ``C1`` the smallest
    constant with ``|c psi(x)| <= C1 2^{gamma j}`` is used; a supplied ``C1``
    that some term exceeds makes the premise fail.
    """
    if gamma >= 0:
        raise ValueError("convergence check needs gamma < 0")
    if not system.compact:
        raise ValueError("the geometric tail bound needs a compactly supported system")
    pts, M, P = _maxima_and_sums(field_, system, x)
    M, P = M[0], P[0]
    js = np.arange(len(M))
    need = float(np.max(M * 2.0 ** (-gamma * js))) if len(M) else 0.0
    premise = True
    msg = ""
    if C1 is None:
        C1 = need
    elif need > C1 * (1 + 1e-12):
        premise = False
        msg = "hypothesis violated"
    resid = np.abs(P[-1] - P)
    W = len(system.window_offsets()) * system.n_generators
    bound = W * C1 * 2.0 ** (gamma * (js + 1)) / (1 - 2.0 ** gamma)
    nz = resid[:-1] > 0
    if nz.sum() >= 2:
        rate = float(np.polyfit(js[:-1][nz], np.log2(resid[:-1][nz]), 1)[0])
    else:
        rate = NEG_INF
    ok = bool(np.all(resid <= bound * (1 + 1e-12)))
    if C1 == 0:
        msg = msg or "degenerate: no non-zero terms"
    return ConvergenceReport(premise, C1, gamma, rate, resid, bound, ok, msg)


def rate_transfer_check(field_: CoefficientField, system: WaveletSystem, x, gamma: float,
                        C: float = 1.0, deltas: Sequence[float] | None = None, j_min: int = 1) -> bool:
    """Finite form of "partial sums diverge at rate gamma => terms diverge at
    every rate delta < gamma".

    The premise scales are ``j >= j_min`` with ``|P_j| >= C 2^{gamma j}``.
    For each sampled ``delta`` some scale ``j' <= j`` must carry a term with
    ``M_j' >= C 2^{delta j'} / ((j + 1) W)``.  Returns ``True`` when the
    premise is empty; the converse direction is never asserted.
    """
    if gamma <= 0:
        raise ValueError("rate transfer needs gamma > 0")
    deltas = [gamma * t for t in (0.25, 0.5, 0.75, 0.95)] if deltas is None else list(deltas)
    if any(dl >= gamma for dl in deltas):
        raise ValueError("sampled rates must lie below gamma")
    pts, M, P = _maxima_and_sums(field_, system, x)
    M, P = M[0], P[0]
    W = (len(system.window_offsets()) if system.compact else 1) * system.n_generators
    js = np.arange(len(P))
    premise = [j for j in js if j >= j_min and abs(P[j]) >= C * 2.0 ** (gamma * j)]
    for j in premise:
        for dl in deltas:
            jp = js[: j + 1]
            if not np.any(M[: j + 1] >= C * 2.0 ** (dl * jp) / ((j + 1) * W)):
                return False
    return True


# -- output -----------------------------------------------------------------


def format_delta(v: float) -> str:
    return "-inf" if v == NEG_INF else f"{v:.17g}"


def _fmt_x(x) -> str:
    return ";".join(f"{c:.17g}" for c in x)


def profiles_csv(profs: Sequence[DivergenceProfile]) -> str:
    """Per-scale rows ``x, j, M_j, P_j`` then one summary row per point with
    ``j = delta_hat``, ``M_j`` holding the estimate and ``P_j`` the mode."""
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["x", "j", "M_j", "P_j"])
    for pr in profs:
        xs = _fmt_x(pr.x)
        for j, (m, p) in enumerate(zip(pr.scale_max, pr.partial_sums)):
            w.writerow([xs, j, f"{m:.17g}", f"{p:.17g}"])
        w.writerow([xs, "delta_hat", format_delta(pr.delta_hat), pr.fit_meta.get("mode", "")])
    return buf.getvalue()


def summary_csv(profs: Sequence[DivergenceProfile]) -> str:
    """One row per point: ``x, delta_hat, mode, j_min, jmax``."""
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["x", "delta_hat", "mode", "j_min", "jmax"])
    for pr in profs:
        m = pr.fit_meta
        w.writerow([_fmt_x(pr.x), format_delta(pr.delta_hat), m["mode"], m["j_min"], m["jmax"]])
    return buf.getvalue()
