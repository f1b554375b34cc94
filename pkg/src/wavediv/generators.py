"""Explicit coefficient sequences: the hierarchical sequence E, the random
saturating sequence C, its translates, the lineability family E_a,
point-divergent sequences and residual witnesses.

All logarithms in weights such as ``2^{-(log j)^2}`` are base 2.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Mapping, Sequence

import numpy as np

from .dyadic import BesovParams, CoefficientField, containing_cube, irreducible_generation, unit_cube_positions
from .rng import keyed_uniform
from .systems import DyadicCovering, WaveletSystem, covering_lower_bound_at, covering_map

__all__ = [
    "LOG_CONVENTION",
    "log_weight",
    "e_values",
    "deterministic_e",
    "hierarchy_check",
    "SaturatingConfig",
    "saturating_envelope",
    "saturating_random",
    "add_fields",
    "scale_field",
    "translate_field",
    "lineability_basis",
    "lineability_combination",
    "sandwich_j0",
    "sandwich_violations",
    "point_divergent",
    "ResidualWitness",
    "canonical_rational_field",
    "residual_radius",
    "residual_witness",
    "ball_violations",
    "holder_residual_field",
    "full_space_extension",
    "branch_field",
]

LOG_CONVENTION = "log2"


def log_weight(j) -> np.ndarray | float:
    """``2^{-(log2 j)^2}`` for ``j >= 1``."""
    j = np.asarray(j, dtype=float)
    if np.any(j < 1):
        raise ValueError("log weight needs j >= 1")
    out = 2.0 ** (-np.log2(j) ** 2)
    return float(out) if out.ndim == 0 else out


def e_values(params: BesovParams, j: int, k: np.ndarray) -> np.ndarray:
    """Coefficients of E at scale ``j >= 1`` for an ``(n, d)`` array of positions."""
    J = irreducible_generation(j, k)
    dp = params.d_over_p
    return log_weight(j) * 2.0 ** ((dp - params.s) * j) * 2.0 ** (-dp * J)


def _meta(kind, params, **extra):
    return {"kind": kind, "log": LOG_CONVENTION, **extra}


def deterministic_e(params: BesovParams, jmax: int, n_generators: int = 1) -> CoefficientField:
    """The hierarchical sequence E on ``[0, 1)^d`` at scales ``1..jmax``,
    identical for every generator index."""
    if jmax < 1:
        raise ValueError("jmax must be >= 1")
    d = params.d
    scales = {}
    for j in range(1, jmax + 1):
        k = unit_cube_positions(j, d)
        v = e_values(params, j, k)
        scales[j] = (np.repeat(np.arange(1, n_generators + 1), len(k)),
                     np.tile(k, (n_generators, 1)), np.tile(v, n_generators))
    return CoefficientField.from_arrays(d, jmax, params, scales, meta=_meta("deterministic", params))


def hierarchy_check(field: CoefficientField, beta: float, rtol: float = 1e-12) -> bool:
    """True iff ``2^{beta j} |c|`` never increases from a stored parent to a
    stored child with the same generator index."""
    for j in field.scales:
        if j == 0 or (j - 1) not in field.scales:
            continue
        b = field.scale(j)
        for i in np.unique(b.i):
            sel = b.i == i
            child = np.abs(b.v[sel]) * 2.0 ** (beta * j)
            parent_k = b.k[sel] >> 1
            parent = np.abs(field.lookup(int(i), j - 1, parent_k)) * 2.0 ** (beta * (j - 1))
            present = parent != 0
            if np.any(child[present] > parent[present] * (1 + rtol)):
                return False
    return True


@dataclass(frozen=True)
class SaturatingConfig:
    besov: BesovParams
    covering: DyadicCovering
    jmax: int
    seed: int
    n_generators: int = 1

    def __post_init__(self) -> None:
        if self.jmax < 2 * self.covering.M:
            raise ValueError(f"jmax={self.jmax} cannot hold one block of depth M={self.covering.M} "
                             f"(need jmax >= 2M)")
        if self.covering.d != self.besov.d:
            raise ValueError("covering dimension differs from Besov dimension")

    def blocks(self) -> list[int]:
        """Block indices ``m`` whose scales ``mM+1..(m+1)M`` fit below jmax."""
        M = self.covering.M
        return [m for m in range(1, self.jmax // M) if (m + 1) * M <= self.jmax]


def _envelope_arrays(config: SaturatingConfig) -> dict[int, tuple[np.ndarray, np.ndarray]]:
    """Per-scale ``(k, f)`` with ``f`` the sup of ``e_nu`` over preimages."""
    params, cov = config.besov, config.covering
    d, M = params.d, cov.M
    acc: dict[int, list] = {}
    for m in config.blocks():
        j0 = m * M
        nu = unit_cube_positions(j0, d)
        e_nu = e_values(params, j0, nu)
        for _, jl, kl in cov.triplets:
            tk = (nu << jl) + np.asarray(kl, dtype=np.int64)
            acc.setdefault(j0 + jl, []).append((tk, e_nu))
    out = {}
    for j, parts in acc.items():
        k = np.concatenate([p[0] for p in parts])
        f = np.concatenate([p[1] for p in parts])
        order = np.lexsort(tuple(k[:, c] for c in range(d - 1, -1, -1)))
        k, f = k[order], f[order]
        new = np.concatenate([[True], np.any(k[1:] != k[:-1], axis=1)])
        starts = np.flatnonzero(new)
        out[j] = (k[starts], np.maximum.reduceat(f, starts))
    return out


def saturating_envelope(config: SaturatingConfig) -> CoefficientField:
    """The deterministic envelope ``f`` with ``f_{mu^l(nu)} >= e_nu``."""
    N = config.n_generators
    scales = {j: (np.repeat(np.arange(1, N + 1), len(k)), np.tile(k, (N, 1)), np.tile(f, N))
              for j, (k, f) in _envelope_arrays(config).items()}
    return CoefficientField.from_arrays(config.besov.d, config.jmax, config.besov, scales,
                                        meta=_meta("envelope", config.besov, M=config.covering.M))


def saturating_random(config: SaturatingConfig) -> CoefficientField:
    """``c = xi * f`` with ``xi`` uniform on ``[-1, 1]``, one keyed draw per
    ``(seed, i, j, k)``."""
    env = saturating_envelope(config)
    d = config.besov.d

    def draw(j, b):
        words = [b.i, np.full(len(b.i), j)] + [b.k[:, c] for c in range(d)]
        return (2.0 * keyed_uniform(config.seed, *words) - 1.0) * b.v

    out = env.map_values(draw)
    return out.with_meta(**_meta("saturating", config.besov, M=config.covering.M, seed=config.seed,
                                 blocks=config.blocks(), covering=config.covering.to_json_obj()))


# -- linear plumbing --------------------------------------------------------


def add_fields(a: CoefficientField, b: CoefficientField) -> CoefficientField:
    if a.d != b.d:
        raise ValueError(f"dimension mismatch: {a.d} vs {b.d}")
    scales = {}
    for j in set(a.scales) | set(b.scales):
        x, y = a.scale(j), b.scale(j)
        scales[j] = (np.concatenate([x.i, y.i]), np.concatenate([x.k, y.k]), np.concatenate([x.v, y.v]))
    return CoefficientField.from_arrays(a.d, max(a.jmax, b.jmax), a.besov, scales, accumulate=True)


def scale_field(a: CoefficientField, t: float) -> CoefficientField:
    return a.map_values(lambda j, b: t * b.v)


def translate_field(a: CoefficientField, shift) -> CoefficientField:
    """Move every cube by the integer vector ``shift``: ``k -> k + 2^j shift``."""
    shift = np.asarray(shift, dtype=np.int64).reshape(a.d)
    scales = {j: (b.i, b.k + (shift << j), b.v) for j in a.scales for b in [a.scale(j)]}
    return CoefficientField.from_arrays(a.d, a.jmax, a.besov, scales, meta=a.meta)


# -- lineability --------------------------------------------------------------


def lineability_basis(params: BesovParams, a: float, jmax: int, n_generators: int = 1) -> CoefficientField:
    """``E_a``: the entries of E divided by ``j^a``."""
    if a <= 0:
        raise ValueError("a must be positive")
    e = deterministic_e(params, jmax, n_generators)
    return e.map_values(lambda j, b: b.v / float(j) ** a).with_meta(**_meta("lineability", params, a=a))


def lineability_combination(params: BesovParams, a: Sequence[float], k: Sequence[float], jmax: int,
                            n_generators: int = 1) -> CoefficientField:
    """``sum_i k_i E_{a_i}``."""
    if len(a) != len(k) or not a:
        raise ValueError("a and k must be non-empty and of equal length")
    if len(set(a)) != len(a):
        raise ValueError("exponents a_i must be distinct")
    e = deterministic_e(params, jmax, n_generators)
    a_arr, k_arr = np.asarray(a, float), np.asarray(k, float)
    out = e.map_values(lambda j, b: b.v * float(np.sum(k_arr * float(j) ** -a_arr)))
    return out.with_meta(**_meta("lineability", params, a=list(map(float, a)), k=list(map(float, k))))


def _dominant(a, k):
    a_arr, k_arr = np.asarray(a, float), np.asarray(k, float)
    if np.any(k_arr == 0):
        raise ValueError("coefficients k_i must be non-zero")
    i1 = int(np.argmin(a_arr))
    return a_arr, k_arr, a_arr[i1], abs(k_arr[i1])


def sandwich_j0(a: Sequence[float], k: Sequence[float], j_scan: int = 64) -> int | None:
    """Smallest ``j0`` such that the lineability sandwich holds at every
    scale ``j0..j_scan``; ``None`` if it fails at ``j_scan`` itself.

    The ratio ``d / e`` depends on ``j`` only, so scanning scales is exact.
    """
    a_arr, k_arr, a1, k1 = _dominant(a, k)
    j0 = None
    for j in range(j_scan, 0, -1):
        r = abs(float(np.sum(k_arr * float(j) ** -a_arr)))
        lo, hi = k1 / (2 * j ** a1), 2 * k1 / j ** a1
        if lo <= r <= hi:
            j0 = j
        else:
            break
    return j0


def sandwich_violations(field: CoefficientField, params: BesovParams, a, k, j0: int) -> int:
    """Positions of ``[0, 1)^d`` at scales ``j >= j0`` breaking
    ``|k1|/(2 j^a1) e <= |d| <= 2|k1| j^-a1 e``; absent entries count as 0."""
    _, _, a1, k1 = _dominant(a, k)
    bad = 0
    for j in range(max(j0, 1), field.jmax + 1):
        pos = unit_cube_positions(j, params.d)
        e = e_values(params, j, pos)
        lo, hi = k1 / (2 * j ** a1) * e, 2 * k1 / j ** a1 * e
        for i in range(1, max(field.n_generators, 1) + 1):
            dv = np.abs(field.lookup(i, j, pos))
            bad += int(np.count_nonzero((dv < lo * (1 - 1e-12)) | (dv > hi * (1 + 1e-12))))
    return bad


# -- point divergence -------------------------------------------------------


def point_divergent(params: BesovParams, system: WaveletSystem, covering: DyadicCovering, x0,
                    jmax: int) -> CoefficientField:
    """One coefficient per block, on a covering cube of the cube holding
    ``x0``, of size ``2^{-(log j)^2} 2^{(d/p - s) j}``."""
    x0 = np.atleast_1d(np.asarray(x0, dtype=float))
    if len(x0) != params.d or system.d != params.d:
        raise ValueError("dimension mismatch between x0, system and params")
    M = covering.M
    entries = {}
    picks = []
    m = 0
    while m * M + 1 <= jmax:
        lam = containing_cube(x0, m * M)
        l, _ = covering_lower_bound_at(system, covering, x0, m * M)
        cube = covering_map(covering, l, lam)
        if cube.j > jmax:
            break
        i = covering.triplets[l - 1][0]
        entries[(i, cube.j, cube.k)] = log_weight(cube.j) * 2.0 ** (params.critical * cube.j)
        picks.append([i, cube.j, list(cube.k)])
        m += 1
    return CoefficientField.from_entries(params.d, jmax, params, entries,
                                         meta=_meta("point", params, x0=x0.tolist(), selected=picks))


# -- residual witnesses -----------------------------------------------------


@dataclass(frozen=True)
class ResidualWitness:
    center: CoefficientField
    radius: float
    n: int
    N_n: int


def residual_radius(params: BesovParams, N_n: int, M: int) -> float:
    """``r_n = 2^{-(log(N_n+M))^2} 2^{-d(N_n+M)/p} / (2 N_n)``."""
    if math.isinf(params.p) or math.isinf(params.q):
        raise ValueError("residual radius is defined for finite p and q")
    t = N_n + M
    return 1.0 / (2 * N_n) * 2.0 ** (-math.log2(t) ** 2) * 2.0 ** (-params.d * t / params.p)


def default_cutoff(n: int, M: int) -> int:
    return n * M + n


def canonical_rational_field(n: int, params: BesovParams, M: int, n_generators: int = 1) -> CoefficientField:
    """Deterministic finite field number ``n``: values ``u / 2^n`` with
    ``|u| <= 2^n`` on cubes of ``[0, 1)^d`` at scales ``< min(n + 1, N_n)``."""
    N_n = default_cutoff(n, M)
    top = min(n + 1, N_n)
    scales = {}
    for j in range(top):
        k = unit_cube_positions(j, params.d)
        for i in range(1, n_generators + 1):
            words = [np.full(len(k), i), np.full(len(k), j)] + [k[:, c] for c in range(params.d)]
            u = np.floor(keyed_uniform(n, *words) * (2 ** (n + 1) + 1)) - 2 ** n
            prev = scales.get(j)
            block = (np.full(len(k), i), k, u / 2.0 ** n)
            scales[j] = block if prev is None else tuple(np.concatenate([p, q]) for p, q in zip(prev, block))
    return CoefficientField.from_arrays(params.d, max(top - 1, 0), params, scales,
                                        meta=_meta("rational", params, n=n))


def residual_witness(params: BesovParams, M: int, F: CoefficientField, n: int, jmax: int,
                     N_n: int | None = None, n_generators: int = 1) -> ResidualWitness:
    """Center ``G_n = F_n + E / N_n`` and radius ``r_n``."""
    N_n = default_cutoff(n, M) if N_n is None else N_n
    if F.scales and max(F.scales) >= N_n:
        raise ValueError(f"F_n has entries at scale {max(F.scales)} >= N_n={N_n}")
    E = deterministic_e(params, jmax, n_generators)
    center = add_fields(F, scale_field(E, 1.0 / N_n)).with_besov(params)
    center = center.with_meta(**_meta("residual", params, n=n, N_n=N_n, M=M))
    return ResidualWitness(center, residual_radius(params, N_n, M), n, N_n)


def ball_violations(witness: ResidualWitness, D: CoefficientField, params: BesovParams,
                    scales: Sequence[int]) -> int:
    """Count entries with ``|d - e/N_n| >= 2^{(d/p - s) j} r_n`` at the given scales."""
    bad = 0
    for j in scales:
        if j < 1:
            continue
        k = unit_cube_positions(j, params.d)
        b = D.scale(j)
        # stored cubes outside [0,1)^d are the only ones not already in k
        out = b.k[~np.all((b.k >= 0) & (b.k < (1 << j)), axis=1)] if len(b) else b.k
        allk = np.concatenate([k, np.unique(out, axis=0)]) if len(out) else k
        for i in range(1, max(D.n_generators, witness.center.n_generators, 1) + 1):
            dv = D.lookup(i, j, allk)
            inside = np.all((allk >= 0) & (allk < (1 << j)), axis=1)
            ev = np.where(inside, e_values(params, j, np.where(allk < 0, 0, allk)), 0.0)
            diff = np.abs(dv - ev / witness.N_n)
            bad += int(np.count_nonzero(diff >= 2.0 ** (params.critical * j) * witness.radius))
    return bad


def holder_residual_field(s: float, n: int, jmax: int, source: CoefficientField,
                          n_generators: int | None = None) -> CoefficientField:
    """Snap ``source`` onto the lattice of non-zero multiples of ``2^{-sj-n}``."""
    d = source.d
    N = n_generators or max(source.n_generators, 1)
    params = BesovParams(s, math.inf, math.inf, d)
    scales = {}
    for j in range(jmax + 1):
        k = unit_cube_positions(j, d)
        b = source.scale(j)
        if len(b):
            out = b.k[~np.all((b.k >= 0) & (b.k < (1 << j)), axis=1)]
            if len(out):
                k = np.concatenate([k, np.unique(out, axis=0)])
        step = 2.0 ** (-s * j - n)
        ii, kk, vv = [], [], []
        for i in range(1, N + 1):
            src = source.lookup(i, j, k)
            fl = np.floor(src / step)
            ii.append(np.full(len(k), i))
            kk.append(k)
            vv.append(np.where(fl != 0, fl * step, step))
        scales[j] = (np.concatenate(ii), np.concatenate(kk), np.concatenate(vv))
    return CoefficientField.from_arrays(d, jmax, params, scales, meta=_meta("holder", params, n=n))


def full_space_extension(fields: Mapping[tuple, CoefficientField]) -> CoefficientField:
    """``sum_k exp(-|k|_1) C^k`` with ``C^k`` moved to the unit cube at ``k``."""
    if not fields:
        raise ValueError("need at least one translate")
    out = None
    for shift, f in sorted(fields.items()):
        if not f.supported_in_unit_cube():
            raise ValueError("translates must start supported in [0,1)^d")
        w = math.exp(-sum(abs(int(c)) for c in shift))
        term = scale_field(translate_field(f, shift), w)
        out = term if out is None else add_fields(out, term)
    return out.with_meta(kind="extension", log=LOG_CONVENTION, window=[list(s) for s in sorted(fields)])


def branch_field(params: BesovParams, jmax: int, rate: float, x=0.0, i: int = 1,
                 j_start: int = 0) -> CoefficientField:
    """One coefficient ``2^{rate j}`` per scale, on the cube holding ``x``."""
    x = np.atleast_1d(np.asarray(x, dtype=float))
    if len(x) != params.d:
        raise ValueError("x has the wrong dimension")
    entries = {(i, j, containing_cube(x, j).k): 2.0 ** (rate * j) for j in range(j_start, jmax + 1)}
    return CoefficientField.from_entries(params.d, jmax, params, entries,
                                         meta=_meta("branch", params, x=x.tolist(), rate=rate))
