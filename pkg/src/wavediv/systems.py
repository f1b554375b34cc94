"""Pointwise-evaluable wavelet systems and the dyadic covering search."""

from __future__ import annotations

import itertools
import json
import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .dyadic import CoeffIndex, DyadicCube, containing_cube

__all__ = [
    "WaveletSystem",
    "DyadicCovering",
    "CoveringNotFound",
    "CoveringViolation",
    "haar_system",
    "schauder_system",
    "indicator_system",
    "daubechies_system",
    "mexican_hat_system",
    "system_by_name",
    "eval_wavelet",
    "find_dyadic_covering",
    "best_covering_constant",
    "covering_map",
    "covering_lower_bound_at",
    "verify_covering",
]


@dataclass(frozen=True)
class WaveletSystem:
    """``N`` generators ``psi^(i)`` on ``R^d``.

    ``func(i, y)`` evaluates generator ``i`` (1-based) at an ``(..., d)``
    array.  ``support`` is the per-coordinate interval outside which every
    generator vanishes (``None`` for fast-decay systems, which must then
    carry ``decay = (C, n)`` with ``|psi(y)| <= C / (1 + |y|)^n``).
    """

    name: str
    d: int
    n_generators: int
    func: Callable[[int, np.ndarray], np.ndarray] = field(repr=False)
    support: tuple[float, float] | None
    sup_bound: float
    decay: tuple[float, float] | None = None
    lipschitz: tuple[float, ...] | None = None
    approximate: bool = False

    @property
    def support_radius(self) -> float | None:
        if self.support is None:
            return None
        return max(abs(self.support[0]), abs(self.support[1]))

    @property
    def compact(self) -> bool:
        return self.support is not None

    def __call__(self, i: int, y) -> np.ndarray:
        if not 1 <= i <= self.n_generators:
            raise IndexError(f"generator {i} outside 1..{self.n_generators}")
        y = np.asarray(y, dtype=float)
        if y.shape[-1:] != (self.d,):
            y = y[..., None] if self.d == 1 else y
        out = np.asarray(self.func(i, y), dtype=float)
        if self.support is not None:
            lo, hi = self.support
            out = np.where(np.all((y >= lo) & (y <= hi), axis=-1), out, 0.0)
        return out

    def window_offsets(self) -> np.ndarray:
        """Offsets ``o`` such that ``psi(2^j x - k) != 0`` implies
        ``k = floor(2^j x) - o`` for some listed ``o`` (compact systems)."""
        lo, hi = self.support
        rng = np.arange(math.floor(lo) - 1, math.ceil(hi) + 1, dtype=np.int64)
        return np.array(list(itertools.product(rng, repeat=self.d)), dtype=np.int64)


def _haar_1d(y):
    return np.where((y >= 0) & (y < 0.5), 1.0, np.where((y >= 0.5) & (y < 1), -1.0, 0.0))


def _box_1d(y):
    return ((y >= 0) & (y < 1)).astype(float)


def haar_system(d: int = 1) -> WaveletSystem:
    """Haar system; for ``d > 1`` the ``2^d - 1`` tensor products that use at
    least one Haar factor, ordered by the binary pattern of the factors."""
    if d < 1:
        raise ValueError("d must be >= 1")
    patterns = [e for e in itertools.product((0, 1), repeat=d) if any(e)]

    def func(i, y):
        e = patterns[i - 1]
        out = np.ones(y.shape[:-1])
        for c, use_haar in enumerate(e):
            out = out * (_haar_1d(y[..., c]) if use_haar else _box_1d(y[..., c]))
        return out

    return WaveletSystem("haar", d, len(patterns), func, (0.0, 1.0), 1.0)


def schauder_system() -> WaveletSystem:
    """Tent ``min(x, 1 - x)`` on ``[0, 1]``; vanishes at every integer."""

    def func(i, y):
        t = y[..., 0]
        return np.where((t >= 0) & (t <= 1), np.minimum(t, 1 - t), 0.0)

    return WaveletSystem("schauder", 1, 1, func, (0.0, 1.0), 0.5, lipschitz=(1.0,))


def indicator_system(n: int = 1, d: int = 1) -> WaveletSystem:
    """``n`` copies of the indicator of ``[0, 1)^d``."""

    def func(i, y):
        return np.all((y >= 0) & (y < 1), axis=-1).astype(float)

    return WaveletSystem("indicator", d, n, func, (0.0, 1.0), 1.0)


_DB2 = np.array([1 + math.sqrt(3), 3 + math.sqrt(3), 3 - math.sqrt(3), 1 - math.sqrt(3)]) / (4 * math.sqrt(2))


def _cascade(h: np.ndarray, levels: int) -> tuple[np.ndarray, np.ndarray]:
    """Scaling function and mother wavelet sampled on the ``2^-levels`` grid
    of ``[0, len(h) - 1]`` by dyadic refinement of the two-scale relation."""
    L = len(h) - 1
    # values at the integers: eigenvector of sqrt2 * h[2a - b] for eigenvalue 1
    T = np.zeros((L + 1, L + 1))
    for a in range(L + 1):
        for b in range(L + 1):
            if 0 <= 2 * a - b <= L:
                T[a, b] = math.sqrt(2) * h[2 * a - b]
    w, V = np.linalg.eig(T)
    phi = np.real(V[:, np.argmin(abs(w - 1))])
    phi = phi / phi.sum()
    for r in range(1, levels + 1):
        step = 2 ** (r - 1)
        m = np.arange(L * 2 ** r + 1)
        new = np.zeros(len(m))
        for t, ht in enumerate(h):
            idx = m - t * step
            ok = (idx >= 0) & (idx < len(phi))
            new[ok] += math.sqrt(2) * ht * phi[idx[ok]]
        phi = new
    g = np.array([(-1) ** n * h[L - n] for n in range(L + 1)])
    m = np.arange(len(phi))
    psi = np.zeros(len(phi))
    for t, gt in enumerate(g):
        idx = 2 * m - t * 2 ** levels
        ok = (idx >= 0) & (idx < len(phi))
        psi[ok] += math.sqrt(2) * gt * phi[idx[ok]]
    return phi, psi


def daubechies_system(levels: int = 12) -> WaveletSystem:
    """Daubechies wavelet with two vanishing moments, support ``[0, 3]``.

    Values come from cascade refinement at resolution ``2^-levels`` with
    linear interpolation in between, so the system is flagged approximate.
    """
    _, psi = _cascade(_DB2, levels)
    grid = np.linspace(0.0, 3.0, len(psi))

    def func(i, y):
        return np.interp(y[..., 0], grid, psi, left=0.0, right=0.0)

    # only Hoelder continuous, so no Lipschitz margin: grid-certified coverings
    return WaveletSystem("db2", 1, 1, func, (0.0, 3.0), float(np.abs(psi).max()), approximate=True)


def mexican_hat_system(decay_order: int = 8) -> WaveletSystem:
    """``(1 - y^2) exp(-y^2 / 2)``: smooth, not compactly supported."""
    ys = np.linspace(0, 60, 600001)
    vals = np.abs((1 - ys ** 2) * np.exp(-ys ** 2 / 2))
    c = float(np.max(vals * (1 + ys) ** decay_order)) * 1.01
    deriv = np.abs(ys * (ys ** 2 - 3) * np.exp(-ys ** 2 / 2))

    def func(i, y):
        t = y[..., 0]
        return (1 - t ** 2) * np.exp(-t ** 2 / 2)

    return WaveletSystem("mexican_hat", 1, 1, func, None, 1.0, decay=(c, float(decay_order)),
                         lipschitz=(float(deriv.max()) * 1.01,))


def system_by_name(name: str, d: int = 1, n: int = 1) -> WaveletSystem:
    name = name.lower()
    if name == "haar":
        return haar_system(d)
    if name == "schauder":
        if d != 1:
            raise ValueError("schauder system is one-dimensional")
        return schauder_system()
    if name == "indicator":
        return indicator_system(n, d)
    if name in ("db2", "daubechies"):
        if d != 1:
            raise ValueError("db2 system is one-dimensional")
        return daubechies_system()
    if name in ("mexican_hat", "mexh"):
        if d != 1:
            raise ValueError("mexican hat system is one-dimensional")
        return mexican_hat_system()
    raise ValueError(f"unknown wavelet system {name!r}")


def eval_wavelet(system: WaveletSystem, idx: CoeffIndex, x) -> float:
    """``psi^(i)(2^j x - k)``."""
    if idx.cube.d != system.d:
        raise ValueError("index dimension does not match system")
    x = np.atleast_1d(np.asarray(x, dtype=float))
    y = x * 2.0 ** idx.cube.j - np.asarray(idx.cube.k, dtype=float)
    return float(system(idx.i, y))


# -- dyadic covering -------------------------------------------------------


class CoveringViolation(RuntimeError):
    """No covering triplet reaches ``c0`` at a queried point."""


@dataclass(frozen=True)
class CoveringNotFound:
    """Negative result of the covering search, with an uncovered grid point."""

    witness: tuple[float, ...]
    best_value: float
    max_depth: int
    c0: float

    def to_json_obj(self) -> dict:
        return {"found": False, "witness": list(self.witness), "best_value": self.best_value,
                "max_depth": self.max_depth, "c0": self.c0}


@dataclass(frozen=True)
class DyadicCovering:
    triplets: tuple[tuple[int, int, tuple[int, ...]], ...]
    c0: float
    certified: str = "grid-only"

    def __post_init__(self) -> None:
        if not self.triplets:
            raise ValueError("covering needs at least one triplet")
        if self.c0 <= 0:
            raise ValueError("c0 must be positive")
        for _, j, _ in self.triplets:
            if j <= 0:
                raise ValueError("covering scales must be positive")

    @property
    def L(self) -> int:
        return len(self.triplets)

    @property
    def M(self) -> int:
        return max(j for _, j, _ in self.triplets)

    @property
    def d(self) -> int:
        return len(self.triplets[0][2])

    def to_json_obj(self) -> dict:
        return {
            "c0": float(self.c0),
            "M": self.M,
            "triplets": [{"i": i, "j": j, "k": list(k)} for i, j, k in self.triplets],
            "certified": self.certified,
        }

    def dumps(self) -> str:
        return json.dumps(self.to_json_obj(), sort_keys=True)

    @classmethod
    def from_json_obj(cls, obj: dict) -> "DyadicCovering":
        trip = tuple((int(t["i"]), int(t["j"]), tuple(int(c) for c in t["k"])) for t in obj["triplets"])
        cov = cls(trip, float(obj["c0"]), obj.get("certified", "grid-only"))
        if "M" in obj and int(obj["M"]) != cov.M:
            raise ValueError("stored depth M disagrees with triplets")
        return cov


def _grid(d: int, n_per_axis: int) -> np.ndarray:
    axis = np.arange(n_per_axis) / n_per_axis
    return np.array(list(itertools.product(axis, repeat=d))) if d > 1 else axis[:, None]


def _candidate_triplets(system: WaveletSystem, max_depth: int, c0: float):
    if system.compact:
        reach = system.support_radius
    else:
        C, n = system.decay
        # beyond this distance |psi| < c0, so such translates cannot cover
        reach = (C / c0) ** (1.0 / n)
    out = []
    for i in range(1, system.n_generators + 1):
        for j in range(1, max_depth + 1):
            r = math.ceil(reach) + 1
            ks = range(-r, (1 << j) + r)
            for k in itertools.product(ks, repeat=system.d):
                out.append((i, j, tuple(k)))
    return out


def _values(system, trip, pts):
    i, j, k = trip
    return np.abs(system(i, pts * 2.0 ** j - np.asarray(k, dtype=float)))


def find_dyadic_covering(system: WaveletSystem, max_depth: int, c0: float,
                         grid_per_cube: int = 8):
    """Greedy set cover of a grid of ``[0, 1)^d`` by candidate triplets.

    The grid has spacing ``h = 2^-max_depth / grid_per_cube`` and starts at
    the origin.  With a Lipschitz constant a triplet only counts at a grid
    point if it exceeds ``c0 + Lip 2^j h sqrt(d)``, which carries the bound
    to the whole grid cell.  Returns :class:`DyadicCovering` or
    :class:`CoveringNotFound`.
    """
    if c0 <= 0:
        raise ValueError("c0 must be positive")
    if max_depth < 1:
        raise ValueError("max_depth must be >= 1")
    if grid_per_cube < 2:
        raise ValueError("grid_per_cube must be >= 2")
    n_axis = (1 << max_depth) * grid_per_cube
    h = 1.0 / n_axis
    pts = _grid(system.d, n_axis)
    cands = _candidate_triplets(system, max_depth, c0)
    lip = system.lipschitz
    cover = np.zeros((len(cands), len(pts)), dtype=bool)
    best = np.zeros(len(pts))
    for c, trip in enumerate(cands):
        vals = _values(system, trip, pts)
        margin = 0.0 if lip is None else lip[trip[0] - 1] * 2.0 ** trip[1] * h * math.sqrt(system.d)
        cover[c] = vals >= c0 + margin
        np.maximum(best, vals - margin, out=best)
    covered_any = cover.any(axis=0)
    if not covered_any.all():
        w = int(np.flatnonzero(~covered_any)[0])
        return CoveringNotFound(tuple(float(t) for t in pts[w]), float(best[w]), max_depth, c0)
    remaining = np.ones(len(pts), dtype=bool)
    chosen = []
    while remaining.any():
        gain = (cover & remaining).sum(axis=1)
        c = int(np.argmax(gain))  # first maximum: lexicographic tie-break
        chosen.append(cands[c])
        remaining &= ~cover[c]
    return DyadicCovering(tuple(chosen), float(c0), "lipschitz" if lip is not None else "grid-only")


def best_covering_constant(system: WaveletSystem, max_depth: int, grid_per_cube: int = 8) -> float:
    """Largest ``c0`` for which the grid search at this depth can succeed."""
    n_axis = (1 << max_depth) * grid_per_cube
    h = 1.0 / n_axis
    pts = _grid(system.d, n_axis)
    best = np.zeros(len(pts))
    lip = system.lipschitz
    for trip in _candidate_triplets(system, max_depth, 1e-12 if system.compact else 1e-3):
        margin = 0.0 if lip is None else lip[trip[0] - 1] * 2.0 ** trip[1] * h * math.sqrt(system.d)
        np.maximum(best, _values(system, trip, pts) - margin, out=best)
    return float(max(best.min(), 0.0))


def verify_covering(system: WaveletSystem, covering: DyadicCovering, n_per_axis: int) -> tuple[bool, tuple | None]:
    """Check the covering inequality on a regular grid; returns the first failure."""
    pts = _grid(system.d, n_per_axis)
    best = np.zeros(len(pts))
    for trip in covering.triplets:
        np.maximum(best, _values(system, trip, pts), out=best)
    bad = np.flatnonzero(best < covering.c0)
    if len(bad):
        return False, tuple(float(t) for t in pts[bad[0]])
    return True, None


def covering_map(covering: DyadicCovering, l: int, cube: DyadicCube) -> DyadicCube:
    """Image of ``cube`` under the affine map sending ``[0,1)^d`` onto the
    ``l``-th covering cube (``l`` is 1-based)."""
    if not 1 <= l <= covering.L:
        raise IndexError(f"l={l} outside 1..{covering.L}")
    _, jl, kl = covering.triplets[l - 1]
    return DyadicCube(cube.j + jl, tuple((c << jl) + b for c, b in zip(cube.k, kl)))


def covering_lower_bound_at(system: WaveletSystem, covering: DyadicCovering, x, j: int = 0):
    """Pick ``l`` maximising ``|psi^(i_l)_{mu^l(lambda)}(x)|`` for the
    generation-``j`` cube ``lambda`` containing ``x``.

    Returns ``(l, value)``; raises :class:`CoveringViolation` when the best
    value is below ``c0``.
    """
    x = np.atleast_1d(np.asarray(x, dtype=float))
    lam = containing_cube(x, j)
    best_l, best_v = 0, -1.0
    for l in range(1, covering.L + 1):
        cube = covering_map(covering, l, lam)
        i = covering.triplets[l - 1][0]
        v = abs(eval_wavelet(system, CoeffIndex(i, cube), x))
        if v > best_v:
            best_l, best_v = l, v
    if best_v < covering.c0:
        raise CoveringViolation(f"no covering triplet reaches c0={covering.c0} at x={x.tolist()} (best {best_v})")
    return best_l, best_v
