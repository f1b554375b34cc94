"""Dyadic cubes, irreducible representations and sparse coefficient fields.

A cube ``(j, k)`` is the half-open box ``prod [k_c 2^-j, (k_c + 1) 2^-j)``.
Coefficients are addressed by ``(i, j, k)`` with ``i`` a 1-based generator
index.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from typing import Iterator, Mapping

import numpy as np

__all__ = [
    "DyadicCube",
    "CoeffIndex",
    "BesovParams",
    "ScaleBlock",
    "CoefficientField",
    "irreducible",
    "irreducible_generation",
    "containing_cube",
    "unit_cube_positions",
]


def _as_k(k) -> tuple[int, ...]:
    if isinstance(k, (int, np.integer)):
        return (int(k),)
    return tuple(int(c) for c in k)


@dataclass(frozen=True, order=True)
class DyadicCube:
    j: int
    k: tuple[int, ...]

    def __init__(self, j: int, k) -> None:
        if j < 0:
            raise ValueError(f"generation must be nonnegative, got {j}")
        object.__setattr__(self, "j", int(j))
        object.__setattr__(self, "k", _as_k(k))

    @property
    def d(self) -> int:
        return len(self.k)

    @property
    def side(self) -> float:
        return 2.0 ** -self.j

    def contains(self, x) -> bool:
        x = np.atleast_1d(np.asarray(x, dtype=float))
        scaled = x * 2.0 ** self.j
        return bool(np.all((scaled >= self.k) & (scaled < np.asarray(self.k) + 1)))

    def parent(self) -> "DyadicCube":
        if self.j == 0:
            raise ValueError("generation-0 cube has no parent")
        return DyadicCube(self.j - 1, tuple(c >> 1 for c in self.k))

    def ancestor_at(self, j0: int) -> "DyadicCube":
        if not 0 <= j0 <= self.j:
            raise ValueError(f"ancestor generation {j0} outside [0, {self.j}]")
        shift = self.j - j0
        return DyadicCube(j0, tuple(c >> shift for c in self.k))

    def children(self) -> list["DyadicCube"]:
        out = []
        for m in np.ndindex(*(2,) * self.d):
            out.append(DyadicCube(self.j + 1, tuple(2 * c + b for c, b in zip(self.k, m))))
        return out

    def inside_unit_cube(self) -> bool:
        n = 1 << self.j
        return all(0 <= c < n for c in self.k)


@dataclass(frozen=True, order=True)
class CoeffIndex:
    i: int
    cube: DyadicCube

    def __post_init__(self) -> None:
        if self.i < 1:
            raise ValueError(f"generator index is 1-based, got {self.i}")


def irreducible(j: int, k) -> tuple[int, tuple[int, ...]]:
    """Reduce ``k / 2^j`` to ``k' / 2^J`` with ``J`` minimal.

    The zero vector reduces to ``(0, 0)``.
    """
    k = _as_k(k)
    if j < 0:
        raise ValueError("generation must be nonnegative")
    acc = 0
    for c in k:
        acc |= c
    if acc == 0:
        return 0, tuple(0 for _ in k)
    tz = min((acc & -acc).bit_length() - 1, j)
    return j - tz, tuple(c >> tz for c in k)


def irreducible_generation(j: int, k: np.ndarray) -> np.ndarray:
    """Vectorised ``J`` of :func:`irreducible` for an ``(n, d)`` integer array."""
    k = np.asarray(k, dtype=np.int64)
    if k.ndim == 1:
        k = k[:, None]
    acc = np.bitwise_or.reduce(k, axis=1) if k.shape[1] > 1 else k[:, 0].copy()
    low = acc & -acc
    tz = np.zeros(acc.shape, dtype=np.int64)
    nz = low != 0
    tz[nz] = np.log2(low[nz].astype(np.float64)).round().astype(np.int64)
    J = j - np.minimum(tz, j)
    J[~nz] = 0
    return J


def containing_cube(x, j: int) -> DyadicCube:
    x = np.atleast_1d(np.asarray(x, dtype=float))
    return DyadicCube(j, tuple(int(c) for c in np.floor(x * 2.0 ** j)))


def unit_cube_positions(j: int, d: int) -> np.ndarray:
    """All ``k`` in ``{0..2^j-1}^d`` as an ``(2^{jd}, d)`` array, lexicographic."""
    n = 1 << j
    grids = np.meshgrid(*([np.arange(n, dtype=np.int64)] * d), indexing="ij")
    return np.stack([g.ravel() for g in grids], axis=1)


def _parse_exp(v) -> float:
    if isinstance(v, str):
        if v.lower() in ("inf", "+inf", "infinity"):
            return math.inf
        raise ValueError(f"bad exponent {v!r}")
    return float(v)


def _dump_exp(v: float):
    return "inf" if math.isinf(v) else float(v)


@dataclass(frozen=True)
class BesovParams:
    s: float
    p: float
    q: float
    d: int = 1

    def __post_init__(self) -> None:
        if not (self.p > 0 and self.q > 0):
            raise ValueError("p and q must be positive (or inf)")
        if self.d < 1:
            raise ValueError("dimension must be >= 1")

    @property
    def d_over_p(self) -> float:
        return 0.0 if math.isinf(self.p) else self.d / self.p

    @property
    def critical(self) -> float:
        """``d/p - s``: the largest admissible divergence exponent."""
        return self.d_over_p - self.s


@dataclass(frozen=True)
class ScaleBlock:
    """Entries of one scale, sorted lexicographically by ``(i, k)``."""

    i: np.ndarray
    k: np.ndarray
    v: np.ndarray

    def __len__(self) -> int:
        return len(self.v)


def _empty_block(d: int) -> ScaleBlock:
    return ScaleBlock(np.zeros(0, np.int64), np.zeros((0, d), np.int64), np.zeros(0, float))


class CoefficientField:
    """Immutable finite family ``{c^(i)_{j,k}}`` with ``0 <= j <= jmax``.

    Absent entries are zero.  Build with :meth:`from_arrays` or
    :meth:`from_entries`; duplicate indices are rejected unless
    ``accumulate=True``, in which case they are summed.
    """

    def __init__(self, d: int, jmax: int, besov: BesovParams, blocks: Mapping[int, ScaleBlock],
                 meta: Mapping | None = None) -> None:
        self.d = int(d)
        self.jmax = int(jmax)
        self.besov = besov
        self._blocks = dict(blocks)
        self.meta = dict(meta or {})
        self._lookup_cache: dict = {}

    @classmethod
    def from_arrays(cls, d, jmax, besov, scales: Mapping[int, tuple], *, accumulate=False,
                    meta=None) -> "CoefficientField":
        blocks = {}
        for j, (i, k, v) in scales.items():
            j = int(j)
            if not 0 <= j <= jmax:
                raise ValueError(f"scale {j} outside [0, {jmax}]")
            i = np.asarray(i, dtype=np.int64).ravel()
            k = np.asarray(k, dtype=np.int64).reshape(len(i), d)
            v = np.asarray(v, dtype=float).ravel()
            if len(v) == 0:
                continue
            if np.any(i < 1):
                raise ValueError("generator indices are 1-based")
            order = np.lexsort(tuple(k[:, c] for c in range(d - 1, -1, -1)) + (i,))
            i, k, v = i[order], k[order], v[order]
            same = np.all(k[1:] == k[:-1], axis=1) & (i[1:] == i[:-1])
            if same.any():
                if not accumulate:
                    raise ValueError(f"duplicate coefficient index at scale {j}")
                starts = np.flatnonzero(np.concatenate([[True], ~same]))
                v = np.add.reduceat(v, starts)
                i, k = i[starts], k[starts]
            keep = v != 0
            if keep.any():
                blocks[j] = ScaleBlock(i[keep], k[keep], v[keep])
        return cls(d, jmax, besov, blocks, meta)

    @classmethod
    def from_entries(cls, d, jmax, besov, entries: Mapping, **kw) -> "CoefficientField":
        """``entries`` maps ``(i, j, k)`` (or :class:`CoeffIndex`) to values."""
        per: dict[int, list] = {}
        for key, val in entries.items():
            if isinstance(key, CoeffIndex):
                i, j, k = key.i, key.cube.j, key.cube.k
            else:
                i, j, k = key
            per.setdefault(int(j), []).append((int(i), _as_k(k), float(val)))
        scales = {}
        for j, rows in per.items():
            scales[j] = (
                [r[0] for r in rows],
                np.array([r[1] for r in rows], dtype=np.int64).reshape(len(rows), d),
                [r[2] for r in rows],
            )
        return cls.from_arrays(d, jmax, besov, scales, **kw)

    @classmethod
    def zeros(cls, d, jmax, besov) -> "CoefficientField":
        return cls(d, jmax, besov, {})

    # -- access ---------------------------------------------------------

    def scale(self, j: int) -> ScaleBlock:
        return self._blocks.get(j, _empty_block(self.d))

    @property
    def scales(self) -> list[int]:
        return sorted(self._blocks)

    @property
    def n_generators(self) -> int:
        return max((int(b.i.max()) for b in self._blocks.values()), default=0)

    def __len__(self) -> int:
        return sum(len(b) for b in self._blocks.values())

    def items(self) -> Iterator[tuple[int, int, tuple[int, ...], float]]:
        """Yield ``(i, j, k, value)`` in ``(j, i, k)`` lexicographic order."""
        for j in self.scales:
            b = self._blocks[j]
            for i, k, v in zip(b.i, b.k, b.v):
                yield int(i), j, tuple(int(c) for c in k), float(v)

    def get(self, i: int, j: int, k) -> float:
        k = np.asarray(_as_k(k), dtype=np.int64)[None, :]
        return float(self.lookup(i, j, k)[0])

    def lookup(self, i: int, j: int, k: np.ndarray) -> np.ndarray:
        """Vectorised value lookup for an ``(..., d)`` array of positions."""
        k = np.asarray(k, dtype=np.int64)
        shape = k.shape[:-1]
        k = k.reshape(-1, self.d)
        out = np.zeros(len(k))
        cached = self._lookup_cache.get((i, j))
        if cached is None:
            b = self.scale(j)
            sel = b.i == i
            ks, vs = b.k[sel], b.v[sel]
            if len(vs) == 0:
                cached = (None, None, None, None)
            else:
                lo = ks.min(axis=0)
                span = ks.max(axis=0) - lo + 1
                keys = np.ravel_multi_index(tuple((ks - lo).T), tuple(span))
                order = np.argsort(keys)
                cached = (lo, span, keys[order], vs[order])
            self._lookup_cache[(i, j)] = cached
        lo, span, keys, vals = cached
        if keys is None:
            return out.reshape(shape)
        rel = k - lo
        ok = np.all((rel >= 0) & (rel < span), axis=1)
        if ok.any():
            q = np.ravel_multi_index(tuple(rel[ok].T), tuple(span))
            pos = np.searchsorted(keys, q)
            pos = np.minimum(pos, len(keys) - 1)
            hit = keys[pos] == q
            sub = np.zeros(ok.sum())
            sub[hit] = vals[pos[hit]]
            out[ok] = sub
        return out.reshape(shape)

    def max_abs(self, j: int) -> float:
        b = self.scale(j)
        return float(np.abs(b.v).max()) if len(b) else 0.0

    def supported_in_unit_cube(self) -> bool:
        for j, b in self._blocks.items():
            if len(b) and (b.k.min() < 0 or b.k.max() >= (1 << j)):
                return False
        return True

    def with_meta(self, **meta) -> "CoefficientField":
        return CoefficientField(self.d, self.jmax, self.besov, self._blocks, {**self.meta, **meta})

    def with_besov(self, besov: BesovParams) -> "CoefficientField":
        return CoefficientField(self.d, self.jmax, besov, self._blocks, self.meta)

    def map_values(self, fn) -> "CoefficientField":
        scales = {j: (b.i, b.k, fn(j, b)) for j, b in self._blocks.items()}
        return CoefficientField.from_arrays(self.d, self.jmax, self.besov, scales, meta=self.meta)

    def equals(self, other: "CoefficientField") -> bool:
        if (self.d, self.scales) != (other.d, other.scales):
            return False
        for j in self.scales:
            a, b = self.scale(j), other.scale(j)
            if not (np.array_equal(a.i, b.i) and np.array_equal(a.k, b.k) and np.array_equal(a.v, b.v)):
                return False
        return True

    # -- serialization ----------------------------------------------------

    def to_json_obj(self) -> dict:
        entries = [{"i": i, "j": j, "k": list(k), "v": v} for i, j, k, v in self.items()]
        obj = {
            "d": self.d,
            "Jmax": self.jmax,
            "s": float(self.besov.s),
            "p": _dump_exp(self.besov.p),
            "q": _dump_exp(self.besov.q),
            "entries": entries,
        }
        if self.meta:
            obj["meta"] = self.meta
        return obj

    def dumps(self) -> str:
        # repr(float) is the shortest round-tripping form
        return json.dumps(self.to_json_obj(), sort_keys=True, separators=(",", ":"))

    @classmethod
    def from_json_obj(cls, obj: dict) -> "CoefficientField":
        d = int(obj["d"])
        besov = BesovParams(float(obj["s"]), _parse_exp(obj["p"]), _parse_exp(obj["q"]), d)
        seen = set()
        entries = {}
        for e in obj["entries"]:
            k = _as_k(e["k"])
            if len(k) != d:
                raise ValueError(f"entry {e} has wrong dimension")
            key = (int(e["i"]), int(e["j"]), k)
            if key in seen:
                raise ValueError(f"duplicate entry {key}")
            seen.add(key)
            entries[key] = float(e["v"])
        return cls.from_entries(d, int(obj["Jmax"]), besov, entries, meta=obj.get("meta"))

    @classmethod
    def loads(cls, text: str) -> "CoefficientField":
        return cls.from_json_obj(json.loads(text))

    def __repr__(self) -> str:
        return f"CoefficientField(d={self.d}, jmax={self.jmax}, entries={len(self)}, besov={self.besov})"
