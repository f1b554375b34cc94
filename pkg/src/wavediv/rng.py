"""Counter-based uniform draws keyed by ``(seed, i, j, k)``.

Each coefficient gets its own value from a splitmix64-style mixing chain, so
draws do not depend on generation order and can be computed in any
partition of the index set.
"""

import numpy as np

_GOLDEN = np.uint64(0x9E3779B97F4A7C15)
_M1 = np.uint64(0xBF58476D1CE4E5B9)
_M2 = np.uint64(0x94D049BB133111EB)


def _mix(z):
    z = z.copy()
    z ^= z >> np.uint64(30)
    z *= _M1
    z ^= z >> np.uint64(27)
    z *= _M2
    z ^= z >> np.uint64(31)
    return z


def keyed_bits(seed: int, *words) -> np.ndarray:
    """64-bit hash of ``seed`` and the integer arrays ``words`` (broadcast)."""
    words = np.broadcast_arrays(*[np.asarray(w, dtype=np.int64) for w in words])
    with np.errstate(over="ignore"):
        h = np.full(words[0].shape, np.uint64(seed & 0xFFFFFFFFFFFFFFFF), dtype=np.uint64)
        h = _mix(h + _GOLDEN)
        for w in words:
            h = _mix(h ^ (w.astype(np.uint64) + _GOLDEN))
    return h


def keyed_uniform(seed: int, *words) -> np.ndarray:
    """Uniform draws in ``[0, 1)`` with 53-bit resolution."""
    return (keyed_bits(seed, *words) >> np.uint64(11)).astype(np.float64) * 2.0 ** -53


def derive_seed(root: int, *path: int) -> int:
    """Child seed for e.g. a trial index; stable across runs."""
    return int(keyed_bits(root, *[np.int64(p) for p in path]))
