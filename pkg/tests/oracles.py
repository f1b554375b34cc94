"""Slow reference implementations used as independent oracles."""

import math
from decimal import Decimal, localcontext
from fractions import Fraction

import numpy as np


def reduce_position(j, k):
    k = list(k)
    if all(c == 0 for c in k):
        return 0
    while j > 0 and all(c % 2 == 0 for c in k):
        k = [c // 2 for c in k]
        j -= 1
    return j


def e_value(s, p, d, j, k):
    dp = 0.0 if math.isinf(p) else d / p
    J = reduce_position(j, k)
    return 2.0 ** (-math.log2(j) ** 2) * 2.0 ** ((dp - s) * j) * 2.0 ** (-dp * J)


def eps_direct(entries, s, p, d, j):
    """Per-scale norm straight from a list of (i, j, k, v), summed in
    50-digit decimal arithmetic so tiny values do not underflow."""
    vals = [abs(v) for (i, jj, k, v) in entries if jj == j]
    if not vals:
        return 0.0
    if math.isinf(p):
        return max(vals) * 2.0 ** (s * j)
    with localcontext() as ctx:
        ctx.prec = 50
        w = Decimal(2) ** (Decimal(s) * j - Decimal(d) / Decimal(p) * j)
        P = Decimal(p)
        total = sum((Decimal(v) * w) ** P for v in vals)
        return float(total ** (1 / P))


def terms_direct(field, system, x, j):
    """Every term ``c psi(2^j x - k)`` of scale j, no window."""
    x = np.atleast_1d(np.asarray(x, float))
    out = []
    for i, jj, k, v in field.items():
        if jj != j:
            continue
        y = x * 2.0 ** j - np.asarray(k, float)
        out.append(v * float(system(i, y)))
    return out


def partial_sum_direct(field, system, x, J):
    return math.fsum(t for j in range(J + 1) for t in terms_direct(field, system, x, j))


def binary_digits(x: Fraction, n):
    out = []
    for _ in range(n):
        x *= 2
        b = int(x >= 1)
        out.append(b)
        x -= b
    return out
