"""Double-longdouble arithmetic on numpy arrays.

A value is a pair ``(hi, lo)`` of ``np.longdouble`` arrays with
``|lo| <= ulp(hi) / 2``; on x86-64 that is roughly 128 significant bits.
Only the handful of operations needed to run a three-term recurrence and sum
the results are provided. Built on the usual error-free transforms
(Knuth two-sum, Veltkamp/Dekker two-product).
"""
from __future__ import annotations

from fractions import Fraction

import numpy as np

EXT = np.longdouble
_SPLIT = EXT(2) ** ((np.finfo(EXT).nmant + 2) // 2) + 1


def two_sum(a, b):
    s = a + b
    bb = s - a
    return s, (a - (s - bb)) + (b - bb)


def fast_two_sum(a, b):
    s = a + b
    return s, b - (s - a)


def _split(a):
    c = _SPLIT * a
    hi = c - (c - a)
    return hi, a - hi


def two_prod(a, b):
    x = a * b
    ah, al = _split(a)
    bh, bl = _split(b)
    return x, al * bl - (((x - ah * bh) - al * bh) - ah * bl)


def add(ah, al, bh, bl):
    s, e = two_sum(ah, bh)
    t, f = two_sum(al, bl)
    e = e + t
    s, e = fast_two_sum(s, e)
    e = e + f
    return fast_two_sum(s, e)


def mul(ah, al, bh, bl):
    p, e = two_prod(ah, bh)
    e = e + (ah * bl + al * bh)
    return fast_two_sum(p, e)


def from_fraction(q: Fraction):
    """Nearest ``(hi, lo)`` pair to an exact rational."""
    hi = EXT(q.numerator) / EXT(q.denominator)
    rest = q - Fraction(*hi.as_integer_ratio())
    lo = EXT(rest.numerator) / EXT(rest.denominator) if rest else EXT(0)
    return hi, lo


def tree_sum(hi, lo, axis=0):
    """Pairwise double-longdouble sum along ``axis``."""
    hi = np.moveaxis(np.asarray(hi, dtype=EXT), axis, 0)
    lo = np.moveaxis(np.asarray(lo, dtype=EXT), axis, 0)
    if hi.shape[0] == 0:
        z = np.zeros(hi.shape[1:], dtype=EXT)
        return z, z.copy()
    while hi.shape[0] > 1:
        if hi.shape[0] % 2:
            pad = np.zeros((1,) + hi.shape[1:], dtype=EXT)
            hi = np.concatenate([hi, pad])
            lo = np.concatenate([lo, pad])
        hi, lo = add(hi[0::2], lo[0::2], hi[1::2], lo[1::2])
    return hi[0], lo[0]


def div(ah, al, bh, bl):
    q1 = ah / bh
    ph, pl = mul(q1, np.zeros_like(q1), bh, bl)
    rh, rl = add(ah, al, -ph, -pl)
    q2 = rh / bh
    ph, pl = mul(q2, np.zeros_like(q2), bh, bl)
    rh, rl = add(rh, rl, -ph, -pl)
    q3 = rh / bh
    s, e = fast_two_sum(q1, q2)
    return add(s, e, q3, np.zeros_like(q3))


def sqrt(ah, al):
    s = np.sqrt(ah)
    ph, pl = two_prod(s, s)
    rh, _ = add(ah, al, -ph, -pl)
    return fast_two_sum(s, rh / (2 * s))


def dot(ah, al, bh, bl, axis=-1):
    """Sum of elementwise products along ``axis``."""
    return tree_sum(*mul(ah, al, bh, bl), axis=axis)
