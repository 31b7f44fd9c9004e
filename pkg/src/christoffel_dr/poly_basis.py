"""Orthogonal polynomial bases on discrete measures.

Every family is described by its three-term recurrence

    u * Q_k(u) = alpha_k Q_{k+1}(u) + beta_k Q_k(u) + gamma_k Q_{k-1}(u),   Q_0 = 1

and everything else in this module (evaluation, products, multiplication by
the argument, Gram assembly from moments) is driven by those coefficients
alone. No monomial expansions are ever formed.

Moments and Gram assembly run in ``numpy.longdouble``. The Hermite and
Laguerre linearization coefficients are large with alternating signs (their
absolute sums reach ~1e9 at d = 12), so every rounding error in a moment is
amplified that much in the Gram matrix. For those two families the moments
are evaluated and summed in double-longdouble arithmetic (see ``_xprec``).
Chebyshev and Legendre products expand with nonnegative coefficients summing
to one, so plain extended precision is already enough.

Families and their normalization:

* ``chebyshev`` -- T_k, first kind, canonical support [-1, 1]
* ``legendre``  -- P_k with P_k(1) = 1, canonical support [-1, 1]
* ``hermite``   -- probabilists' He_k, orthogonal for exp(-u^2/2)
* ``laguerre``  -- L_k with L_k(0) = 1, orthogonal for exp(-u) on [0, inf)
"""
from __future__ import annotations

import enum
from fractions import Fraction
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Optional, Sequence

import numpy as np

from . import _xprec as xp

__all__ = [
    "BasisFamily",
    "DomainMap",
    "BasisSpec",
    "MomentVector",
    "GramMatrix",
    "recurrence_coefficients",
    "domain_map_from_data",
    "domain_map_from_weights",
    "eval_basis",
    "eval_basis_ext",
    "linearize_product",
    "multiply_by_argument",
    "accumulate_moments",
    "accumulate_moments_batch",
    "grams_from_moments_batch",
    "gram_from_moments",
    "ygram_from_moments",
    "direct_gram",
    "direct_ygram",
]


class BasisFamily(str, enum.Enum):
    CHEBYSHEV = "chebyshev"
    LEGENDRE = "legendre"
    HERMITE = "hermite"
    LAGUERRE = "laguerre"

    @classmethod
    def parse(cls, value) -> "BasisFamily":
        if isinstance(value, cls):
            return value
        try:
            return cls(str(value).lower())
        except ValueError:
            names = ", ".join(f.value for f in cls)
            raise ValueError(f"unknown basis family {value!r}; expected one of {names}") from None


EXT = np.longdouble


def _exact_coefficients(family: BasisFamily, k: int) -> tuple[Fraction, Fraction, Fraction]:
    if family is BasisFamily.CHEBYSHEV:
        return (Fraction(1), Fraction(0), Fraction(0)) if k == 0 else (Fraction(1, 2), Fraction(0), Fraction(1, 2))
    if family is BasisFamily.LEGENDRE:
        return Fraction(k + 1, 2 * k + 1), Fraction(0), Fraction(k, 2 * k + 1)
    if family is BasisFamily.HERMITE:
        return Fraction(1), Fraction(0), Fraction(k)
    # Laguerre: (k+1) L_{k+1} = (2k+1-u) L_k - k L_{k-1}
    return Fraction(-(k + 1)), Fraction(2 * k + 1), Fraction(-k)


def recurrence_coefficients(family: BasisFamily, k: int) -> tuple[float, float, float]:
    """Return ``(alpha_k, beta_k, gamma_k)`` of ``u Q_k = a Q_{k+1} + b Q_k + g Q_{k-1}``."""
    if k < 0:
        raise ValueError("recurrence index must be nonnegative")
    return tuple(float(c) for c in _exact_coefficients(BasisFamily.parse(family), k))


@lru_cache(maxsize=None)
def _recurrence_table(family: BasisFamily, n: int, dtype=float) -> np.ndarray:
    rows = [_exact_coefficients(family, k) for k in range(max(n, 1))]
    table = np.array(
        [[dtype(c.numerator) / dtype(c.denominator) for c in row] for row in rows], dtype=dtype
    )
    table.setflags(write=False)
    return table


@dataclass(frozen=True)
class DomainMap:
    """Affine change of variable ``u = scale * t + shift``."""

    scale: float = 1.0
    shift: float = 0.0

    def __post_init__(self):
        if not np.isfinite(self.scale) or self.scale == 0.0:
            raise ValueError(f"domain map scale must be finite and nonzero, got {self.scale}")
        if not np.isfinite(self.shift):
            raise ValueError(f"domain map shift must be finite, got {self.shift}")

    def forward(self, t):
        return self.scale * np.asarray(t, dtype=float) + self.shift

    def inverse(self, u):
        return (np.asarray(u, dtype=float) - self.shift) / self.scale


@dataclass(frozen=True)
class BasisSpec:
    """A family, a basis size ``degree`` (elements ``Q_0..Q_{degree-1}``) and a domain map."""

    family: BasisFamily
    degree: int
    map: DomainMap = field(default_factory=DomainMap)

    def __post_init__(self):
        object.__setattr__(self, "family", BasisFamily.parse(self.family))
        if int(self.degree) != self.degree or self.degree < 1:
            raise ValueError(f"basis degree must be a positive integer, got {self.degree}")
        object.__setattr__(self, "degree", int(self.degree))

    @classmethod
    def fit(cls, family, degree: int, samples) -> "BasisSpec":
        family = BasisFamily.parse(family)
        return cls(family, degree, domain_map_from_data(samples, family))

    def with_degree(self, degree: int) -> "BasisSpec":
        return BasisSpec(self.family, degree, self.map)

    def refit(self, samples, weights=None) -> "BasisSpec":
        """Same family and size, domain map fitted to ``samples`` (optionally weighted)."""
        if weights is None:
            return BasisSpec(self.family, self.degree, domain_map_from_data(samples, self.family))
        return BasisSpec(self.family, self.degree, domain_map_from_weights(samples, weights, self.family))


@dataclass(frozen=True)
class MomentVector:
    """``values[k] = <Q_k>``; ``residual`` holds low-order parts when compensated."""

    spec: BasisSpec
    values: np.ndarray
    residual: Optional[np.ndarray] = None

    @property
    def order(self) -> int:
        return len(self.values) - 1

    @property
    def mass(self) -> float:
        return float(self.values[0])


@dataclass(frozen=True)
class GramMatrix:
    """``entries`` in longdouble; ``residual`` is the low part when compensated."""

    spec: BasisSpec
    entries: np.ndarray
    residual: Optional[np.ndarray] = None

    @property
    def d(self) -> int:
        return self.entries.shape[0]


def domain_map_from_data(samples: Sequence[float], family) -> DomainMap:
    """Fit an affine map that puts ``samples`` on the family's natural support.

    Chebyshev/Legendre send ``[min - p, max + p]`` to ``[-1, 1]`` with
    ``p = 1e-6 * (max - min)``; a zero-width range uses ``p = 1`` instead.
    Hermite standardizes to zero mean and unit deviation. Laguerre moves the
    minimum to 0 and rescales so the mean distance from it is 1. Degenerate
    samples fall back to unit scale.
    """
    family = BasisFamily.parse(family)
    t = np.asarray(samples, dtype=float).ravel()
    if t.size == 0:
        raise ValueError("cannot fit a domain map to an empty sample")
    if not np.all(np.isfinite(t)):
        raise ValueError("samples must be finite")
    lo, hi = float(t.min()), float(t.max())

    if family in (BasisFamily.CHEBYSHEV, BasisFamily.LEGENDRE):
        pad = 1e-6 * (hi - lo)
        if not _usable_scale(2.0 / (3.0 * pad) if pad > 0 else np.inf):
            pad = 1.0
        a, b = lo - pad, hi + pad
        return DomainMap(2.0 / (b - a), -(a + b) / (b - a))
    if family is BasisFamily.HERMITE:
        mean = float(t.mean())
        std = float(t.std())
        scale = 1.0 / std if std > 0 and _usable_scale(1.0 / std) else 1.0
        return DomainMap(scale, -mean * scale)
    dev = float(np.mean(t - lo))
    scale = 1.0 / dev if dev > 0 and _usable_scale(1.0 / dev) else 1.0
    return DomainMap(scale, -lo * scale)


def _usable_scale(scale: float) -> bool:
    # spreads near the underflow threshold count as degenerate
    return bool(np.isfinite(scale) and scale < 1e300)


def domain_map_from_weights(samples, weights, family) -> DomainMap:
    """Fit a map from the weighted mean and deviation of a discrete measure.

    Used where the weights, not the sample range, decide where the mass is.
    Chebyshev/Legendre put ``mean +- sqrt(3) * std`` on ``[-1, 1]`` (exact for
    a uniform measure), Hermite standardizes, Laguerre puts ``mean - std`` at
    0 with unit deviation. Zero deviation falls back to unit scale.
    """
    family = BasisFamily.parse(family)
    t = np.asarray(samples, dtype=float).ravel()
    w = np.asarray(weights, dtype=float).ravel()
    if t.size == 0 or w.shape != t.shape:
        raise ValueError("need matching nonempty samples and weights")
    total = w.sum()
    if not total > 0 or not np.isfinite(total):
        raise ValueError("weights must have positive finite total")
    p = w / total
    mean = float(p @ t)
    std = float(np.sqrt(p @ (t - mean) ** 2))
    spread = np.sqrt(3.0) * std if family in (BasisFamily.CHEBYSHEV, BasisFamily.LEGENDRE) else std
    if not (spread > 0 and _usable_scale(1.0 / spread)):
        return DomainMap(1.0, -mean)
    scale = 1.0 / spread
    if family is BasisFamily.LAGUERRE:
        return DomainMap(scale, -(mean - std) * scale)
    return DomainMap(scale, -mean * scale)


def _eval_canonical(family: BasisFamily, u: np.ndarray, d: int) -> np.ndarray:
    dtype = EXT if u.dtype == EXT else float
    out = np.empty(u.shape + (d,), dtype=dtype)
    out[..., 0] = 1
    if d == 1:
        return out
    rec = _recurrence_table(family, d, dtype)
    a, b, _ = rec[0]
    out[..., 1] = (u - b) / a
    for k in range(1, d - 1):
        a, b, g = rec[k]
        out[..., k + 1] = ((u - b) * out[..., k] - g * out[..., k - 1]) / a
    return out


def eval_basis(spec: BasisSpec, t) -> np.ndarray:
    """Values ``(Q_0(u), ..., Q_{d-1}(u))`` at ``u = map(t)``.

    ``t`` may be a scalar or an array; the basis index is the trailing axis.
    """
    u = spec.map.forward(t)
    return _eval_canonical(spec.family, u, spec.degree)


def eval_basis_ext(spec: BasisSpec, t) -> np.ndarray:
    """:func:`eval_basis` carried out in ``numpy.longdouble``."""
    u = EXT(spec.map.scale) * np.asarray(t, dtype=float).astype(EXT) + EXT(spec.map.shift)
    return _eval_canonical(spec.family, u, spec.degree)


def _times_u(family: BasisFamily, c: np.ndarray) -> np.ndarray:
    n = len(c)
    out = np.zeros(n + 1, dtype=c.dtype)
    if n == 0:
        return out
    rec = _recurrence_table(family, n, c.dtype.type)
    out[1:] += rec[:, 0] * c
    out[:-1] += rec[:, 1] * c
    out[:-2] += rec[1:, 2] * c[1:]
    return out


def multiply_by_argument(spec: BasisSpec, coeffs) -> np.ndarray:
    """Coefficients of ``u * p(u)`` where ``p = sum_k coeffs[k] Q_k``.

    Works in the canonical coordinate ``u``. The result is one longer than
    the input.
    """
    return _times_u(spec.family, np.asarray(coeffs, dtype=float))


@lru_cache(maxsize=4096)
def _linearization(family: BasisFamily, q: int, r: int) -> np.ndarray:
    # Run the recurrence for Q_q on coefficient vectors seeded with Q_r.
    # Every iterate has degree <= q + r, so truncating u*p to n entries is exact.
    n = q + r + 1
    rec = _recurrence_table(family, max(q, 1), EXT)
    cur = np.zeros(n, dtype=EXT)
    cur[r] = 1
    prev = np.zeros(n, dtype=EXT)
    for k in range(q):
        a, b, g = rec[k]
        nxt = (_times_u(family, cur)[:n] - b * cur - g * prev) / a
        prev, cur = cur, nxt
    cur.setflags(write=False)
    return cur


_COMPENSATED = frozenset({BasisFamily.HERMITE, BasisFamily.LAGUERRE})


@lru_cache(maxsize=None)
def _dd_recurrence(family: BasisFamily, n: int):
    # (1/a, b, g) per index as double-longdouble pairs
    out = []
    for k in range(max(n, 1)):
        a, b, g = _exact_coefficients(family, k)
        out.append((xp.from_fraction(1 / a), xp.from_fraction(b), xp.from_fraction(g)))
    return out


def _eval_compensated(family: BasisFamily, u: np.ndarray, d: int):
    hi = np.empty(u.shape + (d,), dtype=EXT)
    lo = np.zeros_like(hi)
    hi[..., 0] = 1
    rec = _dd_recurrence(family, d)
    zero = np.zeros_like(u)
    prev = (zero, zero)
    cur = (hi[..., 0].copy(), zero)
    for k in range(d - 1):
        (ia, ial), (b, bl), (g, gl) = rec[k]
        t = xp.add(u, zero, -b, -bl)
        x = xp.mul(*t, *cur)
        y = xp.mul(g, gl, *prev)
        z = xp.add(*x, -y[0], -y[1])
        prev, cur = cur, xp.mul(*z, ia, ial)
        hi[..., k + 1], lo[..., k + 1] = cur
    return hi, lo


def linearize_product(spec: BasisSpec, q: int, r: int) -> np.ndarray:
    """Coefficients ``c[0..q+r]`` with ``Q_q * Q_r = sum_k c[k] Q_k``."""
    if q < 0 or r < 0:
        raise ValueError("basis indices must be nonnegative")
    return _linearization(spec.family, int(q), int(r)).astype(float)


@lru_cache(maxsize=256)
def _gram_tensor(family: BasisFamily, d: int, with_argument: bool) -> np.ndarray:
    # tensor[s, t, k]: contribution of moment k to <(u) Q_s Q_t>
    width = 2 * d if with_argument else 2 * d - 1
    tensor = np.zeros((d, d, width), dtype=EXT)
    for s in range(d):
        for t in range(s, d):
            c = _linearization(family, s, t)
            if with_argument:
                c = _times_u(family, c)
            tensor[s, t, : len(c)] = c
            tensor[t, s, : len(c)] = c
    tensor.setflags(write=False)
    return tensor


def _moment_rows(family: BasisFamily, u: np.ndarray, w, order: int):
    # u, w: (B, n) -> moments (B, order+1) and low parts (or None)
    if family in _COMPENSATED:
        hi, lo = _eval_compensated(family, u, order + 1)
        if w is not None:
            wx = w[..., None]
            hi, lo = xp.mul(hi, lo, wx, np.zeros_like(wx))
        return xp.tree_sum(hi, lo, axis=1)
    vals = _eval_canonical(family, u, order + 1)
    if w is not None:
        vals *= w[..., None]
    return np.add.reduce(vals, axis=1), None


_CHUNK = 1 << 21  # elements of (bags x points x orders) evaluated at once


def _check_weights(pts, weights):
    if weights is None:
        return None
    w = np.asarray(weights, dtype=float)
    if w.shape != pts.shape:
        raise ValueError(f"got {pts.size} points but {w.size} weights")
    if np.any(w < 0):
        raise ValueError("weights must be nonnegative")
    return w


def accumulate_moments(
    spec: BasisSpec, points, weights: Optional[Sequence[float]] = None, order: Optional[int] = None
) -> MomentVector:
    """Moments ``sum_j w_j Q_k(u_j)`` for ``k = 0..order``, in extended precision.

    ``order`` defaults to ``2 * spec.degree - 1``, enough for both the Gram
    and the argument-weighted Gram.
    """
    if order is None:
        order = 2 * spec.degree - 1
    if order < 0:
        raise ValueError("moment order must be nonnegative")
    pts = np.asarray(points, dtype=float).ravel()
    w = _check_weights(pts, None if weights is None else np.ravel(weights))
    if pts.size == 0:
        return MomentVector(spec, np.zeros(order + 1, dtype=EXT))
    u = EXT(spec.map.scale) * pts.astype(EXT) + EXT(spec.map.shift)
    hi, lo = _moment_rows(spec.family, u[None], None if w is None else w.astype(EXT)[None], order)
    return MomentVector(spec, hi[0], None if lo is None else lo[0])


def accumulate_moments_batch(specs: Sequence[BasisSpec], points, order: Optional[int] = None) -> list[MomentVector]:
    """Unweighted moments of each row of ``points`` under its own spec.

    Same result as calling :func:`accumulate_moments` per row; all specs
    must share a family.
    """
    pts = np.asarray(points, dtype=float)
    if pts.ndim != 2 or pts.shape[0] != len(specs):
        raise ValueError("points must be a 2-D array with one row per spec")
    if not specs:
        return []
    family = specs[0].family
    if any(sp.family is not family for sp in specs):
        raise ValueError("batched specs must share a family")
    if order is None:
        order = 2 * specs[0].degree - 1
    scale = np.array([sp.map.scale for sp in specs], dtype=EXT)[:, None]
    shift = np.array([sp.map.shift for sp in specs], dtype=EXT)[:, None]
    u = scale * pts.astype(EXT) + shift
    step = max(1, _CHUNK // max(1, pts.shape[1] * (order + 1)))
    out = []
    for start in range(0, len(specs), step):
        hi, lo = _moment_rows(family, u[start : start + step], None, order)
        for i, sp in enumerate(specs[start : start + step]):
            out.append(MomentVector(sp, hi[i], None if lo is None else lo[i]))
    return out


def _assemble(tensor: np.ndarray, moments: MomentVector):
    # (hi, lo) when the moments carry a residual, else (hi, None)
    width = tensor.shape[-1]
    m = np.asarray(moments.values[:width], dtype=EXT)
    if moments.residual is None:
        return tensor @ m, None
    r = np.asarray(moments.residual[:width], dtype=EXT)
    zero = np.zeros(tensor.shape[:-1], dtype=EXT)
    acc = (zero, zero)
    for k in range(width):
        acc = xp.add(*acc, *xp.mul(tensor[..., k], zero, m[k], r[k]))
    return acc


def grams_from_moments_batch(specs: Sequence[BasisSpec], moments: Sequence[MomentVector]) -> np.ndarray:
    """Stacked Gram matrices, shape ``(len(specs), d, d)``; one shared family and size."""
    if not specs:
        return np.zeros((0, 0, 0))
    d = specs[0].degree
    for mv in moments:
        _check_order(mv, 2 * d - 2, "Gram matrix")
    tensor = _gram_tensor(specs[0].family, d, False)
    width = tensor.shape[-1]
    m = np.stack([np.asarray(mv.values[:width], dtype=EXT) for mv in moments])
    if moments[0].residual is None:
        return np.einsum("stk,bk->bst", tensor, m)
    r = np.stack([np.asarray(mv.residual[:width], dtype=EXT) for mv in moments])
    zero = np.zeros((len(moments), d, d), dtype=EXT)
    acc = (zero, zero)
    for k in range(width):
        tk = np.broadcast_to(tensor[..., k], zero.shape)
        acc = xp.add(*acc, *xp.mul(tk, zero, m[:, k, None, None], r[:, k, None, None]))
    return acc[0] + acc[1]


def _check_order(moments: MomentVector, need: int, what: str):
    if moments.order < need:
        raise ValueError(f"{what} needs moments through order {need}, got order {moments.order}")


def gram_from_moments(spec: BasisSpec, moments: MomentVector) -> GramMatrix:
    """``<Q_s Q_t>`` for ``s, t < d``, assembled from moments via product linearization.

    Entries are ``numpy.longdouble``.
    """
    d = spec.degree
    _check_order(moments, 2 * d - 2, "Gram matrix")
    tensor = _gram_tensor(spec.family, d, False)
    return GramMatrix(spec, *_assemble(tensor, moments))


def ygram_from_moments(spec: BasisSpec, moments: MomentVector) -> GramMatrix:
    """``<u Q_s Q_t>`` in the canonical coordinate, assembled from moments."""
    d = spec.degree
    _check_order(moments, 2 * d - 1, "argument-weighted Gram matrix")
    return GramMatrix(spec, *_assemble(_gram_tensor(spec.family, d, True), moments))


def direct_gram(spec: BasisSpec, points, weights=None) -> np.ndarray:
    """Brute-force ``sum_j w_j Q_s(u_j) Q_t(u_j)``; reference route for checks."""
    V = eval_basis(spec, np.asarray(points, dtype=float).ravel())
    w = np.ones(len(V)) if weights is None else np.asarray(weights, dtype=float)
    out = np.zeros((spec.degree, spec.degree))
    for j in range(len(V)):
        out += w[j] * np.outer(V[j], V[j])
    return out


def direct_ygram(spec: BasisSpec, points, weights=None) -> np.ndarray:
    pts = np.asarray(points, dtype=float).ravel()
    w = np.ones(len(pts)) if weights is None else np.asarray(weights, dtype=float)
    return direct_gram(spec, pts, w * spec.map.forward(pts))
