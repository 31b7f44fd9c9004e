"""Reproducing kernel and Christoffel function of a Gram matrix.

``K(z, y) = Q(z)^T G^{-1} Q(y)`` and ``lambda(y) = 1 / K(y, y)``. The inverse
is never formed: with ``G = L L^T`` we solve ``L a = Q(z)`` and take dot
products, so ``K(y, y) = |L^{-1} Q(y)|^2``.

Factorization and solves run in ``numpy.longdouble``. Gram matrices of
sampled measures in the Hermite and Laguerre bases are routinely conditioned
around 1e8 to 1e10, and float64 rounding of the Gram alone would cost that
many ulps in the nodes and weights built on it. A Gram that carries a
``residual`` low part is factorized and solved in double-longdouble
arithmetic instead, which keeps even 1e10-conditioned matrices at float64
accuracy. Results are returned as float64.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np

from . import _xprec as xp
from .errors import NotPositiveDefinite
from .poly_basis import _COMPENSATED, EXT, BasisSpec, GramMatrix, _eval_canonical, _eval_compensated

__all__ = [
    "KernelState",
    "PIVOT_TOL",
    "cholesky",
    "forward_solve",
    "back_solve",
    "dd_cholesky",
    "dd_forward_solve",
    "dd_back_solve",
    "factorize",
    "kernel",
    "christoffel",
]

# Smallest accepted squared-pivot ratio min(diag L)^2 / max(diag L)^2.
# Anything below is rounding noise on a rank-deficient matrix.
PIVOT_TOL = 1e-14


def cholesky(G: np.ndarray) -> np.ndarray:
    """Lower Cholesky factor in the dtype of ``G``; raises on a nonpositive pivot."""
    d = G.shape[0]
    L = np.zeros_like(G)
    for j in range(d):
        s = G[j, j] - L[j, :j] @ L[j, :j]
        if not s > 0:
            raise NotPositiveDefinite(f"{d}x{d} Gram matrix is not positive definite (pivot {j})")
        L[j, j] = np.sqrt(s)
        L[j + 1 :, j] = (G[j + 1 :, j] - L[j + 1 :, :j] @ L[j, :j]) / L[j, j]
    return L


def forward_solve(L: np.ndarray, B: np.ndarray) -> np.ndarray:
    """Solve ``L X = B`` for lower-triangular ``L``.

    ``L`` may carry leading batch axes ``(..., d, d)`` matched by ``B`` of
    shape ``(..., d)`` or ``(..., d, k)``.
    """
    vec = B.ndim == L.ndim - 1
    X = np.array(B[..., None] if vec else B, dtype=np.result_type(L, B))
    d = L.shape[-1]
    for i in range(d):
        if i:
            X[..., i, :] -= np.einsum("...j,...jk->...k", L[..., i, :i], X[..., :i, :])
        X[..., i, :] /= L[..., i, i, None]
    return X[..., 0] if vec else X


def back_solve(L: np.ndarray, B: np.ndarray) -> np.ndarray:
    """Solve ``L^T X = B`` for lower-triangular ``L`` (2-D only)."""
    X = np.array(B, dtype=np.result_type(L, B))
    d = L.shape[0]
    for i in reversed(range(d)):
        X[i] -= L[i + 1 :, i] @ X[i + 1 :]
        X[i] /= L[i, i]
    return X


def dd_cholesky(Gh: np.ndarray, Gl: np.ndarray):
    """:func:`cholesky` on a double-longdouble matrix ``(Gh, Gl)``."""
    d = Gh.shape[0]
    Lh = np.zeros_like(Gh)
    Ll = np.zeros_like(Gh)
    for j in range(d):
        sh, sl = xp.dot(Lh[j, :j], Ll[j, :j], Lh[j, :j], Ll[j, :j], axis=0)
        sh, sl = xp.add(Gh[j, j], Gl[j, j], -sh, -sl)
        if not sh > 0:
            raise NotPositiveDefinite(f"{d}x{d} Gram matrix is not positive definite (pivot {j})")
        Lh[j, j], Ll[j, j] = xp.sqrt(sh, sl)
        if j + 1 < d:
            ph, pl = xp.dot(Lh[j + 1 :, :j], Ll[j + 1 :, :j], Lh[j, :j], Ll[j, :j], axis=1)
            th, tl = xp.add(Gh[j + 1 :, j], Gl[j + 1 :, j], -ph, -pl)
            Lh[j + 1 :, j], Ll[j + 1 :, j] = xp.div(th, tl, Lh[j, j], Ll[j, j])
    return Lh, Ll


def dd_forward_solve(Lh, Ll, Bh, Bl):
    """``L X = B`` in double-longdouble; ``B`` is ``(d,)`` or ``(d, k)``."""
    vec = np.ndim(Bh) == 1
    Xh, Xl = (np.array(B, dtype=EXT, ndmin=2).reshape(len(Lh), -1) for B in (Bh, Bl))
    for i in range(Lh.shape[0]):
        ph, pl = xp.dot(Lh[i, :i, None], Ll[i, :i, None], Xh[:i], Xl[:i], axis=0)
        th, tl = xp.add(Xh[i], Xl[i], -ph, -pl)
        Xh[i], Xl[i] = xp.div(th, tl, Lh[i, i], Ll[i, i])
    return (Xh[:, 0], Xl[:, 0]) if vec else (Xh, Xl)


def dd_back_solve(Lh, Ll, Bh, Bl):
    """``L^T X = B`` in double-longdouble."""
    vec = np.ndim(Bh) == 1
    Xh, Xl = (np.array(B, dtype=EXT, ndmin=2).reshape(len(Lh), -1) for B in (Bh, Bl))
    d = Lh.shape[0]
    for i in reversed(range(d)):
        ph, pl = xp.dot(Lh[i + 1 :, i, None], Ll[i + 1 :, i, None], Xh[i + 1 :], Xl[i + 1 :], axis=0)
        th, tl = xp.add(Xh[i], Xl[i], -ph, -pl)
        Xh[i], Xl[i] = xp.div(th, tl, Lh[i, i], Ll[i, i])
    return (Xh[:, 0], Xl[:, 0]) if vec else (Xh, Xl)


@dataclass(frozen=True)
class KernelState:
    spec: BasisSpec
    gram: GramMatrix
    factor: np.ndarray  # lower Cholesky factor, longdouble
    ridge_used: float
    condition_estimate: float
    factor_lo: Optional[np.ndarray] = None  # low part when factorized in double-longdouble

    @property
    def d(self) -> int:
        return self.factor.shape[0]

    def whiten_canonical(self, u: np.ndarray):
        """``L^{-1} Q(u)`` at canonical points ``u``, shape ``(d, n)``, as ``(hi, lo)``."""
        u = np.asarray(u, dtype=EXT).ravel()
        if self.factor_lo is None:
            return forward_solve(self.factor, _eval_canonical(self.spec.family, u, self.d).T), None
        if self.spec.family in _COMPENSATED:
            qh, ql = _eval_compensated(self.spec.family, u, self.d)
        else:
            qh = _eval_canonical(self.spec.family, u, self.d)
            ql = np.zeros_like(qh)
        return dd_forward_solve(self.factor, self.factor_lo, qh.T, ql.T)

    def kernel_diagonal(self, u: np.ndarray) -> np.ndarray:
        """``K(u, u)`` at canonical points, longdouble, flat."""
        ah, al = self.whiten_canonical(u)
        if al is None:
            return np.sum(ah * ah, axis=0)
        return xp.dot(ah, al, ah, al, axis=0)[0]

    def whiten(self, t) -> np.ndarray:
        """``L^{-1} Q(t)`` in extended precision, basis index on the trailing axis."""
        t = np.asarray(t, dtype=float)
        u = EXT(self.spec.map.scale) * t.astype(EXT) + EXT(self.spec.map.shift)
        ah, al = self.whiten_canonical(u)
        a = ah if al is None else ah + al
        return a.T.reshape(t.shape + (self.d,))


def factorize(gram: GramMatrix, ridge: Optional[float] = None) -> KernelState:
    """Cholesky-factor ``gram`` (optionally ``gram + ridge * trace/d * I``).

    Raises
    ------
    NotPositiveDefinite
        A pivot was nonpositive or the pivot ratio fell below ``PIVOT_TOL``,
        i.e. the measure has fewer effective support points than ``d``.
    """
    G = np.asarray(gram.entries, dtype=EXT)
    G_lo = None if gram.residual is None else np.asarray(gram.residual, dtype=EXT)
    d = G.shape[0]
    if G.ndim != 2 or G.shape != (d, d):
        raise ValueError(f"Gram matrix must be square, got shape {G.shape}")
    if not np.all(np.isfinite(G)):
        raise NotPositiveDefinite("Gram matrix has non-finite entries")
    scale = float(np.abs(G).max(initial=0.0))
    if float(np.abs(G - G.T).max(initial=0.0)) > 1e-12 * scale:
        raise ValueError("Gram matrix is not symmetric")
    G = (G + G.T) / 2
    if G_lo is not None:
        G_lo = (G_lo + G_lo.T) / 2

    ridge_used = 0.0
    if ridge is not None:
        if ridge < 0:
            raise ValueError("ridge must be nonnegative")
        ridge_used = float(ridge)
        shift = EXT(ridge_used) * (np.trace(G) / d) * np.eye(d, dtype=EXT)
        if G_lo is None:
            G = G + shift
        else:
            G, G_lo = xp.add(G, G_lo, shift, np.zeros_like(shift))

    if G_lo is None:
        L, L_lo = cholesky(G), None
    else:
        L, L_lo = dd_cholesky(G, G_lo)
    piv = np.diag(L) ** 2
    ratio = float(piv.min() / piv.max())
    if not ratio > PIVOT_TOL:
        raise NotPositiveDefinite(
            f"{d}x{d} Gram matrix is numerically singular (pivot ratio {ratio:.2e})"
        )
    return KernelState(gram.spec, gram, L, ridge_used, 1.0 / ratio, L_lo)


def _out(v):
    v = np.asarray(v, dtype=float)
    return float(v) if v.ndim == 0 else v


def kernel(state: KernelState, z, y):
    """Reproducing kernel ``K(z, y)``; broadcasts over array arguments."""
    return _out(np.sum(state.whiten(z) * state.whiten(y), axis=-1))


def christoffel(state: KernelState, y):
    """Christoffel function ``1 / K(y, y)``."""
    y = np.asarray(y, dtype=float)
    u = EXT(state.spec.map.scale) * y.astype(EXT) + EXT(state.spec.map.shift)
    return _out((1 / state.kernel_diagonal(u)).reshape(y.shape))
