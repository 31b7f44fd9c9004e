"""Gauss quadrature of a discrete measure given its Gram matrices.

Nodes are the eigenvalues of ``<u Q_s Q_t> psi = u <Q_s Q_t> psi``. With
``G = L L^T`` that becomes the symmetric problem ``L^{-1} Y L^{-T} v = u v``
and ``psi = L^{-T} v`` is G-orthonormal. Weights are the Christoffel function
at the nodes, which for G-orthonormal ``psi`` also equals
``1 / (psi^(i) . Q(u_i))^2``.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .christoffel import KernelState, back_solve, dd_back_solve, dd_forward_solve, forward_solve
from .errors import EigenFailure
from .poly_basis import EXT, BasisSpec, GramMatrix, eval_basis_ext

__all__ = [
    "QuadratureRule",
    "OutcomeDistribution",
    "gauss_rule",
    "eigvec_weights",
    "normalize",
    "rule_mean",
]


@dataclass(frozen=True)
class QuadratureRule:
    spec: BasisSpec
    nodes: np.ndarray
    weights: np.ndarray
    eigvecs: np.ndarray  # column i is psi^(i), G-orthonormal

    @property
    def total_mass(self) -> float:
        return float(self.weights.sum())


@dataclass(frozen=True)
class OutcomeDistribution:
    nodes: np.ndarray
    probabilities: np.ndarray
    total_mass: float


def gauss_rule(gram: GramMatrix, ygram, state: KernelState) -> QuadratureRule:
    """d-point Gauss rule from the Gram pair ``(<QQ>, <uQQ>)``.

    ``state`` must be the factorization of ``gram``; ``ygram`` is a
    :class:`GramMatrix` or a plain array. Nodes come back in raw coordinates,
    ascending; weights are ``christoffel(state, node)``.
    """
    L = state.factor
    ygram_residual = getattr(ygram, "residual", None)
    Y = np.asarray(getattr(ygram, "entries", ygram), dtype=EXT)
    d = L.shape[0]
    if Y.shape != (d, d) or np.shape(gram.entries) != (d, d):
        raise ValueError("Gram, argument-Gram and factor sizes disagree")
    if state.factor_lo is None:
        A = forward_solve(L, Y)
        A = forward_solve(L, A.T)
    else:
        Yl = np.zeros_like(Y) if ygram_residual is None else np.asarray(ygram_residual, dtype=EXT)
        Ah, Al = dd_forward_solve(L, state.factor_lo, Y, Yl)
        A = dd_forward_solve(L, state.factor_lo, Ah.T, Al.T)[0]
    A = (A + A.T) / 2
    try:
        u, V = np.linalg.eigh(A.astype(float))
    except np.linalg.LinAlgError as exc:
        raise EigenFailure(str(exc)) from None
    if not np.all(np.isfinite(u)):
        raise EigenFailure("non-finite eigenvalues")
    u, V = _jacobi_refine(A, V.astype(EXT))

    if state.factor_lo is None:
        psi = back_solve(L, V)
    else:
        psi = sum(dd_back_solve(L, state.factor_lo, V, np.zeros_like(V)))
    psi = psi * np.where(psi[0] < 0, -1, 1)

    # weights at the canonical eigenvalues, before rounding to raw nodes
    weights = (1 / state.kernel_diagonal(u)).astype(float)
    nodes = state.spec.map.inverse(u.astype(float))
    order = np.argsort(nodes, kind="stable")
    return QuadratureRule(state.spec, nodes[order], weights[order], psi[:, order])


def _jacobi_refine(A: np.ndarray, V: np.ndarray, max_sweeps: int = 6):
    """Polish a float64 eigendecomposition of ``A`` to ``A``'s own precision.

    ``V^T A V`` is already diagonal to float64 accuracy, so cyclic Jacobi
    sweeps converge quadratically; two usually suffice. On ill-conditioned
    Laguerre and Hermite Grams the float64 eigenvectors alone cost several
    digits in the weights.
    """
    B = V.T @ A @ V
    B = (B + B.T) / 2
    d = B.shape[0]
    tol = np.finfo(A.dtype).eps * np.sqrt(np.sum(B * B))
    for _ in range(max_sweeps):
        if np.sqrt(np.sum(np.tril(B, -1) ** 2)) <= tol:
            break
        for p in range(d - 1):
            for q in range(p + 1, d):
                if B[p, q] == 0:
                    continue
                tau = (B[q, q] - B[p, p]) / (2 * B[p, q])
                t = (1 if tau >= 0 else -1) / (abs(tau) + np.sqrt(1 + tau * tau))
                c = 1 / np.sqrt(1 + t * t)
                s = t * c
                bp, bq = B[:, p].copy(), B[:, q].copy()
                B[:, p], B[:, q] = c * bp - s * bq, s * bp + c * bq
                bp, bq = B[p, :].copy(), B[q, :].copy()
                B[p, :], B[q, :] = c * bp - s * bq, s * bp + c * bq
                vp, vq = V[:, p].copy(), V[:, q].copy()
                V[:, p], V[:, q] = c * vp - s * vq, s * vp + c * vq
    return np.diag(B).copy(), V


def eigvec_weights(rule: QuadratureRule) -> np.ndarray:
    """Weights from the eigenvector formula ``1 / (sum_t psi_t^(i) Q_t(y_i))^2``."""
    Q = eval_basis_ext(rule.spec, rule.nodes)
    proj = np.einsum("it,ti->i", Q, rule.eigvecs)
    return (1 / proj**2).astype(float)


def normalize(rule: QuadratureRule) -> OutcomeDistribution:
    total = float(rule.weights.sum())
    return OutcomeDistribution(rule.nodes.copy(), rule.weights / total, total)


def rule_mean(dist: OutcomeDistribution) -> float:
    return float(dist.probabilities @ dist.nodes)
