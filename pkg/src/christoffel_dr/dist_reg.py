"""Two-step Christoffel-function distribution regression.

Step one builds, for every bag, the Christoffel function of its
x-observations. Evaluated at a query ``x`` it gives the bag's weight: roughly
how many of the bag's observations sit near ``x``. Step two treats the bag
outcomes ``y_l`` as a discrete measure carrying those weights and builds its
Christoffel function ``lambda(y | x)`` and Gauss quadrature, whose nodes are
possible outcomes and whose normalized weights are their probabilities.

Typical use::

    model = TwoStepModel(dataset)
    cond = model.conditional(0.5)
    conditional_lambda(cond, ygrid)
    model.outcomes(0.5).probabilities
"""
from __future__ import annotations

import warnings
from dataclasses import dataclass
from typing import Hashable, Optional, Sequence, Union

import numpy as np

from .christoffel import KernelState, christoffel, factorize, forward_solve
from .errors import (
    DatasetError,
    InsufficientRank,
    NotPositiveDefinite,
    OverfitWarning,
    SingularConditionalGram,
)
from .poly_basis import (
    EXT,
    BasisSpec,
    MomentVector,
    GramMatrix,
    accumulate_moments,
    accumulate_moments_batch,
    _eval_canonical,
    gram_from_moments,
    grams_from_moments_batch,
    ygram_from_moments,
)
from .quadrature import OutcomeDistribution, QuadratureRule, gauss_rule, normalize

__all__ = [
    "Bag",
    "Dataset",
    "BagEvaluator",
    "ConditionalModel",
    "TwoStepModel",
    "OVERFIT_RATIO",
    "bag_evaluator",
    "bag_weight",
    "weighted_model",
    "conditional_model",
    "conditional_lambda",
    "conditional_rule",
    "conditional_outcomes",
    "unconditional_model",
    "overfit_ratios",
]

OVERFIT_RATIO = 0.2


@dataclass(frozen=True, eq=False)
class Bag:
    id: Hashable
    xs: np.ndarray
    y: float

    def __post_init__(self):
        xs = np.array(self.xs, dtype=float).ravel()
        if xs.size == 0:
            raise DatasetError(f"bag {self.id!r} has no x-observations")
        if not np.all(np.isfinite(xs)):
            raise DatasetError(f"bag {self.id!r} has non-finite x-observations")
        if not np.isfinite(self.y):
            raise DatasetError(f"bag {self.id!r} has non-finite outcome")
        xs.setflags(write=False)
        object.__setattr__(self, "xs", xs)
        object.__setattr__(self, "y", float(self.y))

    @property
    def n(self) -> int:
        return self.xs.size

    def __eq__(self, other):
        if not isinstance(other, Bag):
            return NotImplemented
        return self.id == other.id and self.y == other.y and np.array_equal(self.xs, other.xs)

    __hash__ = None


@dataclass(frozen=True, eq=False)
class Dataset:
    """M bags plus the x and y basis specs (degrees ``d_x`` and ``d_y``)."""

    bags: tuple
    x_spec: BasisSpec
    y_spec: BasisSpec

    def __post_init__(self):
        object.__setattr__(self, "bags", tuple(self.bags))
        if not self.bags:
            raise DatasetError("dataset has no bags")

    @classmethod
    def build(cls, bags: Sequence[Bag], dx: int = 10, dy: int = 10, family="chebyshev") -> "Dataset":
        """Fit the x map on the pooled observations and the y map on the outcomes."""
        bags = tuple(bags)
        if not bags:
            raise DatasetError("dataset has no bags")
        pooled = np.concatenate([b.xs for b in bags])
        ys = np.array([b.y for b in bags])
        return cls(bags, BasisSpec.fit(family, dx, pooled), BasisSpec.fit(family, dy, ys))

    @property
    def M(self) -> int:
        return len(self.bags)

    @property
    def ys(self) -> np.ndarray:
        return np.array([b.y for b in self.bags])

    @property
    def dx(self) -> int:
        return self.x_spec.degree

    @property
    def dy(self) -> int:
        return self.y_spec.degree

    def with_degrees(self, dx: int, dy: int) -> "Dataset":
        return Dataset(self.bags, self.x_spec.with_degree(dx), self.y_spec.with_degree(dy))


def overfit_ratios(ds: Dataset) -> tuple[float, float]:
    """``(d_x / min N, d_y / M)``."""
    n_min = min(b.n for b in ds.bags)
    return ds.dx / n_min, ds.dy / ds.M


def _validate(ds: Dataset):
    if ds.M < ds.dy:
        raise DatasetError(f"need at least d_y = {ds.dy} bags, got M = {ds.M}")
    for b in ds.bags:
        if b.n < ds.dx:
            raise DatasetError(f"bag {b.id!r} has N = {b.n} < d_x = {ds.dx} observations")
    rx, ry = overfit_ratios(ds)
    if rx > OVERFIT_RATIO:
        warnings.warn(f"first-stage overfit ratio d_x/N = {rx:.3g} exceeds {OVERFIT_RATIO}", OverfitWarning, stacklevel=3)
    if ry > OVERFIT_RATIO:
        warnings.warn(f"second-stage overfit ratio d_y/M = {ry:.3g} exceeds {OVERFIT_RATIO}", OverfitWarning, stacklevel=3)


@dataclass(frozen=True)
class BagEvaluator:
    bag_id: Hashable
    state: KernelState

    def __call__(self, x):
        return christoffel(self.state, x)


def bag_evaluator(bag: Bag, x_spec: BasisSpec, ridge: Optional[float] = None, local_map: bool = True) -> BagEvaluator:
    """Factorize the bag's x-Gram, built from moments through order ``2 d_x - 1``.

    With ``local_map`` the domain map is refitted to this bag's own
    observations. The Christoffel function does not depend on the affine
    map, but the Gram conditioning does: a narrow bag on a wide pooled
    domain is numerically singular already at ``d_x = 8``.
    """
    spec = x_spec.refit(bag.xs) if local_map else x_spec
    moments = accumulate_moments(spec, bag.xs, order=2 * spec.degree - 1)
    gram = gram_from_moments(spec, moments)
    try:
        state = factorize(gram, ridge)
    except NotPositiveDefinite as exc:
        raise InsufficientRank(bag.id, f"bag {bag.id!r}: {exc}") from None
    return BagEvaluator(bag.id, state)


def _build_evaluators(bags, x_spec: BasisSpec, ridge, local_map: bool) -> tuple:
    # Same result as bag_evaluator per bag; equal-size bags share one batched
    # moment/Gram pass. The first failing bag in input order is reported.
    by_size: dict[int, list[int]] = {}
    for i, b in enumerate(bags):
        by_size.setdefault(b.n, []).append(i)
    evaluators = [None] * len(bags)
    for idx in by_size.values():
        group = [bags[i] for i in idx]
        specs = [x_spec.refit(b.xs) if local_map else x_spec for b in group]
        moments = accumulate_moments_batch(specs, np.stack([b.xs for b in group]), 2 * x_spec.degree - 1)
        grams = grams_from_moments_batch(specs, moments)
        for i, b, sp, G in zip(idx, group, specs, grams):
            try:
                evaluators[i] = BagEvaluator(b.id, factorize(GramMatrix(sp, G), ridge))
            except NotPositiveDefinite as exc:
                evaluators[i] = InsufficientRank(b.id, f"bag {b.id!r}: {exc}")
    for ev in evaluators:
        if isinstance(ev, InsufficientRank):
            raise ev
    return tuple(evaluators)


def bag_weight(ev: BagEvaluator, x) -> float:
    return christoffel(ev.state, x)


@dataclass(frozen=True)
class ConditionalModel:
    """Weighted y-measure for one query ``x`` and its factorized Gram."""

    x: float
    weights: np.ndarray
    moments: MomentVector
    gram: GramMatrix
    state: KernelState

    @property
    def spec(self) -> BasisSpec:
        return self.gram.spec

    @property
    def ygram(self) -> GramMatrix:
        return ygram_from_moments(self.spec, self.moments)

    @property
    def total_weight(self) -> float:
        return float(self.weights.sum())


def weighted_model(
    y_spec: BasisSpec, ys, weights, x: float = float("nan"), ridge: Optional[float] = None, adapt_map: bool = True
) -> ConditionalModel:
    """Second-stage model for outcomes ``ys`` carrying nonnegative ``weights``.

    With ``adapt_map`` the y domain map is refitted to the weighted mean and
    spread. Conditional weights put nearly all mass in a window about as
    wide as the x-noise, and a basis scaled to the full outcome range makes
    that Gram matrix numerically singular. Christoffel values and quadrature
    nodes are unchanged by the refit.
    """
    w = np.asarray(weights, dtype=float)
    if adapt_map:
        try:
            y_spec = y_spec.refit(ys, w)
        except ValueError as exc:
            raise SingularConditionalGram(f"weighted y-measure at x={x}: {exc}") from None
    moments = accumulate_moments(y_spec, ys, w, order=2 * y_spec.degree - 1)
    gram = gram_from_moments(y_spec, moments)
    try:
        state = factorize(gram, ridge)
    except NotPositiveDefinite as exc:
        raise SingularConditionalGram(f"weighted y-Gram at x={x}: {exc}") from None
    return ConditionalModel(float(x), w, moments, gram, state)


class TwoStepModel:
    """Per-bag evaluators built once for a dataset and reused across queries.

    Construction validates sizes and factorizes every bag; the first
    rank-deficient bag raises :class:`InsufficientRank`.
    """

    def __init__(self, dataset: Dataset, ridge: Optional[float] = None, local_map: bool = True):
        _validate(dataset)
        self.dataset = dataset
        self.ridge = ridge
        self.evaluators = _build_evaluators(dataset.bags, dataset.x_spec, ridge, local_map)
        self._ys = dataset.ys
        specs = [ev.state.spec for ev in self.evaluators]
        self._scale = np.array([s.map.scale for s in specs], dtype=EXT)
        self._shift = np.array([s.map.shift for s in specs], dtype=EXT)
        self._factors = np.stack([ev.state.factor for ev in self.evaluators])

    def bag_weights(self, x: float) -> np.ndarray:
        """``lambda^(l)(x)`` for every bag, in bag order."""
        # Batched form of christoffel(ev.state, x) over all evaluators.
        u = self._scale * EXT(float(x)) + self._shift
        q = _eval_canonical(self.dataset.x_spec.family, u, self.dataset.dx)
        a = forward_solve(self._factors, q)
        return (1 / np.sum(a * a, axis=-1)).astype(float)

    def conditional(self, x: float) -> ConditionalModel:
        return weighted_model(self.dataset.y_spec, self._ys, self.bag_weights(x), x, self.ridge)

    def unconditional(self) -> ConditionalModel:
        return weighted_model(self.dataset.y_spec, self._ys, np.ones(len(self._ys)), ridge=self.ridge, adapt_map=False)

    def outcomes(self, x: float) -> OutcomeDistribution:
        return normalize(conditional_rule(self.conditional(x)))


def _fitted(ds: Union[Dataset, TwoStepModel], ridge) -> TwoStepModel:
    return ds if isinstance(ds, TwoStepModel) else TwoStepModel(ds, ridge)


def conditional_model(ds: Union[Dataset, TwoStepModel], x: float, ridge: Optional[float] = None) -> ConditionalModel:
    """Build ``G_{y|x}`` for query ``x``.

    Pass a :class:`TwoStepModel` to reuse the bag factorizations across many
    queries; a bare :class:`Dataset` is fitted on the spot.
    """
    return _fitted(ds, ridge).conditional(x)


def conditional_lambda(model: ConditionalModel, y):
    """``lambda(y | x)`` for the query the model was built at."""
    return christoffel(model.state, y)


def conditional_rule(model: ConditionalModel) -> QuadratureRule:
    return gauss_rule(model.gram, model.ygram, model.state)


def conditional_outcomes(ds: Union[Dataset, TwoStepModel], x: float, ridge: Optional[float] = None) -> OutcomeDistribution:
    return normalize(conditional_rule(conditional_model(ds, x, ridge)))


def unconditional_model(ds: Union[Dataset, TwoStepModel], ridge: Optional[float] = None) -> ConditionalModel:
    """Unit-weight model; its Christoffel function is ``lambda(y)``.

    Only the outcomes are used, so bags are not factorized here.
    """
    if isinstance(ds, TwoStepModel):
        return ds.unconditional()
    return weighted_model(ds.y_spec, ds.ys, np.ones(ds.M), ridge=ridge, adapt_map=False)
