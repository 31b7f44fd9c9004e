"""Christoffel-function distribution regression.

Bags of x-observations, each labelled with one outcome y, are turned into a
conditional outcome distribution: per-bag Christoffel functions in x weight
the outcomes, and the Christoffel function and Gauss quadrature of the
weighted outcome measure give ``lambda(y | x)``, possible outcomes and their
probabilities.
"""
from .christoffel import KernelState, christoffel, factorize, kernel
from .dist_reg import (
    Bag,
    BagEvaluator,
    ConditionalModel,
    Dataset,
    TwoStepModel,
    bag_evaluator,
    bag_weight,
    conditional_lambda,
    conditional_model,
    conditional_outcomes,
    conditional_rule,
    overfit_ratios,
    unconditional_model,
    weighted_model,
)
from .errors import (
    ChristoffelError,
    DatasetError,
    EigenFailure,
    InsufficientRank,
    NotPositiveDefinite,
    OverfitWarning,
    SingularConditionalGram,
)
from .io import load_dataset, read_bags, run_check, run_eval_grid, run_quad, write_bags
from .poly_basis import (
    BasisFamily,
    BasisSpec,
    DomainMap,
    GramMatrix,
    MomentVector,
    accumulate_moments,
    domain_map_from_data,
    eval_basis,
    gram_from_moments,
    linearize_product,
    multiply_by_argument,
    ygram_from_moments,
)
from .quadrature import OutcomeDistribution, QuadratureRule, gauss_rule, normalize, rule_mean
from .synth import SynthConfig, generate, generate_bags

__version__ = "0.1.0"
