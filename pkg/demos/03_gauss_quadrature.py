"""Gauss quadrature of a discrete measure from its two Gram matrices.

The nodes solve <u Q Q> psi = u <Q Q> psi. The weights are the Christoffel
function at the nodes. The rule integrates every polynomial up to degree
2d - 1 exactly against the measure.
"""
import numpy as np

from christoffel_dr import BasisSpec, accumulate_moments, factorize, gauss_rule, gram_from_moments, ygram_from_moments
from christoffel_dr.quadrature import eigvec_weights

rng = np.random.default_rng(2)
pts = rng.exponential(1.0, 400)
w = rng.uniform(0.2, 1.0, 400)

for family in ("laguerre", "chebyshev"):
    spec = BasisSpec.fit(family, 6, pts)
    m = accumulate_moments(spec, pts, w)
    g = gram_from_moments(spec, m)
    rule = gauss_rule(g, ygram_from_moments(spec, m), factorize(g))
    print(f"{family}: node, weight, weight from eigenvector")
    for node, weight, alt in zip(rule.nodes, rule.weights, eigvec_weights(rule)):
        print(f"  {node:9.5f} {weight:12.6f} {alt:12.6f}")

    print("  power   measure           rule")
    for p in range(0, 2 * spec.degree, 3):
        print(f"  {p:5d} {w @ pts**p:14.6e} {rule.weights @ rule.nodes**p:14.6e}")
    print()
