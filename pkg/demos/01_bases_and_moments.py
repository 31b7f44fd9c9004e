"""Orthogonal bases, product linearization, and Gram matrices from moments.

Every Gram matrix in the package is built from a short moment vector
<Q_k>, k = 0..2d-1, rather than from a double sum over the data. This script
shows the pieces that make that work and compares the two routes.
"""
import numpy as np

from christoffel_dr import BasisSpec, DomainMap, accumulate_moments, eval_basis, gram_from_moments, linearize_product
from christoffel_dr.poly_basis import direct_gram

identity = DomainMap(1.0, 0.0)

print("Basis values at u = 0.5, first five elements")
for family in ("chebyshev", "legendre", "hermite", "laguerre"):
    vals = eval_basis(BasisSpec(family, 5, identity), 0.5)
    print(f"  {family:<10}", "  ".join(f"{v:+.5f}" for v in vals))

print("\nProducts expand back into the basis: Q_2 * Q_3 = sum_k c_k Q_k")
for family in ("chebyshev", "legendre", "hermite", "laguerre"):
    c = linearize_product(BasisSpec(family, 1, identity), 2, 3)
    print(f"  {family:<10}", "  ".join(f"{v:+.4g}" for v in c))

print("\nGram matrix: moments route vs direct double sum (relative Frobenius error)")
rng = np.random.default_rng(0)
samples = {
    "uniform": rng.uniform(-2, 3, 800),
    "normal": rng.normal(1, 2, 800),
    "exponential": rng.exponential(1.5, 800),
}
print(f"  {'family':<10} " + " ".join(f"{k:>12}" for k in samples))
for family in ("chebyshev", "legendre", "hermite", "laguerre"):
    errs = []
    for pts in samples.values():
        spec = BasisSpec.fit(family, 10, pts)
        G = np.asarray(gram_from_moments(spec, accumulate_moments(spec, pts)).entries, dtype=float)
        D = direct_gram(spec, pts)
        errs.append(np.linalg.norm(G - D) / np.linalg.norm(D))
    print(f"  {family:<10} " + " ".join(f"{e:12.1e}" for e in errs))
