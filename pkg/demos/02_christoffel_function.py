"""The Christoffel function as a local observation count.

lambda(y) = 1 / K(y, y) is large where the sample is dense and small where it
is sparse. Its total over the Gauss nodes equals the number of observations.
"""
import numpy as np

from christoffel_dr import BasisSpec, accumulate_moments, christoffel, factorize, gauss_rule, gram_from_moments, ygram_from_moments

rng = np.random.default_rng(1)
# two clusters with a 3:1 population ratio
ys = np.concatenate([rng.normal(-0.5, 0.15, 1500), rng.normal(0.6, 0.1, 500)])
spec = BasisSpec.fit("chebyshev", 12, ys)
moments = accumulate_moments(spec, ys)
gram = gram_from_moments(spec, moments)
state = factorize(gram)

print(f"M = {ys.size}, d = {spec.degree}, Gram condition estimate {state.condition_estimate:.3g}\n")
print(f"{'y':>6} {'lambda(y)':>12} {'points within 0.05':>20}")
for y in np.linspace(-1.0, 1.0, 11):
    count = np.sum(np.abs(ys - y) < 0.05)
    print(f"{y:6.2f} {christoffel(state, y):12.2f} {count:20d}")

rule = gauss_rule(gram, ygram_from_moments(spec, moments), state)
print(f"\nsum of lambda over the {spec.degree} Gauss nodes: {rule.total_mass:.10f}")
