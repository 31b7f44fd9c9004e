"""Conditional outcome distributions on synthetic bags.

Each bag has one outcome y ~ U[-1, 1] and N observations x = y + R * eps with
eps ~ U[-1, 1]. Given a query x, the true posterior of y is uniform on
[x - R, x + R] clipped to [-1, 1]. The two-step model recovers it: per-bag
Christoffel functions in x weight the outcomes, and the weighted outcome
measure yields lambda(y | x) and a set of outcomes with probabilities.

Pass --full for the large configuration (M = 10000, N = 1000, d = 10); it
runs in well under a minute.
"""
import sys
import warnings

import numpy as np

from christoffel_dr import SynthConfig, TwoStepModel, conditional_lambda, generate, rule_mean

full = "--full" in sys.argv
M, N, d = (10_000, 1_000, 10) if full else (2_000, 200, 8)
grid = np.linspace(-1, 1, 201)

for R in (0.1, 0.5):
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        model = TwoStepModel(generate(SynthConfig(M=M, N=N, R=R, seed=0), dx=d, dy=d))
    uncond = conditional_lambda(model.unconditional(), grid)
    print(f"R = {R}, M = {M}, N = {N}, d_x = d_y = {d}")
    for x in (-0.5, 0.0, 0.5):
        cm = model.conditional(x)
        lam = conditional_lambda(cm, grid)
        ratio = lam / uncond
        half = lam >= 0.5 * lam.max()
        lo, hi = max(x - R, -1), min(x + R, 1)
        dist = model.outcomes(x)
        print(f"  x = {x:+.1f}: argmax lambda(y|x) at y = {grid[np.argmax(lam)]:+.2f}, "
              f"half-height width {grid[half].max() - grid[half].min():.2f} (support width {hi - lo:.2f}), "
              f"max ratio {ratio.max():.1f}")
        print(f"    outcome mean {rule_mean(dist):+.4f} vs posterior mean {(lo + hi) / 2:+.4f}")
        for node, p in zip(dist.nodes, dist.probabilities):
            if p > 0.01:
                print(f"      y = {node:+.4f}  p = {p:.3f}")
    print()
