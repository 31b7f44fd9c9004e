"""Synthetic bags: ``y ~ U[-1, 1]``, ``x_j = y + R * eps_j`` with ``eps_j ~ U[-1, 1]``."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .dist_reg import Bag, Dataset

__all__ = ["SynthConfig", "GENERATOR", "generate_bags", "generate"]

# Recorded in dataset file headers so files can be regenerated elsewhere.
GENERATOR = "numpy.random.Generator(PCG64(SeedSequence(seed))); y=uniform(-1,1,M); eps=uniform(-1,1,(M,N))"


@dataclass(frozen=True)
class SynthConfig:
    M: int = 10_000
    N: int = 1_000
    R: float = 0.5
    seed: int = 0

    def __post_init__(self):
        if self.M < 1 or self.N < 1:
            raise ValueError("M and N must be positive")
        if not self.R >= 0:
            raise ValueError("R must be nonnegative")


def generate_bags(cfg: SynthConfig) -> list[Bag]:
    rng = np.random.default_rng(cfg.seed)
    ys = rng.uniform(-1.0, 1.0, cfg.M)
    eps = rng.uniform(-1.0, 1.0, (cfg.M, cfg.N))
    xs = ys[:, None] + cfg.R * eps
    return [Bag(str(l), xs[l], ys[l]) for l in range(cfg.M)]


def generate(cfg: SynthConfig, dx: int = 10, dy: int = 10, family="chebyshev") -> Dataset:
    """Generate bags and attach bases fitted to them.

    ``R = 0`` gives bags with a single distinct x; only ``dx = 1`` works then.
    """
    return Dataset.build(generate_bags(cfg), dx, dy, family)
