"""Shared test helpers: independent process simulators used as oracles.

These deliberately avoid the package's own recursion code so that
parameter-recovery tests check the implementation against a separately
written generator.
"""

from __future__ import annotations

import sys
from pathlib import Path

import numpy as np

sys.path.insert(0, str(Path(__file__).resolve().parent.parent / "src"))


def simulate_arma(
    n: int,
    phi: tuple[float, ...] = (),
    theta: tuple[float, ...] = (),
    sigma: float = 1.0,
    mean: float = 0.0,
    seed: int = 0,
    burn: int = 200,
) -> np.ndarray:
    """Simulate a Gaussian ARMA(p,q) path, discarding a burn-in."""
    rng = np.random.default_rng(seed)
    p, q = len(phi), len(theta)
    total = n + burn
    eps = rng.normal(0.0, sigma, total)
    y = np.zeros(total)
    for t in range(total):
        val = eps[t]
        for i in range(p):
            if t - 1 - i >= 0:
                val += phi[i] * y[t - 1 - i]
        for j in range(q):
            if t - 1 - j >= 0:
                val += theta[j] * eps[t - 1 - j]
        y[t] = val
    return y[burn:] + mean
