"""Seeded random configurations for property sweeps.

All draws come from a counter-based Philox stream keyed by one integer seed.
"""

from __future__ import annotations

import numpy as np

from .model import EnsembleConfig, TaskVector
from .potential import curvature


def make_rng(seed: int) -> np.random.Generator:
    return np.random.Generator(np.random.Philox(key=int(seed)))


def random_fractions(rng: np.random.Generator, M: int, floor: float = 0.02) -> np.ndarray:
    eta = rng.dirichlet(np.ones(M)) * (1 - M * floor) + floor
    eta[-1] = 1.0 - np.sum(eta[:-1])
    return eta


def random_couplings(rng: np.random.Generator, M: int, floor: float = 0.05) -> np.ndarray:
    while True:
        c = rng.normal(size=M)
        c /= np.linalg.norm(c)
        if np.all(np.abs(c) > floor):
            return c


def random_stable_config(
    rng: np.random.Generator,
    M: int | None = None,
    M_range: tuple[int, int] = (1, 6),
    N: int = 1000,
    min_curvature: float = 0.02,
    min_abs_cos: float = 0.0,
    theta_max: float = 2 * np.pi,
) -> EnsembleConfig:
    """Rejection-sample a configuration with curvature above ``min_curvature``."""
    if M is None:
        M = int(rng.integers(M_range[0], M_range[1] + 1))
    while True:
        eta = random_fractions(rng, M)
        c = random_couplings(rng, M)
        theta = float(rng.uniform(-theta_max, theta_max))
        cfg = EnsembleConfig(M=M, N=N, eta=eta, c=c, theta=theta)
        if curvature(cfg, theta) <= min_curvature:
            continue
        if np.min(np.abs(np.cos(c * theta))) <= min_abs_cos:
            continue
        return cfg


def random_task(rng: np.random.Generator, M: int, floor: float = 1e-3) -> TaskVector:
    while True:
        n = rng.normal(size=M)
        n /= np.linalg.norm(n)
        if np.all(np.abs(n) > floor):
            return TaskVector.normalized(n)
