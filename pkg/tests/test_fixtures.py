"""Shared helpers for the test suite."""

import numpy as np

from precond.experiments import SIGMA_PI as SIGMA_PI_FIXTURE

__all__ = ["SIGMA_PI_FIXTURE", "random_spd"]


def random_spd(rng: np.random.Generator, d: int, spread: float = 1.0) -> np.ndarray:
    a = rng.standard_normal((d, d))
    return a @ a.T + (0.1 + spread) * np.eye(d)
