"""Shared fixtures.

The session-scoped surface is the reference genus-2 configuration; the
variational stencils cache perturbed surfaces on first use, so the
expensive period-matrix quadratures run once per session.
"""

import numpy as np
import pytest

from schottkyvir.differentials import (
    LimitPointConfig,
    Surface,
    TruncationPolicy,
    get_surface,
    reference_params,
)
from schottkyvir.variations import FDConfig


@pytest.fixture(scope="session")
def params():
    return reference_params()


@pytest.fixture(scope="session")
def policy():
    return TruncationPolicy(max_word_length=8, tail_tol=1e-10, mode="adaptive")


@pytest.fixture(scope="session")
def surface(params, policy) -> Surface:
    return get_surface(params, policy)


@pytest.fixture(scope="session")
def fd() -> FDConfig:
    return FDConfig()


@pytest.fixture(scope="session")
def alt_surface(params, policy, surface) -> Surface:
    """Same surface, different quasiform limit points (one point swapped)."""
    h = surface.handles
    cfg = LimitPointConfig(points=(h[0].W, h[0].W_neg, h[1].W_neg))
    return get_surface(params, policy, cfg)


def circle_points(seed: int, n: int, radius: float = 6.0):
    rng = np.random.default_rng(seed)
    return tuple(radius * np.exp(2j * np.pi * rng.uniform(size=n)))


def circle_triples(seed: int, n: int, radius: float = 6.0):
    """Seeded triples with guaranteed angular separation (rotated thirds),
    keeping the pole-crossing finite-difference stencils well clear."""
    rng = np.random.default_rng(seed)
    out = []
    for theta in rng.uniform(0.0, 2.0 * np.pi, size=n):
        out.append(
            tuple(
                radius * np.exp(1j * (theta + k * 2.0 * np.pi / 3.0)) for k in range(3)
            )
        )
    return out
