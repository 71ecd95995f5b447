"""Shared oracles and samplers for the test suite."""

import numpy as np
import pytest

from grouprisk import DiscreteRandomVariable


def random_variable(rng, max_atoms=20, min_atoms=2):
    """Random discrete variable with bounded-away-from-zero probabilities."""
    n = int(rng.integers(min_atoms, max_atoms + 1))
    values = rng.uniform(-10.0, 10.0, n)
    weights = rng.uniform(0.05, 1.0, n)
    return DiscreteRandomVariable(values, weights / weights.sum())


def grid_cvar(Z, alpha, n_points=100_000):
    """Dense-grid minimisation of the variational expression.

    Independent oracle: evaluates r + E[(Z - r)+]/(1 - alpha) over a
    uniform grid spanning the support, augmented with the atom values
    (the objective is piecewise linear, so its kinks are the only
    candidate minimisers a uniform grid can miss).  Suffix sums over the
    sorted, unmerged atoms keep the sweep fast.
    """
    v, p = Z.support()
    order = np.argsort(v, kind="mergesort")
    v, p = v[order], p[order]
    suffix_p = np.concatenate([np.cumsum(p[::-1])[::-1], [0.0]])
    suffix_pv = np.concatenate([np.cumsum((p * v)[::-1])[::-1], [0.0]])
    grid = np.union1d(np.linspace(v.min(), v.max(), n_points), v)
    idx = np.searchsorted(v, grid, side="right")
    f = grid + (suffix_pv[idx] - grid * suffix_p[idx]) / (1.0 - alpha)
    return float(f.min())


@pytest.fixture
def rng():
    return np.random.default_rng(20240817)
