"""Sparse functional principal components by restricted maximum likelihood.

The heavy lifting happens in the compiled ``_fpca`` extension. Functions that
produce reports return plain dicts following the JSON schemas in the README.
"""

import json

from ._fpca import (
    Basis,
    Dataset,
    DataError,
    FpcaError,
    NoModelError,
    exp_skew,
    fev_prune,
    geodesic_step,
    load_csv,
    parse_csv,
    project_to_tangent,
)
from . import _fpca

__all__ = [
    "Basis",
    "Dataset",
    "DataError",
    "FpcaError",
    "NoModelError",
    "benchmark",
    "exp_skew",
    "fev_prune",
    "fit",
    "generate",
    "geodesic_step",
    "load_csv",
    "parse_csv",
    "project_to_tangent",
    "select",
]


def generate(setting, n, seed, noise_variance=1.0 / 16.0, noise="gaussian"):
    """Simulate ``n`` curves; returns ``(Dataset, truth dict)``."""
    data, truth = _fpca.generate(setting, n, seed, noise_variance, noise)
    return data, json.loads(truth)


def fit(data, num_basis, rank, *, tol=1e-4, max_iter=100, mean_bandwidth=None, cv=True,
        grid_size=201):
    """Fit one (M, r) cell. Returns the ``fpca.fit/1`` document as a dict."""
    return json.loads(_fpca.fit(data, num_basis, rank, tol, max_iter, mean_bandwidth, cv, grid_size))


def select(data, m_grid, r_grid, *, kappas=(), tol=1e-4, max_iter=100, mean_bandwidth=None):
    """Grid search over (M, r) by approximate CV. Returns ``fpca.select/1``."""
    return json.loads(
        _fpca.select(data, list(m_grid), list(r_grid), list(kappas), tol, max_iter, mean_bandwidth))


def benchmark(setting, n, replicates, m_grid, r_grid, seed, noise_variance=1.0 / 16.0,
              noise="gaussian"):
    """Seeded simulation study. Returns ``fpca.bench/1``."""
    return json.loads(
        _fpca.benchmark(setting, n, replicates, list(m_grid), list(r_grid), seed, noise_variance,
                        noise))
