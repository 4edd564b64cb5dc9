"""Synthetic datasets: the two-course GPA mixture and two-class Gaussian blobs."""

import numpy as np

from .errors import ArgumentError
from .models import UnivariateGaussian
from .rng import make_rng

GPA_MATH = UnivariateGaussian(3.7, 0.5)
GPA_STATS = UnivariateGaussian(2.8, 0.15)
GPA_CLIP = (0.0, 4.0)


def gpa_dataset(n_per_class, seed):
    """2n GPAs: n from N(3.7, 0.5) and n from N(2.8, 0.15), clipped to [0, 4].

    Streams: (0,) math scores, (1,) stats scores, (2,) the shuffle.
    """
    n = int(n_per_class)
    if n < 1:
        raise ArgumentError("n_per_class must be >= 1")
    math_x = np.clip(GPA_MATH.mu + GPA_MATH.sigma * make_rng(seed, 0).standard_normal(n), *GPA_CLIP)
    stats_x = np.clip(GPA_STATS.mu + GPA_STATS.sigma * make_rng(seed, 1).standard_normal(n), *GPA_CLIP)
    x = np.concatenate([math_x, stats_x])
    return x[make_rng(seed, 2).permutation(x.size)]


def blobs(n_per_class, seed, separation=3.0, dim=2, scale=1.0):
    """Two isotropic Gaussian classes centred at -/+ separation/2 along the first axis.

    Returns (X, y) with X of shape (2n, dim) and labels in {0, 1}, shuffled.
    """
    n = int(n_per_class)
    if n < 1:
        raise ArgumentError("n_per_class must be >= 1")
    c = np.zeros(dim)
    c[0] = separation / 2
    X0 = -c + scale * make_rng(seed, 0).standard_normal((n, dim))
    X1 = c + scale * make_rng(seed, 1).standard_normal((n, dim))
    X = np.vstack([X0, X1])
    y = np.concatenate([np.zeros(n, dtype=int), np.ones(n, dtype=int)])
    perm = make_rng(seed, 2).permutation(2 * n)
    return X[perm], y[perm]
