"""Per-observation score matching statistics and their empirical aggregates.

For an exponential family with sufficient statistics ``t`` and weights ``h``,
the quadratic empirical loss is built from

    Gamma(x) = sum_j h_j(x) * d_j t(x) d_j t(x)'        (r x r, PSD)
    g(x)     = -sum_j [ h_j(x) d_j b(x) d_j t(x)
                        + h_j(x) d_jj t(x) + d_j h_j(x) d_j t(x) ]

and the loss reads ``theta' Gamma theta / 2 - g' theta + lambda ||theta||_1``.
The sign convention is fixed so that the unpenalized minimizer is
``Gamma^-1 g``.
"""

from dataclasses import dataclass

import numpy as np

from . import models
from .exceptions import InputError


@dataclass(frozen=True)
class ScoreStats:
    """A (Gamma, g) pair for one observation or an aggregate."""

    gamma: np.ndarray
    g: np.ndarray

    def __post_init__(self):
        gamma = np.asarray(self.gamma, dtype=float)
        g = np.asarray(self.g, dtype=float)
        if gamma.shape != (g.size, g.size):
            raise InputError("gamma must be r x r matching g")
        object.__setattr__(self, "gamma", gamma)
        object.__setattr__(self, "g", g)

    @property
    def r(self) -> int:
        return self.g.size


def gamma_of_x(model: models.PairwiseModel, x) -> np.ndarray:
    """Evaluate Gamma(x) for a single interior observation."""
    x = np.asarray(x, dtype=float)
    dt, _, _ = models.stat_partials(model, x)
    h, _ = models.weight_h(model, x)
    return (dt * h) @ dt.T


def g_of_x(model: models.PairwiseModel, x) -> np.ndarray:
    """Evaluate g(x) for a single interior observation (b == 0 here)."""
    x = np.asarray(x, dtype=float)
    dt, ddt, db = models.stat_partials(model, x)
    h, dh = models.weight_h(model, x)
    return -(dt @ (h * db) + ddt @ h + dt @ dh)


def score_stats(model: models.PairwiseModel, x) -> ScoreStats:
    """Both statistics for one observation."""
    return ScoreStats(gamma=gamma_of_x(model, x), g=g_of_x(model, x))


def g_batch(model: models.PairwiseModel, X) -> np.ndarray:
    """g(x) for every row of ``X``, shape (n, r)."""
    X = np.asarray(X, dtype=float)
    dt, ddt, h, dh = models._batch_ingredients(model, X)
    return -(np.einsum("irj,ij->ir", ddt, h) + np.einsum("irj,ij->ir", dt, dh))


def gamma_mean(model: models.PairwiseModel, X) -> np.ndarray:
    """Arithmetic mean of Gamma(x) over the rows of ``X``.

    Never materializes the n per-observation r x r matrices.
    """
    X = np.asarray(X, dtype=float)
    dt, _, h, _ = models._batch_ingredients(model, X)
    return np.einsum("irj,ij,isj->rs", dt, h, dt) / X.shape[0]


def empirical_moments(model: models.PairwiseModel, X):
    """Plain empirical means (Gamma_bar, g_bar) over all observations."""
    X = np.asarray(X, dtype=float)
    if X.ndim != 2 or X.shape[0] < 1:
        raise InputError("X must be a nonempty n x m matrix")
    gamma_bar = gamma_mean(model, X)
    g_bar = g_batch(model, X).mean(axis=0)
    return gamma_bar, g_bar


def sm_objective(theta, gamma, g, lam: float = 0.0) -> float:
    """Quadratic score matching objective with optional l1 penalty."""
    theta = np.asarray(theta, dtype=float)
    gamma = np.asarray(gamma, dtype=float)
    g = np.asarray(g, dtype=float)
    if gamma.shape != (theta.size, theta.size) or g.shape != theta.shape:
        raise InputError("dimension mismatch")
    return float(0.5 * theta @ gamma @ theta - g @ theta + lam * np.abs(theta).sum())


def dump_stats_json(path, gamma, g):
    """Debug dump of an aggregate (Gamma, g) pair as JSON."""
    import json

    payload = {
        "r": int(np.asarray(g).size),
        "gamma": np.asarray(gamma, dtype=float).tolist(),
        "g": np.asarray(g, dtype=float).tolist(),
    }
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(payload, fh)
