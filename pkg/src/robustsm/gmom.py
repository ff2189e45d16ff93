"""Geometric median of means and concentration constants.

The geometric median is computed with Weiszfeld's fixed-point iteration,
modified as in Vardi & Zhang (2000) so that iterates do not get stuck on
input points.  The GMoM of ``n`` points with ``K`` blocks is the geometric
median of the ``K`` contiguous block means; ``K = 1`` recovers the sample
mean and ``K = n`` the geometric median itself.
"""

import math
from dataclasses import dataclass
from enum import Enum

import numpy as np

from .exceptions import (
    AssumptionViolatedError,
    ConvergenceError,
    InputError,
)


class RemainderPolicy(Enum):
    FOLD_INTO_LAST = "fold_into_last"
    DISCARD = "discard"


@dataclass(frozen=True)
class GmomConfig:
    K: int = 1
    tol: float = 1e-10
    max_iter: int = 10000
    remainder_policy: RemainderPolicy = RemainderPolicy.FOLD_INTO_LAST

    def __post_init__(self):
        if self.K < 1:
            raise InputError("K must be >= 1")
        if self.tol < 0:
            raise InputError("tol must be nonnegative")


def _as_point_matrix(points) -> np.ndarray:
    P = np.asarray(points, dtype=float)
    if P.ndim == 1:
        P = P[:, None]
    if P.ndim != 2 or P.shape[0] < 1:
        raise InputError("need at least one point")
    if not np.all(np.isfinite(P)):
        raise InputError("points must be finite")
    return P


def geometric_median(points, tol: float = 1e-10, max_iter: int = 10000):
    """Geometric median by the modified Weiszfeld iteration.

    Returns ``(median, weights)`` where the weights are the convex-combination
    coefficients from the fixed-point characterization (one-hot when the
    median coincides with an input point).
    """
    P = _as_point_matrix(points)
    k, p = P.shape
    if k == 1:
        return P[0].copy(), np.array([1.0])

    # robust scale: outliers must not loosen the stopping threshold
    center = np.median(P, axis=0)
    dists = np.linalg.norm(P - center, axis=1)
    scale = float(np.median(dists))
    if scale == 0.0:
        scale = float(dists.max())
    if scale == 0.0:  # all points identical
        return P[0].copy(), np.full(k, 1.0 / k)
    eps = 1e-12 * scale

    def snap_to_input(y):
        """Return the nearest input point exactly when it is optimal."""
        d_y = np.linalg.norm(P - y, axis=1)
        i0 = int(np.argmin(d_y))
        p0 = P[i0]
        d0 = np.linalg.norm(P - p0, axis=1)
        on = d0 <= eps
        others = ~on
        mult = float(np.count_nonzero(on))
        w = np.zeros(k)
        if not np.any(others):
            w[on] = 1.0 / mult
            return p0.copy(), w
        R = ((P[others] - p0) / d0[others, None]).sum(axis=0)
        if np.linalg.norm(R) <= mult and weiszfeld_objective(
            P, p0
        ) <= weiszfeld_objective(P, y) + eps:
            w[i0] = 1.0
            return p0.copy(), w
        return None

    y = P.mean(axis=0)
    for _ in range(max_iter):
        d = np.linalg.norm(P - y, axis=1)
        on = d <= eps
        if np.any(on):
            snapped = snap_to_input(y)
            if snapped is not None:
                return snapped
            # Vardi-Zhang corrected step away from a non-optimal input point
            others = ~on
            inv = 1.0 / d[others]
            R = ((P[others] - y) * inv[:, None]).sum(axis=0)
            rnorm = max(float(np.linalg.norm(R)), 1e-300)
            mult = float(np.count_nonzero(on))
            t_point = (P[others] * inv[:, None]).sum(axis=0) / inv.sum()
            step = min(1.0, mult / rnorm)
            y_new = (1.0 - step) * t_point + step * y
        else:
            inv = 1.0 / d
            y_new = (P * inv[:, None]).sum(axis=0) / inv.sum()
        if np.linalg.norm(y_new - y) <= tol * scale:
            y = y_new
            snapped = snap_to_input(y)
            if snapped is not None:
                return snapped
            d = np.maximum(np.linalg.norm(P - y, axis=1), eps)
            w = 1.0 / d
            w /= w.sum()
            return y, w
        y = y_new
    raise ConvergenceError(
        f"Weiszfeld did not converge in {max_iter} iterations", last_iterate=y
    )


def weiszfeld_objective(points, y) -> float:
    """Sum of Euclidean distances from ``y`` to the points."""
    P = _as_point_matrix(points)
    return float(np.linalg.norm(P - np.asarray(y, dtype=float), axis=1).sum())


def block_slices(n: int, K: int, remainder_policy=RemainderPolicy.FOLD_INTO_LAST):
    """Contiguous block index ranges for n points split into K blocks.

    Base block size is ``n // K``; with ``FOLD_INTO_LAST`` the ``n mod K``
    leftover points are appended one each to the last blocks, with
    ``DISCARD`` they are dropped.
    """
    if K < 1 or K > n:
        raise InputError("need 1 <= K <= n")
    base = n // K
    extra = n - base * K
    if remainder_policy is RemainderPolicy.DISCARD:
        return [(i * base, (i + 1) * base) for i in range(K)]
    slices = []
    start = 0
    for i in range(K):
        size = base + (1 if i >= K - extra else 0)
        slices.append((start, start + size))
        start += size
    return slices


def block_means(points, K: int, remainder_policy=RemainderPolicy.FOLD_INTO_LAST):
    """Arithmetic means of the K contiguous blocks, in input order."""
    P = _as_point_matrix(points)
    return np.stack(
        [P[a:b].mean(axis=0) for a, b in block_slices(P.shape[0], K, remainder_policy)]
    )


def gmom(points, cfg: GmomConfig = GmomConfig()):
    """Geometric median of the K block means."""
    P = _as_point_matrix(points)
    mus = block_means(P, cfg.K, cfg.remainder_policy)
    if cfg.K == 1:
        return mus[0]
    median, _ = geometric_median(mus, tol=cfg.tol, max_iter=cfg.max_iter)
    return median


def gmom_stats(stats, cfg: GmomConfig = GmomConfig()):
    """GMoM aggregation of per-observation (Gamma, g) statistics.

    Each Gamma is vectorized to length r^2 for the geometric median and the
    result reshaped back (and symmetrized against round-off).
    """
    if len(stats) == 0:
        raise InputError("need at least one ScoreStats")
    r = stats[0].r
    if any(s.r != r for s in stats):
        raise InputError("inconsistent parameter counts")
    gammas = np.stack([s.gamma.ravel() for s in stats])
    gs = np.stack([s.g for s in stats])
    gamma_hat = gmom(gammas, cfg).reshape(r, r)
    gamma_hat = 0.5 * (gamma_hat + gamma_hat.T)
    g_hat = gmom(gs, cfg)
    return gamma_hat, g_hat


def gmom_arrays(gammas, gs, cfg: GmomConfig = GmomConfig()):
    """Like :func:`gmom_stats` but on pre-stacked arrays.

    ``gammas`` may be the n x r x r per-observation stack or any n x d point
    cloud; ``gs`` is n x r.
    """
    gammas = np.asarray(gammas, dtype=float)
    r = gammas.shape[-1]
    flat = gammas.reshape(gammas.shape[0], -1)
    gamma_hat = gmom(flat, cfg).reshape(r, r)
    gamma_hat = 0.5 * (gamma_hat + gamma_hat.T)
    g_hat = gmom(np.asarray(gs, dtype=float), cfg)
    return gamma_hat, g_hat


def psi(alpha: float, p: float) -> float:
    """Binary KL-type rate function used by the concentration constants."""
    if not (0.0 < p < 1.0 and 0.0 < alpha < 1.0):
        raise InputError("psi requires alpha, p in (0, 1)")
    return (1.0 - alpha) * math.log((1.0 - alpha) / (1.0 - p)) + alpha * math.log(
        alpha / p
    )


def c_alpha(alpha: float) -> float:
    """Aggregation constant C_alpha = (1 - alpha)/sqrt(1 - 2 alpha)."""
    if not (0.0 < alpha < 0.5):
        raise InputError("c_alpha requires alpha in (0, 1/2)")
    return (1.0 - alpha) / math.sqrt(1.0 - 2.0 * alpha)


@dataclass(frozen=True)
class ConcentrationParams:
    delta: float
    tau: float
    k_tau: float
    c_tau: float
    K: int
    n_c: int


def concentration_params(delta: float, tau: float) -> ConcentrationParams:
    """Closed-form concentration constants for confidence delta and corruption tau.

    ``k(tau) = 1/[(1-tau) psi((1/2-tau)^2/(1-tau), (1/2-tau)^2/2)]``,
    ``c(tau) = 2(3/4 - tau^2) / [(1/2-tau) sqrt(1/2 - 2 tau^2)
    sqrt((1-tau) psi(...))]``, ``K = floor(k(tau) log(1/delta)) + 1`` and
    ``n_c = tau (floor(17 log(1/delta)) + 1)`` corrupted samples are allowed.
    """
    if not (0.0 < delta <= 1.0):
        raise InputError("delta must be in (0, 1]")
    if not (0.0 <= tau < 0.5):
        raise InputError("tau must be in [0, 1/2)")
    half = 0.5 - tau
    p = 0.5 * half**2
    alpha_arg = half**2 / (1.0 - tau)
    base = (1.0 - tau) * psi(alpha_arg, p)
    k_tau = 1.0 / base
    c_tau = 2.0 * (0.75 - tau**2) / (half * math.sqrt(0.5 - 2.0 * tau**2) * math.sqrt(base))
    log_inv_delta = math.log(1.0 / delta)
    K = int(math.floor(k_tau * log_inv_delta)) + 1
    n_c = int(tau * (math.floor(17.0 * log_inv_delta) + 1))
    return ConcentrationParams(delta=delta, tau=tau, k_tau=k_tau, c_tau=c_tau, K=K, n_c=n_c)


def concentration_radius(params: ConcentrationParams, n: int, trace_sigma: float) -> float:
    """High-probability radius c(tau) sqrt(log(4/((1-tau)^2 delta)) tr(Sigma)/n)."""
    if trace_sigma < 0:
        raise InputError("trace_sigma must be nonnegative")
    if n < 2 * params.K:
        raise AssumptionViolatedError("theorem requires K <= n/2")
    log_term = math.log(4.0 / ((1.0 - params.tau) ** 2 * params.delta))
    return params.c_tau * math.sqrt(log_term * trace_sigma / n)
