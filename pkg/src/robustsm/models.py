"""Pairwise interaction exponential families and their samplers.

Two families are shipped:

* ``Family.GAUSSIAN`` on the real line, density proportional to
  ``exp(-x' Theta x / 2 + eta' x)`` so that ``Theta`` is the precision matrix.
* ``Family.SQUARE_ROOT`` on the nonnegative orthant, density proportional to
  ``exp(-sum_i Theta_ii x_i + sum_{i<j} 2 Theta_ij sqrt(x_i x_j)
  + sum_i 2 eta_i sqrt(x_i))``.

Parameter flattening convention (used by every module): the ``r`` =
``m(m+1)/2 + m`` parameters are ordered as the upper triangle of ``Theta``
row-major including the diagonal (Theta_11, Theta_12, ..., Theta_1m,
Theta_22, ..., Theta_mm) followed by eta_1, ..., eta_m.  By the dummy-variable
convention Theta_ji := Theta_ij, the off-diagonal parameter Theta_ij carries
the sufficient statistics of both the (i, j) and (j, i) interaction term.
"""

from dataclasses import dataclass, field
from enum import Enum

import numpy as np
from scipy.special import erf

from .exceptions import DomainViolationError, InputError, ModelError, SingularPointError

DEFAULT_BURN_IN = 1000
DEFAULT_THIN = 1
_MAX_PARALLEL_CHAINS = 4096


class Family(Enum):
    SQUARE_ROOT = "square_root"
    GAUSSIAN = "gaussian"


class Support(Enum):
    REAL_LINE = "real_line"
    NONNEG_ORTHANT = "nonneg_orthant"


@dataclass(frozen=True)
class DomainSpec:
    support: Support
    dimension: int


@dataclass(frozen=True)
class PairwiseModel:
    """A pairwise interaction model (family, Theta, eta, weight exponent).

    ``weight_exponent`` defines the dampening weights ``h_j(x) = x_j**e`` for
    the square root family; it is ignored for the Gaussian family where
    ``h == 1``.
    """

    family: Family
    theta: np.ndarray
    eta: np.ndarray
    weight_exponent: float = 1.5

    def __post_init__(self):
        theta = np.asarray(self.theta, dtype=float)
        eta = np.asarray(self.eta, dtype=float)
        if theta.ndim != 2 or theta.shape[0] != theta.shape[1]:
            raise InputError("theta must be a square matrix")
        if not np.allclose(theta, theta.T, atol=1e-12, rtol=0.0):
            raise InputError("theta must be symmetric")
        if eta.shape != (theta.shape[0],):
            raise InputError("eta length must match theta dimension")
        if self.weight_exponent < 0:
            raise InputError("weight_exponent must be nonnegative")
        object.__setattr__(self, "theta", theta)
        object.__setattr__(self, "eta", eta)

    @property
    def m(self) -> int:
        return self.theta.shape[0]

    @property
    def r(self) -> int:
        return param_count(self.m)

    @property
    def domain(self) -> DomainSpec:
        support = (
            Support.NONNEG_ORTHANT
            if self.family is Family.SQUARE_ROOT
            else Support.REAL_LINE
        )
        return DomainSpec(support=support, dimension=self.m)

    def theta_vector(self) -> np.ndarray:
        """The model's own parameters under the global flattening."""
        return pack_params(self.theta, self.eta)


def param_count(m: int) -> int:
    """Number of free parameters r = m(m+1)/2 + m."""
    return m * (m + 1) // 2 + m


def upper_triangle_indices(m: int):
    """Row/column index arrays of the upper triangle, row-major with diagonal."""
    return np.triu_indices(m)


def pack_params(theta_mat, eta) -> np.ndarray:
    """Flatten (Theta, eta) into the documented parameter ordering."""
    theta_mat = np.asarray(theta_mat, dtype=float)
    eta = np.asarray(eta, dtype=float)
    iu, ju = upper_triangle_indices(theta_mat.shape[0])
    return np.concatenate([theta_mat[iu, ju], eta])


def unpack_params(theta_vec, m: int):
    """Inverse of :func:`pack_params`; returns (Theta, eta) with Theta symmetric."""
    theta_vec = np.asarray(theta_vec, dtype=float)
    if theta_vec.shape != (param_count(m),):
        raise InputError(f"parameter vector must have length {param_count(m)}")
    n_tri = m * (m + 1) // 2
    theta_mat = np.zeros((m, m))
    iu, ju = upper_triangle_indices(m)
    theta_mat[iu, ju] = theta_vec[:n_tri]
    theta_mat = theta_mat + theta_mat.T - np.diag(np.diag(theta_mat))
    return theta_mat, theta_vec[n_tri:].copy()


def _check_domain(model: PairwiseModel, x: np.ndarray, interior: bool = False):
    if x.shape != (model.m,):
        raise InputError(f"x must have length {model.m}")
    if not np.all(np.isfinite(x)):
        raise InputError("x must be finite")
    if model.family is Family.SQUARE_ROOT:
        if np.any(x < 0):
            raise DomainViolationError("square root model requires x >= 0")
        if interior and np.any(x == 0):
            raise SingularPointError(
                "sqrt derivatives diverge at x_j = 0; need strictly positive x"
            )


def log_density_unnorm(model: PairwiseModel, x) -> float:
    """Log density exponent without the normalizing constant.

    Gaussian: ``-x' Theta x / 2 + eta' x``.  Square root:
    ``-sum_i Theta_ii x_i + sum_{i<j} 2 Theta_ij sqrt(x_i x_j) +
    sum_i 2 eta_i sqrt(x_i)``.
    """
    x = np.asarray(x, dtype=float)
    _check_domain(model, x)
    if model.family is Family.GAUSSIAN:
        return float(-0.5 * x @ model.theta @ x + model.eta @ x)
    s = np.sqrt(x)
    off = model.theta - np.diag(np.diag(model.theta))
    return float(
        -np.diag(model.theta) @ x + s @ off @ s + 2.0 * model.eta @ s
    )


def _param_index_grids(m: int):
    """Index helpers for the flattening: for each variable j, the parameter
    positions that involve j and the companion variable index."""
    iu, ju = upper_triangle_indices(m)
    n_tri = iu.size
    per_var = []
    for j in range(m):
        mask = (iu == j) | (ju == j)
        pos = np.nonzero(mask)[0]
        other = np.where(iu[pos] == j, ju[pos], iu[pos])
        per_var.append((pos, other))
    return n_tri, per_var


def stat_partials(model: PairwiseModel, x):
    """First and second partial derivatives of the sufficient statistics.

    Returns ``(dt, ddt, db)`` with ``dt[k, j] = d t_k / d x_j``,
    ``ddt[k, j] = d^2 t_k / d x_j^2`` and ``db[j] = d b / d x_j``
    (``b == 0`` for both shipped families).
    """
    x = np.asarray(x, dtype=float)
    _check_domain(model, x, interior=True)
    dt, ddt, h, dh = _batch_ingredients(model, x[None, :])
    db = np.zeros(model.m)
    return dt[0], ddt[0], db


def weight_h(model: PairwiseModel, x):
    """Weight functions ``h_j`` and their derivatives ``dh_j = d h_j / d x_j``."""
    x = np.asarray(x, dtype=float)
    _check_domain(model, x)
    if model.family is Family.GAUSSIAN:
        return np.ones(model.m), np.zeros(model.m)
    e = model.weight_exponent
    if e == 0.0:
        return np.ones(model.m), np.zeros(model.m)
    with np.errstate(divide="ignore"):
        h = x**e
        dh = e * np.where(x > 0, x ** (e - 1.0), np.inf if e < 1 else 0.0)
    if e == 1.0:
        dh = np.full(model.m, e)
    return h, dh


def _batch_ingredients(model: PairwiseModel, X):
    """Vectorized partials and weights for a batch of interior observations.

    Returns ``dt`` and ``ddt`` of shape ``(n, r, m)`` plus ``h``/``dh`` of
    shape ``(n, m)``.  Used by the score statistics module.
    """
    X = np.asarray(X, dtype=float)
    n, m = X.shape
    r = param_count(m)
    n_tri, per_var = _param_index_grids(m)
    dt = np.zeros((n, r, m))
    ddt = np.zeros((n, r, m))
    if model.family is Family.GAUSSIAN:
        # t_ii = -x_i^2/2, t_ij = -x_i x_j (i<j), t_eta_i = x_i
        for j, (pos, other) in enumerate(per_var):
            for p, o in zip(pos, other):
                if o == j:
                    dt[:, p, j] = -X[:, j]
                    ddt[:, p, j] = -1.0
                else:
                    dt[:, p, j] = -X[:, o]
        for j in range(m):
            dt[:, n_tri + j, j] = 1.0
        h = np.ones((n, m))
        dh = np.zeros((n, m))
        return dt, ddt, h, dh

    if np.any(X <= 0):
        raise SingularPointError(
            "sqrt derivatives diverge at x_j = 0; need strictly positive x"
        )
    s = np.sqrt(X)
    # t_ii = -x_i, t_ij = 2 sqrt(x_i x_j) (i<j), t_eta_i = 2 sqrt(x_i)
    for j, (pos, other) in enumerate(per_var):
        for p, o in zip(pos, other):
            if o == j:
                dt[:, p, j] = -1.0
            else:
                dt[:, p, j] = s[:, o] / s[:, j]
                ddt[:, p, j] = -0.5 * s[:, o] / (X[:, j] * s[:, j])
    for j in range(m):
        dt[:, n_tri + j, j] = 1.0 / s[:, j]
        ddt[:, n_tri + j, j] = -0.5 / (X[:, j] * s[:, j])
    e = model.weight_exponent
    h = X**e
    dh = e * X ** (e - 1.0) if e != 0.0 else np.zeros((n, m))
    return dt, ddt, h, dh


def _require_sqr_normalizable(model: PairwiseModel):
    diag = np.diag(model.theta)
    offsum = np.abs(model.theta).sum(axis=1) - np.abs(diag)
    if np.any(diag <= 0) or np.any(offsum >= diag):
        raise ModelError(
            "square root sampler requires Theta_ii > 0 and strict diagonal dominance"
        )


def sample_gaussian(model: PairwiseModel, n: int, rng) -> np.ndarray:
    """Draw ``n`` i.i.d. samples from N(Theta^-1 eta, Theta^-1)."""
    if model.family is not Family.GAUSSIAN:
        raise ModelError("sample_gaussian requires a Gaussian model")
    try:
        L = np.linalg.cholesky(model.theta)
    except np.linalg.LinAlgError as exc:
        raise ModelError("Theta must be positive definite") from exc
    mean = np.linalg.solve(model.theta, model.eta)
    z = rng.standard_normal((n, model.m))
    # x = mean + L^-T z has covariance Theta^-1
    return mean + np.linalg.solve(L.T, z.T).T


def _sample_sqrt_conditional(s, rng, max_rounds=200):
    """Exact draws from the density f(w) ~ w * exp(-(w - s)^2) on w >= 0.

    Vectorized over the shift array ``s``; used by the Gibbs sampler after
    standardizing the conditional of u = sqrt(x_i) to unit curvature.
    """
    s = np.asarray(s, dtype=float)
    out = np.empty_like(s)
    pending = np.ones(s.shape, dtype=bool)
    for _ in range(max_rounds):
        idx = np.nonzero(pending)[0]
        if idx.size == 0:
            return out
        si = s[idx]
        w = np.empty(idx.size)
        ok = np.zeros(idx.size, dtype=bool)

        pos = si >= 0.0
        if np.any(pos):
            sp = si[pos]
            # proposal ~ (s + |v|) exp(-v^2): normal vs two-sided Weibull mixture
            w_normal = sp * np.sqrt(np.pi)
            pick_normal = rng.random(sp.size) * (w_normal + 1.0) < w_normal
            v = np.where(
                pick_normal,
                rng.standard_normal(sp.size) / np.sqrt(2.0),
                np.sqrt(rng.exponential(size=sp.size))
                * np.where(rng.random(sp.size) < 0.5, 1.0, -1.0),
            )
            acc = (v >= -sp) & (
                rng.random(sp.size) * (sp + np.abs(v)) <= sp + v
            )
            w[pos] = sp + v
            ok[pos] = acc

        mild = (si < 0.0) & (si >= -1.0)
        if np.any(mild):
            sm = si[mild]
            # Rayleigh proposal 2 w exp(-w^2); acceptance exp(2 s w) <= 1
            cand = np.sqrt(rng.exponential(size=sm.size))
            acc = rng.random(sm.size) <= np.exp(2.0 * sm * cand)
            w[mild] = cand
            ok[mild] = acc

        hard = si < -1.0
        if np.any(hard):
            sh = si[hard]
            # Gamma(2, -2s) proposal w exp(2 s w); acceptance exp(-w^2) <= 1
            cand = rng.gamma(2.0, size=sh.size) / (-2.0 * sh)
            acc = rng.random(sh.size) <= np.exp(-cand * cand)
            w[hard] = cand
            ok[hard] = acc

        done = idx[ok]
        out[done] = w[ok]
        pending[done] = False
    # Rejection acceptance is bounded below for every s; fall back to a
    # closed-form-CDF bisection for any stragglers.
    idx = np.nonzero(pending)[0]
    out[idx] = _conditional_icdf(s[idx], rng.random(idx.size))
    return out


def _conditional_icdf(s, u, iters=80):
    """Inverse CDF of w*exp(-(w-s)^2) on [0, inf) by bisection.

    The unnormalized CDF has the closed form
    ``F(x) = (exp(-s^2) - exp(-(x-s)^2))/2 + s*sqrt(pi)/2*(erf(x-s)+erf(s))``.
    """
    s = np.atleast_1d(np.asarray(s, dtype=float))
    u = np.atleast_1d(np.asarray(u, dtype=float))

    def cdf_un(x):
        return 0.5 * (np.exp(-s * s) - np.exp(-((x - s) ** 2))) + (
            s * np.sqrt(np.pi) / 2.0
        ) * (erf(x - s) + erf(s))

    hi = np.maximum(s, 0.0) + 10.0
    total = cdf_un(hi)
    target = u * total
    lo = np.zeros_like(s)
    for _ in range(iters):
        mid = 0.5 * (lo + hi)
        below = cdf_un(mid) < target
        lo = np.where(below, mid, lo)
        hi = np.where(below, hi, mid)
    return 0.5 * (lo + hi)


def sample_sqr_gibbs(
    model: PairwiseModel,
    n: int,
    burn_in: int = DEFAULT_BURN_IN,
    thin: int = DEFAULT_THIN,
    rng=None,
) -> np.ndarray:
    """Approximate draws from the square root model via systematic-scan Gibbs.

    The conditional of ``u = sqrt(x_i)`` given the rest has density
    proportional to ``u * exp(-Theta_ii (u - c/Theta_ii)^2)`` on ``u >= 0``
    with ``c = eta_i + sum_{j != i} Theta_ij sqrt(x_j)``; it is sampled
    exactly.  Many independent chains are run in parallel (each burned in for
    ``burn_in`` full scans) and ``thin`` scans separate consecutive
    collections from the same chain.
    """
    if model.family is not Family.SQUARE_ROOT:
        raise ModelError("sample_sqr_gibbs requires a square root model")
    _require_sqr_normalizable(model)
    if rng is None:
        rng = np.random.default_rng()
    if n < 1:
        raise InputError("n must be >= 1")
    m = model.m
    diag = np.diag(model.theta)
    off = model.theta - np.diag(diag)
    sqrt_a = np.sqrt(diag)

    chains = min(n, _MAX_PARALLEL_CHAINS)
    # init at the independent-coordinates mean scale
    s_state = np.sqrt(rng.exponential(size=(chains, m)) / diag)

    def scan(s_state):
        for i in range(m):
            c = model.eta[i] + s_state @ off[:, i]
            shift = c / sqrt_a[i]  # s parameter of the standardized conditional
            w = _sample_sqrt_conditional(shift, rng)
            s_state[:, i] = w / sqrt_a[i]
        return s_state

    for _ in range(burn_in):
        s_state = scan(s_state)

    samples = np.empty((n, m))
    filled = 0
    first = True
    while filled < n:
        if not first:
            for _ in range(max(thin, 1)):
                s_state = scan(s_state)
        first = False
        take = min(chains, n - filled)
        samples[filled : filled + take] = s_state[:take] ** 2
        filled += take
    return samples


def sample(model: PairwiseModel, n: int, rng, burn_in: int = DEFAULT_BURN_IN, thin: int = DEFAULT_THIN):
    """Family dispatch for sampling."""
    if model.family is Family.GAUSSIAN:
        return sample_gaussian(model, n, rng)
    return sample_sqr_gibbs(model, n, burn_in=burn_in, thin=thin, rng=rng)


def save_observations_csv(path, X):
    """Write an observation matrix as CSV with an ``x1,...,xm`` header."""
    X = np.asarray(X, dtype=float)
    header = ",".join(f"x{j + 1}" for j in range(X.shape[1]))
    np.savetxt(path, X, delimiter=",", header=header, comments="", fmt="%.17g")


def load_observations_csv(path) -> np.ndarray:
    """Read an observation matrix written by :func:`save_observations_csv`."""
    return np.loadtxt(path, delimiter=",", skiprows=1, ndmin=2)
