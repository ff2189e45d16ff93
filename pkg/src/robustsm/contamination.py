"""Rowwise contamination injectors.

A fixed proportion epsilon of rows (exactly ``round(eps * n)`` of them,
chosen uniformly without replacement) is replaced by draws from a corrupting
law.  Uncorrupted rows are passed through bit-identically.
"""

from dataclasses import dataclass
from enum import Enum

import numpy as np

from .exceptions import InputError
from .models import Support


class ContaminationKind(Enum):
    PARETO_COLS = "pareto_cols"
    GAUSSIAN_SCALED = "gaussian_scaled"
    CROSS_MODEL_GGM = "cross_model_ggm"
    ADVERSARIAL_SHIFT = "adversarial_shift"


@dataclass(frozen=True)
class ContaminationSpec:
    """What to corrupt and how.

    ``intensity`` is the Pareto shape for ``PARETO_COLS``, the variance
    multiplier for ``GAUSSIAN_SCALED`` / ``CROSS_MODEL_GGM``, and the
    replacement magnitude for ``ADVERSARIAL_SHIFT`` (corrupted rows are set to
    ``intensity * ones``).
    """

    kind: ContaminationKind
    epsilon: float
    intensity: float = 1.0
    seed: int = 0

    def __post_init__(self):
        if not (0.0 <= self.epsilon <= 1.0):
            raise InputError("epsilon must be in [0, 1]")
        if self.kind is ContaminationKind.PARETO_COLS and self.intensity <= 0:
            raise InputError("Pareto shape must be positive")


def _pareto(rng, scale, shape, size):
    """Pareto draws with density shape*scale^shape / x^(shape+1) on [scale, inf)."""
    u = rng.random(size)
    return scale * u ** (-1.0 / shape)


def _random_ggm_precision(m, rng):
    """A random sparse precision matrix (edges with strength +-Unif(0.5, 1),
    diagonally dominant) used as the cross-model corrupting distribution."""
    theta = np.zeros((m, m))
    iu, ju = np.triu_indices(m, k=1)
    n_pairs = iu.size
    kappa = max(1, m) if n_pairs else 0
    if n_pairs:
        pick = rng.choice(n_pairs, size=min(kappa, n_pairs), replace=False)
        vals = rng.uniform(0.5, 1.0, size=pick.size) * np.where(
            rng.random(pick.size) < 0.5, 1.0, -1.0
        )
        theta[iu[pick], ju[pick]] = vals
        theta = theta + theta.T
    np.fill_diagonal(theta, np.abs(theta).sum(axis=1) + 1.0)
    return theta


def contaminate(X, spec: ContaminationSpec, domain: Support = Support.REAL_LINE):
    """Return (Y, corrupted_rows) with exactly round(eps * n) rows replaced.

    ``domain`` controls positivity of replacements: Pareto draws are positive
    by construction, cross-model Gaussian draws have their absolute value
    taken, and scaled-Gaussian draws are clamped away from zero.
    """
    X = np.asarray(X, dtype=float)
    n, m = X.shape
    n_corrupt = int(np.floor(spec.epsilon * n + 0.5))
    rng = np.random.default_rng(spec.seed)
    rows = np.sort(rng.choice(n, size=n_corrupt, replace=False)) if n_corrupt else np.array([], dtype=int)
    Y = X.copy()
    if n_corrupt == 0:
        return Y, rows

    kind = spec.kind
    if kind is ContaminationKind.PARETO_COLS:
        scale = X.mean(axis=0)
        repl = _pareto(rng, scale[None, :], spec.intensity, (n_corrupt, m))
    elif kind is ContaminationKind.GAUSSIAN_SCALED:
        sd = X.std(axis=0, ddof=1) * np.sqrt(spec.intensity)
        repl = rng.standard_normal((n_corrupt, m)) * sd[None, :]
        if domain is Support.NONNEG_ORTHANT:
            repl = np.maximum(np.abs(repl), 1e-12)
    elif kind is ContaminationKind.CROSS_MODEL_GGM:
        prec = _random_ggm_precision(m, rng)
        L = np.linalg.cholesky(prec)
        z = rng.standard_normal((n_corrupt, m))
        draws = np.linalg.solve(L.T, z.T).T * np.sqrt(spec.intensity)
        # scale to the data's magnitude so corruption is not trivially detectable
        draws = draws * X.std(axis=0, ddof=1)[None, :]
        repl = np.abs(draws) if domain is Support.NONNEG_ORTHANT else draws
        if domain is Support.NONNEG_ORTHANT:
            repl = np.maximum(repl, 1e-12)
    elif kind is ContaminationKind.ADVERSARIAL_SHIFT:
        repl = np.full((n_corrupt, m), spec.intensity)
    else:  # pragma: no cover
        raise InputError(f"unknown contamination kind {kind}")
    Y[rows] = repl
    return Y, rows
