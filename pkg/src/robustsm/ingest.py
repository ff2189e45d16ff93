"""Generic tabular ingestion and model fitting for real datasets."""

from dataclasses import dataclass
from enum import Enum
from typing import Optional

import numpy as np
import pandas as pd

from . import estimator, models, simulate
from .gmom import GmomConfig
from .exceptions import DomainViolationError, InputError
from .models import Support


class MissingPolicy(Enum):
    DROP_ROW = "drop_row"
    FAIL = "fail"


@dataclass(frozen=True)
class Dataset:
    columns: list
    X: np.ndarray
    domain: models.DomainSpec
    coordinates: Optional[dict] = None  # variable name -> (lat, lon)

    @property
    def n(self) -> int:
        return self.X.shape[0]

    @property
    def m(self) -> int:
        return self.X.shape[1]


def load_csv(
    path,
    support: Support = Support.REAL_LINE,
    missing_policy: MissingPolicy = MissingPolicy.FAIL,
    zero_floor: Optional[float] = None,
) -> Dataset:
    """Parse a headered CSV of doubles into a Dataset.

    Rows with missing or non-finite values are dropped or rejected per
    ``missing_policy``.  On the nonnegative orthant, negative entries are
    always an error and zeros are replaced by ``zero_floor`` when given
    (the default is to fail on zeros).
    """
    try:
        frame = pd.read_csv(path, float_precision="round_trip")
    except Exception as exc:
        raise InputError(f"could not parse {path}: {exc}") from exc
    if frame.shape[1] < 1:
        raise InputError("no columns found")
    try:
        X = frame.to_numpy(dtype=float)
    except (TypeError, ValueError) as exc:
        raise InputError(f"non-numeric data in {path}: {exc}") from exc
    bad = ~np.isfinite(X).all(axis=1)
    if bad.any():
        if missing_policy is MissingPolicy.FAIL:
            raise InputError(f"{int(bad.sum())} rows contain missing/non-finite values")
        X = X[~bad]
    if X.shape[0] == 0:
        raise InputError("no rows left after ingestion")
    if support is Support.NONNEG_ORTHANT:
        neg = np.argwhere(X < 0)
        if neg.size:
            i, j = neg[0]
            raise DomainViolationError(
                f"negative entry at row {i}, column {frame.columns[j]}"
            )
        zeros = X == 0
        if zeros.any():
            if zero_floor is None:
                i, j = np.argwhere(zeros)[0]
                raise DomainViolationError(
                    f"zero entry at row {i}, column {frame.columns[j]}; "
                    "set a zero_floor to replace zeros"
                )
            X = np.where(zeros, zero_floor, X)
    return Dataset(
        columns=[str(c) for c in frame.columns],
        X=X,
        domain=models.DomainSpec(support=support, dimension=X.shape[1]),
    )


def save_csv(dataset: Dataset, path):
    header = ",".join(dataset.columns)
    np.savetxt(path, dataset.X, delimiter=",", header=header, comments="", fmt="%.17g")


def _edge_count(result, m: int) -> int:
    theta_mat, _ = result.theta_matrices(m)
    iu, ju = np.triu_indices(m, k=1)
    return int(np.count_nonzero(theta_mat[iu, ju]))


@dataclass(frozen=True)
class FitResult:
    result: estimator.EstimatorResult
    lam: float
    edges: list  # (name_a, name_b, weight)
    target_reached: bool
    achieved_edges: int


def fit(
    dataset: Dataset,
    family: models.Family,
    cfg: estimator.EstimatorConfig,
    target_edges: Optional[int] = None,
    weight_exponent: float = 1.5,
    max_bisect: int = 60,
) -> FitResult:
    """Fit a pairwise model; optionally bisect lambda to a target edge count.

    The statistics Gamma and g do not depend on the parameter values, so the
    family plus weight exponent fully determine the moments.  Bisection stops
    when the recovered edge count is within +-1 of the target.
    """
    m = dataset.m
    stats_model = models.PairwiseModel(
        family=family,
        theta=np.eye(m),
        eta=np.zeros(m),
        weight_exponent=weight_exponent,
    )
    gamma_hat, g_hat = simulate.robust_moments(
        stats_model, dataset.X, GmomConfig(K=cfg.K)
    )

    def solve(lam, warm=None):
        cfg_l = estimator.EstimatorConfig(
            K=cfg.K,
            beta=cfg.beta,
            lam=lam,
            cd_tol=cfg.cd_tol,
            cd_max_sweeps=cfg.cd_max_sweeps,
            penalize_diagonal=cfg.penalize_diagonal,
        )
        return estimator.regularized_robust_sm(gamma_hat, g_hat, cfg_l, theta_init=warm)

    if target_edges is None:
        lam = cfg.lam
        res = solve(lam)
        return _finish(dataset, res, lam, None)

    lam_hi = float(np.max(np.abs(g_hat))) * 1.0001
    if target_edges == 0:
        res = solve(lam_hi)
        return _finish(dataset, res, lam_hi, target_edges)
    lam_lo = 0.0
    res_lo = solve(lam_lo)
    if _edge_count(res_lo, m) < target_edges - 1:
        # even the unpenalized fit has too few edges; report what we achieved
        return _finish(dataset, res_lo, lam_lo, target_edges)
    # edge count is (up to solver tolerance) nonincreasing in lambda:
    # lam_lo has too many edges, lam_hi too few
    lam, res = lam_lo, res_lo
    if abs(_edge_count(res, m) - target_edges) > 1:
        warm = res_lo.theta_hat
        for _ in range(max_bisect):
            mid = 0.5 * (lam_lo + lam_hi)
            res_mid = solve(mid, warm=warm)
            cnt_mid = _edge_count(res_mid, m)
            lam, res, warm = mid, res_mid, res_mid.theta_hat
            if abs(cnt_mid - target_edges) <= 1:
                break
            if cnt_mid > target_edges:
                lam_lo = mid
            else:
                lam_hi = mid
    return _finish(dataset, res, lam, target_edges)


def _finish(dataset, res, lam, target_edges) -> FitResult:
    m = dataset.m
    theta_mat, _ = res.theta_matrices(m)
    iu, ju = np.triu_indices(m, k=1)
    edges = [
        (dataset.columns[a], dataset.columns[b], float(theta_mat[a, b]))
        for a, b in zip(iu, ju)
        if theta_mat[a, b] != 0.0
    ]
    achieved = len(edges)
    reached = target_edges is None or abs(achieved - target_edges) <= 1
    return FitResult(
        result=res, lam=float(lam), edges=edges, target_reached=reached,
        achieved_edges=achieved,
    )


def write_edges_csv(fit_result: FitResult, path, coordinates=None):
    """Edge list CSV ``node_a,node_b,weight[,lat_a,lon_a,lat_b,lon_b]``."""
    with_coords = coordinates is not None
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        header = "node_a,node_b,weight"
        if with_coords:
            header += ",lat_a,lon_a,lat_b,lon_b"
        fh.write(header + "\n")
        for a, b, w in fit_result.edges:
            line = f"{a},{b},{w:.17g}"
            if with_coords:
                la, lo = coordinates.get(a, ("", ""))
                lb, lo2 = coordinates.get(b, ("", ""))
                line += f",{la},{lo},{lb},{lo2}"
            fh.write(line + "\n")
