"""Support-recovery metrics: ROC curves, vertical averaging, FDR, MSE-vs-K."""

from dataclasses import dataclass

import numpy as np

from . import estimator, models, simulate
from .gmom import GmomConfig
from .exceptions import InputError


def support_metrics(theta_hat_mat, theta0_mat):
    """(TPR, FPR) of the off-diagonal upper-triangle support of Theta_hat.

    TPR = recovered true edges / true edges; FPR = spurious edges / non-edges.
    """
    theta_hat_mat = np.asarray(theta_hat_mat, dtype=float)
    theta0_mat = np.asarray(theta0_mat, dtype=float)
    if theta_hat_mat.shape != theta0_mat.shape:
        raise InputError("dimension mismatch")
    m = theta0_mat.shape[0]
    iu, ju = np.triu_indices(m, k=1)
    est = theta_hat_mat[iu, ju] != 0.0
    true = theta0_mat[iu, ju] != 0.0
    n_true = int(true.sum())
    n_non = int((~true).sum())
    if n_true == 0:
        raise InputError("true support is empty; TPR undefined")
    tpr = float((est & true).sum()) / n_true
    fpr = float((est & ~true).sum()) / n_non if n_non else 0.0
    return tpr, fpr


@dataclass(frozen=True)
class RocCurve:
    """Ordered (fpr, tpr) points with endpoints (0,0), (1,1) and trapezoid AUC."""

    points: np.ndarray  # (k, 2) columns fpr, tpr
    auc: float
    tpr_lo: np.ndarray = None
    tpr_hi: np.ndarray = None


def _finalize_curve(fprs, tprs) -> RocCurve:
    fprs = np.asarray(fprs, dtype=float)
    tprs = np.asarray(tprs, dtype=float)
    order = np.lexsort((tprs, fprs))
    f = np.concatenate([[0.0], fprs[order], [1.0]])
    t = np.concatenate([[0.0], tprs[order], [1.0]])
    t = np.maximum.accumulate(t)
    # area first: intermediate points on tie diagonals carry real area, so
    # the trapezoid rule runs over the full staircase before deduplication
    auc = float(np.trapezoid(t, f))
    keep = np.ones(f.size, dtype=bool)
    keep[:-1] = f[1:] != f[:-1]  # per fpr keep only the highest tpr
    return RocCurve(points=np.column_stack([f[keep], t[keep]]), auc=auc)


def roc_from_path(path_results, theta0_mat) -> RocCurve:
    """ROC curve from a lambda path of estimates against the true Theta."""
    theta0_mat = np.asarray(theta0_mat, dtype=float)
    m = theta0_mat.shape[0]
    fprs, tprs = [], []
    for res in path_results:
        theta_mat, _ = res.theta_matrices(m)
        tpr, fpr = support_metrics(theta_mat, theta0_mat)
        fprs.append(fpr)
        tprs.append(tpr)
    return _finalize_curve(fprs, tprs)


def interpolate_tpr(curve: RocCurve, fpr_grid) -> np.ndarray:
    """Vertical (TPR at fixed FPR) linear interpolation of a curve."""
    pts = curve.points
    return np.interp(np.asarray(fpr_grid, dtype=float), pts[:, 0], pts[:, 1])


def average_roc(
    curves,
    fpr_grid=None,
    level: float = 0.95,
    n_boot: int = 1000,
    seed: int = 0,
) -> RocCurve:
    """Vertical averaging of ROC curves with a pointwise bootstrap band.

    TPR is linearly interpolated at each grid FPR and averaged across curves;
    the band is a percentile interval over curve resamples.
    """
    if len(curves) == 0:
        raise InputError("need at least one curve")
    if fpr_grid is None:
        fpr_grid = np.linspace(0.0, 1.0, 101)
    fpr_grid = np.asarray(fpr_grid, dtype=float)
    mat = np.stack([interpolate_tpr(c, fpr_grid) for c in curves])
    mean_tpr = mat.mean(axis=0)
    rng = np.random.default_rng(seed)
    k = mat.shape[0]
    boots = np.empty((n_boot, fpr_grid.size))
    for b in range(n_boot):
        boots[b] = mat[rng.integers(0, k, size=k)].mean(axis=0)
    lo = np.quantile(boots, (1.0 - level) / 2.0, axis=0)
    hi = np.quantile(boots, 1.0 - (1.0 - level) / 2.0, axis=0)
    auc = float(np.trapezoid(mean_tpr, fpr_grid))
    return RocCurve(
        points=np.column_stack([fpr_grid, mean_tpr]), auc=auc, tpr_lo=lo, tpr_hi=hi
    )


def forbidden_edge_fdr(edges, forbidden) -> float:
    """Fraction of selected edges falling in the forbidden set; 0 when empty."""
    edge_set = {tuple(sorted(e)) for e in edges}
    bad = {tuple(sorted(e)) for e in forbidden}
    if not edge_set:
        return 0.0
    return len(edge_set & bad) / len(edge_set)


def mse_vs_k(
    spec,
    k_grid,
    level: float = 0.95,
    n_boot: int = 1000,
    seed: int = 0,
    threads: int = 1,
):
    """Mean squared error of the unregularized estimator per block count.

    For each replication and each K, theta is estimated with lambda = 0 and
    the squared error ||Theta_hat - Theta||_F^2 + ||eta_hat - eta||_2^2 is
    recorded; returns a list of dicts with mean and bootstrap band per K.
    """
    k_grid = [int(k) for k in k_grid]
    seeds = np.random.SeedSequence(spec.seed).spawn(spec.replications)
    errs = {k: [] for k in k_grid}
    for rep in range(spec.replications):
        rng = np.random.default_rng(seeds[rep])
        model = simulate.random_model(
            spec.m, spec.kappa, spec.family, rng, spec.weight_exponent
        )
        X = models.sample(model, spec.n, rng, burn_in=spec.burn_in, thin=spec.thin)
        if spec.epsilon > 0:
            from .contamination import ContaminationSpec, contaminate

            cspec = ContaminationSpec(
                kind=spec.contamination_kind,
                epsilon=spec.epsilon,
                intensity=spec.contamination_intensity,
                seed=int(rng.integers(2**63)),
            )
            X, _ = contaminate(X, cspec, domain=model.domain.support)
        for k in k_grid:
            gamma_hat, g_hat = simulate.robust_moments(model, X, GmomConfig(K=k))
            res = estimator.robust_sm(gamma_hat, g_hat)
            errs[k].append(simulate._squared_error(res.theta_hat, model))
    rng = np.random.default_rng(seed)
    out = []
    for k in k_grid:
        vals = np.asarray(errs[k])
        boots = np.array(
            [
                vals[rng.integers(0, vals.size, size=vals.size)].mean()
                for _ in range(n_boot)
            ]
        )
        out.append(
            {
                "K": k,
                "mse": float(vals.mean()),
                "mse_lo": float(np.quantile(boots, (1.0 - level) / 2.0)),
                "mse_hi": float(np.quantile(boots, 1.0 - (1.0 - level) / 2.0)),
            }
        )
    return out


def roc_table_from_results(rows, fpr_grid=None, level=0.95, n_boot=1000, seed=0):
    """Group simulate results by K, build per-replication curves, average them.

    Returns a list of dicts with columns K, fpr, tpr, tpr_lo, tpr_hi.
    """
    if fpr_grid is None:
        fpr_grid = np.linspace(0.0, 1.0, 101)
    by_k = {}
    for row in rows:
        by_k.setdefault(row["K"], {}).setdefault(row["rep"], []).append(row)
    table = []
    aucs = {}
    for K in sorted(by_k):
        curves = []
        for rep in sorted(by_k[K]):
            pts = by_k[K][rep]
            curves.append(
                _finalize_curve([p["fpr"] for p in pts], [p["tpr"] for p in pts])
            )
        avg = average_roc(curves, fpr_grid, level=level, n_boot=n_boot, seed=seed)
        aucs[K] = avg.auc
        for i, f in enumerate(fpr_grid):
            table.append(
                {
                    "K": K,
                    "fpr": float(f),
                    "tpr": float(avg.points[i, 1]),
                    "tpr_lo": float(avg.tpr_lo[i]),
                    "tpr_hi": float(avg.tpr_hi[i]),
                }
            )
    return table, aucs


def write_roc_csv(table, path):
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write("K,fpr,tpr,tpr_lo,tpr_hi\n")
        for row in table:
            fh.write(
                "%d,%.17g,%.17g,%.17g,%.17g\n"
                % (row["K"], row["fpr"], row["tpr"], row["tpr_lo"], row["tpr_hi"])
            )


def write_mse_csv(table, path):
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write("K,mse,mse_lo,mse_hi\n")
        for row in table:
            fh.write(
                "%d,%.17g,%.17g,%.17g\n"
                % (row["K"], row["mse"], row["mse_lo"], row["mse_hi"])
            )
