import numpy as np
import pytest

from robustsm import (
    RocCurve,
    average_roc,
    forbidden_edge_fdr,
    support_metrics,
)
from robustsm.evaluation import (
    _finalize_curve,
    interpolate_tpr,
    roc_table_from_results,
    write_mse_csv,
    write_roc_csv,
)
from robustsm.exceptions import InputError


def _theta(m, edges, diag=1.0):
    t = np.eye(m) * diag
    for i, j, v in edges:
        t[i, j] = t[j, i] = v
    return t


class TestSupportMetrics:
    def test_perfect_recovery(self):
        t0 = _theta(4, [(0, 1, 0.5), (2, 3, -0.5)])
        assert support_metrics(t0, t0) == (1.0, 0.0)

    def test_empty_estimate(self):
        t0 = _theta(4, [(0, 1, 0.5)])
        assert support_metrics(np.eye(4), t0) == (0.0, 0.0)

    def test_complete_graph(self):
        t0 = _theta(4, [(0, 1, 0.5)])
        full = _theta(4, [(i, j, 0.3) for i in range(4) for j in range(i + 1, 4)])
        assert support_metrics(full, t0) == (1.0, 1.0)

    def test_counts(self):
        t0 = _theta(5, [(0, 1, 0.5), (1, 2, 0.5)])  # 2 true edges of 10 pairs
        est = _theta(5, [(0, 1, 0.4), (3, 4, 0.1)])  # 1 hit, 1 false, 8 non-edges
        tpr, fpr = support_metrics(est, t0)
        assert tpr == pytest.approx(0.5)
        assert fpr == pytest.approx(1.0 / 8.0)

    def test_diagonal_ignored(self):
        t0 = _theta(3, [(0, 1, 0.5)])
        est = t0.copy()
        est[2, 2] = 0.0  # diagonal must not count as a support difference
        assert support_metrics(est, t0) == (1.0, 0.0)

    def test_empty_truth_rejected(self):
        with pytest.raises(Exception):
            support_metrics(np.eye(3), np.eye(3))


class TestRocCurve:
    def test_chance_diagonal(self):
        curve = _finalize_curve(np.array([0.0]), np.array([0.0]))
        np.testing.assert_array_equal(curve.points[0], [0.0, 0.0])
        np.testing.assert_array_equal(curve.points[-1], [1.0, 1.0])
        assert curve.auc == pytest.approx(0.5)

    def test_perfect_separator(self):
        curve = _finalize_curve(np.array([0.0, 0.0, 1.0]), np.array([0.5, 1.0, 1.0]))
        assert curve.auc == pytest.approx(1.0)

    def test_auc_matches_concordance_oracle(self):
        # scores for 30 items; threshold sweep ROC AUC equals the
        # probability a positive outranks a negative (ties at half weight)
        rng = np.random.default_rng(0)
        labels = rng.random(30) < 0.4
        if not labels.any():
            labels[0] = True
        scores = np.round(rng.random(30) + 0.3 * labels, 2)

        thresholds = np.unique(scores)[::-1]
        fprs, tprs = [], []
        n_pos, n_neg = labels.sum(), (~labels).sum()
        for t in thresholds:
            sel = scores >= t
            tprs.append((sel & labels).sum() / n_pos)
            fprs.append((sel & ~labels).sum() / n_neg)
        curve = _finalize_curve(np.array(fprs), np.array(tprs))

        pos, neg = scores[labels], scores[~labels]
        wins = sum((p > q) + 0.5 * (p == q) for p in pos for q in neg)
        assert curve.auc == pytest.approx(wins / (n_pos * n_neg), abs=1e-12)

    def test_monotone_fpr_and_tpr(self):
        rng = np.random.default_rng(1)
        curve = _finalize_curve(rng.random(20), rng.random(20))
        fprs = curve.points[:, 0]
        tprs = curve.points[:, 1]
        assert np.all(np.diff(fprs) >= 0)
        assert np.all(np.diff(tprs) >= 0)
        assert 0.0 <= curve.auc <= 1.0


class TestAverageRoc:
    def _const_curve(self, tpr):
        # flat synthetic curve: tpr constant across the whole fpr range
        pts = np.array([[0.0, tpr], [1.0, tpr]])
        return RocCurve(points=pts, auc=tpr)

    def test_single_curve_identity(self):
        curve = self._const_curve(0.6)
        grid = np.linspace(0, 1, 11)
        avg = average_roc([curve], grid)
        np.testing.assert_allclose(
            avg.points[:, 1], interpolate_tpr(curve, grid), atol=1e-12
        )

    def test_two_constant_curves_average(self):
        avg = average_roc(
            [self._const_curve(0.2), self._const_curve(0.8)], np.linspace(0.01, 0.99, 5)
        )
        np.testing.assert_allclose(avg.points[:, 1], 0.5, atol=1e-9)

    def test_identical_curves_zero_band(self):
        curves = [self._const_curve(0.5)] * 6
        avg = average_roc(curves, np.linspace(0.1, 0.9, 5))
        np.testing.assert_allclose(avg.tpr_lo, avg.tpr_hi, atol=1e-12)

    def test_band_shrinks_with_more_curves(self):
        rng = np.random.default_rng(2)

        def noisy():
            t = np.clip(0.5 + 0.1 * rng.standard_normal(), 0, 1)
            return self._const_curve(t)

        grid = np.array([0.5])
        small = average_roc([noisy() for _ in range(8)], grid, seed=0)
        big = average_roc([noisy() for _ in range(128)], grid, seed=0)
        width_small = small.tpr_hi[0] - small.tpr_lo[0]
        width_big = big.tpr_hi[0] - big.tpr_lo[0]
        assert width_big < width_small / 2

    def test_empty_rejected(self):
        with pytest.raises(InputError):
            average_roc([], np.linspace(0, 1, 5))


class TestForbiddenEdgeFdr:
    def test_no_forbidden_selected(self):
        assert forbidden_edge_fdr({(0, 1), (1, 2)}, {(3, 4)}) == 0.0

    def test_all_forbidden(self):
        assert forbidden_edge_fdr({(0, 1)}, {(0, 1)}) == 1.0

    def test_empty_edges(self):
        assert forbidden_edge_fdr(set(), {(0, 1)}) == 0.0

    def test_random_selection_matches_forbidden_fraction(self):
        # selecting edges at random makes the FDR concentrate at the
        # forbidden fraction of all pairs (synthetic geographic analogue)
        rng = np.random.default_rng(3)
        m = 30
        pairs = [(i, j) for i in range(m) for j in range(i + 1, m)]
        n_pairs = len(pairs)
        n_forbidden = int(round(0.42 * n_pairs))
        total = 0.0
        draws = 10_000
        for _ in range(draws):
            idx = rng.permutation(n_pairs)
            forbidden = {pairs[i] for i in idx[:n_forbidden]}
            sel = {pairs[i] for i in rng.choice(n_pairs, size=45, replace=False)}
            total += forbidden_edge_fdr(sel, forbidden)
        assert abs(total / draws - 0.42) < 0.02


class TestCsvWriters:
    def test_roc_csv_schema(self, tmp_path):
        rows = [
            {"rep": 0, "K": 1, "lambda": 0.5, "tpr": 0.5, "fpr": 0.1},
            {"rep": 0, "K": 1, "lambda": 0.1, "tpr": 0.9, "fpr": 0.4},
            {"rep": 1, "K": 1, "lambda": 0.5, "tpr": 0.4, "fpr": 0.2},
            {"rep": 1, "K": 1, "lambda": 0.1, "tpr": 1.0, "fpr": 0.6},
        ]
        table, aucs = roc_table_from_results(rows, n_boot=50)
        path = tmp_path / "roc.csv"
        write_roc_csv(table, path)
        lines = path.read_text().strip().splitlines()
        assert lines[0] == "K,fpr,tpr,tpr_lo,tpr_hi"
        assert len(lines) > 1
        assert set(aucs) == {1}
        assert 0.0 <= aucs[1] <= 1.0

    def test_mse_csv_schema(self, tmp_path):
        table = [
            {"K": 1, "mse": 2.0, "mse_lo": 1.5, "mse_hi": 2.5},
            {"K": 10, "mse": 1.0, "mse_lo": 0.8, "mse_hi": 1.2},
        ]
        path = tmp_path / "mse.csv"
        write_mse_csv(table, path)
        lines = path.read_text().strip().splitlines()
        assert lines[0] == "K,mse,mse_lo,mse_hi"
        assert len(lines) == 3
