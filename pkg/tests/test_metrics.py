"""Tests for the validation criteria (RDCM, CED, curious counts)."""

import math

import numpy as np
import pytest

from codaimp.composition import CompositionMatrix, DetectionLimits
from codaimp.metrics import MetricsReport, ced, curious_count, rdcm, rdcm_from_cov, score


def random_positive(n, D, seed):
    rng = np.random.default_rng(seed)
    return np.exp(rng.standard_normal((n, D)))


# -- independent oracles -------------------------------------------------------

def oracle_aitchison(x, y):
    D = len(x)
    total = 0.0
    for i in range(D - 1):
        for j in range(i + 1, D):
            total += (math.log(x[i] / x[j]) - math.log(y[i] / y[j])) ** 2
    return math.sqrt(total / D)


def oracle_pivot_coords(X):
    n, D = X.shape
    z = np.zeros((n, D - 1))
    for i in range(n):
        for j in range(1, D):
            gmean = float(np.prod(X[i, j:])) ** (1.0 / (D - j))
            z[i, j - 1] = math.sqrt((D - j) / (D - j + 1)) * math.log(X[i, j - 1] / gmean)
    return z


def oracle_cov(Z):
    n, k = Z.shape
    means = Z.mean(axis=0)
    S = np.zeros((k, k))
    for a in range(k):
        for b in range(k):
            S[a, b] = np.sum((Z[:, a] - means[a]) * (Z[:, b] - means[b])) / (n - 1)
    return S


def oracle_rdcm(X_true, X_imp):
    S = oracle_cov(oracle_pivot_coords(X_true))
    S_star = oracle_cov(oracle_pivot_coords(X_imp))
    k = S.shape[0]
    frob_diff = math.sqrt(np.sum((S - S_star) ** 2))
    frob_S = math.sqrt(np.sum(S**2))
    return frob_diff / (k * frob_S)


def oracle_ced(X_true, X_imp, mask):
    rows = [i for i in range(X_true.shape[0]) if mask[i].any()]
    numerator = np.mean([oracle_aitchison(X_true[i], X_imp[i]) for i in rows])
    n = X_true.shape[0]
    denominator = max(
        oracle_aitchison(X_true[i], X_true[j])
        for i in range(n - 1)
        for j in range(i + 1, n)
    )
    return numerator / denominator


# -- RDCM ----------------------------------------------------------------------

class TestRdcm:
    def test_identical_matrices_zero(self):
        X = random_positive(20, 4, seed=0)
        assert rdcm(X, X) == 0.0

    def test_hand_built_covariances(self):
        # S and S* differ by delta in one entry: delta / ((D-1) ||S||_F).
        S = np.array([[2.0, 1.0], [1.0, 3.0]])
        S_star = S.copy()
        S_star[0, 1] += 0.5
        expected = 0.5 / (2.0 * math.sqrt(15.0))
        assert rdcm_from_cov(S, S_star) == pytest.approx(expected, rel=1e-14)
        assert expected == pytest.approx(0.06454972243679028, rel=1e-12)

    def test_matches_brute_force_oracle(self):
        X_true = random_positive(12, 4, seed=1)
        X_imp = X_true.copy()
        X_imp[2, 1] *= 1.7
        X_imp[5, 3] *= 0.4
        assert rdcm(X_true, X_imp) == pytest.approx(oracle_rdcm(X_true, X_imp), abs=1e-12)

    def test_row_permutation_invariant(self):
        X_true = random_positive(15, 5, seed=2)
        X_imp = X_true * np.exp(0.05 * np.random.default_rng(3).standard_normal((15, 5)))
        perm = np.random.default_rng(4).permutation(15)
        assert rdcm(X_true[perm], X_imp[perm]) == pytest.approx(
            rdcm(X_true, X_imp), rel=1e-12
        )

    def test_unnormalized_variant(self):
        S = np.array([[2.0, 1.0], [1.0, 3.0]])
        S_star = S + 0.25
        expected = np.linalg.norm(S - S_star, "fro") / 2.0
        assert rdcm_from_cov(S, S_star, normalized=False) == pytest.approx(expected)

    def test_normalization_is_one_sided(self):
        # The Frobenius numerator is symmetric; the ||S||_F normalizer
        # comes from the first argument only.
        S = np.array([[2.0, 0.3], [0.3, 1.0]])
        S2 = np.array([[5.0, 1.0], [1.0, 7.0]])
        forward = rdcm_from_cov(S, S2) * np.linalg.norm(S, "fro")
        backward = rdcm_from_cov(S2, S) * np.linalg.norm(S2, "fro")
        assert forward == pytest.approx(backward, rel=1e-14)
        assert rdcm_from_cov(S, S2) != pytest.approx(rdcm_from_cov(S2, S), rel=1e-3)

    def test_needs_two_rows(self):
        X = random_positive(1, 3, seed=5)
        with pytest.raises(ValueError, match="two rows"):
            rdcm(X, X)

    def test_accepts_composition_matrix(self):
        X = random_positive(10, 3, seed=6)
        cm = CompositionMatrix(X, np.zeros_like(X, bool))
        assert rdcm(cm, X) == 0.0


# -- CED -----------------------------------------------------------------------

class TestCed:
    def test_identical_matrices_zero(self):
        X = random_positive(10, 4, seed=7)
        mask = np.zeros_like(X, bool)
        mask[3, 1] = True
        assert ced(X, X, mask) == 0.0

    def test_three_row_toy_matches_brute_force(self):
        X_true = np.array([[1.0, 2.0, 4.0], [2.0, 2.0, 1.0], [5.0, 1.0, 1.0]])
        X_imp = X_true.copy()
        X_imp[0, 2] = 6.5
        mask = np.zeros((3, 3), bool)
        mask[0, 2] = True
        assert ced(X_true, X_imp, mask) == pytest.approx(
            oracle_ced(X_true, X_imp, mask), abs=1e-12
        )

    def test_random_case_matches_brute_force(self):
        X_true = random_positive(9, 5, seed=8)
        X_imp = X_true.copy()
        mask = np.zeros_like(X_true, bool)
        mask[1, 0] = mask[4, 2] = mask[7, 4] = True
        X_imp[mask] *= 2.3
        assert ced(X_true, X_imp, mask) == pytest.approx(
            oracle_ced(X_true, X_imp, mask), abs=1e-12
        )

    def test_per_row_scaling_invariance(self):
        X_true = random_positive(8, 4, seed=9)
        X_imp = X_true.copy()
        mask = np.zeros_like(X_true, bool)
        mask[2, 3] = True
        X_imp[2, 3] *= 3.0
        base = ced(X_true, X_imp, mask)
        scales_t = np.random.default_rng(10).uniform(0.5, 2.0, size=(8, 1))
        scales_i = np.random.default_rng(11).uniform(0.5, 2.0, size=(8, 1))
        assert ced(X_true * scales_t, X_imp * scales_i, mask) == pytest.approx(
            base, rel=1e-12
        )

    def test_empty_mask_rejected(self):
        X = random_positive(5, 3, seed=12)
        with pytest.raises(ValueError, match="at least one row"):
            ced(X, X, np.zeros_like(X, bool))

    def test_proportional_rows_rejected(self):
        X = np.outer([1.0, 2.0, 3.0], [1.0, 1.0, 4.0])
        mask = np.zeros_like(X, bool)
        mask[0, 0] = True
        with pytest.raises(ValueError, match="proportional"):
            ced(X, X, mask)


# -- curious counts --------------------------------------------------------------

class TestCurious:
    def test_above_limit_counted(self):
        X_imp = np.array([[1.0, 0.3], [1.0, 0.2]])
        mask = np.array([[False, True], [False, True]])
        d = DetectionLimits(np.array([np.nan, 0.25]))
        assert curious_count(X_imp, mask, d) == (1, 0)

    def test_value_at_limit_is_valid(self):
        X_imp = np.array([[1.0, 0.25]])
        mask = np.array([[False, True]])
        d = DetectionLimits(np.array([np.nan, 0.25]))
        assert curious_count(X_imp, mask, d) == (0, 0)

    def test_exact_zero_counts_nonpositive(self):
        X_imp = np.array([[1.0, 0.0]])
        mask = np.array([[False, True]])
        d = DetectionLimits(np.array([np.nan, 0.25]))
        assert curious_count(X_imp, mask, d) == (0, 1)

    def test_factor_one_point_five_above(self):
        d_val = 0.4
        X_imp = np.array([[2.0, 1.5 * d_val]])
        mask = np.array([[False, True]])
        assert curious_count(X_imp, mask, DetectionLimits(np.array([np.nan, d_val]))) == (1, 0)

    def test_censoring_imputer_output_has_no_curious_values(self):
        # Cross-module contract: a censor-aware run scores (0, 0).
        import warnings

        from codaimp.imputer import ImputerConfig, impute
        from codaimp.initializers import InitConfig
        from codaimp.network import AdamParams, NetworkConfig

        rng = np.random.default_rng(13)
        X_true = np.exp(rng.standard_normal((60, 4)))
        d_vec = np.quantile(X_true, 0.1, axis=0)
        mask = X_true < d_vec
        X = CompositionMatrix(np.where(mask, 0.0, X_true), mask)
        cfg = ImputerConfig(
            algorithm="pivot", censor=True, maxiter=1, eps=1e9,
            net=NetworkConfig(hidden_sizes=(8,), epochs=10, rng_seed=0,
                              dropout_rate=0.0, adam=AdamParams(lr=0.01)),
            init=InitConfig(k=3),
        )
        with warnings.catch_warnings():
            warnings.simplefilter("ignore")
            report = impute(X, d, cfg) if (d := DetectionLimits(d_vec)) else None
        assert curious_count(report.x_imputed, mask, d) == (0, 0)


class TestReport:
    def test_score_and_json_fields(self):
        X_true = random_positive(10, 3, seed=14)
        X_imp = X_true.copy()
        mask = np.zeros_like(X_true, bool)
        mask[0, 1] = True
        X_imp[0, 1] *= 1.2
        report = score(X_true, X_imp, mask, DetectionLimits(np.full(3, 100.0)))
        payload = report.to_dict()
        for key in (
            "rdcm", "ced", "curious_above_dl", "curious_above_dl_fraction",
            "curious_nonpositive", "curious_nonpositive_fraction",
            "n_imputed", "per_variable",
        ):
            assert key in payload
        assert payload["n_imputed"] == 1
        assert payload["per_variable"]["1"]["n_imputed"] == 1

    def test_fractions(self):
        report = MetricsReport(
            rdcm=0.0, ced=0.0, curious_above_dl=1, curious_nonpositive=0, n_imputed=4
        )
        assert report.curious_above_dl_fraction == 0.25
