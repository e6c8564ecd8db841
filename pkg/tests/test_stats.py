import numpy as np
import pytest
from scipy import stats as sps

from conftest import make_cohort
from schema import DensityCurve, Group
from stats import (
    QUANTILE_COLUMNS,
    STAT_COLUMNS,
    adjusted_ttest,
    bonferroni,
    contrast_name,
    correct,
    f_sf,
    family_analysis,
    fdr_bh,
    oneway_anova,
    posthoc_ttests,
    quantile_table,
    static_outcomes,
    t_two_sided_p,
)
from utils.errors import CollinearityError, InvalidParameterError, SampleSizeError

C, M, S = Group.CONTROL, Group.MILD, Group.SEVERE


class TestDistributions:
    @pytest.mark.parametrize("t,dof", [(0.0, 5), (1.3, 7), (-2.5, 12.4), (4.0, 28)])
    def test_t_matches_scipy(self, t, dof):
        assert t_two_sided_p(t, dof) == pytest.approx(2 * sps.t.sf(abs(t), dof), rel=1e-10, abs=1e-15)

    @pytest.mark.parametrize("f,d1,d2", [(0.5, 2, 27), (4.0, 2, 3), (9.1, 3, 40)])
    def test_f_matches_scipy(self, f, d1, d2):
        assert f_sf(f, d1, d2) == pytest.approx(sps.f.sf(f, d1, d2), rel=1e-10, abs=1e-15)

    def test_sentinels(self):
        assert t_two_sided_p(np.inf, 4) == 0.0
        assert f_sf(np.inf, 2, 3) == 0.0
        assert f_sf(0.0, 2, 3) == 1.0
        assert np.isnan(t_two_sided_p(np.nan, 4))


class TestCorrection:
    def test_bh_example(self):
        reject, adjusted = fdr_bh([0.01, 0.02, 0.03, 0.04, 0.05], q=0.05)
        assert reject.all()
        np.testing.assert_allclose(adjusted, 0.05)

    def test_bh_partial(self):
        reject, adjusted = fdr_bh([0.001, 0.008, 0.039, 0.041, 0.6], q=0.05)
        assert list(reject) == [True, True, False, False, False]
        np.testing.assert_allclose(adjusted, [0.005, 0.02, 0.05125, 0.05125, 0.6])

    def test_bh_order_independent(self):
        p = np.array([0.04, 0.001, 0.6, 0.039, 0.008])
        reject, adjusted = fdr_bh(p)
        order = np.argsort(p)
        ref_reject, ref_adjusted = fdr_bh(p[order])
        np.testing.assert_array_equal(reject[order], ref_reject)
        np.testing.assert_allclose(adjusted[order], ref_adjusted)

    def test_bonferroni(self):
        reject, adjusted = bonferroni([0.01, 0.02, 0.5], alpha=0.05)
        assert list(reject) == [True, False, False]
        np.testing.assert_allclose(adjusted, [0.03, 0.06, 1.0])

    def test_fdr_rejects_superset_of_bonferroni(self, rng):
        for _ in range(20):
            p = rng.random(15) ** 3
            fdr, _ = fdr_bh(p, 0.05)
            bon, _ = bonferroni(p, 0.05)
            assert np.all(fdr[bon])

    def test_validation(self):
        with pytest.raises(InvalidParameterError):
            fdr_bh([])
        with pytest.raises(InvalidParameterError):
            bonferroni([0.1, 1.2])
        with pytest.raises(InvalidParameterError):
            correct([0.1], "holm")
        with pytest.raises(InvalidParameterError):
            fdr_bh([0.1], q=1.0)


class TestAnova:
    def test_known_value(self):
        y = [1, 2, 2, 3, 3, 4]
        groups = [C, C, M, M, S, S]
        result = oneway_anova(y, groups)
        assert result.statistic == pytest.approx(4.0)
        assert (result.dof, result.dof2) == (2.0, 3.0)
        assert result.p == pytest.approx(sps.f.sf(4.0, 2, 3))
        assert result.contrast == "anova:control,mild,severe"

    def test_affine_invariance(self):
        y = np.array([1, 2, 2, 3, 3, 4], dtype=float)
        groups = [C, C, M, M, S, S]
        assert oneway_anova(3 * y - 7, groups).statistic == pytest.approx(4.0)

    def test_matches_scipy(self, rng):
        a, b, c = rng.normal(0, 1, 8), rng.normal(0.5, 1, 6), rng.normal(1, 1, 9)
        result = oneway_anova(np.concatenate([a, b, c]), [C] * 8 + [M] * 6 + [S] * 9)
        ref = sps.f_oneway(a, b, c)
        assert result.statistic == pytest.approx(ref.statistic)
        assert result.p == pytest.approx(ref.pvalue)

    def test_all_equal(self):
        result = oneway_anova([2.0] * 6, [C, C, M, M, S, S])
        assert result.statistic == 0.0 and result.p == 1.0

    def test_zero_within_variance(self):
        result = oneway_anova([1, 1, 2, 2, 3, 3], [C, C, M, M, S, S])
        assert result.statistic == np.inf and result.p == 0.0

    def test_sample_size(self):
        with pytest.raises(SampleSizeError):
            oneway_anova([1, 2, 3], [C, C, M])
        with pytest.raises(SampleSizeError):
            oneway_anova([1, 2], [C, C])


class TestAdjustedTtest:
    def test_constant_covariates_reduce_to_pooled(self, rng):
        a, b = rng.normal(0, 1, 7), rng.normal(1, 1, 5)
        meta = make_cohort([C] * 7 + [S] * 5)
        result = adjusted_ttest(np.concatenate([a, b]), meta)
        ref = sps.ttest_ind(b, a)
        assert result.statistic == pytest.approx(ref.statistic)
        assert result.p == pytest.approx(ref.pvalue)
        assert result.dof == 10
        assert result.estimate == pytest.approx(b.mean() - a.mean())
        assert result.contrast == "severe_vs_control"

    def test_welch_matches_scipy(self, rng):
        a, b = rng.normal(0, 1, 7), rng.normal(1, 3, 5)
        meta = make_cohort([C] * 7 + [S] * 5)
        result = adjusted_ttest(np.concatenate([a, b]), meta, equal_var=False)
        ref = sps.ttest_ind(b, a, equal_var=False)
        assert result.statistic == pytest.approx(ref.statistic)
        assert result.p == pytest.approx(ref.pvalue)

    def test_covariate_effect_removed(self, rng):
        n = 20
        groups = [C] * 10 + [S] * 10
        ages = rng.uniform(20, 80, n)
        sexes = np.tile([0, 1], 10)
        fds = rng.uniform(0.05, 0.3, n)
        noise = rng.normal(0, 0.01, n)
        y = 0.5 * ages + noise
        meta = make_cohort(groups, ages, sexes, fds)
        result = adjusted_ttest(y, meta)
        assert result.dof == n - 5
        assert abs(result.estimate) < 0.05

    def test_group_shift_detected(self, rng):
        n = 24
        groups = [C] * 12 + [M] * 12
        ages = rng.uniform(20, 80, n)
        y = np.r_[np.zeros(12), np.full(12, 2.0)] + 0.01 * ages + rng.normal(0, 0.1, n)
        meta = make_cohort(groups, ages, np.tile([0, 1], 12), rng.uniform(0.05, 0.3, n))
        result = adjusted_ttest(y, meta, groups=(C, M))
        assert result.statistic > 0
        assert result.estimate == pytest.approx(2.0, abs=0.2)
        assert result.p < 1e-6

    def test_collinear_covariate(self):
        groups = [C] * 4 + [S] * 4
        ages = [30.0] * 4 + [60.0] * 4
        meta = make_cohort(groups, ages)
        with pytest.raises(CollinearityError):
            adjusted_ttest(np.arange(8.0), meta)

    def test_too_few(self):
        meta = make_cohort([C, S, S])
        with pytest.raises(SampleSizeError):
            adjusted_ttest([1.0, 2.0, 3.0], meta)

    def test_contrast_name(self):
        assert contrast_name(C, M) == "mild_vs_control"


class TestPosthoc:
    def test_gate_blocks(self):
        meta = make_cohort([C] * 4 + [M] * 4 + [S] * 4)
        y = np.tile([1.0, 2.0, 3.0, 4.0], 3)
        report = posthoc_ttests(y, meta)
        assert report.skipped
        assert report.results == []
        assert report.anova.p > 0.05

    def test_gate_passes(self):
        meta = make_cohort([C] * 4 + [M] * 4 + [S] * 4)
        y = np.r_[[0.0, 0.1, -0.1, 0.05], [1.0, 1.1, 0.9, 1.05], [2.0, 2.1, 1.9, 2.05]]
        report = posthoc_ttests(y, meta)
        assert not report.skipped
        assert [r.contrast for r in report.results] == [
            "mild_vs_control", "severe_vs_control", "severe_vs_mild"
        ]

    def test_gate_disabled(self):
        meta = make_cohort([C] * 4 + [M] * 4 + [S] * 4)
        report = posthoc_ttests(np.tile([1.0, 2.0, 3.0, 4.0], 3), meta, gate=False)
        assert len(report.results) == 3


class TestFamilyAnalysis:
    def _meta(self):
        return make_cohort([C] * 5 + [M] * 5 + [S] * 5)

    def test_columns_and_rows(self, rng):
        meta = self._meta()
        shifted = np.r_[np.zeros(5), np.ones(5), np.full(5, 2.0)] + rng.normal(0, 0.1, 15)
        outcomes = {"system:A": shifted, "system:B": rng.normal(0, 1, 15)}
        frame = family_analysis("recruitment", outcomes, meta, gate=False)
        assert list(frame.columns) == STAT_COLUMNS
        assert len(frame) == 2 * 4
        assert set(frame["test"]) == {"anova", "ttest"}
        anova = frame[frame["test"] == "anova"]
        assert (anova["dof2"] == 12).all()

    def test_correction_per_contrast(self, rng):
        meta = self._meta()
        outcomes = {f"t{i}": rng.normal(0, 1, 15) for i in range(6)}
        frame = family_analysis("flexibility", outcomes, meta, gate=False)
        for contrast, sub in frame.groupby("contrast"):
            _, expected = fdr_bh(sub["p_raw"].to_numpy())
            np.testing.assert_allclose(sub["p_fdr"].to_numpy(), expected)
            _, expected = bonferroni(sub["p_raw"].to_numpy())
            np.testing.assert_allclose(sub["p_bonferroni"].to_numpy(), expected)

    def test_bonferroni_method(self, rng):
        meta = self._meta()
        shifted = np.r_[np.zeros(5), np.ones(5), np.full(5, 2.0)] + rng.normal(0, 0.1, 15)
        frame = family_analysis("static", {"mean": shifted}, meta, method="bonferroni")
        assert (frame["rejected"] == (frame["p_bonferroni"] < 0.05)).all()
        assert frame["rejected"].all()

    def test_gated_rows_omitted(self):
        meta = self._meta()
        frame = family_analysis("x", {"flat": np.tile([1.0, 2.0, 3.0, 4.0, 5.0], 3)}, meta)
        assert list(frame["test"]) == ["anova"]

    def test_nan_subjects_dropped(self, rng):
        meta = self._meta()
        y = rng.normal(0, 1, 15)
        y[0] = np.nan
        frame = family_analysis("x", {"t": y}, meta, gate=False)
        anova = frame[frame["test"] == "anova"].iloc[0]
        assert anova["dof2"] == 14 - 3

    def test_single_usable_group_skipped(self):
        meta = self._meta()
        y = np.r_[np.ones(5), np.full(10, np.nan)]
        frame = family_analysis("x", {"t": y}, meta)
        assert frame.empty

    def test_unknown_method(self):
        with pytest.raises(InvalidParameterError):
            family_analysis("x", {}, self._meta(), method="holm")


class TestTables:
    def test_static_outcomes(self):
        curves = [
            DensityCurve([0.04, 0.05, 0.06], [0.5, 0.4, 0.3]),
            DensityCurve([0.04, 0.05, 0.06], [0.6, 0.5, 0.4]),
        ]
        out = static_outcomes(curves, [0.04, 0.06])
        assert list(out) == ["density=0.04", "density=0.05", "density=0.06", "mean"]
        np.testing.assert_allclose(out["mean"], [0.4, 0.5])

    def test_quantiles(self):
        meta = make_cohort([C] * 5 + [S] * 3)
        y = np.r_[[1.0, 2.0, 3.0, 4.0, 5.0], [10.0, 20.0, np.nan]]
        table = quantile_table("recruitment", {"system:A": y}, meta)
        assert list(table.columns) == QUANTILE_COLUMNS
        control = table[table["group"] == "control"].iloc[0]
        assert (control["min"], control["median"], control["max"]) == (1.0, 3.0, 5.0)
        severe = table[table["group"] == "severe"].iloc[0]
        assert severe["n"] == 2
        assert set(table["group"]) == {"control", "severe"}
