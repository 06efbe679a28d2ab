import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from latentfit.data import Dataset
from latentfit.efa import assign_factors, extract_pc, rotate_varimax
from latentfit.reliability import (alpha_label, cr_ave, cronbach_alpha, discriminant,
                                   discriminant_from_correlations, drop_one_screen,
                                   factor_score_correlations)

# factor-correlation block printed alongside the discriminant analysis
REFERENCE_BLOCK = np.array([
    [1.0, 0.38879189, 0.66329573, 0.59926812],
    [0.38879189, 1.0, 0.29289469, 0.32172374],
    [0.66329573, 0.29289469, 1.0, 0.52559418],
    [0.59926812, 0.32172374, 0.52559418, 1.0],
])


def _alpha_oracle(x):
    c = np.cov(x, rowvar=False)
    k = c.shape[0]
    return k / (k - 1) * (1 - np.trace(c) / c.sum())


def _likert(seed, n=120, m=4):
    rng = np.random.default_rng(seed)
    f = rng.normal(size=(n, 1))
    return np.clip(np.round(4 + 1.2 * f + rng.normal(size=(n, m))), 1, 7)


class TestAlpha:
    def test_against_covariance_formula(self):
        x = _likert(0)
        rep = cronbach_alpha(Dataset.from_array(x))
        assert rep.raw_alpha == pytest.approx(_alpha_oracle(x), rel=1e-12)
        for j, it in enumerate(rep.items):
            assert it.alpha_if_dropped == pytest.approx(_alpha_oracle(np.delete(x, j, axis=1)), rel=1e-12)
            assert it.r_drop == pytest.approx(np.corrcoef(x[:, j], x.sum(1) - x[:, j])[0, 1], rel=1e-12)

    def test_standardised_alpha(self):
        x = _likert(1)
        r = np.corrcoef(x, rowvar=False)
        m = r.shape[0]
        rbar = (r.sum() - m) / (m * (m - 1))
        rep = cronbach_alpha(Dataset.from_array(x))
        assert rep.std_alpha == pytest.approx(m * rbar / (1 + (m - 1) * rbar), rel=1e-12)

    def test_two_items(self):
        rep = cronbach_alpha(Dataset.from_array(_likert(2, m=2)))
        assert all(it.alpha_if_dropped is None for it in rep.items)
        with pytest.raises(ValueError):
            drop_one_screen(rep)

    def test_drop_one_flags_noise_item(self):
        x = _likert(3, n=300, m=4)
        x[:, 3] = np.random.default_rng(9).integers(1, 8, size=300)
        rep = cronbach_alpha(Dataset.from_array(x))
        assert drop_one_screen(rep) == ["V4"]

    def test_zero_variance_item(self):
        x = _likert(4)
        x[:, 0] = 3.0
        with pytest.raises(ValueError, match="zero variance"):
            cronbach_alpha(Dataset.from_array(x))

    @pytest.mark.parametrize("v,label", [(0.94, "excellent"), (0.9, "excellent"), (0.88, "good"),
                                         (0.7, "acceptable"), (0.65, "questionable"),
                                         (0.55, "poor"), (0.3, "unacceptable")])
    def test_bands(self, v, label):
        assert alpha_label(v) == label

    @settings(max_examples=30, deadline=None)
    @given(st.integers(0, 10_000))
    def test_alpha_at_most_one(self, seed):
        assert cronbach_alpha(Dataset.from_array(_likert(seed))).raw_alpha <= 1.0 + 1e-12


class TestConstructValidity:
    def test_fixture(self, spearman21):
        names, r = spearman21
        lm = rotate_varimax(extract_pc(r, 4, names))
        cv = cr_ave(lm, assign_factors(lm))
        np.testing.assert_allclose(cv.cr, [0.9218, 0.8874, 0.8726, 0.8293], atol=0.01)
        np.testing.assert_allclose(cv.ave, [0.5688, 0.6122, 0.6319, 0.6187], atol=0.01)
        assert cv.convergent_ok.all()

    def test_formula(self):
        lam = np.array([[0.8], [0.7], [0.6]])
        lm = extract_pc(np.eye(3), 1)
        lm = type(lm)(loadings=lam, names=("a", "b", "c"), rmsr=0.0)
        cv = cr_ave(lm, assign_factors(lm))
        e = np.sum(1 - lam ** 2)
        assert cv.cr[0] == pytest.approx(2.1 ** 2 / (2.1 ** 2 + e))
        assert cv.ave[0] == pytest.approx(1.49 / 3)


class TestDiscriminant:
    def test_reference_block(self, spearman21):
        names, r = spearman21
        lm = rotate_varimax(extract_pc(r, 4, names))
        cv = cr_ave(lm, assign_factors(lm))
        dm = discriminant_from_correlations(REFERENCE_BLOCK, cv.ave)
        np.testing.assert_allclose(np.diag(dm.matrix), np.sqrt(cv.ave), atol=1e-12)
        assert dm.verdicts.all()
        np.testing.assert_array_equal(dm.matrix, dm.matrix.T)

    def test_fails_when_correlation_exceeds_root_ave(self):
        c = np.array([[1.0, 0.9], [0.9, 1.0]])
        assert not discriminant_from_correlations(c, [0.5, 0.6]).verdicts.any()

    def test_score_correlations(self, spearman21):
        names, r = spearman21
        lm = rotate_varimax(extract_pc(r, 4, names))
        c = factor_score_correlations(r, lm.loadings)
        # component scores of orthogonal components are uncorrelated
        np.testing.assert_allclose(c, np.eye(4), atol=1e-8)
        dm = discriminant(r, lm, cr_ave(lm, assign_factors(lm)))
        assert dm.verdicts.all()
