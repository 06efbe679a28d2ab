import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy import stats as sps

from latentfit.data import (DataError, Dataset, average_ranks, correlation, covariance, impute,
                            load_csv, parse_csv, quantile7, read_matrix_csv, summarize,
                            write_matrix_csv)

SMALL = "Q1,Q2,Q3\n1,2,3\n4,NA,6\n7,8,9\n2,5,1\n3,3,3\n"


class TestParse:
    def test_missing_tokens(self):
        d = parse_csv(SMALL)
        assert d.names == ("Q1", "Q2", "Q3")
        assert d.n == 5 and d.p == 3
        assert d.missing_mask[1, 1]
        assert d.has_missing

    def test_non_numeric_reports_row_and_column(self):
        with pytest.raises(DataError, match=r"row 3, column 'Q2'"):
            parse_csv("Q1,Q2\n1,2\n3,x\n")

    def test_ragged_row(self):
        with pytest.raises(DataError, match="row 2: expected 2 fields"):
            parse_csv("Q1,Q2\n1,2,3\n4,5\n")

    def test_empty(self):
        with pytest.raises(DataError, match="empty"):
            parse_csv("")

    def test_scale_bounds(self):
        with pytest.raises(DataError, match="outside scale"):
            parse_csv("Q1,Q2\n1,2\n8,3\n", scale_bounds=(1, 7))
        d = parse_csv("Q1,Q2\n1,2\n7,3\n", scale_bounds=(1, 7))
        assert d.declared_scale == (1, 7)

    def test_no_header(self):
        d = parse_csv("1,2\n3,4\n", has_header=False)
        assert d.names == ("V1", "V2")

    def test_load_csv(self, tmp_path):
        f = tmp_path / "x.csv"
        f.write_text(SMALL)
        assert load_csv(f).n == 5


class TestSummary:
    def test_matches_numpy_quantiles(self):
        rng = np.random.default_rng(0)
        x = rng.integers(1, 8, size=(50, 3)).astype(float)
        d = Dataset.from_array(x)
        for s, col in zip(summarize(d), x.T):
            assert s.q1 == pytest.approx(np.percentile(col, 25))
            assert s.median == pytest.approx(np.median(col))
            assert s.q3 == pytest.approx(np.percentile(col, 75))
            assert s.missing_count == 0

    def test_missing_counted(self):
        s = summarize(parse_csv(SMALL))
        assert [v.missing_count for v in s] == [0, 1, 0]
        assert s[1].mean == pytest.approx(np.mean([2, 8, 5, 3]))

    @settings(max_examples=50, deadline=None)
    @given(st.lists(st.floats(-1e3, 1e3, allow_nan=False), min_size=1, max_size=30),
           st.floats(0, 1))
    def test_quantile7_property(self, xs, q):
        assert quantile7(xs, q) == pytest.approx(np.quantile(xs, q), abs=1e-9)


class TestImpute:
    def test_mean_and_median(self):
        d = parse_csv(SMALL)
        assert impute(d, "mean").rows[1, 1] == pytest.approx(4.5)
        assert impute(d, "median").rows[1, 1] == pytest.approx(4.0)
        assert not impute(d, "mean").has_missing

    def test_listwise(self):
        d = impute(parse_csv(SMALL), "listwise")
        assert d.n == 4 and not d.has_missing

    def test_ceiling(self):
        d = parse_csv("A,B\n1,NA\n2,3\n3,NA\n4,5\n5,6\n")
        with pytest.raises(DataError, match="40.0% missing"):
            impute(d, "mean")

    def test_exactly_twenty_percent_allowed(self):
        d = parse_csv("A,B\n1,NA\n2,3\n3,4\n4,5\n5,6\n")
        assert impute(d, "median").rows[0, 1] == pytest.approx(4.5)


class TestCorrelation:
    def test_spearman_matches_scipy(self):
        rng = np.random.default_rng(5)
        x = rng.integers(1, 8, size=(60, 4)).astype(float)
        r = correlation(Dataset.from_array(x), "spearman")
        np.testing.assert_allclose(r, sps.spearmanr(x).statistic, atol=1e-12)

    def test_pearson_matches_numpy(self):
        x = np.random.default_rng(6).normal(size=(40, 5))
        np.testing.assert_allclose(correlation(Dataset.from_array(x)), np.corrcoef(x, rowvar=False), atol=1e-12)

    def test_covariance_matches_numpy(self):
        x = np.random.default_rng(7).normal(size=(40, 5))
        np.testing.assert_allclose(covariance(Dataset.from_array(x)), np.cov(x, rowvar=False), atol=1e-12)

    def test_constant_column(self):
        x = np.column_stack([np.ones(5), np.arange(5.0)])
        with pytest.raises(DataError, match="constant"):
            correlation(Dataset.from_array(x))

    def test_missing_refused(self):
        with pytest.raises(DataError, match="complete data"):
            correlation(parse_csv(SMALL))

    @settings(max_examples=50, deadline=None)
    @given(st.lists(st.integers(1, 7), min_size=2, max_size=40))
    def test_ranks_match_scipy(self, xs):
        np.testing.assert_allclose(average_ranks(np.array(xs)), sps.rankdata(xs))


def test_matrix_round_trip(tmp_path, spearman21):
    names, r = spearman21
    f = tmp_path / "r.csv"
    write_matrix_csv(f, names, r, fmt="{:.17g}")
    names2, r2 = read_matrix_csv(f)
    assert names2 == names
    np.testing.assert_array_equal(r2, r)


def test_matrix_label_mismatch(tmp_path):
    f = tmp_path / "r.csv"
    f.write_text(",A,B\nA,1,0\nC,0,1\n")
    with pytest.raises(DataError, match="does not match"):
        read_matrix_csv(f)
